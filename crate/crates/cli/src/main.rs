//! `sitem` — stopped increment-tamed SDE schemes from the command line.
//!
//! Subcommands: `converge` (strong-convergence study against a fine
//! reference), `simulate` (dump one path as CSV), `expmoment` (exponential
//! moment diagnostic), `check` (derivative, drift-condition and taming-bound
//! verification). Configuration precedence: flags > `--config` JSON >
//! built-in defaults.

mod config;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::path::PathBuf;

use config::{parse_levels, FileConfig};
use sitem_core::models::default_pair_for;
use sitem_core::report;
use sitem_core::taming::{tame, tame_norm_bound};
use sitem_core::{
    build_model, check_lyapunov_condition, fd_check_derivatives, run_baseline_euler,
    run_convergence, run_exp_moment, simulate_path, BrownianLattice, ConvergenceConfig,
    ExpMomentConfig, ModelSpec, PathKey, PathResult, Scheme, SchemeParams,
};

#[derive(Parser)]
#[command(
    name = "sitem",
    about = "Stopped increment-tamed Euler / Milstein / order-1.5 schemes for SDEs",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// JSON config file (flat object; flags override its values)
    #[arg(long)]
    config: Option<PathBuf>,
    /// Model name (see `sitem check --list`)
    #[arg(long)]
    model: Option<String>,
    /// euler | milstein | order15 | baseline-em
    #[arg(long)]
    scheme: Option<String>,
    /// Final time T of the integration interval
    #[arg(long)]
    t_final: Option<f64>,
    /// Global seed driving the counter-based increment streams
    #[arg(long)]
    seed: Option<u64>,
    /// Taming exponent delta
    #[arg(long)]
    delta: Option<f64>,
    /// Step exponent theta
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    gamma1: Option<f64>,
    #[arg(long)]
    gamma2: Option<f64>,
    #[arg(long)]
    gamma3: Option<f64>,
    /// Cap on worker threads (default: machine parallelism)
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Monte-Carlo strong-convergence study against a shared-path reference
    Converge {
        #[command(flatten)]
        common: Common,
        /// Inclusive dyadic level range a:b
        #[arg(long)]
        levels: Option<String>,
        /// Reference resolution (steps = 2^ref_level)
        #[arg(long)]
        ref_level: Option<u32>,
        /// Monte-Carlo sample paths
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        paths: Option<u64>,
        /// Output CSV path
        #[arg(long)]
        out: Option<PathBuf>,
        /// Optional standalone SVG log-log plot
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Integrate one path and dump its grid states as CSV
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Dyadic resolution (steps = 2^level)
        #[arg(long)]
        level: Option<u32>,
        /// Which path of the seeded family to integrate
        #[arg(long)]
        path_index: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exponential-moment diagnostic with the model's built-in control pair
    Expmoment {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        levels: Option<String>,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        paths: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Verify derivative callbacks, the drift condition and the taming bounds
    Check {
        #[command(flatten)]
        common: Common,
        /// Sample states per check
        #[arg(long)]
        samples: Option<usize>,
        /// First-order finite-difference step
        #[arg(long)]
        eps: Option<f64>,
        /// Acceptance tolerance for derivative deviations
        #[arg(long)]
        tol: Option<f64>,
    },
}

/// Everything a run needs, after merging flags, config and defaults.
struct Resolved {
    file: FileConfig,
    model_name: String,
    scheme_name: String,
    t_final: f64,
    seed: u64,
    params: SchemeParams,
}

fn resolve(common: &Common, needs_scheme: bool) -> Result<Resolved> {
    let file = match &common.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    if let Some(n) = common.threads.or(file.threads) {
        if n == 0 {
            bail!("threads must be positive");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("thread pool already configured")?;
    }
    let model_name = common
        .model
        .clone()
        .or_else(|| file.model.clone())
        .ok_or_else(|| anyhow!("no model given (use --model or the config file)"))?;
    let scheme_name = match common.scheme.clone().or_else(|| file.scheme.clone()) {
        Some(s) => s,
        None if needs_scheme => bail!("no scheme given (euler | milstein | order15 | baseline-em)"),
        None => "euler".to_string(),
    };
    let d = SchemeParams::default();
    let params = SchemeParams::new(
        common.delta.or(file.delta).unwrap_or(d.delta),
        common.theta.or(file.theta).unwrap_or(d.theta),
        common.gamma1.or(file.gamma1).unwrap_or(d.gamma1),
        common.gamma2.or(file.gamma2).unwrap_or(d.gamma2),
        common.gamma3.or(file.gamma3).unwrap_or(d.gamma3),
    )?;
    let t_final = common.t_final.or(file.t_final).unwrap_or(1.0);
    if !(t_final.is_finite() && t_final > 0.0) {
        bail!("t_final must be positive, got {t_final}");
    }
    let seed = common.seed.or(file.seed).unwrap_or(42);
    Ok(Resolved { file, model_name, scheme_name, t_final, seed, params })
}

impl Resolved {
    fn model(&self) -> Result<ModelSpec> {
        Ok(build_model(&self.model_name, &self.file.model_params())?)
    }

    fn scheme(&self) -> Result<Scheme> {
        Scheme::parse(&self.scheme_name)
            .ok_or_else(|| anyhow!("unknown scheme '{}'", self.scheme_name))
    }

    fn is_baseline(&self) -> bool {
        self.scheme_name == "baseline-em"
    }
}

fn write_out(path: Option<PathBuf>, default_name: &str, content: &str) -> Result<PathBuf> {
    let path = path.unwrap_or_else(|| PathBuf::from(default_name));
    std::fs::write(&path, content)
        .with_context(|| format!("cannot write {}", path.display()))?;
    Ok(path)
}

fn cmd_converge(
    common: Common,
    levels: Option<String>,
    ref_level: Option<u32>,
    paths: Option<u64>,
    out: Option<PathBuf>,
    svg: Option<PathBuf>,
) -> Result<()> {
    let r = resolve(&common, true)?;
    let model = r.model()?;
    let levels = parse_levels(&levels.or_else(|| r.file.levels.clone()).unwrap_or("4:9".into()))?;
    let paths_n = paths.or(r.file.paths).unwrap_or(1000);
    if paths_n == 0 {
        bail!("paths must be positive");
    }

    if r.is_baseline() {
        let report =
            run_baseline_euler(&model, &levels, paths_n, r.seed, r.t_final, &r.params)?;
        let csv = report::baseline_csv(&report);
        let path = write_out(out.or(r.file.out.clone().map(PathBuf::from)), "baseline.csv", &csv)?;
        println!("wrote {}", path.display());
        return Ok(());
    }

    let scheme = r.scheme()?;
    let ref_level = ref_level.or(r.file.ref_level).unwrap_or(12);
    let cfg = ConvergenceConfig {
        scheme,
        levels,
        ref_level,
        paths: paths_n,
        seed: r.seed,
        t_final: r.t_final,
        params: r.params,
    };
    // fail fast before any compute
    r.params.validate_for(scheme)?;
    model.supports(scheme)?;
    let report = run_convergence(&model, &cfg)?;
    let csv = report::convergence_csv(&report);
    let path = write_out(out.or(r.file.out.clone().map(PathBuf::from)), "converge.csv", &csv)?;
    println!(
        "wrote {} (slope_sup={:.4}, slope_T={:.4})",
        path.display(),
        report.fitted_slope_sup,
        report.fitted_slope_terminal
    );
    if let Some(svg_path) = svg.or(r.file.svg.clone().map(PathBuf::from)) {
        let svg_text = report::convergence_svg(&report);
        std::fs::write(&svg_path, svg_text)
            .with_context(|| format!("cannot write {}", svg_path.display()))?;
        println!("wrote {}", svg_path.display());
    }
    Ok(())
}

/// Classical explicit iteration without taming or stopping, for side-by-side
/// path dumps.
fn plain_em_path(model: &ModelSpec, lat: &BrownianLattice) -> PathResult {
    let (d, m) = (model.d, model.m);
    let h = lat.h();
    let mut states = vec![0.0; (lat.steps() + 1) * d];
    states[..d].copy_from_slice(&model.x0);
    let mut f = vec![0.0; d];
    let mut g = vec![0.0; d * m];
    for k in 0..lat.steps() {
        let (head, tail) = states.split_at_mut((k + 1) * d);
        let y = &head[k * d..];
        model.f(y, &mut f);
        model.g(y, &mut g);
        let dw = lat.dw_at(k);
        for i in 0..d {
            let mut acc = y[i] + f[i] * h;
            for j in 0..m {
                acc += g[i + j * d] * dw[j];
            }
            tail[i] = acc;
        }
    }
    PathResult::from_states(d, states)
}

fn cmd_simulate(
    common: Common,
    level: Option<u32>,
    path_index: Option<u64>,
    out: Option<PathBuf>,
) -> Result<()> {
    let r = resolve(&common, true)?;
    let model = r.model()?;
    let level = level.or(r.file.level).unwrap_or(8);
    if level > 30 {
        bail!("level {level} too fine (max 30)");
    }
    let path_index = path_index.or(r.file.path_index).unwrap_or(0);
    let with_dz = !r.is_baseline() && r.scheme()? == Scheme::Order15;
    let lat = BrownianLattice::sample(
        model.m,
        level,
        r.t_final,
        with_dz,
        PathKey { seed: r.seed, path: path_index },
    );
    let result = if r.is_baseline() {
        plain_em_path(&model, &lat)
    } else {
        let scheme = r.scheme()?;
        r.params.validate_for(scheme)?;
        model.supports(scheme)?;
        simulate_path(&model, scheme, &lat, &r.params)?
    };
    let csv = report::path_csv(&model.name, &r.scheme_name, &result, r.t_final, r.seed);
    let path = write_out(out.or(r.file.out.clone().map(PathBuf::from)), "path.csv", &csv)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_expmoment(
    common: Common,
    levels: Option<String>,
    paths: Option<u64>,
    out: Option<PathBuf>,
) -> Result<()> {
    let r = resolve(&common, false)?;
    if r.is_baseline() {
        bail!("expmoment needs a tamed scheme (euler | milstein | order15)");
    }
    let model = r.model()?;
    let pair = default_pair_for(&r.model_name, &r.file.model_params()).ok_or_else(|| {
        anyhow!(
            "no built-in control pair for model '{}'; only 'langevin' ships one",
            r.model_name
        )
    })?;
    let levels = parse_levels(&levels.or_else(|| r.file.levels.clone()).unwrap_or("5:10".into()))?;
    let cfg = ExpMomentConfig {
        scheme: r.scheme()?,
        levels,
        paths: paths.or(r.file.paths).unwrap_or(2000),
        seed: r.seed,
        t_final: r.t_final,
        params: r.params,
    };
    let report = run_exp_moment(&model, &pair, &cfg)?;
    let csv = report::exp_moment_csv(&report);
    let path = write_out(out.or(r.file.out.clone().map(PathBuf::from)), "expmoment.csv", &csv)?;
    let clipped: u64 = report.clipped.iter().sum();
    println!("wrote {} (clipped paths: {clipped})", path.display());
    Ok(())
}

fn cmd_check(common: Common, samples: Option<usize>, eps: Option<f64>, tol: Option<f64>) -> Result<()> {
    let r = resolve(&common, false)?;
    let model = r.model()?;
    let samples = samples.or(r.file.samples).unwrap_or(100);
    let eps = eps.or(r.file.eps).unwrap_or(1e-6);
    let tol = tol.or(r.file.tol).unwrap_or(1e-5);
    let mut rng = ChaCha8Rng::seed_from_u64(r.seed);
    let positive = r.model_name == "lotka-volterra";
    let states: Vec<Vec<f64>> = (0..samples)
        .map(|_| {
            (0..model.d)
                .map(|_| if positive { rng.gen_range(0.2..2.0) } else { rng.gen_range(-2.0..2.0) })
                .collect()
        })
        .collect();
    let mut failed = false;

    let fd = fd_check_derivatives(&model, &states, eps, tol);
    for (name, err) in &fd.per_callback {
        let ok = *err <= tol;
        failed |= !ok;
        println!("check {name}: max rel err {err:.3e} (tol {tol:.1e}) {}", if ok { "ok" } else { "FAIL" });
    }
    if fd.per_callback.is_empty() {
        println!("check derivatives: no callbacks to verify");
    }

    match default_pair_for(&r.model_name, &r.file.model_params()) {
        Some(pair) => {
            let rep = check_lyapunov_condition(&model, &pair, &states, 1e-6);
            let ok = rep.holds(1e-8);
            failed |= !ok;
            println!(
                "check drift condition: max violation {:.3e} over {} states ({} non-finite) {}",
                rep.max_violation,
                rep.evaluated,
                rep.non_finite,
                if ok { "ok" } else { "FAIL" }
            );
        }
        None => println!("check drift condition: skipped (no built-in control pair)"),
    }

    let mut violations = 0usize;
    let sweep = 10_000;
    for _ in 0..sweep {
        let d = rng.gen_range(1..=4);
        let scale = 10f64.powf(rng.gen_range(-6.0..6.0));
        let x: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0) * scale).collect();
        let h = 2f64.powf(rng.gen_range(-16.0..0.0));
        let t = tame(&x, h, &r.params);
        let n = t.iter().map(|v| v * v).sum::<f64>().sqrt();
        if n > tame_norm_bound(h, &r.params) {
            violations += 1;
        }
    }
    let ok = violations == 0;
    failed |= !ok;
    println!(
        "check taming bound: {violations} violations in {sweep} samples {}",
        if ok { "ok" } else { "FAIL" }
    );

    if failed {
        bail!("one or more checks failed");
    }
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Converge { common, levels, ref_level, paths, out, svg } => {
            cmd_converge(common, levels, ref_level, paths, out, svg)
        }
        Command::Simulate { common, level, path_index, out } => {
            cmd_simulate(common, level, path_index, out)
        }
        Command::Expmoment { common, levels, paths, out } => {
            cmd_expmoment(common, levels, paths, out)
        }
        Command::Check { common, samples, eps, tol } => cmd_check(common, samples, eps, tol),
    };
    if let Err(e) = outcome {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
