//! Monte-Carlo studies: strong-convergence rates against a shared-path fine
//! reference, the exponential-moment diagnostic, and the untamed baseline.
//!
//! Paths are independent work items executed on the rayon pool. Per-path
//! results are collected in path order and reduced by pairwise summation, so
//! every report is bit-identical across runs and thread counts.

use rayon::prelude::*;

use crate::brownian::{BrownianLattice, PathKey};
use crate::error::{Error, Result};
use crate::integrators::simulate_path;
use crate::models::{LyapunovPair, ModelSpec};
use crate::params::{Scheme, SchemeParams};

/// Exponent cap for the exponential-moment estimator; contributions beyond
/// it are clipped and counted, never dropped.
const EXP_CLIP: f64 = 700.0;

/// Deterministic pairwise sum over an ordered slice.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        2 => values[0] + values[1],
        n => {
            let (a, b) = values.split_at(n / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}

/// Least-squares fit of log2(error) against -level, so a positive slope r
/// means error ~ h^r on the dyadic mesh.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    /// residual sum of squares of the fit
    pub residual: f64,
}

pub fn fit_rate(levels: &[u32], errors: &[f64]) -> Result<RateFit> {
    if levels.len() != errors.len() {
        return Err(Error::Config("fit_rate: levels and errors must align".into()));
    }
    if levels.len() < 2 {
        return Err(Error::Config("fit_rate needs at least two levels".into()));
    }
    for (lvl, e) in levels.iter().zip(errors) {
        if !(e.is_finite() && *e > 0.0) {
            return Err(Error::Domain(format!(
                "fit_rate: error at level {lvl} is {e}, log fit is degenerate"
            )));
        }
    }
    let n = levels.len() as f64;
    let xs: Vec<f64> = levels.iter().map(|l| -(*l as f64)).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.log2()).collect();
    let mx = pairwise_sum(&xs) / n;
    let my = pairwise_sum(&ys) / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    if sxx == 0.0 {
        return Err(Error::Config("fit_rate: all levels identical".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum();
    Ok(RateFit { slope, intercept, residual })
}

/// Configuration of a strong-convergence study.
#[derive(Debug, Clone)]
pub struct ConvergenceConfig {
    pub scheme: Scheme,
    pub levels: Vec<u32>,
    pub ref_level: u32,
    pub paths: u64,
    pub seed: u64,
    pub t_final: f64,
    pub params: SchemeParams,
}

/// Per-level strong errors in the grid-sup and terminal functionals, with
/// fitted dyadic rates.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub scheme: Scheme,
    pub model: String,
    pub levels: Vec<u32>,
    pub errors_sup: Vec<f64>,
    pub errors_terminal: Vec<f64>,
    pub fitted_slope_sup: f64,
    pub fitted_slope_terminal: f64,
    pub paths: u64,
    pub ref_level: u32,
    pub seed: u64,
    pub t_final: f64,
    pub params: SchemeParams,
    /// Steps whose tamed increment exceeded h^(theta/delta); always 0.
    pub increment_violations: u64,
}

/// Shared-path strong-error study: one fine lattice per path drives both the
/// reference (same scheme at `ref_level`) and every coarse level through
/// exact coarsening. Per-path errors are the grid-sup and terminal distances
/// to the reference restricted to the coarse grid; they aggregate as
/// root-mean-squares over paths.
pub fn run_convergence(model: &ModelSpec, cfg: &ConvergenceConfig) -> Result<ConvergenceReport> {
    cfg.params.validate_for(cfg.scheme)?;
    model.supports(cfg.scheme)?;
    if cfg.levels.is_empty() {
        return Err(Error::Config("no levels requested".into()));
    }
    if cfg.paths == 0 {
        return Err(Error::Config("paths must be positive".into()));
    }
    let max_level = *cfg.levels.iter().max().unwrap();
    if cfg.ref_level < max_level {
        return Err(Error::Config(format!(
            "ref_level {} must not be below the finest requested level {max_level}",
            cfg.ref_level
        )));
    }
    if !(cfg.t_final.is_finite() && cfg.t_final > 0.0) {
        return Err(Error::Config(format!("t_final must be positive, got {}", cfg.t_final)));
    }
    let with_dz = cfg.scheme.needs_dz();
    let nl = cfg.levels.len();

    struct PerPath {
        sup: Vec<f64>,
        term: Vec<f64>,
        violations: u64,
    }

    let per_path: Vec<PerPath> = (0..cfg.paths)
        .into_par_iter()
        .map(|path| -> Result<PerPath> {
            let key = PathKey { seed: cfg.seed, path };
            let fine =
                BrownianLattice::sample(model.m, cfg.ref_level, cfg.t_final, with_dz, key);
            let reference = simulate_path(model, cfg.scheme, &fine, &cfg.params)
                .map_err(|e| annotate(e, cfg.ref_level, path))?;
            let bound_ref = cfg.params.increment_bound(fine.h());
            let mut violations = (reference.max_increment > bound_ref) as u64;
            let mut sup = vec![0.0; nl];
            let mut term = vec![0.0; nl];
            for (li, &level) in cfg.levels.iter().enumerate() {
                let coarse_lat = fine.coarsen(level)?;
                let coarse = simulate_path(model, cfg.scheme, &coarse_lat, &cfg.params)
                    .map_err(|e| annotate(e, level, path))?;
                violations +=
                    (coarse.max_increment > cfg.params.increment_bound(coarse_lat.h())) as u64;
                let stride = 1usize << (cfg.ref_level - level);
                let n_coarse = coarse.len() - 1;
                let mut worst = 0.0f64;
                for k in 0..=n_coarse {
                    let a = reference.state(k * stride);
                    let b = coarse.state(k);
                    let dist = a
                        .iter()
                        .zip(b)
                        .map(|(u, v)| (u - v) * (u - v))
                        .sum::<f64>()
                        .sqrt();
                    if dist > worst {
                        worst = dist;
                    }
                    if k == n_coarse {
                        term[li] = dist;
                    }
                }
                sup[li] = worst;
            }
            Ok(PerPath { sup, term, violations })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut errors_sup = Vec::with_capacity(nl);
    let mut errors_terminal = Vec::with_capacity(nl);
    for li in 0..nl {
        let sq_sup: Vec<f64> = per_path.iter().map(|p| p.sup[li] * p.sup[li]).collect();
        let sq_term: Vec<f64> = per_path.iter().map(|p| p.term[li] * p.term[li]).collect();
        errors_sup.push((pairwise_sum(&sq_sup) / cfg.paths as f64).sqrt());
        errors_terminal.push((pairwise_sum(&sq_term) / cfg.paths as f64).sqrt());
    }
    let increment_violations = per_path.iter().map(|p| p.violations).sum();

    // Degenerate (exactly zero) errors happen when a requested level equals
    // the reference; the fit is then undefined and reported as NaN.
    let fitted_slope_sup = fit_rate(&cfg.levels, &errors_sup).map(|f| f.slope).unwrap_or(f64::NAN);
    let fitted_slope_terminal =
        fit_rate(&cfg.levels, &errors_terminal).map(|f| f.slope).unwrap_or(f64::NAN);

    Ok(ConvergenceReport {
        scheme: cfg.scheme,
        model: model.name.clone(),
        levels: cfg.levels.clone(),
        errors_sup,
        errors_terminal,
        fitted_slope_sup,
        fitted_slope_terminal,
        paths: cfg.paths,
        ref_level: cfg.ref_level,
        seed: cfg.seed,
        t_final: cfg.t_final,
        params: cfg.params,
        increment_violations,
    })
}

fn annotate(e: Error, level: u32, path: u64) -> Error {
    match e {
        Error::Step { step, state } => Error::Config(format!(
            "step failure: level {level} path {path} step {step}, state {state:?}"
        )),
        other => other,
    }
}

/// Configuration of the exponential-moment diagnostic.
#[derive(Debug, Clone)]
pub struct ExpMomentConfig {
    pub scheme: Scheme,
    pub levels: Vec<u32>,
    pub paths: u64,
    pub seed: u64,
    pub t_final: f64,
    pub params: SchemeParams,
}

/// Per-level estimates of
/// `E[exp(e^(-alpha T) U0(Y_T) + int_0^(T ^ tau) e^(-alpha r) U1(Y_r) dr)]`,
/// the time integral taken by the trapezoid rule on grid values and truncated
/// at the stopping index.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpMomentReport {
    pub model: String,
    pub scheme: Scheme,
    pub alpha: f64,
    pub levels: Vec<u32>,
    pub estimates: Vec<f64>,
    /// largest U0 value seen on any grid point, per level
    pub max_u0: Vec<f64>,
    /// largest exponent fed to exp(), per level (estimator tail diagnostic)
    pub max_exponent: Vec<f64>,
    /// paths whose exponent was clipped at the overflow cap, per level
    pub clipped: Vec<u64>,
    pub paths: u64,
    pub seed: u64,
}

pub fn run_exp_moment(
    model: &ModelSpec,
    pair: &LyapunovPair,
    cfg: &ExpMomentConfig,
) -> Result<ExpMomentReport> {
    cfg.params.validate_for(cfg.scheme)?;
    model.supports(cfg.scheme)?;
    if cfg.paths == 0 {
        return Err(Error::Config("paths must be positive".into()));
    }
    let mut estimates = Vec::new();
    let mut max_u0 = Vec::new();
    let mut max_exponent = Vec::new();
    let mut clipped = Vec::new();

    for &level in &cfg.levels {
        struct PerPath {
            value: f64,
            exponent: f64,
            u0_max: f64,
            clipped: bool,
        }
        let per: Vec<PerPath> = (0..cfg.paths)
            .into_par_iter()
            .map(|path| -> Result<PerPath> {
                let key = PathKey { seed: cfg.seed, path };
                let lat = BrownianLattice::sample(
                    model.m,
                    level,
                    cfg.t_final,
                    cfg.scheme.needs_dz(),
                    key,
                );
                let h = lat.h();
                let res = simulate_path(model, cfg.scheme, &lat, &cfg.params)
                    .map_err(|e| annotate(e, level, path))?;
                let n = res.len() - 1;
                let stop = res.tau_index.unwrap_or(n).min(n);
                // trapezoid of e^(-alpha t) U1 over [0, t_stop]
                let mut integral = 0.0;
                let mut u0_max = f64::NEG_INFINITY;
                for k in 0..=n {
                    let t = k as f64 * h;
                    let u0v = (pair.u0)(res.state(k));
                    if u0v > u0_max {
                        u0_max = u0v;
                    }
                    if k <= stop {
                        let w = if k == 0 || k == stop { 0.5 } else { 1.0 };
                        if stop > 0 {
                            integral += w * h * (-pair.alpha * t).exp() * (pair.u1)(res.state(k));
                        }
                    }
                }
                let exponent =
                    (-pair.alpha * cfg.t_final).exp() * (pair.u0)(res.terminal()) + integral;
                let was_clipped = exponent > EXP_CLIP;
                let value = exponent.min(EXP_CLIP).exp();
                Ok(PerPath { value, exponent, u0_max, clipped: was_clipped })
            })
            .collect::<Result<Vec<_>>>()?;

        let values: Vec<f64> = per.iter().map(|p| p.value).collect();
        estimates.push(pairwise_sum(&values) / cfg.paths as f64);
        max_u0.push(per.iter().map(|p| p.u0_max).fold(f64::NEG_INFINITY, f64::max));
        max_exponent.push(per.iter().map(|p| p.exponent).fold(f64::NEG_INFINITY, f64::max));
        clipped.push(per.iter().filter(|p| p.clipped).count() as u64);
    }
    Ok(ExpMomentReport {
        model: model.name.clone(),
        scheme: cfg.scheme,
        alpha: pair.alpha,
        levels: cfg.levels.clone(),
        estimates,
        max_u0,
        max_exponent,
        clipped,
        paths: cfg.paths,
        seed: cfg.seed,
    })
}

/// Side-by-side moment table: the classical (untamed, unstopped) explicit
/// iteration versus the tamed scheme on identical lattices.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineReport {
    pub model: String,
    pub levels: Vec<u32>,
    /// E|Y_T|^2 of classical explicit Euler over the paths that stayed finite
    /// (NaN when every path overflowed)
    pub em_mean_sq: Vec<f64>,
    pub em_overflow: Vec<u64>,
    /// overflow count of the tamed Euler scheme on the same lattices
    pub tamed_overflow: Vec<u64>,
    pub paths: u64,
    pub seed: u64,
}

pub fn run_baseline_euler(
    model: &ModelSpec,
    levels: &[u32],
    paths: u64,
    seed: u64,
    t_final: f64,
    params: &SchemeParams,
) -> Result<BaselineReport> {
    if paths == 0 {
        return Err(Error::Config("paths must be positive".into()));
    }
    params.validate_for(Scheme::Euler)?;
    let mut em_mean_sq = Vec::new();
    let mut em_overflow = Vec::new();
    let mut tamed_overflow = Vec::new();

    for &level in levels {
        struct PerPath {
            sq: Option<f64>,
            tamed_bad: bool,
        }
        let per: Vec<PerPath> = (0..paths)
            .into_par_iter()
            .map(|path| -> Result<PerPath> {
                let key = PathKey { seed, path };
                let lat = BrownianLattice::sample(model.m, level, t_final, false, key);
                let h = lat.h();
                let d = model.d;
                let mut y = model.x0.clone();
                let mut fbuf = vec![0.0; d];
                let mut gbuf = vec![0.0; d * model.m];
                let mut bad = false;
                for k in 0..lat.steps() {
                    model.f(&y, &mut fbuf);
                    model.g(&y, &mut gbuf);
                    let dw = lat.dw_at(k);
                    for i in 0..d {
                        let mut acc = y[i] + fbuf[i] * h;
                        for j in 0..model.m {
                            acc += gbuf[i + j * d] * dw[j];
                        }
                        y[i] = acc;
                    }
                    if y.iter().any(|v| !v.is_finite()) {
                        bad = true;
                        break;
                    }
                }
                let sq = if bad { None } else { Some(y.iter().map(|v| v * v).sum()) };

                let tamed = simulate_path(model, Scheme::Euler, &lat, params)?;
                let tamed_bad = tamed.terminal().iter().any(|v| !v.is_finite());
                Ok(PerPath { sq, tamed_bad })
            })
            .collect::<Result<Vec<_>>>()?;

        let finite: Vec<f64> = per.iter().filter_map(|p| p.sq).collect();
        let overflowed = (paths as usize - finite.len()) as u64;
        em_mean_sq.push(if finite.is_empty() {
            f64::NAN
        } else {
            pairwise_sum(&finite) / finite.len() as f64
        });
        em_overflow.push(overflowed);
        tamed_overflow.push(per.iter().filter(|p| p.tamed_bad).count() as u64);
    }
    Ok(BaselineReport {
        model: model.name.clone(),
        levels: levels.to_vec(),
        em_mean_sq,
        em_overflow,
        tamed_overflow,
        paths,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{build_model, langevin_default_pair, linear, ModelBuilder, ModelParams, NoiseStructure};
    use approx::assert_relative_eq;
    use std::sync::Arc;

    #[test]
    fn fit_rate_trivial_cases() {
        let f = fit_rate(&[1, 2, 3], &[1.0, 0.5, 0.25]).unwrap();
        assert_relative_eq!(f.slope, 1.0, max_relative = 1e-12);
        assert!(f.residual < 1e-24);

        let f = fit_rate(&[1, 2, 3], &[1.0, 1.0, 1.0]).unwrap();
        assert_relative_eq!(f.slope, 0.0, epsilon = 1e-12);

        let errs: Vec<f64> = [1u32, 2, 3, 4].iter().map(|l| 2f64.powf(-1.5 * *l as f64)).collect();
        let f = fit_rate(&[1, 2, 3, 4], &errs).unwrap();
        assert_relative_eq!(f.slope, 1.5, max_relative = 1e-12);
    }

    #[test]
    fn fit_rate_degenerate_inputs() {
        assert!(fit_rate(&[1], &[0.5]).is_err());
        assert!(fit_rate(&[1, 2], &[0.5, 0.0]).is_err());
        assert!(fit_rate(&[1, 2], &[0.5, -1.0]).is_err());
        assert!(fit_rate(&[1, 2], &[0.5]).is_err());
    }

    fn small_cfg(scheme: Scheme) -> ConvergenceConfig {
        ConvergenceConfig {
            scheme,
            levels: vec![3, 4, 5],
            ref_level: 8,
            paths: 64,
            seed: 99,
            t_final: 1.0,
            params: SchemeParams::default(),
        }
    }

    #[test]
    fn pure_noise_model_is_exact_at_small_amplitude() {
        // f == 0 and tiny constant g: the increment argument is linear in dW
        // and far below taming saturation, so every level reproduces the
        // reference up to the taming perturbation only.
        let model = ModelBuilder::new(
            "pure-noise",
            1,
            1,
            vec![0.0],
            NoiseStructure::Additive,
            Arc::new(|_: &[f64], out: &mut [f64]| out[0] = 0.0),
            Arc::new(|_: &[f64], out: &mut [f64]| out[0] = 1e-3),
        )
        .zero_diffusion_derivatives()
        .build();
        let mut cfg = small_cfg(Scheme::Euler);
        cfg.levels = vec![4, 5, 6];
        let report = run_convergence(&model, &cfg).unwrap();
        for e in &report.errors_sup {
            assert!(*e < 1e-10, "taming perturbation should be negligible, got {e}");
        }
    }

    #[test]
    fn level_equal_to_reference_has_zero_error() {
        let model = build_model("exp-psych", &ModelParams::default()).unwrap();
        let mut cfg = small_cfg(Scheme::Milstein);
        cfg.levels = vec![8];
        cfg.ref_level = 8;
        cfg.paths = 8;
        let report = run_convergence(&model, &cfg).unwrap();
        assert_eq!(report.errors_sup[0], 0.0);
        assert_eq!(report.errors_terminal[0], 0.0);
        assert!(report.fitted_slope_sup.is_nan());
    }

    #[test]
    fn errors_shrink_with_level_and_terminal_below_sup() {
        let model = build_model("exp-psych", &ModelParams::default()).unwrap();
        let report = run_convergence(&model, &small_cfg(Scheme::Milstein)).unwrap();
        for w in report.errors_sup.windows(2) {
            assert!(w[1] <= w[0], "sup errors must be nonincreasing: {:?}", report.errors_sup);
        }
        for (t, s) in report.errors_terminal.iter().zip(&report.errors_sup) {
            assert!(t <= s);
        }
        assert_eq!(report.increment_violations, 0);
    }

    #[test]
    fn reports_identical_across_thread_counts() {
        let model = build_model("exp-psych", &ModelParams::default()).unwrap();
        let cfg = small_cfg(Scheme::Milstein);
        let pool1 = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let pool4 = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let r1 = pool1.install(|| run_convergence(&model, &cfg)).unwrap();
        let r4 = pool4.install(|| run_convergence(&model, &cfg)).unwrap();
        assert_eq!(r1, r4);
        let r1b = pool1.install(|| run_convergence(&model, &cfg)).unwrap();
        assert_eq!(r1, r1b);
    }

    #[test]
    fn config_validation() {
        let model = build_model("exp-psych", &ModelParams::default()).unwrap();
        let mut cfg = small_cfg(Scheme::Euler);
        cfg.paths = 0;
        assert!(run_convergence(&model, &cfg).is_err());
        let mut cfg = small_cfg(Scheme::Euler);
        cfg.ref_level = 4;
        assert!(run_convergence(&model, &cfg).is_err());
        let mut cfg = small_cfg(Scheme::Milstein);
        cfg.params.delta = 3.0; // delta - 2 theta = 2.5 < 3
        assert!(run_convergence(&model, &cfg).is_err());
    }

    #[test]
    fn zero_pair_estimates_one() {
        let model = build_model("langevin", &ModelParams::default()).unwrap();
        let pair = crate::models::LyapunovPair::zero();
        let cfg = ExpMomentConfig {
            scheme: Scheme::Euler,
            levels: vec![3, 5],
            paths: 16,
            seed: 1,
            t_final: 1.0,
            params: SchemeParams::default(),
        };
        let report = run_exp_moment(&model, &pair, &cfg).unwrap();
        for e in &report.estimates {
            assert_eq!(*e, 1.0);
        }
        assert_eq!(report.clipped, vec![0, 0]);
    }

    #[test]
    fn estimate_is_monotone_in_alpha_for_zero_u1() {
        let model = build_model("langevin", &ModelParams::default()).unwrap();
        let cfg = ExpMomentConfig {
            scheme: Scheme::Euler,
            levels: vec![5],
            paths: 128,
            seed: 5,
            t_final: 1.0,
            params: SchemeParams::default(),
        };
        let mut prev = f64::INFINITY;
        for alpha in [0.0, 0.5, 1.0, 2.0, 8.0] {
            let mut pair = langevin_default_pair(1, 0.2);
            pair.alpha = alpha;
            let r = run_exp_moment(&model, &pair, &cfg).unwrap();
            assert!(r.estimates[0] <= prev + 1e-12);
            assert!(r.estimates[0] >= 1.0);
            prev = r.estimates[0];
        }
    }

    #[test]
    fn baseline_matches_ou_closed_form() {
        // f = -y, g = 0.1: E|Y_T|^2 = e^(-2T) x0^2 + (0.01/2)(1 - e^(-2T)).
        let model = linear(1.0, 0.1, 1.0).unwrap();
        let report = run_baseline_euler(
            &model,
            &[9],
            20_000,
            7,
            1.0,
            &SchemeParams::default(),
        )
        .unwrap();
        assert_eq!(report.em_overflow, vec![0]);
        assert_eq!(report.tamed_overflow, vec![0]);
        let exact = 0.1396586068204296;
        // MC standard error of |Y_T|^2 at 2e4 paths ~ 2.8e-3 on this scale,
        // plus an O(h) euler bias at level 9
        assert_relative_eq!(report.em_mean_sq[0], exact, max_relative = 0.05);
    }
}
