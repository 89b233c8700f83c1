//! Acceptance suite: one test per criterion, each printing a pass/fail line.
//!
//! Run with `cargo test -p sitem-core --test acceptance -- --nocapture` to
//! see every line. The convergence studies behind criteria 1-3 are computed
//! once and shared with the increment-bound criterion.

use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sitem_core::models::{build_model, langevin_default_pair, ModelParams};
use sitem_core::taming::{
    tame, tame_hessian_apply, tame_jacobian_apply, tame_norm_bound,
};
use sitem_core::{
    fd_check_derivatives, run_baseline_euler, run_convergence, run_exp_moment, simulate_path,
    BrownianLattice, ConvergenceConfig, ConvergenceReport, ExpMomentConfig, PathKey, Scheme,
    SchemeParams,
};

const SEED: u64 = 42;

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn study_config(scheme: Scheme) -> ConvergenceConfig {
    ConvergenceConfig {
        scheme,
        levels: (4..=9).collect(),
        ref_level: 12,
        paths: 1000,
        seed: SEED,
        t_final: 1.0,
        params: SchemeParams::default(),
    }
}

fn milstein_study() -> &'static ConvergenceReport {
    static R: OnceLock<ConvergenceReport> = OnceLock::new();
    R.get_or_init(|| {
        let model = build_model("exp-psych", &ModelParams::default()).unwrap();
        run_convergence(&model, &study_config(Scheme::Milstein)).unwrap()
    })
}

fn order15_study() -> &'static ConvergenceReport {
    static R: OnceLock<ConvergenceReport> = OnceLock::new();
    R.get_or_init(|| {
        let model = build_model("lorenz", &ModelParams::default()).unwrap();
        run_convergence(&model, &study_config(Scheme::Order15)).unwrap()
    })
}

fn euler_study() -> &'static ConvergenceReport {
    static R: OnceLock<ConvergenceReport> = OnceLock::new();
    R.get_or_init(|| {
        let model = build_model("exp-psych", &ModelParams::default()).unwrap();
        run_convergence(&model, &study_config(Scheme::Euler)).unwrap()
    })
}

fn report_line(name: &str, pass: bool, detail: &str) {
    println!("acceptance {name}: {} ({detail})", if pass { "PASS" } else { "FAIL" });
}

#[test]
fn c01_milstein_rate_on_scalar_multiplicative_noise() {
    let r = milstein_study();
    let slope = r.fitted_slope_sup;
    let pass = (0.85..=1.15).contains(&slope);
    report_line(
        "c01 milstein order-1 rate (exp-psych)",
        pass,
        &format!("slope_sup={slope:.3}, band [0.85, 1.15]"),
    );
    assert!(pass, "milstein sup-norm slope {slope} outside [0.85, 1.15]");
}

#[test]
fn c02_order15_rate_on_additive_noise() {
    let r = order15_study();
    let slope = r.fitted_slope_sup;
    let pass = (1.3..=1.7).contains(&slope);
    report_line(
        "c02 order-1.5 rate (lorenz)",
        pass,
        &format!("slope_sup={slope:.3}, band [1.3, 1.7]"),
    );
    assert!(pass, "order-1.5 sup-norm slope {slope} outside [1.3, 1.7]");
}

#[test]
fn c03_euler_rate_on_scalar_multiplicative_noise() {
    let r = euler_study();
    let slope = r.fitted_slope_sup;
    let pass = (0.35..=0.65).contains(&slope);
    report_line(
        "c03 euler order-1/2 rate (exp-psych)",
        pass,
        &format!("slope_sup={slope:.3}, band [0.35, 0.65]"),
    );
    assert!(
        pass,
        "euler sup-norm slope {slope} outside [0.35, 0.65]; at this resolution window the \
         coupling error is still dominated by the O(h) drift terms (the diffusion-gap \
         coefficient beta^2 = 0.04 is small), so the asymptotic 1/2 regime is not yet reached"
    );
}

#[test]
fn c04_taming_norm_bound_is_exact() {
    let p = SchemeParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut violations = 0u64;
    let total = 100_000;
    for _ in 0..total {
        let d = rng.gen_range(1..=4);
        let scale = 10f64.powf(rng.gen_range(-8.0..8.0));
        let x: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0) * scale).collect();
        let h = 2f64.powf(rng.gen_range(-16.0..0.0));
        if norm(&tame(&x, h, &p)) > tame_norm_bound(h, &p) {
            violations += 1;
        }
    }
    let pass = violations == 0;
    report_line(
        "c04 taming bound sup|T(x)| <= h^(theta/delta)",
        pass,
        &format!("{violations} violations in {total} samples"),
    );
    assert_eq!(violations, 0);
}

#[test]
fn c05_increment_bound_on_every_step() {
    let v = milstein_study().increment_violations
        + order15_study().increment_violations
        + euler_study().increment_violations;
    let pass = v == 0;
    report_line(
        "c05 one-step increment bound across criteria 1-3",
        pass,
        &format!("{v} violations over 3 x 1000 paths x 7 resolutions"),
    );
    assert_eq!(v, 0);
}

#[test]
fn c06_gallery_derivative_callbacks() {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 6);
    let mut worst_overall: f64 = 0.0;
    for name in [
        "lorenz",
        "brownian",
        "langevin",
        "exp-psych",
        "van-der-pol",
        "duffing-van-der-pol",
        "lotka-volterra",
    ] {
        let model = build_model(name, &ModelParams::default()).unwrap();
        let states: Vec<Vec<f64>> = (0..100)
            .map(|_| {
                (0..model.d)
                    .map(|_| {
                        if name == "lotka-volterra" {
                            rng.gen_range(0.2..2.0)
                        } else {
                            rng.gen_range(-2.0..2.0)
                        }
                    })
                    .collect()
            })
            .collect();
        let report = fd_check_derivatives(&model, &states, 1e-6, 1e-5);
        assert!(report.passed, "{name}: {:?}", report.per_callback);
        for (_, e) in &report.per_callback {
            worst_overall = worst_overall.max(*e);
        }
        if matches!(name, "lorenz" | "brownian" | "langevin") {
            assert_eq!(report.max_error("lg_g"), Some(0.0), "{name} lg_g not exactly zero");
            assert_eq!(report.max_error("llg"), Some(0.0), "{name} llg not exactly zero");
        }
    }
    // commutativity symmetry is exact, not just within tolerance
    let lv = build_model("lotka-volterra", &ModelParams::default()).unwrap();
    let mut a = vec![0.0; lv.d];
    let mut b = vec![0.0; lv.d];
    for _ in 0..200 {
        let x: Vec<f64> = (0..lv.d).map(|_| rng.gen_range(0.1..3.0)).collect();
        for j1 in 0..lv.m {
            for j2 in 0..lv.m {
                lv.lg_g(j2, j1, &x, &mut a);
                lv.lg_g(j1, j2, &x, &mut b);
                assert_eq!(a, b, "commutativity symmetry broken at {x:?}");
            }
        }
    }
    report_line(
        "c06 gallery derivative callbacks vs finite differences",
        true,
        &format!("7 models, worst rel err {worst_overall:.2e} <= 1e-5; additive zeros exact"),
    );
}

#[test]
fn c07_taming_derivatives_vs_finite_differences() {
    let p = SchemeParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 7);
    let mut worst_jac: f64 = 0.0;
    let mut worst_hess: f64 = 0.0;
    for _ in 0..1000 {
        let d = rng.gen_range(1..=3);
        let r = 10f64.powf(rng.gen_range(-0.7..1.0));
        let mut x: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0f64..1.0)).collect();
        let xn = norm(&x).max(1e-6);
        x.iter_mut().for_each(|v| *v *= r / xn);
        let mut u: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0f64..1.0)).collect();
        let un = norm(&u).max(1e-6);
        u.iter_mut().for_each(|v| *v /= un);
        let h = 2f64.powf(rng.gen_range(-12.0..0.0));

        let eps = 1e-6;
        let xp: Vec<f64> = x.iter().zip(&u).map(|(a, b)| a + eps * b).collect();
        let xm: Vec<f64> = x.iter().zip(&u).map(|(a, b)| a - eps * b).collect();
        let (fp, fm) = (tame(&xp, h, &p), tame(&xm, h, &p));
        let jac = tame_jacobian_apply(&x, &u, h, &p);
        let fd: Vec<f64> = (0..d).map(|i| (fp[i] - fm[i]) / (2.0 * eps)).collect();
        let scale = norm(&jac).max(norm(&fd)).max(1e-12);
        for i in 0..d {
            worst_jac = worst_jac.max((jac[i] - fd[i]).abs() / scale);
        }

        let eps2 = 1e-4;
        let xp2: Vec<f64> = x.iter().zip(&u).map(|(a, b)| a + eps2 * b).collect();
        let xm2: Vec<f64> = x.iter().zip(&u).map(|(a, b)| a - eps2 * b).collect();
        let (fp2, f0, fm2) = (tame(&xp2, h, &p), tame(&x, h, &p), tame(&xm2, h, &p));
        let hess = tame_hessian_apply(&x, &u, h, &p);
        let fd2: Vec<f64> =
            (0..d).map(|i| (fp2[i] - 2.0 * f0[i] + fm2[i]) / (eps2 * eps2)).collect();
        let scale2 = norm(&hess).max(norm(&fd2)).max(1e-9);
        for i in 0..d {
            worst_hess = worst_hess.max((hess[i] - fd2[i]).abs() / scale2);
        }
    }
    let pass = worst_jac <= 1e-6 && worst_hess <= 1e-4;
    report_line(
        "c07 taming derivatives vs finite differences",
        pass,
        &format!("jacobian worst {worst_jac:.2e} <= 1e-6, hessian worst {worst_hess:.2e} <= 1e-4"),
    );
    assert!(pass);
}

#[test]
fn c08_coarsening_identities() {
    let tol = 1e-12;
    let mut worst: f64 = 0.0;
    for path in 0..50 {
        let fine = BrownianLattice::sample(2, 10, 1.0, true, PathKey { seed: SEED, path });
        // block sums against a direct accumulation
        let coarse = fine.coarsen(6).unwrap();
        let block = 1usize << 4;
        for k in 0..coarse.steps() {
            for j in 0..2 {
                let mut s = 0.0;
                for b in 0..block {
                    s += fine.dw_at(k * block + b)[j];
                }
                worst = worst.max((s - coarse.dw_at(k)[j]).abs());
            }
        }
        // pairwise dZ composition at one level down
        let half = fine.coarsen(9).unwrap();
        let hf = fine.h();
        for k in 0..half.steps() {
            for j in 0..2 {
                let expect = fine.dz_at(2 * k).unwrap()[j]
                    + fine.dz_at(2 * k + 1).unwrap()[j]
                    + fine.dw_at(2 * k)[j] * hf;
                worst = worst.max((expect - half.dz_at(k).unwrap()[j]).abs());
            }
        }
        // transitivity
        let two_hop = fine.coarsen(7).unwrap().coarsen(4).unwrap();
        let one_hop = fine.coarsen(4).unwrap();
        for k in 0..one_hop.steps() {
            for j in 0..2 {
                worst = worst.max((two_hop.dw_at(k)[j] - one_hop.dw_at(k)[j]).abs());
                worst = worst
                    .max((two_hop.dz_at(k).unwrap()[j] - one_hop.dz_at(k).unwrap()[j]).abs());
            }
        }
    }
    let pass = worst < tol;
    report_line(
        "c08 dyadic coarsening identities",
        pass,
        &format!("worst deviation {worst:.2e} < 1e-12"),
    );
    assert!(pass);
}

#[test]
fn c09_iterated_integrals_vs_nested_sums() {
    // Nested Ito sums on 2^12 substeps against the closed forms, as moment
    // matches over 1e4 samples within 3 empirical standard errors.
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 9);
    let h = 1.0;
    let sub = 1usize << 12;
    let n = 10_000usize;
    let mut c2 = Vec::with_capacity(n);
    let mut n2 = Vec::with_capacity(n);
    let mut c3 = Vec::with_capacity(n);
    let mut n3 = Vec::with_capacity(n);
    let (mut gap2, mut gap3) = (0.0f64, 0.0f64);
    for _ in 0..n {
        let hf = h / sub as f64;
        let mut w = 0.0;
        let mut double_sum = 0.0;
        let mut triple_sum = 0.0;
        for _ in 0..sub {
            let u1: f64 = rng.gen_range(1e-12..1.0);
            let u2: f64 = rng.gen();
            let dw = hf.sqrt()
                * (-2.0 * u1.ln()).sqrt()
                * (std::f64::consts::TAU * u2).cos();
            triple_sum += double_sum * dw;
            double_sum += w * dw;
            w += dw;
        }
        let closed2 = 0.5 * (w * w - h);
        let closed3 = w * w * w / 6.0 - 0.5 * h * w;
        c2.push(closed2 * closed2);
        n2.push(double_sum * double_sum);
        c3.push(closed3 * closed3);
        n3.push(triple_sum * triple_sum);
        gap2 = gap2.max((closed2 - double_sum).abs());
        gap3 = gap3.max((closed3 - triple_sum).abs());
    }
    let mean_se = |vs: &[f64]| {
        let nf = vs.len() as f64;
        let mean = vs.iter().sum::<f64>() / nf;
        let var = vs.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (nf - 1.0);
        (mean, (var / nf).sqrt())
    };
    let var2 = h * h / 2.0;
    let var3 = h * h * h / 6.0;
    let mut ok = true;
    let mut shown = Vec::new();
    for (vals, exact) in [(&c2, var2), (&n2, var2), (&c3, var3), (&n3, var3)] {
        let (m, se) = mean_se(vals);
        ok &= (m - exact).abs() < 3.0 * se;
        shown.push(format!("{m:.4}~{exact:.4}"));
    }
    report_line(
        "c09 iterated-integral closed forms vs nested sums",
        ok,
        &format!(
            "second moments (sample~exact): I11 closed {} nested {}, I111 closed {} nested {}; max per-path gaps {gap2:.2e}/{gap3:.2e}",
            shown[0], shown[1], shown[2], shown[3]
        ),
    );
    assert!(ok);
}

#[test]
fn c10_additive_noise_scheme_collapse() {
    let model = build_model("lorenz", &ModelParams::default()).unwrap();
    let p = SchemeParams::default();
    let mut worst: f64 = 0.0;
    for path in 0..100 {
        let lat = BrownianLattice::sample(3, 8, 1.0, false, PathKey { seed: SEED, path });
        let e = simulate_path(&model, Scheme::Euler, &lat, &p).unwrap();
        let m = simulate_path(&model, Scheme::Milstein, &lat, &p).unwrap();
        for k in 0..=lat.steps() {
            for (a, b) in e.state(k).iter().zip(m.state(k)) {
                worst = worst.max((a - b).abs());
            }
        }
    }
    let pass = worst <= 1e-15;
    report_line(
        "c10 additive-noise euler/milstein collapse",
        pass,
        &format!("max per-component gap {worst:.2e} <= 1e-15 over 100 full paths"),
    );
    assert!(pass);
}

#[test]
fn c11_exponential_moment_stability_and_baseline() {
    // Kinetic model with the shipped control pair: per-level estimates stay
    // within a factor of 3 and nothing is clipped.
    let model = build_model("langevin", &ModelParams::default()).unwrap();
    let pair = langevin_default_pair(1, 0.2);
    let cfg = ExpMomentConfig {
        scheme: Scheme::Euler,
        levels: (5..=10).collect(),
        paths: 2000,
        seed: SEED,
        t_final: 1.0,
        params: SchemeParams::default(),
    };
    let em = run_exp_moment(&model, &pair, &cfg).unwrap();
    let lo = em.estimates.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = em.estimates.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let clipped: u64 = em.clipped.iter().sum();
    let stable = hi / lo <= 3.0 && clipped == 0;

    // Untamed explicit iteration on the superlinear scalar model overflows at
    // the coarsest level; the tamed scheme never does on the same lattices.
    let mut mp = ModelParams::default();
    mp.x0 = Some(vec![5.0]);
    let cubic = build_model("cubic", &mp).unwrap();
    let base =
        run_baseline_euler(&cubic, &[3, 4, 5, 6], 2000, SEED, 1.0, &SchemeParams::default())
            .unwrap();
    let em_blows = base.em_overflow[0] >= 1;
    let tamed_clean = base.tamed_overflow.iter().all(|c| *c == 0);

    let pass = stable && em_blows && tamed_clean;
    report_line(
        "c11 exponential-moment stability + baseline blow-up",
        pass,
        &format!(
            "estimates in [{lo:.3}, {hi:.3}] (ratio {:.2} <= 3), clipped={clipped}; baseline overflow at coarsest level {}/{} vs tamed {}",
            hi / lo,
            base.em_overflow[0],
            base.paths,
            base.tamed_overflow.iter().sum::<u64>()
        ),
    );
    assert!(stable, "exp-moment estimates unstable: {:?} clipped {:?}", em.estimates, em.clipped);
    assert!(em_blows, "expected >= 1 baseline overflow at level 3, got {:?}", base.em_overflow);
    assert!(tamed_clean, "tamed euler overflowed: {:?}", base.tamed_overflow);
}
