//! Finite-difference verification of model callbacks and the drift condition.

use super::{LyapunovPair, ModelSpec};

/// Outcome of [`fd_check_derivatives`]: worst deviation per callback.
/// Deviations are relative with a unit floor: |exact - fd| / max(|fd|, 1).
#[derive(Debug, Clone)]
pub struct DerivativeCheckReport {
    pub per_callback: Vec<(String, f64)>,
    pub tolerance: f64,
    pub passed: bool,
}

impl DerivativeCheckReport {
    pub fn max_error(&self, name: &str) -> Option<f64> {
        self.per_callback.iter().find(|(n, _)| n == name).map(|(_, e)| *e)
    }
}

fn axpy(x: &[f64], eps: f64, dir: &[f64]) -> Vec<f64> {
    x.iter().zip(dir).map(|(a, b)| a + eps * b).collect()
}

fn g_column(model: &ModelSpec, x: &[f64], j: usize, gbuf: &mut [f64]) -> Vec<f64> {
    model.g(x, gbuf);
    gbuf[j * model.d..(j + 1) * model.d].to_vec()
}

/// Central directional derivative of the drift or of a diffusion column.
fn dir_derivative<F: Fn(&[f64], &mut [f64])>(f: F, x: &[f64], dir: &[f64], eps: f64, d: usize) -> Vec<f64> {
    let mut plus = vec![0.0; d];
    let mut minus = vec![0.0; d];
    f(&axpy(x, eps, dir), &mut plus);
    f(&axpy(x, -eps, dir), &mut minus);
    (0..d).map(|i| (plus[i] - minus[i]) / (2.0 * eps)).collect()
}

/// Second central directional difference (one direction, applied twice).
fn dir_second<F: Fn(&[f64], &mut [f64])>(f: F, x: &[f64], dir: &[f64], eps: f64, d: usize) -> Vec<f64> {
    let mut plus = vec![0.0; d];
    let mut mid = vec![0.0; d];
    let mut minus = vec![0.0; d];
    f(&axpy(x, eps, dir), &mut plus);
    f(x, &mut mid);
    f(&axpy(x, -eps, dir), &mut minus);
    (0..d).map(|i| (plus[i] - 2.0 * mid[i] + minus[i]) / (eps * eps)).collect()
}

fn track(worst: &mut f64, exact: &[f64], fd: &[f64]) {
    for (a, b) in exact.iter().zip(fd) {
        let err = (a - b).abs() / b.abs().max(1.0);
        if err > *worst {
            *worst = err;
        }
    }
}

/// Compare every available derivative callback against finite-difference
/// compositions of f and g at the given states. First-order parts use step
/// `eps`; curvature parts use the wider step `sqrt(eps)/10`, which balances
/// truncation against roundoff for second differences.
pub fn fd_check_derivatives(
    model: &ModelSpec,
    states: &[Vec<f64>],
    eps: f64,
    tolerance: f64,
) -> DerivativeCheckReport {
    let (d, m) = (model.d, model.m);
    let eps2 = eps.sqrt() * 0.1;
    let mut gbuf = vec![0.0; d * m];
    let mut out = vec![0.0; d];
    let mut per: Vec<(String, f64)> = Vec::new();

    if model.lg_g_opt().is_some() {
        let mut worst = 0.0;
        for x in states {
            for j2 in 0..m {
                let dir = g_column(model, x, j2, &mut gbuf);
                for j1 in 0..m {
                    model.lg_g(j2, j1, x, &mut out);
                    let fd = dir_derivative(
                        |y, o| {
                            let mut gy = vec![0.0; d * m];
                            model.g(y, &mut gy);
                            o.copy_from_slice(&gy[j1 * d..(j1 + 1) * d]);
                        },
                        x,
                        &dir,
                        eps,
                        d,
                    );
                    track(&mut worst, &out, &fd);
                }
            }
        }
        per.push(("lg_g".into(), worst));
    }

    if model.lg_f_opt().is_some() {
        let mut worst = 0.0;
        for x in states {
            for j in 0..m {
                let dir = g_column(model, x, j, &mut gbuf);
                model.lg_f(j, x, &mut out);
                let fd = dir_derivative(|y, o| model.f(y, o), x, &dir, eps, d);
                track(&mut worst, &out, &fd);
            }
        }
        per.push(("lg_f".into(), worst));
    }

    if model.af_opt().is_some() {
        let mut worst = 0.0;
        let mut fbuf = vec![0.0; d];
        for x in states {
            model.f(x, &mut fbuf);
            model.af(x, &mut out);
            let mut fd = dir_derivative(|y, o| model.f(y, o), x, &fbuf, eps, d);
            for j in 0..m {
                let dir = g_column(model, x, j, &mut gbuf);
                let quad = dir_second(|y, o| model.f(y, o), x, &dir, eps2, d);
                for i in 0..d {
                    fd[i] += 0.5 * quad[i];
                }
            }
            track(&mut worst, &out, &fd);
        }
        per.push(("af".into(), worst));
    }

    if model.ag_opt().is_some() {
        let mut worst = 0.0;
        let mut fbuf = vec![0.0; d];
        for x in states {
            model.f(x, &mut fbuf);
            for j in 0..m {
                model.ag(j, x, &mut out);
                let col = |y: &[f64], o: &mut [f64]| {
                    let mut gy = vec![0.0; d * m];
                    model.g(y, &mut gy);
                    o.copy_from_slice(&gy[j * d..(j + 1) * d]);
                };
                let mut fd = dir_derivative(col, x, &fbuf, eps, d);
                for j2 in 0..m {
                    let dir = g_column(model, x, j2, &mut gbuf);
                    let quad = dir_second(col, x, &dir, eps2, d);
                    for i in 0..d {
                        fd[i] += 0.5 * quad[i];
                    }
                }
                track(&mut worst, &out, &fd);
            }
        }
        per.push(("ag".into(), worst));
    }

    if model.llg_opt().is_some() && model.lg_g_opt().is_some() {
        let mut worst = 0.0;
        for x in states {
            for j2 in 0..m {
                let dir = g_column(model, x, j2, &mut gbuf);
                for j1 in 0..m {
                    for j in 0..m {
                        model.llg(j2, j1, j, x, &mut out);
                        let fd = dir_derivative(
                            |y, o| model.lg_g(j1, j, y, o),
                            x,
                            &dir,
                            eps,
                            d,
                        );
                        track(&mut worst, &out, &fd);
                    }
                }
            }
        }
        per.push(("llg".into(), worst));
    }

    let passed = per.iter().all(|(_, e)| *e <= tolerance);
    DerivativeCheckReport { per_callback: per, tolerance, passed }
}

/// Result of sampling the drift condition
/// `A U0 + 1/2 |g* grad U0|^2 + U1 <= c + alpha U0`.
#[derive(Debug, Clone)]
pub struct LyapunovReport {
    /// max over finite samples of LHS - (c + alpha U0); <= 0 means the
    /// condition held empirically.
    pub max_violation: f64,
    /// samples discarded because some evaluation was non-finite
    pub non_finite: usize,
    pub evaluated: usize,
}

impl LyapunovReport {
    pub fn holds(&self, tol: f64) -> bool {
        self.max_violation <= tol
    }
}

/// Evaluate the drift condition at each sample state, using the exact U0
/// gradient when the pair carries one and central differences otherwise.
/// The curvature term contracts second differences of U0 along the diffusion
/// columns.
pub fn check_lyapunov_condition(
    model: &ModelSpec,
    pair: &LyapunovPair,
    states: &[Vec<f64>],
    fd_step: f64,
) -> LyapunovReport {
    let (d, m) = (model.d, model.m);
    let fd2 = fd_step.sqrt() * 0.1;
    let mut gbuf = vec![0.0; d * m];
    let mut fbuf = vec![0.0; d];
    let mut grad = vec![0.0; d];
    let mut max_violation = f64::NEG_INFINITY;
    let mut non_finite = 0;

    for x in states {
        model.f(x, &mut fbuf);
        model.g(x, &mut gbuf);
        match &pair.grad_u0 {
            Some(cb) => cb(x, &mut grad),
            None => {
                for i in 0..d {
                    let mut xp = x.clone();
                    let mut xm = x.clone();
                    xp[i] += fd_step;
                    xm[i] -= fd_step;
                    grad[i] = ((pair.u0)(&xp) - (pair.u0)(&xm)) / (2.0 * fd_step);
                }
            }
        }
        // A U0 = <f, grad U0> + 1/2 sum_j D^2 U0 [g_j, g_j]
        let mut a_u0: f64 = fbuf.iter().zip(&grad).map(|(a, b)| a * b).sum();
        for j in 0..m {
            let col = &gbuf[j * d..(j + 1) * d];
            let xp = axpy(x, fd2, col);
            let xm = axpy(x, -fd2, col);
            a_u0 += 0.5 * ((pair.u0)(&xp) - 2.0 * (pair.u0)(x) + (pair.u0)(&xm)) / (fd2 * fd2);
        }
        let mut gg: f64 = 0.0;
        for j in 0..m {
            let col = &gbuf[j * d..(j + 1) * d];
            let proj: f64 = col.iter().zip(&grad).map(|(a, b)| a * b).sum();
            gg += proj * proj;
        }
        let lhs = a_u0 + 0.5 * gg + (pair.u1)(x);
        let rhs = pair.c + pair.alpha * (pair.u0)(x);
        let v = lhs - rhs;
        if v.is_finite() {
            if v > max_violation {
                max_violation = v;
            }
        } else {
            non_finite += 1;
        }
    }
    LyapunovReport { max_violation, non_finite, evaluated: states.len() - non_finite }
}
