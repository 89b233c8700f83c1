//! Stopping threshold, increment-taming map and its first two derivatives.
//!
//! The taming map is `T(x) = x / (1 + |x|^delta h^-theta)`; it contracts any
//! increment to norm at most `h^(theta/delta)` while acting like the identity
//! on small arguments. The threshold `Phi(h) = gamma1 exp(gamma2 |ln h|^gamma3)`
//! grows slower than any negative power of h and gates the stopping indicator.
//! Closed-form derivative actions are provided for diagnostics; the path
//! drivers never differentiate the map.

use crate::error::{Error, Result};
use crate::params::SchemeParams;

/// States below this norm take the analytic limit branch of the derivative
/// formulas, avoiding 0^negative in the |x|^(delta-2) factors.
const TINY_NORM: f64 = 1e-300;

/// Above this value of ln(|x|^delta h^-theta), `1 + a` and `a` agree to well
/// below f64 resolution and the map is evaluated in log space.
const LN_SATURATE: f64 = 690.0;

/// Stopping threshold `gamma1 * exp(gamma2 * |ln h|^gamma3)`.
pub fn phi_threshold(h: f64, p: &SchemeParams) -> Result<f64> {
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::Domain(format!("step size must be positive and finite, got {h}")));
    }
    Ok(p.gamma1 * (p.gamma2 * h.ln().abs().powf(p.gamma3)).exp())
}

/// Shared factors of the taming map at radius `r = |x|`:
/// `s = 1/(1+a)` and `q = a/(1+a)` with `a = r^delta h^-theta`.
/// Returns `None` when the map saturates (`a` beyond f64 range); callers then
/// use `ln_a` directly.
fn taming_factors(r: f64, h: f64, p: &SchemeParams) -> (Option<(f64, f64)>, f64) {
    let ln_a = p.delta * r.ln() - p.theta * h.ln();
    if ln_a > LN_SATURATE {
        return (None, ln_a);
    }
    let mut a = r.powf(p.delta) * h.powf(-p.theta);
    if !a.is_finite() {
        // intermediate overflow with a representable product
        a = ln_a.exp();
    }
    let s = 1.0 / (1.0 + a);
    (Some((s, a * s)), ln_a)
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| u * v).sum()
}

/// `x / (1 + |x|^delta h^-theta)`, written into `out`.
pub fn tame_into(x: &[f64], h: f64, p: &SchemeParams, out: &mut [f64]) {
    debug_assert_eq!(x.len(), out.len());
    let r = norm(x);
    if r == 0.0 {
        out.fill(0.0);
        return;
    }
    match taming_factors(r, h, p) {
        (Some((s, _)), _) => {
            for (o, &xi) in out.iter_mut().zip(x) {
                *o = xi * s;
            }
        }
        (None, ln_a) => {
            // Saturated: 1 + a == a up to < 1e-15 relative, so the value is
            // x * a^-1, evaluated per component in log space to dodge the
            // under/overflow of the naive quotient.
            for (o, &xi) in out.iter_mut().zip(x) {
                *o = if xi == 0.0 {
                    0.0
                } else {
                    xi.signum() * (xi.abs().ln() - ln_a).exp()
                };
            }
        }
    }
}

/// Allocating variant of [`tame_into`].
pub fn tame(x: &[f64], h: f64, p: &SchemeParams) -> Vec<f64> {
    let mut out = vec![0.0; x.len()];
    tame_into(x, h, p, &mut out);
    out
}

/// Action of the taming map's Jacobian at `x` on a direction `u`:
/// identity at x = 0, otherwise
/// `s u - delta q s <x^,u> x^` with `x^ = x/|x|`, `s = 1/(1+a)`, `q = a/(1+a)`.
pub fn tame_jacobian_apply_into(x: &[f64], u: &[f64], h: f64, p: &SchemeParams, out: &mut [f64]) {
    debug_assert_eq!(x.len(), u.len());
    let r = norm(x);
    if r < TINY_NORM {
        out.copy_from_slice(u);
        return;
    }
    let (s, q) = match taming_factors(r, h, p) {
        (Some(sq), _) => sq,
        (None, _) => (0.0, 1.0),
    };
    let xu = x.iter().zip(u).map(|(xi, ui)| (xi / r) * ui).sum::<f64>();
    let coef = -p.delta * q * s * xu;
    for i in 0..out.len() {
        out[i] = s * u[i] + coef * (x[i] / r);
    }
}

pub fn tame_jacobian_apply(x: &[f64], u: &[f64], h: f64, p: &SchemeParams) -> Vec<f64> {
    let mut out = vec![0.0; x.len()];
    tame_jacobian_apply_into(x, u, h, p, &mut out);
    out
}

/// Second derivative action `T''(x)(u,u)`: zero at x = 0, otherwise the
/// three-term rank-one expression factored through `x^ = x/|x|`:
///
/// `[2 delta^2 q^2 - delta (delta-2) q] s <x^,u>^2 x^ / r
///    - delta q s (|u|^2 x^ + 2 <x^,u> u) / r`.
pub fn tame_hessian_apply_into(x: &[f64], u: &[f64], h: f64, p: &SchemeParams, out: &mut [f64]) {
    debug_assert_eq!(x.len(), u.len());
    let r = norm(x);
    if r < TINY_NORM {
        out.fill(0.0);
        return;
    }
    let (s, q) = match taming_factors(r, h, p) {
        (Some(sq), _) => sq,
        (None, _) => (0.0, 1.0),
    };
    let d = p.delta;
    let xu = x.iter().zip(u).map(|(xi, ui)| (xi / r) * ui).sum::<f64>();
    let uu = dot(u, u);
    let c_par = (2.0 * d * d * q * q - d * (d - 2.0) * q) * s * xu * xu / r;
    let c_mix = d * q * s / r;
    for i in 0..out.len() {
        let xhat = x[i] / r;
        out[i] = c_par * xhat - c_mix * (uu * xhat + 2.0 * xu * u[i]);
    }
}

pub fn tame_hessian_apply(x: &[f64], u: &[f64], h: f64, p: &SchemeParams) -> Vec<f64> {
    let mut out = vec![0.0; x.len()];
    tame_hessian_apply_into(x, u, h, p, &mut out);
    out
}

/// Provable bound `sup_x |T(x)| <= h^(theta/delta)`.
pub fn tame_norm_bound(h: f64, p: &SchemeParams) -> f64 {
    p.increment_bound(h)
}

/// Operator-norm bound `|T'(x)| <= delta |x|^delta h^-theta + 1`.
pub fn jacobian_norm_bound(x_norm: f64, h: f64, p: &SchemeParams) -> f64 {
    p.delta * x_norm.powf(p.delta) * h.powf(-p.theta) + 1.0
}

/// Bound `|T'(x) - I| <= (delta + 1) |x|^delta h^-theta`.
pub fn jacobian_minus_identity_bound(x_norm: f64, h: f64, p: &SchemeParams) -> f64 {
    (p.delta + 1.0) * x_norm.powf(p.delta) * h.powf(-p.theta)
}

/// Bound on `|T''(x)(u,u)|` for unit `u`:
/// `2 delta^2 |x|^(2 delta - 1) h^-2 theta + (delta^2 + 5 delta) |x|^(delta-1) h^-theta`.
pub fn hessian_norm_bound(x_norm: f64, h: f64, p: &SchemeParams) -> f64 {
    let d = p.delta;
    2.0 * d * d * x_norm.powf(2.0 * d - 1.0) * h.powf(-2.0 * p.theta)
        + (d * d + 5.0 * d) * x_norm.powf(d - 1.0) * h.powf(-p.theta)
}
