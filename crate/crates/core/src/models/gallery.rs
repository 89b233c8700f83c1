//! Concrete model gallery with hand-derived derivative callbacks.
//!
//! Additive models install exact-zero diffusion derivatives; the van der Pol
//! family has vanishing lg_g/llg because g depends only on x1 while its first
//! row is zero; Lotka-Volterra noise is commutative with
//! `lg_g(j2,j1)_i = x_i sigma_(i,j2) sigma_(i,j1)`.

use std::sync::Arc;

use super::{
    LyapunovPair, MatField, ModelBuilder, ModelParams, ModelSpec, NoiseStructure, ScalarField,
    VecField,
};
use crate::error::{Error, Result};

/// A potential V on R^dim with whichever exact derivatives are available.
/// `hess` is dim x dim column-major; `grad_laplacian` is grad(laplacian V),
/// needed by the order-1.5 drift callbacks of the gradient-flow models.
#[derive(Clone)]
pub struct Potential {
    pub dim: usize,
    pub v: ScalarField,
    pub grad: VecField,
    pub hess: Option<MatField>,
    pub grad_laplacian: Option<VecField>,
}

/// Double-well potential `V(x) = |x|^4/4 - |x|^2/2` with all derivatives:
/// grad V = (|x|^2 - 1) x, Hess V = (|x|^2 - 1) I + 2 x x*,
/// grad(laplacian V) = 2 (dim + 2) x.
pub fn double_well(dim: usize) -> Potential {
    let grad = move |x: &[f64], out: &mut [f64]| {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        for (o, xi) in out.iter_mut().zip(x) {
            *o = (r2 - 1.0) * xi;
        }
    };
    let hess = move |x: &[f64], out: &mut [f64]| {
        let d = x.len();
        let r2: f64 = x.iter().map(|v| v * v).sum();
        for j in 0..d {
            for i in 0..d {
                out[i + j * d] = 2.0 * x[i] * x[j] + if i == j { r2 - 1.0 } else { 0.0 };
            }
        }
    };
    let glap = move |x: &[f64], out: &mut [f64]| {
        let c = 2.0 * (x.len() as f64 + 2.0);
        for (o, xi) in out.iter_mut().zip(x) {
            *o = c * xi;
        }
    };
    Potential {
        dim,
        v: Arc::new(|x| {
            let r2: f64 = x.iter().map(|v| v * v).sum();
            0.25 * r2 * r2 - 0.5 * r2
        }),
        grad: Arc::new(grad),
        hess: Some(Arc::new(hess)),
        grad_laplacian: Some(Arc::new(glap)),
    }
}

/// Scalar-argument diffusion coefficient `phi: R -> R^m` with two derivatives,
/// as used by the oscillator models.
#[derive(Clone)]
pub struct PhiCoeff {
    pub m: usize,
    pub eval: Arc<dyn Fn(f64, &mut [f64]) + Send + Sync>,
    pub d1: Arc<dyn Fn(f64, &mut [f64]) + Send + Sync>,
    pub d2: Arc<dyn Fn(f64, &mut [f64]) + Send + Sync>,
}

/// Bounded Lipschitz default `phi_j(x) = scale * sin(x + j)`.
pub fn sine_phi(m: usize, scale: f64) -> PhiCoeff {
    PhiCoeff {
        m,
        eval: Arc::new(move |x, out| {
            for (j, o) in out.iter_mut().enumerate() {
                *o = scale * (x + j as f64).sin();
            }
        }),
        d1: Arc::new(move |x, out| {
            for (j, o) in out.iter_mut().enumerate() {
                *o = scale * (x + j as f64).cos();
            }
        }),
        d2: Arc::new(move |x, out| {
            for (j, o) in out.iter_mut().enumerate() {
                *o = -scale * (x + j as f64).sin();
            }
        }),
    }
}

fn constant_diffusion(d: usize, m: usize, g: Vec<f64>) -> MatField {
    assert_eq!(g.len(), d * m);
    Arc::new(move |_x: &[f64], out: &mut [f64]| out.copy_from_slice(&g))
}

/// Chaotic-family drift `(a1 (x2 - x1), a2 x1 - x2 - x1 x3, x1 x2 - a3 x3)`
/// with a constant noise matrix (column-major, 3 x 3).
pub fn lorenz(alpha: [f64; 3], noise: Vec<f64>, x0: [f64; 3]) -> Result<ModelSpec> {
    if alpha.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
        return Err(Error::Config(format!("lorenz coefficients must be >= 0, got {alpha:?}")));
    }
    if noise.len() != 9 {
        return Err(Error::Config("lorenz noise matrix must be 3x3".into()));
    }
    let [a1, a2, a3] = alpha;
    let drift = move |x: &[f64], out: &mut [f64]| {
        out[0] = a1 * (x[1] - x[0]);
        out[1] = a2 * x[0] - x[1] - x[0] * x[2];
        out[2] = x[0] * x[1] - a3 * x[2];
    };
    let jac_times = move |x: &[f64], v: &[f64], out: &mut [f64]| {
        out[0] = -a1 * v[0] + a1 * v[1];
        out[1] = (a2 - x[2]) * v[0] - v[1] - x[0] * v[2];
        out[2] = x[1] * v[0] + x[0] * v[1] - a3 * v[2];
    };
    let g = noise.clone();
    let lg_f = move |j: usize, x: &[f64], out: &mut [f64]| {
        let col = [g[j * 3], g[1 + j * 3], g[2 + j * 3]];
        jac_times(x, &col, out);
    };
    // Hessian contraction of the drift with the constant g g*: the only
    // curvature sits in the bilinear terms -x1 x3 and x1 x2.
    let ggt_12: f64 = (0..3).map(|j| noise[j * 3] * noise[1 + j * 3]).sum();
    let ggt_13: f64 = (0..3).map(|j| noise[j * 3] * noise[2 + j * 3]).sum();
    let af = move |x: &[f64], out: &mut [f64]| {
        let mut f = [0.0; 3];
        drift(x, &mut f);
        jac_times(x, &f, out);
        out[1] -= ggt_13;
        out[2] += ggt_12;
    };
    Ok(ModelBuilder::new(
        "lorenz",
        3,
        3,
        x0.to_vec(),
        NoiseStructure::Additive,
        Arc::new(drift),
        constant_diffusion(3, 3, noise),
    )
    .lg_f(Arc::new(lg_f))
    .af(Arc::new(af))
    .zero_diffusion_derivatives()
    .build())
}

/// Gradient flow `f = -grad V`, `g = sqrt(beta) I`.
pub fn brownian_dynamics(pot: Potential, beta: f64, x0: Vec<f64>) -> Result<ModelSpec> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::Config(format!("brownian dynamics needs beta > 0, got {beta}")));
    }
    let d = pot.dim;
    if x0.len() != d {
        return Err(Error::Config(format!("x0 must have dimension {d}")));
    }
    let sqrt_beta = beta.sqrt();
    let grad = pot.grad.clone();
    let drift = move |x: &[f64], out: &mut [f64]| {
        grad(x, out);
        out.iter_mut().for_each(|v| *v = -*v);
    };
    let mut g = vec![0.0; d * d];
    for i in 0..d {
        g[i + i * d] = sqrt_beta;
    }
    let mut builder = ModelBuilder::new(
        "brownian",
        d,
        d,
        x0,
        NoiseStructure::Additive,
        Arc::new(drift),
        constant_diffusion(d, d, g),
    )
    .zero_diffusion_derivatives();

    if let (Some(hess), Some(glap)) = (pot.hess.clone(), pot.grad_laplacian.clone()) {
        let h1 = hess.clone();
        let lg_f = move |j: usize, x: &[f64], out: &mut [f64]| {
            let mut hm = vec![0.0; d * d];
            h1(x, &mut hm);
            for i in 0..d {
                out[i] = -sqrt_beta * hm[i + j * d];
            }
        };
        let grad2 = pot.grad.clone();
        // af = Hess V grad V - (beta/2) grad(laplacian V)
        let af = move |x: &[f64], out: &mut [f64]| {
            let mut hm = vec![0.0; d * d];
            let mut gv = vec![0.0; d];
            hess(x, &mut hm);
            grad2(x, &mut gv);
            let mut gl = vec![0.0; d];
            glap(x, &mut gl);
            for i in 0..d {
                let mut acc = 0.0;
                for k in 0..d {
                    acc += hm[i + k * d] * gv[k];
                }
                out[i] = acc - 0.5 * beta * gl[i];
            }
        };
        builder = builder.lg_f(Arc::new(lg_f)).af(Arc::new(af));
    }
    Ok(builder.build())
}

/// Kinetic model on (q, p) in R^2m: `f = (p, -grad V(q) - friction p)`,
/// noise sqrt(beta) on the momentum block only.
pub fn langevin(pot: Potential, friction: f64, beta: f64, x0: Vec<f64>) -> Result<ModelSpec> {
    if !(friction >= 0.0 && friction.is_finite()) {
        return Err(Error::Config(format!("langevin needs friction >= 0, got {friction}")));
    }
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::Config(format!("langevin needs beta > 0, got {beta}")));
    }
    let m = pot.dim;
    let d = 2 * m;
    if x0.len() != d {
        return Err(Error::Config(format!("x0 must have dimension {d}")));
    }
    let sqrt_beta = beta.sqrt();
    let grad = pot.grad.clone();
    let drift = move |x: &[f64], out: &mut [f64]| {
        let (q, p) = x.split_at(m);
        grad(q, &mut out[..m]);
        for i in 0..m {
            let gv = out[i];
            out[i] = p[i];
            out[m + i] = -gv - friction * p[i];
        }
    };
    let mut g = vec![0.0; d * m];
    for j in 0..m {
        g[m + j + j * d] = sqrt_beta;
    }
    let mut builder = ModelBuilder::new(
        "langevin",
        d,
        m,
        x0,
        NoiseStructure::Additive,
        Arc::new(drift),
        constant_diffusion(d, m, g),
    )
    .zero_diffusion_derivatives();

    // Column m+j of the drift Jacobian is (e_j, -friction e_j); constant.
    let lg_f = move |j: usize, _x: &[f64], out: &mut [f64]| {
        out.fill(0.0);
        out[j] = sqrt_beta;
        out[m + j] = -sqrt_beta * friction;
    };
    if let Some(hess) = pot.hess.clone() {
        let grad2 = pot.grad.clone();
        // af = (-grad V - friction p,
        //       -Hess V p + friction grad V + friction^2 p); the noise block
        // contributes nothing since f is linear in p.
        let af = move |x: &[f64], out: &mut [f64]| {
            let (q, p) = x.split_at(m);
            let mut hm = vec![0.0; m * m];
            hess(q, &mut hm);
            let mut gv = vec![0.0; m];
            grad2(q, &mut gv);
            for i in 0..m {
                out[i] = -gv[i] - friction * p[i];
                let mut acc = 0.0;
                for k in 0..m {
                    acc += hm[i + k * m] * p[k];
                }
                out[m + i] = -acc + friction * gv[i] + friction * friction * p[i];
            }
        };
        builder = builder.lg_f(Arc::new(lg_f)).af(Arc::new(af));
    }
    Ok(builder.build())
}

/// Default exponential-moment control pair for the kinetic model with the
/// double-well potential: `U0 = V(q) + |p|^2/2 + 1`, `U1 = 0`, rate beta and
/// slack beta*m/2; the drift condition then holds for every friction >= 0.
pub fn langevin_default_pair(m: usize, beta: f64) -> LyapunovPair {
    let pot = double_well(m);
    let v = pot.v.clone();
    let grad = pot.grad.clone();
    LyapunovPair {
        u0: Arc::new(move |x: &[f64]| {
            let (q, p) = x.split_at(m);
            v(q) + 0.5 * p.iter().map(|v| v * v).sum::<f64>() + 1.0
        }),
        u1: Arc::new(|_| 0.0),
        grad_u0: Some(Arc::new(move |x: &[f64], out: &mut [f64]| {
            let (q, p) = x.split_at(m);
            grad(q, &mut out[..m]);
            out[m..].copy_from_slice(p);
        })),
        alpha: beta,
        c: 0.5 * beta * m as f64,
    }
}

/// Circle-preserving planar model with scalar rotational noise:
/// `f = (x2^2 (lambda + 4 gamma x1) - beta^2 x1 / 2,
///       -x1 x2 (lambda + 4 gamma x1) - beta^2 x2 / 2)`,
/// `g = (-beta x2, beta x1)`.
pub fn exp_psychology(lambda: f64, gamma: f64, beta: f64, x0: [f64; 2]) -> Result<ModelSpec> {
    if !(lambda > 0.0 && gamma > 0.0) {
        return Err(Error::Config(format!(
            "exp-psych needs lambda > 0 and gamma > 0, got lambda={lambda} gamma={gamma}"
        )));
    }
    if !beta.is_finite() {
        return Err(Error::Config("exp-psych beta must be finite".into()));
    }
    let (l, gm, b) = (lambda, gamma, beta);
    let drift = move |x: &[f64], out: &mut [f64]| {
        let c = l + 4.0 * gm * x[0];
        out[0] = x[1] * x[1] * c - 0.5 * b * b * x[0];
        out[1] = -x[0] * x[1] * c - 0.5 * b * b * x[1];
    };
    let diffusion = move |x: &[f64], out: &mut [f64]| {
        out[0] = -b * x[1];
        out[1] = b * x[0];
    };
    let lg_g = move |_j2: usize, _j1: usize, x: &[f64], out: &mut [f64]| {
        out[0] = -b * b * x[0];
        out[1] = -b * b * x[1];
    };
    let llg = move |_j2: usize, _j1: usize, _j: usize, x: &[f64], out: &mut [f64]| {
        out[0] = b * b * b * x[1];
        out[1] = -b * b * b * x[0];
    };
    let jac = move |x: &[f64]| {
        let (x1, x2) = (x[0], x[1]);
        [
            4.0 * gm * x2 * x2 - 0.5 * b * b,
            2.0 * x2 * (l + 4.0 * gm * x1),
            -x2 * (l + 8.0 * gm * x1),
            -x1 * (l + 4.0 * gm * x1) - 0.5 * b * b,
        ] // [j11, j12, j21, j22]
    };
    let lg_f = move |_j: usize, x: &[f64], out: &mut [f64]| {
        let [j11, j12, j21, j22] = jac(x);
        let (g1, g2) = (-b * x[1], b * x[0]);
        out[0] = j11 * g1 + j12 * g2;
        out[1] = j21 * g1 + j22 * g2;
    };
    let af = move |x: &[f64], out: &mut [f64]| {
        let (x1, x2) = (x[0], x[1]);
        let mut f = [0.0; 2];
        drift(x, &mut f);
        let [j11, j12, j21, j22] = jac(x);
        let (g1, g2) = (-b * x2, b * x1);
        // Hessians: f1 -> [[0, 8 gm x2], [8 gm x2, 2 l + 8 gm x1]],
        //           f2 -> [[-8 gm x2, -(l + 8 gm x1)], [-(l + 8 gm x1), 0]]
        let q1 = 2.0 * g1 * g2 * (8.0 * gm * x2) + g2 * g2 * (2.0 * l + 8.0 * gm * x1);
        let q2 = g1 * g1 * (-8.0 * gm * x2) + 2.0 * g1 * g2 * (-(l + 8.0 * gm * x1));
        out[0] = j11 * f[0] + j12 * f[1] + 0.5 * q1;
        out[1] = j21 * f[0] + j22 * f[1] + 0.5 * q2;
    };
    let ag = move |_j: usize, x: &[f64], out: &mut [f64]| {
        // g is linear, so A g = Jg f with Jg = [[0, -beta], [beta, 0]].
        let mut f = [0.0; 2];
        drift(x, &mut f);
        out[0] = -b * f[1];
        out[1] = b * f[0];
    };
    Ok(ModelBuilder::new(
        "exp-psych",
        2,
        1,
        x0.to_vec(),
        NoiseStructure::Scalar,
        Arc::new(drift),
        Arc::new(diffusion),
    )
    .lg_g(Arc::new(lg_g))
    .lg_f(Arc::new(lg_f))
    .af(Arc::new(af))
    .ag(Arc::new(ag))
    .llg(Arc::new(llg))
    .build())
}

fn oscillator(
    name: &'static str,
    phi: PhiCoeff,
    x0: [f64; 2],
    drift: VecField,
    dfdx2: impl Fn(&[f64]) -> f64 + Send + Sync + Clone + 'static,
    dfdx1: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
) -> ModelSpec {
    let m = phi.m;
    let eval = phi.eval.clone();
    let diffusion = move |x: &[f64], out: &mut [f64]| {
        // first row zero, second row phi(x1)
        let mut row = vec![0.0; m];
        eval(x[0], &mut row);
        for j in 0..m {
            out[j * 2] = 0.0;
            out[1 + j * 2] = row[j];
        }
    };
    let eval2 = phi.eval.clone();
    let drift2 = drift.clone();
    let dfdx2_lgf = dfdx2.clone();
    let lg_f = move |j: usize, x: &[f64], out: &mut [f64]| {
        let mut row = vec![0.0; m];
        eval2(x[0], &mut row);
        out[0] = row[j];
        out[1] = row[j] * dfdx2_lgf(x);
    };
    let d1 = phi.d1.clone();
    let ag = move |j: usize, x: &[f64], out: &mut [f64]| {
        let mut row = vec![0.0; m];
        d1(x[0], &mut row);
        out[0] = 0.0;
        out[1] = x[1] * row[j];
    };
    // f2 is linear in x2, so the noise contributes nothing to A f.
    let af = move |x: &[f64], out: &mut [f64]| {
        let mut f = [0.0; 2];
        drift2(x, &mut f);
        out[0] = f[1];
        out[1] = dfdx1(x) * f[0] + dfdx2(x) * f[1];
    };
    ModelBuilder::new(name, 2, m, x0.to_vec(), NoiseStructure::NoLevyArea, drift, Arc::new(diffusion))
        .lg_f(Arc::new(lg_f))
        .af(Arc::new(af))
        .ag(Arc::new(ag))
        .zero_diffusion_derivatives()
        .build()
}

/// Oscillator `f = (x2, (gamma - lambda x1^2) x2 - beta x1)` with diffusion
/// `(0, phi(x1))` per noise column: lg_g and llg vanish identically.
pub fn van_der_pol(gamma: f64, lambda: f64, beta: f64, phi: PhiCoeff, x0: [f64; 2]) -> Result<ModelSpec> {
    if !(lambda > 0.0) {
        return Err(Error::Config(format!("van-der-pol needs lambda > 0, got {lambda}")));
    }
    if !(gamma >= 0.0 && beta >= 0.0) {
        return Err(Error::Config(format!(
            "van-der-pol needs gamma >= 0 and beta >= 0, got gamma={gamma} beta={beta}"
        )));
    }
    let drift = move |x: &[f64], out: &mut [f64]| {
        out[0] = x[1];
        out[1] = (gamma - lambda * x[0] * x[0]) * x[1] - beta * x[0];
    };
    Ok(oscillator(
        "van-der-pol",
        phi,
        x0,
        Arc::new(drift),
        move |x| gamma - lambda * x[0] * x[0],
        move |x| -2.0 * lambda * x[0] * x[1] - beta,
    ))
}

/// Oscillator `f = (x2, a2 x2 - a1 x1 - a3 x1^2 x2 - x1^3)`, same diffusion
/// structure as the van der Pol model.
pub fn duffing_van_der_pol(alpha: [f64; 3], phi: PhiCoeff, x0: [f64; 2]) -> Result<ModelSpec> {
    let [a1, a2, a3] = alpha;
    if !(a3 > 0.0) {
        return Err(Error::Config(format!("duffing-van-der-pol needs alpha3 > 0, got {a3}")));
    }
    let drift = move |x: &[f64], out: &mut [f64]| {
        out[0] = x[1];
        out[1] = a2 * x[1] - a1 * x[0] - a3 * x[0] * x[0] * x[1] - x[0] * x[0] * x[0];
    };
    Ok(oscillator(
        "duffing-van-der-pol",
        phi,
        x0,
        Arc::new(drift),
        move |x| a2 - a3 * x[0] * x[0],
        move |x| -a1 - 2.0 * a3 * x[0] * x[1] - 3.0 * x[0] * x[0],
    ))
}

/// Competition model `f_i = x_i (b_i - (A x)_i)`, `g = diag(x) sigma`.
/// `a` is row-major d x d with nonnegative entries and positive diagonal;
/// `sigma` is column-major d x m. Noise is commutative.
pub fn lotka_volterra(b: Vec<f64>, a: Vec<f64>, sigma: Vec<f64>, x0: Vec<f64>) -> Result<ModelSpec> {
    let d = b.len();
    if a.len() != d * d {
        return Err(Error::Config("lotka-volterra interaction matrix must be d x d".into()));
    }
    if sigma.len() % d != 0 || sigma.is_empty() {
        return Err(Error::Config("lotka-volterra sigma must be d x m".into()));
    }
    let m = sigma.len() / d;
    if x0.len() != d || x0.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::Config("lotka-volterra initial state must be strictly positive".into()));
    }
    for i in 0..d {
        if !(a[i * d + i] > 0.0) {
            return Err(Error::Config(format!(
                "lotka-volterra needs a positive diagonal, a[{i}][{i}] = {}",
                a[i * d + i]
            )));
        }
    }
    if a.iter().any(|v| *v < 0.0) {
        return Err(Error::Config("lotka-volterra interaction entries must be nonnegative".into()));
    }
    let (bv, av) = (b.clone(), a.clone());
    let drift = move |x: &[f64], out: &mut [f64]| {
        for i in 0..out.len() {
            let ax: f64 = (0..out.len()).map(|k| av[i * out.len() + k] * x[k]).sum();
            out[i] = x[i] * (bv[i] - ax);
        }
    };
    let sig = sigma.clone();
    let diffusion = move |x: &[f64], out: &mut [f64]| {
        let d = x.len();
        for j in 0..out.len() / d {
            for i in 0..d {
                out[i + j * d] = x[i] * sig[i + j * d];
            }
        }
    };
    let sig2 = sigma.clone();
    let lg_g = move |j2: usize, j1: usize, x: &[f64], out: &mut [f64]| {
        let d = x.len();
        for i in 0..d {
            out[i] = x[i] * sig2[i + j2 * d] * sig2[i + j1 * d];
        }
    };
    Ok(ModelBuilder::new(
        "lotka-volterra",
        d,
        m,
        x0,
        NoiseStructure::Commutative,
        Arc::new(drift),
        Arc::new(diffusion),
    )
    .lg_g(Arc::new(lg_g))
    .build())
}

/// Scalar mean-reverting test model `f = -rate y`, additive noise.
pub fn linear(rate: f64, noise_scale: f64, x0: f64) -> Result<ModelSpec> {
    if !rate.is_finite() || !noise_scale.is_finite() {
        return Err(Error::Config("linear model parameters must be finite".into()));
    }
    let drift = move |x: &[f64], out: &mut [f64]| out[0] = -rate * x[0];
    let lg_f = move |_: usize, x: &[f64], out: &mut [f64]| {
        let _ = x;
        out[0] = -rate * noise_scale;
    };
    let af = move |x: &[f64], out: &mut [f64]| out[0] = rate * rate * x[0];
    Ok(ModelBuilder::new(
        "linear",
        1,
        1,
        vec![x0],
        NoiseStructure::Additive,
        Arc::new(drift),
        constant_diffusion(1, 1, vec![noise_scale]),
    )
    .lg_f(Arc::new(lg_f))
    .af(Arc::new(af))
    .zero_diffusion_derivatives()
    .build())
}

/// Scalar superlinear test model `f = -y^3`, additive noise. The classical
/// explicit Euler iteration blows up on it at coarse steps.
pub fn cubic(noise_scale: f64, x0: f64) -> Result<ModelSpec> {
    if !noise_scale.is_finite() {
        return Err(Error::Config("cubic model noise must be finite".into()));
    }
    let drift = move |x: &[f64], out: &mut [f64]| out[0] = -x[0] * x[0] * x[0];
    let lg_f = move |_: usize, x: &[f64], out: &mut [f64]| {
        out[0] = -3.0 * noise_scale * x[0] * x[0];
    };
    let af = move |x: &[f64], out: &mut [f64]| {
        let y = x[0];
        out[0] = 3.0 * y.powi(5) - 3.0 * noise_scale * noise_scale * y;
    };
    Ok(ModelBuilder::new(
        "cubic",
        1,
        1,
        vec![x0],
        NoiseStructure::Additive,
        Arc::new(drift),
        constant_diffusion(1, 1, vec![noise_scale]),
    )
    .lg_f(Arc::new(lg_f))
    .af(Arc::new(af))
    .zero_diffusion_derivatives()
    .build())
}

fn x0_or(params: &ModelParams, default: Vec<f64>) -> Result<Vec<f64>> {
    match &params.x0 {
        None => Ok(default),
        Some(v) => {
            if v.len() != default.len() {
                return Err(Error::Config(format!(
                    "x0 override has dimension {}, expected {}",
                    v.len(),
                    default.len()
                )));
            }
            Ok(v.clone())
        }
    }
}

/// Registry dispatch with documented defaults, applying flat overrides.
pub(super) fn from_params(name: &str, p: &ModelParams) -> Result<ModelSpec> {
    match name {
        "lorenz" => {
            let alpha = [
                p.alpha1.unwrap_or(0.5),
                p.alpha2.unwrap_or(1.5),
                p.alpha3.unwrap_or(0.5),
            ];
            let s = p.noise_scale.unwrap_or(0.3);
            let mut noise = vec![0.0; 9];
            for i in 0..3 {
                noise[i + i * 3] = s;
            }
            let x0 = x0_or(p, vec![0.5, 0.5, 0.5])?;
            lorenz(alpha, noise, [x0[0], x0[1], x0[2]])
        }
        "brownian" => {
            let dim = p.dim.unwrap_or(2);
            let beta = p.beta.unwrap_or(0.5);
            let mut default_x0 = vec![0.0; dim];
            if dim > 0 {
                default_x0[0] = 1.5;
            }
            let x0 = x0_or(p, default_x0)?;
            brownian_dynamics(double_well(dim), beta, x0)
        }
        "langevin" => {
            let m = p.dim.unwrap_or(1);
            let friction = p.friction.unwrap_or(1.0);
            let beta = p.beta.unwrap_or(0.2);
            let mut default_x0 = vec![0.0; 2 * m];
            default_x0[0] = 1.5;
            let x0 = x0_or(p, default_x0)?;
            langevin(double_well(m), friction, beta, x0)
        }
        "exp-psych" => {
            let x0 = x0_or(p, vec![1.0, 0.0])?;
            exp_psychology(
                p.lambda.unwrap_or(1.0),
                p.model_gamma.unwrap_or(1.0),
                p.beta.unwrap_or(0.2),
                [x0[0], x0[1]],
            )
        }
        "van-der-pol" => {
            let x0 = x0_or(p, vec![1.0, 0.0])?;
            van_der_pol(
                p.model_gamma.unwrap_or(1.0),
                p.lambda.unwrap_or(1.0),
                p.beta.unwrap_or(1.0),
                sine_phi(p.noise_dim.unwrap_or(1), p.phi_scale.unwrap_or(0.2)),
                [x0[0], x0[1]],
            )
        }
        "duffing-van-der-pol" => {
            let x0 = x0_or(p, vec![1.0, 0.0])?;
            duffing_van_der_pol(
                [p.alpha1.unwrap_or(1.0), p.alpha2.unwrap_or(1.0), p.alpha3.unwrap_or(1.0)],
                sine_phi(p.noise_dim.unwrap_or(1), p.phi_scale.unwrap_or(0.2)),
                [x0[0], x0[1]],
            )
        }
        "lotka-volterra" => {
            let b = p.lv_b.clone().unwrap_or_else(|| vec![1.0, 1.0]);
            let d = b.len();
            let a = p.lv_a.clone().unwrap_or_else(|| {
                let mut a = vec![0.5; d * d];
                for i in 0..d {
                    a[i * d + i] = 1.0;
                }
                a
            });
            let sd = p.sigma_diag.clone().unwrap_or_else(|| vec![0.2; d]);
            if sd.len() != d {
                return Err(Error::Config(format!("sigma_diag must have {d} entries")));
            }
            let mut sigma = vec![0.0; d * d];
            for i in 0..d {
                sigma[i + i * d] = sd[i];
            }
            let x0 = x0_or(p, vec![1.0; d])?;
            lotka_volterra(b, a, sigma, x0)
        }
        "linear" => {
            let x0 = x0_or(p, vec![1.0])?;
            linear(p.rate.unwrap_or(1.0), p.noise_scale.unwrap_or(0.1), x0[0])
        }
        "cubic" => {
            let x0 = x0_or(p, vec![1.0])?;
            cubic(p.noise_scale.unwrap_or(0.1), x0[0])
        }
        other => Err(Error::Config(format!("unknown model '{other}'"))),
    }
}

/// The worked control-function pair shipped with the registry; only the
/// kinetic (langevin) model has one built in.
pub fn default_pair_for(name: &str, p: &ModelParams) -> Option<LyapunovPair> {
    match name {
        "langevin" => Some(langevin_default_pair(p.dim.unwrap_or(1), p.beta.unwrap_or(0.2))),
        _ => None,
    }
}
