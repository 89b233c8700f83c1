//! SDE model interface: coefficients plus the analytic derivative operators
//! the higher-order schemes consume, and the registry of concrete models.
//!
//! Derivative callback conventions, for drift f and diffusion g (d x m):
//!   lg_g(j2, j1, x)     -> directional derivative of column g^(j1) along g^(j2)
//!   lg_f(j, x)          -> directional derivative of f along g^(j)
//!   af(x)               -> generator applied to f:
//!                          Jf f + 1/2 sum_il (g g*)_il d2f/dx_i dx_l
//!   ag(j, x)            -> generator applied to column g^(j)
//!   llg(j2, j1, j, x)   -> second iterated directional derivative of g^(j)
//!
//! Matrices are stored column-major: g[i + j*d] is row i, column j.

mod checks;
mod gallery;

pub use checks::{check_lyapunov_condition, fd_check_derivatives, DerivativeCheckReport, LyapunovReport};
pub use gallery::{
    brownian_dynamics, cubic, default_pair_for, double_well, duffing_van_der_pol, exp_psychology,
    langevin, langevin_default_pair, linear, lorenz, lotka_volterra, sine_phi, van_der_pol,
    PhiCoeff, Potential,
};

use crate::error::{Error, Result};
use crate::params::Scheme;
use std::sync::Arc;

pub type VecField = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;
pub type MatField = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;
pub type Dir1Field = Arc<dyn Fn(usize, &[f64], &mut [f64]) + Send + Sync>;
pub type Dir2Field = Arc<dyn Fn(usize, usize, &[f64], &mut [f64]) + Send + Sync>;
pub type Dir3Field = Arc<dyn Fn(usize, usize, usize, &[f64], &mut [f64]) + Send + Sync>;
pub type ScalarField = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Structure of the diffusion, deciding which iterated integrals a scheme
/// needs and which closed forms are available.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseStructure {
    /// g constant: all diffusion derivatives vanish.
    Additive,
    /// m = 1: iterated integrals have closed polynomial forms in (dW, h).
    Scalar,
    /// lg_g symmetric in its column pair: Milstein needs no Levy areas.
    Commutative,
    /// lg_g and llg vanish identically while g is state dependent.
    NoLevyArea,
    /// Anything else; Milstein/order-1.5 are rejected at configuration time.
    General,
}

impl NoiseStructure {
    pub fn name(self) -> &'static str {
        match self {
            NoiseStructure::Additive => "additive",
            NoiseStructure::Scalar => "scalar",
            NoiseStructure::Commutative => "commutative",
            NoiseStructure::NoLevyArea => "no-levy-area",
            NoiseStructure::General => "general",
        }
    }
}

/// An SDE `dX = f(X) dt + g(X) dW` with the derivative callbacks required by
/// the schemes. Callbacks must be pure and reentrant; the harness calls them
/// concurrently from many paths.
#[derive(Clone)]
pub struct ModelSpec {
    pub name: String,
    pub d: usize,
    pub m: usize,
    pub x0: Vec<f64>,
    pub noise: NoiseStructure,
    drift: VecField,
    diffusion: MatField,
    lg_g: Option<Dir2Field>,
    lg_f: Option<Dir1Field>,
    af: Option<VecField>,
    ag: Option<Dir1Field>,
    llg: Option<Dir3Field>,
}

impl std::fmt::Debug for ModelSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ModelSpec")
            .field("name", &self.name)
            .field("d", &self.d)
            .field("m", &self.m)
            .field("noise", &self.noise)
            .field("x0", &self.x0)
            .finish()
    }
}

pub struct ModelBuilder {
    spec: ModelSpec,
}

impl ModelBuilder {
    pub fn new(
        name: impl Into<String>,
        d: usize,
        m: usize,
        x0: Vec<f64>,
        noise: NoiseStructure,
        drift: VecField,
        diffusion: MatField,
    ) -> Self {
        assert_eq!(x0.len(), d, "initial state has wrong dimension");
        ModelBuilder {
            spec: ModelSpec {
                name: name.into(),
                d,
                m,
                x0,
                noise,
                drift,
                diffusion,
                lg_g: None,
                lg_f: None,
                af: None,
                ag: None,
                llg: None,
            },
        }
    }

    pub fn lg_g(mut self, f: Dir2Field) -> Self {
        self.spec.lg_g = Some(f);
        self
    }
    pub fn lg_f(mut self, f: Dir1Field) -> Self {
        self.spec.lg_f = Some(f);
        self
    }
    pub fn af(mut self, f: VecField) -> Self {
        self.spec.af = Some(f);
        self
    }
    pub fn ag(mut self, f: Dir1Field) -> Self {
        self.spec.ag = Some(f);
        self
    }
    pub fn llg(mut self, f: Dir3Field) -> Self {
        self.spec.llg = Some(f);
        self
    }

    /// Install exact-zero derivative callbacks for the diffusion, as implied
    /// by a constant g (additive noise) or a no-Levy-area structure.
    pub fn zero_diffusion_derivatives(mut self) -> Self {
        let d = self.spec.d;
        self.spec.lg_g = Some(Arc::new(move |_, _, _, out: &mut [f64]| out.fill(0.0)));
        self.spec.llg = Some(Arc::new(move |_, _, _, _, out: &mut [f64]| out.fill(0.0)));
        if self.spec.noise == NoiseStructure::Additive {
            self.spec.ag = Some(Arc::new(move |_, _, out: &mut [f64]| out.fill(0.0)));
        }
        let _ = d;
        self
    }

    pub fn build(self) -> ModelSpec {
        self.spec
    }
}

impl ModelSpec {
    pub fn f(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.d);
        debug_assert_eq!(out.len(), self.d);
        (self.drift)(x, out);
    }

    /// Diffusion matrix, column-major into `out` of length d*m.
    pub fn g(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.d * self.m);
        (self.diffusion)(x, out);
    }

    pub fn has_lg_g(&self) -> bool {
        self.lg_g.is_some()
    }
    pub fn has_order15_callbacks(&self) -> bool {
        self.lg_f.is_some() && self.af.is_some() && self.ag.is_some() && self.llg.is_some()
    }

    pub fn lg_g(&self, j2: usize, j1: usize, x: &[f64], out: &mut [f64]) {
        (self.lg_g.as_ref().expect("model lacks lg_g"))(j2, j1, x, out)
    }
    pub fn lg_f(&self, j: usize, x: &[f64], out: &mut [f64]) {
        (self.lg_f.as_ref().expect("model lacks lg_f"))(j, x, out)
    }
    pub fn af(&self, x: &[f64], out: &mut [f64]) {
        (self.af.as_ref().expect("model lacks af"))(x, out)
    }
    pub fn ag(&self, j: usize, x: &[f64], out: &mut [f64]) {
        (self.ag.as_ref().expect("model lacks ag"))(j, x, out)
    }
    pub fn llg(&self, j2: usize, j1: usize, j: usize, x: &[f64], out: &mut [f64]) {
        (self.llg.as_ref().expect("model lacks llg"))(j2, j1, j, x, out)
    }

    pub(crate) fn lg_g_opt(&self) -> Option<&Dir2Field> {
        self.lg_g.as_ref()
    }
    pub(crate) fn lg_f_opt(&self) -> Option<&Dir1Field> {
        self.lg_f.as_ref()
    }
    pub(crate) fn af_opt(&self) -> Option<&VecField> {
        self.af.as_ref()
    }
    pub(crate) fn ag_opt(&self) -> Option<&Dir1Field> {
        self.ag.as_ref()
    }
    pub(crate) fn llg_opt(&self) -> Option<&Dir3Field> {
        self.llg.as_ref()
    }

    /// Whether a scheme can run on this model: callback availability and the
    /// noise structures its iterated-integral assembly supports.
    pub fn supports(&self, scheme: Scheme) -> Result<()> {
        use NoiseStructure::*;
        match scheme {
            Scheme::Euler => Ok(()),
            Scheme::Milstein => {
                if self.noise == General {
                    return Err(Error::Config(format!(
                        "milstein on model '{}': general non-commutative noise needs Levy areas, \
                         which are not simulated",
                        self.name
                    )));
                }
                if matches!(self.noise, Scalar | Commutative) && !self.has_lg_g() {
                    return Err(Error::Config(format!(
                        "milstein on model '{}' requires the lg_g callback",
                        self.name
                    )));
                }
                Ok(())
            }
            Scheme::Order15 => {
                if !matches!(self.noise, Additive | Scalar | NoLevyArea) {
                    return Err(Error::Config(format!(
                        "order15 on model '{}': noise structure '{}' lacks closed-form triple \
                         integrals",
                        self.name,
                        self.noise.name()
                    )));
                }
                if !self.has_order15_callbacks() {
                    return Err(Error::Config(format!(
                        "order15 on model '{}' requires lg_f, af, ag and llg callbacks",
                        self.name
                    )));
                }
                Ok(())
            }
        }
    }
}

/// A pair of nonnegative control functions with rate `alpha` and slack `c`,
/// used by the exponential-moment diagnostic and the drift condition check:
/// `A U0 + 1/2 |g* grad U0|^2 + U1 <= c + alpha U0`.
#[derive(Clone)]
pub struct LyapunovPair {
    pub u0: ScalarField,
    pub u1: ScalarField,
    /// Exact gradient of U0; finite differences are used when absent.
    pub grad_u0: Option<VecField>,
    pub alpha: f64,
    pub c: f64,
}

impl LyapunovPair {
    pub fn zero() -> Self {
        LyapunovPair {
            u0: Arc::new(|_| 0.0),
            u1: Arc::new(|_| 0.0),
            grad_u0: None,
            alpha: 0.0,
            c: 0.0,
        }
    }
}

/// Flat model parameter overrides. Every field is optional; the registry
/// rejects overrides that the selected model does not use.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ModelParams {
    pub x0: Option<Vec<f64>>,
    pub alpha1: Option<f64>,
    pub alpha2: Option<f64>,
    pub alpha3: Option<f64>,
    pub noise_scale: Option<f64>,
    pub beta: Option<f64>,
    pub friction: Option<f64>,
    pub lambda: Option<f64>,
    pub model_gamma: Option<f64>,
    pub phi_scale: Option<f64>,
    pub noise_dim: Option<usize>,
    pub dim: Option<usize>,
    pub rate: Option<f64>,
    pub lv_b: Option<Vec<f64>>,
    pub lv_a: Option<Vec<f64>>,
    pub sigma_diag: Option<Vec<f64>>,
}

impl ModelParams {
    fn set_keys(&self) -> Vec<&'static str> {
        let mut keys = Vec::new();
        macro_rules! key {
            ($f:ident) => {
                if self.$f.is_some() {
                    keys.push(stringify!($f));
                }
            };
        }
        key!(x0);
        key!(alpha1);
        key!(alpha2);
        key!(alpha3);
        key!(noise_scale);
        key!(beta);
        key!(friction);
        key!(lambda);
        key!(model_gamma);
        key!(phi_scale);
        key!(noise_dim);
        key!(dim);
        key!(rate);
        key!(lv_b);
        key!(lv_a);
        key!(sigma_diag);
        keys
    }
}

/// Names accepted by [`build_model`].
pub fn registry_names() -> &'static [&'static str] {
    &[
        "lorenz",
        "brownian",
        "langevin",
        "exp-psych",
        "van-der-pol",
        "duffing-van-der-pol",
        "lotka-volterra",
        "linear",
        "cubic",
    ]
}

fn accepted_keys(name: &str) -> &'static [&'static str] {
    match name {
        "lorenz" => &["x0", "alpha1", "alpha2", "alpha3", "noise_scale"],
        "brownian" => &["x0", "dim", "beta"],
        "langevin" => &["x0", "dim", "friction", "beta"],
        "exp-psych" => &["x0", "lambda", "model_gamma", "beta"],
        "van-der-pol" => &["x0", "model_gamma", "lambda", "beta", "phi_scale", "noise_dim"],
        "duffing-van-der-pol" => &["x0", "alpha1", "alpha2", "alpha3", "phi_scale", "noise_dim"],
        "lotka-volterra" => &["x0", "lv_b", "lv_a", "sigma_diag"],
        "linear" => &["x0", "rate", "noise_scale"],
        "cubic" => &["x0", "noise_scale"],
        _ => &[],
    }
}

/// Construct a registry model by name with flat parameter overrides.
pub fn build_model(name: &str, params: &ModelParams) -> Result<ModelSpec> {
    let accepted = accepted_keys(name);
    if accepted.is_empty() {
        return Err(Error::Config(format!(
            "unknown model '{name}'; known models: {}",
            registry_names().join(", ")
        )));
    }
    for key in params.set_keys() {
        if !accepted.contains(&key) {
            return Err(Error::Config(format!(
                "parameter '{key}' is not used by model '{name}' (accepted: {})",
                accepted.join(", ")
            )));
        }
    }
    gallery::from_params(name, params)
}
