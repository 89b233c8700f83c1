//! One-step maps and path drivers for the stopped increment-tamed schemes.
//!
//! Every step gates on the indicator `|Y_k| <= Phi(h)`: past the threshold
//! the state is copied unchanged forever (the frozen tail is bit-identical).
//! Below it, the scheme assembles its increment argument
//!
//!   euler:    f h + g dW
//!   milstein: euler + sum_{j1,j} lg_g(j1,j) I_(j1,j)
//!   order15:  milstein + sum_j lg_f(j) dZ_j + af h^2/2
//!                      + sum_j ag(j) (h dW_j - dZ_j)
//!                      + sum_{j2,j1,j} llg(j2,j1,j) I_(j2,j1,j)
//!
//! and pushes it through the taming map. Iterated integrals are assembled
//! per noise structure: scalar noise uses the closed forms
//! `I_(1,1) = (dW^2 - h)/2` and `I_(1,1,1) = dW^3/6 - h dW/2`; commutative
//! noise uses the symmetrized pair products; additive and no-Levy-area
//! structures drop the vanishing terms.

use crate::brownian::BrownianLattice;
use crate::error::{Error, Result};
use crate::models::{ModelSpec, NoiseStructure};
use crate::params::{Scheme, SchemeParams};
use crate::taming::{phi_threshold, tame_into};

/// Per-step inputs consumed by the one-step maps.
#[derive(Debug, Clone, Copy)]
pub struct StepInputs<'a> {
    pub h: f64,
    pub dw: &'a [f64],
    /// Time integrals of the Brownian increments; required by order15.
    pub dz: Option<&'a [f64]>,
}

/// A simulated path on the uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PathResult {
    pub d: usize,
    /// (steps+1) states, flattened row-major: state k at `states[k*d..(k+1)*d]`.
    states: Vec<f64>,
    /// First grid index where |Y| exceeded the threshold, if any.
    pub tau_index: Option<usize>,
    /// Whether the stopping indicator fired.
    pub frozen: bool,
    /// Largest one-step increment norm observed before stopping.
    pub max_increment: f64,
}

impl PathResult {
    /// Wrap raw grid states from some other iteration (e.g. an untamed
    /// baseline); no stopping semantics attached.
    pub fn from_states(d: usize, states: Vec<f64>) -> Self {
        assert!(d > 0 && states.len() % d == 0 && states.len() >= d);
        let mut max_increment = 0.0f64;
        let n = states.len() / d - 1;
        for k in 0..n {
            let inc = (0..d)
                .map(|i| {
                    let diff = states[(k + 1) * d + i] - states[k * d + i];
                    diff * diff
                })
                .sum::<f64>()
                .sqrt();
            if inc > max_increment {
                max_increment = inc;
            }
        }
        PathResult { d, states, tau_index: None, frozen: false, max_increment }
    }

    pub fn len(&self) -> usize {
        self.states.len() / self.d
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn state(&self, k: usize) -> &[f64] {
        &self.states[k * self.d..(k + 1) * self.d]
    }

    pub fn terminal(&self) -> &[f64] {
        self.state(self.len() - 1)
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Scratch buffers for increment assembly; reused across steps of a path.
struct Workspace {
    z: Vec<f64>,
    f: Vec<f64>,
    g: Vec<f64>,
    vec: Vec<f64>,
    tamed: Vec<f64>,
}

impl Workspace {
    fn new(d: usize, m: usize) -> Self {
        Workspace {
            z: vec![0.0; d],
            f: vec![0.0; d],
            g: vec![0.0; d * m],
            vec: vec![0.0; d],
            tamed: vec![0.0; d],
        }
    }
}

/// Assemble the scheme's untamed increment argument into `ws.z`.
fn assemble(
    scheme: Scheme,
    y: &[f64],
    inp: &StepInputs,
    model: &ModelSpec,
    ws: &mut Workspace,
) -> Result<()> {
    let (d, m) = (model.d, model.m);
    let h = inp.h;
    debug_assert_eq!(inp.dw.len(), m);

    model.f(y, &mut ws.f);
    model.g(y, &mut ws.g);
    for i in 0..d {
        let mut acc = ws.f[i] * h;
        for j in 0..m {
            acc += ws.g[i + j * d] * inp.dw[j];
        }
        ws.z[i] = acc;
    }
    if scheme == Scheme::Euler {
        return Ok(());
    }

    // Milstein correction per noise structure.
    match model.noise {
        NoiseStructure::Additive | NoiseStructure::NoLevyArea => {}
        NoiseStructure::Scalar => {
            let i11 = 0.5 * (inp.dw[0] * inp.dw[0] - h);
            model.lg_g(0, 0, y, &mut ws.vec);
            for i in 0..d {
                ws.z[i] += ws.vec[i] * i11;
            }
        }
        NoiseStructure::Commutative => {
            for j1 in 0..m {
                for j2 in 0..m {
                    let kron = if j1 == j2 { h } else { 0.0 };
                    let coef = 0.5 * (inp.dw[j1] * inp.dw[j2] - kron);
                    model.lg_g(j2, j1, y, &mut ws.vec);
                    for i in 0..d {
                        ws.z[i] += ws.vec[i] * coef;
                    }
                }
            }
        }
        NoiseStructure::General => {
            return Err(Error::Config(format!(
                "scheme {} unsupported on general noise (model '{}')",
                scheme.name(),
                model.name
            )));
        }
    }
    if scheme == Scheme::Milstein {
        return Ok(());
    }

    // Order-1.5 extras.
    let dz = inp.dz.ok_or_else(|| {
        Error::Config("order15 stepping requires dZ increments in the lattice".into())
    })?;
    debug_assert_eq!(dz.len(), m);

    for j in 0..m {
        model.lg_f(j, y, &mut ws.vec);
        for i in 0..d {
            ws.z[i] += ws.vec[i] * dz[j];
        }
    }
    model.af(y, &mut ws.vec);
    let hh2 = 0.5 * h * h;
    for i in 0..d {
        ws.z[i] += ws.vec[i] * hh2;
    }
    match model.noise {
        NoiseStructure::Additive => {}
        NoiseStructure::Scalar => {
            let dw = inp.dw[0];
            model.ag(0, y, &mut ws.vec);
            let c_ag = h * dw - dz[0];
            for i in 0..d {
                ws.z[i] += ws.vec[i] * c_ag;
            }
            let i111 = dw * dw * dw / 6.0 - 0.5 * h * dw;
            model.llg(0, 0, 0, y, &mut ws.vec);
            for i in 0..d {
                ws.z[i] += ws.vec[i] * i111;
            }
        }
        NoiseStructure::NoLevyArea => {
            for j in 0..m {
                model.ag(j, y, &mut ws.vec);
                let c_ag = h * inp.dw[j] - dz[j];
                for i in 0..d {
                    ws.z[i] += ws.vec[i] * c_ag;
                }
            }
        }
        _ => {
            return Err(Error::Config(format!(
                "order15 unsupported on {} noise (model '{}')",
                model.noise.name(),
                model.name
            )));
        }
    }
    Ok(())
}

fn step_with(
    scheme: Scheme,
    y: &[f64],
    inp: &StepInputs,
    model: &ModelSpec,
    p: &SchemeParams,
    phi: f64,
    ws: &mut Workspace,
    out: &mut [f64],
) -> Result<f64> {
    if norm(y) > phi {
        out.copy_from_slice(y);
        return Ok(0.0);
    }
    assemble(scheme, y, inp, model, ws)?;
    if ws.z.iter().any(|v| !v.is_finite()) {
        return Err(Error::Step { step: 0, state: y.to_vec() });
    }
    tame_into(&ws.z, inp.h, p, &mut ws.tamed);
    for i in 0..out.len() {
        out[i] = y[i] + ws.tamed[i];
    }
    Ok(norm(&ws.tamed))
}

fn step_single(
    scheme: Scheme,
    y: &[f64],
    inp: &StepInputs,
    model: &ModelSpec,
    p: &SchemeParams,
) -> Result<Vec<f64>> {
    p.validate_for(scheme)?;
    model.supports(scheme)?;
    let phi = phi_threshold(inp.h, p)?;
    let mut ws = Workspace::new(model.d, model.m);
    let mut out = vec![0.0; model.d];
    step_with(scheme, y, inp, model, p, phi, &mut ws, &mut out)?;
    Ok(out)
}

/// One stopped increment-tamed Euler step.
pub fn step_euler(y: &[f64], inp: &StepInputs, model: &ModelSpec, p: &SchemeParams) -> Result<Vec<f64>> {
    step_single(Scheme::Euler, y, inp, model, p)
}

/// One stopped increment-tamed Milstein step.
pub fn step_milstein(y: &[f64], inp: &StepInputs, model: &ModelSpec, p: &SchemeParams) -> Result<Vec<f64>> {
    step_single(Scheme::Milstein, y, inp, model, p)
}

/// One stopped increment-tamed order-1.5 step.
pub fn step_order15(y: &[f64], inp: &StepInputs, model: &ModelSpec, p: &SchemeParams) -> Result<Vec<f64>> {
    step_single(Scheme::Order15, y, inp, model, p)
}

/// Drive a scheme across a whole lattice from the model's initial state.
pub fn simulate_path(
    model: &ModelSpec,
    scheme: Scheme,
    lattice: &BrownianLattice,
    p: &SchemeParams,
) -> Result<PathResult> {
    p.validate_for(scheme)?;
    model.supports(scheme)?;
    if lattice.m != model.m {
        return Err(Error::Config(format!(
            "lattice noise dimension {} does not match model '{}' (m = {})",
            lattice.m, model.name, model.m
        )));
    }
    if scheme.needs_dz() && !lattice.has_dz() {
        return Err(Error::Config("order15 needs a lattice sampled with dZ".into()));
    }
    let n = lattice.steps();
    let h = lattice.h();
    let phi = phi_threshold(h, p)?;
    let d = model.d;
    let mut states = vec![0.0; (n + 1) * d];
    states[..d].copy_from_slice(&model.x0);

    let mut ws = Workspace::new(d, model.m);
    let mut tau_index: Option<usize> = None;
    let mut max_increment = 0.0f64;

    for k in 0..n {
        let (head, tail) = states.split_at_mut((k + 1) * d);
        let y = &head[k * d..];
        let out = &mut tail[..d];
        if tau_index.is_none() && norm(y) > phi {
            tau_index = Some(k);
        }
        if tau_index.is_some() {
            out.copy_from_slice(y);
            continue;
        }
        let inp = StepInputs { h, dw: lattice.dw_at(k), dz: lattice.dz_at(k) };
        let inc = step_with(scheme, y, &inp, model, p, phi, &mut ws, out)
            .map_err(|e| match e {
                Error::Step { state, .. } => Error::Step { step: k, state },
                other => other,
            })?;
        if inc > max_increment {
            max_increment = inc;
        }
    }
    if tau_index.is_none() && norm(&states[n * d..]) > phi {
        tau_index = Some(n);
    }
    Ok(PathResult { d, states, tau_index, frozen: tau_index.is_some(), max_increment })
}
