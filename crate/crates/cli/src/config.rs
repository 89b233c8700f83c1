//! Flat JSON run configuration. Flags override config values, config values
//! override built-in defaults; unknown keys are rejected.

use anyhow::{bail, Context, Result};
use serde::Deserialize;
use std::path::Path;

use sitem_core::ModelParams;

/// Every recognized key of the flat config object. Run keys and model
/// parameter keys share one namespace; which model keys apply is checked by
/// the model registry.
#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    // run keys
    pub model: Option<String>,
    pub scheme: Option<String>,
    pub t_final: Option<f64>,
    pub levels: Option<String>,
    pub ref_level: Option<u32>,
    pub paths: Option<u64>,
    pub seed: Option<u64>,
    pub level: Option<u32>,
    pub path_index: Option<u64>,
    pub threads: Option<usize>,
    pub out: Option<String>,
    pub svg: Option<String>,
    pub samples: Option<usize>,
    pub eps: Option<f64>,
    pub tol: Option<f64>,
    // taming parameters
    pub delta: Option<f64>,
    pub theta: Option<f64>,
    pub gamma1: Option<f64>,
    pub gamma2: Option<f64>,
    pub gamma3: Option<f64>,
    // model parameters (flat, documented per model)
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

impl FileConfig {
    pub fn load(path: &Path) -> Result<FileConfig> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let cfg: FileConfig = serde_json::from_str(&text)
            .with_context(|| format!("invalid config {}", path.display()))?;
        Ok(cfg)
    }

    pub fn model_params(&self) -> ModelParams {
        ModelParams {
            x0: self.x0.clone(),
            alpha1: self.alpha1,
            alpha2: self.alpha2,
            alpha3: self.alpha3,
            noise_scale: self.noise_scale,
            beta: self.beta,
            friction: self.friction,
            lambda: self.lambda,
            model_gamma: self.model_gamma,
            phi_scale: self.phi_scale,
            noise_dim: self.noise_dim,
            dim: self.dim,
            rate: self.rate,
            lv_b: self.lv_b.clone(),
            lv_a: self.lv_a.clone(),
            sigma_diag: self.sigma_diag.clone(),
        }
    }
}

/// Inclusive dyadic level range `a:b`.
pub fn parse_levels(spec: &str) -> Result<Vec<u32>> {
    let (a, b) = spec
        .split_once(':')
        .with_context(|| format!("levels must be 'a:b' (inclusive), got '{spec}'"))?;
    let a: u32 = a.trim().parse().with_context(|| format!("bad level '{a}'"))?;
    let b: u32 = b.trim().parse().with_context(|| format!("bad level '{b}'"))?;
    if a > b {
        bail!("levels range '{spec}' is empty (need a <= b)");
    }
    if b > 30 {
        bail!("level {b} too fine (max 30)");
    }
    Ok((a..=b).collect())
}
