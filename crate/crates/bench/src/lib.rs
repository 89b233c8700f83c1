//! Shared fixtures for the benchmark targets.

use sitem_core::{build_model, ModelParams, ModelSpec};

pub fn model(name: &str) -> ModelSpec {
    build_model(name, &ModelParams::default()).expect("registry model")
}
