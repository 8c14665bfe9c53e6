//! JSON config files, one shape per subcommand.

use serde::Deserialize;

use rho_core::harness::{EstimatorConfig, FamilySpec, Scenario};
use rho_core::measure::{BasisFn, Density1D, Sample};

fn one() -> f64 {
    1.0
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    pub sample: Sample,
    pub family: FamilySpec,
    #[serde(default = "one")]
    pub slack_multiplier: f64,
}

/// How a model's dimension bound is obtained.
#[derive(Debug, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum BoundSpec {
    Finite,
    Vc { index: f64 },
    Entropy { dim: f64 },
    User { value: f64 },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub family: FamilySpec,
    pub bound: BoundSpec,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectConfig {
    pub sample: Sample,
    pub models: Vec<ModelSpec>,
    /// `Δ` per model; `ln |M|` for every model when absent.
    #[serde(default)]
    pub weights: Option<Vec<f64>>,
    #[serde(default = "one")]
    pub slack_multiplier: f64,
    /// `ξ` in the reported risk bound.
    #[serde(default = "one")]
    pub xi: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AggregateConfig {
    pub sample: Sample,
    pub candidates: Vec<Density1D>,
    #[serde(default)]
    pub eps: Option<f64>,
    #[serde(default)]
    pub max_outer: Option<usize>,
}

/// Coefficient grid: explicit vectors or a one-dimensional range.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    Range { min: f64, max: f64, step: f64 },
    Explicit(Vec<Vec<f64>>),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionFamily {
    pub basis: Vec<BasisFn>,
    pub grid: GridSpec,
    /// VC index of the family; `len(basis) + 2` when absent.
    #[serde(default)]
    pub vc_index: Option<u32>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegressConfig {
    pub sample: Sample,
    pub error_models: Vec<Density1D>,
    pub function_families: Vec<FunctionFamily>,
    /// `Δ` per (error model, function family) pair, error model major.
    #[serde(default)]
    pub weights: Option<Vec<f64>>,
    #[serde(default = "one")]
    pub slack_multiplier: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    pub scenario: Scenario,
    pub estimator: EstimatorConfig,
    /// Law the loss is measured against; the i.i.d. law or the contamination
    /// centre when absent.
    #[serde(default)]
    pub loss_reference: Option<Density1D>,
    #[serde(default)]
    pub bound_reference: Option<f64>,
}
