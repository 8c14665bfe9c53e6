//! Monte Carlo experiments: scenarios, risk estimation, the likelihood
//! counterexample and report export.

pub mod export;
pub mod mle;
pub mod risk;
pub mod scenario;

pub use export::{to_csv, to_json, write_report, ExportFormat};
pub use mle::{mle_counterexample, MleReport};
pub use risk::{fit_estimator, mc_risk, EstimatorConfig, FamilySpec, RiskReport};
pub use scenario::{rng_for, simulate, simulate_replicate, Scenario, Truth};
