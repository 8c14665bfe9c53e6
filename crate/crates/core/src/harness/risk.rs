use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::scenario::{simulate_replicate, Scenario};
use crate::criterion::{rho_estimate, DensityFamily, Penalty};
use crate::error::{Error, Result};
use crate::measure::{hellinger_sq, Density1D, ProductDensity, QuadratureSpec, Sample};
use crate::psi::{kernel_constants, PsiId};
use crate::zoo::grid_values;

/// Finite family fitted by the ρ-estimator in a risk study.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum FamilySpec {
    GaussianGrid { min: f64, max: f64, step: f64, sd: f64 },
    PathologicalGrid { min: f64, max: f64, step: f64 },
    Densities { densities: Vec<Density1D> },
}

impl FamilySpec {
    pub fn marginals(&self) -> Result<Vec<Density1D>> {
        match self {
            FamilySpec::GaussianGrid { min, max, step, sd } => grid_values(*min, *max, *step)?
                .into_iter()
                .map(|t| Density1D::gaussian(t, *sd))
                .collect(),
            FamilySpec::PathologicalGrid { min, max, step } => grid_values(*min, *max, *step)?
                .into_iter()
                .map(Density1D::pathological_gaussian)
                .collect(),
            FamilySpec::Densities { densities } if densities.is_empty() => Err(Error::EmptyFamily),
            FamilySpec::Densities { densities } => Ok(densities.clone()),
        }
    }

    pub fn family(&self, n: usize) -> Result<DensityFamily> {
        DensityFamily::new(
            self.marginals()?
                .into_iter()
                .map(|d| ProductDensity::iid(d, n))
                .collect(),
        )
    }
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum EstimatorConfig {
    /// Unpenalized ρ-estimator over a finite family.
    Rho {
        family: FamilySpec,
        #[serde(default)]
        psi: PsiId,
        #[serde(default = "one")]
        slack_multiplier: f64,
    },
    /// `N(X̄, sd²)`, or `N(X̄, S²)` with the sample variance when `sd` is absent.
    GaussianPlugIn {
        #[serde(default)]
        sd: Option<f64>,
    },
}

enum Prepared {
    Rho {
        family: DensityFamily,
        marginals: Vec<Density1D>,
        psi: PsiId,
        slack_multiplier: f64,
    },
    Plug(Option<f64>),
}

impl Prepared {
    fn new(cfg: &EstimatorConfig, n: usize) -> Result<Self> {
        Ok(match cfg {
            EstimatorConfig::Rho {
                family,
                psi,
                slack_multiplier,
            } => {
                if !(*slack_multiplier >= 0.0 && slack_multiplier.is_finite()) {
                    return Err(Error::Config("slack multiplier must be finite and >= 0".into()));
                }
                Prepared::Rho {
                    family: family.family(n)?,
                    marginals: family.marginals()?,
                    psi: *psi,
                    slack_multiplier: *slack_multiplier,
                }
            }
            EstimatorConfig::GaussianPlugIn { sd } => {
                if sd.is_some_and(|s| !(s > 0.0 && s.is_finite())) {
                    return Err(Error::Config("sd must be > 0".into()));
                }
                Prepared::Plug(*sd)
            }
        })
    }

    fn fit(&self, x: &Sample) -> Result<Density1D> {
        match self {
            Prepared::Rho {
                family,
                marginals,
                psi,
                slack_multiplier,
            } => {
                let k = kernel_constants(*psi);
                let fit = rho_estimate(x, family, &Penalty::zero(family.len()), &k, Some(slack_multiplier * k.kappa / 25.0))?;
                Ok(marginals[fit.chosen_index].clone())
            }
            Prepared::Plug(sd) => {
                let xs = x
                    .scalars()
                    .ok_or_else(|| Error::contract("plug-in estimator needs scalar observations"))?;
                let n = xs.len() as f64;
                let mean = xs.iter().sum::<f64>() / n;
                let sd = match sd {
                    Some(s) => *s,
                    None if xs.len() > 1 => (xs.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt(),
                    None => return Err(Error::contract("sample variance needs n >= 2")),
                };
                Density1D::gaussian(mean, sd)
            }
        }
    }
}

/// Fits `cfg` to a scalar sample and returns the estimated marginal.
pub fn fit_estimator(x: &Sample, cfg: &EstimatorConfig) -> Result<Density1D> {
    Prepared::new(cfg, x.n())?.fit(x)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplicateLoss {
    pub replicate: usize,
    pub h2: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplicateFailure {
    pub replicate: usize,
    pub error: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RiskReport {
    pub mean_h2: f64,
    pub median_h2: f64,
    pub stderr: f64,
    pub per_replicate: Vec<ReplicateLoss>,
    pub failures: Vec<ReplicateFailure>,
    pub bound_reference: Option<f64>,
}

fn median(sorted: &[f64]) -> f64 {
    let m = sorted.len();
    if m == 0 {
        f64::NAN
    } else if m % 2 == 1 {
        sorted[m / 2]
    } else {
        0.5 * (sorted[m / 2 - 1] + sorted[m / 2])
    }
}

impl RiskReport {
    fn from_losses(per_replicate: Vec<ReplicateLoss>, failures: Vec<ReplicateFailure>, bound_reference: Option<f64>) -> Self {
        let m = per_replicate.len() as f64;
        let mean_h2 = per_replicate.iter().map(|r| r.h2).sum::<f64>() / m;
        let var = if per_replicate.len() > 1 {
            per_replicate.iter().map(|r| (r.h2 - mean_h2).powi(2)).sum::<f64>() / (m - 1.0)
        } else {
            0.0
        };
        let mut sorted: Vec<f64> = per_replicate.iter().map(|r| r.h2).collect();
        sorted.sort_by(f64::total_cmp);
        RiskReport {
            mean_h2,
            median_h2: median(&sorted),
            stderr: (var / m).sqrt(),
            per_replicate,
            failures,
            bound_reference,
        }
    }

    /// Median of `scale · h²` over the successful replicates.
    pub fn scaled_median(&self, scale: f64) -> f64 {
        let mut v: Vec<f64> = self.per_replicate.iter().map(|r| scale * r.h2).collect();
        v.sort_by(f64::total_cmp);
        median(&v)
    }
}

/// Monte Carlo estimate of `E h²(loss_reference, P̂)`. Replicates whose fit
/// fails are recorded and left out of the averages.
pub fn mc_risk(
    scenario: &Scenario,
    estimator: &EstimatorConfig,
    loss_reference: &Density1D,
    quad: &QuadratureSpec,
    bound_reference: Option<f64>,
) -> Result<RiskReport> {
    scenario.validate()?;
    let prepared = Prepared::new(estimator, scenario.n)?;
    let outcomes: Vec<std::result::Result<f64, String>> = (0..scenario.replications)
        .into_par_iter()
        .map(|r| {
            let x = simulate_replicate(scenario, r).map_err(|e| e.to_string())?;
            let est = prepared.fit(&x).map_err(|e| e.to_string())?;
            hellinger_sq(loss_reference, &est, quad).map_err(|e| e.to_string())
        })
        .collect();
    let mut losses = Vec::new();
    let mut failures = Vec::new();
    for (replicate, o) in outcomes.into_iter().enumerate() {
        match o {
            Ok(h2) => losses.push(ReplicateLoss { replicate, h2 }),
            Err(error) => {
                log::warn!("replicate {replicate} failed: {error}");
                failures.push(ReplicateFailure { replicate, error });
            }
        }
    }
    if losses.is_empty() {
        return Err(Error::Config("every replicate failed".into()));
    }
    Ok(RiskReport::from_losses(losses, failures, bound_reference))
}
