//! Penalized ρ-estimation over a weighted collection of models.

use serde::{Deserialize, Serialize};

use crate::criterion::{rho_estimate, DensityFamily, Penalty, RhoFit};
use crate::error::{Error, Result};
use crate::measure::Sample;
use crate::psi::PsiKernel;
use crate::zoo::ModelDescriptor;

/// Slack allowed on `Σ e^{−Δ} ≤ 1`.
pub const WEIGHT_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModelCollection {
    models: Vec<ModelDescriptor>,
    kernel: PsiKernel,
    /// `κ` used for penalties and slack; the kernel's value times a multiplier.
    kappa: f64,
    union: DensityFamily,
    membership: Vec<Vec<usize>>,
}

/// Sets `Δ = ln |M|` on every model.
pub fn uniform_deltas(models: &mut [ModelDescriptor]) {
    let d = (models.len() as f64).ln();
    for m in models {
        m.delta_weight = d;
    }
}

impl ModelCollection {
    pub fn new(models: Vec<ModelDescriptor>, kernel: PsiKernel) -> Result<Self> {
        if models.is_empty() {
            return Err(Error::EmptyFamily);
        }
        if models.iter().any(|m| !(m.delta_weight.is_finite() && m.delta_weight >= 0.0)) {
            return Err(Error::contract("delta weights must be finite and >= 0"));
        }
        let sum: f64 = models.iter().map(|m| (-m.delta_weight).exp()).sum();
        if sum > 1.0 + WEIGHT_TOLERANCE {
            return Err(Error::InvalidWeights { sum });
        }
        let fams: Vec<&DensityFamily> = models.iter().map(|m| &m.family).collect();
        let (union, membership) = DensityFamily::union(&fams)?;
        Ok(ModelCollection {
            models,
            kernel,
            kappa: kernel.kappa,
            union,
            membership,
        })
    }

    /// Scale `κ` (penalties and default slack) by `multiplier`.
    pub fn with_kappa_multiplier(mut self, multiplier: f64) -> Result<Self> {
        if !(multiplier > 0.0 && multiplier.is_finite()) {
            return Err(Error::contract("kappa multiplier must be > 0"));
        }
        self.kappa = self.kernel.kappa * multiplier;
        Ok(self)
    }

    pub fn models(&self) -> &[ModelDescriptor] {
        &self.models
    }

    pub fn kernel(&self) -> &PsiKernel {
        &self.kernel
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// Union of all model families, duplicates merged.
    pub fn union(&self) -> &DensityFamily {
        &self.union
    }

    /// Union indices of the entries of model `m`.
    pub fn members(&self, m: usize) -> &[usize] {
        &self.membership[m]
    }

    /// Models whose family contains union entry `entry`.
    pub fn models_containing(&self, entry: usize) -> Vec<usize> {
        (0..self.models.len())
            .filter(|&m| self.membership[m].contains(&entry))
            .collect()
    }

    fn complexity(&self, m: usize) -> f64 {
        self.models[m].dim_bound / 4.7 + self.models[m].delta_weight
    }

    pub fn penalties(&self) -> Result<Penalty> {
        Penalty::new(
            (0..self.union.len())
                .map(|i| penalty_for(self, i))
                .collect::<Result<Vec<_>>>()?,
        )
    }
}

/// `κ · min over models containing the entry of [D/4.7 + Δ]`.
pub fn penalty_for(coll: &ModelCollection, entry: usize) -> Result<f64> {
    coll.models_containing(entry)
        .into_iter()
        .map(|m| coll.kappa * coll.complexity(m))
        .reduce(f64::min)
        .ok_or_else(|| Error::contract(format!("entry {entry} belongs to no model")))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub fit: RhoFit,
    /// Models containing the chosen entry, by increasing `D/4.7 + Δ`.
    pub selected_models: Vec<usize>,
}

/// ρ-estimation on the union family with the collection penalties; the slack
/// is `slack_multiplier · κ/25`.
pub fn select(x: &Sample, coll: &ModelCollection, slack_multiplier: f64) -> Result<Selection> {
    if !(slack_multiplier >= 0.0 && slack_multiplier.is_finite()) {
        return Err(Error::contract("slack multiplier must be finite and >= 0"));
    }
    let pen = coll.penalties()?;
    let fit = rho_estimate(x, &coll.union, &pen, &coll.kernel, Some(slack_multiplier * coll.kappa / 25.0))?;
    let mut selected_models = coll.models_containing(fit.chosen_index);
    selected_models.sort_by(|a, b| coll.complexity(*a).total_cmp(&coll.complexity(*b)).then(a.cmp(b)));
    Ok(Selection { fit, selected_models })
}

/// Deterministic part of the risk bound for model `m`:
/// `(4κ/a1)(D_m/4.7 + Δ_m + 1.5 + ξ)` with the kernel's theoretical `κ`.
pub fn risk_bound_report(coll: &ModelCollection, m: usize, xi: f64) -> Result<f64> {
    if !(xi > 0.0) {
        return Err(Error::contract("xi must be > 0"));
    }
    let model = coll
        .models
        .get(m)
        .ok_or_else(|| Error::contract(format!("no model {m}")))?;
    let k = &coll.kernel;
    Ok(4.0 * k.kappa / k.a1 * (model.dim_bound / 4.7 + model.delta_weight + 1.5 + xi))
}

/// The bound plus `γ · bias` for a known squared distance from the truth to the model.
pub fn risk_bound_with_bias(coll: &ModelCollection, m: usize, xi: f64, bias_h2: f64) -> Result<f64> {
    if !(bias_h2 >= 0.0) {
        return Err(Error::contract("bias must be >= 0"));
    }
    Ok(risk_bound_report(coll, m, xi)? + coll.kernel.gamma * bias_h2)
}
