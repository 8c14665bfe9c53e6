//! Model builders (location grids, histograms, exponential families) and the
//! dimension-bound calculators that drive penalties.

use serde::{Deserialize, Serialize};

use crate::criterion::DensityFamily;
use crate::error::{Error, Result};
use crate::measure::density::Basis1D;
use crate::measure::{product_hellinger_sq, Density1D, DensityKind, ProductDensity, QuadratureSpec};
use crate::psi::PsiKernel;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundSource {
    Finite,
    Vc,
    Entropy,
    User,
}

/// A ρ-model with its dimension bound and weight.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelDescriptor {
    pub family: DensityFamily,
    pub dim_bound: f64,
    pub bound_source: BoundSource,
    pub vc_index: Option<u32>,
    /// Where `vc_index` comes from.
    pub vc_provenance: Option<String>,
    pub delta_weight: f64,
}

impl ModelDescriptor {
    pub fn new(family: DensityFamily, dim_bound: f64, bound_source: BoundSource) -> Result<Self> {
        if !(dim_bound.is_finite() && dim_bound >= 1.0) {
            return Err(Error::contract(format!("dimension bound must be >= 1, got {dim_bound}")));
        }
        let vc_index = family.vc_index();
        Ok(ModelDescriptor {
            family,
            dim_bound,
            bound_source,
            vc_index,
            vc_provenance: None,
            delta_weight: 0.0,
        })
    }

    /// A model with the cardinality bound `9 ln(2|Q|)`.
    pub fn finite(family: DensityFamily) -> Result<Self> {
        let d = dimension_bound_finite(family.len())?;
        ModelDescriptor::new(family, d, BoundSource::Finite)
    }

    pub fn with_delta(mut self, delta: f64) -> Result<Self> {
        if !(delta.is_finite() && delta >= 0.0) {
            return Err(Error::contract("delta weight must be finite and >= 0"));
        }
        self.delta_weight = delta;
        Ok(self)
    }

    fn with_provenance(mut self, text: String) -> Self {
        self.vc_provenance = Some(text);
        self
    }
}

/// `max(1, 9 ln(2|Q|))`.
pub fn dimension_bound_finite(cardinality: usize) -> Result<f64> {
    if cardinality == 0 {
        return Err(Error::contract("cardinality must be >= 1"));
    }
    Ok((9.0 * (2.0 * cardinality as f64).ln()).max(1.0))
}

/// `max(1, min(C1 V (1 + log₊(n/V)), n/6))`.
pub fn dimension_bound_vc(vc_index: f64, n: usize, c1: f64) -> Result<f64> {
    if !(vc_index >= 1.0 && vc_index.is_finite()) {
        return Err(Error::contract("VC index must be >= 1"));
    }
    if !(c1 > 0.0 && c1.is_finite()) {
        return Err(Error::contract("C1 must be > 0"));
    }
    if n == 0 {
        return Err(Error::contract("n must be >= 1"));
    }
    let n = n as f64;
    if vc_index > n {
        log::warn!("VC index {vc_index} exceeds n = {n}; the bound is clamped to n/6");
    }
    let log_plus = (n / vc_index).ln().max(0.0);
    Ok((c1 * vc_index * (1.0 + log_plus)).min(n / 6.0).max(1.0))
}

/// `18 max(1, V ln2 / 2)`.
pub fn dimension_bound_entropy(v: f64) -> Result<f64> {
    if !(v >= 0.0 && v.is_finite()) {
        return Err(Error::contract("entropy dimension must be >= 0"));
    }
    Ok(18.0 * (v * std::f64::consts::LN_2 / 2.0).max(1.0))
}

fn snap(x: f64) -> f64 {
    let s = (x * 1e12).round() / 1e12;
    if s == 0.0 {
        0.0
    } else {
        s
    }
}

/// Equally spaced values `min, min + step, ...` up to `max` (inclusive up to
/// rounding), snapped to 12 decimals.
pub fn grid_values(min: f64, max: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && step.is_finite() && min.is_finite() && max.is_finite()) {
        return Err(Error::contract("grid needs finite bounds and step > 0"));
    }
    if !(min <= max) {
        return Err(Error::contract("grid needs min <= max"));
    }
    let count = ((max - min) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|k| snap(min + k as f64 * step)).collect())
}

/// i.i.d. `N(θ, sd²)` for `θ` on a grid, VC index 3.
pub fn build_gaussian_location_grid(
    theta_min: f64,
    theta_max: f64,
    step: f64,
    sd: f64,
    n: usize,
    c1: f64,
) -> Result<ModelDescriptor> {
    if !(theta_min < theta_max) {
        return Err(Error::contract("grid needs theta_min < theta_max"));
    }
    let thetas = grid_values(theta_min, theta_max, step)?;
    let entries = thetas
        .iter()
        .map(|t| Ok(ProductDensity::iid(Density1D::gaussian(*t, sd)?, n)))
        .collect::<Result<Vec<_>>>()?;
    let family = DensityFamily::new(entries)?
        .with_params(thetas.iter().map(|t| vec![*t]).collect())?
        .with_vc_index(3);
    let d = dimension_bound_vc(3.0, n, c1)?;
    Ok(ModelDescriptor::new(family, d, BoundSource::Vc)?
        .with_provenance("one-parameter exponential family: J + 2 with J = 1".into()))
}

/// Same grid written with the singular representation against the standard
/// Gaussian base measure.
pub fn build_pathological_grid(theta_min: f64, theta_max: f64, step: f64, n: usize, c1: f64) -> Result<ModelDescriptor> {
    let thetas = grid_values(theta_min, theta_max, step)?;
    let entries = thetas
        .iter()
        .map(|t| Ok(ProductDensity::iid(Density1D::pathological_gaussian(*t)?, n)))
        .collect::<Result<Vec<_>>>()?;
    let family = DensityFamily::new(entries)?
        .with_params(thetas.iter().map(|t| vec![*t]).collect())?
        .with_vc_index(3);
    let d = dimension_bound_vc(3.0, n, c1)?;
    Ok(ModelDescriptor::new(family, d, BoundSource::Vc)?
        .with_provenance("one-parameter exponential family: J + 2 with J = 1".into()))
}

/// A histogram candidate: breakpoints and heights.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistogramSpec {
    pub breakpoints: Vec<f64>,
    pub heights: Vec<f64>,
}

/// All compositions of `divisions` into `bins` parts, divided by `divisions`.
pub fn simplex_grid(bins: usize, divisions: usize) -> Vec<Vec<f64>> {
    fn rec(left: usize, bins: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if bins == 1 {
            prefix.push(left);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for take in 0..=left {
            prefix.push(take);
            rec(left - take, bins - 1, prefix, out);
            prefix.pop();
        }
    }
    if bins == 0 || divisions == 0 {
        return Vec::new();
    }
    let mut raw = Vec::new();
    rec(divisions, bins, &mut Vec::new(), &mut raw);
    raw.into_iter()
        .map(|c| c.into_iter().map(|v| v as f64 / divisions as f64).collect())
        .collect()
}

/// Histograms on fixed breakpoints whose bin masses run over a simplex grid.
pub fn histogram_candidates(breakpoints: &[f64], divisions: usize) -> Vec<HistogramSpec> {
    let widths: Vec<f64> = breakpoints.windows(2).map(|w| w[1] - w[0]).collect();
    simplex_grid(widths.len(), divisions)
        .into_iter()
        .map(|masses| HistogramSpec {
            breakpoints: breakpoints.to_vec(),
            heights: masses.iter().zip(&widths).map(|(m, w)| m / w).collect(),
        })
        .collect()
}

/// Family of piecewise-constant densities with at most `k` pieces, VC index `2k + 1`.
pub fn build_histogram_family(candidates: &[HistogramSpec], k: usize, n: usize, c1: f64) -> Result<ModelDescriptor> {
    if k == 0 {
        return Err(Error::contract("k must be >= 1"));
    }
    let entries = candidates
        .iter()
        .map(|h| {
            if h.heights.len() > k {
                return Err(Error::contract(format!("histogram has {} pieces, more than k = {k}", h.heights.len())));
            }
            Ok(ProductDensity::iid(
                Density1D::histogram(h.breakpoints.clone(), h.heights.clone())?,
                n,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let vc = 2 * k as u32 + 1;
    let family = DensityFamily::new(entries)?
        .with_params(candidates.iter().map(|h| h.heights.clone()).collect())?
        .with_vc_index(vc);
    let d = dimension_bound_vc(vc as f64, n, c1)?;
    Ok(ModelDescriptor::new(family, d, BoundSource::Vc)?
        .with_provenance(format!("piecewise constant with k = {k} pieces: 2k + 1")))
}

/// An exponential-family grid and the coefficient vectors that were dropped.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpFamilyBuild {
    pub model: ModelDescriptor,
    /// `(index in the coefficient grid, diagnostic)`
    pub rejected: Vec<(usize, String)>,
}

/// Normalized `exp(Σ β_j g_j − log Z(β))` for every coefficient vector;
/// VC index `J + 2`. Non-integrable coefficient vectors are dropped and reported.
pub fn build_exp_family_grid(
    basis: &[Basis1D],
    coefficient_grid: &[Vec<f64>],
    lower: Option<f64>,
    upper: Option<f64>,
    n: usize,
    c1: f64,
) -> Result<ExpFamilyBuild> {
    let mut entries = Vec::new();
    let mut params = Vec::new();
    let mut rejected = Vec::new();
    for (i, beta) in coefficient_grid.iter().enumerate() {
        let kind = DensityKind::ExpFamily {
            basis: basis.to_vec(),
            coefficients: beta.clone(),
            lower,
            upper,
        };
        match Density1D::new(kind) {
            Ok(d) => {
                entries.push(ProductDensity::iid(d, n));
                params.push(beta.clone());
            }
            Err(e @ Error::DivergentNormalizer(_)) => rejected.push((i, e.to_string())),
            Err(e) => return Err(e),
        }
    }
    if entries.is_empty() {
        return Err(Error::DivergentNormalizer("every coefficient vector was rejected".into()));
    }
    let vc = basis.len() as u32 + 2;
    let family = DensityFamily::new(entries)?.with_params(params)?.with_vc_index(vc);
    let d = dimension_bound_vc(vc as f64, n, c1)?;
    let model = ModelDescriptor::new(family, d, BoundSource::Vc)?
        .with_provenance(format!("exponential family with J = {} basis functions: J + 2", basis.len()));
    Ok(ExpFamilyBuild { model, rejected })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EtaBar {
    pub value: f64,
    pub x0: f64,
    /// `3 √(ln(2|Q|))`
    pub ceiling: f64,
    /// The sup over all centres is replaced by a finite pool, so `value`
    /// is a lower bound.
    pub centre_pool_size: usize,
}

/// `x0 = √2 (√(1 + β/a2) + 1)`.
pub fn eta_x0(k: &PsiKernel) -> f64 {
    std::f64::consts::SQRT_2 * ((1.0 + k.beta / k.a2()).sqrt() + 1.0)
}

/// `η̄ = sup{z > 0 : √ℋ(z/β) > z/x0}` where
/// `ℋ(y) = max_P log₊(2 |{Q : 𝐡(P, Q) ≤ y}|)` over the centre pool.
///
/// `ℋ` is a step function of `y`, so the supremum is found exactly from the
/// sorted distances rather than by bisection.
pub fn eta_bar_finite(
    fam: &DensityFamily,
    k: &PsiKernel,
    centre_pool: &DensityFamily,
    quad: &QuadratureSpec,
) -> Result<EtaBar> {
    let x0 = eta_x0(k);
    let ceiling = 3.0 * (2.0 * fam.len() as f64).ln().sqrt();
    let mut per_centre: Vec<Vec<f64>> = Vec::with_capacity(centre_pool.len());
    for p in centre_pool.entries() {
        let mut d = fam
            .entries()
            .iter()
            .map(|q| Ok(product_hellinger_sq(p, q, quad)?.sqrt()))
            .collect::<Result<Vec<f64>>>()?;
        d.sort_by(f64::total_cmp);
        per_centre.push(d);
    }
    let mut levels: Vec<f64> = per_centre.iter().flatten().copied().collect();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    let count_at = |y: f64| {
        per_centre
            .iter()
            .map(|d| d.partition_point(|v| *v <= y))
            .max()
            .unwrap_or(0)
    };
    let mut value: f64 = 0.0;
    for (j, &lo) in levels.iter().enumerate() {
        let c = count_at(lo);
        let reach = x0 * (2.0 * c as f64).ln().sqrt();
        let start = k.beta * lo;
        let end = levels.get(j + 1).map_or(f64::INFINITY, |hi| k.beta * hi);
        if start < reach && reach > 0.0 {
            value = value.max(end.min(reach));
        }
    }
    Ok(EtaBar {
        value,
        x0,
        ceiling,
        centre_pool_size: centre_pool.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::psi::{kernel_constants, PsiId};

    #[test]
    fn bound_arithmetic() {
        assert!((dimension_bound_finite(1).unwrap() - 9.0 * 2f64.ln()).abs() < 1e-15);
        assert!(dimension_bound_finite(1).unwrap() < 6.3);
        assert!((dimension_bound_finite(8).unwrap() - 24.953).abs() < 1e-3);
        assert!((dimension_bound_vc(3.0, 300, 1.0).unwrap() - 3.0 * (1.0 + 100f64.ln())).abs() < 1e-12);
        assert_eq!(dimension_bound_vc(3.0, 12, 100.0).unwrap(), 2.0);
        assert_eq!(dimension_bound_vc(60.0, 60, 1.0).unwrap(), 10.0);
        assert_eq!(dimension_bound_entropy(0.0).unwrap(), 18.0);
        assert!((dimension_bound_entropy(2.0 / 2f64.ln()).unwrap() - 18.0).abs() < 1e-12);
        assert!((dimension_bound_entropy(10.0).unwrap() - 90.0 * 2f64.ln()).abs() < 1e-12);
        assert!(dimension_bound_vc(10.0, 5, 1.0).unwrap() >= 1.0);
    }

    #[test]
    fn gaussian_grid_shape() {
        let m = build_gaussian_location_grid(-1.0, 1.0, 1.0, 1.0, 10, 1.0).unwrap();
        assert_eq!(m.family.len(), 3);
        assert_eq!(m.vc_index, Some(3));
        let m = build_gaussian_location_grid(-2.0, 2.0, 0.01, 1.0, 600, 1.0).unwrap();
        assert_eq!(m.family.len(), 401);
        assert_eq!(m.family.params(200).unwrap(), &[0.0]);
        let want = (3.0 * (1.0 + (600.0f64 / 3.0).ln())).min(100.0);
        assert!((m.dim_bound - want).abs() < 1e-12);
    }

    #[test]
    fn histogram_builders() {
        let single = build_histogram_family(
            &[HistogramSpec {
                breakpoints: vec![0.0, 1.0],
                heights: vec![1.0],
            }],
            1,
            5,
            1.0,
        )
        .unwrap();
        assert_eq!(single.family.len(), 1);
        let cands = histogram_candidates(&[0.0, 0.5, 1.0], 4);
        assert_eq!(cands.len(), 5);
        let m = build_histogram_family(&cands, 2, 50, 1.0).unwrap();
        assert_eq!(m.family.len(), 5);
        assert_eq!(m.vc_index, Some(5));
        let three = build_histogram_family(&histogram_candidates(&[0.0, 1.0, 2.0, 3.0], 3), 3, 50, 1.0).unwrap();
        assert_eq!(three.vc_index, Some(7));
        assert!(build_histogram_family(&cands, 1, 50, 1.0).is_err());
        let bad = HistogramSpec {
            breakpoints: vec![0.0, 1.0],
            heights: vec![0.9],
        };
        assert!(build_histogram_family(&[bad], 1, 5, 1.0).is_err());
    }

    #[test]
    fn exp_family_grid_rejects_divergent_entries() {
        let build = build_exp_family_grid(
            &[Basis1D::Power(1), Basis1D::Power(2)],
            &[vec![0.0, -0.5], vec![0.0, 0.5], vec![1.0, -0.5]],
            None,
            None,
            10,
            1.0,
        )
        .unwrap();
        assert_eq!(build.model.family.len(), 2);
        assert_eq!(build.model.vc_index, Some(4));
        assert_eq!(build.rejected.len(), 1);
        assert_eq!(build.rejected[0].0, 1);
    }

    #[test]
    fn eta_bar_singleton_and_ceiling() {
        let k = kernel_constants(PsiId::Psi2);
        let one = build_gaussian_location_grid(0.0, 0.5, 1.0, 1.0, 20, 1.0).unwrap().family;
        let e = eta_bar_finite(&one, &k, &one, &QuadratureSpec::default()).unwrap();
        assert!((e.value - eta_x0(&k) * 2f64.ln().sqrt()).abs() < 1e-12);
        let fam = build_gaussian_location_grid(-2.0, 2.0, 0.25, 1.0, 20, 1.0).unwrap().family;
        let e = eta_bar_finite(&fam, &k, &fam, &QuadratureSpec::default()).unwrap();
        assert!(e.value <= e.ceiling);
        assert!(e.value > 0.0);
    }
}
