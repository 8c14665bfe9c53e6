//! Random-design regression with models `q_{r,g}(w, y) = r(y − g(w))`.

use serde::{Deserialize, Serialize};

use crate::criterion::{DensityFamily, RhoFit};
use crate::error::{Error, Result};
use crate::measure::{hellinger_sq, BasisFn, Density1D, Marginal, ProductDensity, QuadratureSpec, RegressionFunction, Sample};
use crate::psi::PsiKernel;
use crate::selection::{select, ModelCollection};
use crate::zoo::{dimension_bound_vc, grid_values, BoundSource, ModelDescriptor};

/// VC-index inflation from the function class to the regression model.
pub const REGRESSION_VC_FACTOR: f64 = 9.41;

/// One model `m = (r, F)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegressionModel {
    pub error: Density1D,
    pub functions: Vec<RegressionFunction>,
    pub vc_index_f: u32,
    #[serde(default)]
    pub delta_weight: f64,
    /// Multiplier on the VC index for error densities with several modes.
    #[serde(default = "one")]
    pub vc_multiplier: f64,
}

fn one() -> f64 {
    1.0
}

impl RegressionModel {
    pub fn new(error: Density1D, functions: Vec<RegressionFunction>, vc_index_f: u32) -> Result<Self> {
        if functions.is_empty() {
            return Err(Error::EmptyFamily);
        }
        if vc_index_f == 0 {
            return Err(Error::contract("VC index of F must be >= 1"));
        }
        Ok(RegressionModel {
            error,
            functions,
            vc_index_f,
            delta_weight: 0.0,
            vc_multiplier: 1.0,
        })
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta_weight = delta;
        self
    }

    /// `V̄_m = 9.41 · c(r) · V̄(F)`.
    pub fn vc_index(&self) -> f64 {
        REGRESSION_VC_FACTOR * self.vc_multiplier * self.vc_index_f as f64
    }
}

/// `θ · b(w)` for `θ` on a grid, over a single basis function.
pub fn coefficient_grid_functions(basis: BasisFn, min: f64, max: f64, step: f64) -> Result<Vec<RegressionFunction>> {
    Ok(grid_values(min, max, step)?
        .into_iter()
        .map(|t| RegressionFunction {
            basis: vec![basis.clone()],
            coefficients: vec![t],
        })
        .collect())
}

/// VC index of the linear span of `d` functions: `d + 2`.
pub fn linear_span_vc_index(d: usize) -> u32 {
    d as u32 + 2
}

/// One model per `(r, F)` with entries `r(y − g(w))`, `g ∈ F`, and dimension
/// bound from the VC index `9.41 · V̄(F)`.
pub fn build_regression_family(models: &[RegressionModel], n: usize, kernel: PsiKernel, c1: f64) -> Result<ModelCollection> {
    let descriptors = models
        .iter()
        .map(|m| {
            if !m.error.is_unimodal() && m.vc_multiplier == 1.0 {
                log::warn!("error density {} is not declared unimodal; consider a VC multiplier", m.error.key());
            }
            if !(m.vc_multiplier >= 1.0 && m.vc_multiplier.is_finite()) {
                return Err(Error::contract("VC multiplier must be >= 1"));
            }
            let entries = m
                .functions
                .iter()
                .map(|g| {
                    ProductDensity::iid(
                        Marginal::Regression {
                            error: m.error.clone(),
                            func: g.clone(),
                        },
                        n,
                    )
                })
                .collect();
            let params = m.functions.iter().map(|g| g.coefficients.clone()).collect();
            let vc = m.vc_index();
            let family = DensityFamily::new(entries)?.with_params(params)?;
            let d = dimension_bound_vc(vc, n, c1)?;
            let mut desc = ModelDescriptor::new(family, d, BoundSource::Vc)?.with_delta(m.delta_weight)?;
            desc.vc_provenance = Some(format!("9.41 x V(F) with V(F) = {}", m.vc_index_f));
            Ok(desc)
        })
        .collect::<Result<Vec<_>>>()?;
    ModelCollection::new(descriptors, kernel)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegressionFit {
    pub f_hat: RegressionFunction,
    pub s_hat: Density1D,
    /// Models containing the chosen entry, least complex first.
    pub selected_models: Vec<usize>,
    pub fit: RhoFit,
}

/// Penalized ρ-estimation over the collection, decoded into `(ŝ, f̂)`.
pub fn fit_regression(x: &Sample, coll: &ModelCollection, slack_multiplier: f64) -> Result<RegressionFit> {
    if x.is_scalar() {
        return Err(Error::contract("regression needs a sample of (w, y) pairs"));
    }
    let sel = select(x, coll, slack_multiplier)?;
    match coll.union().entry(sel.fit.chosen_index).coord(0) {
        Marginal::Regression { error, func } => Ok(RegressionFit {
            f_hat: func.clone(),
            s_hat: error.clone(),
            selected_models: sel.selected_models,
            fit: sel.fit,
        }),
        Marginal::Univariate(_) => Err(Error::contract("collection holds no regression entries")),
    }
}

/// `d_s²(g, g') = mean over w of h²(s(· − g(w)), s(· − g'(w)))`, the design
/// sample standing in for the law of `w`.
pub fn d_s_loss(
    s: &Density1D,
    g: &RegressionFunction,
    gp: &RegressionFunction,
    w_sample: &[Vec<f64>],
    quad: &QuadratureSpec,
) -> Result<f64> {
    if w_sample.is_empty() {
        return Err(Error::contract("design sample is empty"));
    }
    let mut total = 0.0;
    for w in w_sample {
        let (a, b) = (g.eval(w), gp.eval(w));
        if a != b {
            total += hellinger_sq(&s.translate(a)?, &s.translate(b)?, quad)?;
        }
    }
    Ok(total / w_sample.len() as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairIdentifiability {
    pub first: usize,
    pub second: usize,
    pub h: f64,
    pub min_shifted_h: f64,
    pub argmin_shift: f64,
    /// `h(R, R') / min_a h(R_a, R')`; `1` when both vanish, `+∞` (serialized as null) when only the denominator does.
    pub a: f64,
    pub flagged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentifiabilityReport {
    pub pairs: Vec<PairIdentifiability>,
    pub max_a: f64,
}

/// Estimates the constant `A` in `h(R, R') ≤ A inf_a h(R_a, R')` for every
/// pair of candidates, with the infimum taken over `shift_grid`.
pub fn check_identifiability(
    candidates: &[Density1D],
    shift_grid: &[f64],
    quad: &QuadratureSpec,
    ceiling: f64,
) -> Result<IdentifiabilityReport> {
    if shift_grid.is_empty() {
        return Err(Error::contract("shift grid is empty"));
    }
    let symmetric = shift_grid
        .iter()
        .all(|a| shift_grid.iter().any(|b| (a + b).abs() <= 1e-12 * a.abs().max(1.0)));
    if !symmetric {
        return Err(Error::contract("shift grid must be symmetric around 0"));
    }
    let mut pairs = Vec::new();
    for i in 0..candidates.len() {
        for j in (i + 1)..candidates.len() {
            let (r, rp) = (&candidates[i], &candidates[j]);
            let h = hellinger_sq(r, rp, quad)?.sqrt();
            let mut best: (f64, f64) = (f64::INFINITY, 0.0);
            for &a in shift_grid {
                let v = hellinger_sq(&r.translate(a)?, rp, quad)?.sqrt();
                if v < best.0 || (v == best.0 && a.abs() < best.1.abs()) {
                    best = (v, a);
                }
            }
            let a = if h == 0.0 {
                1.0
            } else if best.0 == 0.0 {
                f64::INFINITY
            } else {
                h / best.0
            };
            pairs.push(PairIdentifiability {
                first: i,
                second: j,
                h,
                min_shifted_h: best.0,
                argmin_shift: best.1,
                a,
                flagged: a > ceiling,
            });
        }
    }
    let max_a = pairs.iter().map(|p| p.a).fold(1.0, f64::max);
    Ok(IdentifiabilityReport { pairs, max_a })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quad() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    #[test]
    fn vc_arithmetic() {
        let fs = coefficient_grid_functions(BasisFn::Coordinate(0), -1.0, 1.0, 0.1).unwrap();
        assert_eq!(fs.len(), 21);
        let m = RegressionModel::new(Density1D::gaussian(0.0, 1.0).unwrap(), fs, 3).unwrap();
        assert!((m.vc_index() - 28.23).abs() < 1e-12);
        assert_eq!(linear_span_vc_index(1), 3);
    }

    #[test]
    fn single_entry_family_evaluates_error_density() {
        let r = Density1D::gaussian(0.0, 1.0).unwrap();
        let m = RegressionModel::new(r.clone(), vec![RegressionFunction::constant(0.0)], 1).unwrap();
        let coll = build_regression_family(&[m], 2, PsiKernel::default(), 1.0).unwrap();
        assert_eq!(coll.union().len(), 1);
        let x = Sample::from_pairs(&[0.3, -2.0], &[0.5, 1.5]).unwrap();
        let l = coll.union().entry(0).ln_pdfs(&x).unwrap();
        assert_eq!(l, vec![r.ln_pdf(0.5), r.ln_pdf(1.5)]);
        let fit = fit_regression(&x, &coll, 1.0).unwrap();
        assert_eq!(fit.f_hat, RegressionFunction::constant(0.0));
    }

    #[test]
    fn d_s_values() {
        let ws: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64 / 4.0]).collect();
        let g0 = RegressionFunction::constant(0.0);
        let s = Density1D::gaussian(0.0, 1.0).unwrap();
        assert_eq!(d_s_loss(&s, &g0, &g0, &ws, &quad()).unwrap(), 0.0);
        let c = 0.8;
        let want = 1.0 - (-c * c / 8.0f64).exp();
        let got = d_s_loss(&s, &g0, &RegressionFunction::constant(c), &ws, &quad()).unwrap();
        assert!((got - want).abs() < 1e-12);
        let u = Density1D::uniform(0.0, 1.0).unwrap();
        let got = d_s_loss(&u, &g0, &RegressionFunction::constant(0.5), &ws, &quad()).unwrap();
        assert!((got - 0.5).abs() < 1e-9);
    }

    #[test]
    fn identifiability_examples() {
        let grid: Vec<f64> = (-20..=20).map(|k| k as f64 * 0.1).collect();
        let n1 = Density1D::gaussian(0.0, 1.0).unwrap();
        let n2 = Density1D::gaussian(0.0, 2.0).unwrap();
        let rep = check_identifiability(&[n1.clone(), n2], &grid, &quad(), 10.0).unwrap();
        assert_eq!(rep.pairs[0].argmin_shift, 0.0);
        assert!((rep.pairs[0].a - 1.0).abs() < 1e-12);
        let same = check_identifiability(&[n1.clone(), n1], &grid, &quad(), 10.0).unwrap();
        assert_eq!(same.pairs[0].a, 1.0);
        let u = check_identifiability(
            &[Density1D::uniform(0.0, 1.0).unwrap(), Density1D::uniform(0.0, 2.0).unwrap()],
            &grid,
            &quad(),
            10.0,
        )
        .unwrap();
        assert!(u.max_a.is_finite() && u.max_a >= 1.0);
        assert!(check_identifiability(&[], &[0.0, 1.0], &quad(), 1.0).is_err());
    }
}
