//! The statistic `T`, the criterion `Υ` and the ρ-estimator over a finite
//! family of product densities.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::{ProductDensity, Sample};
use crate::psi::PsiKernel;

/// Finite representation of a ρ-model: an indexed list of product densities
/// plus optional per-entry parameters and a VC-subgraph index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityFamily {
    entries: Vec<ProductDensity>,
    #[serde(default)]
    params: Vec<Vec<f64>>,
    #[serde(default)]
    vc_index: Option<u32>,
}

impl DensityFamily {
    pub fn new(entries: Vec<ProductDensity>) -> Result<Self> {
        let first = entries.first().ok_or(Error::EmptyFamily)?;
        let n = first.n();
        if entries.iter().any(|e| e.n() != n) {
            return Err(Error::contract("family entries have different coordinate counts"));
        }
        Ok(DensityFamily {
            entries,
            params: Vec::new(),
            vc_index: None,
        })
    }

    /// Attach one parameter vector per entry.
    pub fn with_params(mut self, params: Vec<Vec<f64>>) -> Result<Self> {
        if params.len() != self.entries.len() {
            return Err(Error::contract("need one parameter vector per entry"));
        }
        self.params = params;
        Ok(self)
    }

    pub fn with_vc_index(mut self, vc: u32) -> Self {
        self.vc_index = Some(vc);
        self
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn n(&self) -> usize {
        self.entries[0].n()
    }

    pub fn entries(&self) -> &[ProductDensity] {
        &self.entries
    }

    pub fn entry(&self, i: usize) -> &ProductDensity {
        &self.entries[i]
    }

    pub fn params(&self, i: usize) -> Option<&[f64]> {
        self.params.get(i).map(Vec::as_slice)
    }

    pub fn vc_index(&self) -> Option<u32> {
        self.vc_index
    }

    /// Union of several families with duplicates merged; also returns, for
    /// every input family, the union indices of its entries.
    pub fn union(families: &[&DensityFamily]) -> Result<(DensityFamily, Vec<Vec<usize>>)> {
        let mut entries = Vec::new();
        let mut params = Vec::new();
        let mut seen: HashMap<String, usize> = HashMap::new();
        let mut membership = Vec::with_capacity(families.len());
        for fam in families {
            let mut idx = Vec::with_capacity(fam.len());
            for (i, e) in fam.entries.iter().enumerate() {
                let key = serde_json::to_string(e)?;
                let at = *seen.entry(key).or_insert_with(|| {
                    entries.push(e.clone());
                    params.push(fam.params.get(i).cloned().unwrap_or_default());
                    entries.len() - 1
                });
                idx.push(at);
            }
            membership.push(idx);
        }
        let mut out = DensityFamily::new(entries)?;
        if params.iter().any(|p| !p.is_empty()) {
            out.params = params;
        }
        Ok((out, membership))
    }

    /// `K × n` table of coordinate log-densities at the sample.
    pub fn log_table(&self, x: &Sample) -> Result<Vec<Vec<f64>>> {
        self.entries.par_iter().map(|e| e.ln_pdfs(x)).collect()
    }
}

/// Nonnegative penalty per family entry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Penalty {
    values: Vec<f64>,
}

impl Penalty {
    pub fn zero(len: usize) -> Self {
        Penalty { values: vec![0.0; len] }
    }

    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::contract("penalties must be finite and >= 0"));
        }
        Ok(Penalty { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, i: usize) -> f64 {
        self.values[i]
    }
}

/// Result of a ρ-estimation over a finite family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RhoFit {
    pub chosen_index: usize,
    pub upsilon_at_chosen: f64,
    pub upsilon_min: f64,
    pub admissible_set: Vec<usize>,
    pub slack: f64,
    pub trace: Vec<f64>,
}

impl RhoFit {
    pub fn estimate<'a>(&self, fam: &'a DensityFamily) -> &'a ProductDensity {
        fam.entry(self.chosen_index)
    }

    pub fn invariants_hold(&self) -> bool {
        self.upsilon_at_chosen <= self.upsilon_min + self.slack
            && self.admissible_set.contains(&self.chosen_index)
            && self.trace.get(self.chosen_index) == Some(&self.upsilon_at_chosen)
    }
}

fn t_from_rows(k: &PsiKernel, lq: &[f64], lqp: &[f64]) -> f64 {
    lq.iter().zip(lqp).map(|(a, b)| k.eval_sqrt_ratio(*a, *b)).sum()
}

/// `T(X, q, q') = Σ_i ψ(√(q'_i(X_i) / q_i(X_i)))`.
pub fn t_statistic(x: &Sample, q: &ProductDensity, qp: &ProductDensity, k: &PsiKernel) -> Result<f64> {
    let lq = q.ln_pdfs(x)?;
    let lqp = qp.ln_pdfs(x)?;
    Ok(t_from_rows(k, &lq, &lqp))
}

/// `Υ(X, q) = max_{q'} [T(X, q, q') − pen(q')] + pen(q)`. The penalty of `q`
/// is that of the equal family entry, or 0 when `q` is not in the family.
pub fn upsilon(x: &Sample, q: &ProductDensity, fam: &DensityFamily, pen: &Penalty, k: &PsiKernel) -> Result<f64> {
    check_penalty(fam, pen)?;
    let lq = q.ln_pdfs(x)?;
    let own = fam.entries().iter().position(|e| e == q).map_or(0.0, |i| pen.get(i));
    let table = fam.log_table(x)?;
    let best = table
        .iter()
        .enumerate()
        .map(|(j, row)| t_from_rows(k, &lq, row) - pen.get(j))
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(best + own)
}

fn check_penalty(fam: &DensityFamily, pen: &Penalty) -> Result<()> {
    if pen.values().len() != fam.len() {
        return Err(Error::contract(format!(
            "penalty has {} values for a family of {}",
            pen.values().len(),
            fam.len()
        )));
    }
    Ok(())
}

/// Υ for every entry of the family, from a precomputed log-density table.
pub fn upsilon_trace(table: &[Vec<f64>], pen: &Penalty, k: &PsiKernel) -> Vec<f64> {
    let m = table.len();
    // upper triangle of T, the lower one follows from T(q', q) = −T(q, q')
    let upper: Vec<Vec<f64>> = (0..m)
        .into_par_iter()
        .map(|a| ((a + 1)..m).map(|b| t_from_rows(k, &table[a], &table[b])).collect())
        .collect();
    let t = |a: usize, b: usize| -> f64 {
        match a.cmp(&b) {
            std::cmp::Ordering::Less => upper[a][b - a - 1],
            std::cmp::Ordering::Equal => 0.0,
            std::cmp::Ordering::Greater => -upper[b][a - b - 1],
        }
    };
    (0..m)
        .map(|a| {
            let best = (0..m)
                .map(|b| t(a, b) - pen.get(b))
                .fold(f64::NEG_INFINITY, f64::max);
            best + pen.get(a)
        })
        .collect()
}

/// Relative width within which two Υ values count as tied.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// The ρ-estimator: entries whose Υ is within `slack` of the minimum are
/// admissible; the one with smallest Υ is chosen, ties going to the smaller
/// index. `slack` defaults to `κ/25`.
pub fn rho_estimate(
    x: &Sample,
    fam: &DensityFamily,
    pen: &Penalty,
    k: &PsiKernel,
    slack: Option<f64>,
) -> Result<RhoFit> {
    check_penalty(fam, pen)?;
    let slack = slack.unwrap_or(k.kappa / 25.0);
    if !(slack >= 0.0 && slack.is_finite()) {
        return Err(Error::contract("slack must be finite and >= 0"));
    }
    let table = fam.log_table(x)?;
    let trace = upsilon_trace(&table, pen, k);
    Ok(fit_from_trace(trace, slack, x.n()))
}

pub(crate) fn fit_from_trace(trace: Vec<f64>, slack: f64, n: usize) -> RhoFit {
    let upsilon_min = trace.iter().copied().fold(f64::INFINITY, f64::min);
    let tie = TIE_TOLERANCE * (n as f64).max(1.0);
    let chosen_index = trace
        .iter()
        .position(|u| *u <= upsilon_min + tie)
        .expect("the minimum is attained");
    let admissible_set = trace
        .iter()
        .enumerate()
        .filter(|(_, u)| **u <= upsilon_min + slack)
        .map(|(i, _)| i)
        .collect();
    RhoFit {
        chosen_index,
        upsilon_at_chosen: trace[chosen_index],
        upsilon_min,
        admissible_set,
        slack,
        trace,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::Density1D;
    use crate::psi::{kernel_constants, PsiId};
    use proptest::prelude::*;

    fn gauss_family(means: &[f64], n: usize) -> DensityFamily {
        DensityFamily::new(
            means
                .iter()
                .map(|m| ProductDensity::iid(Density1D::gaussian(*m, 1.0).unwrap(), n))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn singleton_family() {
        let x = Sample::from_scalars(&[0.3, -1.0]).unwrap();
        let fam = gauss_family(&[0.0], 2);
        let fit = rho_estimate(&x, &fam, &Penalty::zero(1), &PsiKernel::default(), None).unwrap();
        assert_eq!(fit.chosen_index, 0);
        assert_eq!(fit.upsilon_at_chosen, 0.0);
        assert!(fit.invariants_hold());
        assert!((fit.slack - PsiKernel::default().kappa / 25.0).abs() < 1e-15);
    }

    #[test]
    fn zero_convention_for_one_point() {
        let x = Sample::from_scalars(&[2.0]).unwrap();
        let q = ProductDensity::iid(Density1D::uniform(0.0, 1.0).unwrap(), 1);
        let qp = ProductDensity::iid(Density1D::uniform(0.0, 3.0).unwrap(), 1);
        let k = kernel_constants(PsiId::Psi2);
        assert_eq!(t_statistic(&x, &q, &qp, &k).unwrap(), 1.0);
        assert_eq!(t_statistic(&x, &qp, &q, &k).unwrap(), -1.0);
    }

    #[test]
    fn upsilon_nonnegative_and_matches_trace() {
        let x = Sample::from_scalars(&[0.1, 0.5, -0.2, 1.4]).unwrap();
        let fam = gauss_family(&[-1.0, 0.0, 0.5, 2.0], 4);
        let pen = Penalty::new(vec![0.0, 0.3, 0.1, 0.0]).unwrap();
        let k = PsiKernel::default();
        let fit = rho_estimate(&x, &fam, &pen, &k, Some(0.0)).unwrap();
        for (i, e) in fam.entries().iter().enumerate() {
            let u = upsilon(&x, e, &fam, &pen, &k).unwrap();
            assert!((u - fit.trace[i]).abs() < 1e-12);
        }
        let zero = rho_estimate(&x, &fam, &Penalty::zero(4), &k, None).unwrap();
        assert!(zero.trace.iter().all(|u| *u >= 0.0));
    }

    #[test]
    fn union_merges_duplicates() {
        let a = gauss_family(&[0.0, 1.0], 3);
        let b = gauss_family(&[1.0, 2.0], 3);
        let (u, membership) = DensityFamily::union(&[&a, &b]).unwrap();
        assert_eq!(u.len(), 3);
        assert_eq!(membership, vec![vec![0, 1], vec![1, 2]]);
    }

    #[test]
    fn penalty_shape_and_sign_are_checked() {
        assert!(Penalty::new(vec![-1.0]).is_err());
        let x = Sample::from_scalars(&[0.0]).unwrap();
        let fam = gauss_family(&[0.0, 1.0], 1);
        assert!(rho_estimate(&x, &fam, &Penalty::zero(3), &PsiKernel::default(), None).is_err());
        assert!(matches!(DensityFamily::new(vec![]), Err(Error::EmptyFamily)));
    }

    proptest! {
        #[test]
        fn t_is_antisymmetric_and_bounded(
            xs in proptest::collection::vec(-5.0f64..5.0, 1..12),
            m1 in -3.0f64..3.0, m2 in -3.0f64..3.0, s in 0.2f64..3.0,
        ) {
            let n = xs.len();
            let x = Sample::from_scalars(&xs).unwrap();
            let q = ProductDensity::iid(Density1D::gaussian(m1, 1.0).unwrap(), n);
            let qp = ProductDensity::iid(Density1D::cauchy(m2, s).unwrap(), n);
            for id in [PsiId::Psi1, PsiId::Psi2] {
                let k = kernel_constants(id);
                let a = t_statistic(&x, &q, &qp, &k).unwrap();
                let b = t_statistic(&x, &qp, &q, &k).unwrap();
                prop_assert_eq!(a + b, 0.0);
                prop_assert!(a.abs() <= n as f64);
            }
        }

        #[test]
        fn chosen_minimizes_upsilon(
            xs in proptest::collection::vec(-3.0f64..3.0, 1..8),
            means in proptest::collection::vec(-2.0f64..2.0, 1..7),
        ) {
            let x = Sample::from_scalars(&xs).unwrap();
            let fam = gauss_family(&means, xs.len());
            let fit = rho_estimate(&x, &fam, &Penalty::zero(means.len()), &PsiKernel::default(), None).unwrap();
            prop_assert!(fit.invariants_hold());
            prop_assert!(fit.trace.iter().all(|u| *u >= fit.upsilon_at_chosen - 1e-9));
            prop_assert!(fit.trace.iter().all(|u| *u >= 0.0));
        }
    }
}
