use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::scenario::rng_for;
use crate::criterion::{rho_estimate, DensityFamily, Penalty};
use crate::error::{Error, Result};
use crate::measure::{Density1D, ProductDensity, Sample};
use crate::psi::PsiKernel;
use crate::zoo::grid_values;

/// θ grid used by the ρ-estimator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThetaGrid {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl Default for ThetaGrid {
    fn default() -> Self {
        ThetaGrid {
            min: -3.0,
            max: 3.0,
            step: 0.1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MleReplicate {
    pub replicate: usize,
    pub event: bool,
    pub max_obs: f64,
    pub mean: f64,
    pub mle: f64,
    pub mle_at_max: bool,
    pub rho_theta: f64,
    /// Estimate from the same grid written as ordinary normal densities.
    pub rho_theta_standard: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MleReport {
    pub theta: f64,
    pub n: usize,
    pub event_count: usize,
    pub freq_event: f64,
    /// Share of event replicates whose likelihood maximiser is `X_(n)`; `None` without events.
    pub freq_mle_at_max: Option<f64>,
    pub rho_errors: Vec<f64>,
    pub median_rho_error: f64,
    /// Largest gap, in grid steps, between the two representations' ρ-estimates.
    pub max_representation_shift: usize,
    /// Share of replicates where the two representations' estimates are at most one step apart.
    pub share_within_one_step: f64,
    pub replicates: Vec<MleReplicate>,
}

/// `X̄ ∉ {X_i}` and `X_(n) ≥ √ln(4n) > |X̄|`.
pub fn in_event(xs: &[f64]) -> bool {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let c = (4.0 * n).ln().sqrt();
    !xs.contains(&mean) && max >= c && c > mean.abs()
}

/// Maximiser of the log-likelihood in the singular representation over the
/// grid, the observations and their mean. Ties go to the first candidate in
/// that order.
pub fn pathological_mle(xs: &[f64], grid: &[f64]) -> Result<f64> {
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    let mut best = (f64::NEG_INFINITY, f64::NAN);
    for &t in grid.iter().chain(xs).chain(std::iter::once(&mean)) {
        let d = Density1D::pathological_gaussian(t)?;
        let l: f64 = xs.iter().map(|x| d.ln_pdf(*x)).sum();
        if l > best.0 {
            best = (l, t);
        }
    }
    Ok(best.1)
}

fn family(thetas: &[f64], n: usize, build: fn(f64) -> Result<Density1D>) -> Result<DensityFamily> {
    DensityFamily::new(
        thetas
            .iter()
            .map(|t| Ok(ProductDensity::iid(build(*t)?, n)))
            .collect::<Result<Vec<_>>>()?,
    )
}

/// Samples `N(θ, 1)` and compares the likelihood maximiser with the
/// ρ-estimator under the singular representation of the normal location family.
pub fn mle_counterexample(
    theta: f64,
    n: usize,
    replications: usize,
    seed: u64,
    grid: ThetaGrid,
    kernel: &PsiKernel,
) -> Result<MleReport> {
    if n < 3 || replications == 0 {
        return Err(Error::Config("need n >= 3 and replications >= 1".into()));
    }
    let thetas = grid_values(grid.min, grid.max, grid.step)?;
    let patho = family(&thetas, n, Density1D::pathological_gaussian)?;
    let standard = family(&thetas, n, |t| Density1D::gaussian(t, 1.0))?;
    let truth = Density1D::gaussian(theta, 1.0)?;
    let replicates = (0..replications)
        .into_par_iter()
        .map(|r| {
            let mut rng = rng_for(seed, r);
            let xs: Vec<f64> = (0..n).map(|_| truth.sample(&mut rng)).collect();
            let x = Sample::from_scalars(&xs)?;
            let max_obs = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mle = pathological_mle(&xs, &thetas)?;
            let pen = Penalty::zero(thetas.len());
            let a = rho_estimate(&x, &patho, &pen, kernel, None)?;
            let b = rho_estimate(&x, &standard, &pen, kernel, None)?;
            Ok(MleReplicate {
                replicate: r,
                event: in_event(&xs),
                max_obs,
                mean: xs.iter().sum::<f64>() / n as f64,
                mle,
                mle_at_max: mle == max_obs,
                rho_theta: thetas[a.chosen_index],
                rho_theta_standard: thetas[b.chosen_index],
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let event_count = replicates.iter().filter(|r| r.event).count();
    let at_max = replicates.iter().filter(|r| r.event && r.mle_at_max).count();
    let rho_errors: Vec<f64> = replicates.iter().map(|r| (r.rho_theta - theta).abs()).collect();
    let mut sorted = rho_errors.clone();
    sorted.sort_by(f64::total_cmp);
    let m = sorted.len();
    let median_rho_error = if m % 2 == 1 {
        sorted[m / 2]
    } else {
        0.5 * (sorted[m / 2 - 1] + sorted[m / 2])
    };
    let shifts: Vec<usize> = replicates
        .iter()
        .map(|r| ((r.rho_theta - r.rho_theta_standard).abs() / grid.step).round() as usize)
        .collect();
    let max_representation_shift = shifts.iter().copied().max().unwrap_or(0);
    let share_within_one_step = shifts.iter().filter(|s| **s <= 1).count() as f64 / replications as f64;
    Ok(MleReport {
        theta,
        n,
        event_count,
        freq_event: event_count as f64 / replications as f64,
        freq_mle_at_max: (event_count > 0).then(|| at_max as f64 / event_count as f64),
        rho_errors,
        median_rho_error,
        max_representation_shift,
        share_within_one_step,
        replicates,
    })
}
