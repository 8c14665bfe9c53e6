//! Estimator selection among candidate probabilities and convex aggregation
//! through the saddle point of `t(α, β) = Σ_i ψ(√(q_β(X_i) / q_α(X_i)))`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::criterion::{rho_estimate, DensityFamily, Penalty, RhoFit};
use crate::error::{Error, Result};
use crate::measure::{ProductDensity, Sample};
use crate::psi::PsiKernel;
use crate::selection::WEIGHT_TOLERANCE;

/// Weights on the simplex.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SimplexPoint {
    weights: Vec<f64>,
}

impl SimplexPoint {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::contract("simplex point needs at least one weight"));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::contract("simplex weights must be finite and >= 0"));
        }
        let s: f64 = weights.iter().sum();
        if (s - 1.0).abs() > 1e-12 {
            return Err(Error::contract(format!("simplex weights sum to {s}")));
        }
        Ok(SimplexPoint { weights })
    }

    pub fn uniform(n: usize) -> Self {
        SimplexPoint {
            weights: vec![1.0 / n as f64; n],
        }
    }

    pub fn vertex(n: usize, j: usize) -> Self {
        let mut weights = vec![0.0; n];
        weights[j] = 1.0;
        SimplexPoint { weights }
    }

    /// Clamp negatives and rescale to sum exactly 1 (up to rounding).
    fn normalized(mut weights: Vec<f64>) -> Self {
        for w in &mut weights {
            if *w < 0.0 {
                *w = 0.0;
            }
        }
        let s: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= s;
        }
        SimplexPoint { weights }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }
}

/// Candidate densities evaluated at the sample: row `j` holds `p_j(X_1..X_n)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateSet {
    evals: Vec<Vec<f64>>,
}

impl CandidateSet {
    pub fn new(x: &Sample, candidates: &[ProductDensity]) -> Result<Self> {
        let evals = candidates
            .iter()
            .map(|c| Ok(c.ln_pdfs(x)?.into_iter().map(f64::exp).collect()))
            .collect::<Result<Vec<Vec<f64>>>>()?;
        CandidateSet::from_evaluations(evals)
    }

    /// From the `N × n` evaluation matrix directly.
    pub fn from_evaluations(evals: Vec<Vec<f64>>) -> Result<Self> {
        let n = evals.first().map(Vec::len).ok_or(Error::EmptyFamily)?;
        if n == 0 || evals.iter().any(|r| r.len() != n) {
            return Err(Error::contract("evaluation rows must share a positive length"));
        }
        if evals.iter().flatten().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::contract("candidate densities must be finite and > 0 at every observation"));
        }
        Ok(CandidateSet { evals })
    }

    pub fn len(&self) -> usize {
        self.evals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.evals.is_empty()
    }

    pub fn n(&self) -> usize {
        self.evals[0].len()
    }

    pub fn evaluations(&self) -> &[Vec<f64>] {
        &self.evals
    }

    /// `q_α(X_i) = Σ_j α_j p_j(X_i)` for every observation.
    pub fn mixture(&self, alpha: &SimplexPoint) -> Vec<f64> {
        let mut out = vec![0.0; self.n()];
        for (w, row) in alpha.weights.iter().zip(&self.evals) {
            if *w != 0.0 {
                for (o, p) in out.iter_mut().zip(row) {
                    *o += w * p;
                }
            }
        }
        out
    }

    /// Ratio of extreme singular values of the evaluation matrix.
    pub fn condition_number(&self) -> f64 {
        let (rows, cols) = (self.len(), self.n());
        let m = DMatrix::from_fn(rows, cols, |j, i| self.evals[j][i]);
        let sv = m.singular_values();
        let max = sv.iter().copied().fold(0.0, f64::max);
        let min = if rows > cols {
            0.0
        } else {
            sv.iter().copied().fold(f64::INFINITY, f64::min)
        };
        if min == 0.0 {
            f64::INFINITY
        } else {
            max / min
        }
    }

    fn check_dim(&self, p: &SimplexPoint) -> Result<()> {
        if p.dim() != self.len() {
            return Err(Error::contract(format!(
                "simplex point has {} weights for {} candidates",
                p.dim(),
                self.len()
            )));
        }
        Ok(())
    }
}

/// ρ-estimation over single-candidate models with penalty `κ Δ_j`.
pub fn select_candidate(
    x: &Sample,
    candidates: &[ProductDensity],
    deltas: &[f64],
    k: &PsiKernel,
    slack: Option<f64>,
) -> Result<RhoFit> {
    if deltas.len() != candidates.len() {
        return Err(Error::contract("need one weight per candidate"));
    }
    if deltas.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
        return Err(Error::contract("weights must be finite and >= 0"));
    }
    let sum: f64 = deltas.iter().map(|d| (-d).exp()).sum();
    if sum > 1.0 + WEIGHT_TOLERANCE {
        return Err(Error::InvalidWeights { sum });
    }
    let fam = DensityFamily::new(candidates.to_vec())?;
    let pen = Penalty::new(deltas.iter().map(|d| k.kappa * d).collect())?;
    rho_estimate(x, &fam, &pen, k, slack)
}

fn t_from_mixtures(k: &PsiKernel, qa: &[f64], qb: &[f64]) -> f64 {
    qa.iter()
        .zip(qb)
        .map(|(a, b)| k.eval_exp(0.5 * (b.ln() - a.ln())))
        .sum()
}

/// `t(α, β)`.
pub fn t_mix(cs: &CandidateSet, alpha: &SimplexPoint, beta: &SimplexPoint, k: &PsiKernel) -> Result<f64> {
    cs.check_dim(alpha)?;
    cs.check_dim(beta)?;
    Ok(t_from_mixtures(k, &cs.mixture(alpha), &cs.mixture(beta)))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InnerConfig {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for InnerConfig {
    fn default() -> Self {
        InnerConfig {
            tol: 1e-8,
            max_iter: 5000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InnerResult {
    pub beta: SimplexPoint,
    pub value: f64,
    pub gap: f64,
    pub iterations: usize,
}

/// Maximizes the concave map `β ↦ t(α, β)` by Frank–Wolfe with away steps,
/// starting at `β = α`, with an exact line search.
pub fn inner_argmax(cs: &CandidateSet, alpha: &SimplexPoint, k: &PsiKernel, cfg: &InnerConfig) -> Result<InnerResult> {
    cs.check_dim(alpha)?;
    let qa = cs.mixture(alpha);
    let big_n = cs.len();
    let mut beta = alpha.weights.clone();
    let mut qb = qa.clone();
    let grad_at = |qb: &[f64]| -> Vec<f64> {
        // w_i = f'(u_i) / q_α(X_i) with u_i = q_β(X_i) / q_α(X_i)
        let w: Vec<f64> = qb
            .iter()
            .zip(&qa)
            .map(|(b, a)| k.sqrt_composite(b / a).1 / a)
            .collect();
        cs.evals
            .iter()
            .map(|row| row.iter().zip(&w).map(|(p, wi)| p * wi).sum())
            .collect()
    };
    let mut gap = f64::INFINITY;
    let mut iterations = 0;
    while iterations < cfg.max_iter {
        let grad = grad_at(&qb);
        let inner: f64 = grad.iter().zip(&beta).map(|(g, b)| g * b).sum();
        let s = argmax(&grad);
        gap = grad[s] - inner;
        if gap < cfg.tol {
            break;
        }
        iterations += 1;
        let away = (0..big_n)
            .filter(|&j| beta[j] > 0.0)
            .min_by(|&a, &b| grad[a].total_cmp(&grad[b]))
            .expect("beta has positive mass");
        let away_gap = inner - grad[away];
        // direction d and the largest feasible step
        let (dir, step_max, drop) = if gap >= away_gap || beta[away] >= 1.0 {
            let mut d: Vec<f64> = beta.iter().map(|b| -b).collect();
            d[s] += 1.0;
            (d, 1.0, None)
        } else {
            let mut d = beta.clone();
            d[away] -= 1.0;
            (d, beta[away] / (1.0 - beta[away]), Some(away))
        };
        let qd: Vec<f64> = (0..cs.n())
            .map(|i| (0..big_n).map(|j| dir[j] * cs.evals[j][i]).sum())
            .collect();
        let slope = |g: f64| -> f64 {
            qb.iter()
                .zip(&qd)
                .zip(&qa)
                .map(|((b, d), a)| {
                    let u = (b + g * d) / a;
                    if u <= 0.0 {
                        f64::INFINITY * d.signum()
                    } else {
                        k.sqrt_composite(u).1 * d / a
                    }
                })
                .sum()
        };
        let step = if slope(step_max) >= 0.0 {
            step_max
        } else {
            let (mut lo, mut hi) = (0.0, step_max);
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if slope(mid) >= 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            lo
        };
        if step <= 0.0 {
            break;
        }
        for (b, d) in beta.iter_mut().zip(&dir) {
            *b += step * d;
        }
        if let (Some(v), true) = (drop, step == step_max) {
            beta[v] = 0.0;
        }
        let p = SimplexPoint::normalized(std::mem::take(&mut beta));
        beta = p.weights;
        qb = cs.mixture(&SimplexPoint { weights: beta.clone() });
    }
    let beta = SimplexPoint { weights: beta };
    let value = t_from_mixtures(k, &qa, &cs.mixture(&beta));
    Ok(InnerResult {
        beta,
        value,
        gap,
        iterations,
    })
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (j, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = j;
        }
    }
    best
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SaddleConfig {
    pub eps: f64,
    pub max_outer: usize,
    pub inner: InnerConfig,
    pub condition_threshold: f64,
}

impl Default for SaddleConfig {
    fn default() -> Self {
        SaddleConfig {
            eps: 1e-4,
            max_outer: 1000,
            inner: InnerConfig::default(),
            condition_threshold: 1e10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SaddleResult {
    pub alpha_star: SimplexPoint,
    pub certificate: f64,
    pub iterations: usize,
    pub condition_number: f64,
}

/// Iterates `α ← argmax_β t(α, β)` from the uniform point until
/// `max_β t(α, β) < eps`. The certificate is that final maximum.
pub fn saddle_point(cs: &CandidateSet, k: &PsiKernel, cfg: &SaddleConfig) -> Result<SaddleResult> {
    saddle_point_from(cs, k, cfg, SimplexPoint::uniform(cs.len()))
}

pub fn saddle_point_from(cs: &CandidateSet, k: &PsiKernel, cfg: &SaddleConfig, start: SimplexPoint) -> Result<SaddleResult> {
    if !(cfg.eps > 0.0 && cfg.eps <= 1.0) {
        return Err(Error::contract("eps must be in (0, 1]"));
    }
    cs.check_dim(&start)?;
    let condition_number = cs.condition_number();
    if !(condition_number <= cfg.condition_threshold) {
        return Err(Error::Degenerate { condition_number });
    }
    let mut alpha = start;
    let mut iterations = 0;
    loop {
        let step = inner_argmax(cs, &alpha, k, &cfg.inner)?;
        iterations += 1;
        if step.value < cfg.eps {
            return Ok(SaddleResult {
                alpha_star: alpha,
                certificate: step.value.max(0.0),
                iterations,
                condition_number,
            });
        }
        if iterations >= cfg.max_outer {
            return Err(Error::NotConverged {
                iterations,
                certificate: step.value,
                alpha: step.beta.weights,
            });
        }
        alpha = step.beta;
    }
}

/// Outcome of the two-sided check `max_β t(α*, β) < eps` and
/// `min_γ t(γ, α*) > −eps` over a simplex grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SaddleCheck {
    pub max_t_challenger: f64,
    pub min_t_reversed: f64,
    pub pass: bool,
}

pub fn saddle_check(cs: &CandidateSet, alpha: &SimplexPoint, k: &PsiKernel, divisions: usize, eps: f64) -> Result<SaddleCheck> {
    cs.check_dim(alpha)?;
    let qa = cs.mixture(alpha);
    let mut max_t = f64::NEG_INFINITY;
    let mut min_t = f64::INFINITY;
    for w in crate::zoo::simplex_grid(cs.len(), divisions) {
        let qg = cs.mixture(&SimplexPoint { weights: w });
        max_t = max_t.max(t_from_mixtures(k, &qa, &qg));
        min_t = min_t.min(t_from_mixtures(k, &qg, &qa));
    }
    Ok(SaddleCheck {
        max_t_challenger: max_t,
        min_t_reversed: min_t,
        pass: max_t < eps && min_t > -eps,
    })
}
