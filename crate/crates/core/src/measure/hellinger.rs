//! Hellinger distance `h²(P, Q) = ½∫(√p − √q)² dμ` and affinity `1 − h²`.

use super::density::{BaseMeasure, Density1D, DensityKind};
use super::quadrature::{integrate, QuadratureSpec};
use crate::error::Result;

/// Mean and standard deviation when the law is Gaussian.
fn gaussian_params(d: &Density1D) -> Option<(f64, f64)> {
    match d.kind() {
        DensityKind::Gaussian { mean, sd } => Some((*mean, *sd)),
        DensityKind::PathologicalGaussian { theta } => Some((*theta, 1.0)),
        _ => None,
    }
}

/// Closed form for two normal laws.
pub fn gaussian_hellinger_sq(m1: f64, s1: f64, m2: f64, s2: f64) -> f64 {
    let d = m1 - m2;
    if s1 == s2 {
        return -(-d * d / (8.0 * s1 * s1)).exp_m1();
    }
    let v = s1 * s1 + s2 * s2;
    let aff = (2.0 * s1 * s2 / v).sqrt() * (-d * d / (4.0 * v)).exp();
    (1.0 - aff).clamp(0.0, 1.0)
}

fn discrete_hellinger_sq(p: &Density1D, q: &Density1D) -> f64 {
    let mut points: Vec<f64> = Vec::new();
    for d in [p, q] {
        if let DensityKind::Discrete { support, .. } = d.kind() {
            points.extend(support);
        } else {
            points.extend(d.breakpoints());
        }
    }
    points.sort_by(f64::total_cmp);
    points.dedup();
    let s: f64 = points
        .iter()
        .map(|&x| {
            let diff = p.lebesgue_pdf(x).sqrt() - q.lebesgue_pdf(x).sqrt();
            diff * diff
        })
        .sum();
    (0.5 * s).clamp(0.0, 1.0)
}

fn integration_breaks(p: &Density1D, q: &Density1D) -> Vec<f64> {
    let (a1, b1) = p.support();
    let (a2, b2) = q.support();
    let (lo, hi) = (a1.min(a2), b1.max(b2));
    let mut breaks = vec![lo, hi];
    breaks.extend(
        p.breakpoints()
            .into_iter()
            .chain(q.breakpoints())
            .filter(|b| *b > lo && *b < hi),
    );
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    breaks
}

/// `h²` by quadrature only, with Lebesgue measure as the dominating measure.
/// Both densities must be absolutely continuous.
pub fn hellinger_sq_by_quadrature(p: &Density1D, q: &Density1D, quad: &QuadratureSpec) -> Result<f64> {
    let breaks = integration_breaks(p, q);
    let v = integrate(
        |x| {
            let diff = p.lebesgue_pdf(x).sqrt() - q.lebesgue_pdf(x).sqrt();
            diff * diff
        },
        &breaks,
        quad,
    )?;
    Ok((0.5 * v).clamp(0.0, 1.0))
}

/// `h²` computed against an explicit dominating measure: the integrand is
/// `½(√(p/b) − √(q/b))²` integrated with respect to `b`.
pub fn hellinger_sq_relative_to(
    p: &Density1D,
    q: &Density1D,
    base: BaseMeasure,
    quad: &QuadratureSpec,
) -> Result<f64> {
    if base == BaseMeasure::Counting || !p.is_continuous() || !q.is_continuous() {
        return hellinger_sq(p, q, quad);
    }
    let breaks = integration_breaks(p, q);
    let v = integrate(
        |x| {
            let lb = base.ln_lebesgue_density(x);
            if lb < -745.0 {
                return 0.0;
            }
            let rp = (0.5 * (p.ln_lebesgue_pdf(x) - lb)).exp();
            let rq = (0.5 * (q.ln_lebesgue_pdf(x) - lb)).exp();
            let diff = rp - rq;
            diff * diff * lb.exp()
        },
        &breaks,
        quad,
    )?;
    Ok((0.5 * v).clamp(0.0, 1.0))
}

/// Squared Hellinger distance. Uses closed forms for Gaussian pairs, identical
/// laws, disjoint supports and mutually singular pairs; quadrature otherwise.
pub fn hellinger_sq(p: &Density1D, q: &Density1D, quad: &QuadratureSpec) -> Result<f64> {
    quad.validate()?;
    match (p.is_continuous(), q.is_continuous()) {
        (false, false) => return Ok(discrete_hellinger_sq(p, q)),
        (true, false) | (false, true) => return Ok(1.0),
        (true, true) => {}
    }
    if p == q {
        return Ok(0.0);
    }
    if let (Some((m1, s1)), Some((m2, s2))) = (gaussian_params(p), gaussian_params(q)) {
        return Ok(gaussian_hellinger_sq(m1, s1, m2, s2));
    }
    let (a1, b1) = p.support();
    let (a2, b2) = q.support();
    if b1 <= a2 || b2 <= a1 {
        return Ok(1.0);
    }
    hellinger_sq_by_quadrature(p, q, quad)
}

/// Affinity `ρ = 1 − h²`.
pub fn hellinger_affinity(p: &Density1D, q: &Density1D, quad: &QuadratureSpec) -> Result<f64> {
    Ok(1.0 - hellinger_sq(p, q, quad)?)
}
