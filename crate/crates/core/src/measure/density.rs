//! One-dimensional densities with respect to a declared dominating measure.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Cauchy, Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::quadrature::{integrate, QuadratureSpec};
use crate::error::{Error, Result};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Measure with respect to which [`Density1D::ln_pdf`] is a density.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaseMeasure {
    Lebesgue,
    /// The standard normal distribution.
    StandardGaussian,
    Counting,
}

impl BaseMeasure {
    /// Log-density of the base measure with respect to Lebesgue measure.
    pub fn ln_lebesgue_density(&self, x: f64) -> f64 {
        match self {
            BaseMeasure::Lebesgue => 0.0,
            BaseMeasure::StandardGaussian => -0.5 * x * x - LN_SQRT_2PI,
            BaseMeasure::Counting => f64::NAN,
        }
    }
}

/// Basis function of an exponential family.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Basis1D {
    /// `x^k`
    Power(i32),
    /// `ln x`, domain must be positive
    Log,
    /// `|x|`
    Abs,
}

impl Basis1D {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Basis1D::Power(k) => x.powi(k),
            Basis1D::Log => x.ln(),
            Basis1D::Abs => x.abs(),
        }
    }
}

/// Serializable description of a density. Infinite exp-family bounds are
/// written as `null`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum DensityKind {
    Gaussian {
        mean: f64,
        sd: f64,
    },
    Cauchy {
        loc: f64,
        scale: f64,
    },
    Laplace {
        loc: f64,
        scale: f64,
    },
    Uniform {
        a: f64,
        b: f64,
    },
    Exponential {
        rate: f64,
        #[serde(default)]
        shift: f64,
    },
    Histogram {
        breakpoints: Vec<f64>,
        heights: Vec<f64>,
    },
    ExpFamily {
        basis: Vec<Basis1D>,
        coefficients: Vec<f64>,
        lower: Option<f64>,
        upper: Option<f64>,
    },
    /// `N(θ, 1)` written against the standard Gaussian base with a singular
    /// spike at `x = θ` (for `θ > 0`). Lebesgue-a.e. equal to the normal density.
    PathologicalGaussian {
        theta: f64,
    },
    /// Piecewise-linear interpolation of `values` on `grid`, zero outside.
    Tabulated {
        grid: Vec<f64>,
        values: Vec<f64>,
    },
    /// Point masses, density with respect to counting measure.
    Discrete {
        support: Vec<f64>,
        probs: Vec<f64>,
    },
    Mixture {
        weights: Vec<f64>,
        components: Vec<DensityKind>,
    },
    Translated {
        inner: Box<DensityKind>,
        shift: f64,
    },
}

#[derive(Clone, Debug)]
enum Aux {
    None,
    LogNorm(f64),
    Components(Vec<Density1D>),
    Inner(Box<Density1D>),
}

/// A validated density. Construction checks parameters and normalization;
/// exponential-family normalizers are computed once here.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "DensityKind", into = "DensityKind")]
pub struct Density1D {
    kind: DensityKind,
    aux: Aux,
}

impl PartialEq for Density1D {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

impl From<Density1D> for DensityKind {
    fn from(d: Density1D) -> Self {
        d.kind
    }
}

impl TryFrom<DensityKind> for Density1D {
    type Error = Error;
    fn try_from(kind: DensityKind) -> Result<Self> {
        Density1D::new(kind)
    }
}

fn require(cond: bool, msg: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidDensity(msg.to_string()))
    }
}

fn all_finite(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite())
}

fn strictly_increasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[0] < w[1])
}

fn log_sum_exp(terms: impl Iterator<Item = f64>) -> f64 {
    let terms: Vec<f64> = terms.collect();
    let m = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + terms.iter().map(|t| (t - m).exp()).sum::<f64>().ln()
}

fn exp_family_exponent(basis: &[Basis1D], coefficients: &[f64], x: f64) -> f64 {
    basis
        .iter()
        .zip(coefficients)
        .map(|(g, b)| if *b == 0.0 { 0.0 } else { b * g.eval(x) })
        .sum()
}

fn exp_family_log_norm(basis: &[Basis1D], coefficients: &[f64], lower: f64, upper: f64) -> Result<f64> {
    let e = |x: f64| exp_family_exponent(basis, coefficients, x);
    let mut probes = Vec::new();
    if lower.is_finite() && upper.is_finite() {
        for k in 0..=400 {
            probes.push(lower + (upper - lower) * k as f64 / 400.0);
        }
    } else {
        let anchor = if lower.is_finite() {
            lower
        } else if upper.is_finite() {
            upper
        } else {
            0.0
        };
        probes.push(anchor);
        for k in -12..=24 {
            let r = 10f64.powf(k as f64 / 4.0);
            for x in [anchor - r, anchor + r] {
                if x >= lower && x <= upper {
                    probes.push(x);
                }
            }
        }
    }
    let (mut m, mut mode) = (f64::NEG_INFINITY, f64::NAN);
    for &x in &probes {
        let v = e(x);
        if v.is_nan() {
            return Err(Error::DivergentNormalizer(format!("exponent is NaN at x = {x}")));
        }
        if v > m {
            m = v;
            mode = x;
        }
    }
    if !m.is_finite() {
        return Err(Error::DivergentNormalizer("exponent is not finite on the domain".into()));
    }
    for (end, sign) in [(upper, 1.0), (lower, -1.0)] {
        if end.is_infinite() {
            let near = e(sign * 1e5);
            let far = e(sign * 1e6);
            if !(far < near && far - m < -40.0) {
                return Err(Error::DivergentNormalizer(format!(
                    "exponent does not decay towards {}",
                    if sign > 0.0 { "+inf" } else { "-inf" }
                )));
            }
        }
    }
    let mut breaks = vec![lower, upper];
    for d in [0.0, 1.0, 10.0, 100.0] {
        for x in [mode - d, mode + d] {
            if x > lower && x < upper {
                breaks.push(x);
            }
        }
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let z = integrate(|x| (e(x) - m).exp(), &breaks, &QuadratureSpec::adaptive(1e-11))
        .map_err(|err| Error::DivergentNormalizer(format!("normalizer quadrature failed: {err}")))?;
    if !(z > 0.0 && z.is_finite()) {
        return Err(Error::DivergentNormalizer(format!("normalizer = {z}")));
    }
    Ok(m + z.ln())
}

impl Density1D {
    pub fn new(kind: DensityKind) -> Result<Self> {
        let aux = match &kind {
            DensityKind::Gaussian { mean, sd } => {
                require(mean.is_finite() && sd.is_finite() && *sd > 0.0, "gaussian needs finite mean and sd > 0")?;
                Aux::None
            }
            DensityKind::Cauchy { loc, scale } | DensityKind::Laplace { loc, scale } => {
                require(loc.is_finite() && scale.is_finite() && *scale > 0.0, "location-scale density needs scale > 0")?;
                Aux::None
            }
            DensityKind::Uniform { a, b } => {
                require(a.is_finite() && b.is_finite() && a < b, "uniform needs finite a < b")?;
                Aux::None
            }
            DensityKind::Exponential { rate, shift } => {
                require(rate.is_finite() && *rate > 0.0 && shift.is_finite(), "exponential needs rate > 0")?;
                Aux::None
            }
            DensityKind::Histogram { breakpoints, heights } => {
                require(breakpoints.len() >= 2, "histogram needs at least two breakpoints")?;
                require(heights.len() + 1 == breakpoints.len(), "histogram needs one height per bin")?;
                require(all_finite(breakpoints) && strictly_increasing(breakpoints), "histogram breakpoints must increase")?;
                require(all_finite(heights) && heights.iter().all(|h| *h >= 0.0), "histogram heights must be >= 0")?;
                let mass: f64 = heights
                    .iter()
                    .zip(breakpoints.windows(2))
                    .map(|(h, w)| h * (w[1] - w[0]))
                    .sum();
                require((mass - 1.0).abs() <= 1e-9, &format!("histogram mass is {mass}, expected 1"))?;
                Aux::None
            }
            DensityKind::ExpFamily {
                basis,
                coefficients,
                lower,
                upper,
            } => {
                require(!basis.is_empty() && basis.len() == coefficients.len(), "exp-family needs one coefficient per basis function")?;
                require(all_finite(coefficients), "exp-family coefficients must be finite")?;
                let lo = lower.unwrap_or(f64::NEG_INFINITY);
                let hi = upper.unwrap_or(f64::INFINITY);
                require(!lo.is_nan() && !hi.is_nan() && lo < hi, "exp-family domain must be non-empty")?;
                let needs_positive = basis
                    .iter()
                    .zip(coefficients)
                    .any(|(g, b)| *b != 0.0 && matches!(g, Basis1D::Log | Basis1D::Power(i32::MIN..=-1)));
                require(!needs_positive || lo >= 0.0, "log and negative-power bases need a nonnegative domain")?;
                Aux::LogNorm(exp_family_log_norm(basis, coefficients, lo, hi)?)
            }
            DensityKind::PathologicalGaussian { theta } => {
                require(theta.is_finite(), "theta must be finite")?;
                Aux::None
            }
            DensityKind::Tabulated { grid, values } => {
                require(grid.len() >= 2 && grid.len() == values.len(), "tabulated density needs matching grid and values")?;
                require(all_finite(grid) && strictly_increasing(grid), "tabulated grid must increase")?;
                require(all_finite(values) && values.iter().all(|v| *v >= 0.0), "tabulated values must be >= 0")?;
                let mass: f64 = grid
                    .windows(2)
                    .zip(values.windows(2))
                    .map(|(g, v)| 0.5 * (v[0] + v[1]) * (g[1] - g[0]))
                    .sum();
                require((mass - 1.0).abs() <= 1e-8, &format!("tabulated mass is {mass}, expected 1"))?;
                Aux::None
            }
            DensityKind::Discrete { support, probs } => {
                require(!support.is_empty() && support.len() == probs.len(), "discrete needs matching support and probs")?;
                require(all_finite(support), "discrete support must be finite")?;
                let mut sorted = support.clone();
                sorted.sort_by(f64::total_cmp);
                require(strictly_increasing(&sorted), "discrete support points must be distinct")?;
                require(all_finite(probs) && probs.iter().all(|p| *p >= 0.0), "discrete probs must be >= 0")?;
                let mass: f64 = probs.iter().sum();
                require((mass - 1.0).abs() <= 1e-9, &format!("discrete mass is {mass}, expected 1"))?;
                Aux::None
            }
            DensityKind::Mixture { weights, components } => {
                require(!components.is_empty() && weights.len() == components.len(), "mixture needs one weight per component")?;
                require(all_finite(weights) && weights.iter().all(|w| *w >= 0.0), "mixture weights must be >= 0")?;
                let mass: f64 = weights.iter().sum();
                require((mass - 1.0).abs() <= 1e-9, "mixture weights must sum to 1")?;
                let comps = components
                    .iter()
                    .cloned()
                    .map(Density1D::new)
                    .collect::<Result<Vec<_>>>()?;
                let base = comps[0].base_measure();
                require(comps.iter().all(|c| c.base_measure() == base), "mixture components must share a base measure")?;
                Aux::Components(comps)
            }
            DensityKind::Translated { inner, shift } => {
                require(shift.is_finite(), "shift must be finite")?;
                Aux::Inner(Box::new(Density1D::new((**inner).clone())?))
            }
        };
        Ok(Density1D { kind, aux })
    }

    pub fn gaussian(mean: f64, sd: f64) -> Result<Self> {
        Density1D::new(DensityKind::Gaussian { mean, sd })
    }

    pub fn cauchy(loc: f64, scale: f64) -> Result<Self> {
        Density1D::new(DensityKind::Cauchy { loc, scale })
    }

    pub fn laplace(loc: f64, scale: f64) -> Result<Self> {
        Density1D::new(DensityKind::Laplace { loc, scale })
    }

    pub fn uniform(a: f64, b: f64) -> Result<Self> {
        Density1D::new(DensityKind::Uniform { a, b })
    }

    pub fn exponential(rate: f64, shift: f64) -> Result<Self> {
        Density1D::new(DensityKind::Exponential { rate, shift })
    }

    pub fn histogram(breakpoints: Vec<f64>, heights: Vec<f64>) -> Result<Self> {
        Density1D::new(DensityKind::Histogram { breakpoints, heights })
    }

    pub fn pathological_gaussian(theta: f64) -> Result<Self> {
        Density1D::new(DensityKind::PathologicalGaussian { theta })
    }

    pub fn discrete(support: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        Density1D::new(DensityKind::Discrete { support, probs })
    }

    pub fn kind(&self) -> &DensityKind {
        &self.kind
    }

    /// Stable textual key, equal for equal densities.
    pub fn key(&self) -> String {
        serde_json::to_string(&self.kind).expect("density kinds always serialize")
    }

    pub fn base_measure(&self) -> BaseMeasure {
        match (&self.kind, &self.aux) {
            (DensityKind::PathologicalGaussian { .. }, _) => BaseMeasure::StandardGaussian,
            (DensityKind::Discrete { .. }, _) => BaseMeasure::Counting,
            (_, Aux::Components(c)) if c[0].base_measure() == BaseMeasure::Counting => BaseMeasure::Counting,
            (_, Aux::Inner(inner)) if inner.base_measure() == BaseMeasure::Counting => BaseMeasure::Counting,
            _ => BaseMeasure::Lebesgue,
        }
    }

    pub fn is_continuous(&self) -> bool {
        self.base_measure() != BaseMeasure::Counting
    }

    /// Declared unimodal by kind.
    pub fn is_unimodal(&self) -> bool {
        match &self.kind {
            DensityKind::Gaussian { .. }
            | DensityKind::Cauchy { .. }
            | DensityKind::Laplace { .. }
            | DensityKind::Uniform { .. }
            | DensityKind::Exponential { .. }
            | DensityKind::PathologicalGaussian { .. } => true,
            DensityKind::Translated { .. } => match &self.aux {
                Aux::Inner(inner) => inner.is_unimodal(),
                _ => false,
            },
            _ => false,
        }
    }

    /// Log of the density with respect to [`Self::base_measure`], exactly as
    /// represented (including singular terms).
    pub fn ln_pdf(&self, x: f64) -> f64 {
        match (&self.kind, &self.aux) {
            (DensityKind::PathologicalGaussian { theta }, _) => {
                let t = *theta;
                let mut v = t * x - 0.5 * t * t;
                if t > 0.0 && x == t {
                    v += 0.5 * t * t * (x * x).exp();
                }
                v
            }
            _ => self.ln_lebesgue_pdf(x),
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.ln_pdf(x).exp()
    }

    /// Log of a Lebesgue density (counting density for discrete kinds). For the
    /// pathological Gaussian this is the ordinary normal density.
    pub fn ln_lebesgue_pdf(&self, x: f64) -> f64 {
        match (&self.kind, &self.aux) {
            (DensityKind::Gaussian { mean, sd }, _) => {
                let z = (x - mean) / sd;
                -0.5 * z * z - sd.ln() - LN_SQRT_2PI
            }
            (DensityKind::PathologicalGaussian { theta }, _) => {
                let z = x - theta;
                -0.5 * z * z - LN_SQRT_2PI
            }
            (DensityKind::Cauchy { loc, scale }, _) => {
                let z = (x - loc) / scale;
                -(PI * scale).ln() - z.mul_add(z, 1.0).ln()
            }
            (DensityKind::Laplace { loc, scale }, _) => -((x - loc).abs() / scale) - (2.0 * scale).ln(),
            (DensityKind::Uniform { a, b }, _) => {
                if x >= *a && x <= *b {
                    -(b - a).ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
            (DensityKind::Exponential { rate, shift }, _) => {
                if x >= *shift {
                    rate.ln() - rate * (x - shift)
                } else {
                    f64::NEG_INFINITY
                }
            }
            (DensityKind::Histogram { breakpoints, heights }, _) => {
                let last = breakpoints.len() - 1;
                if x < breakpoints[0] || x > breakpoints[last] {
                    return f64::NEG_INFINITY;
                }
                let bin = (breakpoints.partition_point(|b| *b <= x) - 1).min(heights.len() - 1);
                heights[bin].ln()
            }
            (
                DensityKind::ExpFamily {
                    basis,
                    coefficients,
                    lower,
                    upper,
                },
                Aux::LogNorm(log_norm),
            ) => {
                if lower.is_some_and(|lo| x < lo) || upper.is_some_and(|hi| x > hi) {
                    return f64::NEG_INFINITY;
                }
                exp_family_exponent(basis, coefficients, x) - log_norm
            }
            (DensityKind::Tabulated { grid, values }, _) => {
                let last = grid.len() - 1;
                if x < grid[0] || x > grid[last] {
                    return f64::NEG_INFINITY;
                }
                let j = (grid.partition_point(|g| *g <= x)).clamp(1, last);
                let (g0, g1) = (grid[j - 1], grid[j]);
                let t = (x - g0) / (g1 - g0);
                (values[j - 1] + t * (values[j] - values[j - 1])).ln()
            }
            (DensityKind::Discrete { support, probs }, _) => support
                .iter()
                .position(|s| *s == x)
                .map_or(f64::NEG_INFINITY, |k| probs[k].ln()),
            (DensityKind::Mixture { weights, .. }, Aux::Components(comps)) => {
                log_sum_exp(weights.iter().zip(comps).map(|(w, c)| w.ln() + c.ln_lebesgue_pdf(x)))
            }
            (DensityKind::Translated { shift, .. }, Aux::Inner(inner)) => inner.ln_lebesgue_pdf(x - shift),
            _ => unreachable!("auxiliary data always matches the kind"),
        }
    }

    pub fn lebesgue_pdf(&self, x: f64) -> f64 {
        self.ln_lebesgue_pdf(x).exp()
    }

    /// Closed support interval (possibly infinite).
    pub fn support(&self) -> (f64, f64) {
        match (&self.kind, &self.aux) {
            (DensityKind::Uniform { a, b }, _) => (*a, *b),
            (DensityKind::Exponential { shift, .. }, _) => (*shift, f64::INFINITY),
            (DensityKind::Histogram { breakpoints, .. }, _) => (breakpoints[0], breakpoints[breakpoints.len() - 1]),
            (DensityKind::ExpFamily { lower, upper, .. }, _) => {
                (lower.unwrap_or(f64::NEG_INFINITY), upper.unwrap_or(f64::INFINITY))
            }
            (DensityKind::Tabulated { grid, .. }, _) => (grid[0], grid[grid.len() - 1]),
            (DensityKind::Discrete { support, .. }, _) => {
                let lo = support.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = support.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                (lo, hi)
            }
            (_, Aux::Components(comps)) => comps.iter().map(Density1D::support).fold(
                (f64::INFINITY, f64::NEG_INFINITY),
                |(lo, hi), (a, b)| (lo.min(a), hi.max(b)),
            ),
            (DensityKind::Translated { shift, .. }, Aux::Inner(inner)) => {
                let (a, b) = inner.support();
                (a + shift, b + shift)
            }
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    /// Finite points where the density has kinks or most of its curvature;
    /// useful as quadrature breakpoints.
    pub fn breakpoints(&self) -> Vec<f64> {
        let scaled = |loc: f64, scale: f64, offsets: &[f64]| offsets.iter().map(|o| loc + o * scale).collect::<Vec<_>>();
        let mut out = match (&self.kind, &self.aux) {
            (DensityKind::Gaussian { mean, sd }, _) => scaled(*mean, *sd, &[-8.0, -4.0, -2.0, -1.0, 0.0, 1.0, 2.0, 4.0, 8.0]),
            (DensityKind::PathologicalGaussian { theta }, _) => {
                scaled(*theta, 1.0, &[-8.0, -4.0, -2.0, -1.0, 0.0, 1.0, 2.0, 4.0, 8.0])
            }
            (DensityKind::Cauchy { loc, scale }, _) => scaled(*loc, *scale, &[-100.0, -10.0, -1.0, 0.0, 1.0, 10.0, 100.0]),
            (DensityKind::Laplace { loc, scale }, _) => scaled(*loc, *scale, &[-20.0, -5.0, -1.0, 0.0, 1.0, 5.0, 20.0]),
            (DensityKind::Uniform { a, b }, _) => vec![*a, *b],
            (DensityKind::Exponential { rate, shift }, _) => {
                scaled(*shift, 1.0 / rate, &[0.0, 1.0, 5.0, 20.0, 40.0])
            }
            (DensityKind::Histogram { breakpoints, .. }, _) => breakpoints.clone(),
            (DensityKind::Tabulated { grid, .. }, _) => grid.clone(),
            (DensityKind::Discrete { support, .. }, _) => support.clone(),
            (DensityKind::ExpFamily { lower, upper, .. }, _) => {
                let mut v: Vec<f64> = [*lower, *upper].into_iter().flatten().collect();
                if lower.is_none() || upper.is_none() {
                    v.extend([-10.0, -1.0, 0.0, 1.0, 10.0]);
                }
                v
            }
            (_, Aux::Components(comps)) => comps.iter().flat_map(Density1D::breakpoints).collect(),
            (DensityKind::Translated { shift, .. }, Aux::Inner(inner)) => {
                inner.breakpoints().into_iter().map(|b| b + shift).collect()
            }
            _ => unreachable!("auxiliary data always matches the kind"),
        };
        out.retain(|b| b.is_finite());
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }

    /// The same law shifted by `a`.
    pub fn translate(&self, a: f64) -> Result<Density1D> {
        if a == 0.0 {
            return Ok(self.clone());
        }
        let kind = match &self.kind {
            DensityKind::Gaussian { mean, sd } => DensityKind::Gaussian { mean: mean + a, sd: *sd },
            DensityKind::Cauchy { loc, scale } => DensityKind::Cauchy { loc: loc + a, scale: *scale },
            DensityKind::Laplace { loc, scale } => DensityKind::Laplace { loc: loc + a, scale: *scale },
            DensityKind::Uniform { a: lo, b: hi } => DensityKind::Uniform { a: lo + a, b: hi + a },
            DensityKind::Exponential { rate, shift } => DensityKind::Exponential { rate: *rate, shift: shift + a },
            DensityKind::Histogram { breakpoints, heights } => DensityKind::Histogram {
                breakpoints: breakpoints.iter().map(|b| b + a).collect(),
                heights: heights.clone(),
            },
            DensityKind::Tabulated { grid, values } => DensityKind::Tabulated {
                grid: grid.iter().map(|g| g + a).collect(),
                values: values.clone(),
            },
            DensityKind::Discrete { support, probs } => DensityKind::Discrete {
                support: support.iter().map(|s| s + a).collect(),
                probs: probs.clone(),
            },
            DensityKind::Translated { inner, shift } => DensityKind::Translated {
                inner: inner.clone(),
                shift: shift + a,
            },
            other => DensityKind::Translated {
                inner: Box::new(other.clone()),
                shift: a,
            },
        };
        Density1D::new(kind)
    }

    /// Draw one observation.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match (&self.kind, &self.aux) {
            (DensityKind::Gaussian { mean, sd }, _) => Normal::new(*mean, *sd).expect("validated").sample(rng),
            (DensityKind::PathologicalGaussian { theta }, _) => Normal::new(*theta, 1.0).expect("validated").sample(rng),
            (DensityKind::Cauchy { loc, scale }, _) => Cauchy::new(*loc, *scale).expect("validated").sample(rng),
            (DensityKind::Laplace { loc, scale }, _) => {
                let u: f64 = rng.random::<f64>() - 0.5;
                loc - scale * u.signum() * (-2.0 * u.abs()).ln_1p()
            }
            (DensityKind::Uniform { a, b }, _) => a + (b - a) * rng.random::<f64>(),
            (DensityKind::Exponential { rate, shift }, _) => shift - (-rng.random::<f64>()).ln_1p() / rate,
            (DensityKind::Histogram { breakpoints, heights }, _) => {
                let masses: Vec<f64> = heights
                    .iter()
                    .zip(breakpoints.windows(2))
                    .map(|(h, w)| h * (w[1] - w[0]))
                    .collect();
                let bin = pick(&masses, rng);
                breakpoints[bin] + (breakpoints[bin + 1] - breakpoints[bin]) * rng.random::<f64>()
            }
            (DensityKind::Tabulated { grid, values }, _) => sample_piecewise_linear(grid, values, rng),
            (DensityKind::ExpFamily { .. }, _) => {
                let (grid, values) = self.tabulate_for_sampling();
                sample_piecewise_linear(&grid, &values, rng)
            }
            (DensityKind::Discrete { support, probs }, _) => support[pick(probs, rng)],
            (DensityKind::Mixture { weights, .. }, Aux::Components(comps)) => comps[pick(weights, rng)].sample(rng),
            (DensityKind::Translated { shift, .. }, Aux::Inner(inner)) => inner.sample(rng) + shift,
            _ => unreachable!("auxiliary data always matches the kind"),
        }
    }

    /// Piecewise-linear approximation on 4097 nodes over the effective support.
    fn tabulate_for_sampling(&self) -> (Vec<f64>, Vec<f64>) {
        let (lo, hi) = self.support();
        let bps = self.breakpoints();
        let centre = bps.iter().copied().fold((f64::NEG_INFINITY, 0.0), |(best, arg), x| {
            let v = self.ln_lebesgue_pdf(x);
            if v > best {
                (v, x)
            } else {
                (best, arg)
            }
        });
        let peak = centre.0;
        let reach = |dir: f64, end: f64| {
            if end.is_finite() {
                return end;
            }
            let mut step = 1.0;
            loop {
                let x = centre.1 + dir * step;
                if self.ln_lebesgue_pdf(x) < peak - 40.0 || step > 1e8 {
                    return x;
                }
                step *= 2.0;
            }
        };
        let (a, b) = (reach(-1.0, lo), reach(1.0, hi));
        let grid: Vec<f64> = (0..=4096).map(|k| a + (b - a) * k as f64 / 4096.0).collect();
        let values: Vec<f64> = grid.iter().map(|&x| self.lebesgue_pdf(x)).collect();
        (grid, values)
    }
}

fn pick<R: Rng + ?Sized>(masses: &[f64], rng: &mut R) -> usize {
    let total: f64 = masses.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (k, m) in masses.iter().enumerate() {
        if u < *m {
            return k;
        }
        u -= m;
    }
    masses.iter().rposition(|m| *m > 0.0).unwrap_or(masses.len() - 1)
}

fn sample_piecewise_linear<R: Rng + ?Sized>(grid: &[f64], values: &[f64], rng: &mut R) -> f64 {
    let masses: Vec<f64> = grid
        .windows(2)
        .zip(values.windows(2))
        .map(|(g, v)| 0.5 * (v[0] + v[1]) * (g[1] - g[0]))
        .collect();
    let j = pick(&masses, rng);
    let (x0, x1, f0, f1) = (grid[j], grid[j + 1], values[j], values[j + 1]);
    let width = x1 - x0;
    let u: f64 = rng.random();
    // invert the quadratic CDF of a linear density on the cell
    let slope = (f1 - f0) / width;
    let target = u * masses[j];
    if slope.abs() < 1e-12 * (f0 + f1).max(1e-300) / width {
        return x0 + u * width;
    }
    let disc = (f0 * f0 + 2.0 * slope * target).max(0.0);
    let t = 2.0 * target / (f0 + disc.sqrt());
    (x0 + t).clamp(x0, x1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn mass(d: &Density1D) -> f64 {
        let (lo, hi) = d.support();
        let mut breaks = vec![lo, hi];
        breaks.extend(d.breakpoints().into_iter().filter(|b| *b > lo && *b < hi));
        breaks.sort_by(f64::total_cmp);
        integrate(|x| d.lebesgue_pdf(x), &breaks, &QuadratureSpec::adaptive(1e-11)).unwrap()
    }

    #[test]
    fn closed_form_kinds_integrate_to_one() {
        let ds = [
            Density1D::gaussian(0.3, 2.0).unwrap(),
            Density1D::cauchy(-1.0, 0.5).unwrap(),
            Density1D::laplace(2.0, 3.0).unwrap(),
            Density1D::uniform(-1.0, 4.0).unwrap(),
            Density1D::exponential(2.5, 1.0).unwrap(),
            Density1D::histogram(vec![0.0, 0.5, 2.0], vec![1.0, 1.0 / 3.0]).unwrap(),
            Density1D::pathological_gaussian(0.7).unwrap(),
        ];
        for d in &ds {
            assert!((mass(d) - 1.0).abs() < 1e-8, "{:?}", d.kind());
        }
    }

    #[test]
    fn exp_family_recovers_standard_normal() {
        let d = Density1D::new(DensityKind::ExpFamily {
            basis: vec![Basis1D::Power(1), Basis1D::Power(2)],
            coefficients: vec![0.0, -0.5],
            lower: None,
            upper: None,
        })
        .unwrap();
        let n = Density1D::gaussian(0.0, 1.0).unwrap();
        for x in [-3.0, -0.2, 0.0, 1.7] {
            assert!((d.ln_pdf(x) - n.ln_pdf(x)).abs() < 1e-9);
        }
    }

    #[test]
    fn exp_family_flat_on_unit_interval_is_uniform() {
        let d = Density1D::new(DensityKind::ExpFamily {
            basis: vec![Basis1D::Power(1)],
            coefficients: vec![0.0],
            lower: Some(0.0),
            upper: Some(1.0),
        })
        .unwrap();
        assert!(d.ln_pdf(0.4).abs() < 1e-10);
        assert_eq!(d.ln_pdf(1.5), f64::NEG_INFINITY);
    }

    #[test]
    fn exp_family_divergence_is_reported() {
        let err = Density1D::new(DensityKind::ExpFamily {
            basis: vec![Basis1D::Power(1)],
            coefficients: vec![0.5],
            lower: None,
            upper: None,
        })
        .unwrap_err();
        assert!(matches!(err, Error::DivergentNormalizer(_)));
    }

    #[test]
    fn histogram_mass_is_checked() {
        assert!(Density1D::histogram(vec![0.0, 1.0], vec![2.0]).is_err());
        let h = Density1D::histogram(vec![0.0, 0.5, 1.0], vec![1.2, 0.8]).unwrap();
        assert!((h.pdf(0.25) - 1.2).abs() < 1e-15);
        assert!((h.pdf(1.0) - 0.8).abs() < 1e-15);
        assert_eq!(h.pdf(1.01), 0.0);
    }

    #[test]
    fn pathological_spike_only_at_theta() {
        let d = Density1D::pathological_gaussian(0.5).unwrap();
        let regular = 0.5 * 0.6 - 0.125;
        assert!((d.ln_pdf(0.6) - regular).abs() < 1e-15);
        let at = 0.25 - 0.125 + 0.125 * 0.25f64.exp();
        assert!((d.ln_pdf(0.5) - at).abs() < 1e-15);
        let neg = Density1D::pathological_gaussian(-0.5).unwrap();
        assert!((neg.ln_pdf(-0.5) - (0.25 - 0.125)).abs() < 1e-15);
        let n = Density1D::gaussian(0.5, 1.0).unwrap();
        assert!((d.ln_lebesgue_pdf(0.5) - n.ln_pdf(0.5)).abs() < 1e-15);
    }

    #[test]
    fn json_shape_is_kind_and_params() {
        let d = Density1D::gaussian(1.0, 2.0).unwrap();
        let v = serde_json::to_value(&d).unwrap();
        assert_eq!(v["kind"], "gaussian");
        assert_eq!(v["params"]["sd"], 2.0);
        let back: Density1D = serde_json::from_value(v).unwrap();
        assert_eq!(back, d);
        let bad = serde_json::json!({"kind": "gaussian", "params": {"mean": 0.0, "sd": -1.0}});
        assert!(serde_json::from_value::<Density1D>(bad).is_err());
    }

    #[test]
    fn translation_moves_the_law() {
        let d = Density1D::laplace(0.0, 1.0).unwrap();
        let t = d.translate(2.0).unwrap();
        assert!((t.pdf(2.3) - d.pdf(0.3)).abs() < 1e-15);
        let m = Density1D::new(DensityKind::Mixture {
            weights: vec![0.5, 0.5],
            components: vec![d.kind().clone(), DensityKind::Gaussian { mean: 0.0, sd: 1.0 }],
        })
        .unwrap();
        let mt = m.translate(-1.0).unwrap();
        assert!((mt.pdf(-1.0) - m.pdf(0.0)).abs() < 1e-15);
    }

    #[test]
    fn sampling_matches_first_moment() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let cases = [
            (Density1D::laplace(1.0, 2.0).unwrap(), 1.0),
            (Density1D::exponential(2.0, 1.0).unwrap(), 1.5),
            (Density1D::histogram(vec![0.0, 1.0, 3.0], vec![0.5, 0.25]).unwrap(), 0.25 + 1.0),
            (
                Density1D::new(DensityKind::Tabulated {
                    grid: vec![0.0, 1.0],
                    values: vec![0.0, 2.0],
                })
                .unwrap(),
                2.0 / 3.0,
            ),
            (
                Density1D::new(DensityKind::ExpFamily {
                    basis: vec![Basis1D::Power(1)],
                    coefficients: vec![-1.0],
                    lower: Some(0.0),
                    upper: None,
                })
                .unwrap(),
                1.0,
            ),
        ];
        for (d, mean) in &cases {
            let m: f64 = (0..40_000).map(|_| d.sample(&mut rng)).sum::<f64>() / 40_000.0;
            assert!((m - mean).abs() < 0.05, "{:?}: {m}", d.kind());
        }
    }
}
