//! Globally adaptive Gauss–Kronrod (7/15) quadrature on finite and infinite
//! intervals.
//!
//! The integration range is given as a sorted list of breakpoints; the first
//! and last may be infinite, in which case the tail is mapped onto `[0, 1)`
//! with `x = a ± t / (1 - t)`. Breakpoints should sit on every kink of the
//! integrand (support edges, histogram breaks) so that each piece is smooth.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_225,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Adaptive,
    /// Every piece split into `panels` equal sub-intervals, no error control.
    FixedGrid { panels: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub scheme: Scheme,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            scheme: Scheme::Adaptive,
            abs_tol: 1e-9,
            max_subdivisions: 1 << 20,
        }
    }
}

impl QuadratureSpec {
    pub fn adaptive(abs_tol: f64) -> Self {
        QuadratureSpec {
            abs_tol,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0) {
            return Err(Error::contract("quadrature abs_tol must be > 0"));
        }
        if self.max_subdivisions == 0 {
            return Err(Error::contract("quadrature max_subdivisions must be >= 1"));
        }
        if let Scheme::FixedGrid { panels } = self.scheme {
            if panels == 0 {
                return Err(Error::contract("fixed-grid quadrature needs >= 1 panel"));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug)]
enum Map {
    Finite,
    /// x = origin + t / (1 - t)
    Right(f64),
    /// x = origin - t / (1 - t)
    Left(f64),
}

impl Map {
    #[inline]
    fn apply<F: Fn(f64) -> f64>(&self, f: &F, t: f64) -> f64 {
        match *self {
            Map::Finite => f(t),
            Map::Right(a) => {
                let s = 1.0 - t;
                f(a + t / s) / (s * s)
            }
            Map::Left(b) => {
                let s = 1.0 - t;
                f(b - t / s) / (s * s)
            }
        }
    }
}

/// Kronrod estimate and |K15 - G7| on `[lo, hi]` in the mapped variable.
fn gk15<F: Fn(f64) -> f64>(f: &F, map: Map, lo: f64, hi: f64) -> (f64, f64) {
    let centre = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let fc = map.apply(f, centre);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = map.apply(f, centre - dx) + map.apply(f, centre + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    let value = kronrod * half;
    let err = ((kronrod - gauss) * half).abs();
    (value, err)
}

struct Interval {
    err: f64,
    piece: usize,
    lo: f64,
    hi: f64,
    value: f64,
}

impl PartialEq for Interval {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Interval {}
impl PartialOrd for Interval {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Interval {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

fn pieces(breaks: &[f64]) -> Result<Vec<(Map, f64, f64)>> {
    if breaks.len() < 2 {
        return Err(Error::contract("integration needs at least two breakpoints"));
    }
    if breaks.iter().any(|b| b.is_nan()) {
        return Err(Error::contract("NaN breakpoint"));
    }
    let mut out = Vec::with_capacity(breaks.len());
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        if !(a < b) {
            if a == b {
                continue;
            }
            return Err(Error::contract("breakpoints must be increasing"));
        }
        match (a.is_finite(), b.is_finite()) {
            (true, true) => out.push((Map::Finite, a, b)),
            (true, false) => out.push((Map::Right(a), 0.0, 1.0)),
            (false, true) => out.push((Map::Left(b), 0.0, 1.0)),
            (false, false) => {
                out.push((Map::Left(0.0), 0.0, 1.0));
                out.push((Map::Right(0.0), 0.0, 1.0));
            }
        }
    }
    Ok(out)
}

/// Integrate `f` over the union of the intervals delimited by `breaks`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, breaks: &[f64], spec: &QuadratureSpec) -> Result<f64> {
    spec.validate()?;
    let pieces = pieces(breaks)?;
    if pieces.is_empty() {
        return Ok(0.0);
    }
    match spec.scheme {
        Scheme::FixedGrid { panels } => {
            let mut total = 0.0;
            for &(map, lo, hi) in &pieces {
                let h = (hi - lo) / panels as f64;
                for k in 0..panels {
                    let a = lo + k as f64 * h;
                    let b = if k + 1 == panels { hi } else { a + h };
                    total += gk15(&f, map, a, b).0;
                }
            }
            finite_or_fail(total, spec, 0, f64::NAN)
        }
        Scheme::Adaptive => adaptive(&f, &pieces, spec),
    }
}

fn finite_or_fail(v: f64, spec: &QuadratureSpec, subdivisions: usize, estimate: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Quadrature {
            tol: spec.abs_tol,
            subdivisions,
            estimate,
        })
    }
}

fn adaptive<F: Fn(f64) -> f64>(f: &F, pieces: &[(Map, f64, f64)], spec: &QuadratureSpec) -> Result<f64> {
    let mut heap = BinaryHeap::with_capacity(64);
    let mut total = 0.0;
    let mut total_err = 0.0;
    for (idx, &(map, lo, hi)) in pieces.iter().enumerate() {
        let (value, err) = gk15(f, map, lo, hi);
        total += value;
        total_err += err;
        heap.push(Interval {
            err,
            piece: idx,
            lo,
            hi,
            value,
        });
    }
    let mut subdivisions = pieces.len();
    loop {
        if !total.is_finite() || !total_err.is_finite() {
            return Err(Error::Quadrature {
                tol: spec.abs_tol,
                subdivisions,
                estimate: total_err,
            });
        }
        if total_err <= spec.abs_tol || total_err <= 1e-15 * total.abs() {
            break;
        }
        if subdivisions >= spec.max_subdivisions {
            return Err(Error::Quadrature {
                tol: spec.abs_tol,
                subdivisions,
                estimate: total_err,
            });
        }
        let worst = heap.pop().expect("heap holds every interval");
        let mid = 0.5 * (worst.lo + worst.hi);
        if !(mid > worst.lo && mid < worst.hi) {
            // interval at floating-point resolution; its error cannot shrink further
            return Err(Error::Quadrature {
                tol: spec.abs_tol,
                subdivisions,
                estimate: total_err,
            });
        }
        let map = pieces[worst.piece].0;
        let (v1, e1) = gk15(f, map, worst.lo, mid);
        let (v2, e2) = gk15(f, map, mid, worst.hi);
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.err;
        heap.push(Interval {
            err: e1,
            piece: worst.piece,
            lo: worst.lo,
            hi: mid,
            value: v1,
        });
        heap.push(Interval {
            err: e2,
            piece: worst.piece,
            lo: mid,
            hi: worst.hi,
            value: v2,
        });
        subdivisions += 1;
        if subdivisions.is_multiple_of(256) {
            // refresh running sums to stop cancellation drift
            total = heap.iter().map(|i| i.value).sum();
            total_err = heap.iter().map(|i| i.err).sum();
        }
    }
    let total: f64 = heap.iter().map(|i| i.value).sum();
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let v = integrate(|x| x * x, &[0.0, 3.0], &QuadratureSpec::default()).unwrap();
        assert!((v - 9.0).abs() < 1e-13);
    }

    #[test]
    fn gaussian_over_real_line() {
        let c = (2.0 * std::f64::consts::PI).sqrt();
        let v = integrate(
            |x| (-0.5 * x * x).exp() / c,
            &[f64::NEG_INFINITY, f64::INFINITY],
            &QuadratureSpec::default(),
        )
        .unwrap();
        assert!((v - 1.0).abs() < 1e-10, "{v}");
    }

    #[test]
    fn cauchy_tails() {
        let v = integrate(
            |x| 1.0 / (std::f64::consts::PI * (1.0 + x * x)),
            &[f64::NEG_INFINITY, -1.0, 1.0, f64::INFINITY],
            &QuadratureSpec::default(),
        )
        .unwrap();
        assert!((v - 1.0).abs() < 1e-9, "{v}");
    }

    #[test]
    fn kink_without_breakpoint_still_converges() {
        let v = integrate(|x: f64| x.abs(), &[-1.0, 2.0], &QuadratureSpec::default()).unwrap();
        assert!((v - 2.5).abs() < 1e-9);
    }

    #[test]
    fn reports_failure_when_budget_exhausted() {
        let spec = QuadratureSpec {
            scheme: Scheme::Adaptive,
            abs_tol: 1e-14,
            max_subdivisions: 3,
        };
        let err = integrate(|x: f64| (1.0 / x).sin(), &[1e-3, 1.0], &spec).unwrap_err();
        assert!(matches!(err, Error::Quadrature { .. }));
    }

    #[test]
    fn rejects_bad_spec() {
        let spec = QuadratureSpec {
            abs_tol: 0.0,
            ..Default::default()
        };
        assert!(integrate(|x| x, &[0.0, 1.0], &spec).is_err());
    }

    #[test]
    fn fixed_grid_matches_adaptive_on_smooth_integrand() {
        let spec = QuadratureSpec {
            scheme: Scheme::FixedGrid { panels: 8 },
            ..Default::default()
        };
        let v = integrate(|x: f64| x.exp(), &[0.0, 1.0], &spec).unwrap();
        assert!((v - (1f64.exp() - 1.0)).abs() < 1e-13);
    }
}
