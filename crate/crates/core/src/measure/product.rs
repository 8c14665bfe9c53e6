//! Product densities `q = (q_1, ..., q_n)` over independent coordinates.

use serde::{Deserialize, Serialize};

use super::density::Density1D;
use super::hellinger::hellinger_sq;
use super::quadrature::QuadratureSpec;
use super::sample::{Point, Sample};
use crate::error::{Error, Result};

/// Basis function of a regression design `w`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisFn {
    Constant,
    Coordinate(usize),
    Power { coord: usize, exponent: i32 },
}

impl BasisFn {
    pub fn eval(&self, w: &[f64]) -> f64 {
        match self {
            BasisFn::Constant => 1.0,
            BasisFn::Coordinate(j) => w[*j],
            BasisFn::Power { coord, exponent } => w[*coord].powi(*exponent),
        }
    }

    fn max_coord(&self) -> Option<usize> {
        match self {
            BasisFn::Constant => None,
            BasisFn::Coordinate(j) | BasisFn::Power { coord: j, .. } => Some(*j),
        }
    }
}

/// `g(w) = Σ θ_k b_k(w)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegressionFunction {
    pub basis: Vec<BasisFn>,
    pub coefficients: Vec<f64>,
}

impl RegressionFunction {
    pub fn new(basis: Vec<BasisFn>, coefficients: Vec<f64>) -> Result<Self> {
        if basis.len() != coefficients.len() {
            return Err(Error::contract("regression function needs one coefficient per basis function"));
        }
        if coefficients.iter().any(|c| !c.is_finite()) {
            return Err(Error::contract("regression coefficients must be finite"));
        }
        Ok(RegressionFunction { basis, coefficients })
    }

    /// The function identically equal to `c`.
    pub fn constant(c: f64) -> Self {
        RegressionFunction {
            basis: vec![BasisFn::Constant],
            coefficients: vec![c],
        }
    }

    pub fn eval(&self, w: &[f64]) -> f64 {
        self.basis
            .iter()
            .zip(&self.coefficients)
            .map(|(b, c)| c * b.eval(w))
            .sum()
    }

    /// Design dimension needed to evaluate this function.
    pub fn min_design_dim(&self) -> usize {
        self.basis.iter().filter_map(BasisFn::max_coord).map(|j| j + 1).max().unwrap_or(0)
    }
}

/// Law of one coordinate: a univariate density, or the conditional density
/// `(w, y) ↦ r(y − g(w))` of a regression pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Marginal {
    Univariate(Density1D),
    Regression { error: Density1D, func: RegressionFunction },
}

impl Marginal {
    /// Log-density at `p`, `None` when `p` is of the wrong kind.
    pub fn ln_pdf(&self, p: &Point) -> Option<f64> {
        match (self, p) {
            (Marginal::Univariate(d), Point::Scalar(x)) => Some(d.ln_pdf(*x)),
            (Marginal::Regression { error, func }, Point::Pair { w, y }) => {
                if w.len() < func.min_design_dim() {
                    return None;
                }
                Some(error.ln_pdf(y - func.eval(w)))
            }
            _ => None,
        }
    }

    pub fn univariate(&self) -> Option<&Density1D> {
        match self {
            Marginal::Univariate(d) => Some(d),
            Marginal::Regression { .. } => None,
        }
    }
}

impl From<Density1D> for Marginal {
    fn from(d: Density1D) -> Self {
        Marginal::Univariate(d)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ProductDensity {
    /// One marginal replicated over `n` coordinates.
    Iid { marginal: Marginal, n: usize },
    Independent { coords: Vec<Marginal> },
}

impl ProductDensity {
    pub fn iid(marginal: impl Into<Marginal>, n: usize) -> Self {
        ProductDensity::Iid {
            marginal: marginal.into(),
            n,
        }
    }

    pub fn independent(coords: Vec<Marginal>) -> Self {
        ProductDensity::Independent { coords }
    }

    pub fn n(&self) -> usize {
        match self {
            ProductDensity::Iid { n, .. } => *n,
            ProductDensity::Independent { coords } => coords.len(),
        }
    }

    pub fn coord(&self, i: usize) -> &Marginal {
        match self {
            ProductDensity::Iid { marginal, .. } => marginal,
            ProductDensity::Independent { coords } => &coords[i],
        }
    }

    /// The shared marginal of an i.i.d. product.
    pub fn iid_marginal(&self) -> Option<&Marginal> {
        match self {
            ProductDensity::Iid { marginal, .. } => Some(marginal),
            ProductDensity::Independent { coords } => {
                let first = coords.first()?;
                coords.iter().all(|c| c == first).then_some(first)
            }
        }
    }

    /// Per-coordinate log-densities at the sample.
    pub fn ln_pdfs(&self, x: &Sample) -> Result<Vec<f64>> {
        if x.n() != self.n() {
            return Err(Error::contract(format!(
                "product density has {} coordinates, sample has {}",
                self.n(),
                x.n()
            )));
        }
        x.points()
            .iter()
            .enumerate()
            .map(|(i, p)| {
                self.coord(i)
                    .ln_pdf(p)
                    .ok_or_else(|| Error::contract(format!("observation {i} does not match its coordinate density")))
            })
            .collect()
    }
}

/// `𝐡²(P, Q) = Σ_i h²(P_i, Q_i)`.
pub fn product_hellinger_sq(p: &ProductDensity, q: &ProductDensity, quad: &QuadratureSpec) -> Result<f64> {
    if p.n() != q.n() {
        return Err(Error::contract(format!(
            "coordinate counts differ: {} vs {}",
            p.n(),
            q.n()
        )));
    }
    let coord_h2 = |a: &Marginal, b: &Marginal| -> Result<f64> {
        match (a.univariate(), b.univariate()) {
            (Some(a), Some(b)) => hellinger_sq(a, b, quad),
            _ => Err(Error::contract(
                "Hellinger distance between regression coordinates depends on the design law",
            )),
        }
    };
    if let (ProductDensity::Iid { marginal: a, n }, ProductDensity::Iid { marginal: b, .. }) = (p, q) {
        return Ok(*n as f64 * coord_h2(a, b)?);
    }
    (0..p.n()).map(|i| coord_h2(p.coord(i), q.coord(i))).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(m: f64) -> Density1D {
        Density1D::gaussian(m, 1.0).unwrap()
    }

    #[test]
    fn iid_scales_by_n() {
        let p = ProductDensity::iid(g(0.0), 10);
        let q = ProductDensity::iid(g(1.0), 10);
        let want = 10.0 * (1.0 - (-1.0f64 / 8.0).exp());
        let got = product_hellinger_sq(&p, &q, &QuadratureSpec::default()).unwrap();
        assert!((got - want).abs() < 1e-13);
        assert_eq!(product_hellinger_sq(&p, &p, &QuadratureSpec::default()).unwrap(), 0.0);
    }

    #[test]
    fn heterogeneous_sum() {
        let p = ProductDensity::independent(vec![g(0.0).into(), g(0.0).into()]);
        let q = ProductDensity::independent(vec![g(1.0).into(), g(0.0).into()]);
        let got = product_hellinger_sq(&p, &q, &QuadratureSpec::default()).unwrap();
        assert!((got - (1.0 - (-1.0f64 / 8.0).exp())).abs() < 1e-15);
    }

    #[test]
    fn mismatched_n_is_a_contract_error() {
        let p = ProductDensity::iid(g(0.0), 3);
        let q = ProductDensity::iid(g(0.0), 4);
        assert!(matches!(
            product_hellinger_sq(&p, &q, &QuadratureSpec::default()),
            Err(Error::Contract(_))
        ));
        let x = Sample::from_scalars(&[0.0, 1.0]).unwrap();
        assert!(p.ln_pdfs(&x).is_err());
    }

    #[test]
    fn regression_marginal_composes() {
        let r = Density1D::laplace(0.0, 1.0).unwrap();
        let f = RegressionFunction::new(vec![BasisFn::Constant, BasisFn::Coordinate(0)], vec![0.5, 2.0]).unwrap();
        let m = Marginal::Regression {
            error: r.clone(),
            func: f,
        };
        let p = Point::Pair { w: vec![0.25], y: 3.0 };
        assert_eq!(m.ln_pdf(&p).unwrap(), r.ln_pdf(3.0 - 1.0));
        assert!(m.ln_pdf(&Point::Scalar(0.0)).is_none());
    }
}
