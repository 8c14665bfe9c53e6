use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One observation: a scalar, or a regression pair `(w, y)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Point {
    Scalar(f64),
    Pair { w: Vec<f64>, y: f64 },
}

impl Point {
    fn same_kind(&self, other: &Point) -> bool {
        match (self, other) {
            (Point::Scalar(_), Point::Scalar(_)) => true,
            (Point::Pair { w: a, .. }, Point::Pair { w: b, .. }) => a.len() == b.len(),
            _ => false,
        }
    }

    pub fn as_scalar(&self) -> Option<f64> {
        match self {
            Point::Scalar(x) => Some(*x),
            Point::Pair { .. } => None,
        }
    }
}

/// `n >= 1` independent observations of a single ambient kind.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Sample {
    points: Vec<Point>,
}

impl Sample {
    pub fn new(points: Vec<Point>) -> Result<Self> {
        let first = points
            .first()
            .ok_or_else(|| Error::contract("a sample needs at least one observation"))?;
        if points.iter().any(|p| !p.same_kind(first)) {
            return Err(Error::contract("sample mixes observation kinds"));
        }
        let finite = points.iter().all(|p| match p {
            Point::Scalar(x) => !x.is_nan(),
            Point::Pair { w, y } => !y.is_nan() && w.iter().all(|v| !v.is_nan()),
        });
        if !finite {
            return Err(Error::contract("sample contains NaN"));
        }
        Ok(Sample { points })
    }

    pub fn from_scalars(xs: &[f64]) -> Result<Self> {
        Sample::new(xs.iter().map(|&x| Point::Scalar(x)).collect())
    }

    pub fn from_pairs(ws: &[f64], ys: &[f64]) -> Result<Self> {
        if ws.len() != ys.len() {
            return Err(Error::contract("w and y lengths differ"));
        }
        Sample::new(
            ws.iter()
                .zip(ys)
                .map(|(&w, &y)| Point::Pair { w: vec![w], y })
                .collect(),
        )
    }

    pub fn n(&self) -> usize {
        self.points.len()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn is_scalar(&self) -> bool {
        matches!(self.points[0], Point::Scalar(_))
    }

    /// The scalar observations, or `None` for a sample of pairs.
    pub fn scalars(&self) -> Option<Vec<f64>> {
        self.points.iter().map(Point::as_scalar).collect()
    }
}

impl<'de> Deserialize<'de> for Sample {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        // `{"points": [...]}` or a bare array
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Wrapped { points: Vec<Point> },
            Bare(Vec<Point>),
        }
        let points = match Raw::deserialize(d)? {
            Raw::Wrapped { points } | Raw::Bare(points) => points,
        };
        Sample::new(points).map_err(serde::de::Error::custom)
    }
}
