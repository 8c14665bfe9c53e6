use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::{
    hellinger_sq, Density1D, DensityKind, Marginal, Point, ProductDensity, QuadratureSpec, RegressionFunction, Sample,
};

/// Width of the uniform laws standing in for point masses.
pub const POINT_MASS_WIDTH: f64 = 1e-9;

/// Law of the observations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Truth {
    Iid { law: Density1D },
    /// `(1 − ε) P̄ + ε R`, drawn per observation.
    Contaminated { center: Density1D, contaminant: Density1D, eps: f64 },
    /// `base` except at `indices`, where observation `i` is (nearly) the point `points[k]`.
    Outliers { base: Density1D, indices: Vec<usize>, points: Vec<f64> },
    /// `w ~ design`, `y = f(w) + ε` with `ε ~ error`.
    Regression {
        design: Density1D,
        func: RegressionFunction,
        error: Density1D,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub truth: Truth,
    pub n: usize,
    pub replications: usize,
    pub seed: u64,
}

/// Narrow uniform centred at `x`.
pub fn point_mass(x: f64) -> Result<Density1D> {
    Density1D::uniform(x - 0.5 * POINT_MASS_WIDTH, x + 0.5 * POINT_MASS_WIDTH)
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Config("n must be >= 1".into()));
        }
        if self.replications == 0 {
            return Err(Error::Config("replications must be >= 1".into()));
        }
        match &self.truth {
            Truth::Contaminated { eps, .. } if !(0.0..=1.0).contains(eps) => {
                Err(Error::Config(format!("contamination level must lie in [0, 1], got {eps}")))
            }
            Truth::Outliers { indices, points, .. } => {
                if indices.len() != points.len() {
                    return Err(Error::Config("need one outlier point per index".into()));
                }
                if indices.len() >= self.n {
                    return Err(Error::Config("fewer outliers than observations required".into()));
                }
                let mut sorted = indices.clone();
                sorted.sort_unstable();
                sorted.dedup();
                if sorted.len() != indices.len() || sorted.last().is_some_and(|i| *i >= self.n) {
                    return Err(Error::Config("outlier indices must be distinct and < n".into()));
                }
                if points.iter().any(|p| !p.is_finite()) {
                    return Err(Error::Config("outlier points must be finite".into()));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// The joint law as a product density (scalar truths only).
    pub fn truth_product(&self) -> Result<ProductDensity> {
        match &self.truth {
            Truth::Iid { law } => Ok(ProductDensity::iid(law.clone(), self.n)),
            Truth::Contaminated { center, contaminant, eps } => {
                let mix = Density1D::new(DensityKind::Mixture {
                    weights: vec![1.0 - eps, *eps],
                    components: vec![center.kind().clone(), contaminant.kind().clone()],
                })?;
                Ok(ProductDensity::iid(mix, self.n))
            }
            Truth::Outliers { base, indices, points } => {
                let mut coords: Vec<Marginal> = vec![Marginal::Univariate(base.clone()); self.n];
                for (i, x) in indices.iter().zip(points) {
                    coords[*i] = Marginal::Univariate(point_mass(*x)?);
                }
                Ok(ProductDensity::independent(coords))
            }
            Truth::Regression { .. } => Err(Error::contract("regression truths have no scalar product law")),
        }
    }
}

/// Generator for replicate `replicate`: seeded by `seed`, one stream per replicate.
pub fn rng_for(seed: u64, replicate: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replicate as u64);
    rng
}

pub fn simulate_replicate(scenario: &Scenario, replicate: usize) -> Result<Sample> {
    scenario.validate()?;
    let mut rng = rng_for(scenario.seed, replicate);
    let n = scenario.n;
    match &scenario.truth {
        Truth::Iid { law } => Sample::from_scalars(&(0..n).map(|_| law.sample(&mut rng)).collect::<Vec<_>>()),
        Truth::Contaminated { center, contaminant, eps } => {
            let xs: Vec<f64> = (0..n)
                .map(|_| {
                    if rng.random::<f64>() < *eps {
                        contaminant.sample(&mut rng)
                    } else {
                        center.sample(&mut rng)
                    }
                })
                .collect();
            Sample::from_scalars(&xs)
        }
        Truth::Outliers { base, indices, points } => {
            let mut xs: Vec<f64> = (0..n).map(|_| base.sample(&mut rng)).collect();
            for (i, x) in indices.iter().zip(points) {
                xs[*i] = point_mass(*x)?.sample(&mut rng);
            }
            Sample::from_scalars(&xs)
        }
        Truth::Regression { design, func, error } => {
            let pts = (0..n)
                .map(|_| {
                    let w = vec![design.sample(&mut rng)];
                    let y = func.eval(&w) + error.sample(&mut rng);
                    Point::Pair { w, y }
                })
                .collect();
            Sample::new(pts)
        }
    }
}

/// All replicates, in replicate order.
pub fn simulate(scenario: &Scenario) -> Result<Vec<Sample>> {
    (0..scenario.replications)
        .map(|r| simulate_replicate(scenario, r))
        .collect()
}

/// `h²((1 − ε)P̄ + εR, P̄)` and its ceiling `ε`.
pub fn contamination_bias(center: &Density1D, contaminant: &Density1D, eps: f64, quad: &QuadratureSpec) -> Result<(f64, f64)> {
    let mix = Density1D::new(DensityKind::Mixture {
        weights: vec![1.0 - eps, eps],
        components: vec![center.kind().clone(), contaminant.kind().clone()],
    })?;
    Ok((hellinger_sq(&mix, center, quad)?, eps))
}

/// For an outlier truth and a candidate marginal `q`: `(lower, middle, upper)`
/// with `middle = n⁻¹ 𝐡²(𝐏, Q^{⊗n})` and the bounds
/// `(1 − |J|/n) h²(P, Q)` and `(1 − |J|/n) h²(P, Q) + |J|/n`.
pub fn outlier_accounting(scenario: &Scenario, q: &Density1D, quad: &QuadratureSpec) -> Result<(f64, f64, f64)> {
    let Truth::Outliers { base, indices, .. } = &scenario.truth else {
        return Err(Error::contract("outlier accounting needs an outlier scenario"));
    };
    let truth = scenario.truth_product()?;
    let n = scenario.n as f64;
    let frac = indices.len() as f64 / n;
    let h = hellinger_sq(base, q, quad)?;
    let middle = crate::measure::product_hellinger_sq(&truth, &ProductDensity::iid(q.clone(), scenario.n), quad)? / n;
    Ok(((1.0 - frac) * h, middle, (1.0 - frac) * h + frac))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base(truth: Truth) -> Scenario {
        Scenario {
            truth,
            n: 50,
            replications: 3,
            seed: 11,
        }
    }

    #[test]
    fn contamination_extremes() {
        let c = Density1D::gaussian(0.0, 1.0).unwrap();
        let r = Density1D::uniform(100.0, 101.0).unwrap();
        let none = base(Truth::Contaminated {
            center: c.clone(),
            contaminant: r.clone(),
            eps: 0.0,
        });
        let all = base(Truth::Contaminated {
            center: c.clone(),
            contaminant: r.clone(),
            eps: 1.0,
        });
        assert!(simulate_replicate(&none, 0).unwrap().scalars().unwrap().iter().all(|x| x.abs() < 10.0));
        assert!(simulate_replicate(&all, 0).unwrap().scalars().unwrap().iter().all(|x| *x >= 100.0));
        let bad = base(Truth::Contaminated {
            center: c,
            contaminant: r,
            eps: 1.5,
        });
        assert!(bad.validate().is_err());
    }

    #[test]
    fn seeded_and_stream_separated() {
        let s = base(Truth::Iid {
            law: Density1D::gaussian(0.0, 1.0).unwrap(),
        });
        let a = simulate(&s).unwrap();
        let b = simulate(&s).unwrap();
        assert_eq!(a, b);
        assert_ne!(a[0], a[1]);
    }

    #[test]
    fn outliers_land_on_their_points() {
        let s = base(Truth::Outliers {
            base: Density1D::gaussian(0.0, 1.0).unwrap(),
            indices: vec![3, 7],
            points: vec![50.0, -50.0],
        });
        let xs = simulate_replicate(&s, 0).unwrap().scalars().unwrap();
        assert!((xs[3] - 50.0).abs() <= POINT_MASS_WIDTH);
        assert!((xs[7] + 50.0).abs() <= POINT_MASS_WIDTH);
        let too_many = Scenario {
            n: 2,
            ..s
        };
        assert!(too_many.validate().is_err());
    }
}
