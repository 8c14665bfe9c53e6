//! Bounded ψ kernels replacing the logarithm in likelihood ratios.
//!
//! `ψ1(x) = (x − 1)/√(x² + 1)` and `ψ2(x) = (x − 1)/(x + 1)`, both mapping
//! `[0, +∞]` onto `[−1, 1]` with `ψ(1/x) = −ψ(x)`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::{hellinger_sq, integrate, Density1D, QuadratureSpec};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PsiId {
    Psi1,
    #[default]
    Psi2,
}

impl FromStr for PsiId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "psi1" => Ok(PsiId::Psi1),
            "psi2" => Ok(PsiId::Psi2),
            other => Err(Error::UnknownKernel(other.to_string())),
        }
    }
}

impl fmt::Display for PsiId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PsiId::Psi1 => "psi1",
            PsiId::Psi2 => "psi2",
        })
    }
}

/// A ψ function with the constants `(a0, a1, a2²)` for which it satisfies
/// the expectation and variance bounds, and the derived `β`, `κ`, `γ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PsiKernel {
    pub id: PsiId,
    pub a0: f64,
    pub a1: f64,
    pub a2_sq: f64,
    pub beta: f64,
    pub kappa: f64,
    pub gamma: f64,
}

pub fn kernel_constants(id: PsiId) -> PsiKernel {
    let sqrt2 = std::f64::consts::SQRT_2;
    let (a0, a1, a2_sq) = match id {
        PsiId::Psi1 => (4.97, 0.083, 3.0 + 2.0 * sqrt2),
        PsiId::Psi2 => (4.0, 3.0 / 8.0, 3.0 * sqrt2),
    };
    PsiKernel {
        id,
        a0,
        a1,
        a2_sq,
        beta: a1 / (4.0 * a2_sq.sqrt()),
        kappa: 35.0 * a2_sq / a1 + 74.0,
        gamma: 4.0 * (a0 + 16.0) / a1 + 2.0 + 168.0 / a2_sq,
    }
}

impl Default for PsiKernel {
    fn default() -> Self {
        kernel_constants(PsiId::Psi2)
    }
}

/// `ψ(x)` for `x ∈ [0, +∞]`.
pub fn eval_psi(k: &PsiKernel, x: f64) -> Result<f64> {
    if x.is_nan() || x < 0.0 {
        return Err(Error::contract(format!("psi argument must be in [0, +inf], got {x}")));
    }
    Ok(k.eval(x))
}

impl PsiKernel {
    pub fn a2(&self) -> f64 {
        self.a2_sq.sqrt()
    }

    /// `ψ(x)` without argument checks. Arguments too large to square are
    /// evaluated in `1/x`, which also covers `+∞`.
    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        if x > 1e150 {
            let r = 1.0 / x;
            return match self.id {
                PsiId::Psi1 => (1.0 - r) / r.mul_add(r, 1.0).sqrt(),
                PsiId::Psi2 => (1.0 - r) / (1.0 + r),
            };
        }
        match self.id {
            PsiId::Psi1 => (x - 1.0) / x.mul_add(x, 1.0).sqrt(),
            PsiId::Psi2 => (x - 1.0) / (x + 1.0),
        }
    }

    /// `ψ(e^a)` for `a ∈ [−∞, +∞]`, odd in `a` bit for bit.
    #[inline]
    pub fn eval_exp(&self, a: f64) -> f64 {
        if a.is_nan() {
            return 0.0;
        }
        let t = a.abs();
        let v = match self.id {
            PsiId::Psi1 => {
                let e = (-t).exp();
                -(-t).exp_m1() / e.mul_add(e, 1.0).sqrt()
            }
            PsiId::Psi2 => (0.5 * t).tanh(),
        };
        if a < 0.0 {
            -v
        } else {
            v
        }
    }

    /// `ψ(√(q'/q))` from the log-densities, with `0/0 = 1` and `a/0 = +∞`.
    #[inline]
    pub fn eval_sqrt_ratio(&self, ln_q: f64, ln_qp: f64) -> f64 {
        if ln_q == ln_qp {
            return 0.0;
        }
        if ln_q == f64::NEG_INFINITY || ln_qp == f64::INFINITY {
            return 1.0;
        }
        if ln_qp == f64::NEG_INFINITY || ln_q == f64::INFINITY {
            return -1.0;
        }
        self.eval_exp(0.5 * (ln_qp - ln_q))
    }

    /// `u ↦ ψ(√u)` and its derivative, used by the aggregation solver.
    #[inline]
    pub fn sqrt_composite(&self, u: f64) -> (f64, f64) {
        let s = u.sqrt();
        let value = self.eval(s);
        let deriv = match self.id {
            PsiId::Psi1 => {
                let w = s.mul_add(s, 1.0);
                (1.0 + s) / (w * w.sqrt()) / (2.0 * s)
            }
            PsiId::Psi2 => 1.0 / (s * (s + 1.0) * (s + 1.0)),
        };
        (value, deriv)
    }
}

/// Both sides of the expectation and variance bounds for one triple.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub lhs_esp: f64,
    pub rhs_esp: f64,
    pub lhs_var: f64,
    pub rhs_var: f64,
    pub pass: bool,
}

/// Checks `∫ψ(√(q'/q))dR ≤ a0 h²(R,Q) − a1 h²(R,Q')` and
/// `∫ψ²(√(q'/q))dR ≤ a2² [h²(R,Q) + h²(R,Q')]` by quadrature. `r` must be
/// absolutely continuous with respect to Lebesgue measure.
pub fn check_assumption(
    k: &PsiKernel,
    q: &Density1D,
    qp: &Density1D,
    r: &Density1D,
    quad: &QuadratureSpec,
) -> Result<AssumptionReport> {
    if !(q.is_continuous() && qp.is_continuous() && r.is_continuous()) {
        return Err(Error::contract("assumption check needs densities with respect to Lebesgue measure"));
    }
    let (lo, hi) = r.support();
    let mut breaks = vec![lo, hi];
    breaks.extend(
        q.breakpoints()
            .into_iter()
            .chain(qp.breakpoints())
            .chain(r.breakpoints())
            .filter(|b| *b > lo && *b < hi),
    );
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let term = |x: f64| {
        let w = r.lebesgue_pdf(x);
        if w == 0.0 {
            (0.0, 0.0)
        } else {
            let v = k.eval_sqrt_ratio(q.ln_lebesgue_pdf(x), qp.ln_lebesgue_pdf(x));
            (w * v, w * v * v)
        }
    };
    let lhs_esp = integrate(|x| term(x).0, &breaks, quad)?;
    let lhs_var = integrate(|x| term(x).1, &breaks, quad)?;
    let h_rq = hellinger_sq(r, q, quad)?;
    let h_rqp = hellinger_sq(r, qp, quad)?;
    let rhs_esp = k.a0 * h_rq - k.a1 * h_rqp;
    let rhs_var = k.a2_sq * (h_rq + h_rqp);
    let tol = quad.abs_tol;
    Ok(AssumptionReport {
        lhs_esp,
        rhs_esp,
        lhs_var,
        rhs_var,
        pass: lhs_esp <= rhs_esp + tol && lhs_var <= rhs_var + tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn kernels() -> [PsiKernel; 2] {
        [kernel_constants(PsiId::Psi1), kernel_constants(PsiId::Psi2)]
    }

    #[test]
    fn spot_values() {
        let k2 = kernel_constants(PsiId::Psi2);
        let k1 = kernel_constants(PsiId::Psi1);
        assert_eq!(eval_psi(&k2, 1.0).unwrap(), 0.0);
        assert_eq!(eval_psi(&k2, f64::INFINITY).unwrap(), 1.0);
        assert_eq!(eval_psi(&k2, 3.0).unwrap(), 0.5);
        assert_eq!(eval_psi(&k1, 0.0).unwrap(), -1.0);
        assert_eq!(eval_psi(&k1, f64::INFINITY).unwrap(), 1.0);
        assert!(eval_psi(&k1, -0.1).is_err());
        assert!(eval_psi(&k1, f64::NAN).is_err());
    }

    #[test]
    fn derived_constants() {
        let k2 = kernel_constants(PsiId::Psi2);
        assert_eq!(k2.a1, 0.375);
        let kappa = 280.0 * std::f64::consts::SQRT_2 + 74.0;
        assert!((k2.kappa - kappa).abs() < 1e-10);
        assert!((k2.kappa - 469.98).abs() < 0.01);
        let k1 = kernel_constants(PsiId::Psi1);
        assert_eq!(k1.a2_sq, 3.0 + 2.0 * std::f64::consts::SQRT_2);
        for k in kernels() {
            assert!(k.a0 >= 1.0 && 1.0 >= k.a1 && k.a1 > 0.0);
            assert!(k.a2_sq >= 1f64.max(6.0 * k.a1));
            assert!(k.kappa / 25.0 >= 11.36);
        }
    }

    #[test]
    fn kernel_names() {
        assert_eq!("psi1".parse::<PsiId>().unwrap(), PsiId::Psi1);
        assert!(matches!("psi3".parse::<PsiId>(), Err(Error::UnknownKernel(_))));
        assert_eq!(PsiId::default(), PsiId::Psi2);
    }

    #[test]
    fn zero_density_conventions() {
        for k in kernels() {
            let ninf = f64::NEG_INFINITY;
            assert_eq!(k.eval_sqrt_ratio(ninf, ninf), 0.0);
            assert_eq!(k.eval_sqrt_ratio(ninf, 0.0), 1.0);
            assert_eq!(k.eval_sqrt_ratio(0.0, ninf), -1.0);
        }
    }

    #[test]
    fn identical_triple_is_zero() {
        let n = Density1D::gaussian(0.0, 1.0).unwrap();
        let rep = check_assumption(&PsiKernel::default(), &n, &n, &n, &QuadratureSpec::default()).unwrap();
        assert_eq!(rep.lhs_esp, 0.0);
        assert_eq!(rep.rhs_esp, 0.0);
        assert!(rep.pass);
    }

    #[test]
    fn shifted_challenger_has_negative_expectation() {
        let k = PsiKernel::default();
        let q = Density1D::gaussian(0.0, 1.0).unwrap();
        let qp = Density1D::gaussian(2.0, 1.0).unwrap();
        let rep = check_assumption(&k, &q, &qp, &q, &QuadratureSpec::default()).unwrap();
        assert!(rep.lhs_esp < 0.0);
        assert!(rep.lhs_esp <= -k.a1 * hellinger_sq(&q, &qp, &QuadratureSpec::default()).unwrap());
        assert!(rep.pass);
    }

    proptest! {
        #[test]
        fn log_form_matches_direct_form(a in -30.0f64..30.0) {
            for k in kernels() {
                let direct = k.eval(a.exp());
                prop_assert!((k.eval_exp(a) - direct).abs() < 1e-14);
            }
        }

        #[test]
        fn sqrt_composite_derivative(u in 0.01f64..50.0) {
            for k in kernels() {
                let h = 1e-6 * u;
                let fd = (k.sqrt_composite(u + h).0 - k.sqrt_composite(u - h).0) / (2.0 * h);
                let (_, d) = k.sqrt_composite(u);
                prop_assert!((fd - d).abs() < 1e-6 * d.abs().max(1.0));
            }
        }

        #[test]
        fn psi2_is_one_lipschitz(x in 0.0f64..1e6) {
            let k = kernel_constants(PsiId::Psi2);
            prop_assert!(k.eval(x).abs() <= (x - 1.0).abs() + 1e-15);
        }

        #[test]
        fn monotone(mut xs in proptest::collection::vec(0.0f64..1e4, 2..50)) {
            xs.sort_by(f64::total_cmp);
            for k in kernels() {
                for w in xs.windows(2) {
                    prop_assert!(k.eval(w[0]) <= k.eval(w[1]));
                }
            }
        }
    }
}
