use proptest::prelude::*;
use rho_core::measure::{Density1D, QuadratureSpec};
use rho_core::psi::{check_assumption, eval_psi, kernel_constants, PsiId};

#[test]
fn assumption_holds_beyond_gaussians() {
    let quad = QuadratureSpec::adaptive(1e-8);
    let dens = [
        Density1D::cauchy(0.0, 1.0).unwrap(),
        Density1D::laplace(1.0, 0.5).unwrap(),
        Density1D::gaussian(-1.0, 2.0).unwrap(),
        Density1D::uniform(-1.0, 2.0).unwrap(),
    ];
    for id in [PsiId::Psi1, PsiId::Psi2] {
        let k = kernel_constants(id);
        for q in &dens {
            for qp in &dens {
                for r in &dens {
                    let rep = check_assumption(&k, q, qp, r, &quad).unwrap();
                    assert!(rep.pass, "{id}: {rep:?}");
                }
            }
        }
    }
}

#[test]
fn discrete_laws_are_rejected_by_the_check() {
    let k = kernel_constants(PsiId::Psi2);
    let d = Density1D::discrete(vec![0.0], vec![1.0]).unwrap();
    assert!(check_assumption(&k, &d, &d, &d, &QuadratureSpec::default()).is_err());
}

proptest! {
    #[test]
    fn inversion_is_antisymmetric(x in 1e-8f64..1e8) {
        for id in [PsiId::Psi1, PsiId::Psi2] {
            let k = kernel_constants(id);
            let s = eval_psi(&k, x).unwrap() + eval_psi(&k, 1.0 / x).unwrap();
            prop_assert!(s.abs() <= 1e-12);
        }
    }

    #[test]
    fn log_ratio_form_is_exactly_odd(a in -700.0f64..700.0, b in -700.0f64..700.0) {
        for id in [PsiId::Psi1, PsiId::Psi2] {
            let k = kernel_constants(id);
            prop_assert_eq!(k.eval_sqrt_ratio(a, b), -k.eval_sqrt_ratio(b, a));
        }
    }
}
