use rho_core::criterion::{rho_estimate, DensityFamily, Penalty};
use rho_core::measure::{Density1D, ProductDensity, Sample};
use rho_core::psi::PsiKernel;
use rho_core::selection::{risk_bound_report, select, uniform_deltas, ModelCollection};
use rho_core::zoo::{build_gaussian_location_grid, BoundSource, ModelDescriptor};
use rho_core::Error;

fn gauss(means: &[f64], sd: f64, n: usize) -> DensityFamily {
    DensityFamily::new(
        means
            .iter()
            .map(|m| ProductDensity::iid(Density1D::gaussian(*m, sd).unwrap(), n))
            .collect(),
    )
    .unwrap()
}

#[test]
fn single_model_reduces_to_plain_estimator() {
    let x = Sample::from_scalars(&[0.2, -0.1, 0.5, 0.05, 0.3]).unwrap();
    let m = build_gaussian_location_grid(-1.0, 1.0, 0.1, 1.0, 5, 1.0).unwrap();
    let fam = m.family.clone();
    let coll = ModelCollection::new(vec![m], PsiKernel::default()).unwrap();
    let sel = select(&x, &coll, 1.0).unwrap();
    let plain = rho_estimate(&x, &fam, &Penalty::zero(fam.len()), &PsiKernel::default(), None).unwrap();
    assert_eq!(sel.fit.chosen_index, plain.chosen_index);
    assert_eq!(sel.selected_models, vec![0]);
}

#[test]
fn weights_must_be_summable() {
    let mk = |means: &[f64]| ModelDescriptor::new(gauss(means, 1.0, 3), 1.0, BoundSource::User).unwrap();
    assert!(matches!(
        ModelCollection::new(vec![mk(&[0.0]), mk(&[1.0])], PsiKernel::default()),
        Err(Error::InvalidWeights { .. })
    ));
    let mut models = vec![mk(&[0.0]), mk(&[1.0]), mk(&[2.0])];
    uniform_deltas(&mut models);
    assert!(ModelCollection::new(models, PsiKernel::default()).is_ok());
}

#[test]
fn selection_finds_the_right_scale() {
    // every candidate is centred; only the scale differs between models
    let n = 400;
    let xs: Vec<f64> = (0..n).map(|i| 3.0 * (((i as f64 + 0.5) / n as f64) * 2.0 - 1.0)).collect();
    let x = Sample::from_scalars(&xs).unwrap();
    let mut models: Vec<ModelDescriptor> = [0.3, 1.0, 1.7, 5.0]
        .iter()
        .map(|sd| ModelDescriptor::new(gauss(&[0.0], *sd, n), 1.0, BoundSource::User).unwrap())
        .collect();
    uniform_deltas(&mut models);
    let coll = ModelCollection::new(models, PsiKernel::default()).unwrap();
    let sel = select(&x, &coll, 1.0).unwrap();
    assert_eq!(sel.selected_models, vec![2]);
    assert!(sel.fit.invariants_hold());
    assert!(risk_bound_report(&coll, 2, 1.0).unwrap() > 0.0);
}

#[test]
fn union_fit_equals_direct_fit_with_same_penalties() {
    let x = Sample::from_scalars(&[0.4, 1.1, 0.9, 1.6, 0.2, 1.3]).unwrap();
    let mut models = vec![
        ModelDescriptor::new(gauss(&[0.0, 0.5, 1.0], 1.0, 6), 2.0, BoundSource::User).unwrap(),
        ModelDescriptor::new(gauss(&[1.0, 1.5], 1.0, 6), 7.0, BoundSource::User).unwrap(),
    ];
    uniform_deltas(&mut models);
    let coll = ModelCollection::new(models, PsiKernel::default())
        .unwrap()
        .with_kappa_multiplier(0.01)
        .unwrap();
    let sel = select(&x, &coll, 1.0).unwrap();
    let pen = coll.penalties().unwrap();
    let direct = rho_estimate(&x, coll.union(), &pen, &PsiKernel::default(), Some(coll.kappa() / 25.0)).unwrap();
    assert_eq!(sel.fit, direct);
    assert_eq!(coll.union().len(), 4);
}
