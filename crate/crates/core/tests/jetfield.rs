use std::sync::Arc;

use nalgebra::DMatrix;
use whitney_ext::sampling::off_set_samples;
use whitney_ext::{
    build_partition, catalog, check_contracts, AField, ClosedSetRep, Error, Jet, JetField, PartitionConfig,
    PartitionOfUnity, Tolerances,
};

fn scalar_jets(points: &[f64], f: impl Fn(f64) -> f64, l: impl Fn(f64) -> f64) -> Arc<JetField> {
    let pts: Vec<Vec<f64>> = points.iter().map(|&p| vec![p]).collect();
    let set = Arc::new(ClosedSetRep::points(1, pts.clone()).unwrap());
    let jets = pts
        .iter()
        .map(|p| Jet { a: p.clone(), value: vec![f(p[0])], operator: DMatrix::from_element(1, 1, l(p[0])) })
        .collect();
    Arc::new(JetField::tabulated(set, 1, jets, 1e-9).unwrap())
}

fn constant_operator(set: Arc<ClosedSetRep>, l0: DMatrix<f64>) -> Arc<JetField> {
    let m = l0.nrows();
    Arc::new(JetField::from_rules(set, m, Arc::new(move |_: &[f64]| vec![0.0; m]), Arc::new(move |_: &[f64]| l0.clone())))
}

#[test]
fn constant_operator_gives_the_constant_everywhere() {
    let set = Arc::new(catalog::set("balls").unwrap());
    let l0 = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, -3.0, 0.5]);
    let jets = constant_operator(set.clone(), l0.clone());
    let partition: Arc<dyn PartitionOfUnity> =
        Arc::new(build_partition(set.clone(), PartitionConfig::default()).unwrap());
    let nearest = AField::nearest(jets.clone());
    let averaged = AField::averaged(jets.clone(), partition).unwrap();
    for x in off_set_samples(&set, 100, 0.5, 1) {
        assert_eq!(nearest.eval(&x).unwrap(), l0);
        let avg = averaged.eval(&x).unwrap();
        assert!((avg - &l0).abs().max() <= 1e-12);
    }
}

#[test]
fn nearest_field_picks_the_nearest_jet() {
    let jets = scalar_jets(&[0.0, 1.0], |_| 0.0, |t| t);
    let field = AField::nearest(jets);
    assert_eq!(field.eval(&[0.2]).unwrap()[(0, 0)], 0.0);
    assert_eq!(field.eval(&[0.8]).unwrap()[(0, 0)], 1.0);
    assert_eq!(field.eval(&[-4.0]).unwrap()[(0, 0)], 0.0);
    // equidistant: lexicographically smaller foot
    assert_eq!(field.eval(&[0.5]).unwrap()[(0, 0)], 0.0);
    assert!(matches!(field.eval(&[1.0]), Err(Error::OnSet)));
}

#[test]
fn averaged_field_is_a_convex_combination() {
    let pts: Vec<f64> = (0..9).map(|k| k as f64 * 0.25).collect();
    let jets = scalar_jets(&pts, |_| 0.0, |t| (3.0 * t).sin());
    let partition: Arc<dyn PartitionOfUnity> =
        Arc::new(build_partition(jets.set().clone(), PartitionConfig::default()).unwrap());
    let field = AField::averaged(jets.clone(), partition.clone()).unwrap();
    for x in off_set_samples(jets.set(), 200, 0.5, 2) {
        let v = field.eval(&x).unwrap()[(0, 0)];
        let ws = partition.weights_at(&x).unwrap();
        let feet: Vec<f64> = ws.iter().map(|w| (3.0 * w.member.foot[0]).sin()).collect();
        let lo = feet.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = feet.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        assert!(v >= lo - 1e-12 && v <= hi + 1e-12, "{x:?}: {v} not in [{lo}, {hi}]");
        let direct: f64 = ws.iter().map(|w| w.weight * (3.0 * w.member.foot[0]).sin()).sum();
        assert!((v - direct).abs() <= 1e-14);
    }
}

#[test]
fn averaged_field_is_continuous_off_the_set() {
    let pts: Vec<f64> = (0..9).map(|k| k as f64 * 0.25).collect();
    let jets = scalar_jets(&pts, |_| 0.0, |t| t * t);
    let partition: Arc<dyn PartitionOfUnity> =
        Arc::new(build_partition(jets.set().clone(), PartitionConfig::default()).unwrap());
    let field = AField::averaged(jets.clone(), partition).unwrap();
    for x in off_set_samples(jets.set(), 100, 0.5, 3) {
        let d = jets.set().distance(&x).unwrap();
        let h = 1e-7 * d;
        let a = field.eval(&x).unwrap()[(0, 0)];
        let b = field.eval(&[x[0] + h]).unwrap()[(0, 0)];
        assert!((a - b).abs() <= 1e-4, "{x:?}");
    }
}

#[test]
fn external_field_is_exact_lookup() {
    let jets = scalar_jets(&[0.0], |_| 0.0, |_| 0.0);
    let field = AField::external(jets.clone(), vec![(vec![0.5], DMatrix::from_element(1, 1, 9.0))]).unwrap();
    assert_eq!(field.eval(&[0.5]).unwrap()[(0, 0)], 9.0);
    assert!(matches!(field.eval(&[0.5000001]), Err(Error::LookupMiss(_))));
    assert!(AField::external(jets, vec![(vec![0.5], DMatrix::zeros(2, 1))]).is_err());
}

#[test]
fn tabulated_input_errors() {
    let set = Arc::new(ClosedSetRep::points(1, vec![vec![0.0], vec![1.0]]).unwrap());
    let jet = |a: f64| Jet { a: vec![a], value: vec![0.0], operator: DMatrix::zeros(1, 1) };
    assert!(matches!(JetField::tabulated(set.clone(), 1, vec![jet(0.0)], 1e-9), Err(Error::MissingJet(_))));
    assert!(matches!(
        JetField::tabulated(set.clone(), 1, vec![jet(0.0), jet(1.0), jet(1.0)], 1e-9),
        Err(Error::InvalidInput(_))
    ));
    assert!(matches!(JetField::tabulated(set.clone(), 1, vec![jet(0.0), jet(1.1)], 1e-9), Err(Error::NotInSet(_))));
    // within tolerance the jet snaps onto the set point
    let f = JetField::tabulated(set.clone(), 1, vec![jet(1e-12), jet(1.0)], 1e-9).unwrap();
    assert_eq!(f.table().unwrap()[0].a, vec![0.0]);
    let bad = Jet { a: vec![0.0], value: vec![0.0], operator: DMatrix::zeros(2, 1) };
    assert!(JetField::tabulated(set.clone(), 1, vec![bad, jet(1.0)], 1e-9).is_err());
    let nan = Jet { a: vec![0.0], value: vec![f64::NAN], operator: DMatrix::zeros(1, 1) };
    assert!(JetField::tabulated(set, 1, vec![nan, jet(1.0)], 1e-9).is_err());
}

#[test]
fn lookups_off_the_set_fail() {
    let jets = scalar_jets(&[0.0, 1.0], |t| t, |t| t);
    assert!(matches!(jets.value(&[0.5]), Err(Error::NotInSet(_))));
    assert!(matches!(jets.operator(&[0.5]), Err(Error::NotInSet(_))));
    assert_eq!(jets.jet(&[1.0]).unwrap().value, vec![1.0]);
}

const SHELLS: [f64; 6] = [0.5, 0.25, 0.125, 0.0625, 0.03125, 0.015625];

#[test]
fn constant_operator_has_zero_contract_residuals() {
    let set = Arc::new(catalog::set("segment").unwrap());
    let jets = constant_operator(set.clone(), DMatrix::from_row_slice(1, 2, &[2.0, 1.0]));
    let report = check_contracts(&AField::nearest(jets.clone()), &jets, &[0.5, 0.0], &SHELLS, 64, 1).unwrap();
    assert!(report.nt_residuals.iter().all(|r| r.1 == 0.0));
    assert!(report.c_residuals.iter().all(|r| r.1 == 0.0));
    assert!((report.b_bound - 5f64.sqrt()).abs() <= 1e-12);
    assert!((report.l_bound_12r - 5f64.sqrt()).abs() <= 1e-12);
}

#[test]
fn alternating_operator_violates_continuity() {
    let case = catalog::case("altL").unwrap();
    let jets = case.jets.clone();
    let report = check_contracts(&AField::nearest(jets.clone()), &jets, &[0.0], &SHELLS, 256, 2).unwrap();
    let last = report.c_residuals.last().unwrap().1;
    assert!(last >= Tolerances::default().strict_floor, "{last}");
    assert!(report.b_bound <= report.l_bound_12r + 1e-9);
}

#[test]
fn continuous_operator_has_decaying_residuals() {
    let set = Arc::new(catalog::set("box").unwrap());
    let jets = Arc::new(JetField::from_rules(
        set.clone(),
        1,
        Arc::new(|z: &[f64]| vec![z[0] * z[0] + z[1]]),
        Arc::new(|z: &[f64]| DMatrix::from_row_slice(1, 2, &[2.0 * z[0], 1.0])),
    ));
    let field = AField::nearest(jets.clone());
    // feet below the bottom edge move along it, so A varies near a
    let a = [0.5, 0.0];
    let report = check_contracts(&field, &jets, &a, &SHELLS, 256, 3).unwrap();
    assert!(report.c_residuals[0].1 > 0.0);
    let c: Vec<f64> = report.c_residuals.iter().map(|r| r.1).collect();
    // nearest foot lies within 2|x - a| of a, so |A(x) - L(a)| <= 2 * 2 rho
    for (rho, v) in &report.c_residuals {
        assert!(*v <= 4.0 * rho + 1e-12);
    }
    assert!(c.last().unwrap() < &(0.5 * c[0]));
    for (rho, v) in &report.nt_residuals {
        assert!(*v <= 4.0 * rho + 1e-12);
    }
    assert!(report.b_bound <= report.l_bound_12r + 1e-9);
}

#[test]
fn nearest_field_of_a_lipschitz_operator_satisfies_nt() {
    // |A(x) - L(a)| <= Lip |x^ - a| <= 2 Lip |x - a|
    let pts: Vec<f64> = (0..40).map(|k| (k as f64 / 40.0).powi(2)).collect();
    let jets = scalar_jets(&pts, |_| 0.0, |t| 3.0 * t);
    let field = AField::nearest(jets.clone());
    for x in off_set_samples(jets.set(), 300, 0.5, 4) {
        for &a in &[0.0, 0.25, 1.0 / 1600.0] {
            let gap = (field.eval(&x).unwrap()[(0, 0)] - 3.0 * a).abs();
            assert!(gap <= 3.0 * 2.0 * (x[0] - a).abs() + 1e-12);
        }
    }
}

#[test]
fn contract_inputs_are_validated() {
    let jets = scalar_jets(&[0.0, 1.0], |t| t, |t| t);
    let field = AField::nearest(jets.clone());
    assert!(matches!(check_contracts(&field, &jets, &[0.5], &SHELLS, 8, 0), Err(Error::NotInSet(_))));
    assert!(check_contracts(&field, &jets, &[0.0], &[0.1, 0.2], 8, 0).is_err());
    assert!(check_contracts(&field, &jets, &[0.0], &[], 8, 0).is_err());
}
