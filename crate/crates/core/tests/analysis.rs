use std::sync::Arc;

use nalgebra::DMatrix;
use whitney_ext::analysis::{
    check_claim_bounds, claim_params, cone_directions, derivative_continuity_at, exy, frechet_residual,
    hoelder_residual, lipschitz_on_ball, measure_claim_constants, strict_residual, uniqueness_bound_check,
};
use whitney_ext::linalg::spectral_norm;
use whitney_ext::sampling::{off_set_samples, rng_for, uniform_in_ball};
use whitney_ext::suites::default_extension;
use whitney_ext::{
    build_partition, catalog, verify_partition, ClosedSetRep, Error, Extension, JetField, PartitionConfig,
    PartitionOfUnity, Tolerances,
};

const SCALES: [f64; 6] = [0.5, 0.25, 0.125, 0.0625, 0.03125, 0.015625];

fn ext_for(jets: &Arc<JetField>) -> Extension {
    default_extension(jets, PartitionConfig::default()).unwrap()
}

fn affine_case() -> (Extension, Vec<f64>, DMatrix<f64>) {
    let case = catalog::case("affine").unwrap();
    let m = case.jets.operator(&case.base_point).unwrap();
    (ext_for(&case.jets), case.base_point.clone(), m)
}

#[test]
fn affine_residuals_vanish() {
    let (ext, a, _) = affine_case();
    for s in [
        frechet_residual(&ext, &a, &SCALES, 128, 1).unwrap(),
        strict_residual(&ext, &a, &SCALES, 128, 1).unwrap(),
        derivative_continuity_at(&ext, &a, &SCALES, 128, 1).unwrap(),
    ] {
        assert!(s.max() <= 1e-9, "{:?}", s);
        assert_eq!(s.scales, SCALES.to_vec());
        assert!(s.decays(&Tolerances::default()));
    }
}

#[test]
fn residuals_reject_points_off_the_set() {
    let (ext, _, _) = affine_case();
    assert!(matches!(frechet_residual(&ext, &[0.75, 0.0], &SCALES, 8, 0), Err(Error::NotInSet(_))));
    assert!(frechet_residual(&ext, &[0.5, 0.0], &[0.1, 0.2], 8, 0).is_err());
    assert!(hoelder_residual(&ext, &[0.5, 0.0], 1.5, &SCALES, 8, 0).is_err());
    assert!(hoelder_residual(&ext, &[0.5, 0.0], 0.0, &SCALES, 8, 0).is_err());
}

#[test]
fn quadratic_frechet_residual_is_linear_in_the_scale() {
    // f = z^2 on [0, 1], L = 2z: the extension's residual at 0 is O(delta)
    let case = catalog::case("quadratic1d").unwrap();
    let ext = ext_for(&case.jets);
    let s = frechet_residual(&ext, &[0.0], &case.scales, 256, 2).unwrap();
    let slope = s.loglog_slope().unwrap();
    assert!(slope > 0.8, "{slope}");
    // on the set the residual is exactly delta-ish: (x^2)/x = x <= delta
    for (d, r) in s.scales.iter().zip(&s.residuals) {
        assert!(*r <= 40.0 * d, "{d}: {r}");
    }
}

#[test]
fn sqrt_hoelder_residual_bounded_by_on_set_constant() {
    // f = sqrt on [0, 1]: on the set the 1/2-Holder quotient at 0 is exactly 1
    let case = catalog::case("sqrt_hoelder").unwrap();
    let ext = ext_for(&case.jets);
    let s = hoelder_residual(&ext, &[0.0], 0.5, &SCALES, 256, 3).unwrap();
    assert!(s.max() <= 3.0, "{:?}", s.residuals);
    assert!(s.max() >= 0.9);
}

#[test]
fn constant_data_has_zero_hoelder_quotient() {
    let set = Arc::new(catalog::set("segment").unwrap());
    let jets = Arc::new(JetField::from_rules(
        set,
        1,
        Arc::new(|_: &[f64]| vec![2.5]),
        Arc::new(|_: &[f64]| DMatrix::zeros(1, 2)),
    ));
    let ext = ext_for(&jets);
    let s = hoelder_residual(&ext, &[0.5, 0.0], 0.5, &SCALES, 128, 4).unwrap();
    assert!(s.max() <= 1e-9);
    assert!(lipschitz_on_ball(&ext, &[0.5, 0.0], 1.0, 500, 4).unwrap() <= 1e-9);
}

#[test]
fn exy_examples() {
    let (ext, a, _) = affine_case();
    assert_eq!(exy(&ext, &a, &[0.3, 0.9], &[0.3, 0.9]).unwrap(), 0.0);
    // affine data: E_xy vanishes up to rounding for any pair
    assert!(exy(&ext, &a, &[0.9, 0.9], &[-0.3, 2.0]).unwrap() <= 1e-12);
    assert!(matches!(exy(&ext, &[0.75, 0.0], &[0.0, 0.0], &[1.0, 1.0]), Err(Error::NotInSet(_))));
}

#[test]
fn exy_satisfies_the_triangle_inequality() {
    let case = catalog::case("lipschitz2seg").unwrap();
    let ext = ext_for(&case.jets);
    let a = &case.base_point;
    let mut rng = rng_for(5, &[]);
    for _ in 0..200 {
        let p: Vec<Vec<f64>> = (0..4).map(|_| uniform_in_ball(&mut rng, a, 0.8)).collect();
        let lhs = exy(&ext, a, &p[0], &p[3]).unwrap();
        let rhs = exy(&ext, a, &p[0], &p[1]).unwrap() + exy(&ext, a, &p[1], &p[2]).unwrap()
            + exy(&ext, a, &p[2], &p[3]).unwrap();
        assert!(lhs <= rhs + 1e-12);
    }
}

#[test]
fn exy_matches_an_independent_evaluation() {
    // recompute f^ from the partition weights and the jets directly
    let case = catalog::case("cross").unwrap();
    let jets = case.jets.clone();
    let partition = build_partition(jets.set().clone(), PartitionConfig::default()).unwrap();
    let ext = ext_for(&jets);
    let a = &case.base_point;
    let la = jets.operator(a).unwrap();
    let direct = |x: &[f64]| -> Vec<f64> {
        let mut acc = vec![0.0; 2];
        for w in partition.weights_at(x).unwrap() {
            let fj = jets.value(&w.member.foot).unwrap();
            let aj = jets.operator(&w.member.foot).unwrap();
            let dx = nalgebra::DVector::from_iterator(2, x.iter().zip(&w.member.foot).map(|(p, q)| p - q));
            let t = aj * dx;
            for i in 0..2 {
                acc[i] += w.weight * (fj[i] + t[i]);
            }
        }
        acc
    };
    for x in off_set_samples(jets.set(), 50, 0.5, 6).chunks(2) {
        let (fx, fy) = (direct(&x[0]), direct(&x[1]));
        let d = nalgebra::DVector::from_iterator(2, x[1].iter().zip(&x[0]).map(|(p, q)| p - q));
        let lin = &la * d;
        let want = ((fy[0] - fx[0] - lin[0]).powi(2) + (fy[1] - fx[1] - lin[1]).powi(2)).sqrt();
        let got = exy(&ext, a, &x[0], &x[1]).unwrap();
        assert!((got - want).abs() <= 1e-12 * (1.0 + want));
    }
}

#[test]
fn lipschitz_of_affine_data_is_its_operator_norm() {
    let (ext, a, m) = affine_case();
    let sup = lipschitz_on_ball(&ext, &a, 1.0, 3000, 7).unwrap();
    let norm = spectral_norm(&m);
    assert!(sup <= norm + 1e-6, "{sup} > {norm}");
    assert!(sup >= 0.9 * norm);
    assert!(lipschitz_on_ball(&ext, &a, 0.0, 10, 7).is_err());
}

#[test]
fn lipschitz_sup_grows_with_the_sample() {
    let case = catalog::case("oscillation").unwrap();
    let ext = ext_for(&case.jets);
    // pair sets are prefixes of one stream, so more pairs never lower the sup
    let small = lipschitz_on_ball(&ext, &[0.0, 0.0], 0.5, 400, 8).unwrap();
    let large = lipschitz_on_ball(&ext, &[0.0, 0.0], 0.5, 4000, 8).unwrap();
    assert!(small <= large);
}

#[test]
fn claim_constant_examples() {
    let case = catalog::case("quadratic").unwrap();
    let jets = case.jets.clone();
    let set = jets.set().clone();
    let partition = build_partition(set.clone(), PartitionConfig::default()).unwrap();
    let report = verify_partition(&partition, &off_set_samples(&set, 300, 0.5, 9), &Tolerances::default()).unwrap();
    let a = &case.base_point;
    let (c1, c2) = (report.c1_measured as f64, report.c2_measured);

    let eps = 1e-3;
    let p = claim_params(&jets, Some(&report), a, 3.0, 6.0, eps, eps).unwrap();
    assert!((p.k3 - (1.0 + 220.0 * c1 * c2) * eps).abs() <= 1e-12 * p.k3);
    assert_eq!(p.r3, 1.0);
    assert!((p.m - (spectral_norm(&jets.operator(a).unwrap()) + eps)).abs() <= 1e-15);

    let p = claim_params(&jets, Some(&report), a, 3.0, 6.0, 0.0, 0.0).unwrap();
    assert_eq!(p.k3, 0.0);
    let p = claim_params(&jets, Some(&report), a, 0.3, 6.0, 0.0, 2.0).unwrap();
    assert!((p.r3 - 0.1).abs() <= 1e-15);
    assert!((p.k3 - 240.0 * c1 * c2).abs() <= 1e-9 * p.k3);

    assert!(claim_params(&jets, None, a, 1.0, 1.0, 0.0, 0.0).is_err());
    assert!(claim_params(&jets, Some(&report), a, 1.0, 1.0, -1.0, 0.0).is_err());
    assert!(claim_params(&jets, Some(&report), a, 0.0, 1.0, 0.0, 0.0).is_err());
    assert!(claim_params(&jets, Some(&report), &[2.0, 2.0], 1.0, 1.0, 0.0, 0.0).is_err());
}

#[test]
fn claim_bounds_hold_for_measured_constants() {
    for name in ["quadratic", "lipschitz2seg", "helix"] {
        let case = catalog::case(name).unwrap();
        let jets = case.jets.clone();
        let set = jets.set().clone();
        let partition: Arc<dyn PartitionOfUnity> =
            Arc::new(build_partition(set.clone(), PartitionConfig::default()).unwrap());
        let ext = Extension::new(jets.clone(), partition.clone(), Arc::new(whitney_ext::AField::nearest(jets.clone())))
            .unwrap();
        let report = verify_partition(partition.as_ref(), &off_set_samples(&set, 1000, 0.5, 10), &Tolerances::default())
            .unwrap();
        let a = &case.base_point;
        let (r1, r2) = case.claim_radii;
        let (k1, k2) = measure_claim_constants(&ext, a, r1, r2, 500, 10).unwrap();
        let params = claim_params(&jets, Some(&report), a, r1, r2, k1, k2).unwrap();
        let claim = check_claim_bounds(&ext, &params, 500, 2000, 10).unwrap();
        assert!(claim.holds(), "{name}: {claim:?}");
        assert!(claim.derivative_samples > 0 && claim.pair_samples > 0);
    }
}

#[test]
fn segment_cones() {
    let sample: Vec<Vec<f64>> = (0..=64).map(|i| vec![i as f64 / 64.0 - 0.5, 0.0]).collect();
    let r = cone_directions(&sample, &[0.0, 0.0], (0.01, 0.5), 1e-3).unwrap();
    assert_eq!(r.tangent_dirs.len(), 2);
    assert_eq!(r.paratingent_dirs.len(), 2);
    for d in &r.paratingent_dirs {
        assert!((d[0].abs() - 1.0).abs() <= 1e-12 && d[1].abs() <= 1e-12);
    }
    assert_eq!(r.best_det, 0.0);
    assert_eq!(r.f_m_index, None);
}

#[test]
fn isolated_point_has_no_directions() {
    let sample = vec![vec![0.0, 0.0], vec![3.0, 1.0]];
    let r = cone_directions(&sample, &[0.0, 0.0], (0.01, 0.5), 1e-3).unwrap();
    assert!(r.tangent_dirs.is_empty() && r.paratingent_dirs.is_empty());
    assert!(cone_directions(&sample, &[0.0, 0.0], (0.5, 0.5), 1e-3).is_err());
    assert!(matches!(cone_directions(&sample, &[1.0, 0.0], (0.1, 0.5), 1e-3), Err(Error::NotInSet(_))));
}

#[test]
fn cross_cones_span_the_plane() {
    let case = catalog::case("cross").unwrap();
    let cones = case.cones.clone().unwrap();
    let r = cone_directions(&cones.sample, &case.base_point, cones.window, 1e-3).unwrap();
    assert!((r.best_det - 1.0).abs() <= 1e-12);
    assert_eq!(r.f_m_index, Some(1));
    assert_eq!(r.tangent_dirs.len(), 4);
}

#[test]
fn f_m_index_never_grows_with_more_points() {
    // more sample points only add directions, so the best determinant cannot drop
    let mut sample: Vec<Vec<f64>> = (0..=20).map(|i| vec![i as f64 / 20.0 - 0.5, 0.0]).collect();
    sample.push(vec![0.1, 0.02]);
    let before = cone_directions(&sample, &[0.0, 0.0], (0.01, 0.5), 1e-3).unwrap();
    sample.push(vec![0.0, 0.3]);
    let after = cone_directions(&sample, &[0.0, 0.0], (0.01, 0.5), 1e-3).unwrap();
    assert!(after.best_det >= before.best_det);
    assert!(after.f_m_index.unwrap() <= before.f_m_index.unwrap());
}

#[test]
fn uniqueness_bound_examples() {
    let case = catalog::case("cross").unwrap();
    let cones = case.cones.clone().unwrap();
    let x = &case.base_point;
    let r = cone_directions(&cones.sample, x, cones.window, 1e-3).unwrap();
    let u = uniqueness_bound_check(&case.jets, &cones.sample, x, &r, cones.window, 0.1).unwrap();
    assert!(u.passed, "{u:?}");

    // L = 0 always passes
    let set = Arc::new(ClosedSetRep::points(2, cones.sample.clone()).unwrap());
    let zero = JetField::from_rules(set, 1, Arc::new(|_: &[f64]| vec![1.0]), Arc::new(|_: &[f64]| DMatrix::zeros(1, 2)));
    let u = uniqueness_bound_check(&zero, &cones.sample, x, &r, cones.window, 0.1).unwrap();
    assert!(u.passed && u.bound_lhs == 0.0);

    // claimed derivative inconsistent with constant data fails
    let wrong = catalog::case("cross_const").unwrap();
    let u = uniqueness_bound_check(&wrong.jets, &cones.sample, x, &r, cones.window, 0.1).unwrap();
    assert!(!u.passed);

    // directions that do not span
    let seg: Vec<Vec<f64>> = (0..=8).map(|i| vec![i as f64 / 8.0 - 0.5, 0.0]).collect();
    let r = cone_directions(&seg, &[0.0, 0.0], (0.01, 0.5), 1e-3).unwrap();
    assert!(matches!(
        uniqueness_bound_check(&case.jets, &seg, &[0.0, 0.0], &r, (0.01, 0.5), 0.1),
        Err(Error::DegenerateCone(_))
    ));
}
