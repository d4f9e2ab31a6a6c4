//! Built-in sets and analytic cases.
//!
//! Each case bundles a set, its jets, a base point and the expected outcome
//! of every check that applies to it. Cases that must fail a check (the
//! counterexamples) declare so and pass when the failure is observed.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::geomset::{AxisBox, Ball, ClosedSetRep, Point};
use crate::jetfield::{Jet, JetField};
use crate::suites::{Case, Check, ConeSetup, Expect};

/// Largest `k` kept in the truncated sets `{0} u {1/k}`.
pub const HARMONIC_TRUNCATION: usize = 200;

pub const SET_NAMES: [&str; 7] = ["point1", "point2", "point3", "twopoints", "segment", "box", "balls"];

pub const CASE_NAMES: [&str; 12] = [
    "affine",
    "affine3",
    "quadratic",
    "quadratic1d",
    "sqrt_hoelder",
    "lipschitz2seg",
    "jarnik",
    "altL",
    "oscillation",
    "helix",
    "cross",
    "cross_const",
];

fn boxes(dim: usize, list: &[(&[f64], &[f64])]) -> ClosedSetRep {
    let boxes = list.iter().map(|(lo, hi)| AxisBox { lo: lo.to_vec(), hi: hi.to_vec() }).collect();
    ClosedSetRep::boxes(dim, boxes).expect("catalog boxes are valid")
}

fn harmonic_points() -> Vec<Point> {
    let mut pts = vec![vec![0.0]];
    pts.extend((1..=HARMONIC_TRUNCATION).map(|k| vec![1.0 / k as f64]));
    pts
}

fn cross_set() -> ClosedSetRep {
    boxes(2, &[(&[-1.0, 0.0], &[1.0, 0.0]), (&[0.0, -1.0], &[0.0, 1.0])])
}

/// A named set of the catalog.
pub fn set(name: &str) -> Result<ClosedSetRep> {
    Ok(match name {
        "point1" => ClosedSetRep::points(1, vec![vec![0.0]])?,
        "point2" => ClosedSetRep::points(2, vec![vec![0.0, 0.0]])?,
        "point3" => ClosedSetRep::points(3, vec![vec![0.0, 0.0, 0.0]])?,
        "twopoints" => ClosedSetRep::points(2, vec![vec![0.0, 0.0], vec![1.0, 0.0]])?,
        "segment" => boxes(2, &[(&[0.0, 0.0], &[1.0, 0.0])]),
        "box" => boxes(2, &[(&[0.0, 0.0], &[1.0, 1.0])]),
        "balls" => ClosedSetRep::balls(
            2,
            vec![
                Ball { center: vec![0.0, 0.0], radius: 0.5 },
                Ball { center: vec![1.2, 0.3], radius: 0.3 },
            ],
        )?,
        other => match case(other) {
            Ok(c) => return Ok(c.jets.set().as_ref().clone()),
            Err(_) => return Err(Error::InvalidInput(format!("unknown catalog set or case {other}"))),
        },
    })
}

fn rules<F, L>(set: ClosedSetRep, m: usize, f: F, l: L) -> Arc<JetField>
where
    F: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    L: Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static,
{
    Arc::new(JetField::from_rules(Arc::new(set), m, Arc::new(f), Arc::new(l)))
}

fn dyadic_scales(first: i32, last: i32) -> Vec<f64> {
    (first..=last).map(|k| 2f64.powi(-k)).collect()
}

fn expect(list: &[(Check, Expect)]) -> BTreeMap<Check, Expect> {
    list.iter().copied().collect()
}

use Check::*;
use Expect::{Fail, Pass};

const SMOOTH: [(Check, Expect); 10] = [
    (PartitionCertified, Pass),
    (FrechetDecays, Pass),
    (HoelderBounded, Pass),
    (StrictDecays, Pass),
    (ContinuityDecays, Pass),
    (ClaimBounds, Pass),
    (LipschitzConstant, Pass),
    (NtDecays, Pass),
    (CDecays, Pass),
    (BBounded, Pass),
];

/// Points along the axis segments of the cross, spacing `1/64`.
fn cross_sample() -> Vec<Point> {
    let mut pts = vec![vec![0.0, 0.0]];
    for i in 1..=64 {
        let t = i as f64 / 64.0;
        pts.extend([vec![t, 0.0], vec![-t, 0.0], vec![0.0, t], vec![0.0, -t]]);
    }
    pts
}

fn axes(n: usize, signs: &[f64]) -> Vec<Point> {
    let mut out = Vec::new();
    for i in 0..n {
        for &s in signs {
            let mut e = vec![0.0; n];
            e[i] = s;
            out.push(e);
        }
    }
    out
}

/// A case built from user data: default scales and radii, every check
/// outside the cone suite expected to pass.
pub fn dataset_case(name: &str, description: &str, jets: Arc<JetField>, base_point: Point) -> Case {
    Case {
        name: name.to_string(),
        description: description.to_string(),
        jets,
        base_point,
        scales: dyadic_scales(1, 8),
        alpha: 1.0,
        claim_radii: (0.5, 0.5),
        cones: None,
        expectations: expect(&SMOOTH),
    }
}

/// A named case of the catalog.
pub fn case(name: &str) -> Result<Case> {
    let base = |name: &str, description: &str, jets: Arc<JetField>, a: Point| Case {
        name: name.to_string(),
        description: description.to_string(),
        jets,
        base_point: a,
        scales: dyadic_scales(1, 8),
        alpha: 1.0,
        claim_radii: (0.5, 0.5),
        cones: None,
        expectations: expect(&SMOOTH),
    };
    let c = match name {
        "affine" => {
            let m = DMatrix::from_row_slice(2, 2, &[2.0, -1.0, 0.5, 3.0]);
            let mm = m.clone();
            let f = move |z: &[f64]| vec![1.0 + 2.0 * z[0] - z[1], -2.0 + 0.5 * z[0] + 3.0 * z[1]];
            let set = ClosedSetRep::balls(
                2,
                vec![
                    Ball { center: vec![0.0, 0.0], radius: 0.5 },
                    Ball { center: vec![1.5, 0.5], radius: 0.25 },
                ],
            )?;
            base(
                name,
                "F = B(0, 0.5) u B((1.5, 0.5), 0.25) in R^2, f(z) = c + M z with c = (1, -2), M = [[2, -1], [0.5, 3]], L = M",
                rules(set, 2, f, move |_| mm.clone()),
                vec![0.5, 0.0],
            )
        }
        "affine3" => {
            let set = boxes(3, &[(&[0.0, 0.0, 0.0], &[1.0, 0.0, 0.0]), (&[0.0, 1.0, 1.0], &[0.0, 1.0, 1.0])]);
            let f = |z: &[f64]| vec![0.5 + z[0] - 2.0 * z[1] + 0.5 * z[2]];
            base(
                name,
                "F = [0,1] x {0} x {0} u {(0, 1, 1)} in R^3, f(z) = 0.5 + z1 - 2 z2 + 0.5 z3, L = (1, -2, 0.5)",
                rules(set, 1, f, |_| DMatrix::from_row_slice(1, 3, &[1.0, -2.0, 0.5])),
                vec![0.0, 0.0, 0.0],
            )
        }
        "quadratic" => {
            let f = |z: &[f64]| vec![0.5 * z[0] * z[0] + 0.25 * z[0] * z[1] + 0.3 * z[1] * z[1]];
            let l = |z: &[f64]| DMatrix::from_row_slice(1, 2, &[z[0] + 0.25 * z[1], 0.25 * z[0] + 0.6 * z[1]]);
            let mut c = base(
                name,
                "F = [0,1]^2 in R^2, f(z) = 0.5 z1^2 + 0.25 z1 z2 + 0.3 z2^2, L = grad f",
                rules(boxes(2, &[(&[0.0, 0.0], &[1.0, 1.0])]), 1, f, l),
                vec![0.0, 0.5],
            );
            c.scales = dyadic_scales(1, 12);
            c.claim_radii = (0.25, 0.25);
            c
        }
        "quadratic1d" => {
            let mut c = base(
                name,
                "F = [0,1] in R, f(z) = z^2, L(z) = 2z",
                rules(boxes(1, &[(&[0.0], &[1.0])]), 1, |z| vec![z[0] * z[0]], |z| {
                    DMatrix::from_element(1, 1, 2.0 * z[0])
                }),
                vec![0.0],
            );
            c.scales = dyadic_scales(1, 12);
            c.cones = Some(ConeSetup {
                sample: (0..=64).map(|i| vec![i as f64 / 64.0]).collect(),
                window: (0.01, 0.5),
                expected_tangent: Some(vec![vec![1.0]]),
            });
            c.expectations.insert(Uniqueness, Pass);
            c.expectations.insert(ConeAxes, Pass);
            c
        }
        "sqrt_hoelder" => {
            let mut c = base(
                name,
                "F = [0,1] in R, f(z) = sqrt(z), L = 0; Holder of order 1/2 at a = 0 but not differentiable there",
                rules(boxes(1, &[(&[0.0], &[1.0])]), 1, |z| vec![z[0].max(0.0).sqrt()], |_| DMatrix::zeros(1, 1)),
                vec![0.0],
            );
            c.alpha = 0.5;
            c.expectations = expect(&[
                (PartitionCertified, Pass),
                (HoelderBounded, Pass),
                (FrechetDecays, Fail),
                (StrictDecays, Fail),
                (ContinuityDecays, Pass),
                (NtDecays, Pass),
                (CDecays, Pass),
                (BBounded, Pass),
            ]);
            c
        }
        "lipschitz2seg" => {
            let set = boxes(2, &[(&[-1.0, 0.0], &[1.0, 0.0]), (&[-1.0, 0.5], &[1.0, 0.5])]);
            let f = |z: &[f64]| vec![z[0].clamp(-0.5, 0.5) + z[1]];
            let l = |z: &[f64]| {
                let d1 = if z[0].abs() <= 0.5 { 1.0 } else { 0.0 };
                DMatrix::from_row_slice(1, 2, &[d1, 1.0])
            };
            let mut c = base(
                name,
                "F = [-1,1] x {0} u [-1,1] x {0.5} in R^2, f(z) = clamp(z1, -0.5, 0.5) + z2, L = (1{|z1| <= 0.5}, 1)",
                rules(set, 1, f, l),
                vec![0.0, 0.0],
            );
            c.claim_radii = (0.9, 0.9);
            c
        }
        "jarnik" => {
            let pts = harmonic_points();
            let jets = pts
                .iter()
                .enumerate()
                .map(|(k, p)| {
                    let v = if k == 0 { 0.0 } else { (-1f64).powi(k as i32) / (k * k) as f64 };
                    Jet { a: p.clone(), value: vec![v], operator: DMatrix::zeros(1, 1) }
                })
                .collect();
            let set = Arc::new(ClosedSetRep::points(1, pts)?);
            let mut c = base(
                name,
                "F = {0} ∪ {1/k : 1 <= k <= 200} in R, f(1/k) = (-1)^k / k^2, f(0) = 0, L = 0; \
                 differentiable at 0 relative to F but not strictly (the set is truncated at k = 200, \
                 i.e. at radius 0.005)",
                Arc::new(JetField::tabulated(set, 1, jets, 1e-12)?),
                vec![0.0],
            );
            c.scales = dyadic_scales(1, 6);
            c.expectations = expect(&[
                (PartitionCertified, Pass),
                (FrechetDecays, Pass),
                (HoelderBounded, Pass),
                (StrictDecays, Fail),
                (ContinuityDecays, Fail),
                (NtDecays, Pass),
                (CDecays, Pass),
                (BBounded, Pass),
                (Uniqueness, Pass),
                (ConeAxes, Pass),
            ]);
            c.cones = Some(ConeSetup {
                sample: harmonic_points(),
                window: (0.004, 0.5),
                expected_tangent: Some(vec![vec![1.0]]),
            });
            c
        }
        "altL" => {
            let pts = harmonic_points();
            let jets = pts
                .iter()
                .enumerate()
                .map(|(k, p)| {
                    let l = if k == 0 { 0.0 } else { (-1f64).powi(k as i32) };
                    Jet { a: p.clone(), value: vec![0.0], operator: DMatrix::from_element(1, 1, l) }
                })
                .collect();
            let set = Arc::new(ClosedSetRep::points(1, pts)?);
            let mut c = base(
                name,
                "F = {0} ∪ {1/k : 1 <= k <= 200} in R, f = 0, L(1/k) = (-1)^k, L(0) = 0; \
                 L(0) is a derivative relative to F but L is not continuous at 0 (truncated at k = 200)",
                Arc::new(JetField::tabulated(set, 1, jets, 1e-12)?),
                vec![0.0],
            );
            c.scales = dyadic_scales(1, 6);
            c.expectations = expect(&[
                (PartitionCertified, Pass),
                (FrechetDecays, Pass),
                (HoelderBounded, Pass),
                (StrictDecays, Fail),
                (ContinuityDecays, Fail),
                (NtDecays, Pass),
                (CDecays, Fail),
                (BBounded, Pass),
            ]);
            c
        }
        "oscillation" => {
            let f = |z: &[f64]| {
                let t = z[0];
                vec![if t == 0.0 { 0.0 } else { t.powi(7) * (1.0 / t).sin().abs() }]
            };
            let mut c = base(
                name,
                "F = [0,1] x {0} in R^2, f(z) = z1^7 |sin(1/z1)|, L = 0; the extension's derivative \
                 is continuous at a = 0 relative to the complement of F with a added",
                rules(boxes(2, &[(&[0.0, 0.0], &[1.0, 0.0])]), 1, f, |_| DMatrix::zeros(1, 2)),
                vec![0.0, 0.0],
            );
            c.scales = dyadic_scales(1, 8);
            c
        }
        "helix" => {
            let f = |z: &[f64]| vec![z[0].cos(), z[0].sin(), 0.5 * z[0]];
            let l = |z: &[f64]| DMatrix::from_column_slice(3, 1, &[-z[0].sin(), z[0].cos(), 0.5]);
            base(
                name,
                "F = [0,2] u [3,5] in R, f(t) = (cos t, sin t, t/2), L = f'",
                rules(boxes(1, &[(&[0.0], &[2.0]), (&[3.0], &[5.0])]), 3, f, l),
                vec![2.0],
            )
        }
        "cross" | "cross_const" => {
            let l = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, -1.0]);
            let lc = l.clone();
            let (description, f): (&str, Box<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>) = if name == "cross" {
                ("F = [-1,1] x {0} u {0} x [-1,1] in R^2, f(z) = (2 z1, -z2), L = diag(2, -1)", Box::new(|z| vec![2.0 * z[0], -z[1]]))
            } else {
                (
                    "F = [-1,1] x {0} u {0} x [-1,1] in R^2, f = (1, 1) constant, L = diag(2, -1) claimed; \
                     not a derivative, so the uniqueness bound must fail",
                    Box::new(|_| vec![1.0, 1.0]),
                )
            };
            let mut c = base(name, description, rules(cross_set(), 2, f, move |_| lc.clone()), vec![0.0, 0.0]);
            c.cones = Some(ConeSetup {
                sample: cross_sample(),
                window: (0.01, 0.5),
                expected_tangent: Some(axes(2, &[1.0, -1.0])),
            });
            if name == "cross" {
                c.expectations.insert(Uniqueness, Pass);
                c.expectations.insert(ConeAxes, Pass);
            } else {
                c.expectations = expect(&[
                    (PartitionCertified, Pass),
                    (FrechetDecays, Fail),
                    (StrictDecays, Fail),
                    (Uniqueness, Fail),
                    (ConeAxes, Pass),
                ]);
            }
            c
        }
        other => return Err(Error::InvalidInput(format!("unknown catalog case {other}"))),
    };
    Ok(c)
}
