//! Acceptance criteria, one line per criterion. Runs as a plain binary so
//! that the lines are printed whether or not a criterion fails.

use std::sync::Arc;
use std::time::Instant;

use nalgebra::DMatrix;
use rayon::prelude::*;
use whitney_ext::analysis::{
    check_claim_bounds, claim_params, cone_directions, derivative_continuity_at, frechet_residual,
    lipschitz_on_ball, measure_claim_constants, strict_residual, uniqueness_bound_check,
};
use whitney_ext::catalog;
use whitney_ext::sampling::{off_set_samples, rng_for, uniform_in_box};
use whitney_ext::suites::default_extension;
use whitney_ext::{
    build_partition, combine_capped, verify_partition, Extension, PartitionConfig, PartitionOfUnity, PartitionReport,
    Tolerances,
};

const SEED: u64 = 20;

struct Line {
    id: u32,
    title: &'static str,
    pass: bool,
    detail: String,
    secs: f64,
}

fn run(id: u32, title: &'static str, f: impl FnOnce() -> (bool, String)) -> Line {
    let t = Instant::now();
    let (pass, detail) = f();
    let line = Line { id, title, pass, detail, secs: t.elapsed().as_secs_f64() };
    println!(
        "[{}] criterion {}: {} ({:.1} s) {}",
        if line.pass { "PASS" } else { "FAIL" },
        line.id,
        line.title,
        line.secs,
        line.detail
    );
    line
}

fn ext_for(name: &str) -> (whitney_ext::Case, Extension) {
    let case = catalog::case(name).unwrap();
    let ext = default_extension(&case.jets, PartitionConfig::default()).unwrap();
    (case, ext)
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max)
}

/// 1. Affine data is reproduced exactly in R^2 and R^3.
fn affine_exactness() -> (bool, String) {
    let t = Instant::now();
    let mut worst: f64 = 0.0;
    let mut summary = Vec::new();
    for name in ["affine", "affine3"] {
        let (case, ext) = ext_for(name);
        let set = case.jets.set();
        let (mut lo, mut hi) = set.bounding_box();
        lo.iter_mut().for_each(|v| *v -= 1.0);
        hi.iter_mut().for_each(|v| *v += 1.0);
        let mut rng = rng_for(SEED, &[1]);
        let xs: Vec<Vec<f64>> = (0..10_000).map(|_| uniform_in_box(&mut rng, &lo, &hi)).collect();
        let a = &case.base_point;
        let fa = case.jets.value(a).unwrap();
        let m = case.jets.operator(a).unwrap();
        let err = xs
            .par_iter()
            .map(|x| {
                let dx = DMatrix::from_iterator(x.len(), 1, x.iter().zip(a).map(|(p, q)| p - q));
                let exact: Vec<f64> = fa.iter().zip((&m * dx).iter()).map(|(f, l)| f + l).collect();
                max_abs_diff(&ext.value(x).unwrap(), &exact)
            })
            .reduce(|| 0.0, f64::max);
        summary.push(format!("R^{} max error {err:.2e}", set.dimension()));
        worst = worst.max(err);
    }
    let secs = t.elapsed().as_secs_f64();
    (worst <= 1e-9 && secs <= 10.0, format!("{} (<= 1e-9, {secs:.1} s <= 10 s)", summary.join(", ")))
}

/// 2. Partition certification on the catalog sets with stable constants.
fn partition_certification() -> (bool, String) {
    let t = Instant::now();
    let tol = Tolerances::default();
    let mut ok = true;
    let mut parts = Vec::new();
    for name in catalog::SET_NAMES {
        let set = Arc::new(catalog::set(name).unwrap());
        let p = build_partition(set.clone(), PartitionConfig::default()).unwrap();
        let samples = off_set_samples(&set, 10_000, 0.5, SEED);
        let small = verify_partition(&p, &samples[..1000], &tol).unwrap();
        let large = verify_partition(&p, &samples, &tol).unwrap();
        let stable = small.c1_measured == large.c1_measured && small.c2_measured == large.c2_measured;
        let good = large.certified() && small.certified() && stable && large.c2_measured.is_finite();
        ok &= good;
        parts.push(format!(
            "{name}: C1 {}->{} C2 {:.4}->{:.4} sum {:.1e} grad {:.1e} P2 [{:.3}, {:.3}]{}",
            small.c1_measured,
            large.c1_measured,
            small.c2_measured,
            large.c2_measured,
            large.max_sum_error,
            large.max_grad_sum,
            large.p2_ratio_range.0,
            large.p2_ratio_range.1,
            if good { "" } else { " <- fails" }
        ));
    }
    let secs = t.elapsed().as_secs_f64();
    ok &= secs <= 60.0;
    (ok, format!("[{}] ({secs:.1} s <= 60 s)", parts.join("; ")))
}

/// 3. Analytic Jacobian against central differences.
fn jacobian_correctness() -> (bool, String) {
    let tol = Tolerances::default();
    let h = tol.fd_step;
    let mut ok = true;
    let mut parts = Vec::new();
    for name in catalog::CASE_NAMES {
        let (case, ext) = ext_for(name);
        let set = case.jets.set();
        let xs = off_set_samples(set, 1000, 0.5, SEED);
        let n = set.dimension();
        let rel: Vec<f64> = xs
            .par_iter()
            .map(|x| {
                let j = ext.jacobian(x).unwrap();
                let mut fd = DMatrix::zeros(j.nrows(), n);
                for k in 0..n {
                    let (mut p, mut q) = (x.clone(), x.clone());
                    p[k] += h;
                    q[k] -= h;
                    let (fp, fq) = (ext.value(&p).unwrap(), ext.value(&q).unwrap());
                    for i in 0..j.nrows() {
                        fd[(i, k)] = (fp[i] - fq[i]) / (2.0 * h);
                    }
                }
                (&fd - &j).norm() / j.norm().max(1.0)
            })
            .collect();
        let worst = rel.iter().copied().fold(0.0, f64::max);
        let bad = rel.iter().filter(|&&r| r > tol.fd_rel).count();
        ok &= bad == 0;
        parts.push(format!("{name}: max rel {worst:.1e}, {bad} over"));
    }
    (ok, format!("step {h:e}, rel {:e}: [{}]", tol.fd_rel, parts.join("; ")))
}

/// 4. Frechet residual on the quadratic box at boundary points.
fn derivative_preservation() -> (bool, String) {
    let tol = Tolerances::default();
    let (case, ext) = ext_for("quadratic");
    let scales: Vec<f64> = (1..=12).map(|k| 2f64.powi(-k)).collect();
    let mut ok = true;
    let mut parts = Vec::new();
    for a in [[0.0, 0.5], [1.0, 0.3], [0.5, 1.0], [0.0, 0.0], [0.7, 0.0]] {
        let s = frechet_residual(&ext, &a, &scales, 256, SEED).unwrap();
        let slope = s.loglog_slope().unwrap_or(f64::NAN);
        let good = slope >= tol.frechet_slope && s.last() <= tol.frechet_final;
        ok &= good;
        parts.push(format!("a={a:?}: slope {slope:.3}, last {:.2e}", s.last()));
    }
    let _ = case;
    (ok, format!("slope >= {}, last <= {:e}: [{}]", tol.frechet_slope, tol.frechet_final, parts.join("; ")))
}

/// 5. Quantitative Lipschitz bounds on the two-segment case.
fn quantitative_lipschitz() -> (bool, String) {
    let (case, ext) = ext_for("lipschitz2seg");
    let set = case.jets.set().clone();
    let p = build_partition(set.clone(), PartitionConfig::default()).unwrap();
    let samples = off_set_samples(&set, 10_000, 0.5, SEED);
    let report: PartitionReport = verify_partition(&p, &samples, &Tolerances::default()).unwrap();
    let a = &case.base_point;
    let (r1, r2) = case.claim_radii;
    let (k1, k2) = measure_claim_constants(&ext, a, r1, r2, 4000, SEED).unwrap();
    let params = claim_params(&case.jets, Some(&report), a, r1, r2, k1, k2).unwrap();
    let claim = check_claim_bounds(&ext, &params, 10_000, 100_000, SEED).unwrap();
    let sup = lipschitz_on_ball(&ext, a, params.r3 / 2.0, 20_000, SEED).unwrap();
    let la = case.jets.operator(a).unwrap().norm();
    let bound = 33.0 * params.k3 + la;
    let ok = claim.holds() && claim.pair_samples >= 90_000 && sup <= bound;
    (
        ok,
        format!(
            "C1 {} C2 {:.3} K1 {k1:.3} K2 {k2:.3} K3 {:.3e}; {} derivative / {} pair violations over {} / {} samples; \
             Lipschitz sup {sup:.4} <= {bound:.3e}",
            params.c1,
            params.c2,
            params.k3,
            claim.derivative_violations,
            claim.pair_violations,
            claim.derivative_samples,
            claim.pair_samples
        ),
    )
}

/// 6. Strict derivative and derivative continuity for continuous L.
fn strict_preservation() -> (bool, String) {
    let tol = Tolerances::default();
    let mut ok = true;
    let mut parts = Vec::new();
    for name in ["quadratic", "helix"] {
        let (case, ext) = ext_for(name);
        let a = &case.base_point;
        let s = strict_residual(&ext, a, &case.scales, 1024, SEED).unwrap();
        let c = derivative_continuity_at(&ext, a, &case.scales, 512, SEED).unwrap();
        let good = |first: f64, last: f64| last <= first / 2.0 && last <= tol.decay_final;
        let g = good(s.first(), s.last()) && good(c.first(), c.last());
        ok &= g;
        parts.push(format!(
            "{name}: strict {:.2e}->{:.2e}, continuity {:.2e}->{:.2e}",
            s.first(),
            s.last(),
            c.first(),
            c.last()
        ));
    }
    (ok, format!("last <= first/2 and <= {:e}: [{}]", tol.decay_final, parts.join("; ")))
}

/// 7. The three counterexamples behave as documented.
fn counterexamples() -> (bool, String) {
    let tol = Tolerances::default();
    let (jc, je) = ext_for("jarnik");
    let fr = frechet_residual(&je, &jc.base_point, &jc.scales, 512, SEED).unwrap();
    let st = strict_residual(&je, &jc.base_point, &jc.scales, 1024, SEED).unwrap();
    let (ac, ae) = ext_for("altL");
    let ct = derivative_continuity_at(&ae, &ac.base_point, &ac.scales, 512, SEED).unwrap();
    let (oc, oe) = ext_for("oscillation");
    let os = derivative_continuity_at(&oe, &oc.base_point, &oc.scales, 512, SEED).unwrap();
    let checks = [
        fr.decays(&tol),
        st.last() >= tol.strict_floor,
        ct.last() >= tol.continuity_floor,
        os.decays(&tol),
    ];
    (
        checks.iter().all(|&c| c),
        format!(
            "jarnik frechet {:.2e}->{:.2e} decays {}, strict last {:.3} >= {}; altL continuity last {:.3} >= {}; \
             oscillation continuity {:.2e}->{:.2e} decays {}",
            fr.first(),
            fr.last(),
            checks[0],
            st.last(),
            tol.strict_floor,
            ct.last(),
            tol.continuity_floor,
            os.first(),
            os.last(),
            checks[3]
        ),
    )
}

/// 8. The glued family of capped partitions.
fn combiner() -> (bool, String) {
    let tol = Tolerances::default();
    let mut ok = true;
    let mut parts = Vec::new();
    for name in catalog::SET_NAMES {
        let set = Arc::new(catalog::set(name).unwrap());
        let (combined, state) = combine_capped(set.clone(), 2, PartitionConfig::default()).unwrap();
        let base = build_partition(set.clone(), PartitionConfig::default()).unwrap();
        let samples: Vec<Vec<f64>> = off_set_samples(&set, 10_000, 0.5, SEED)
            .into_iter()
            .filter(|x| set.distance(x).unwrap() < state.validity_limit)
            .collect();
        let b = verify_partition(&base, &samples, &tol).unwrap();
        let small = verify_partition(&combined, &samples[..1000], &tol).unwrap();
        let large = verify_partition(&combined, &samples, &tol).unwrap();
        let gate_err = samples
            .par_iter()
            .map(|x| {
                let v: f64 = combined.gates_at(x).unwrap().iter().map(|g| g.v).sum();
                (v - 1.0).abs()
            })
            .reduce(|| 0.0, f64::max);
        let stable = small.c1_measured == large.c1_measured && small.c2_measured == large.c2_measured;
        let c1_ok = large.c1_measured <= 4 * b.c1_measured;
        let c2_ok = large.c2_measured <= 3.0 * b.c1_measured as f64 * b.c2_measured;
        let good = large.certified() && small.certified() && stable && c1_ok && c2_ok && gate_err <= 1e-10;
        ok &= good;
        parts.push(format!(
            "{name}: C1* {}->{} (base {}), C2* {:.3}->{:.3} (base {:.3}), |sum v - 1| {gate_err:.1e}{}",
            small.c1_measured,
            large.c1_measured,
            b.c1_measured,
            small.c2_measured,
            large.c2_measured,
            b.c2_measured,
            if good { "" } else { " <- fails" }
        ));
        let _ = combined.dimension();
    }
    (ok, format!("[{}]", parts.join("; ")))
}

/// 9. Cone diagnostics on the cross.
fn cones() -> (bool, String) {
    let tol = Tolerances::default();
    let mut out = Vec::new();
    let mut ok = true;
    for name in ["cross", "cross_const"] {
        let case = catalog::case(name).unwrap();
        let setup = case.cones.as_ref().unwrap();
        let report = cone_directions(&setup.sample, &case.base_point, setup.window, tol.cone_angle).unwrap();
        let u = uniqueness_bound_check(&case.jets, &setup.sample, &case.base_point, &report, setup.window, 0.1)
            .unwrap();
        let expected_pass = name == "cross";
        ok &= u.passed == expected_pass;
        out.push(format!("{name}: uniqueness {} ({:.3} vs {:.3})", u.passed, u.bound_lhs, u.bound_rhs));
        if expected_pass {
            let axes = [[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]];
            let ang = |u: &[f64], v: &[f64]| (u[0] * v[0] + u[1] * v[1]).clamp(-1.0, 1.0).acos();
            let near = |set: &[Vec<f64>], v: &[f64]| set.iter().any(|d| ang(d, v) <= tol.cone_angle);
            let tangent = report.tangent_dirs.iter().all(|d| axes.iter().any(|e| ang(d, e) <= tol.cone_angle))
                && axes.iter().all(|e| near(&report.tangent_dirs, e));
            let para = axes.iter().all(|e| near(&report.paratingent_dirs, e));
            ok &= tangent && para;
            out.push(format!("tangent = +-axes {tangent}, paratingent contains +-axes {para}"));
        }
    }
    (ok, out.join("; "))
}

fn main() {
    let t = Instant::now();
    let lines = vec![
        run(1, "affine exactness", affine_exactness),
        run(2, "partition certification", partition_certification),
        run(3, "Jacobian against central differences", jacobian_correctness),
        run(4, "derivative preservation on the quadratic box", derivative_preservation),
        run(5, "quantitative Lipschitz bounds", quantitative_lipschitz),
        run(6, "strict derivative preservation", strict_preservation),
        run(7, "counterexample regressions", counterexamples),
        run(8, "glued capped partitions", combiner),
        run(9, "cone diagnostics on the cross", cones),
    ];
    let secs = t.elapsed().as_secs_f64();
    let budget = secs <= 300.0;
    println!("[{}] total runtime {secs:.1} s (<= 300 s)", if budget { "PASS" } else { "FAIL" });
    let failed: Vec<u32> = lines.iter().filter(|l| !l.pass).map(|l| l.id).collect();
    if !failed.is_empty() || !budget {
        eprintln!("failing criteria: {failed:?}");
        std::process::exit(1);
    }
}
