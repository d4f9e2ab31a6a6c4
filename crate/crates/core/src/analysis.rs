//! Monte-Carlo certification of the extension's differentiability,
//! Holder and Lipschitz properties, and cone diagnostics for finite samples
//! of the set.
//!
//! Limits cannot be checked with finitely many samples; every estimator
//! reports a supremum over its sample and the caller decides what decay
//! means through [`Tolerances`](crate::config::Tolerances).

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::Tolerances;
use crate::error::{check_dim, Error, Result};
use crate::extend::Extension;
use crate::geomset::{sq_dist, Point};
use crate::jetfield::{check_in_set, JetField};
use crate::linalg::{apply, spectral_norm, sub, vec_norm};
use crate::partition::PartitionReport;
use crate::sampling::{label_tag, log_annulus, point_tag, rng_for, uniform_in_ball, unit_vector};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum ResidualKind {
    Frechet,
    Strict,
    Hoelder(f64),
    Continuity,
}

/// One supremum per scale, scales strictly decreasing.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResidualSeries {
    pub kind: ResidualKind,
    pub scales: Vec<f64>,
    pub residuals: Vec<f64>,
}

impl ResidualSeries {
    pub fn first(&self) -> f64 {
        self.residuals.first().copied().unwrap_or(0.0)
    }

    pub fn last(&self) -> f64 {
        self.residuals.last().copied().unwrap_or(0.0)
    }

    pub fn max(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }

    /// Decay rule of the tolerances applied to the end points.
    pub fn decays(&self, tol: &Tolerances) -> bool {
        tol.decays(self.first(), self.last())
    }

    /// Least-squares slope of `ln residual` against `ln scale`, `None` when a
    /// residual vanishes or fewer than two scales exist.
    pub fn loglog_slope(&self) -> Option<f64> {
        if self.scales.len() < 2 || self.residuals.iter().any(|&r| !(r > 0.0)) {
            return None;
        }
        let xs: Vec<f64> = self.scales.iter().map(|s| s.ln()).collect();
        let ys: Vec<f64> = self.residuals.iter().map(|r| r.ln()).collect();
        let k = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / k;
        let my = ys.iter().sum::<f64>() / k;
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
        Some(sxy / sxx)
    }
}

fn check_scales(scales: &[f64]) -> Result<()> {
    let ok = !scales.is_empty()
        && scales.iter().all(|s| s.is_finite() && *s > 0.0)
        && scales.windows(2).all(|w| w[0] > w[1]);
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidInput("scales must be positive and strictly decreasing".into()))
    }
}

/// Points of the annulus `[delta/2, delta]` about `a`; every other draw is
/// replaced by its nearest point in the set so that set points are probed too.
fn annulus_points(ext: &Extension, a: &[f64], delta: f64, count: usize, tags: &[u64], seed: u64) -> Vec<Point> {
    let set = ext.jets().set();
    let mut rng = rng_for(seed, tags);
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let x = log_annulus(&mut rng, a, delta / 2.0, delta);
        let x = if i % 2 == 1 { set.nearest_unchecked(&x).foot } else { x };
        if sq_dist(&x, a) > 0.0 {
            out.push(x);
        }
    }
    out
}

fn sup<F>(points: &[Point], f: F) -> Result<f64>
where
    F: Fn(&Point) -> Result<f64> + Sync + Send,
{
    points.par_iter().map(f).try_reduce(|| 0.0, |p, q| Ok(p.max(q)))
}

fn norm_of_diff(a: &[f64], b: &[f64]) -> f64 {
    vec_norm(&sub(a, b))
}

/// `sup |f^(x) - f^(a) - L(a)(x - a)| / |x - a|` per annulus.
pub fn frechet_residual(
    ext: &Extension,
    a: &[f64],
    scales: &[f64],
    samples_per_scale: usize,
    seed: u64,
) -> Result<ResidualSeries> {
    check_in_set(ext.jets().set(), a)?;
    check_scales(scales)?;
    let fa = ext.value(a)?;
    let la = ext.jets().operator(a)?;
    let residuals = scales
        .iter()
        .enumerate()
        .map(|(k, &delta)| {
            let tags = [label_tag("frechet"), point_tag(a), k as u64];
            let xs = annulus_points(ext, a, delta, samples_per_scale, &tags, seed);
            sup(&xs, |x| {
                let fx = ext.value(x)?;
                let lin = apply(&la, &sub(x, a));
                let r: Vec<f64> = fx.iter().zip(&fa).zip(&lin).map(|((f, g), l)| f - g - l).collect();
                Ok(vec_norm(&r) / sq_dist(x, a).sqrt())
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ResidualSeries { kind: ResidualKind::Frechet, scales: scales.to_vec(), residuals })
}

/// `sup |f^(x) - f^(a)| / |x - a|^alpha` per annulus.
pub fn hoelder_residual(
    ext: &Extension,
    a: &[f64],
    alpha: f64,
    scales: &[f64],
    samples_per_scale: usize,
    seed: u64,
) -> Result<ResidualSeries> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidInput(format!("exponent {alpha} must lie in (0, 1]")));
    }
    check_in_set(ext.jets().set(), a)?;
    check_scales(scales)?;
    let fa = ext.value(a)?;
    let residuals = scales
        .iter()
        .enumerate()
        .map(|(k, &delta)| {
            let tags = [label_tag("hoelder"), point_tag(a), k as u64];
            let xs = annulus_points(ext, a, delta, samples_per_scale, &tags, seed);
            sup(&xs, |x| Ok(norm_of_diff(&ext.value(x)?, &fa) / sq_dist(x, a).sqrt().powf(alpha)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ResidualSeries { kind: ResidualKind::Hoelder(alpha), scales: scales.to_vec(), residuals })
}

/// `sup |f^'(x) - L(a)|` over off-set points of each annulus.
pub fn derivative_continuity_at(
    ext: &Extension,
    a: &[f64],
    scales: &[f64],
    samples_per_scale: usize,
    seed: u64,
) -> Result<ResidualSeries> {
    let set = ext.jets().set();
    check_in_set(set, a)?;
    check_scales(scales)?;
    let la = ext.jets().operator(a)?;
    let residuals = scales
        .iter()
        .enumerate()
        .map(|(k, &delta)| {
            let mut rng = rng_for(seed, &[label_tag("continuity"), point_tag(a), k as u64]);
            let xs: Vec<Point> = (0..samples_per_scale)
                .map(|_| log_annulus(&mut rng, a, delta / 2.0, delta))
                .filter(|x| set.distance_unchecked(x) > 0.0)
                .collect();
            sup(&xs, |x| Ok(spectral_norm(&(ext.jacobian(x)? - &la))))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ResidualSeries { kind: ResidualKind::Continuity, scales: scales.to_vec(), residuals })
}

/// Pairs of distinct points of `B(center, radius)` mixing four patterns:
/// independent uniform points, pairs through the center, nearby pairs at a
/// log-uniform separation, and nearby pairs snapped to the set.
fn ball_pairs(
    ext: &Extension,
    center: &[f64],
    radius: f64,
    count: usize,
    tags: &[u64],
    seed: u64,
) -> Vec<(Point, Point)> {
    let set = ext.jets().set();
    let n = center.len();
    let mut rng = rng_for(seed, tags);
    let r2 = radius * radius;
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let x = uniform_in_ball(&mut rng, center, radius);
        let near = |rng: &mut rand_chacha::ChaCha8Rng, x: &[f64]| -> Point {
            let t: f64 = rng.gen();
            let rho = radius * 1e-4f64.powf(t);
            let u = unit_vector(rng, n);
            x.iter().zip(&u).map(|(xi, ui)| xi + rho * ui).collect()
        };
        let (x, y) = match i % 4 {
            0 => {
                let y = uniform_in_ball(&mut rng, center, radius);
                (x, y)
            }
            1 => (x, center.to_vec()),
            2 => {
                let y = near(&mut rng, &x);
                (x, y)
            }
            _ => {
                let y = near(&mut rng, &x);
                (set.nearest_unchecked(&x).foot, set.nearest_unchecked(&y).foot)
            }
        };
        if sq_dist(&x, &y) > 0.0 && sq_dist(&x, center) <= r2 && sq_dist(&y, center) <= r2 {
            out.push((x, y));
        }
    }
    out
}

fn pair_sup<F>(pairs: &[(Point, Point)], f: F) -> Result<f64>
where
    F: Fn(&Point, &Point) -> Result<f64> + Sync + Send,
{
    pairs.par_iter().map(|(x, y)| f(x, y)).try_reduce(|| 0.0, |p, q| Ok(p.max(q)))
}

/// `E_xy = |f^(y) - f^(x) - L(a)(y - x)|`.
pub fn exy(ext: &Extension, a: &[f64], x: &[f64], y: &[f64]) -> Result<f64> {
    check_in_set(ext.jets().set(), a)?;
    let la = ext.jets().operator(a)?;
    exy_with(ext, &la, x, y)
}

fn exy_with(ext: &Extension, la: &DMatrix<f64>, x: &[f64], y: &[f64]) -> Result<f64> {
    let fx = ext.value(x)?;
    let fy = ext.value(y)?;
    let lin = apply(la, &sub(y, x));
    let r: Vec<f64> = fy.iter().zip(&fx).zip(&lin).map(|((p, q), l)| p - q - l).collect();
    Ok(vec_norm(&r))
}

/// `sup E_xy / |y - x|` over pairs in each ball `B(a, delta)`; pairs through
/// `a` itself are included.
pub fn strict_residual(
    ext: &Extension,
    a: &[f64],
    scales: &[f64],
    pairs_per_scale: usize,
    seed: u64,
) -> Result<ResidualSeries> {
    check_in_set(ext.jets().set(), a)?;
    check_scales(scales)?;
    let la = ext.jets().operator(a)?;
    let residuals = scales
        .iter()
        .enumerate()
        .map(|(k, &delta)| {
            let tags = [label_tag("strict"), point_tag(a), k as u64];
            let pairs = ball_pairs(ext, a, delta, pairs_per_scale, &tags, seed);
            pair_sup(&pairs, |x, y| Ok(exy_with(ext, &la, x, y)? / sq_dist(x, y).sqrt()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ResidualSeries { kind: ResidualKind::Strict, scales: scales.to_vec(), residuals })
}

/// `sup |f^(y) - f^(x)| / |y - x|` over sampled pairs of `B(a, r)`.
pub fn lipschitz_on_ball(ext: &Extension, a: &[f64], r: f64, pairs: usize, seed: u64) -> Result<f64> {
    check_dim(ext.dimension(), a.len())?;
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::InvalidInput(format!("radius {r} must be positive")));
    }
    let pairs = ball_pairs(ext, a, r, pairs, &[label_tag("lipschitz"), point_tag(a)], seed);
    pair_sup(&pairs, |x, y| Ok(norm_of_diff(&ext.value(y)?, &ext.value(x)?) / sq_dist(x, y).sqrt()))
}

/// Constants of the quantitative estimate at a point `a` of the set.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClaimParams {
    pub a: Point,
    pub k1: f64,
    pub k2: f64,
    pub r1: f64,
    pub r2: f64,
    /// `|L(a)| + K1`.
    pub m: f64,
    /// `min(r1/3, r2/6)`.
    pub r3: f64,
    /// `(1 + 100 C1 C2) K1 + 120 C1 C2 K2`.
    pub k3: f64,
    pub c1: f64,
    pub c2: f64,
}

/// Derives `M`, `r3` and `K3` from the hypotheses' constants and the
/// partition's measured `C1`, `C2`.
pub fn claim_params(
    jets: &JetField,
    report: Option<&PartitionReport>,
    a: &[f64],
    r1: f64,
    r2: f64,
    k1: f64,
    k2: f64,
) -> Result<ClaimParams> {
    let report = report.ok_or_else(|| Error::InvalidInput("claim constants need a partition report".into()))?;
    if !(k1 >= 0.0 && k2 >= 0.0) {
        return Err(Error::InvalidInput("K1 and K2 must be nonnegative".into()));
    }
    if !(r1 > 0.0 && r2 > 0.0) {
        return Err(Error::InvalidInput("r1 and r2 must be positive".into()));
    }
    check_in_set(jets.set(), a)?;
    let c1 = report.c1_measured as f64;
    let c2 = report.c2_measured;
    let m = spectral_norm(&jets.operator(a)?) + k1;
    let k3 = (1.0 + 5.0 * 20.0 * c1 * c2) * k1 + 6.0 * 20.0 * c1 * c2 * k2;
    Ok(ClaimParams { a: a.to_vec(), k1, k2, r1, r2, m, r3: (r1 / 3.0).min(r2 / 6.0), k3, c1, c2 })
}

/// Measured hypothesis constants: `K1 = sup |A(x) - L(a)|` over off-set
/// points of `B(a, r1)` (member anchors are where `A` is actually used, so the
/// sample includes the anchors active at each draw), and
/// `K2 = sup |f(z) - f(y) - L(a)(z - y)| / |z - y|` over set points of `B(a, r2)`.
pub fn measure_claim_constants(
    ext: &Extension,
    a: &[f64],
    r1: f64,
    r2: f64,
    samples: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    let set = ext.jets().set();
    check_in_set(set, a)?;
    let la = ext.jets().operator(a)?;
    let mut rng = rng_for(seed, &[label_tag("claim-k1"), point_tag(a)]);
    let xs: Vec<Point> = (0..samples)
        .map(|_| uniform_in_ball(&mut rng, a, r1))
        .filter(|x| set.distance_unchecked(x) > 0.0)
        .collect();
    let afield = ext.afield();
    let k1 = sup(&xs, |x| {
        let mut worst = spectral_norm(&(afield.eval(x)? - &la));
        for w in ext.partition().weights_at(x)? {
            if sq_dist(&w.member.anchor, a) < r1 * r1 {
                worst = worst.max(spectral_norm(&(afield.eval_at_member(&w.member)? - &la)));
            }
        }
        Ok(worst)
    })?;
    let mut rng = rng_for(seed, &[label_tag("claim-k2"), point_tag(a)]);
    let mut pts = crate::sampling::set_points_in_ball(set, a, r2, samples, &mut rng);
    pts.truncate(600);
    let jets = ext.jets();
    let values: Vec<Vec<f64>> = pts.iter().map(|p| jets.value(p)).collect::<Result<_>>()?;
    let k2 = (0..pts.len())
        .into_par_iter()
        .map(|i| {
            let mut worst: f64 = 0.0;
            for j in 0..i {
                let gap = sq_dist(&pts[i], &pts[j]).sqrt();
                if gap == 0.0 {
                    continue;
                }
                let lin = apply(&la, &sub(&pts[i], &pts[j]));
                let r: Vec<f64> =
                    values[i].iter().zip(&values[j]).zip(&lin).map(|((p, q), l)| p - q - l).collect();
                worst = worst.max(vec_norm(&r) / gap);
            }
            worst
        })
        .reduce(|| 0.0, f64::max);
    Ok((k1, k2))
}

/// Outcome of checking the two bounds of the quantitative estimate.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClaimReport {
    pub params: ClaimParams,
    /// Absolute slack added to both bounds to absorb rounding.
    pub slack: f64,
    pub derivative_samples: usize,
    pub derivative_violations: usize,
    /// `sup |f^'(x) - L(a)|` over samples with `|x - a| < r3`.
    pub max_derivative_gap: f64,
    /// Largest Jacobian rounding bound among the derivative samples.
    pub max_rounding: f64,
    pub pair_samples: usize,
    pub pair_violations: usize,
    /// `sup E_xy / |y - x|` over pairs within `r3/2`.
    pub max_pair_ratio: f64,
}

impl ClaimReport {
    pub fn holds(&self) -> bool {
        self.derivative_violations == 0 && self.pair_violations == 0
    }
}

/// Checks `|f^'(x) - L(a)| <= K3` for off-set `x` with `|x - a| < r3` and
/// `E_xy <= 33 K3 |y - x|` for pairs within `r3/2`.
pub fn check_claim_bounds(
    ext: &Extension,
    params: &ClaimParams,
    samples: usize,
    pairs: usize,
    seed: u64,
) -> Result<ClaimReport> {
    let a = &params.a;
    let set = ext.jets().set();
    check_in_set(set, a)?;
    let la = ext.jets().operator(a)?;
    let slack = 1e-9;
    let mut rng = rng_for(seed, &[label_tag("claim-derivative"), point_tag(a)]);
    let xs: Vec<Point> = (0..samples)
        .map(|i| {
            if i % 2 == 0 {
                uniform_in_ball(&mut rng, a, params.r3)
            } else {
                log_annulus(&mut rng, a, params.r3 * 1e-6, params.r3)
            }
        })
        .filter(|x| set.distance_unchecked(x) > 0.0 && sq_dist(x, a) < params.r3 * params.r3)
        .collect();
    // each gap is compared with K3 plus the rounding bound of its Jacobian
    let gaps: Vec<(f64, f64)> = xs
        .par_iter()
        .map(|x| Ok((spectral_norm(&(ext.jacobian(x)? - &la)), ext.jacobian_rounding(x)?)))
        .collect::<Result<_>>()?;
    let derivative_violations = gaps.iter().filter(|(g, e)| *g > params.k3 + slack + e).count();
    let half = params.r3 / 2.0;
    let pair_list: Vec<(Point, Point)> =
        ball_pairs(ext, a, half, pairs, &[label_tag("claim-pairs"), point_tag(a)], seed)
            .into_iter()
            .filter(|(x, y)| sq_dist(x, a) < half * half && sq_dist(y, a) < half * half)
            .collect();
    let ratios: Vec<(f64, bool)> = pair_list
        .par_iter()
        .map(|(x, y)| {
            let e = exy_with(ext, &la, x, y)?;
            let gap = sq_dist(x, y).sqrt();
            Ok((e / gap, e > 33.0 * params.k3 * gap + slack * gap.max(1.0)))
        })
        .collect::<Result<_>>()?;
    Ok(ClaimReport {
        params: params.clone(),
        slack,
        derivative_samples: xs.len(),
        derivative_violations,
        max_derivative_gap: gaps.iter().map(|g| g.0).fold(0.0, f64::max),
        max_rounding: gaps.iter().map(|g| g.1).fold(0.0, f64::max),
        pair_samples: pair_list.len(),
        pair_violations: ratios.iter().filter(|r| r.1).count(),
        max_pair_ratio: ratios.iter().map(|r| r.0).fold(0.0, f64::max),
    })
}

/// Tangent and paratingent directions of a finite set sample at `x`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConeReport {
    pub x: Point,
    pub tangent_dirs: Vec<Point>,
    pub paratingent_dirs: Vec<Point>,
    /// Largest `|det|` over n-tuples of paratingent directions.
    pub best_det: f64,
    /// Smallest `m` with `best_det >= 1/m`, absent when the directions do not span.
    pub f_m_index: Option<u64>,
}

/// Largest number of sample points used for secant pairs.
const MAX_PAIR_POINTS: usize = 200;
/// Largest number of directions scanned for the determinant when n >= 3; in
/// the plane every pair is scanned.
const MAX_DET_DIRS: usize = 64;

fn push_direction(dirs: &mut Vec<Point>, v: Point, angle_tol: f64) {
    let dup = dirs.iter().any(|d| {
        let dot: f64 = d.iter().zip(&v).map(|(p, q)| p * q).sum();
        dot.clamp(-1.0, 1.0).acos() <= angle_tol
    });
    if !dup {
        dirs.push(v);
    }
}

fn unit(v: Point) -> Option<Point> {
    let len = vec_norm(&v);
    (len > 0.0).then(|| v.into_iter().map(|c| c / len).collect())
}

fn best_determinant(dirs: &[Point], n: usize) -> f64 {
    if n == 2 {
        let mut best: f64 = 0.0;
        for (i, u) in dirs.iter().enumerate() {
            for v in &dirs[..i] {
                best = best.max((u[0] * v[1] - u[1] * v[0]).abs());
            }
        }
        return best.min(1.0);
    }
    let dirs = &dirs[..dirs.len().min(MAX_DET_DIRS)];
    if dirs.len() < n {
        return 0.0;
    }
    let mut best: f64 = 0.0;
    let mut idx: Vec<usize> = (0..n).collect();
    loop {
        let m = DMatrix::from_fn(n, n, |i, k| dirs[idx[k]][i]);
        best = best.max(m.determinant().abs());
        // next combination
        let mut i = n;
        loop {
            if i == 0 {
                return best.min(1.0);
            }
            i -= 1;
            if idx[i] < dirs.len() - n + i {
                idx[i] += 1;
                for k in i + 1..n {
                    idx[k] = idx[k - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Directions of secants from `x` to sample points with
/// `inner <= |p - x| <= outer`, and of secants between pairs of sample
/// points within `outer` of `x`, deduplicated up to `angle_tol` radians.
pub fn cone_directions(
    sample: &[Point],
    x: &[f64],
    window: (f64, f64),
    angle_tol: f64,
) -> Result<ConeReport> {
    let (inner, outer) = window;
    if !(inner >= 0.0 && outer > inner && outer.is_finite()) {
        return Err(Error::InvalidInput(format!("window ({inner}, {outer}) is empty")));
    }
    let n = x.len();
    for p in sample {
        check_dim(n, p.len())?;
    }
    if !sample.iter().any(|p| sq_dist(p, x) == 0.0) {
        return Err(Error::NotInSet(x.to_vec()));
    }
    let mut tangent_dirs = Vec::new();
    for p in sample {
        let d = sq_dist(p, x).sqrt();
        if d >= inner && d <= outer {
            if let Some(u) = unit(sub(p, x)) {
                push_direction(&mut tangent_dirs, u, angle_tol);
            }
        }
    }
    let mut local: Vec<&Point> = sample.iter().filter(|p| sq_dist(p, x) <= outer * outer).collect();
    local.sort_by(|p, q| sq_dist(p, x).total_cmp(&sq_dist(q, x)));
    local.truncate(MAX_PAIR_POINTS);
    let mut paratingent_dirs = Vec::new();
    for (i, p) in local.iter().enumerate() {
        for q in &local[..i] {
            if let Some(u) = unit(sub(p, q)) {
                let neg: Point = u.iter().map(|c| -c).collect();
                push_direction(&mut paratingent_dirs, u, angle_tol);
                push_direction(&mut paratingent_dirs, neg, angle_tol);
            }
        }
    }
    let best_det = best_determinant(&paratingent_dirs, n);
    let f_m_index = (best_det > 0.0).then(|| (1.0 / best_det).ceil() as u64);
    Ok(ConeReport { x: x.to_vec(), tangent_dirs, paratingent_dirs, best_det, f_m_index })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UniquenessReport {
    pub passed: bool,
    /// `|L(x)|`.
    pub bound_lhs: f64,
    /// `(n / d) sup |f(y) - f(z)| / |y - z|` over sample pairs in the window.
    pub bound_rhs: f64,
    pub slack: f64,
    /// `bound_rhs (1 + slack) - bound_lhs`.
    pub margin: f64,
}

/// Compares `|L(x)|` with the secant bound built from the paratingent
/// determinant. Fails with [`Error::DegenerateCone`] when the directions do
/// not span.
pub fn uniqueness_bound_check(
    jets: &JetField,
    sample: &[Point],
    x: &[f64],
    report: &ConeReport,
    window: (f64, f64),
    slack: f64,
) -> Result<UniquenessReport> {
    let n = x.len();
    check_dim(jets.dimension(), n)?;
    if !(report.best_det > 0.0) {
        return Err(Error::DegenerateCone(n));
    }
    let outer = window.1;
    let mut local: Vec<&Point> = sample.iter().filter(|p| sq_dist(p, x) <= outer * outer).collect();
    local.sort_by(|p, q| sq_dist(p, x).total_cmp(&sq_dist(q, x)));
    local.truncate(MAX_PAIR_POINTS);
    let values: Vec<Vec<f64>> = local.iter().map(|p| jets.value(p)).collect::<Result<_>>()?;
    let mut quotient: f64 = 0.0;
    for i in 0..local.len() {
        for j in 0..i {
            let gap = sq_dist(local[i], local[j]).sqrt();
            if gap > 0.0 {
                quotient = quotient.max(norm_of_diff(&values[i], &values[j]) / gap);
            }
        }
    }
    let bound_lhs = spectral_norm(&jets.operator(x)?);
    let bound_rhs = n as f64 / report.best_det * quotient;
    let margin = bound_rhs * (1.0 + slack) - bound_lhs;
    Ok(UniquenessReport { passed: margin >= 0.0, bound_lhs, bound_rhs, slack, margin })
}
