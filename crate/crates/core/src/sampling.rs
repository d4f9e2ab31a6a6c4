//! Deterministic random sampling used by the estimators.
//!
//! Every estimator derives its own generator from the user seed plus a few
//! tags (operation, base point, scale index), so draws are reproducible and a
//! run with more samples sees the same prefix as a run with fewer.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::geomset::{norm, sq_dist, ClosedSetRep, Point, SetShape};

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Generator keyed by `seed` and an arbitrary list of tags.
pub fn rng_for(seed: u64, tags: &[u64]) -> ChaCha8Rng {
    let key = tags.iter().fold(splitmix(seed), |acc, &t| splitmix(acc ^ splitmix(t)));
    ChaCha8Rng::seed_from_u64(key)
}

/// Tag for a point, from the bit patterns of its coordinates.
pub fn point_tag(x: &[f64]) -> u64 {
    x.iter().fold(0x51_7c_c1_b7_27_22_0a_95, |acc, v| splitmix(acc ^ v.to_bits()))
}

/// Tag for a short ASCII label.
pub fn label_tag(label: &str) -> u64 {
    label.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x100_0000_01b3))
}

pub fn unit_vector<R: Rng>(rng: &mut R, n: usize) -> Point {
    loop {
        let v: Point = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let len = norm(&v);
        if len > 1e-12 {
            return v.into_iter().map(|c| c / len).collect();
        }
    }
}

pub fn uniform_in_box<R: Rng>(rng: &mut R, lo: &[f64], hi: &[f64]) -> Point {
    lo.iter().zip(hi).map(|(&l, &h)| l + (h - l) * rng.gen::<f64>()).collect()
}

/// Uniform point of the ball `B(center, radius)`.
pub fn uniform_in_ball<R: Rng>(rng: &mut R, center: &[f64], radius: f64) -> Point {
    let n = center.len();
    let dir = unit_vector(rng, n);
    let rho = radius * rng.gen::<f64>().powf(1.0 / n as f64);
    center.iter().zip(&dir).map(|(c, d)| c + rho * d).collect()
}

/// Point at a log-uniform distance in `[r_in, r_out]` from `center`, uniform direction.
pub fn log_annulus<R: Rng>(rng: &mut R, center: &[f64], r_in: f64, r_out: f64) -> Point {
    let dir = unit_vector(rng, center.len());
    let t: f64 = rng.gen();
    let rho = r_in * (r_out / r_in).powf(t);
    center.iter().zip(&dir).map(|(c, d)| c + rho * d).collect()
}

/// Off-set sample points drawn uniformly from the bounding box of the set
/// grown by `margin` on every side.
pub fn off_set_samples(set: &ClosedSetRep, count: usize, margin: f64, seed: u64) -> Vec<Point> {
    let (mut lo, mut hi) = set.bounding_box();
    lo.iter_mut().for_each(|v| *v -= margin);
    hi.iter_mut().for_each(|v| *v += margin);
    let mut rng = rng_for(seed, &[label_tag("off-set-samples")]);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let x = uniform_in_box(&mut rng, &lo, &hi);
        if set.distance_unchecked(&x) > 0.0 {
            out.push(x);
        }
    }
    out
}

/// Points of the set inside the closed ball `B(center, radius)`.
///
/// Finite sets contribute every point in the ball. Other sets contribute the
/// nearest points of `count` uniform draws from the ball, kept when they stay
/// inside it, plus the center when it lies in the set.
pub fn set_points_in_ball<R: Rng>(
    set: &ClosedSetRep,
    center: &[f64],
    radius: f64,
    count: usize,
    rng: &mut R,
) -> Vec<Point> {
    let r2 = radius * radius;
    if let SetShape::FinitePoints(points) = set.shape() {
        return points.iter().filter(|p| sq_dist(p, center) <= r2).cloned().collect();
    }
    let mut out = Vec::with_capacity(count + 1);
    if set.distance_unchecked(center) == 0.0 {
        out.push(center.to_vec());
    }
    for _ in 0..count {
        let y = uniform_in_ball(rng, center, radius);
        let foot = set.nearest_unchecked(&y).foot;
        if sq_dist(&foot, center) <= r2 {
            out.push(foot);
        }
    }
    out
}
