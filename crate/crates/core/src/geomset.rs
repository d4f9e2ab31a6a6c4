//! Closed subsets of R^n with exact distance and nearest-point queries.
//!
//! Three representations are supported: finite point clouds, finite unions of
//! closed axis-aligned boxes and finite unions of closed Euclidean balls. All
//! queries are pure; a set is immutable once built.
//!
//! When several points of the set are nearest to a query, the foot returned
//! by [`ClosedSetRep::nearest`] is the lexicographically smallest of the
//! per-primitive candidates, so repeated queries are bit-identical.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

/// A point of R^n.
pub type Point = Vec<f64>;

/// Point clouds at or below this size are scanned linearly.
const LINEAR_SCAN_LIMIT: usize = 64;

/// Closed axis-aligned box `[lo_1, hi_1] x ... x [lo_n, hi_n]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxisBox {
    pub lo: Point,
    pub hi: Point,
}

/// Closed Euclidean ball.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: Point,
    pub radius: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum SetShape {
    FinitePoints(Vec<Point>),
    BoxUnion(Vec<AxisBox>),
    BallUnion(Vec<Ball>),
}

/// A nearest point of the set together with the distance to it.
#[derive(Clone, Debug, PartialEq)]
pub struct NearestResult {
    pub foot: Point,
    pub distance: f64,
    /// Index of the primitive (point, box or ball) the foot belongs to.
    pub primitive: usize,
}

/// A nonempty closed subset of R^n.
#[derive(Clone, Debug)]
pub struct ClosedSetRep {
    dim: usize,
    shape: SetShape,
    index: Option<KdTree>,
}

impl ClosedSetRep {
    pub fn points(dim: usize, points: Vec<Point>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidInput("point set is empty".into()));
        }
        for p in &points {
            validate_point(dim, p)?;
        }
        let index = (points.len() > LINEAR_SCAN_LIMIT).then(|| KdTree::build(&points));
        Ok(Self { dim, shape: SetShape::FinitePoints(points), index })
    }

    pub fn boxes(dim: usize, boxes: Vec<AxisBox>) -> Result<Self> {
        if boxes.is_empty() {
            return Err(Error::InvalidInput("box union is empty".into()));
        }
        for b in &boxes {
            validate_point(dim, &b.lo)?;
            validate_point(dim, &b.hi)?;
            if b.lo.iter().zip(&b.hi).any(|(l, h)| l > h) {
                return Err(Error::InvalidInput(format!(
                    "box with lo {:?} not below hi {:?}",
                    b.lo, b.hi
                )));
            }
        }
        Ok(Self { dim, shape: SetShape::BoxUnion(boxes), index: None })
    }

    pub fn balls(dim: usize, balls: Vec<Ball>) -> Result<Self> {
        if balls.is_empty() {
            return Err(Error::InvalidInput("ball union is empty".into()));
        }
        for b in &balls {
            validate_point(dim, &b.center)?;
            if !(b.radius.is_finite() && b.radius > 0.0) {
                return Err(Error::InvalidInput(format!("ball radius {} must be positive", b.radius)));
            }
        }
        Ok(Self { dim, shape: SetShape::BallUnion(balls), index: None })
    }

    /// Closed segment between two points, as a degenerate box when it is
    /// axis-aligned.
    pub fn axis_segment(lo: Point, hi: Point) -> Result<Self> {
        let dim = lo.len();
        Self::boxes(dim, vec![AxisBox { lo, hi }])
    }

    pub fn dimension(&self) -> usize {
        self.dim
    }

    pub fn shape(&self) -> &SetShape {
        &self.shape
    }

    /// Exact Euclidean distance from `x` to the set.
    pub fn distance(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim, x.len())?;
        Ok(self.distance_unchecked(x))
    }

    pub(crate) fn distance_unchecked(&self, x: &[f64]) -> f64 {
        match &self.shape {
            SetShape::FinitePoints(points) => match &self.index {
                Some(tree) => tree.nearest(points, x).1.sqrt(),
                None => points
                    .iter()
                    .map(|p| sq_dist(x, p))
                    .fold(f64::INFINITY, f64::min)
                    .sqrt(),
            },
            SetShape::BoxUnion(boxes) => {
                boxes.iter().map(|b| box_distance(b, x)).fold(f64::INFINITY, f64::min)
            }
            SetShape::BallUnion(balls) => {
                balls.iter().map(|b| ball_distance(b, x)).fold(f64::INFINITY, f64::min)
            }
        }
    }

    /// A nearest point of the set; ties are broken lexicographically.
    pub fn nearest(&self, x: &[f64]) -> Result<NearestResult> {
        check_dim(self.dim, x.len())?;
        Ok(self.nearest_unchecked(x))
    }

    pub(crate) fn nearest_unchecked(&self, x: &[f64]) -> NearestResult {
        match &self.shape {
            SetShape::FinitePoints(points) => {
                let (idx, d2) = match &self.index {
                    Some(tree) => tree.nearest(points, x),
                    None => linear_nearest(points, x),
                };
                NearestResult { foot: points[idx].clone(), distance: d2.sqrt(), primitive: idx }
            }
            SetShape::BoxUnion(boxes) => pick_nearest(boxes.iter().map(|b| {
                let foot: Point = x
                    .iter()
                    .zip(b.lo.iter().zip(&b.hi))
                    .map(|(&xi, (&l, &h))| xi.clamp(l, h))
                    .collect();
                let d = sq_dist(x, &foot).sqrt();
                (foot, d)
            })),
            SetShape::BallUnion(balls) => {
                pick_nearest(balls.iter().map(|b| {
                    let foot = ball_foot(b, x);
                    let d = sq_dist(x, &foot).sqrt();
                    (foot, d)
                }))
            }
        }
    }

    /// `r(x) = dist(x, F) / 20`.
    pub fn whitney_radius(&self, x: &[f64]) -> Result<f64> {
        Ok(self.distance(x)? / 20.0)
    }

    /// `r(x) = min(s, dist(x, F)) / 20`, the radius used by the capped partitions.
    pub fn capped_radius(&self, s: f64, x: &[f64]) -> Result<f64> {
        if !(s >= 1.0) {
            return Err(Error::InvalidInput(format!("cap s = {s} must be at least 1")));
        }
        Ok(self.distance(x)?.min(s) / 20.0)
    }

    /// Membership in the sublevel set `H_d = { x : dist(x, F) <= d }`.
    pub fn in_sublevel(&self, d: f64, x: &[f64]) -> Result<bool> {
        if !(d > 0.0) {
            return Err(Error::InvalidInput(format!("sublevel d = {d} must be positive")));
        }
        Ok(self.distance(x)? <= d)
    }

    pub fn contains(&self, x: &[f64]) -> Result<bool> {
        Ok(self.distance(x)? == 0.0)
    }

    /// The image of the set under `x -> factor * x`.
    pub fn scaled_by(&self, factor: f64) -> Result<Self> {
        if !(factor.is_finite() && factor > 0.0) {
            return Err(Error::InvalidInput(format!("scale factor {factor} must be positive")));
        }
        let scale = |p: &Point| -> Point { p.iter().map(|v| v * factor).collect() };
        match &self.shape {
            SetShape::FinitePoints(points) => Self::points(self.dim, points.iter().map(scale).collect()),
            SetShape::BoxUnion(boxes) => Self::boxes(
                self.dim,
                boxes.iter().map(|b| AxisBox { lo: scale(&b.lo), hi: scale(&b.hi) }).collect(),
            ),
            SetShape::BallUnion(balls) => Self::balls(
                self.dim,
                balls
                    .iter()
                    .map(|b| Ball { center: scale(&b.center), radius: b.radius * factor })
                    .collect(),
            ),
        }
    }

    /// Smallest axis-aligned box containing the set.
    pub fn bounding_box(&self) -> (Point, Point) {
        let mut lo = vec![f64::INFINITY; self.dim];
        let mut hi = vec![f64::NEG_INFINITY; self.dim];
        let mut grow = |a: &[f64], b: &[f64]| {
            for i in 0..self.dim {
                lo[i] = lo[i].min(a[i]);
                hi[i] = hi[i].max(b[i]);
            }
        };
        match &self.shape {
            SetShape::FinitePoints(points) => points.iter().for_each(|p| grow(p, p)),
            SetShape::BoxUnion(boxes) => boxes.iter().for_each(|b| grow(&b.lo, &b.hi)),
            SetShape::BallUnion(balls) => balls.iter().for_each(|b| {
                let a: Point = b.center.iter().map(|c| c - b.radius).collect();
                let z: Point = b.center.iter().map(|c| c + b.radius).collect();
                grow(&a, &z)
            }),
        }
        (lo, hi)
    }
}

fn validate_point(dim: usize, p: &[f64]) -> Result<()> {
    if dim == 0 {
        return Err(Error::InvalidInput("dimension must be positive".into()));
    }
    check_dim(dim, p.len())?;
    if p.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("non-finite coordinate in {p:?}")))
    }
}

pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

fn box_distance(b: &AxisBox, x: &[f64]) -> f64 {
    x.iter()
        .zip(b.lo.iter().zip(&b.hi))
        .map(|(&xi, (&l, &h))| {
            let d = xi - xi.clamp(l, h);
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// Points this close to the sphere, relative to the radius, count as inside
/// the ball; computed feet `c + r v/|v|` land within a few ulps of the sphere.
const BALL_SLACK: f64 = 8.0 * f64::EPSILON;

fn ball_foot(b: &Ball, x: &[f64]) -> Point {
    let v: Point = x.iter().zip(&b.center).map(|(a, c)| a - c).collect();
    let len = norm(&v);
    if len <= b.radius * (1.0 + BALL_SLACK) {
        x.to_vec()
    } else {
        b.center.iter().zip(&v).map(|(c, vi)| c + b.radius * vi / len).collect()
    }
}

// Same arithmetic as `ball_foot` followed by `|x - foot|`, without allocating.
fn ball_distance(b: &Ball, x: &[f64]) -> f64 {
    let len = x
        .iter()
        .zip(&b.center)
        .map(|(a, c)| (a - c) * (a - c))
        .sum::<f64>()
        .sqrt();
    if len <= b.radius * (1.0 + BALL_SLACK) {
        return 0.0;
    }
    x.iter()
        .zip(&b.center)
        .map(|(&a, &c)| {
            let f = c + b.radius * (a - c) / len;
            (a - f) * (a - f)
        })
        .sum::<f64>()
        .sqrt()
}

fn pick_nearest(candidates: impl Iterator<Item = (Point, f64)>) -> NearestResult {
    let mut best: Option<NearestResult> = None;
    for (primitive, (foot, distance)) in candidates.enumerate() {
        let better = match &best {
            None => true,
            Some(b) => {
                distance < b.distance
                    || (distance == b.distance && lex_cmp(&foot, &b.foot) == Ordering::Less)
            }
        };
        if better {
            best = Some(NearestResult { foot, distance, primitive });
        }
    }
    best.expect("sets are nonempty")
}

fn linear_nearest(points: &[Point], x: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, p) in points.iter().enumerate() {
        let d2 = sq_dist(x, p);
        if d2 < best.1 || (d2 == best.1 && lex_cmp(p, &points[best.0]) == Ordering::Less) {
            best = (i, d2);
        }
    }
    best
}

#[derive(Clone, Debug)]
struct KdNode {
    point: usize,
    axis: usize,
    left: Option<usize>,
    right: Option<usize>,
}

/// Static k-d tree over a point cloud, used above [`LINEAR_SCAN_LIMIT`] points.
#[derive(Clone, Debug)]
struct KdTree {
    nodes: Vec<KdNode>,
    root: Option<usize>,
}

impl KdTree {
    fn build(points: &[Point]) -> Self {
        let mut idx: Vec<usize> = (0..points.len()).collect();
        let mut nodes = Vec::with_capacity(points.len());
        let root = Self::build_rec(points, &mut idx, 0, &mut nodes);
        Self { nodes, root }
    }

    fn build_rec(points: &[Point], idx: &mut [usize], depth: usize, nodes: &mut Vec<KdNode>) -> Option<usize> {
        if idx.is_empty() {
            return None;
        }
        let axis = depth % points[idx[0]].len();
        idx.sort_by(|&a, &b| points[a][axis].total_cmp(&points[b][axis]).then(a.cmp(&b)));
        let mid = idx.len() / 2;
        let id = nodes.len();
        nodes.push(KdNode { point: idx[mid], axis, left: None, right: None });
        let (lo, rest) = idx.split_at_mut(mid);
        let left = Self::build_rec(points, lo, depth + 1, nodes);
        let right = Self::build_rec(points, &mut rest[1..], depth + 1, nodes);
        nodes[id].left = left;
        nodes[id].right = right;
        Some(id)
    }

    /// Index and squared distance of the nearest point, with the same
    /// lexicographic tie-break as the linear scan.
    fn nearest(&self, points: &[Point], x: &[f64]) -> (usize, f64) {
        let mut best = (usize::MAX, f64::INFINITY);
        let mut stack: Vec<usize> = self.root.into_iter().collect();
        while let Some(id) = stack.pop() {
            let node = &self.nodes[id];
            let p = &points[node.point];
            let d2 = sq_dist(x, p);
            if d2 < best.1
                || (d2 == best.1 && lex_cmp(p, &points[best.0]) == Ordering::Less)
            {
                best = (node.point, d2);
            }
            let delta = x[node.axis] - p[node.axis];
            let (near, far) = if delta < 0.0 { (node.left, node.right) } else { (node.right, node.left) };
            // ties must still be visited, hence `<=`
            if let Some(f) = far {
                if delta * delta <= best.1 {
                    stack.push(f);
                }
            }
            if let Some(n) = near {
                stack.push(n);
            }
        }
        best
    }
}
