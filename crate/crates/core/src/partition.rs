//! Smooth partitions of unity on the complement of a closed set.
//!
//! Members are dyadic cubes whose center lies at a distance from the set
//! comparable to the cube's diameter. Each selected cube carries a bump that
//! is 1 on the cube and vanishes outside a dilated copy; weights are the bumps
//! divided by their local sum. Nothing is enumerated ahead of time: cubes are
//! materialized on demand around each query point.

use std::sync::Arc;

use dashmap::DashMap;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::Tolerances;
use crate::error::{check_dim, Error, Result};
use crate::geomset::{norm, sq_dist, ClosedSetRep, Point};
use crate::smoothbump::{CubeBump, TransitionProfile};

/// Upper bound on the number of members kept in a partition's memo.
/// Largest ratio of coordinate size to distance the cube indices can carry:
/// the finest reachable cube side is about `d / (12 sqrt n)` and cube
/// indices must stay below 2^52.
const RESOLUTION_LIMIT: f64 = 1e14;
const MEMO_LIMIT: usize = 200_000;

/// Constants of the cube selection rule.
///
/// A cube of side `s` at center `c` is selected when
/// `window_lo * sqrt(n) * s <= dist(c, F) <= window_hi * sqrt(n) * s`.
/// Its bump is 1 on the cube and 0 outside the cube scaled by `dilation`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionConfig {
    pub window_lo: f64,
    pub window_hi: f64,
    pub dilation: f64,
    pub profile: TransitionProfile,
}

impl Default for PartitionConfig {
    fn default() -> Self {
        Self { window_lo: 2.0, window_hi: 5.5, dilation: 1.75, profile: TransitionProfile::ExpSmooth }
    }
}

impl PartitionConfig {
    pub fn with_profile(mut self, profile: TransitionProfile) -> Self {
        self.profile = profile;
        self
    }

    /// Checks the three conditions the construction relies on: every point is
    /// in the core of some selected cube, supports stay inside
    /// `B(x_j, dist(x_j, F)/2)`, and the dilation actually adds a collar.
    pub fn validate(&self) -> Result<()> {
        let finite = self.window_lo.is_finite() && self.window_hi.is_finite() && self.dilation.is_finite();
        if !finite || self.dilation <= 1.0 {
            return Err(Error::InvalidInput(format!("dilation {} must exceed 1", self.dilation)));
        }
        if self.window_lo <= self.dilation {
            return Err(Error::InvalidInput(format!(
                "window_lo {} must exceed the dilation {}",
                self.window_lo, self.dilation
            )));
        }
        if self.window_hi - 0.5 < 2.0 * (self.window_lo + 0.5) {
            return Err(Error::InvalidInput(format!(
                "window [{}, {}] is too narrow to cover every dyadic level",
                self.window_lo, self.window_hi
            )));
        }
        Ok(())
    }
}

/// Identifier of a member: the ladder index (0 outside a combined family),
/// the dyadic level and the integer cube coordinates. Ids are ordered
/// lexicographically and every sum over members runs in that order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MemberId {
    pub scale: u32,
    pub level: i32,
    pub coords: Vec<i64>,
}

/// One bump of the family, anchored at the center of its cube.
#[derive(Clone, Debug)]
pub struct Member {
    pub id: MemberId,
    /// Anchor `x_j`.
    pub anchor: Point,
    /// `dist(x_j, F)`.
    pub anchor_distance: f64,
    /// Radius `r_j` of the partition's radius function at the anchor.
    pub radius: f64,
    /// Nearest point of `F` to the anchor.
    pub foot: Point,
    bump: CubeBump,
}

impl Member {
    /// Half-width of the member's support cube, in original coordinates.
    pub fn support_halfwidth(&self, scale: f64) -> f64 {
        self.bump.outer_halfwidth() * scale
    }
}

/// A normalized weight and its gradient at a query point.
#[derive(Clone, Debug)]
pub struct Weight {
    pub member: Arc<Member>,
    pub weight: f64,
    pub gradient: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ActiveEntry {
    pub id: MemberId,
    pub anchor: Point,
    pub anchor_distance: f64,
    pub radius: f64,
}

/// Members whose ball `B(x_j, 10 r_j)` meets `B(x, 10 r(x))`, sorted by id.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ActiveSet {
    pub x: Point,
    pub members: Vec<ActiveEntry>,
}

impl ActiveSet {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, id: &MemberId) -> bool {
        self.members.binary_search_by(|e| e.id.cmp(id)).is_ok()
    }
}

/// Common interface of the base partition, the capped partitions and the
/// combined family.
pub trait PartitionOfUnity: Send + Sync {
    fn dimension(&self) -> usize;
    /// The closed set whose complement is partitioned.
    fn set(&self) -> &ClosedSetRep;
    /// The radius function `r` the family is adapted to.
    fn radius(&self, x: &[f64]) -> Result<f64>;
    /// Nonzero weights at `x`, sorted by member id.
    fn weights_at(&self, x: &[f64]) -> Result<Vec<Weight>>;
    fn active_set(&self, x: &[f64]) -> Result<ActiveSet>;
}

/// Lazily materialized partition adapted to `r(x) = min(cap, dist(x, F))/20`.
///
/// A partition for cap `s` is built from the cap-1 construction on `F/s`
/// evaluated at `x/s`, which makes the scaling identity exact.
pub struct Partition {
    original: Arc<ClosedSetRep>,
    internal: Arc<ClosedSetRep>,
    config: PartitionConfig,
    scale: f64,
    inv_scale: f64,
    cap: f64,
    tag: u32,
    sqrt_n: f64,
    memo: DashMap<(i32, Vec<i64>), Arc<Member>>,
}

impl std::fmt::Debug for Partition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Partition")
            .field("config", &self.config)
            .field("scale", &self.scale)
            .field("cap", &self.cap)
            .field("tag", &self.tag)
            .finish()
    }
}

/// Partition adapted to the Whitney radius `dist(x, F)/20`.
pub fn build_partition(set: Arc<ClosedSetRep>, config: PartitionConfig) -> Result<Partition> {
    config.validate()?;
    Ok(Partition::new(set.clone(), set, config, 1.0, f64::INFINITY, 0))
}

/// Partition adapted to the capped radius `min(s, dist(x, F))/20`.
pub fn build_capped(set: Arc<ClosedSetRep>, s: f64, config: PartitionConfig) -> Result<Partition> {
    build_capped_tagged(set, s, config, 0)
}

fn build_capped_tagged(set: Arc<ClosedSetRep>, s: f64, config: PartitionConfig, tag: u32) -> Result<Partition> {
    config.validate()?;
    if !(s.is_finite() && s >= 1.0) {
        return Err(Error::InvalidInput(format!("cap {s} must be at least 1")));
    }
    let internal = if s == 1.0 { set.clone() } else { Arc::new(set.scaled_by(1.0 / s)?) };
    Ok(Partition::new(set, internal, config, s, 1.0, tag))
}

fn dyadic_side(level: i32) -> f64 {
    2f64.powi(-level)
}

/// Calls `visit` on every integer vector in the box `lo..=hi`.
fn for_each_coords(lo: &[i64], hi: &[i64], mut visit: impl FnMut(&[i64])) {
    if lo.iter().zip(hi).any(|(l, h)| l > h) {
        return;
    }
    let mut cur = lo.to_vec();
    loop {
        visit(&cur);
        let mut axis = 0;
        loop {
            if axis == cur.len() {
                return;
            }
            if cur[axis] < hi[axis] {
                cur[axis] += 1;
                break;
            }
            cur[axis] = lo[axis];
            axis += 1;
        }
    }
}

impl Partition {
    fn new(
        original: Arc<ClosedSetRep>,
        internal: Arc<ClosedSetRep>,
        config: PartitionConfig,
        scale: f64,
        cap: f64,
        tag: u32,
    ) -> Self {
        let sqrt_n = (original.dimension() as f64).sqrt();
        Self {
            original,
            internal,
            config,
            scale,
            inv_scale: 1.0 / scale,
            cap,
            tag,
            sqrt_n,
            memo: DashMap::new(),
        }
    }

    pub fn config(&self) -> &PartitionConfig {
        &self.config
    }

    /// The cap `s` of a capped partition, `None` for the Whitney partition.
    pub fn cap(&self) -> Option<f64> {
        self.cap.is_finite().then_some(self.scale)
    }

    /// Number of materialized members currently memoized.
    pub fn materialized(&self) -> usize {
        self.memo.len()
    }

    fn to_internal(&self, x: &[f64]) -> Point {
        if self.scale == 1.0 {
            x.to_vec()
        } else {
            x.iter().map(|v| v * self.inv_scale).collect()
        }
    }

    fn to_original(&self, y: &[f64]) -> Point {
        if self.scale == 1.0 {
            y.to_vec()
        } else {
            y.iter().map(|v| v * self.scale).collect()
        }
    }

    fn center(&self, level: i32, coords: &[i64]) -> Point {
        let side = dyadic_side(level);
        coords.iter().map(|&c| (c as f64 + 0.5) * side).collect()
    }

    fn selected(&self, capped_dist: f64, side: f64) -> bool {
        let unit = self.sqrt_n * side;
        self.config.window_lo * unit <= capped_dist && capped_dist <= self.config.window_hi * unit
    }

    /// Internal distance of a query point, rejecting points of the set and
    /// points whose nearby cube centers would not be exactly representable.
    fn internal_distance(&self, xi: &[f64]) -> Result<f64> {
        let d = self.internal.distance_unchecked(xi);
        if d == 0.0 {
            return Err(Error::OnSet);
        }
        let extent = xi.iter().fold(0.0f64, |m, v| m.max(v.abs())) + d;
        if extent / d.min(self.cap) > RESOLUTION_LIMIT {
            return Err(Error::BelowResolution(self.to_original(xi)));
        }
        Ok(d)
    }

    fn member(&self, level: i32, coords: &[i64], center: Point, dist: f64) -> Arc<Member> {
        let key = (level, coords.to_vec());
        if let Some(m) = self.memo.get(&key) {
            return m.clone();
        }
        let side = dyadic_side(level);
        let anchor = self.to_original(&center);
        let foot = self.original.nearest_unchecked(&anchor).foot;
        let member = Arc::new(Member {
            id: MemberId { scale: self.tag, level, coords: coords.to_vec() },
            anchor,
            anchor_distance: self.scale * dist,
            radius: self.scale * dist.min(self.cap) / 20.0,
            foot,
            bump: CubeBump::new(center, side / 2.0, (self.config.dilation - 1.0) * side / 2.0),
        });
        if self.memo.len() < MEMO_LIMIT {
            self.memo.insert(key, member.clone());
        }
        member
    }

    /// Raw bumps that are nonzero at the internal point `xi`, unsorted.
    fn raw_bumps(&self, xi: &[f64], capped: f64) -> Vec<(Arc<Member>, f64, Vec<f64>)> {
        let n = xi.len();
        let half_dil = self.config.dilation / 2.0;
        // levels whose selected cubes can reach xi
        let side_max = capped / ((self.config.window_lo - half_dil) * self.sqrt_n);
        let side_min = capped / ((self.config.window_hi + half_dil) * self.sqrt_n);
        let k_lo = (-side_max.log2()).ceil() as i32 - 1;
        let k_hi = (-side_min.log2()).floor() as i32 + 1;
        let mut out = Vec::new();
        let mut grad = vec![0.0; n];
        for level in k_lo..=k_hi {
            let side = dyadic_side(level);
            let reach = half_dil * side;
            let lo: Vec<i64> = xi.iter().map(|&v| (v / side - 0.5 - half_dil).floor() as i64).collect();
            let hi: Vec<i64> = xi.iter().map(|&v| (v / side - 0.5 + half_dil).ceil() as i64).collect();
            for_each_coords(&lo, &hi, |coords| {
                let center = self.center(level, coords);
                if center.iter().zip(xi).any(|(c, v)| (c - v).abs() >= reach) {
                    return;
                }
                let dist = self.internal.distance_unchecked(&center);
                if !self.selected(dist.min(self.cap), side) {
                    return;
                }
                let member = self.member(level, coords, center, dist);
                let psi = member.bump.eval_into(self.config.profile, xi, &mut grad);
                if psi > 0.0 {
                    out.push((member, psi, grad.clone()));
                }
            });
        }
        out
    }
}

impl PartitionOfUnity for Partition {
    fn dimension(&self) -> usize {
        self.original.dimension()
    }

    fn set(&self) -> &ClosedSetRep {
        &self.original
    }

    fn radius(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dimension(), x.len())?;
        let xi = self.to_internal(x);
        Ok(self.scale * self.internal.distance_unchecked(&xi).min(self.cap) / 20.0)
    }

    fn weights_at(&self, x: &[f64]) -> Result<Vec<Weight>> {
        check_dim(self.dimension(), x.len())?;
        let xi = self.to_internal(x);
        let capped = self.internal_distance(&xi)?.min(self.cap);
        let mut raw = self.raw_bumps(&xi, capped);
        raw.sort_by(|a, b| a.0.id.cmp(&b.0.id));
        let n = x.len();
        let total: f64 = raw.iter().map(|r| r.1).sum();
        if !(total >= 0.5) {
            return Err(Error::PropertyViolation(format!("bump sum {total} at {x:?}: point not covered")));
        }
        let mut gsum = vec![0.0; n];
        for (_, _, g) in &raw {
            gsum.iter_mut().zip(g).for_each(|(s, v)| *s += v);
        }
        Ok(raw
            .into_iter()
            .map(|(member, psi, g)| {
                let weight = psi / total;
                let gradient =
                    g.iter().zip(&gsum).map(|(gi, si)| (gi - weight * si) / total * self.inv_scale).collect();
                Weight { member, weight, gradient }
            })
            .collect())
    }

    fn active_set(&self, x: &[f64]) -> Result<ActiveSet> {
        check_dim(self.dimension(), x.len())?;
        let xi = self.to_internal(x);
        let capped = self.internal_distance(&xi)?.min(self.cap);
        let ball = capped / 2.0;
        let (wl, wh) = (self.config.window_lo, self.config.window_hi);
        let k_lo = (-(3.0 * capped / (wl * self.sqrt_n)).log2()).floor() as i32 - 1;
        let k_hi = (-(capped / (3.0 * wh * self.sqrt_n)).log2()).ceil() as i32 + 1;
        let slack = 1e-9 * capped;
        let top = dyadic_side(k_lo);
        let lo: Vec<i64> = xi.iter().map(|&v| ((v - 2.0 * capped) / top).floor() as i64).collect();
        let hi: Vec<i64> = xi.iter().map(|&v| ((v + 2.0 * capped) / top).floor() as i64).collect();
        let mut stack: Vec<(i32, Vec<i64>)> = Vec::new();
        for_each_coords(&lo, &hi, |c| stack.push((k_lo, c.to_vec())));
        let n = x.len();
        let mut members = Vec::new();
        while let Some((level, coords)) = stack.pop() {
            let side = dyadic_side(level);
            let center = self.center(level, &coords);
            let dist = self.internal.distance_unchecked(&center);
            let dc = dist.min(self.cap);
            let gap = sq_dist(&center, &xi).sqrt();
            if self.selected(dc, side) && gap < ball + dc / 2.0 {
                members.push(ActiveEntry {
                    id: MemberId { scale: self.tag, level, coords: coords.clone() },
                    anchor: self.to_original(&center),
                    anchor_distance: self.scale * dist,
                    radius: self.scale * dc / 20.0,
                });
            }
            if level >= k_hi {
                continue;
            }
            // every descendant center lies within rho of this center
            let rho = self.sqrt_n * side / 2.0;
            let too_far_from_set = dc - rho > wh * self.sqrt_n * side / 2.0 + slack;
            let too_far_from_x = gap - rho >= ball + (dc + rho) / 2.0 + slack;
            let too_close_to_set = dc + rho + slack <= capped / 3.0;
            if too_far_from_set || too_far_from_x || too_close_to_set {
                continue;
            }
            for bits in 0..(1u32 << n) {
                let child: Vec<i64> =
                    coords.iter().enumerate().map(|(i, &c)| 2 * c + ((bits >> i) & 1) as i64).collect();
                stack.push((level + 1, child));
            }
        }
        members.sort_by(|a, b| a.id.cmp(&b.id));
        Ok(ActiveSet { x: x.to_vec(), members })
    }
}

/// Gate values of one rung of the scale ladder at a point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GateValue {
    pub scale: f64,
    pub u: f64,
    pub v: f64,
    pub grad_u: Vec<f64>,
    pub grad_v: Vec<f64>,
}

/// Description of a truncated scale ladder `s = 6^m`, `m = 1..=m_max`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CombinerState {
    pub scales: Vec<f64>,
    /// Queries must satisfy `dist(x, F) < validity_limit`.
    pub validity_limit: f64,
}

/// The family obtained by gluing capped partitions at scales `6^m`.
pub struct CombinedPartition {
    set: Arc<ClosedSetRep>,
    ladder: Vec<Partition>,
    state: CombinerState,
}

/// Builds capped partitions at `s = 6, 36, ..., 6^m_max` and glues them with
/// the gates `v_s = u_s (1 - u_{s/6})`.
pub fn combine_capped(
    set: Arc<ClosedSetRep>,
    m_max: u32,
    config: PartitionConfig,
) -> Result<(CombinedPartition, CombinerState)> {
    if m_max == 0 {
        return Err(Error::InvalidInput("the scale ladder needs at least one rung".into()));
    }
    let scales: Vec<f64> = (1..=m_max).map(|m| 6f64.powi(m as i32)).collect();
    let ladder = scales
        .iter()
        .zip(1..)
        .map(|(&s, m)| build_capped_tagged(set.clone(), s, config, m))
        .collect::<Result<Vec<_>>>()?;
    let state = CombinerState { validity_limit: scales[scales.len() - 1] / 36.0, scales };
    Ok((CombinedPartition { set, ladder, state: state.clone() }, state))
}

fn in_ladder_band(scale: f64, anchor_distance: f64) -> bool {
    let upper = anchor_distance <= scale / 6.0;
    if scale > 6.0 {
        upper && anchor_distance > scale / 324.0
    } else {
        upper
    }
}

impl CombinedPartition {
    pub fn state(&self) -> &CombinerState {
        &self.state
    }

    /// The capped partition at rung `m` (1-based).
    pub fn rung(&self, m: usize) -> Option<&Partition> {
        m.checked_sub(1).and_then(|i| self.ladder.get(i))
    }

    fn checked_distance(&self, x: &[f64]) -> Result<f64> {
        let d = self.set.distance(x)?;
        if d == 0.0 {
            return Err(Error::OnSet);
        }
        if d >= self.state.validity_limit {
            return Err(Error::OutsideValidity { distance: d, limit: self.state.validity_limit });
        }
        Ok(d)
    }

    /// Per-rung weights plus the gates computed from them.
    fn rungs_at(&self, x: &[f64], d: f64) -> Result<(Vec<Vec<Weight>>, Vec<GateValue>)> {
        let n = x.len();
        let mut weights = Vec::with_capacity(self.ladder.len());
        let mut gates: Vec<GateValue> = Vec::with_capacity(self.ladder.len());
        for (p, &s) in self.ladder.iter().zip(&self.state.scales) {
            let w = if d < s / 2.0 { p.weights_at(x)? } else { Vec::new() };
            let mut u = 0.0;
            let mut grad_u = vec![0.0; n];
            for e in w.iter().filter(|e| e.member.anchor_distance <= s / 18.0) {
                u += e.weight;
                grad_u.iter_mut().zip(&e.gradient).for_each(|(g, v)| *g += v);
            }
            let (u_prev, grad_prev) = match gates.last() {
                Some(g) => (g.u, g.grad_u.clone()),
                None => (0.0, vec![0.0; n]),
            };
            // u_prev may exceed 1 by a rounding error
            let rest = (1.0 - u_prev).max(0.0);
            let v = u * rest;
            let grad_v = grad_u.iter().zip(&grad_prev).map(|(gu, gp)| gu * rest - u * gp).collect();
            gates.push(GateValue { scale: s, u, v, grad_u, grad_v });
            weights.push(w);
        }
        Ok((weights, gates))
    }

    /// The gates `u_s`, `v_s` at `x` for every rung.
    pub fn gates_at(&self, x: &[f64]) -> Result<Vec<GateValue>> {
        let d = self.checked_distance(x)?;
        Ok(self.rungs_at(x, d)?.1)
    }
}

impl PartitionOfUnity for CombinedPartition {
    fn dimension(&self) -> usize {
        self.set.dimension()
    }

    fn set(&self) -> &ClosedSetRep {
        &self.set
    }

    fn radius(&self, x: &[f64]) -> Result<f64> {
        Ok(self.checked_distance(x)? / 20.0)
    }

    fn weights_at(&self, x: &[f64]) -> Result<Vec<Weight>> {
        let d = self.checked_distance(x)?;
        let (weights, gates) = self.rungs_at(x, d)?;
        let mut out = Vec::new();
        for (w, gate) in weights.into_iter().zip(&gates) {
            if gate.v == 0.0 && gate.grad_v.iter().all(|&g| g == 0.0) {
                continue;
            }
            for e in w.into_iter().filter(|e| in_ladder_band(gate.scale, e.member.anchor_distance)) {
                let weight = gate.v * e.weight;
                let gradient: Vec<f64> =
                    gate.grad_v.iter().zip(&e.gradient).map(|(gv, g)| gv * e.weight + gate.v * g).collect();
                if weight != 0.0 || gradient.iter().any(|&g| g != 0.0) {
                    out.push(Weight { member: e.member, weight, gradient });
                }
            }
        }
        Ok(out)
    }

    fn active_set(&self, x: &[f64]) -> Result<ActiveSet> {
        let d = self.checked_distance(x)?;
        let mut members = Vec::new();
        for (p, &s) in self.ladder.iter().zip(&self.state.scales) {
            // an anchor in the band sits at distance in (d/3, s/6], impossible once d >= s/2
            if d >= s / 2.0 {
                continue;
            }
            let active = p.active_set(x)?;
            members.extend(active.members.into_iter().filter(|e| in_ladder_band(s, e.anchor_distance)));
        }
        Ok(ActiveSet { x: x.to_vec(), members })
    }
}

/// Measured constants and property checks of a partition over a sample.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PartitionReport {
    pub samples: usize,
    /// Largest active set.
    pub c1_measured: usize,
    /// Largest `r(x) |phi_j'(x)|`.
    pub c2_measured: f64,
    pub max_sum_error: f64,
    /// Largest `r(x) |sum phi_j'(x)|`.
    pub max_grad_sum: f64,
    pub min_weight: f64,
    /// Range of `r(x)/r_j` over active pairs.
    pub p2_ratio_range: (f64, f64),
    /// Largest `|x - x_j| / (10 r_j)` over members with `phi_j(x) > 0`.
    pub support_ratio_max: f64,
    /// Members with a nonzero weight that are missing from the active set.
    pub weights_outside_active: usize,
    pub violations: Vec<String>,
}

impl PartitionReport {
    pub fn certified(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Clone, Copy)]
struct SampleStats {
    card: usize,
    c2: f64,
    sum_err: f64,
    grad_sum: f64,
    min_weight: f64,
    ratio_lo: f64,
    ratio_hi: f64,
    support: f64,
    outside: usize,
}

impl SampleStats {
    fn identity() -> Self {
        Self {
            card: 0,
            c2: 0.0,
            sum_err: 0.0,
            grad_sum: 0.0,
            min_weight: f64::INFINITY,
            ratio_lo: f64::INFINITY,
            ratio_hi: f64::NEG_INFINITY,
            support: 0.0,
            outside: 0,
        }
    }

    fn merge(self, o: Self) -> Self {
        Self {
            card: self.card.max(o.card),
            c2: self.c2.max(o.c2),
            sum_err: self.sum_err.max(o.sum_err),
            grad_sum: self.grad_sum.max(o.grad_sum),
            min_weight: self.min_weight.min(o.min_weight),
            ratio_lo: self.ratio_lo.min(o.ratio_lo),
            ratio_hi: self.ratio_hi.max(o.ratio_hi),
            support: self.support.max(o.support),
            outside: self.outside + o.outside,
        }
    }
}

fn sample_stats<P: PartitionOfUnity + ?Sized>(p: &P, x: &[f64]) -> Result<SampleStats> {
    let r = p.radius(x)?;
    let weights = p.weights_at(x)?;
    let active = p.active_set(x)?;
    let n = x.len();
    let mut s = SampleStats::identity();
    s.card = active.len();
    let mut total = 0.0;
    let mut gsum = vec![0.0; n];
    for w in &weights {
        total += w.weight;
        gsum.iter_mut().zip(&w.gradient).for_each(|(a, b)| *a += b);
        s.c2 = s.c2.max(r * norm(&w.gradient));
        s.min_weight = s.min_weight.min(w.weight);
        if w.weight > 0.0 {
            let reach = sq_dist(x, &w.member.anchor).sqrt() / (10.0 * w.member.radius);
            s.support = s.support.max(reach);
        }
        if !active.contains(&w.member.id) {
            s.outside += 1;
        }
    }
    s.sum_err = (total - 1.0).abs();
    s.grad_sum = r * norm(&gsum);
    for e in &active.members {
        let ratio = r / e.radius;
        s.ratio_lo = s.ratio_lo.min(ratio);
        s.ratio_hi = s.ratio_hi.max(ratio);
    }
    Ok(s)
}

/// Evaluates weights and active sets at every sample and records the
/// measured constants together with any tolerance violations.
pub fn verify_partition<P: PartitionOfUnity + ?Sized>(
    p: &P,
    samples: &[Point],
    tol: &Tolerances,
) -> Result<PartitionReport> {
    let stats = samples
        .par_iter()
        .map(|x| sample_stats(p, x))
        .try_reduce(SampleStats::identity, |a, b| Ok(a.merge(b)))?;
    let mut violations = Vec::new();
    if stats.sum_err > tol.partition_sum {
        violations.push(format!("|sum phi - 1| reached {:e}", stats.sum_err));
    }
    if stats.grad_sum > tol.partition_grad_sum {
        violations.push(format!("r |sum phi'| reached {:e}", stats.grad_sum));
    }
    if stats.min_weight < 0.0 {
        violations.push(format!("negative weight {:e}", stats.min_weight));
    }
    if !samples.is_empty() && (stats.ratio_lo < 1.0 / 3.0 || stats.ratio_hi > 3.0) {
        violations.push(format!("radius ratio range [{}, {}] leaves [1/3, 3]", stats.ratio_lo, stats.ratio_hi));
    }
    if stats.support >= 1.0 {
        violations.push(format!("support reaches {} of the member ball", stats.support));
    }
    if stats.outside > 0 {
        violations.push(format!("{} weights outside the active set", stats.outside));
    }
    let (lo, hi) = if samples.is_empty() { (1.0, 1.0) } else { (stats.ratio_lo, stats.ratio_hi) };
    Ok(PartitionReport {
        samples: samples.len(),
        c1_measured: stats.card,
        c2_measured: stats.c2,
        max_sum_error: stats.sum_err,
        max_grad_sum: stats.grad_sum,
        min_weight: if samples.is_empty() { 0.0 } else { stats.min_weight },
        p2_ratio_range: (lo, hi),
        support_ratio_max: stats.support,
        weights_outside_active: stats.outside,
        violations,
    })
}
