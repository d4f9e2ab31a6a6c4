//! First-order jets on the closed set and the operator field `A` off it.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{check_dim, Error, Result};
use crate::geomset::{norm, sq_dist, ClosedSetRep, Point, SetShape};
use crate::linalg::spectral_norm;
use crate::partition::{Member, PartitionOfUnity};
use crate::sampling::{label_tag, log_annulus, point_tag, rng_for, set_points_in_ball, uniform_in_ball};

/// Relative distance within which a query counts as a point of the set.
const ON_SET_TOL: f64 = 1e-12;

/// Value `f(a)` and operator `L(a)` at a point `a` of the set.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet {
    pub a: Point,
    pub value: Vec<f64>,
    pub operator: DMatrix<f64>,
}

pub type ValueRule = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
pub type OperatorRule = Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>;

#[derive(Clone)]
enum JetSource {
    Tabulated { jets: Vec<Jet>, index: HashMap<Vec<u64>, usize> },
    Rule { value: ValueRule, operator: OperatorRule },
}

/// The jets over a closed set, either tabulated per point of a finite set or
/// given by evaluation rules.
#[derive(Clone)]
pub struct JetField {
    set: Arc<ClosedSetRep>,
    range_dim: usize,
    source: JetSource,
}

impl fmt::Debug for JetField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.source {
            JetSource::Tabulated { jets, .. } => format!("tabulated({})", jets.len()),
            JetSource::Rule { .. } => "rule".to_string(),
        };
        f.debug_struct("JetField")
            .field("dimension", &self.set.dimension())
            .field("range_dim", &self.range_dim)
            .field("source", &kind)
            .finish()
    }
}

/// Bit key of a point with `-0.0` folded onto `0.0`.
pub(crate) fn point_key(x: &[f64]) -> Vec<u64> {
    x.iter().map(|v| (v + 0.0).to_bits()).collect()
}

fn check_jet_shape(jet: &Jet, n: usize, m: usize) -> Result<()> {
    check_dim(n, jet.a.len())?;
    check_dim(m, jet.value.len())?;
    if jet.operator.nrows() != m || jet.operator.ncols() != n {
        return Err(Error::InvalidInput(format!(
            "operator at {:?} is {}x{}, expected {m}x{n}",
            jet.a,
            jet.operator.nrows(),
            jet.operator.ncols()
        )));
    }
    let finite = jet.a.iter().chain(&jet.value).chain(jet.operator.iter()).all(|v| v.is_finite());
    if !finite {
        return Err(Error::InvalidInput(format!("non-finite entry in the jet at {:?}", jet.a)));
    }
    Ok(())
}

impl JetField {
    /// One jet per point of a finite set. Each jet is attached to the set
    /// point nearest to its base point, which must lie within `tol`.
    pub fn tabulated(set: Arc<ClosedSetRep>, range_dim: usize, jets: Vec<Jet>, tol: f64) -> Result<Self> {
        let n = set.dimension();
        let points = match set.shape() {
            SetShape::FinitePoints(points) => points.clone(),
            _ => return Err(Error::InvalidInput("tabulated jets need a finite point set".into())),
        };
        if range_dim == 0 {
            return Err(Error::InvalidInput("range dimension must be positive".into()));
        }
        let index_of: HashMap<Vec<u64>, usize> =
            points.iter().enumerate().map(|(i, p)| (point_key(p), i)).collect();
        let mut slots: Vec<Option<Jet>> = vec![None; points.len()];
        for jet in jets {
            check_jet_shape(&jet, n, range_dim)?;
            let near = set.nearest(&jet.a)?;
            if near.distance > tol {
                return Err(Error::NotInSet(jet.a));
            }
            let slot = index_of[&point_key(&near.foot)];
            if slots[slot].is_some() {
                return Err(Error::InvalidInput(format!("two jets for the set point {:?}", near.foot)));
            }
            slots[slot] = Some(Jet { a: near.foot, ..jet });
        }
        let mut table = Vec::with_capacity(points.len());
        for (slot, p) in slots.into_iter().zip(&points) {
            table.push(slot.ok_or_else(|| Error::MissingJet(p.clone()))?);
        }
        let index = table.iter().enumerate().map(|(i, j)| (point_key(&j.a), i)).collect();
        Ok(Self { set, range_dim, source: JetSource::Tabulated { jets: table, index } })
    }

    /// Jets given by rules evaluated at points of the set.
    pub fn from_rules(set: Arc<ClosedSetRep>, range_dim: usize, value: ValueRule, operator: OperatorRule) -> Self {
        Self { set, range_dim, source: JetSource::Rule { value, operator } }
    }

    pub fn set(&self) -> &Arc<ClosedSetRep> {
        &self.set
    }

    pub fn dimension(&self) -> usize {
        self.set.dimension()
    }

    pub fn range_dim(&self) -> usize {
        self.range_dim
    }

    /// The tabulated jets, if any.
    pub fn table(&self) -> Option<&[Jet]> {
        match &self.source {
            JetSource::Tabulated { jets, .. } => Some(jets),
            JetSource::Rule { .. } => None,
        }
    }

    fn check_member(&self, a: &[f64]) -> Result<()> {
        check_dim(self.dimension(), a.len())?;
        if self.set.distance_unchecked(a) <= ON_SET_TOL * (1.0 + norm(a)) {
            Ok(())
        } else {
            Err(Error::NotInSet(a.to_vec()))
        }
    }

    fn lookup(&self, index: &HashMap<Vec<u64>, usize>, a: &[f64]) -> Result<usize> {
        check_dim(self.dimension(), a.len())?;
        if let Some(&i) = index.get(&point_key(a)) {
            return Ok(i);
        }
        self.check_member(a)?;
        let near = self.set.nearest_unchecked(a);
        index.get(&point_key(&near.foot)).copied().ok_or_else(|| Error::MissingJet(a.to_vec()))
    }

    /// `f(a)`.
    pub fn value(&self, a: &[f64]) -> Result<Vec<f64>> {
        match &self.source {
            JetSource::Tabulated { jets, index } => Ok(jets[self.lookup(index, a)?].value.clone()),
            JetSource::Rule { value, .. } => {
                self.check_member(a)?;
                Ok(value(a))
            }
        }
    }

    /// `L(a)`.
    pub fn operator(&self, a: &[f64]) -> Result<DMatrix<f64>> {
        match &self.source {
            JetSource::Tabulated { jets, index } => Ok(jets[self.lookup(index, a)?].operator.clone()),
            JetSource::Rule { operator, .. } => {
                self.check_member(a)?;
                Ok(operator(a))
            }
        }
    }

    pub fn jet(&self, a: &[f64]) -> Result<Jet> {
        Ok(Jet { a: a.to_vec(), value: self.value(a)?, operator: self.operator(a)? })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum AFieldKind {
    /// `A(x) = L(x^)` with `x^` the nearest point of the set.
    NearestJet,
    /// `A(x) = sum_j phi_j(x) L(x^_j)`.
    Averaged,
    /// Exact lookup in a user table.
    External,
}

/// The operator field `A` on the complement of the set.
#[derive(Clone)]
pub struct AField {
    kind: AFieldKind,
    jets: Arc<JetField>,
    partition: Option<Arc<dyn PartitionOfUnity>>,
    table: HashMap<Vec<u64>, DMatrix<f64>>,
}

impl fmt::Debug for AField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AField").field("kind", &self.kind).field("table", &self.table.len()).finish()
    }
}

impl AField {
    pub fn nearest(jets: Arc<JetField>) -> Self {
        Self { kind: AFieldKind::NearestJet, jets, partition: None, table: HashMap::new() }
    }

    pub fn averaged(jets: Arc<JetField>, partition: Arc<dyn PartitionOfUnity>) -> Result<Self> {
        check_dim(jets.dimension(), partition.dimension())?;
        Ok(Self { kind: AFieldKind::Averaged, jets, partition: Some(partition), table: HashMap::new() })
    }

    pub fn external(jets: Arc<JetField>, entries: Vec<(Point, DMatrix<f64>)>) -> Result<Self> {
        let (n, m) = (jets.dimension(), jets.range_dim());
        let mut table = HashMap::with_capacity(entries.len());
        for (x, a) in entries {
            check_dim(n, x.len())?;
            if a.nrows() != m || a.ncols() != n {
                return Err(Error::InvalidInput(format!("operator at {x:?} must be {m}x{n}")));
            }
            table.insert(point_key(&x), a);
        }
        Ok(Self { kind: AFieldKind::External, jets, partition: None, table })
    }

    pub fn kind(&self) -> AFieldKind {
        self.kind
    }

    pub fn jets(&self) -> &Arc<JetField> {
        &self.jets
    }

    /// `A(x)` for `x` off the set.
    pub fn eval(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        check_dim(self.jets.dimension(), x.len())?;
        let near = self.jets.set().nearest_unchecked(x);
        if near.distance == 0.0 {
            return Err(Error::OnSet);
        }
        self.eval_with_foot(x, &near.foot)
    }

    /// `A(x_j)` at a member anchor, reusing the member's stored foot.
    pub fn eval_at_member(&self, member: &Member) -> Result<DMatrix<f64>> {
        self.eval_with_foot(&member.anchor, &member.foot)
    }

    fn eval_with_foot(&self, x: &[f64], foot: &[f64]) -> Result<DMatrix<f64>> {
        match self.kind {
            AFieldKind::NearestJet => self.jets.operator(foot),
            AFieldKind::Averaged => {
                let p = self.partition.as_ref().expect("averaged field owns a partition");
                let (n, m) = (self.jets.dimension(), self.jets.range_dim());
                let mut acc = DMatrix::zeros(m, n);
                for w in p.weights_at(x)? {
                    acc += self.jets.operator(&w.member.foot)? * w.weight;
                }
                Ok(acc)
            }
            AFieldKind::External => {
                self.table.get(&point_key(x)).cloned().ok_or_else(|| Error::LookupMiss(x.to_vec()))
            }
        }
    }
}

/// Monte-Carlo estimates of the three contracts of an operator field at a
/// point `a` of the set.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContractReport {
    pub a: Point,
    /// `(shell radius, sup |A(x) - L(a)| dist(x, F) / |x - a|)`.
    pub nt_residuals: Vec<(f64, f64)>,
    /// `(shell radius, sup |A(x) - L(a)|)`.
    pub c_residuals: Vec<(f64, f64)>,
    /// Radius `r` of the boundedness check, the largest shell radius.
    pub b_radius: f64,
    /// `sup |A|` over sampled points of `B(a, r)` off the set.
    pub b_bound: f64,
    /// `sup |L|` over sampled points of `B(a, 12 r)` in the set.
    pub l_bound_12r: f64,
    /// `sup |L|` over sampled points of `B(a, 72 r)` in the set.
    pub l_bound_72r: f64,
}

pub(crate) fn check_in_set(set: &ClosedSetRep, a: &[f64]) -> Result<()> {
    check_dim(set.dimension(), a.len())?;
    if set.distance_unchecked(a) <= ON_SET_TOL * (1.0 + norm(a)) {
        Ok(())
    } else {
        Err(Error::NotInSet(a.to_vec()))
    }
}

fn shells_valid(shells: &[f64]) -> bool {
    !shells.is_empty() && shells.iter().all(|r| r.is_finite() && *r > 0.0) && shells.windows(2).all(|w| w[0] > w[1])
}

/// Samples each shell `dist(x, a) in [rho/2, rho]` and the balls of the
/// boundedness contract.
pub fn check_contracts(
    field: &AField,
    jets: &JetField,
    a: &[f64],
    shells: &[f64],
    samples_per_shell: usize,
    seed: u64,
) -> Result<ContractReport> {
    let set = jets.set();
    check_in_set(set, a)?;
    if !shells_valid(shells) {
        return Err(Error::InvalidInput("shells must be positive and strictly decreasing".into()));
    }
    let la = jets.operator(a)?;
    let op = label_tag("contracts");
    let mut nt_residuals = Vec::with_capacity(shells.len());
    let mut c_residuals = Vec::with_capacity(shells.len());
    for (k, &rho) in shells.iter().enumerate() {
        let mut rng = rng_for(seed, &[op, point_tag(a), k as u64]);
        let xs: Vec<Point> = (0..samples_per_shell)
            .map(|_| log_annulus(&mut rng, a, rho / 2.0, rho))
            .filter(|x| set.distance_unchecked(x) > 0.0)
            .collect();
        let (nt, c) = xs
            .par_iter()
            .map(|x| -> Result<(f64, f64)> {
                let gap = spectral_norm(&(field.eval(x)? - &la));
                let d = set.distance_unchecked(x);
                Ok((gap * d / sq_dist(x, a).sqrt(), gap))
            })
            .try_reduce(|| (0.0, 0.0), |p, q| Ok((p.0.max(q.0), p.1.max(q.1))))?;
        nt_residuals.push((rho, nt));
        c_residuals.push((rho, c));
    }
    let r = shells[0];
    let mut rng = rng_for(seed, &[op, point_tag(a), label_tag("bounded")]);
    let ball: Vec<Point> = (0..samples_per_shell)
        .map(|_| uniform_in_ball(&mut rng, a, r))
        .filter(|x| set.distance_unchecked(x) > 0.0)
        .collect();
    let b_bound = ball
        .par_iter()
        .map(|x| field.eval(x).map(|m| spectral_norm(&m)))
        .try_reduce(|| 0.0, |p, q| Ok(p.max(q)))?;
    let l_sup = |radius: f64, tag: &str| -> Result<f64> {
        let mut rng = rng_for(seed, &[op, point_tag(a), label_tag(tag)]);
        let mut pts = set_points_in_ball(set, a, radius, samples_per_shell, &mut rng);
        // feet of the boundedness draws lie within 2r of a
        pts.extend(ball.iter().map(|x| set.nearest_unchecked(x).foot));
        pts.par_iter().map(|z| jets.operator(z).map(|m| spectral_norm(&m))).try_reduce(|| 0.0, |p, q| Ok(p.max(q)))
    };
    Ok(ContractReport {
        a: a.to_vec(),
        nt_residuals,
        c_residuals,
        b_radius: r,
        b_bound,
        l_bound_12r: l_sup(12.0 * r, "l12")?,
        l_bound_72r: l_sup(72.0 * r, "l72")?,
    })
}

/// Norm of `A(x) - L(a)` for convenience in diagnostics.
pub fn field_gap(field: &AField, jets: &JetField, x: &[f64], a: &[f64]) -> Result<f64> {
    Ok(spectral_norm(&(field.eval(x)? - jets.operator(a)?)))
}
