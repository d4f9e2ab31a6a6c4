//! The extension `f^` of a jet field and its Jacobian off the set.

use std::sync::Arc;

use dashmap::DashMap;
use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{check_dim, Error, Result};
use crate::geomset::Point;
use crate::jetfield::{AField, AFieldKind, JetField};
use crate::linalg::{apply, sub, vec_norm};
use crate::partition::{MemberId, PartitionOfUnity};

const A_CACHE_LIMIT: usize = 200_000;

/// Rank-one operator `u -> (psi . u) y`.
pub fn tensor(y: &[f64], psi: &[f64]) -> DMatrix<f64> {
    DMatrix::from_fn(y.len(), psi.len(), |i, k| y[i] * psi[k])
}

/// The assembled extension.
///
/// On the set it returns the prescribed values; off the set it returns
/// `sum_j phi_j(x) [f(x^_j) + A(x_j)(x - x^_j)]`, summed in member id order.
#[derive(Clone)]
pub struct Extension {
    jets: Arc<JetField>,
    partition: Arc<dyn PartitionOfUnity>,
    afield: Arc<AField>,
    a_cache: Arc<DashMap<MemberId, DMatrix<f64>>>,
}

impl std::fmt::Debug for Extension {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Extension").field("jets", &self.jets).field("afield", &self.afield).finish()
    }
}

/// One grid sample of the extension.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldSample {
    pub x: Point,
    pub value: Vec<f64>,
    pub jacobian: Option<DMatrix<f64>>,
    pub on_set: bool,
}

impl Extension {
    pub fn new(jets: Arc<JetField>, partition: Arc<dyn PartitionOfUnity>, afield: Arc<AField>) -> Result<Self> {
        check_dim(jets.dimension(), partition.dimension())?;
        check_dim(jets.dimension(), afield.jets().dimension())?;
        check_dim(jets.range_dim(), afield.jets().range_dim())?;
        Ok(Self { jets, partition, afield, a_cache: Arc::new(DashMap::new()) })
    }

    pub fn jets(&self) -> &Arc<JetField> {
        &self.jets
    }

    pub fn partition(&self) -> &Arc<dyn PartitionOfUnity> {
        &self.partition
    }

    pub fn afield(&self) -> &Arc<AField> {
        &self.afield
    }

    pub fn dimension(&self) -> usize {
        self.jets.dimension()
    }

    pub fn range_dim(&self) -> usize {
        self.jets.range_dim()
    }

    fn a_at(&self, member: &crate::partition::Member) -> Result<DMatrix<f64>> {
        if self.afield.kind() == AFieldKind::NearestJet {
            return self.afield.eval_at_member(member);
        }
        if let Some(a) = self.a_cache.get(&member.id) {
            return Ok(a.clone());
        }
        let a = self.afield.eval_at_member(member)?;
        if self.a_cache.len() < A_CACHE_LIMIT {
            self.a_cache.insert(member.id.clone(), a.clone());
        }
        Ok(a)
    }

    fn assemble(&self, x: &[f64], with_jacobian: bool) -> Result<(Vec<f64>, Option<DMatrix<f64>>)> {
        let (n, m) = (self.dimension(), self.range_dim());
        let weights = self.partition.weights_at(x)?;
        let mut value = vec![0.0; m];
        let mut jac = with_jacobian.then(|| DMatrix::zeros(m, n));
        for w in &weights {
            let foot = &w.member.foot;
            let a = self.a_at(&w.member)?;
            let mut term = self.jets.value(foot)?;
            let correction = apply(&a, &sub(x, foot));
            term.iter_mut().zip(&correction).for_each(|(t, c)| *t += c);
            value.iter_mut().zip(&term).for_each(|(v, t)| *v += w.weight * t);
            if let Some(j) = jac.as_mut() {
                *j += &a * w.weight;
                *j += tensor(&term, &w.gradient);
            }
        }
        Ok((value, jac))
    }

    /// Floating-point error bound of [`Extension::jacobian`] at `x`:
    /// `gamma (sum_j |T_j| |phi_j'| + sum_j phi_j |A_j|)` with `T_j` the affine
    /// terms and `gamma = 2 (k + n + 8) eps` for `k` summands. The first sum
    /// cancels exactly in real arithmetic (`sum phi_j' = 0`), so its rounding
    /// grows like `1 / r(x)` near the set.
    pub fn jacobian_rounding(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dimension(), x.len())?;
        let weights = self.partition.weights_at(x)?;
        let mut scale = 0.0;
        for w in &weights {
            let foot = &w.member.foot;
            let a = self.a_at(&w.member)?;
            let mut term = self.jets.value(foot)?;
            let correction = apply(&a, &sub(x, foot));
            term.iter_mut().zip(&correction).for_each(|(t, c)| *t += c);
            scale += vec_norm(&term) * vec_norm(&w.gradient) + w.weight * a.norm();
        }
        let gamma = 2.0 * (weights.len() + x.len() + 8) as f64 * f64::EPSILON;
        Ok(gamma * scale)
    }

    /// `f^(x)`: the prescribed value on the set, the partition sum off it.
    pub fn value(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dimension(), x.len())?;
        if self.jets.set().distance_unchecked(x) == 0.0 {
            return self.jets.value(x);
        }
        Ok(self.assemble(x, false)?.0)
    }

    /// Exact Jacobian of `f^` at a point off the set.
    pub fn jacobian(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        Ok(self.value_and_jacobian(x)?.1)
    }

    pub fn value_and_jacobian(&self, x: &[f64]) -> Result<(Vec<f64>, DMatrix<f64>)> {
        check_dim(self.dimension(), x.len())?;
        if self.jets.set().distance_unchecked(x) == 0.0 {
            return Err(Error::OnSet);
        }
        let (v, j) = self.assemble(x, true)?;
        Ok((v, j.expect("jacobian requested")))
    }
}

/// Row-major lattice with `res[i]` points on axis `i` (the last axis varies
/// fastest). Points within `onset_tol` of the set are flagged and carry the
/// prescribed value of their nearest set point.
pub fn sample_grid(
    ext: &Extension,
    lo: &[f64],
    hi: &[f64],
    res: &[usize],
    with_jacobian: bool,
    onset_tol: f64,
) -> Result<Vec<FieldSample>> {
    let n = ext.dimension();
    check_dim(n, lo.len())?;
    check_dim(n, hi.len())?;
    check_dim(n, res.len())?;
    if lo.iter().zip(hi).any(|(l, h)| !(l < h)) {
        return Err(Error::InvalidInput("grid box needs lo < hi on every axis".into()));
    }
    if res.iter().any(|&r| r < 2) {
        return Err(Error::InvalidInput("grid resolution must be at least 2 per axis".into()));
    }
    let total: usize = res.iter().product();
    let set = ext.jets().set().clone();
    (0..total)
        .into_par_iter()
        .map(|flat| {
            let mut rem = flat;
            let mut x = vec![0.0; n];
            for axis in (0..n).rev() {
                let i = rem % res[axis];
                rem /= res[axis];
                x[axis] = if i == res[axis] - 1 {
                    hi[axis]
                } else {
                    lo[axis] + i as f64 * (hi[axis] - lo[axis]) / (res[axis] - 1) as f64
                };
            }
            let near = set.nearest(&x)?;
            if near.distance <= onset_tol {
                let value = ext.jets().value(&near.foot)?;
                return Ok(FieldSample { x, value, jacobian: None, on_set: true });
            }
            let (value, jacobian) = if with_jacobian {
                let (v, j) = ext.value_and_jacobian(&x)?;
                (v, Some(j))
            } else {
                (ext.value(&x)?, None)
            };
            Ok(FieldSample { x, value, jacobian, on_set: false })
        })
        .collect()
}
