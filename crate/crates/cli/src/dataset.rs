//! JSON jet datasets and set descriptors.
//!
//! Errors carry the line of the input they refer to: parse errors come with
//! serde_json's position, validation errors with the line where the
//! offending jet starts.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::Deserialize;
use serde_json::value::RawValue;
use whitney_ext::{AxisBox, Ball, ClosedSetRep, Jet, JetField, Point, SetShape};

#[derive(Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum SetDescriptor {
    Points { points: Vec<Vec<f64>> },
    Boxes { boxes: Vec<BoxDto> },
    Balls { balls: Vec<BallDto> },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxDto {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BallDto {
    center: Vec<f64>,
    radius: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct JetDto {
    a: Vec<f64>,
    f: Vec<f64>,
    #[serde(rename = "L")]
    l: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AffineDto {
    c: Vec<f64>,
    #[serde(rename = "M")]
    m: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDataset<'a> {
    n: usize,
    m: usize,
    #[serde(borrow)]
    set: &'a RawValue,
    #[serde(borrow, default)]
    jets: Option<Vec<&'a RawValue>>,
    #[serde(default)]
    affine: Option<AffineDto>,
    #[serde(default)]
    base_point: Option<Vec<f64>>,
    #[serde(default)]
    expect: BTreeMap<String, String>,
    #[serde(default)]
    scales: Option<Vec<f64>>,
    #[serde(default)]
    alpha: Option<f64>,
    #[serde(default)]
    claim_radii: Option<(f64, f64)>,
}

/// A validated dataset.
pub struct Dataset {
    pub jets: Arc<JetField>,
    pub base_point: Point,
    pub expect: BTreeMap<String, String>,
    pub scales: Option<Vec<f64>>,
    pub alpha: Option<f64>,
    pub claim_radii: Option<(f64, f64)>,
}

fn line_of(text: &str, part: &str) -> usize {
    let offset = part.as_ptr() as usize - text.as_ptr() as usize;
    text[..offset].matches('\n').count() + 1
}

fn parse_err(path: &str, text: &str, part: &str, e: serde_json::Error) -> String {
    let line = line_of(text, part) + e.line().saturating_sub(1);
    format!("{path}:{line}: {e}")
}

fn build_set(desc: SetDescriptor, n: Option<usize>) -> Result<ClosedSetRep, String> {
    let dim = |first: Option<usize>| -> Result<usize, String> {
        match (n, first) {
            (Some(n), _) => Ok(n),
            (None, Some(d)) => Ok(d),
            (None, None) => Err("empty set descriptor".into()),
        }
    };
    let set = match desc {
        SetDescriptor::Points { points } => {
            let d = dim(points.first().map(|p| p.len()))?;
            ClosedSetRep::points(d, points)
        }
        SetDescriptor::Boxes { boxes } => {
            let d = dim(boxes.first().map(|b| b.lo.len()))?;
            ClosedSetRep::boxes(d, boxes.into_iter().map(|b| AxisBox { lo: b.lo, hi: b.hi }).collect())
        }
        SetDescriptor::Balls { balls } => {
            let d = dim(balls.first().map(|b| b.center.len()))?;
            ClosedSetRep::balls(d, balls.into_iter().map(|b| Ball { center: b.center, radius: b.radius }).collect())
        }
    };
    set.map_err(|e| e.to_string())
}

fn matrix(m: usize, n: usize, entries: &[f64], what: &str) -> Result<DMatrix<f64>, String> {
    if entries.len() != m * n {
        return Err(format!("{what} has {} entries, expected {m} x {n} = {}", entries.len(), m * n));
    }
    Ok(DMatrix::from_row_slice(m, n, entries))
}

/// Reads a set descriptor, either bare or as the `set` field of a dataset.
pub fn read_set(path: &str) -> Result<ClosedSetRep, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{path}: {e}"))?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| format!("{path}:{}: {e}", e.line()))?;
    let n = value.get("n").and_then(|v| v.as_u64()).map(|v| v as usize);
    let desc = value.get("set").cloned().unwrap_or(value);
    let desc: SetDescriptor = serde_json::from_value(desc).map_err(|e| format!("{path}: {e}"))?;
    build_set(desc, n).map_err(|e| format!("{path}: {e}"))
}

pub fn read_dataset(path: &str, membership_tol: f64) -> Result<Dataset, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{path}: {e}"))?;
    parse_dataset(path, &text, membership_tol)
}

pub fn parse_dataset(path: &str, text: &str, membership_tol: f64) -> Result<Dataset, String> {
    let raw: RawDataset = serde_json::from_str(text).map_err(|e| format!("{path}:{}: {e}", e.line()))?;
    let (n, m) = (raw.n, raw.m);
    if n == 0 || m == 0 {
        return Err(format!("{path}:1: n and m must be positive"));
    }
    let set_line = line_of(text, raw.set.get());
    let desc: SetDescriptor =
        serde_json::from_str(raw.set.get()).map_err(|e| parse_err(path, text, raw.set.get(), e))?;
    let set = Arc::new(build_set(desc, Some(n)).map_err(|e| format!("{path}:{set_line}: {e}"))?);

    let jets = match (raw.jets, raw.affine) {
        (Some(_), Some(_)) => return Err(format!("{path}:1: give either jets or affine, not both")),
        (None, None) => return Err(format!("{path}:1: missing jets (finite sets) or affine (any set)")),
        (None, Some(aff)) => {
            if aff.c.len() != m {
                return Err(format!("{path}: affine c has {} entries, expected {m}", aff.c.len()));
            }
            let mm = matrix(m, n, &aff.m, "affine M").map_err(|e| format!("{path}: {e}"))?;
            let (c, mv) = (aff.c, mm.clone());
            Arc::new(JetField::from_rules(
                set.clone(),
                m,
                Arc::new(move |z: &[f64]| {
                    let v = &mv * nalgebra::DVector::from_column_slice(z);
                    c.iter().zip(v.iter()).map(|(p, q)| p + q).collect()
                }),
                Arc::new(move |_: &[f64]| mm.clone()),
            ))
        }
        (Some(list), None) => {
            let points = match set.shape() {
                SetShape::FinitePoints(p) => p.clone(),
                _ => return Err(format!("{path}:{set_line}: jets can only be tabulated on a points set; use affine")),
            };
            let mut seen: BTreeMap<Vec<u64>, usize> = BTreeMap::new();
            let mut jets = Vec::with_capacity(list.len());
            for raw_jet in list {
                let line = line_of(text, raw_jet.get());
                let dto: JetDto =
                    serde_json::from_str(raw_jet.get()).map_err(|e| parse_err(path, text, raw_jet.get(), e))?;
                if dto.a.len() != n || dto.f.len() != m {
                    return Err(format!("{path}:{line}: jet needs a with {n} and f with {m} entries"));
                }
                let l = matrix(m, n, &dto.l, "L").map_err(|e| format!("{path}:{line}: {e}"))?;
                let near = set.nearest(&dto.a).map_err(|e| format!("{path}:{line}: {e}"))?;
                if near.distance > membership_tol {
                    return Err(format!(
                        "{path}:{line}: jet base point {:?} is not in the set (distance {:e})",
                        dto.a, near.distance
                    ));
                }
                let key: Vec<u64> = near.foot.iter().map(|v| (v + 0.0).to_bits()).collect();
                if let Some(prev) = seen.insert(key, line) {
                    return Err(format!("{path}:{line}: second jet for the set point {:?} (first at line {prev})", near.foot));
                }
                jets.push(Jet { a: dto.a, value: dto.f, operator: l });
            }
            if jets.len() != points.len() {
                let missing = points
                    .iter()
                    .find(|p| !seen.contains_key(&p.iter().map(|v| (v + 0.0).to_bits()).collect::<Vec<_>>()));
                return Err(format!("{path}: no jet for set point {:?}", missing.unwrap_or(&points[0])));
            }
            Arc::new(JetField::tabulated(set.clone(), m, jets, membership_tol).map_err(|e| format!("{path}: {e}"))?)
        }
    };

    let base_point = match raw.base_point {
        Some(a) => {
            if a.len() != n || set.distance(&a).map_err(|e| e.to_string())? > membership_tol {
                return Err(format!("{path}: base_point {a:?} must be a point of the set"));
            }
            set.nearest(&a).map_err(|e| e.to_string())?.foot
        }
        None => default_base_point(&set),
    };
    Ok(Dataset {
        jets,
        base_point,
        expect: raw.expect,
        scales: raw.scales,
        alpha: raw.alpha,
        claim_radii: raw.claim_radii,
    })
}

/// First point, lower corner of the first box, or the point of the first
/// ball with the smallest first coordinate.
fn default_base_point(set: &ClosedSetRep) -> Point {
    match set.shape() {
        SetShape::FinitePoints(p) => p[0].clone(),
        SetShape::BoxUnion(b) => b[0].lo.clone(),
        SetShape::BallUnion(b) => {
            let mut a = b[0].center.clone();
            a[0] -= b[0].radius;
            a
        }
    }
}

/// Operator table for an external A field: `[{"x": [...], "A": [row-major]}]`.
pub fn read_external(path: &str, n: usize, m: usize) -> Result<Vec<(Point, DMatrix<f64>)>, String> {
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct Entry {
        x: Vec<f64>,
        #[serde(rename = "A")]
        a: Vec<f64>,
    }
    let text = std::fs::read_to_string(path).map_err(|e| format!("{path}: {e}"))?;
    let entries: Vec<Entry> = serde_json::from_str(&text).map_err(|e| format!("{path}:{}: {e}", e.line()))?;
    entries
        .into_iter()
        .enumerate()
        .map(|(i, e)| {
            if e.x.len() != n {
                return Err(format!("{path}: entry {i}: x needs {n} entries"));
            }
            Ok((e.x, matrix(m, n, &e.a, "A").map_err(|err| format!("{path}: entry {i}: {err}"))?))
        })
        .collect()
}
