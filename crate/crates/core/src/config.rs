use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Every numeric tolerance used by the certification suites, in one place.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Allowed `|sum phi - 1|`.
    pub partition_sum: f64,
    /// Allowed `r(x) |sum phi'|`.
    pub partition_grad_sum: f64,
    /// Absolute error allowed when an affine field must be reproduced.
    pub affine: f64,
    /// Step of the central differences used to check Jacobians.
    pub fd_step: f64,
    /// Relative tolerance of the Jacobian check, scaled by `max(|J|, 1)`.
    pub fd_rel: f64,
    /// Minimal log-log slope and largest final value of the Frechet residual
    /// series of a smooth case over twelve dyadic scales.
    pub frechet_slope: f64,
    pub frechet_final: f64,
    /// A series decays when `last <= max(first * decay_ratio, decay_abs)`.
    /// `decay_abs` sits above the rounding noise of exactly reproduced
    /// affine data at the finest scales.
    pub decay_ratio: f64,
    pub decay_abs: f64,
    /// Upper bound on a decaying series' final value.
    pub decay_final: f64,
    /// A series that must not decay has its final value at least this.
    pub strict_floor: f64,
    pub continuity_floor: f64,
    /// Slack of the cone uniqueness bound.
    pub uniqueness_slack: f64,
    /// Angular tolerance for deduplicating directions.
    pub cone_angle: f64,
    /// Distance within which a jet base point counts as a set point.
    pub jet_membership: f64,
    /// Distance below which a grid point is flagged as lying in the set.
    pub onset: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            partition_sum: 1e-10,
            partition_grad_sum: 1e-8,
            affine: 1e-9,
            fd_step: 1e-5,
            fd_rel: 1e-6,
            frechet_slope: 0.8,
            frechet_final: 1e-3,
            decay_ratio: 0.5,
            decay_abs: 1e-8,
            decay_final: 1e-2,
            strict_floor: 0.9,
            continuity_floor: 0.4,
            uniqueness_slack: 0.1,
            cone_angle: 1e-3,
            jet_membership: 1e-9,
            onset: 1e-12,
        }
    }
}

impl Tolerances {
    pub const KEYS: [&'static str; 16] = [
        "partition_sum",
        "partition_grad_sum",
        "affine",
        "fd_step",
        "fd_rel",
        "frechet_slope",
        "frechet_final",
        "decay_ratio",
        "decay_abs",
        "decay_final",
        "strict_floor",
        "continuity_floor",
        "uniqueness_slack",
        "cone_angle",
        "jet_membership",
        "onset",
    ];

    fn slot(&mut self, key: &str) -> Option<&mut f64> {
        Some(match key {
            "partition_sum" => &mut self.partition_sum,
            "partition_grad_sum" => &mut self.partition_grad_sum,
            "affine" => &mut self.affine,
            "fd_step" => &mut self.fd_step,
            "fd_rel" => &mut self.fd_rel,
            "frechet_slope" => &mut self.frechet_slope,
            "frechet_final" => &mut self.frechet_final,
            "decay_ratio" => &mut self.decay_ratio,
            "decay_abs" => &mut self.decay_abs,
            "decay_final" => &mut self.decay_final,
            "strict_floor" => &mut self.strict_floor,
            "continuity_floor" => &mut self.continuity_floor,
            "uniqueness_slack" => &mut self.uniqueness_slack,
            "cone_angle" => &mut self.cone_angle,
            "jet_membership" => &mut self.jet_membership,
            "onset" => &mut self.onset,
            _ => return None,
        })
    }

    pub fn set(&mut self, key: &str, value: f64) -> Result<()> {
        if !value.is_finite() || value < 0.0 {
            return Err(Error::InvalidInput(format!("tolerance {key} must be finite and nonnegative")));
        }
        let slot = self.slot(key).ok_or_else(|| Error::InvalidInput(format!("unknown tolerance key {key}")))?;
        *slot = value;
        Ok(())
    }

    /// Applies a `KEY=VALUE` override.
    pub fn apply(&mut self, assignment: &str) -> Result<()> {
        let (key, value) = assignment
            .split_once('=')
            .ok_or_else(|| Error::InvalidInput(format!("expected KEY=VALUE, got {assignment}")))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| Error::InvalidInput(format!("tolerance value {value} is not a number")))?;
        self.set(key.trim(), value)
    }

    /// True when a series with these end values counts as decaying.
    pub fn decays(&self, first: f64, last: f64) -> bool {
        last <= (first * self.decay_ratio).max(self.decay_abs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_key_is_settable() {
        let mut t = Tolerances::default();
        for key in Tolerances::KEYS {
            t.set(key, 0.25).unwrap();
        }
        assert_eq!(t.fd_rel, 0.25);
        assert!(t.set("nope", 1.0).is_err());
        assert!(t.set("fd_rel", f64::NAN).is_err());
    }

    #[test]
    fn assignments_parse() {
        let mut t = Tolerances::default();
        t.apply("affine=1e-7").unwrap();
        assert_eq!(t.affine, 1e-7);
        assert!(t.apply("affine").is_err());
        assert!(t.apply("affine=x").is_err());
    }

    #[test]
    fn decay_rule() {
        let t = Tolerances::default();
        assert!(t.decays(1.0, 0.5));
        assert!(!t.decays(1.0, 0.51));
        assert!(t.decays(0.0, 0.0));
    }
}
