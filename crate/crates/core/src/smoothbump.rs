//! Smooth transition profiles and tensor-product cube bumps.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Result};

/// Below this argument the exponential profile is treated as exactly flat.
const EXP_FLAT: f64 = 1e-8;

/// A nondecreasing profile equal to 0 on `(-inf, 0]` and 1 on `[1, inf)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TransitionProfile {
    /// `e^{-1/t} / (e^{-1/t} + e^{-1/(1-t)})`, C^infinity.
    ExpSmooth,
    /// Polynomial smoothstep of class C^k: the regularized incomplete beta
    /// function `I_t(k+1, k+1)`.
    PolySmooth(u32),
}

impl Default for TransitionProfile {
    fn default() -> Self {
        TransitionProfile::ExpSmooth
    }
}

impl TransitionProfile {
    /// Value and derivative at `t`.
    pub fn eval(self, t: f64) -> (f64, f64) {
        if t <= 0.0 {
            return (0.0, 0.0);
        }
        if t >= 1.0 {
            return (1.0, 0.0);
        }
        match self {
            TransitionProfile::ExpSmooth => {
                if t < EXP_FLAT {
                    return (0.0, 0.0);
                }
                if 1.0 - t < EXP_FLAT {
                    return (1.0, 0.0);
                }
                // value = logistic(1/(1-t) - 1/t)
                let w = 1.0 / t - 1.0 / (1.0 - t);
                let value = if w >= 0.0 {
                    let e = (-w).exp();
                    e / (1.0 + e)
                } else {
                    1.0 / (1.0 + w.exp())
                };
                let dw = 1.0 / (t * t) + 1.0 / ((1.0 - t) * (1.0 - t));
                (value, value * (1.0 - value) * dw)
            }
            TransitionProfile::PolySmooth(k) => {
                let k = k as i32;
                let total = 2 * k + 1;
                let s = 1.0 - t;
                let mut value = 0.0;
                for j in (k + 1)..=total {
                    value += binomial(total, j) * t.powi(j) * s.powi(total - j);
                }
                let deriv = poly_scale(k) * (t * s).powi(k);
                (value.clamp(0.0, 1.0), deriv)
            }
        }
    }

    /// Certified bound `G >= sup |profile'|`.
    ///
    /// Both families attain their maximum slope at `t = 1/2`: the exponential
    /// profile has slope exactly 2 there, the smoothstep of order k has slope
    /// `(2k+1)! / (k!^2 4^k)`.
    pub fn derivative_bound(self) -> f64 {
        match self {
            TransitionProfile::ExpSmooth => 2.0,
            TransitionProfile::PolySmooth(k) => poly_scale(k as i32) / 4f64.powi(k as i32),
        }
    }

    pub fn name(self) -> String {
        match self {
            TransitionProfile::ExpSmooth => "exp".to_string(),
            TransitionProfile::PolySmooth(k) => format!("poly{k}"),
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "exp" => Some(TransitionProfile::ExpSmooth),
            other => other
                .strip_prefix("poly")
                .and_then(|k| k.parse::<u32>().ok())
                .filter(|&k| (1..=8).contains(&k))
                .map(TransitionProfile::PolySmooth),
        }
    }
}

fn binomial(n: i32, k: i32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

// (2k+1)! / (k!)^2
fn poly_scale(k: i32) -> f64 {
    (2 * k + 1) as f64 * binomial(2 * k, k)
}

/// A bump equal to 1 on the closed cube of half-width `core_halfwidth` about
/// `center`, vanishing outside the cube of half-width `core_halfwidth + collar`.
#[derive(Clone, Debug, PartialEq)]
pub struct CubeBump {
    pub center: Vec<f64>,
    pub core_halfwidth: f64,
    pub collar: f64,
}

impl CubeBump {
    pub fn new(center: Vec<f64>, core_halfwidth: f64, collar: f64) -> Self {
        debug_assert!(core_halfwidth > 0.0 && collar > 0.0);
        Self { center, core_halfwidth, collar }
    }

    /// Half-width of the closed cube outside which the bump vanishes.
    pub fn outer_halfwidth(&self) -> f64 {
        self.core_halfwidth + self.collar
    }

    /// Value and gradient at `x`.
    pub fn eval(&self, profile: TransitionProfile, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        check_dim(self.center.len(), x.len())?;
        let mut grad = vec![0.0; x.len()];
        let value = self.eval_into(profile, x, &mut grad);
        Ok((value, grad))
    }

    /// Writes the gradient into `grad` and returns the value. Outside the
    /// support both are exactly zero.
    pub(crate) fn eval_into(&self, profile: TransitionProfile, x: &[f64], grad: &mut [f64]) -> f64 {
        let n = x.len();
        let outer = self.outer_halfwidth();
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut vals = [0.0f64; 8];
        let mut ders = [0.0f64; 8];
        let mut heap_vals;
        let mut heap_ders;
        let (vals, ders): (&mut [f64], &mut [f64]) = if n <= 8 {
            (&mut vals[..n], &mut ders[..n])
        } else {
            heap_vals = vec![0.0; n];
            heap_ders = vec![0.0; n];
            (&mut heap_vals[..], &mut heap_ders[..])
        };
        for i in 0..n {
            let offset = x[i] - self.center[i];
            let u = (outer - offset.abs()) / self.collar;
            let (v, d) = profile.eval(u);
            if v == 0.0 {
                return 0.0;
            }
            vals[i] = v;
            // d/dx_i of u is -sign(offset)/collar; d == 0 wherever offset == 0
            ders[i] = if offset > 0.0 { -d / self.collar } else { d / self.collar };
        }
        let value: f64 = vals.iter().product();
        for i in 0..n {
            if ders[i] != 0.0 {
                let others: f64 = (0..n).filter(|&k| k != i).map(|k| vals[k]).product();
                grad[i] = ders[i] * others;
            }
        }
        value
    }
}
