//! Power means `M_s(y) = ((1/k) sum y_i^s)^(1/s)`, their gradients, and the
//! annealing schedule that drives `s` towards `-inf`.
//!
//! Everything is evaluated on the ratios `y_i / min(y)` (or `/ max(y)` for
//! positive `s`) so that no intermediate power leaves `[0, 1]`. Annealing
//! pushes `s` far below `-100`, where naive powering overflows.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_GAMMA: f64 = 1.04;
pub const DEFAULT_S0: f64 = -15.0;
pub const DEFAULT_S_FLOOR: f64 = -1e6;
pub const SINGLE_VIEW_CADENCE: usize = 3;
pub const MULTI_VIEW_CADENCE: usize = 2;

fn check_positive(y: &[f64]) -> Result<()> {
    if y.is_empty() {
        return Err(Error::invalid("power mean of an empty vector"));
    }
    match y.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
        Some(v) => Err(Error::invalid(format!(
            "power mean needs positive finite entries, found {v}"
        ))),
        None => Ok(()),
    }
}

fn min_of(y: &[f64]) -> f64 {
    y.iter().copied().fold(f64::INFINITY, f64::min)
}

fn max_of(y: &[f64]) -> f64 {
    y.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

pub fn power_mean(y: &[f64], s: f64) -> Result<f64> {
    check_positive(y)?;
    if s == 0.0 || !s.is_finite() {
        return Err(Error::invalid(format!("power mean exponent must be nonzero and finite, got {s}")));
    }
    let pivot = if s < 0.0 { min_of(y) } else { max_of(y) };
    let k = y.len() as f64;
    let mean: f64 = y.iter().map(|v| (s * (v / pivot).ln()).exp()).sum::<f64>() / k;
    let m = pivot * (mean.ln() / s).exp();
    // rounding can push the result a hair outside [min, max]
    Ok(m.clamp(min_of(y), max_of(y)))
}

/// [`power_mean`] without input validation, for solver inner loops.
pub(crate) fn power_mean_unchecked(y: &[f64], s: f64) -> f64 {
    let pivot = if s < 0.0 { min_of(y) } else { max_of(y) };
    let k = y.len() as f64;
    let mean: f64 = y.iter().map(|v| (s * (v / pivot).ln()).exp()).sum::<f64>() / k;
    pivot * (mean.ln() / s).exp()
}

/// Natural logs of the gradient of `M_s` at `y`, for `s < 0`.
///
/// `ln w_j = -ln k + (s - 1) ln r_j - (1 - 1/s) ln((1/k) sum_c r_c^s)` with
/// `r = y / min(y)`; the `min(y)` scale cancels exactly.
pub fn log_gradient_weights(y: &[f64], s: f64) -> Result<Vec<f64>> {
    check_positive(y)?;
    if !(s < 0.0 && s.is_finite()) {
        return Err(Error::invalid(format!("gradient weights need a finite negative exponent, got {s}")));
    }
    let mut out = vec![0.0; y.len()];
    log_gradient_weights_into(y, s, &mut out);
    Ok(out)
}

/// Unchecked kernel of [`log_gradient_weights`]; inputs must already be valid.
pub(crate) fn log_gradient_weights_into(y: &[f64], s: f64, out: &mut [f64]) {
    let k = y.len() as f64;
    let lo = min_of(y);
    let mut mean = 0.0;
    for (o, v) in out.iter_mut().zip(y) {
        let lr = (v / lo).ln();
        *o = lr;
        mean += (s * lr).exp();
    }
    let log_mean = (mean / k).ln();
    let head = -k.ln() - (1.0 - 1.0 / s) * log_mean;
    for o in out.iter_mut() {
        *o = head + (s - 1.0) * *o;
    }
}

/// Gradient of `y -> M_s(y)` for `s < 0`. Weights that would underflow are exactly 0.
pub fn gradient_weights(y: &[f64], s: f64) -> Result<Vec<f64>> {
    let logs = log_gradient_weights(y, s)?;
    Ok(logs.into_iter().map(flushed_exp).collect())
}

pub(crate) fn flushed_exp(x: f64) -> f64 {
    let v = x.exp();
    if v < f64::MIN_POSITIVE {
        0.0
    } else {
        v
    }
}

/// Geometric annealing of the power exponent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerSchedule {
    pub s0: f64,
    pub gamma: f64,
    /// Iterations between multiplications by `gamma`.
    pub cadence: usize,
    pub s_floor: f64,
}

impl PowerSchedule {
    pub fn new(s0: f64, gamma: f64, cadence: usize, s_floor: f64) -> Result<Self> {
        let schedule = PowerSchedule {
            s0,
            gamma,
            cadence,
            s_floor,
        };
        schedule.validate()?;
        Ok(schedule)
    }

    /// Builds a schedule from a positive starting magnitude, `s0 = -|magnitude|`.
    pub fn from_magnitude(magnitude: f64, gamma: f64, cadence: usize) -> Result<Self> {
        Self::new(-magnitude.abs(), gamma, cadence, DEFAULT_S_FLOOR)
    }

    pub fn single_view() -> Self {
        PowerSchedule {
            s0: DEFAULT_S0,
            gamma: DEFAULT_GAMMA,
            cadence: SINGLE_VIEW_CADENCE,
            s_floor: DEFAULT_S_FLOOR,
        }
    }

    pub fn multi_view() -> Self {
        PowerSchedule {
            cadence: MULTI_VIEW_CADENCE,
            ..Self::single_view()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.s0 < 0.0 && self.s0.is_finite()) {
            return Err(Error::invalid(format!("s0 must be negative, got {}", self.s0)));
        }
        if !(self.gamma >= 1.0 && self.gamma.is_finite()) {
            return Err(Error::invalid(format!("gamma must be >= 1, got {}", self.gamma)));
        }
        if self.cadence == 0 {
            return Err(Error::invalid("cadence must be positive"));
        }
        if !(self.s_floor < 0.0 && self.s_floor.is_finite()) {
            return Err(Error::invalid(format!("s_floor must be negative, got {}", self.s_floor)));
        }
        Ok(())
    }

    /// Exponent after `iteration`: `gamma * s` on cadence boundaries, else `s`,
    /// never below `s_floor`.
    pub fn advance(&self, s: f64, iteration: usize) -> f64 {
        let next = if iteration % self.cadence == 0 {
            self.gamma * s
        } else {
            s
        };
        next.max(self.s_floor)
    }

    pub fn at_floor(&self, s: f64) -> bool {
        s <= self.s_floor
    }
}

impl Default for PowerSchedule {
    fn default() -> Self {
        Self::single_view()
    }
}
