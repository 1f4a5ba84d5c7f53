//! Link-quality utilities and the Shannon-style rate model.
//!
//! `RSS = (d / distance_scale)^-alpha`, `SNR = RSS / (sigma2 + RSS)` and
//! `rate = W * log2(1 + SNR)`. The SNR form saturates below one, so the rate
//! never reaches the bandwidth.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Trajectory;

/// Distance divisor that puts the direct path of the bundled slow-peer
/// scenario at roughly 3.1 Mbps. Reports always echo the value in use.
pub const DEFAULT_DISTANCE_SCALE: f64 = 24.754_342_206_614;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateModel {
    pub bandwidth_hz: f64,
    pub alpha: f64,
    pub sigma2: f64,
    pub distance_scale: f64,
}

impl Default for RateModel {
    fn default() -> Self {
        Self { bandwidth_hz: 10e6, alpha: 2.5, sigma2: 0.2, distance_scale: DEFAULT_DISTANCE_SCALE }
    }
}

impl RateModel {
    pub fn new(bandwidth_hz: f64, alpha: f64, sigma2: f64, distance_scale: f64) -> Result<Self> {
        let model = Self { bandwidth_hz, alpha, sigma2, distance_scale };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("bandwidth_hz", self.bandwidth_hz),
            ("alpha", self.alpha),
            ("sigma2", self.sigma2),
            ("distance_scale", self.distance_scale),
        ] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::InvalidInput(format!("{name} must be positive, got {value}")));
            }
        }
        Ok(())
    }

    pub fn with_distance_scale(mut self, scale: f64) -> Result<Self> {
        self.distance_scale = scale;
        self.validate()?;
        Ok(self)
    }
}

fn check_distance(dist: f64) -> Result<()> {
    if dist > 0.0 {
        Ok(())
    } else {
        Err(Error::NonPositiveDistance(dist))
    }
}

/// Received signal strength `dist^-alpha`.
pub fn utility_rss(dist: f64, alpha: f64) -> Result<f64> {
    check_distance(dist)?;
    Ok(dist.powf(-alpha))
}

pub fn utility_snr(dist: f64, model: &RateModel) -> Result<f64> {
    let rss = utility_rss(dist / model.distance_scale, model.alpha)?;
    if rss.is_infinite() {
        return Ok(1.0);
    }
    Ok(rss / (model.sigma2 + rss))
}

/// Achievable rate in bits per second at separation `dist`.
pub fn rate(dist: f64, model: &RateModel) -> Result<f64> {
    Ok(model.bandwidth_hz * (1.0 + utility_snr(dist, model)?).log2())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateSummary {
    /// Mean per-slot rate in bits per second.
    pub mean_bps: f64,
    /// Sum of per-slot rates times the slot duration.
    pub total_bits: f64,
    pub slots: usize,
}

/// Mean rate between two users over their common slots.
pub fn average_rate(
    first: &Trajectory,
    second: &Trajectory,
    model: &RateModel,
    slot_duration_s: f64,
) -> Result<RateSummary> {
    let slots = first.slot_count().min(second.slot_count());
    let mut sum = 0.0;
    for (a, b) in first.points().iter().zip(second.points()) {
        sum += rate((*a - *b).norm(), model)?;
    }
    Ok(RateSummary { mean_bps: sum / slots as f64, total_bits: sum * slot_duration_s, slots })
}
