//! Online gradient planner.
//!
//! At slot `t` the user sees the peer and destination readings, forms the
//! leading point `lambda(t) * peer + (1 - lambda(t)) * dest` and takes one
//! gradient step of size `1/gamma` on the tracking loss towards it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{NormKind, Trajectory, Vec2};
use crate::loss::{LossKind, LossSpec};
use crate::scenario::Scenario;

/// Weight on the peer in the leading point, per slot.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaSchedule {
    /// `1 - t/T'`: chase the peer early, the destination late.
    #[default]
    LinearDown,
    /// `t/T'`.
    LinearUp,
    /// Explicit per-slot values, slot 1 first.
    Custom(Vec<f64>),
}

impl LambdaSchedule {
    pub fn name(&self) -> &'static str {
        match self {
            Self::LinearDown => "linear_down",
            Self::LinearUp => "linear_up",
            Self::Custom(_) => "custom",
        }
    }
}

pub fn lambda_at(schedule: &LambdaSchedule, t: usize, horizon: usize) -> Result<f64> {
    if t == 0 || t > horizon {
        return Err(Error::SlotOutOfRange { slot: t, horizon });
    }
    let frac = t as f64 / horizon as f64;
    match schedule {
        LambdaSchedule::LinearDown => Ok(1.0 - frac),
        LambdaSchedule::LinearUp => Ok(frac),
        LambdaSchedule::Custom(values) => {
            let v = *values.get(t - 1).ok_or(Error::LengthMismatch { expected: horizon, actual: values.len() })?;
            if (0.0..=1.0).contains(&v) {
                Ok(v)
            } else {
                Err(Error::LambdaOutOfRange(v))
            }
        }
    }
}

pub fn leading_path(lambda: f64, peer: Vec2, dest: Vec2) -> Result<Vec2> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::LambdaOutOfRange(lambda));
    }
    Ok(peer * lambda + dest * (1.0 - lambda))
}

/// Optional convex set the iterates are projected onto after each step.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Region {
    #[default]
    Unbounded,
    Box {
        min: Vec2,
        max: Vec2,
    },
    Disk {
        center: Vec2,
        radius: f64,
    },
}

impl Region {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Region::Unbounded => Ok(()),
            Region::Box { min, max } if min.is_finite() && max.is_finite() && min.x <= max.x && min.y <= max.y => {
                Ok(())
            }
            Region::Disk { center, radius } if center.is_finite() && radius >= 0.0 && radius.is_finite() => Ok(()),
            _ => Err(Error::InvalidInput(format!("malformed region {self:?}"))),
        }
    }

    pub fn contains(&self, p: Vec2, tol: f64) -> bool {
        match *self {
            Region::Unbounded => true,
            Region::Box { min, max } => {
                p.x >= min.x - tol && p.x <= max.x + tol && p.y >= min.y - tol && p.y <= max.y + tol
            }
            Region::Disk { center, radius } => (p - center).norm() <= radius + tol,
        }
    }

    pub fn project(&self, p: Vec2) -> Vec2 {
        match *self {
            Region::Unbounded => p,
            Region::Box { min, max } => Vec2::new(p.x.clamp(min.x, max.x), p.y.clamp(min.y, max.y)),
            Region::Disk { center, radius } => {
                let off = p - center;
                let n = off.norm();
                if n <= radius {
                    p
                } else {
                    center + off * (radius / n)
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OgdConfig {
    /// Step size is `1 / gamma`.
    pub gamma: f64,
    pub loss: LossSpec,
    #[serde(default)]
    pub schedule: LambdaSchedule,
    #[serde(default)]
    pub region: Region,
}

impl OgdConfig {
    fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidInput(format!("gamma must be positive, got {}", self.gamma)));
        }
        self.region.validate()
    }
}

pub fn ogd_step(x: Vec2, lead: Vec2, cfg: &OgdConfig) -> Vec2 {
    x - cfg.loss.grad(x, lead) / cfg.gamma
}

/// Smallest `gamma` meeting both `gamma >= L` and the step-size condition
/// that keeps every move within `speed` on a region of diameter
/// `region_diameter`.
pub fn min_gamma(loss: &LossSpec, region_diameter: f64, speed: f64) -> f64 {
    let step_bound = match loss.kind {
        LossKind::Huber => 1.0 + loss.mu * region_diameter / speed,
        LossKind::Squared => 2.0 * region_diameter / speed,
    };
    loss.lipschitz.max(step_bound)
}

/// Iterates, leading points and weights of one online run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OgdRun {
    pub trajectory: Trajectory,
    pub leads: Vec<Vec2>,
    pub lambdas: Vec<f64>,
}

/// Leading points and weights for every slot of a scenario.
pub fn leading_stream(scenario: &Scenario, schedule: &LambdaSchedule) -> Result<(Vec<Vec2>, Vec<f64>)> {
    let horizon = scenario.horizon();
    let mut leads = Vec::with_capacity(horizon);
    let mut lambdas = Vec::with_capacity(horizon);
    for t in 1..=horizon {
        let lambda = lambda_at(schedule, t, horizon)?;
        leads.push(leading_path(lambda, scenario.peer_at(t), scenario.destination_at(t))?);
        lambdas.push(lambda);
    }
    Ok((leads, lambdas))
}

/// Runs the planner over the scenario. Only the Euclidean speed limit is
/// supported because the step bound relies on the Euclidean ball.
pub fn ogd_run(scenario: &Scenario, cfg: &OgdConfig) -> Result<OgdRun> {
    scenario.validate()?;
    cfg.validate()?;
    if scenario.norm != NormKind::Euclidean {
        return Err(Error::UnsupportedNorm(scenario.norm.name()));
    }
    if !cfg.region.contains(scenario.start, 0.0) {
        return Err(Error::InvalidInput("start lies outside the region".into()));
    }
    let (leads, lambdas) = leading_stream(scenario, &cfg.schedule)?;
    let mut points = Vec::with_capacity(leads.len());
    let mut x = scenario.start;
    points.push(x);
    for lead in &leads[..leads.len() - 1] {
        x = cfg.region.project(ogd_step(x, *lead, cfg));
        points.push(x);
    }
    Ok(OgdRun { trajectory: Trajectory::new(points)?, leads, lambdas })
}

/// Which of the standing assumptions a configuration satisfies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub strongly_convex: bool,
    pub lipschitz_gradient: bool,
    pub bounded_variation: bool,
    pub gamma_at_least_lipschitz: bool,
    pub mu: f64,
    pub lipschitz: f64,
    pub grad_bound: f64,
    pub gamma: f64,
    pub speed: f64,
    pub region_diameter: f64,
}

impl AssumptionReport {
    pub fn all_hold(&self) -> bool {
        self.strongly_convex && self.lipschitz_gradient && self.bounded_variation && self.gamma_at_least_lipschitz
    }
}

pub fn verify_assumptions(cfg: &OgdConfig, region_diameter: f64, speed: f64) -> AssumptionReport {
    let loss = cfg.loss.with_region_diameter(region_diameter);
    let grad_bound = loss.grad_bound.unwrap_or(f64::INFINITY);
    AssumptionReport {
        strongly_convex: loss.mu > 0.0,
        lipschitz_gradient: loss.lipschitz.is_finite() && grad_bound.is_finite(),
        bounded_variation: cfg.gamma >= grad_bound / speed,
        gamma_at_least_lipschitz: cfg.gamma >= loss.lipschitz,
        mu: loss.mu,
        lipschitz: loss.lipschitz,
        grad_bound,
        gamma: cfg.gamma,
        speed,
        region_diameter,
    }
}
