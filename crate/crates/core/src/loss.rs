//! Time-varying tracking losses `f_t(x) = g(|x - lead_t|)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Trajectory, Vec2};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    /// `|x - lead|^2`
    Squared,
    /// Quadratic inside the speed ball, blended linear/quadratic outside.
    Huber,
}

/// Loss shape together with the constants the regret analysis needs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossSpec {
    pub kind: LossKind,
    /// Strong-convexity modulus.
    pub mu: f64,
    /// Knee of the Huber loss (the per-slot speed). Unused by the squared loss.
    pub knee: f64,
    /// Lipschitz constant of the gradient.
    pub lipschitz: f64,
    /// Gradient bound over the operating region, once its diameter is known.
    pub grad_bound: Option<f64>,
}

impl LossSpec {
    pub fn squared() -> Self {
        Self { kind: LossKind::Squared, mu: 2.0, knee: f64::INFINITY, lipschitz: 2.0, grad_bound: None }
    }

    /// Huber-type loss with blend `mu` in `[0, 1]` and knee at `speed`.
    ///
    /// `mu = 0` is accepted (it is the pure projected-step limit) but fails the
    /// strong-convexity check in [`crate::online::verify_assumptions`].
    pub fn huber(mu: f64, speed: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&mu) {
            return Err(Error::InvalidInput(format!("huber mu must lie in [0, 1], got {mu}")));
        }
        if !(speed > 0.0 && speed.is_finite()) {
            return Err(Error::InvalidInput(format!("huber knee must be positive, got {speed}")));
        }
        Ok(Self { kind: LossKind::Huber, mu, knee: speed, lipschitz: 1.0, grad_bound: None })
    }

    /// Sets the gradient bound for a region of diameter `r`.
    pub fn with_region_diameter(mut self, r: f64) -> Self {
        self.grad_bound = Some(match self.kind {
            LossKind::Squared => 2.0 * r,
            LossKind::Huber => self.mu * r + self.knee * (1.0 - self.mu),
        });
        self
    }

    pub fn value(&self, x: Vec2, lead: Vec2) -> f64 {
        let r = x - lead;
        match self.kind {
            LossKind::Squared => r.norm_sq(),
            LossKind::Huber => huber_branch(r.norm(), self.mu, self.knee),
        }
    }

    pub fn grad(&self, x: Vec2, lead: Vec2) -> Vec2 {
        loss_grad(self, x, lead)
    }
}

/// Huber-type penalty of a distance `d >= 0`.
///
/// `d^2 / 2` up to the knee `v`, then `v(1-mu)d + (mu/2)d^2 - (1-mu)v^2/2`.
/// The constant `(1-mu)v^2/2` is the only one that makes the branches meet
/// at `d = v`; the variant `(1-mu^2)v^2/2` leaves a jump of `mu(1-mu)v^2/2`.
pub fn huber_value(d: f64, mu: f64, v: f64) -> Result<f64> {
    if d < 0.0 || d.is_nan() {
        return Err(Error::InvalidInput(format!("distance must be non-negative, got {d}")));
    }
    Ok(huber_branch(d, mu, v))
}

fn huber_branch(d: f64, mu: f64, v: f64) -> f64 {
    if d <= v {
        0.5 * d * d
    } else {
        v * (1.0 - mu) * d + 0.5 * mu * d * d - 0.5 * (1.0 - mu) * v * v
    }
}

/// Radial projection of `w` onto the Euclidean disk of radius `v`.
pub fn project_ball(w: Vec2, v: f64) -> Vec2 {
    let n = w.norm();
    if n <= v {
        w
    } else {
        w * (v / n)
    }
}

pub fn loss_grad(spec: &LossSpec, x: Vec2, lead: Vec2) -> Vec2 {
    let r = x - lead;
    match spec.kind {
        LossKind::Squared => r * 2.0,
        LossKind::Huber => r * spec.mu + project_ball(r, spec.knee) * (1.0 - spec.mu),
    }
}

/// A loss shape paired with its per-slot leading points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeVaryingLoss {
    pub spec: LossSpec,
    pub leads: Vec<Vec2>,
}

impl TimeVaryingLoss {
    pub fn new(spec: LossSpec, leads: Vec<Vec2>) -> Self {
        Self { spec, leads }
    }

    pub fn horizon(&self) -> usize {
        self.leads.len()
    }

    /// `f_t(x)` at 1-based slot `t`.
    pub fn value_at(&self, t: usize, x: Vec2) -> f64 {
        self.spec.value(x, self.leads[t - 1])
    }

    pub fn grad_at(&self, t: usize, x: Vec2) -> Vec2 {
        self.spec.grad(x, self.leads[t - 1])
    }

    /// Per-slot losses along a trajectory covering the whole horizon.
    pub fn per_slot(&self, traj: &Trajectory) -> Result<Vec<f64>> {
        if traj.slot_count() != self.leads.len() {
            return Err(Error::LengthMismatch { expected: self.leads.len(), actual: traj.slot_count() });
        }
        Ok(traj.points().iter().zip(&self.leads).map(|(x, l)| self.spec.value(*x, *l)).collect())
    }

    pub fn cumulative(&self, traj: &Trajectory) -> Result<f64> {
        Ok(self.per_slot(traj)?.iter().sum())
    }
}
