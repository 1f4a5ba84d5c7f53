//! Planar geometry: points, norms and slot-indexed trajectories.
//!
//! Trajectories are indexed by time slot. Slot `t` (1-based, as in the
//! problem statement) lives at index `t - 1`.

use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    /// Euclidean length.
    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    /// City-block length.
    pub fn norm1(self) -> f64 {
        self.x.abs() + self.y.abs()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Convex combination `(1 - w) * self + w * other`.
    pub fn lerp(self, other: Vec2, w: f64) -> Vec2 {
        self + (other - self) * w
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, k: f64) -> Vec2 {
        Vec2::new(self.x * k, self.y * k)
    }
}

impl Mul<Vec2> for f64 {
    type Output = Vec2;
    fn mul(self, v: Vec2) -> Vec2 {
        v * self
    }
}

impl Div<f64> for Vec2 {
    type Output = Vec2;
    fn div(self, k: f64) -> Vec2 {
        Vec2::new(self.x / k, self.y / k)
    }
}

impl AddAssign for Vec2 {
    fn add_assign(&mut self, rhs: Vec2) {
        self.x += rhs.x;
        self.y += rhs.y;
    }
}

impl SubAssign for Vec2 {
    fn sub_assign(&mut self, rhs: Vec2) {
        self.x -= rhs.x;
        self.y -= rhs.y;
    }
}

impl From<[f64; 2]> for Vec2 {
    fn from(p: [f64; 2]) -> Self {
        Vec2::new(p[0], p[1])
    }
}

/// Norm used for travel distances and the per-slot speed limit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormKind {
    #[default]
    Euclidean,
    Manhattan,
}

impl NormKind {
    pub fn length(self, v: Vec2) -> f64 {
        match self {
            NormKind::Euclidean => v.norm(),
            NormKind::Manhattan => v.norm1(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            NormKind::Euclidean => "euclidean",
            NormKind::Manhattan => "manhattan",
        }
    }
}

pub fn distance(a: Vec2, b: Vec2, norm: NormKind) -> f64 {
    norm.length(b - a)
}

/// Number of whole slots needed to cover `s -> d` at `speed` units per slot.
///
/// Quotients within 1e-9 (relative) of an integer are not rounded up, so a
/// speed derived as `distance / n` yields exactly `n`.
pub fn travel_time(s: Vec2, d: Vec2, speed: f64, norm: NormKind) -> Result<usize> {
    if !(speed > 0.0 && speed.is_finite()) {
        return Err(Error::InvalidInput(format!("speed must be positive, got {speed}")));
    }
    let ratio = distance(s, d, norm) / speed;
    let slots = (ratio - 1e-9 * ratio.max(1.0)).ceil().max(0.0);
    Ok(slots as usize)
}

/// Ordered, non-empty sequence of finite positions, one per slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec2>", into = "Vec<Vec2>")]
pub struct Trajectory {
    points: Vec<Vec2>,
}

impl Trajectory {
    pub fn new(points: Vec<Vec2>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyTrajectory);
        }
        if let Some(i) = points.iter().position(|p| !p.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite point at slot {}", i + 1)));
        }
        Ok(Self { points })
    }

    pub fn constant(p: Vec2, slots: usize) -> Result<Self> {
        Self::new(vec![p; slots])
    }

    pub fn slot_count(&self) -> usize {
        self.points.len()
    }

    pub fn points(&self) -> &[Vec2] {
        &self.points
    }

    /// Position at 1-based slot `t`.
    pub fn at(&self, t: usize) -> Result<Vec2> {
        if t == 0 || t > self.points.len() {
            return Err(Error::SlotOutOfRange { slot: t, horizon: self.points.len() });
        }
        Ok(self.points[t - 1])
    }

    pub fn first(&self) -> Vec2 {
        self.points[0]
    }

    pub fn last(&self) -> Vec2 {
        self.points[self.points.len() - 1]
    }

    pub fn steps(&self) -> impl Iterator<Item = Vec2> + '_ {
        self.points.windows(2).map(|w| w[1] - w[0])
    }

    pub fn into_points(self) -> Vec<Vec2> {
        self.points
    }
}

impl TryFrom<Vec<Vec2>> for Trajectory {
    type Error = Error;
    fn try_from(points: Vec<Vec2>) -> Result<Self> {
        Trajectory::new(points)
    }
}

impl From<Trajectory> for Vec<Vec2> {
    fn from(t: Trajectory) -> Self {
        t.points
    }
}

/// Shortest path from `s` to `d` sampled at `n_slots` evenly spaced positions.
pub fn direct_path(s: Vec2, d: Vec2, n_slots: usize) -> Result<Trajectory> {
    match n_slots {
        0 => Err(Error::InvalidInput("direct path needs at least one slot".into())),
        1 if s == d => Trajectory::new(vec![s]),
        1 => Err(Error::InvalidInput("a single-slot path cannot join distinct endpoints".into())),
        n => {
            let last = (n - 1) as f64;
            let mut points: Vec<Vec2> = (0..n).map(|k| s.lerp(d, k as f64 / last)).collect();
            points[n - 1] = d;
            Trajectory::new(points)
        }
    }
}

/// True iff every consecutive step has length at most `speed + tol`.
pub fn check_velocity_feasible(traj: &Trajectory, speed: f64, norm: NormKind, tol: f64) -> bool {
    traj.steps().all(|step| norm.length(step) <= speed + tol)
}

/// Index (1-based step number) of the first step longer than `speed + tol`.
pub fn first_velocity_violation(traj: &Trajectory, speed: f64, norm: NormKind, tol: f64) -> Option<usize> {
    traj.steps().position(|step| norm.length(step) > speed + tol).map(|i| i + 1)
}

pub fn distance_to_destination(traj: &Trajectory, d: Vec2, norm: NormKind) -> f64 {
    distance(traj.last(), d, norm)
}

/// Largest pairwise Euclidean distance in a point set.
pub fn diameter(points: &[Vec2]) -> f64 {
    let mut best = 0.0f64;
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            best = best.max((*b - *a).norm());
        }
    }
    best
}
