//! Exogenous peer streams.

use d2d_traj::Vec2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PeerGenerator {
    /// A fixed hot-spot.
    Static(Vec2),
    Linear {
        start: Vec2,
        velocity: Vec2,
    },
    /// Visits the points in order at `speed` per slot and stays at the last.
    Waypoints {
        points: Vec<Vec2>,
        speed: f64,
    },
    /// Uniform steps inside the disk of radius `max_step`.
    BoundedRandomWalk {
        start: Vec2,
        max_step: f64,
        seed: u64,
    },
}

impl PeerGenerator {
    /// Largest displacement between consecutive slots.
    pub fn max_step(&self) -> f64 {
        match self {
            PeerGenerator::Static(_) => 0.0,
            PeerGenerator::Linear { velocity, .. } => velocity.norm(),
            PeerGenerator::Waypoints { speed, .. } => *speed,
            PeerGenerator::BoundedRandomWalk { max_step, .. } => *max_step,
        }
    }

    /// Positions for slots `1..=horizon`.
    pub fn generate(&self, horizon: usize) -> Vec<Vec2> {
        match self {
            PeerGenerator::Static(h) => vec![*h; horizon],
            PeerGenerator::Linear { start, velocity } => (0..horizon).map(|k| *start + *velocity * k as f64).collect(),
            PeerGenerator::Waypoints { points, speed } => walk_waypoints(points, *speed, horizon),
            PeerGenerator::BoundedRandomWalk { start, max_step, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let mut pos = *start;
                let mut out = Vec::with_capacity(horizon);
                for k in 0..horizon {
                    if k > 0 {
                        let angle: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                        let radius = max_step * rng.gen::<f64>().sqrt();
                        pos += Vec2::new(angle.cos(), angle.sin()) * radius;
                    }
                    out.push(pos);
                }
                out
            }
        }
    }
}

fn walk_waypoints(points: &[Vec2], speed: f64, horizon: usize) -> Vec<Vec2> {
    let mut out = Vec::with_capacity(horizon);
    let mut pos = points[0];
    let mut target = 1;
    for k in 0..horizon {
        if k > 0 {
            let mut budget = speed;
            while target < points.len() && budget > 0.0 {
                let gap = (points[target] - pos).norm();
                if gap <= budget {
                    pos = points[target];
                    budget -= gap;
                    target += 1;
                } else {
                    pos += (points[target] - pos) * (budget / gap);
                    budget = 0.0;
                }
            }
        }
        out.push(pos);
    }
    out
}
