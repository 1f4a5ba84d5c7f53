//! Randomised check of the online regret guarantees.
//!
//! Each case is a slow-peer scenario with a Huber loss and the smallest
//! admissible step-size denominator, so every standing assumption holds.

use d2d_traj::{
    evaluate_regret, min_gamma, travel_time, verify_assumptions, LambdaSchedule, LossSpec, NormKind, OgdConfig, Region,
    Scenario, SolverSettings, Vec2,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::SimError;
use crate::peer::PeerGenerator;
use crate::report::fmt_f64;

pub const BOUNDS_HEADER: &str =
    "case,horizon,mu,gamma,offline_regret,theorem_bound,epsilon_solver,bound_ok,iterate_gap_sq,gap_bound,gap_ok";

fn case_rng(base_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
    rng.set_stream(index);
    rng
}

/// Draws case `index` of the family seeded by `base_seed`.
pub fn random_case(base_seed: u64, index: u64) -> Result<(Scenario, OgdConfig), SimError> {
    let mut rng = case_rng(base_seed, index);
    let speed = rng.gen_range(0.5..3.0);
    let start = Vec2::new(rng.gen_range(-20.0..20.0), rng.gen_range(-20.0..20.0));
    let heading: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let length = speed * rng.gen_range(4.0..16.0);
    let destination = start + Vec2::new(heading.cos(), heading.sin()) * length;
    let horizon_t = travel_time(start, destination, speed, NormKind::Euclidean)? + 1;
    let delta = rng.gen_range(0..=6);
    let n = horizon_t + delta;
    let peer_start = start.lerp(destination, rng.gen_range(0.0..1.0))
        + Vec2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * speed * 10.0;
    let peer = PeerGenerator::BoundedRandomWalk {
        start: peer_start,
        max_step: speed * rng.gen_range(0.05..0.3),
        seed: rng.gen(),
    }
    .generate(n);
    let mu = 10f64.powf(rng.gen_range(-3.0..=0.0));
    let scenario = Scenario::new(start, vec![destination; n], peer, speed, horizon_t, delta, NormKind::Euclidean)?;
    let loss = LossSpec::huber(mu, speed)?.with_region_diameter(scenario.region_diameter);
    let gamma = min_gamma(&loss, scenario.region_diameter, speed);
    let cfg = OgdConfig { gamma, loss, schedule: LambdaSchedule::LinearDown, region: Region::Unbounded };
    Ok((scenario, cfg))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundCase {
    pub case: u64,
    pub horizon: usize,
    pub mu: f64,
    pub gamma: f64,
    pub assumptions_hold: bool,
    pub offline_regret: f64,
    pub theorem_bound: f64,
    pub epsilon_solver: f64,
    pub bound_satisfied: bool,
    pub iterate_gap_sq: f64,
    pub gap_bound: f64,
    pub gap_satisfied: bool,
}

pub fn evaluate_case(base_seed: u64, index: u64, settings: &SolverSettings) -> Result<BoundCase, SimError> {
    let (scenario, cfg) = random_case(base_seed, index)?;
    let assumptions = verify_assumptions(&cfg, scenario.region_diameter, scenario.speed);
    let report = evaluate_regret(&scenario, &cfg, settings)?.report;
    Ok(BoundCase {
        case: index,
        horizon: scenario.horizon(),
        mu: cfg.loss.mu,
        gamma: cfg.gamma,
        assumptions_hold: assumptions.all_hold(),
        offline_regret: report.offline_regret,
        theorem_bound: report.theorem_bound,
        epsilon_solver: report.epsilon_solver,
        bound_satisfied: report.bound_satisfied,
        iterate_gap_sq: report.iterate_gap_sq,
        gap_bound: report.gap_bound,
        gap_satisfied: report.gap_satisfied,
    })
}

/// Evaluates cases `0..cases` in parallel; the result is in case order.
pub fn run_suite(base_seed: u64, cases: u64, settings: &SolverSettings) -> Result<Vec<BoundCase>, SimError> {
    (0..cases).into_par_iter().map(|i| evaluate_case(base_seed, i, settings)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundsSummary {
    pub base_seed: u64,
    pub cases: usize,
    pub assumption_failures: usize,
    pub bound_failures: usize,
    pub gap_failures: usize,
    pub max_regret_to_bound: f64,
    pub max_gap_to_bound: f64,
}

impl BoundsSummary {
    pub fn new(base_seed: u64, cases: &[BoundCase]) -> Self {
        let ratio = |num: f64, den: f64| {
            if den > 0.0 {
                num / den
            } else if num > 0.0 {
                f64::INFINITY
            } else {
                0.0
            }
        };
        Self {
            base_seed,
            cases: cases.len(),
            assumption_failures: cases.iter().filter(|c| !c.assumptions_hold).count(),
            bound_failures: cases.iter().filter(|c| !c.bound_satisfied).count(),
            gap_failures: cases.iter().filter(|c| !c.gap_satisfied).count(),
            max_regret_to_bound: cases.iter().map(|c| ratio(c.offline_regret, c.theorem_bound)).fold(0.0, f64::max),
            max_gap_to_bound: cases.iter().map(|c| ratio(c.iterate_gap_sq, c.gap_bound)).fold(0.0, f64::max),
        }
    }

    pub fn all_satisfied(&self) -> bool {
        self.assumption_failures == 0 && self.bound_failures == 0 && self.gap_failures == 0
    }
}

pub fn bounds_csv(cases: &[BoundCase]) -> String {
    let mut out = String::from(BOUNDS_HEADER);
    out.push('\n');
    for c in cases {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            c.case,
            c.horizon,
            fmt_f64(c.mu),
            fmt_f64(c.gamma),
            fmt_f64(c.offline_regret),
            fmt_f64(c.theorem_bound),
            fmt_f64(c.epsilon_solver),
            c.bound_satisfied,
            fmt_f64(c.iterate_gap_sq),
            fmt_f64(c.gap_bound),
            c.gap_satisfied
        ));
    }
    out
}
