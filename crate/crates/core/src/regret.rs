//! Regret and path-length analytics over completed runs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Trajectory, Vec2};
use crate::loss::TimeVaryingLoss;
use crate::offline::{solve_benchmark, BenchmarkProblem, SolveReport, SolverSettings};
use crate::online::{ogd_run, OgdConfig, OgdRun};
use crate::scenario::Scenario;

/// Sum of squared consecutive displacements.
pub fn squared_path_length(traj: &Trajectory) -> f64 {
    traj.steps().map(Vec2::norm_sq).sum()
}

pub fn offline_regret(loss: &TimeVaryingLoss, online: &Trajectory, benchmark: &Trajectory) -> Result<f64> {
    if online.slot_count() != benchmark.slot_count() {
        return Err(Error::LengthMismatch { expected: online.slot_count(), actual: benchmark.slot_count() });
    }
    let on = loss.per_slot(online)?;
    let off = loss.per_slot(benchmark)?;
    Ok(on.iter().zip(&off).map(|(a, b)| a - b).sum())
}

/// Regret against the per-slot minimisers. Both supported losses vanish at
/// the leading point, so this is the online cumulative loss.
pub fn dynamic_regret(loss: &TimeVaryingLoss, online: &Trajectory) -> Result<f64> {
    loss.cumulative(online)
}

fn contraction_denominator(mu: f64, gamma: f64) -> Result<f64> {
    if !(mu > 0.0 && gamma > 0.0) {
        return Err(Error::InvalidInput(format!("mu and gamma must be positive, got {mu} and {gamma}")));
    }
    if mu > gamma {
        return Err(Error::MuExceedsGamma { mu, gamma });
    }
    Ok(1.0 - (1.0 - mu / gamma).sqrt())
}

/// `S* / (1 - sqrt(1 - mu/gamma))`, the bound on the summed squared gap
/// between online and benchmark iterates.
pub fn gap_bound(s_star: f64, mu: f64, gamma: f64) -> Result<f64> {
    Ok(s_star / contraction_denominator(mu, gamma)?)
}

/// Regret bound `G * sqrt(T' * S* / (1 - sqrt(1 - mu/gamma)))`.
pub fn theorem_bound(grad_bound: f64, horizon: usize, s_star: f64, mu: f64, gamma: f64) -> Result<f64> {
    Ok(grad_bound * (horizon as f64 * gap_bound(s_star, mu, gamma)?).sqrt())
}

/// Small `mu/gamma` expansion of [`gap_bound`]: `(2 gamma / mu) * S*`.
pub fn gap_bound_approximation(s_star: f64, mu: f64, gamma: f64) -> f64 {
    2.0 * gamma / mu * s_star
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterateGap {
    pub gap_sq: f64,
    pub bound: f64,
    pub ok: bool,
}

/// Compares `sum |online(t) - benchmark(t)|^2` with [`gap_bound`] computed
/// from the benchmark's squared path length. `slack` absorbs the
/// benchmark's solver error.
pub fn iterate_gap_check(
    online: &Trajectory,
    benchmark: &Trajectory,
    mu: f64,
    gamma: f64,
    slack: f64,
) -> Result<IterateGap> {
    if online.slot_count() != benchmark.slot_count() {
        return Err(Error::LengthMismatch { expected: online.slot_count(), actual: benchmark.slot_count() });
    }
    let gap_sq = online.points().iter().zip(benchmark.points()).map(|(a, b)| (*a - *b).norm_sq()).sum();
    let bound = gap_bound(squared_path_length(benchmark), mu, gamma)?;
    Ok(IterateGap { gap_sq, bound, ok: gap_sq <= bound * (1.0 + 1e-6) + slack })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretReport {
    pub online_cumloss: f64,
    pub offline_cumloss: f64,
    pub offline_regret: f64,
    pub dynamic_regret: f64,
    pub s_star: f64,
    /// Squared path length of the online iterates.
    pub o_term: f64,
    pub iterate_gap_sq: f64,
    pub theorem_bound: f64,
    pub gap_bound: f64,
    pub gap_bound_approximation: f64,
    /// Slack for the benchmark being solved only to tolerance.
    pub epsilon_solver: f64,
    pub benchmark_kkt_residual: f64,
    pub bound_satisfied: bool,
    pub gap_satisfied: bool,
}

/// Online run, its benchmark, and the report relating them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretEvaluation {
    pub run: OgdRun,
    pub benchmark: SolveReport,
    pub report: RegretReport,
}

/// Runs the online planner, solves the hindsight benchmark on the same
/// leading points, and evaluates every regret quantity.
pub fn evaluate_regret(scenario: &Scenario, cfg: &OgdConfig, settings: &SolverSettings) -> Result<RegretEvaluation> {
    let run = ogd_run(scenario, cfg)?;
    let r = scenario.region_diameter;
    let spec = cfg.loss.with_region_diameter(r);
    let problem = BenchmarkProblem {
        start: scenario.start,
        leads: run.leads.clone(),
        speed: scenario.speed,
        loss: spec,
        norm: scenario.norm,
    };
    let benchmark = solve_benchmark(&problem, settings)?;
    let loss = TimeVaryingLoss::new(spec, run.leads.clone());
    let horizon = scenario.horizon();

    let online_cumloss = loss.cumulative(&run.trajectory)?;
    let offline_cumloss = benchmark.objective;
    let offline_regret = offline_regret(&loss, &run.trajectory, &benchmark.trajectory)?;
    let s_star = squared_path_length(&benchmark.trajectory);
    let epsilon_solver = benchmark.kkt_residual * r * (horizon as f64).sqrt();
    let grad_bound = spec.grad_bound.expect("region diameter was set");
    let theorem = theorem_bound(grad_bound, horizon, s_star, spec.mu, cfg.gamma)?;
    let gap = iterate_gap_check(&run.trajectory, &benchmark.trajectory, spec.mu, cfg.gamma, epsilon_solver)?;

    let report = RegretReport {
        online_cumloss,
        offline_cumloss,
        offline_regret,
        dynamic_regret: dynamic_regret(&loss, &run.trajectory)?,
        s_star,
        o_term: squared_path_length(&run.trajectory),
        iterate_gap_sq: gap.gap_sq,
        theorem_bound: theorem,
        gap_bound: gap.bound,
        gap_bound_approximation: gap_bound_approximation(s_star, spec.mu, cfg.gamma),
        epsilon_solver,
        benchmark_kkt_residual: benchmark.kkt_residual,
        bound_satisfied: offline_regret <= theorem * (1.0 + 1e-6) + epsilon_solver,
        gap_satisfied: gap.ok,
    };
    Ok(RegretEvaluation { run, benchmark, report })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeRow {
    pub horizon: usize,
    pub regret: f64,
    pub regret_per_slot: f64,
}

/// Offline regret and regret per slot for each horizon of a scenario family.
pub fn sublinearity_probe<F>(horizons: &[usize], family: F, settings: &SolverSettings) -> Result<Vec<ProbeRow>>
where
    F: Fn(usize) -> Result<(Scenario, OgdConfig)>,
{
    horizons
        .iter()
        .map(|&h| {
            let (scenario, cfg) = family(h)?;
            let eval = evaluate_regret(&scenario, &cfg, settings)?;
            let regret = eval.report.offline_regret;
            Ok(ProbeRow { horizon: scenario.horizon(), regret, regret_per_slot: regret / scenario.horizon() as f64 })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::direct_path;
    use crate::loss::LossSpec;
    use approx::assert_abs_diff_eq;

    #[test]
    fn path_length_examples() {
        assert_eq!(squared_path_length(&Trajectory::constant(Vec2::new(1.0, 1.0), 5).unwrap()), 0.0);
        let unit = Trajectory::new((0..5).map(|i| Vec2::new(0.0, i as f64)).collect()).unwrap();
        assert_eq!(squared_path_length(&unit), 4.0);
        let direct = direct_path(Vec2::ZERO, Vec2::new(4.0, 0.0), 5).unwrap();
        assert_eq!(squared_path_length(&direct), 4.0);
    }

    #[test]
    fn regret_of_identical_trajectories_is_zero() {
        let traj = direct_path(Vec2::ZERO, Vec2::new(4.0, 0.0), 5).unwrap();
        let loss = TimeVaryingLoss::new(LossSpec::squared(), vec![Vec2::new(1.0, 1.0); 5]);
        assert_eq!(offline_regret(&loss, &traj, &traj).unwrap(), 0.0);
        let on_leads = TimeVaryingLoss::new(LossSpec::squared(), traj.points().to_vec());
        assert_eq!(dynamic_regret(&on_leads, &traj).unwrap(), 0.0);
        let short = Trajectory::constant(Vec2::ZERO, 4).unwrap();
        assert!(offline_regret(&loss, &traj, &short).is_err());
    }

    #[test]
    fn bound_examples() {
        assert_eq!(theorem_bound(3.0, 10, 0.0, 0.1, 1.0).unwrap(), 0.0);
        assert_abs_diff_eq!(theorem_bound(3.0, 10, 2.5, 1.0, 1.0).unwrap(), 3.0 * 25f64.sqrt(), epsilon = 1e-12);
        assert_eq!(theorem_bound(1.0, 1, 1.0, 2.0, 1.0), Err(Error::MuExceedsGamma { mu: 2.0, gamma: 1.0 }));
        // mu = 1e-3, gamma = 1, S* = 4, T' = 25, R = 100, v = 1: G = 0.1 + 0.999.
        let g = LossSpec::huber(1e-3, 1.0).unwrap().with_region_diameter(100.0).grad_bound.unwrap();
        assert_abs_diff_eq!(g, 1.099, epsilon = 1e-12);
        assert_abs_diff_eq!(theorem_bound(g, 25, 4.0, 1e-3, 1.0).unwrap(), 491.426_286_277_967, epsilon = 1e-6);
    }

    #[test]
    fn approximation_tracks_exact_gap_bound_for_small_ratio() {
        let exact = gap_bound(1.0, 1e-6, 1.0).unwrap();
        assert!((exact / gap_bound_approximation(1.0, 1e-6, 1.0) - 1.0).abs() < 1e-5);
    }

    #[test]
    fn constant_lead_gap_check() {
        let lead = Vec2::new(3.0, 0.0);
        let scenario = Scenario::fixed(Vec2::ZERO, lead, lead, 1.0, 6, 0).unwrap();
        let spec = LossSpec::huber(0.5, 1.0).unwrap();
        let cfg = OgdConfig {
            gamma: crate::online::min_gamma(&spec, scenario.region_diameter, 1.0),
            loss: spec,
            schedule: Default::default(),
            region: Default::default(),
        };
        let eval = evaluate_regret(&scenario, &cfg, &SolverSettings::default()).unwrap();
        let r = &eval.report;
        assert!(r.offline_regret >= -r.epsilon_solver);
        assert!(r.offline_regret <= r.dynamic_regret);
        assert!(r.gap_satisfied && r.bound_satisfied);
        assert!(r.iterate_gap_sq.is_finite());
    }
}
