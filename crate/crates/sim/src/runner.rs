//! Algorithm runners and the commands built on them.

use std::path::{Path, PathBuf};

use d2d_traj::{
    direct_path, evaluate_regret, min_gamma, mpc_run, solve_cooperative, solve_tracking, CooperativeProblem, LossSpec,
    OgdConfig, Region, RegretReport, Scenario, TimeVaryingLoss, TrackingProblem, Trajectory, UserPlan, Vec2,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::{bounds_csv, run_suite, BoundCase, BoundsSummary};
use crate::config::{Mode, ScenarioFile};
use crate::error::SimError;
use crate::report::{
    pad, rate_sweep_csv, records_csv, terminal_sweep_csv, trajectories_csv, Algorithm, RateContext, RunInput,
    RunReport, SweepRow,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Offline,
    Mpc,
    Ogd,
    Compare,
    SweepDelta,
    VerifyBounds,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Offline => "offline",
            Command::Mpc => "mpc",
            Command::Ogd => "ogd",
            Command::Compare => "compare",
            Command::SweepDelta => "sweep-delta",
            Command::VerifyBounds => "verify-bounds",
        }
    }
}

fn rate_context(file: &ScenarioFile) -> Result<RateContext, SimError> {
    Ok(RateContext {
        model: file.rate_model()?,
        min_distance: file.min_distance_units,
        slot_duration_s: file.slot_duration_s,
    })
}

fn squared_gaps(a: &[Vec2], b: &[Vec2]) -> Vec<f64> {
    a.iter().zip(b).map(|(p, q)| (*p - *q).norm_sq()).collect()
}

fn single_only(file: &ScenarioFile, what: &str) -> Result<(), SimError> {
    if file.mode == Mode::Single {
        Ok(())
    } else {
        Err(SimError::Validation { key: "mode".into(), message: format!("{what} needs mode = \"single\"") })
    }
}

/// Both users on their straight lines with no excess delay.
pub fn run_direct(file: &ScenarioFile) -> Result<RunReport, SimError> {
    let ctx = rate_context(file)?;
    match file.mode {
        Mode::Single => {
            let scenario = file.scenario_with_delay(0)?;
            let n = scenario.horizon();
            let dest = scenario.final_destination();
            let user = direct_path(scenario.start, dest, n)?;
            let losses = squared_gaps(user.points(), &scenario.peer_stream);
            RunReport::build(
                RunInput {
                    algorithm: Algorithm::Direct,
                    excess_delay: 0,
                    user: &user,
                    other: &scenario.peer_stream,
                    destinations: &scenario.destination_stream,
                    lambdas: None,
                    losses: &losses,
                    final_destination: dest,
                    norm: scenario.norm,
                    speed_checks: vec![(&user, scenario.speed)],
                },
                &ctx,
            )
        }
        Mode::Cooperative => {
            let (one, two) = (file.user_one()?, file.user_two()?);
            let a = direct_path(one.start, one.destination, one.horizon_t)?;
            let b = direct_path(two.start, two.destination, two.horizon_t)?;
            cooperative_report(file, Algorithm::Direct, 0, &a, &b, &ctx)
        }
    }
}

fn cooperative_report(
    file: &ScenarioFile,
    algorithm: Algorithm,
    delta: usize,
    first: &Trajectory,
    second: &Trajectory,
    ctx: &RateContext,
) -> Result<RunReport, SimError> {
    let (one, two) = (file.user_one()?, file.user_two()?);
    let n = first.slot_count().max(second.slot_count());
    let user = Trajectory::new(pad(first.points(), n))?;
    let other = pad(second.points(), n);
    let losses = squared_gaps(user.points(), &other);
    RunReport::build(
        RunInput {
            algorithm,
            excess_delay: delta,
            user: &user,
            other: &other,
            destinations: &vec![one.destination; n],
            lambdas: None,
            losses: &losses,
            final_destination: one.destination,
            norm: file.norm,
            speed_checks: vec![(first, one.speed), (second, two.speed)],
        },
        ctx,
    )
}

fn single_report(
    scenario: &Scenario,
    algorithm: Algorithm,
    user: &Trajectory,
    lambdas: Option<&[f64]>,
    losses: &[f64],
    ctx: &RateContext,
) -> Result<RunReport, SimError> {
    RunReport::build(
        RunInput {
            algorithm,
            excess_delay: scenario.excess_delay,
            user,
            other: &scenario.peer_stream,
            destinations: &scenario.destination_stream,
            lambdas,
            losses,
            final_destination: scenario.final_destination(),
            norm: scenario.norm,
            speed_checks: vec![(user, scenario.speed)],
        },
        ctx,
    )
}

/// Full-information solve with excess delay `delta`.
pub fn run_offline(file: &ScenarioFile, delta: usize) -> Result<RunReport, SimError> {
    let ctx = rate_context(file)?;
    let settings = file.solver_settings();
    match file.mode {
        Mode::Single => {
            let scenario = file.scenario_with_delay(delta)?;
            let problem = TrackingProblem {
                start: scenario.start,
                destination: scenario.final_destination(),
                peer: scenario.peer_stream.clone(),
                speed: scenario.speed,
                norm: scenario.norm,
            };
            let solved = solve_tracking(&problem, &settings)?;
            let losses = squared_gaps(solved.trajectory.points(), &scenario.peer_stream);
            single_report(&scenario, Algorithm::Offline, &solved.trajectory, None, &losses, &ctx)
        }
        Mode::Cooperative => {
            let file = file.with_delay(delta);
            let (one, two) = (file.user_one()?, file.user_two()?);
            let plan = |u: crate::config::UserGeometry| UserPlan {
                start: u.start,
                destination: u.destination,
                speed: u.speed,
                slots: u.slots(),
            };
            let problem = CooperativeProblem { first: plan(one), second: plan(two), norm: file.norm };
            let solved = solve_cooperative(&problem, &settings)?;
            let second = solved.peer.as_ref().expect("cooperative solves return both users");
            cooperative_report(&file, Algorithm::Offline, delta, &solved.trajectory, second, &ctx)
        }
    }
}

pub fn run_mpc(file: &ScenarioFile, delta: usize) -> Result<RunReport, SimError> {
    single_only(file, "the rolling-horizon planner")?;
    let ctx = rate_context(file)?;
    let scenario = file.scenario_with_delay(delta)?;
    let (trajectory, _) = mpc_run(&scenario, &file.solver_settings())?;
    let losses = squared_gaps(trajectory.points(), &scenario.peer_stream);
    single_report(&scenario, Algorithm::Mpc, &trajectory, None, &losses, &ctx)
}

fn region_diameter(region: &Region) -> f64 {
    match region {
        Region::Unbounded => 0.0,
        Region::Box { min, max } => (*max - *min).norm(),
        Region::Disk { radius, .. } => 2.0 * radius,
    }
}

/// Scenario and online configuration for excess delay `delta`. A bounded
/// region widens the diameter used for the constants.
pub fn ogd_setup(file: &ScenarioFile, delta: usize) -> Result<(Scenario, OgdConfig), SimError> {
    single_only(file, "the online planner")?;
    let region = file.region()?;
    let mut scenario = file.scenario_with_delay(delta)?;
    let r = scenario.region_diameter.max(region_diameter(&region));
    scenario = scenario.with_region_diameter(r)?;
    let loss: LossSpec = file.loss_spec(scenario.speed)?.with_region_diameter(r);
    let gamma = file.gamma.unwrap_or_else(|| min_gamma(&loss, r, scenario.speed));
    Ok((scenario, OgdConfig { gamma, loss, schedule: file.schedule(), region }))
}

/// Online run together with its regret against the hindsight benchmark.
pub fn run_ogd(file: &ScenarioFile, delta: usize) -> Result<(RunReport, RegretReport), SimError> {
    let ctx = rate_context(file)?;
    let (scenario, cfg) = ogd_setup(file, delta)?;
    let eval = evaluate_regret(&scenario, &cfg, &file.solver_settings())?;
    let loss = TimeVaryingLoss::new(cfg.loss, eval.run.leads.clone());
    let losses = loss.per_slot(&eval.run.trajectory)?;
    let report =
        single_report(&scenario, Algorithm::Ogd, &eval.run.trajectory, Some(&eval.run.lambdas), &losses, &ctx)?;
    Ok((report, eval.report))
}

/// Runs for one value of the excess delay.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DelayRuns {
    pub delta: usize,
    pub runs: Vec<RunReport>,
    pub regret: Option<RegretReport>,
}

fn runs_at(file: &ScenarioFile, delta: usize) -> Result<DelayRuns, SimError> {
    let mut runs = vec![run_offline(file, delta)?];
    let mut regret = None;
    if file.mode == Mode::Single {
        runs.push(run_mpc(file, delta)?);
        let (ogd, r) = run_ogd(file, delta)?;
        runs.push(ogd);
        regret = Some(r);
    }
    Ok(DelayRuns { delta, runs, regret })
}

fn sweep_rows(direct: &RunReport, sweep: &[DelayRuns]) -> Vec<SweepRow> {
    sweep
        .iter()
        .map(|d| {
            let find = |a: Algorithm| d.runs.iter().find(|r| r.summary.algorithm == a).map(|r| &r.summary);
            SweepRow {
                delta: d.delta,
                direct_bps: direct.summary.average_rate_bps,
                offline_bps: find(Algorithm::Offline).map(|s| s.average_rate_bps),
                mpc_bps: find(Algorithm::Mpc).map(|s| s.average_rate_bps),
                ogd_bps: find(Algorithm::Ogd).map(|s| s.average_rate_bps),
                offline_terminal: find(Algorithm::Offline).map(|s| s.terminal_distance),
                mpc_terminal: find(Algorithm::Mpc).map(|s| s.terminal_distance),
                ogd_terminal: find(Algorithm::Ogd).map(|s| s.terminal_distance),
            }
        })
        .collect()
}

/// Everything a command produced, before it is written out.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunOutput {
    pub command: Command,
    pub version: &'static str,
    pub seed: u64,
    pub config: Option<ScenarioFile>,
    /// Runs at the file's own excess delay (for `sweep-delta`, only the
    /// direct baseline).
    pub runs: Vec<RunReport>,
    pub regret: Option<RegretReport>,
    pub sweep: Vec<DelayRuns>,
    pub sweep_rows: Vec<SweepRow>,
    pub bound_cases: Vec<BoundCase>,
    pub bounds: Option<BoundsSummary>,
}

impl RunOutput {
    fn new(command: Command, seed: u64, config: Option<ScenarioFile>) -> Self {
        Self {
            command,
            version: env!("CARGO_PKG_VERSION"),
            seed,
            config,
            runs: Vec::new(),
            regret: None,
            sweep: Vec::new(),
            sweep_rows: Vec::new(),
            bound_cases: Vec::new(),
            bounds: None,
        }
    }

    pub fn run(&self, algorithm: Algorithm) -> Option<&RunReport> {
        self.runs.iter().find(|r| r.summary.algorithm == algorithm)
    }

    /// Every trajectory-bearing report, sweep runs included.
    pub fn all_runs(&self) -> impl Iterator<Item = &RunReport> {
        self.runs.iter().chain(self.sweep.iter().flat_map(|d| d.runs.iter()))
    }
}

/// Executes a scenario command. The file's seed has already been applied.
pub fn execute(command: Command, file: &ScenarioFile) -> Result<RunOutput, SimError> {
    let delta = file.excess_delay_slots;
    let mut out = RunOutput::new(command, file.seed, Some(file.clone()));
    match command {
        Command::Offline => out.runs.push(run_offline(file, delta)?),
        Command::Mpc => out.runs.push(run_mpc(file, delta)?),
        Command::Ogd => {
            let (run, regret) = run_ogd(file, delta)?;
            out.runs.push(run);
            out.regret = Some(regret);
        }
        Command::Compare => {
            out.runs.push(run_direct(file)?);
            let at = runs_at(file, delta)?;
            out.runs.extend(at.runs);
            out.regret = at.regret;
        }
        Command::SweepDelta => {
            let direct = run_direct(file)?;
            let sweep = file.delta_sweep.par_iter().map(|&d| runs_at(file, d)).collect::<Result<Vec<_>, _>>()?;
            out.sweep_rows = sweep_rows(&direct, &sweep);
            out.runs.push(direct);
            out.sweep = sweep;
        }
        Command::VerifyBounds => {
            return Err(SimError::Validation {
                key: "command".into(),
                message: "verify-bounds does not take a scenario".into(),
            })
        }
    }
    Ok(out)
}

/// Runs the randomised bound suite.
pub fn verify_bounds(seed: u64, cases: u64, file: Option<&ScenarioFile>) -> Result<RunOutput, SimError> {
    let settings = file.map(|f| f.solver_settings()).unwrap_or_default();
    let mut out = RunOutput::new(Command::VerifyBounds, seed, file.cloned());
    out.bound_cases = run_suite(seed, cases, &settings)?;
    out.bounds = Some(BoundsSummary::new(seed, &out.bound_cases));
    Ok(out)
}

#[derive(Serialize)]
struct SummaryFile<'a> {
    command: &'a str,
    version: &'a str,
    seed: u64,
    config: &'a Option<ScenarioFile>,
    runs: Vec<&'a crate::report::RunSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    regret: &'a Option<RegretReport>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    sweep: &'a Vec<SweepRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    bounds: &'a Option<BoundsSummary>,
}

/// The structured summary as pretty-printed JSON.
pub fn summary_json(out: &RunOutput) -> Result<String, SimError> {
    let file = SummaryFile {
        command: out.command.name(),
        version: out.version,
        seed: out.seed,
        config: &out.config,
        runs: out.all_runs().map(|r| &r.summary).collect(),
        regret: &out.regret,
        sweep: &out.sweep_rows,
        bounds: &out.bounds,
    };
    let mut text = serde_json::to_string_pretty(&file).map_err(|e| SimError::Io(e.to_string()))?;
    text.push('\n');
    Ok(text)
}

fn write(path: PathBuf, text: &str, written: &mut Vec<PathBuf>) -> Result<(), SimError> {
    std::fs::write(&path, text).map_err(|e| SimError::Io(format!("{}: {e}", path.display())))?;
    written.push(path);
    Ok(())
}

/// Writes every output file of a command under `dir` and returns their paths.
pub fn write_output(out: &RunOutput, dir: &Path) -> Result<Vec<PathBuf>, SimError> {
    std::fs::create_dir_all(dir).map_err(|e| SimError::Io(format!("{}: {e}", dir.display())))?;
    let mut written = Vec::new();
    for run in &out.runs {
        write(dir.join(format!("{}.csv", run.summary.algorithm.name())), &records_csv(&run.records), &mut written)?;
    }
    for d in &out.sweep {
        let sub = dir.join(format!("delta_{}", d.delta));
        std::fs::create_dir_all(&sub).map_err(|e| SimError::Io(format!("{}: {e}", sub.display())))?;
        for run in &d.runs {
            write(sub.join(format!("{}.csv", run.summary.algorithm.name())), &records_csv(&run.records), &mut written)?;
        }
    }
    if !out.sweep.is_empty() {
        write(dir.join("rate_vs_delta.csv"), &rate_sweep_csv(&out.sweep_rows), &mut written)?;
        write(dir.join("terminal_distance_vs_delta.csv"), &terminal_sweep_csv(&out.sweep_rows), &mut written)?;
    }
    if !out.bound_cases.is_empty() {
        write(dir.join("bounds.csv"), &bounds_csv(&out.bound_cases), &mut written)?;
    }
    if out.all_runs().next().is_some() {
        write(dir.join("trajectories.csv"), &trajectories_csv(out.all_runs()), &mut written)?;
    }
    write(dir.join("summary.json"), &summary_json(out)?, &mut written)?;
    Ok(written)
}
