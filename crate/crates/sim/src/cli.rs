//! Command-line front end.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use crate::presets::Preset;
use crate::runner::{execute, verify_bounds, write_output, Command};
use crate::{ScenarioFile, SimError};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "d2d-sim", version, about = "Plan and compare device-to-device user trajectories")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Full-information solve with the peer stream known in advance.
    Offline(Common),
    /// Rolling-horizon planner.
    Mpc(Common),
    /// Online gradient planner with its regret report.
    Ogd(Common),
    /// Direct path, offline, rolling-horizon and online runs on the same streams.
    Compare(Common),
    /// Every applicable planner for each excess delay in `delta_sweep`.
    SweepDelta(Common),
    /// Randomised check of the regret and iterate-gap bounds.
    VerifyBounds(BoundsArgs),
}

#[derive(Args)]
struct Common {
    /// Scenario file (TOML).
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    scenario: Option<PathBuf>,
    /// Bundled scenario.
    #[arg(long, value_enum)]
    preset: Option<Preset>,
    /// Overrides the scenario's RNG seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; defaults to the scenario's `out_dir`, then `out`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BoundsArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    cases: u64,
    /// Solver settings are taken from this file when given.
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

fn load(common: &Common) -> Result<ScenarioFile, SimError> {
    let mut file = match (&common.scenario, common.preset) {
        (Some(path), _) => ScenarioFile::load(path)?,
        (None, Some(preset)) => preset.load()?,
        (None, None) => unreachable!("clap requires one of the two"),
    };
    if let Some(seed) = common.seed {
        file.seed = seed;
    }
    Ok(file)
}

fn run(cli: Cli, stdout: &mut dyn Write) -> Result<(), SimError> {
    let (command, common) = match cli.command {
        Cmd::Offline(c) => (Command::Offline, c),
        Cmd::Mpc(c) => (Command::Mpc, c),
        Cmd::Ogd(c) => (Command::Ogd, c),
        Cmd::Compare(c) => (Command::Compare, c),
        Cmd::SweepDelta(c) => (Command::SweepDelta, c),
        Cmd::VerifyBounds(args) => {
            let file = args.scenario.as_deref().map(ScenarioFile::load).transpose()?;
            let out = verify_bounds(args.seed, args.cases, file.as_ref())?;
            write_output(&out, &args.out)?;
            let summary = out.bounds.expect("suite always summarises");
            writeln!(
                stdout,
                "{} cases: {} regret-bound failures, {} iterate-gap failures",
                summary.cases, summary.bound_failures, summary.gap_failures
            )?;
            if !summary.all_satisfied() {
                return Err(SimError::BoundFailure(format!(
                    "{} of {} cases violate a bound",
                    out.bound_cases
                        .iter()
                        .filter(|c| !(c.bound_satisfied && c.gap_satisfied && c.assumptions_hold))
                        .count(),
                    summary.cases
                )));
            }
            return Ok(());
        }
    };
    let file = load(&common)?;
    let dir =
        common.out.clone().or_else(|| file.out_dir.clone().map(PathBuf::from)).unwrap_or_else(|| PathBuf::from("out"));
    let out = execute(command, &file)?;
    for run in out.all_runs() {
        let s = &run.summary;
        writeln!(
            stdout,
            "{:<8} delta {:>2}  avg rate {:>10.4} Mbps  terminal distance {:.6}",
            s.algorithm.name(),
            s.excess_delay,
            s.average_rate_bps / 1e6,
            s.terminal_distance
        )?;
    }
    for path in write_output(&out, &dir)? {
        writeln!(stdout, "wrote {}", path.display())?;
    }
    Ok(())
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit status. Diagnostics go to stderr.
pub fn run_from<I, T>(args: I, stdout: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(cli, stdout) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
