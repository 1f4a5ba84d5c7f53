//! Per-slot records, run summaries and their text forms.

use std::fmt::Write as _;

use d2d_traj::{check_velocity_feasible, rate, NormKind, RateModel, Trajectory, Vec2};
use serde::{Deserialize, Serialize};

use crate::error::SimError;

/// Column order of every per-slot CSV file.
pub const RECORD_HEADER: &str = "t,x1_x,x1_y,x2_x,x2_y,d_x,d_y,lambda,dist,loss,rate_bps";
pub const TRAJECTORY_HEADER: &str = "delta,algorithm,t,x1_x,x1_y,x2_x,x2_y";
pub const RATE_SWEEP_HEADER: &str = "delta,direct_bps,offline_bps,mpc_bps,ogd_bps";
pub const TERMINAL_SWEEP_HEADER: &str = "delta,offline,mpc,ogd";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Direct,
    Offline,
    Mpc,
    Ogd,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Direct => "direct",
            Algorithm::Offline => "offline",
            Algorithm::Mpc => "mpc",
            Algorithm::Ogd => "ogd",
        }
    }
}

/// Rate evaluation settings shared by every run of a scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateContext {
    pub model: RateModel,
    /// Separations below this are clamped before evaluating the rate.
    pub min_distance: f64,
    pub slot_duration_s: f64,
}

impl RateContext {
    pub fn rate_at(&self, dist: f64) -> Result<f64, SimError> {
        Ok(rate(dist.max(self.min_distance), &self.model)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlotRecord {
    pub t: usize,
    pub x1: Vec2,
    pub x2: Vec2,
    pub destination: Vec2,
    pub lambda: Option<f64>,
    pub dist: f64,
    pub loss: f64,
    pub rate_bps: f64,
}

/// Aggregates of one run; every field except the feasibility flag can be
/// recomputed from the records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub algorithm: Algorithm,
    pub excess_delay: usize,
    pub slots: usize,
    pub average_rate_bps: f64,
    pub downloaded_bits: f64,
    pub terminal_distance: f64,
    pub cumulative_loss: f64,
    pub velocity_feasible: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub summary: RunSummary,
    pub records: Vec<SlotRecord>,
}

/// Everything needed to turn one planned trajectory into a report.
pub struct RunInput<'a> {
    pub algorithm: Algorithm,
    pub excess_delay: usize,
    pub user: &'a Trajectory,
    /// Peer positions, or the second user's trajectory.
    pub other: &'a [Vec2],
    pub destinations: &'a [Vec2],
    pub lambdas: Option<&'a [f64]>,
    pub losses: &'a [f64],
    pub final_destination: Vec2,
    pub norm: NormKind,
    /// Trajectories that must respect a speed limit, with that limit.
    pub speed_checks: Vec<(&'a Trajectory, f64)>,
}

/// Repeats the last point until `n` points are present.
pub fn pad(points: &[Vec2], n: usize) -> Vec<Vec2> {
    let mut out = points.to_vec();
    if let Some(&last) = points.last() {
        out.resize(n.max(points.len()), last);
    }
    out
}

impl RunReport {
    pub fn build(input: RunInput<'_>, ctx: &RateContext) -> Result<Self, SimError> {
        let points = input.user.points();
        let n = points.len();
        let other = pad(input.other, n);
        let dest = pad(input.destinations, n);
        let losses = input.losses;
        if losses.len() != n {
            return Err(d2d_traj::Error::LengthMismatch { expected: n, actual: losses.len() }.into());
        }
        let mut records = Vec::with_capacity(n);
        for t in 0..n {
            let dist = (points[t] - other[t]).norm();
            records.push(SlotRecord {
                t: t + 1,
                x1: points[t],
                x2: other[t],
                destination: dest[t],
                lambda: input.lambdas.map(|l| l[t]),
                dist,
                loss: losses[t],
                rate_bps: ctx.rate_at(dist)?,
            });
        }
        let total: f64 = records.iter().map(|r| r.rate_bps).sum();
        let velocity_feasible = input
            .speed_checks
            .iter()
            .all(|(traj, speed)| check_velocity_feasible(traj, *speed, input.norm, 1e-6 * speed));
        let summary = RunSummary {
            algorithm: input.algorithm,
            excess_delay: input.excess_delay,
            slots: n,
            average_rate_bps: total / n as f64,
            downloaded_bits: total * ctx.slot_duration_s,
            terminal_distance: input.norm.length(input.user.last() - input.final_destination),
            cumulative_loss: losses.iter().sum(),
            velocity_feasible,
        };
        Ok(Self { summary, records })
    }
}

/// Fixed-width scientific notation with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else {
        format!("{x:.16e}")
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    fmt_f64(x.unwrap_or(f64::NAN))
}

pub fn records_csv(records: &[SlotRecord]) -> String {
    let mut out = String::from(RECORD_HEADER);
    out.push('\n');
    for r in records {
        let cells = [
            r.x1.x,
            r.x1.y,
            r.x2.x,
            r.x2.y,
            r.destination.x,
            r.destination.y,
            r.lambda.unwrap_or(f64::NAN),
            r.dist,
            r.loss,
            r.rate_bps,
        ];
        let _ = write!(out, "{}", r.t);
        for c in cells {
            let _ = write!(out, ",{}", fmt_f64(c));
        }
        out.push('\n');
    }
    out
}

/// Long-format trajectory overlay: one row per run and slot.
pub fn trajectories_csv<'a>(runs: impl IntoIterator<Item = &'a RunReport>) -> String {
    let mut out = String::from(TRAJECTORY_HEADER);
    out.push('\n');
    for run in runs {
        for r in &run.records {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                run.summary.excess_delay,
                run.summary.algorithm.name(),
                r.t,
                fmt_f64(r.x1.x),
                fmt_f64(r.x1.y),
                fmt_f64(r.x2.x),
                fmt_f64(r.x2.y)
            );
        }
    }
    out
}

/// Per-delay averages of one sweep. Algorithms that do not apply to the
/// scenario are left empty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub delta: usize,
    pub direct_bps: f64,
    pub offline_bps: Option<f64>,
    pub mpc_bps: Option<f64>,
    pub ogd_bps: Option<f64>,
    pub offline_terminal: Option<f64>,
    pub mpc_terminal: Option<f64>,
    pub ogd_terminal: Option<f64>,
}

pub fn rate_sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(RATE_SWEEP_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.delta,
            fmt_f64(r.direct_bps),
            fmt_opt(r.offline_bps),
            fmt_opt(r.mpc_bps),
            fmt_opt(r.ogd_bps)
        );
    }
    out
}

pub fn terminal_sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(TERMINAL_SWEEP_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            r.delta,
            fmt_opt(r.offline_terminal),
            fmt_opt(r.mpc_terminal),
            fmt_opt(r.ogd_terminal)
        );
    }
    out
}
