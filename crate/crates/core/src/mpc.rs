//! Rolling-horizon planner.
//!
//! Each slot the full remaining horizon is re-planned with the peer frozen at
//! its latest reported position and the destination at its latest value;
//! only the first planned step is executed.

use serde::{Deserialize, Serialize};

use crate::chain::ProjectionState;
use crate::error::{Error, Result};
use crate::geometry::{distance, NormKind, Trajectory, Vec2};
use crate::loss::{LossSpec, TimeVaryingLoss};
use crate::offline::{reachable, ChainProblem, SolveReport, SolverSettings};
use crate::scenario::Scenario;

/// True iff `dest` is within `remaining_slots` full-speed steps of `pos`.
pub fn reachability_check(pos: Vec2, dest: Vec2, speed: f64, remaining_slots: usize, norm: NormKind) -> bool {
    reachable(pos, dest, speed, remaining_slots, norm)
}

/// Positions already travelled, slots `1..=current_slot`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MpcState {
    committed: Vec<Vec2>,
    horizon: usize,
}

impl MpcState {
    pub fn new(start: Vec2, horizon: usize) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::InvalidInput("horizon must be at least one slot".into()));
        }
        if !start.is_finite() {
            return Err(Error::InvalidInput("start is not finite".into()));
        }
        Ok(Self { committed: vec![start], horizon })
    }

    pub fn current_slot(&self) -> usize {
        self.committed.len()
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn position(&self) -> Vec2 {
        *self.committed.last().expect("state always holds the start")
    }

    pub fn prefix(&self) -> &[Vec2] {
        &self.committed
    }

    pub fn remaining_slots(&self) -> usize {
        self.horizon - self.current_slot()
    }

    fn commit(&mut self, next: Vec2) {
        self.committed.push(next);
    }
}

fn check_reach(state: &MpcState, dest: Vec2, speed: f64, norm: NormKind) -> Result<()> {
    let remaining = state.remaining_slots();
    if reachability_check(state.position(), dest, speed, remaining, norm) {
        Ok(())
    } else {
        Err(Error::Infeasible {
            slot: state.current_slot(),
            distance: distance(state.position(), dest, norm),
            reach: speed * remaining as f64,
        })
    }
}

fn plan_with(
    state: &MpcState,
    peer_now: Vec2,
    dest_now: Vec2,
    speed: f64,
    norm: NormKind,
    settings: &SolverSettings,
    proj: &mut ProjectionState,
) -> Result<SolveReport> {
    if !(speed > 0.0 && speed.is_finite()) {
        return Err(Error::InvalidInput(format!("speed must be positive, got {speed}")));
    }
    check_reach(state, dest_now, speed, norm)?;
    let loss = TimeVaryingLoss::new(LossSpec::squared(), vec![peer_now; state.horizon]);
    if state.remaining_slots() == 0 {
        let trajectory = Trajectory::new(state.committed.clone())?;
        let objective = loss.cumulative(&trajectory)?;
        return Ok(SolveReport {
            trajectory,
            peer: None,
            objective,
            iterations: 0,
            kkt_residual: 0.0,
            converged: true,
        });
    }
    let problem = ChainProblem { prefix: &state.committed, terminal: Some(dest_now), loss: &loss, speed, norm };
    problem.solve(settings, None, proj)
}

/// Full-horizon plan from the current state. The prefix is kept, the last
/// slot is pinned to `dest_now`, and the free slots minimise the squared
/// distance to `peer_now`.
pub fn mpc_plan(
    state: &MpcState,
    peer_now: Vec2,
    dest_now: Vec2,
    speed: f64,
    norm: NormKind,
    settings: &SolverSettings,
) -> Result<Trajectory> {
    plan_with(state, peer_now, dest_now, speed, norm, settings, &mut ProjectionState::default()).map(|r| r.trajectory)
}

/// Slot-by-slot executor over a scenario's streams.
pub struct MpcRunner<'a> {
    scenario: &'a Scenario,
    settings: SolverSettings,
    state: MpcState,
    proj: ProjectionState,
}

impl<'a> MpcRunner<'a> {
    pub fn new(scenario: &'a Scenario, settings: SolverSettings) -> Result<Self> {
        scenario.validate()?;
        let state = MpcState::new(scenario.start, scenario.horizon())?;
        Ok(Self { scenario, settings, state, proj: ProjectionState::default() })
    }

    pub fn state(&self) -> &MpcState {
        &self.state
    }

    pub fn is_done(&self) -> bool {
        self.state.remaining_slots() == 0
    }

    /// Plans at the current slot and commits the first planned step.
    pub fn step(&mut self) -> Result<SolveReport> {
        let t = self.state.current_slot();
        let report = plan_with(
            &self.state,
            self.scenario.peer_at(t),
            self.scenario.destination_at(t),
            self.scenario.speed,
            self.scenario.norm,
            &self.settings,
            &mut self.proj,
        )?;
        if !self.is_done() {
            self.state.commit(report.trajectory.points()[t]);
            self.proj.drop_front(1);
        }
        Ok(report)
    }

    pub fn committed(&self) -> Result<Trajectory> {
        Trajectory::new(self.state.committed.clone())
    }
}

/// Runs the planner over the whole horizon.
///
/// The last slot only checks that the final destination reading coincides
/// with the committed end point.
pub fn mpc_run(scenario: &Scenario, settings: &SolverSettings) -> Result<(Trajectory, Vec<SolveReport>)> {
    let mut runner = MpcRunner::new(scenario, *settings)?;
    let mut reports = Vec::with_capacity(scenario.horizon());
    while !runner.is_done() {
        reports.push(runner.step()?);
    }
    check_reach(&runner.state, scenario.final_destination(), scenario.speed, scenario.norm)?;
    Ok((runner.committed()?, reports))
}
