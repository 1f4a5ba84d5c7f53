//! Full-information trajectory solvers.
//!
//! Every problem here is a smooth convex objective over one or two chains of
//! positions with per-step speed limits and pinned endpoints. They are all
//! solved by projected gradient descent with step `1/L`, where the projection
//! onto the chain constraints is computed by Dykstra's method
//! (see [`crate::chain`]). Squared losses have a constant Hessian, so the
//! first projected step already lands on the optimum; later iterations only
//! certify it.

use serde::{Deserialize, Serialize};

use crate::chain::{Chain, ProjectionState, TAUT_SLACK};
use crate::error::{Error, Result};
use crate::geometry::{
    check_velocity_feasible, direct_path, distance, first_velocity_violation, NormKind, Trajectory, Vec2,
};
use crate::loss::{LossSpec, TimeVaryingLoss};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverSettings {
    /// Stop once the projected-gradient residual drops to this value.
    pub tol: f64,
    pub max_iter: usize,
    /// Chain projection tolerance, relative to the per-slot speed.
    pub projection_tol: f64,
    pub projection_max_sweeps: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self { tol: 1e-6, max_iter: 100_000, projection_tol: 1e-11, projection_max_sweeps: 200_000 }
    }
}

impl SolverSettings {
    fn projection_abs_tol(&self, speed: f64) -> f64 {
        self.projection_tol * speed.max(1e-300)
    }
}

/// Outcome of one solve.
///
/// `peer` carries the second user's trajectory for the cooperative problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub trajectory: Trajectory,
    pub peer: Option<Trajectory>,
    pub objective: f64,
    pub iterations: usize,
    pub kkt_residual: f64,
    pub converged: bool,
}

/// One user of the cooperative problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UserPlan {
    pub start: Vec2,
    pub destination: Vec2,
    /// Length units per slot.
    pub speed: f64,
    /// `T_i + delta_i` positions, first pinned to `start`, last to `destination`.
    pub slots: usize,
}

/// Both users choose their trajectories jointly to minimise the summed
/// squared separation over the slots where both are still travelling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CooperativeProblem {
    pub first: UserPlan,
    pub second: UserPlan,
    pub norm: NormKind,
}

/// Single-user benchmark: start pinned, no terminal constraint, per-slot
/// tracking loss towards `leads`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkProblem {
    pub start: Vec2,
    pub leads: Vec<Vec2>,
    pub speed: f64,
    pub loss: LossSpec,
    pub norm: NormKind,
}

/// Single user with both ends pinned tracking a known peer stream under the
/// squared loss.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackingProblem {
    pub start: Vec2,
    pub destination: Vec2,
    pub peer: Vec<Vec2>,
    pub speed: f64,
    pub norm: NormKind,
}

/// True iff `to` can be reached from `from` in `steps` moves of at most `speed`.
pub(crate) fn reachable(from: Vec2, to: Vec2, speed: f64, steps: usize, norm: NormKind) -> bool {
    distance(from, to, norm) <= speed * steps as f64 * (1.0 + TAUT_SLACK)
}

/// Single-chain problem: a pinned prefix, free slots, an optional pinned
/// final slot, and a tracking loss over all `loss.horizon()` slots.
pub(crate) struct ChainProblem<'a> {
    pub prefix: &'a [Vec2],
    pub terminal: Option<Vec2>,
    pub loss: &'a TimeVaryingLoss,
    pub speed: f64,
    pub norm: NormKind,
}

impl ChainProblem<'_> {
    fn chain(&self) -> Chain {
        let horizon = self.loss.horizon();
        let pinned = self.prefix.len() + usize::from(self.terminal.is_some());
        Chain {
            anchor: *self.prefix.last().expect("prefix holds at least the start"),
            terminal: self.terminal,
            free: horizon.saturating_sub(pinned),
            radius: self.speed,
            norm: self.norm,
        }
    }

    fn assemble(&self, free: &[Vec2]) -> Result<Trajectory> {
        let mut pts = Vec::with_capacity(self.loss.horizon());
        pts.extend_from_slice(self.prefix);
        pts.extend_from_slice(free);
        pts.extend(self.terminal);
        Trajectory::new(pts)
    }

    /// Projected gradient descent over the free slots.
    pub fn solve(
        &self,
        settings: &SolverSettings,
        init: Option<Vec<Vec2>>,
        state: &mut ProjectionState,
    ) -> Result<SolveReport> {
        let horizon = self.loss.horizon();
        let pinned = self.prefix.len() + usize::from(self.terminal.is_some());
        if self.prefix.is_empty() || pinned > horizon {
            return Err(Error::InvalidInput(format!("{pinned} pinned slots do not fit a horizon of {horizon}")));
        }
        let chain = self.chain();
        let first_free = self.prefix.len() + 1;
        let step = 1.0 / self.loss.spec.lipschitz;
        let ptol = settings.projection_abs_tol(self.speed);

        let mut x = match init {
            Some(v) if v.len() == chain.free && chain.max_violation(&v) <= ptol => v,
            _ => chain.initial(),
        };
        let mut z = vec![Vec2::ZERO; chain.free];
        let mut iterations = 0;
        let mut residual = 0.0;
        let mut converged = chain.free == 0;
        while !converged && iterations < settings.max_iter {
            iterations += 1;
            for (i, zi) in z.iter_mut().enumerate() {
                *zi = x[i] - self.loss.grad_at(first_free + i, x[i]) * step;
            }
            let p = chain.project(&z, state, ptol, settings.projection_max_sweeps);
            residual = self.loss.spec.lipschitz * sq_gap(&x, &p.points).sqrt();
            if residual <= settings.tol {
                converged = true;
            } else {
                x = p.points;
            }
        }
        let trajectory = self.assemble(&x)?;
        let objective = self.loss.cumulative(&trajectory)?;
        Ok(SolveReport { trajectory, peer: None, objective, iterations, kkt_residual: residual, converged })
    }

    /// Residual `L * |x - P(x - grad/L)|` of a feasible candidate.
    pub fn residual(&self, free: &[Vec2], settings: &SolverSettings) -> f64 {
        let chain = self.chain();
        let first_free = self.prefix.len() + 1;
        let step = 1.0 / self.loss.spec.lipschitz;
        let z: Vec<Vec2> =
            free.iter().enumerate().map(|(i, x)| *x - self.loss.grad_at(first_free + i, *x) * step).collect();
        let p = chain.project(
            &z,
            &mut ProjectionState::default(),
            settings.projection_abs_tol(self.speed),
            settings.projection_max_sweeps,
        );
        self.loss.spec.lipschitz * sq_gap(free, &p.points).sqrt()
    }
}

fn sq_gap(a: &[Vec2], b: &[Vec2]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (*p - *q).norm_sq()).sum()
}

fn check_positive_speed(speed: f64) -> Result<()> {
    if speed > 0.0 && speed.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("speed must be positive, got {speed}")))
    }
}

impl BenchmarkProblem {
    fn tracking_loss(&self) -> TimeVaryingLoss {
        TimeVaryingLoss::new(self.loss, self.leads.clone())
    }

    fn validate(&self) -> Result<()> {
        check_positive_speed(self.speed)?;
        if self.leads.is_empty() {
            return Err(Error::InvalidInput("benchmark needs at least one lead point".into()));
        }
        if !self.start.is_finite() || self.leads.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidInput("benchmark points must be finite".into()));
        }
        Ok(())
    }
}

/// Best velocity-feasible trajectory in hindsight for a tracking loss with
/// the start pinned. This is the comparator of the offline regret.
pub fn solve_benchmark(p: &BenchmarkProblem, settings: &SolverSettings) -> Result<SolveReport> {
    p.validate()?;
    let loss = p.tracking_loss();
    let prefix = [p.start];
    let cp = ChainProblem { prefix: &prefix, terminal: None, loss: &loss, speed: p.speed, norm: p.norm };
    cp.solve(settings, None, &mut ProjectionState::default())
}

/// Both ends pinned, squared distance to a fully known peer stream.
pub fn solve_tracking(p: &TrackingProblem, settings: &SolverSettings) -> Result<SolveReport> {
    check_positive_speed(p.speed)?;
    let horizon = p.peer.len();
    if horizon == 0 {
        return Err(Error::EmptyTrajectory);
    }
    if !reachable(p.start, p.destination, p.speed, horizon - 1, p.norm) {
        return Err(Error::UnreachableDestination {
            user: 1,
            distance: distance(p.start, p.destination, p.norm),
            reach: p.speed * (horizon - 1) as f64,
        });
    }
    let loss = TimeVaryingLoss::new(LossSpec::squared(), p.peer.clone());
    if horizon == 1 {
        let trajectory = Trajectory::new(vec![p.start])?;
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
    let prefix = [p.start];
    let cp = ChainProblem { prefix: &prefix, terminal: Some(p.destination), loss: &loss, speed: p.speed, norm: p.norm };
    cp.solve(settings, None, &mut ProjectionState::default())
}

/// Residual of the benchmark problem at a feasible trajectory.
pub fn kkt_residual(traj: &Trajectory, p: &BenchmarkProblem, settings: &SolverSettings) -> Result<f64> {
    p.validate()?;
    if traj.slot_count() != p.leads.len() {
        return Err(Error::LengthMismatch { expected: p.leads.len(), actual: traj.slot_count() });
    }
    if traj.first() != p.start {
        return Err(Error::InvalidInput("trajectory does not start at the pinned start".into()));
    }
    let tol = settings.projection_abs_tol(p.speed) * 10.0;
    if let Some(step) = first_velocity_violation(traj, p.speed, p.norm, tol) {
        return Err(Error::InfeasibleTrajectory { step });
    }
    let loss = p.tracking_loss();
    let prefix = [p.start];
    let cp = ChainProblem { prefix: &prefix, terminal: None, loss: &loss, speed: p.speed, norm: p.norm };
    Ok(cp.residual(&traj.points()[1..], settings))
}

impl UserPlan {
    fn validate(&self, user: usize, norm: NormKind) -> Result<()> {
        check_positive_speed(self.speed)?;
        if self.slots == 0 {
            return Err(Error::InvalidInput(format!("user {user} needs at least one slot")));
        }
        if !reachable(self.start, self.destination, self.speed, self.slots - 1, norm)
            || (self.slots == 1 && self.start != self.destination)
        {
            return Err(Error::UnreachableDestination {
                user,
                distance: distance(self.start, self.destination, norm),
                reach: self.speed * (self.slots - 1) as f64,
            });
        }
        Ok(())
    }

    fn chain(&self, norm: NormKind) -> Chain {
        Chain {
            anchor: self.start,
            terminal: Some(self.destination),
            free: self.slots.saturating_sub(2),
            radius: self.speed,
            norm,
        }
    }

    fn assemble(&self, free: &[Vec2]) -> Vec<Vec2> {
        let mut pts = Vec::with_capacity(self.slots);
        pts.push(self.start);
        if self.slots > 1 {
            pts.extend_from_slice(free);
            pts.push(self.destination);
        }
        pts
    }
}

/// Moves from `from` straight towards `to` at full speed for `steps` slots,
/// stopping on arrival.
fn steer_toward(from: Vec2, to: Vec2, steps: usize, speed: f64, norm: NormKind) -> Vec<Vec2> {
    let total = distance(from, to, norm);
    (1..=steps)
        .map(|k| {
            let covered = speed * k as f64;
            if covered >= total {
                to
            } else {
                from.lerp(to, covered / total)
            }
        })
        .collect()
}

impl CooperativeProblem {
    fn validate(&self) -> Result<()> {
        self.first.validate(1, self.norm)?;
        self.second.validate(2, self.norm)
    }

    /// Slots on which the separation counts: both users still travelling.
    pub fn objective_horizon(&self) -> usize {
        self.first.slots.min(self.second.slots)
    }

    pub fn objective(&self, first: &Trajectory, second: &Trajectory) -> f64 {
        first
            .points()
            .iter()
            .zip(second.points())
            .take(self.objective_horizon())
            .map(|(a, b)| (*a - *b).norm_sq())
            .sum()
    }

    /// Midpoint step `x - grad/4` of the stacked objective, free slots only.
    fn gradient_step(&self, mine: &[Vec2], theirs: &[Vec2], plan: &UserPlan) -> Vec<Vec2> {
        let h = self.objective_horizon();
        (2..plan.slots)
            .map(|t| {
                let x = mine[t - 1];
                if t <= h {
                    (x + theirs[t - 1]) * 0.5
                } else {
                    x
                }
            })
            .collect()
    }

    fn residual_at(&self, a: &[Vec2], b: &[Vec2], settings: &SolverSettings) -> f64 {
        let za = self.gradient_step(a, b, &self.first);
        let zb = self.gradient_step(b, a, &self.second);
        let pa = self.first.chain(self.norm).project(
            &za,
            &mut ProjectionState::default(),
            settings.projection_abs_tol(self.first.speed),
            settings.projection_max_sweeps,
        );
        let pb = self.second.chain(self.norm).project(
            &zb,
            &mut ProjectionState::default(),
            settings.projection_abs_tol(self.second.speed),
            settings.projection_max_sweeps,
        );
        4.0 * (sq_gap(&a[1..a.len() - 1], &pa.points) + sq_gap(&b[1..b.len() - 1], &pb.points)).sqrt()
    }

    /// Projected-gradient residual of a feasible pair of trajectories.
    pub fn kkt_residual(&self, first: &Trajectory, second: &Trajectory, settings: &SolverSettings) -> Result<f64> {
        self.validate()?;
        for (user, (plan, traj)) in [(&self.first, first), (&self.second, second)].into_iter().enumerate() {
            if traj.slot_count() != plan.slots {
                return Err(Error::LengthMismatch { expected: plan.slots, actual: traj.slot_count() });
            }
            if traj.first() != plan.start || traj.last() != plan.destination {
                return Err(Error::InvalidInput(format!("user {} endpoints are not pinned", user + 1)));
            }
            let tol = settings.projection_abs_tol(plan.speed) * 10.0;
            if let Some(step) = first_velocity_violation(traj, plan.speed, self.norm, tol) {
                return Err(Error::InfeasibleTrajectory { step });
            }
        }
        Ok(self.residual_at(first.points(), second.points(), settings))
    }
}

/// Jointly optimal trajectories for two cooperating users.
///
/// Slots of the longer user after the shared horizon do not enter the
/// objective; they are filled by heading straight for the destination at
/// full speed.
pub fn solve_cooperative(p: &CooperativeProblem, settings: &SolverSettings) -> Result<SolveReport> {
    p.validate()?;
    let ca = p.first.chain(p.norm);
    let cb = p.second.chain(p.norm);
    let ta = settings.projection_abs_tol(p.first.speed);
    let tb = settings.projection_abs_tol(p.second.speed);
    let mut sa = ProjectionState::default();
    let mut sb = ProjectionState::default();

    let mut a = direct_path(p.first.start, p.first.destination, p.first.slots)?.into_points();
    let mut b = direct_path(p.second.start, p.second.destination, p.second.slots)?.into_points();
    let mut iterations = 0;
    let mut residual = 0.0;
    let mut converged = ca.free == 0 && cb.free == 0;
    while !converged && iterations < settings.max_iter {
        iterations += 1;
        let za = p.gradient_step(&a, &b, &p.first);
        let zb = p.gradient_step(&b, &a, &p.second);
        let pa = ca.project(&za, &mut sa, ta, settings.projection_max_sweeps);
        let pb = cb.project(&zb, &mut sb, tb, settings.projection_max_sweeps);
        let ga = sq_gap(&a[1..a.len() - 1], &pa.points);
        let gb = sq_gap(&b[1..b.len() - 1], &pb.points);
        residual = 4.0 * (ga + gb).sqrt();
        if residual <= settings.tol {
            converged = true;
        } else {
            a = p.first.assemble(&pa.points);
            b = p.second.assemble(&pb.points);
        }
    }

    let h = p.objective_horizon();
    for (plan, pts) in [(&p.first, &mut a), (&p.second, &mut b)] {
        if plan.slots > h {
            let tail = steer_toward(pts[h - 1], plan.destination, plan.slots - h, plan.speed, p.norm);
            pts.truncate(h);
            pts.extend(tail);
            let last = pts.len() - 1;
            pts[last] = plan.destination;
        }
    }
    let first = Trajectory::new(a)?;
    let second = Trajectory::new(b)?;
    debug_assert!(check_velocity_feasible(&first, p.first.speed, p.norm, 1e-6 * p.first.speed));
    let objective = p.objective(&first, &second);
    Ok(SolveReport { trajectory: first, peer: Some(second), objective, iterations, kkt_residual: residual, converged })
}
