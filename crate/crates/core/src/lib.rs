//! Trajectory planning for a mobile user that keeps a device-to-device
//! link alive with a peer while heading for its own destination.
//!
//! The crate provides the geometry and rate model, a full-information
//! solver, a rolling-horizon planner, an online gradient planner and the
//! regret analytics that relate the online planner to its hindsight optimum.

mod chain;
pub mod error;
pub mod geometry;
pub mod loss;
pub mod mpc;
pub mod offline;
pub mod online;
pub mod rate;
pub mod regret;
pub mod scenario;

pub use error::{Error, Result};
pub use geometry::{
    check_velocity_feasible, diameter, direct_path, distance, distance_to_destination, first_velocity_violation,
    travel_time, NormKind, Trajectory, Vec2,
};
pub use loss::{huber_value, loss_grad, project_ball, LossKind, LossSpec, TimeVaryingLoss};
pub use mpc::{mpc_plan, mpc_run, reachability_check, MpcRunner, MpcState};
pub use offline::{
    kkt_residual, solve_benchmark, solve_cooperative, solve_tracking, BenchmarkProblem, CooperativeProblem,
    SolveReport, SolverSettings, TrackingProblem, UserPlan,
};
pub use online::{
    lambda_at, leading_path, leading_stream, min_gamma, ogd_run, ogd_step, verify_assumptions, AssumptionReport,
    LambdaSchedule, OgdConfig, OgdRun, Region,
};
pub use rate::{average_rate, rate, utility_rss, utility_snr, RateModel, RateSummary, DEFAULT_DISTANCE_SCALE};
pub use regret::{
    dynamic_regret, evaluate_regret, gap_bound, gap_bound_approximation, iterate_gap_check, offline_regret,
    squared_path_length, sublinearity_probe, theorem_bound, IterateGap, ProbeRow, RegretEvaluation, RegretReport,
};
pub use scenario::Scenario;
