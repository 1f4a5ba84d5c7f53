//! Scenario-driven front end for the `d2d_traj` planners: scenario files,
//! exogenous streams, runners and report files.

pub mod bounds;
pub mod cli;
pub mod config;
pub mod error;
pub mod peer;
pub mod presets;
pub mod report;
pub mod runner;

pub use config::{Mode, ScenarioFile};
pub use error::SimError;
pub use peer::PeerGenerator;
pub use presets::Preset;
pub use report::{Algorithm, RunReport, RunSummary, SlotRecord, SweepRow};
pub use runner::{execute, summary_json, verify_bounds, write_output, Command, RunOutput};
