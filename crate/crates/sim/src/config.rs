//! Scenario files.
//!
//! A scenario file is flat TOML. Physical quantities carry their unit in the
//! key name. Unknown keys are rejected so typos surface as errors instead of
//! silently falling back to defaults.

use std::path::Path;

use d2d_traj::{
    travel_time, LambdaSchedule, LossSpec, NormKind, RateModel, Region, Scenario, SolverSettings, Vec2,
    DEFAULT_DISTANCE_SCALE,
};
use serde::{Deserialize, Serialize};

use crate::error::SimError;
use crate::peer::PeerGenerator;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// One planning user and an exogenous peer.
    #[default]
    Single,
    /// Two users planned jointly by the offline solver.
    Cooperative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PeerKind {
    #[default]
    Static,
    Linear,
    Waypoints,
    RandomWalk,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossChoice {
    #[default]
    Huber,
    Squared,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleChoice {
    #[default]
    LinearDown,
    LinearUp,
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegionChoice {
    #[default]
    None,
    Box,
    Disk,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DestinationChange {
    pub slot: usize,
    pub x: f64,
    pub y: f64,
}

/// Parsed scenario file with defaults filled in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default)]
    pub mode: Mode,
    /// Direct-path slot count `T`. Derived from the travel time when absent.
    pub horizon_slots: Option<usize>,
    #[serde(default)]
    pub excess_delay_slots: usize,
    /// Derived as `|start - destination| / (T - 1)` when absent.
    pub speed_units_per_slot: Option<f64>,
    #[serde(default)]
    pub norm: NormKind,
    pub start: [f64; 2],
    pub destination: [f64; 2],
    #[serde(default)]
    pub destination_changes: Vec<DestinationChange>,

    #[serde(default)]
    pub peer_kind: PeerKind,
    pub peer_start: Option<[f64; 2]>,
    pub peer_velocity_units_per_slot: Option<[f64; 2]>,
    pub peer_waypoints: Option<Vec<[f64; 2]>>,
    pub peer_speed_units_per_slot: Option<f64>,
    pub peer_max_step_units: Option<f64>,

    pub user2_start: Option<[f64; 2]>,
    pub user2_destination: Option<[f64; 2]>,
    pub user2_horizon_slots: Option<usize>,
    pub user2_excess_delay_slots: Option<usize>,
    pub user2_speed_units_per_slot: Option<f64>,

    #[serde(default = "defaults::bandwidth")]
    pub bandwidth_hz: f64,
    #[serde(default = "defaults::alpha")]
    pub path_loss_exponent: f64,
    #[serde(default = "defaults::sigma2")]
    pub noise_power_scaled: f64,
    #[serde(default = "defaults::distance_scale")]
    pub distance_scale_units: f64,
    #[serde(default = "defaults::min_distance")]
    pub min_distance_units: f64,
    #[serde(default = "defaults::slot_duration")]
    pub slot_duration_s: f64,

    #[serde(default)]
    pub loss: LossChoice,
    #[serde(default = "defaults::huber_mu")]
    pub huber_mu: f64,
    /// Learning-rate denominator; the smallest admissible value when absent.
    pub gamma: Option<f64>,
    #[serde(default)]
    pub lambda_schedule: ScheduleChoice,
    pub lambda_values: Option<Vec<f64>>,

    #[serde(default)]
    pub region: RegionChoice,
    pub region_min: Option<[f64; 2]>,
    pub region_max: Option<[f64; 2]>,
    pub region_center: Option<[f64; 2]>,
    pub region_radius_units: Option<f64>,

    #[serde(default)]
    pub seed: u64,
    #[serde(default = "defaults::solver_tol")]
    pub solver_tol: f64,
    #[serde(default = "defaults::solver_max_iter")]
    pub solver_max_iter: usize,
    #[serde(default = "defaults::delta_sweep")]
    pub delta_sweep: Vec<usize>,
    pub out_dir: Option<String>,
}

mod defaults {
    pub fn bandwidth() -> f64 {
        10e6
    }
    pub fn alpha() -> f64 {
        2.5
    }
    pub fn sigma2() -> f64 {
        0.2
    }
    pub fn distance_scale() -> f64 {
        super::DEFAULT_DISTANCE_SCALE
    }
    pub fn min_distance() -> f64 {
        1e-3
    }
    pub fn slot_duration() -> f64 {
        1.0
    }
    pub fn huber_mu() -> f64 {
        1e-3
    }
    pub fn solver_tol() -> f64 {
        1e-6
    }
    pub fn solver_max_iter() -> usize {
        100_000
    }
    pub fn delta_sweep() -> Vec<usize> {
        vec![0, 1, 3, 5]
    }
}

fn invalid(key: &str, why: impl std::fmt::Display) -> SimError {
    SimError::Validation { key: key.to_string(), message: why.to_string() }
}

fn positive(key: &str, value: f64) -> Result<(), SimError> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(invalid(key, format!("must be positive, got {value}")))
    }
}

fn finite_point(key: &str, p: [f64; 2]) -> Result<Vec2, SimError> {
    if p.iter().all(|c| c.is_finite()) {
        Ok(Vec2::from(p))
    } else {
        Err(invalid(key, "coordinates must be finite"))
    }
}

fn required<T: Clone>(key: &str, value: &Option<T>) -> Result<T, SimError> {
    value.clone().ok_or_else(|| invalid(key, "missing"))
}

/// One user's resolved geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserGeometry {
    pub start: Vec2,
    pub destination: Vec2,
    pub speed: f64,
    pub horizon_t: usize,
    pub excess_delay: usize,
}

impl UserGeometry {
    pub fn slots(&self) -> usize {
        self.horizon_t + self.excess_delay
    }
}

fn resolve_user(
    prefix: &str,
    start: Vec2,
    destination: Vec2,
    horizon: Option<usize>,
    speed: Option<f64>,
    excess_delay: usize,
    norm: NormKind,
) -> Result<UserGeometry, SimError> {
    let speed_key = format!("{prefix}speed_units_per_slot");
    let horizon_key = format!("{prefix}horizon_slots");
    let dist = norm.length(destination - start);
    let (speed, horizon_t) = match (speed, horizon) {
        (Some(v), h) => {
            positive(&speed_key, v)?;
            let t = match h {
                Some(t) => t,
                None => travel_time(start, destination, v, norm).map_err(|e| invalid(&speed_key, e))? + 1,
            };
            (v, t)
        }
        (None, Some(t)) => {
            if t < 2 || dist == 0.0 {
                return Err(invalid(
                    &speed_key,
                    "missing, and cannot be derived without at least two slots and distinct endpoints",
                ));
            }
            (dist / (t - 1) as f64, t)
        }
        (None, None) => return Err(invalid(&speed_key, "missing (give it or the horizon)")),
    };
    if horizon_t == 0 {
        return Err(invalid(&horizon_key, "must be at least 1"));
    }
    Ok(UserGeometry { start, destination, speed, horizon_t, excess_delay })
}

impl ScenarioFile {
    pub fn from_toml_str(text: &str) -> Result<Self, SimError> {
        let file: ScenarioFile = toml::from_str(text).map_err(|e| SimError::Parse(e.to_string()))?;
        file.validate()?;
        Ok(file)
    }

    pub fn load(path: &Path) -> Result<Self, SimError> {
        let text = std::fs::read_to_string(path).map_err(|e| SimError::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    /// Checks every key that can be checked without building streams.
    pub fn validate(&self) -> Result<(), SimError> {
        self.user_one()?;
        if self.mode == Mode::Cooperative {
            self.user_two()?;
        } else {
            self.peer_generator()?;
        }
        for (key, value) in [
            ("bandwidth_hz", self.bandwidth_hz),
            ("path_loss_exponent", self.path_loss_exponent),
            ("noise_power_scaled", self.noise_power_scaled),
            ("distance_scale_units", self.distance_scale_units),
            ("min_distance_units", self.min_distance_units),
            ("slot_duration_s", self.slot_duration_s),
            ("solver_tol", self.solver_tol),
        ] {
            positive(key, value)?;
        }
        if self.solver_max_iter == 0 {
            return Err(invalid("solver_max_iter", "must be at least 1"));
        }
        if !(self.huber_mu >= 0.0 && self.huber_mu <= 1.0) {
            return Err(invalid("huber_mu", format!("must lie in [0, 1], got {}", self.huber_mu)));
        }
        if let Some(g) = self.gamma {
            positive("gamma", g)?;
        }
        let horizon = self.user_one()?.slots();
        for change in &self.destination_changes {
            if change.slot == 0 || change.slot > horizon {
                return Err(invalid("destination_changes", format!("slot {} outside 1..={horizon}", change.slot)));
            }
            finite_point("destination_changes", [change.x, change.y])?;
        }
        if self.lambda_schedule == ScheduleChoice::Custom {
            let values = required("lambda_values", &self.lambda_values)?;
            if values.len() < horizon {
                return Err(invalid("lambda_values", format!("has {} entries, horizon needs {horizon}", values.len())));
            }
            if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(invalid("lambda_values", "entries must lie in [0, 1]"));
            }
        }
        self.region()?;
        if self.delta_sweep.is_empty() {
            return Err(invalid("delta_sweep", "must list at least one value"));
        }
        Ok(())
    }

    pub fn user_one(&self) -> Result<UserGeometry, SimError> {
        resolve_user(
            "",
            finite_point("start", self.start)?,
            finite_point("destination", self.destination)?,
            self.horizon_slots,
            self.speed_units_per_slot,
            self.excess_delay_slots,
            self.norm,
        )
    }

    /// Second cooperating user; its speed defaults to the first user's.
    pub fn user_two(&self) -> Result<UserGeometry, SimError> {
        let one = self.user_one()?;
        let speed =
            self.user2_speed_units_per_slot.or(if self.user2_horizon_slots.is_some() { None } else { Some(one.speed) });
        resolve_user(
            "user2_",
            finite_point("user2_start", required("user2_start", &self.user2_start)?)?,
            finite_point("user2_destination", required("user2_destination", &self.user2_destination)?)?,
            self.user2_horizon_slots,
            speed,
            self.user2_excess_delay_slots.unwrap_or(self.excess_delay_slots),
            self.norm,
        )
    }

    pub fn peer_generator(&self) -> Result<PeerGenerator, SimError> {
        let start = || finite_point("peer_start", required("peer_start", &self.peer_start)?);
        Ok(match self.peer_kind {
            PeerKind::Static => PeerGenerator::Static(start()?),
            PeerKind::Linear => PeerGenerator::Linear {
                start: start()?,
                velocity: finite_point(
                    "peer_velocity_units_per_slot",
                    required("peer_velocity_units_per_slot", &self.peer_velocity_units_per_slot)?,
                )?,
            },
            PeerKind::Waypoints => {
                let pts = required("peer_waypoints", &self.peer_waypoints)?;
                if pts.is_empty() {
                    return Err(invalid("peer_waypoints", "must list at least one point"));
                }
                let points = pts.into_iter().map(|p| finite_point("peer_waypoints", p)).collect::<Result<_, _>>()?;
                let speed = required("peer_speed_units_per_slot", &self.peer_speed_units_per_slot)?;
                positive("peer_speed_units_per_slot", speed)?;
                PeerGenerator::Waypoints { points, speed }
            }
            PeerKind::RandomWalk => {
                let max_step = required("peer_max_step_units", &self.peer_max_step_units)?;
                positive("peer_max_step_units", max_step)?;
                PeerGenerator::BoundedRandomWalk { start: start()?, max_step, seed: self.seed }
            }
        })
    }

    pub fn region(&self) -> Result<Region, SimError> {
        let region = match self.region {
            RegionChoice::None => Region::Unbounded,
            RegionChoice::Box => Region::Box {
                min: finite_point("region_min", required("region_min", &self.region_min)?)?,
                max: finite_point("region_max", required("region_max", &self.region_max)?)?,
            },
            RegionChoice::Disk => Region::Disk {
                center: finite_point("region_center", required("region_center", &self.region_center)?)?,
                radius: required("region_radius_units", &self.region_radius_units)?,
            },
        };
        region.validate().map_err(|e| invalid("region", e))?;
        Ok(region)
    }

    pub fn rate_model(&self) -> Result<RateModel, SimError> {
        RateModel::new(self.bandwidth_hz, self.path_loss_exponent, self.noise_power_scaled, self.distance_scale_units)
            .map_err(|e| invalid("distance_scale_units", e))
    }

    pub fn solver_settings(&self) -> SolverSettings {
        SolverSettings { tol: self.solver_tol, max_iter: self.solver_max_iter, ..SolverSettings::default() }
    }

    pub fn schedule(&self) -> LambdaSchedule {
        match self.lambda_schedule {
            ScheduleChoice::LinearDown => LambdaSchedule::LinearDown,
            ScheduleChoice::LinearUp => LambdaSchedule::LinearUp,
            ScheduleChoice::Custom => LambdaSchedule::Custom(self.lambda_values.clone().unwrap_or_default()),
        }
    }

    pub fn loss_spec(&self, speed: f64) -> Result<LossSpec, SimError> {
        match self.loss {
            LossChoice::Squared => Ok(LossSpec::squared()),
            LossChoice::Huber => LossSpec::huber(self.huber_mu, speed).map_err(|e| invalid("huber_mu", e)),
        }
    }

    /// Destination readings for slots `1..=horizon`.
    pub fn destination_stream(&self, horizon: usize) -> Vec<Vec2> {
        let mut changes = self.destination_changes.clone();
        changes.sort_by_key(|c| c.slot);
        let mut current = Vec2::from(self.destination);
        let mut next = changes.iter().peekable();
        (1..=horizon)
            .map(|t| {
                while let Some(c) = next.next_if(|c| c.slot <= t) {
                    current = Vec2::new(c.x, c.y);
                }
                current
            })
            .collect()
    }

    /// The single-user scenario with excess delay `delta`.
    pub fn scenario_with_delay(&self, delta: usize) -> Result<Scenario, SimError> {
        if self.mode != Mode::Single {
            return Err(invalid("mode", "this command needs mode = \"single\""));
        }
        let user = self.user_one()?;
        let horizon = user.horizon_t + delta;
        let peer = self.peer_generator()?.generate(horizon);
        let dest = self.destination_stream(horizon);
        Scenario::new(user.start, dest, peer, user.speed, user.horizon_t, delta, self.norm)
            .map_err(|e| invalid("horizon_slots", e))
    }

    pub fn scenario(&self) -> Result<Scenario, SimError> {
        self.scenario_with_delay(self.excess_delay_slots)
    }

    /// The same file with a different excess delay for every user.
    pub fn with_delay(&self, delta: usize) -> Self {
        let mut copy = self.clone();
        copy.excess_delay_slots = delta;
        if copy.user2_excess_delay_slots.is_some() {
            copy.user2_excess_delay_slots = Some(delta);
        }
        copy
    }
}
