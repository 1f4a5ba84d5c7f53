//! Scenario files bundled with the binary.

use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use crate::config::ScenarioFile;
use crate::error::SimError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// Two cooperating users on crossing paths.
    Fig1,
    /// Two cooperating users with a common start.
    Fig3,
    /// Rolling-horizon and full-information planners against a slow peer.
    Fig4,
    /// Online planner against a slow peer over a delay sweep.
    Fig5,
}

impl Preset {
    pub const ALL: [Preset; 4] = [Preset::Fig1, Preset::Fig3, Preset::Fig4, Preset::Fig5];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Fig1 => "fig1",
            Preset::Fig3 => "fig3",
            Preset::Fig4 => "fig4",
            Preset::Fig5 => "fig5",
        }
    }

    pub fn text(self) -> &'static str {
        match self {
            Preset::Fig1 => include_str!("../presets/fig1.toml"),
            Preset::Fig3 => include_str!("../presets/fig3.toml"),
            Preset::Fig4 => include_str!("../presets/fig4.toml"),
            Preset::Fig5 => include_str!("../presets/fig5.toml"),
        }
    }

    pub fn load(self) -> Result<ScenarioFile, SimError> {
        ScenarioFile::from_toml_str(self.text())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Mode;
    use d2d_traj::Vec2;

    #[test]
    fn every_preset_parses() {
        for p in Preset::ALL {
            p.load().unwrap_or_else(|e| panic!("{}: {e}", p.name()));
        }
    }

    #[test]
    fn crossing_paths_geometry() {
        let f = Preset::Fig1.load().unwrap();
        assert_eq!(f.mode, Mode::Cooperative);
        let one = f.user_one().unwrap();
        let two = f.user_two().unwrap();
        assert_eq!((one.start, one.destination), (Vec2::new(0.0, 400.0), Vec2::new(400.0, 1200.0)));
        assert_eq!((two.start, two.destination), (Vec2::new(400.0, 0.0), Vec2::new(800.0, 800.0)));
        assert_eq!((one.horizon_t, two.horizon_t), (24, 24));
        assert!((one.speed - two.speed).abs() < 1e-12);
    }

    #[test]
    fn common_start_horizons_come_from_travel_time() {
        let f = Preset::Fig3.load().unwrap();
        let one = f.user_one().unwrap();
        let two = f.user_two().unwrap();
        assert_eq!(one.horizon_t, 18);
        assert_eq!(two.horizon_t, 20);
        assert_eq!(one.excess_delay, 2);
        assert_eq!(two.excess_delay, 2);
    }
}
