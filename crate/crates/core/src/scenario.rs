use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{diameter, NormKind, Vec2};

/// One user's planning problem against an exogenous peer.
///
/// Streams are slot-indexed (entry `t - 1` is revealed at slot `t`) and must
/// cover the full horizon `horizon_t + excess_delay`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub start: Vec2,
    pub destination_stream: Vec<Vec2>,
    /// Length units per slot.
    pub speed: f64,
    pub horizon_t: usize,
    pub excess_delay: usize,
    pub peer_stream: Vec<Vec2>,
    pub norm: NormKind,
    pub region_diameter: f64,
}

impl Scenario {
    /// Builds a scenario and sets the region diameter to the exact spread of
    /// the start and every stream point inside the horizon.
    pub fn new(
        start: Vec2,
        destination_stream: Vec<Vec2>,
        peer_stream: Vec<Vec2>,
        speed: f64,
        horizon_t: usize,
        excess_delay: usize,
        norm: NormKind,
    ) -> Result<Self> {
        let mut scenario =
            Self { start, destination_stream, speed, horizon_t, excess_delay, peer_stream, norm, region_diameter: 0.0 };
        scenario.check_shape()?;
        scenario.region_diameter = scenario.spread();
        Ok(scenario)
    }

    /// Constant destination and constant (hot-spot) peer.
    pub fn fixed(
        start: Vec2,
        destination: Vec2,
        peer: Vec2,
        speed: f64,
        horizon_t: usize,
        excess_delay: usize,
    ) -> Result<Self> {
        let n = horizon_t + excess_delay;
        Self::new(start, vec![destination; n], vec![peer; n], speed, horizon_t, excess_delay, NormKind::Euclidean)
    }

    /// Overrides the region diameter; it may only grow beyond the point spread.
    pub fn with_region_diameter(mut self, r: f64) -> Result<Self> {
        let spread = self.spread();
        if r.is_nan() || r < spread {
            return Err(Error::InvalidInput(format!("region diameter {r} is smaller than the point spread {spread}")));
        }
        self.region_diameter = r;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        self.check_shape()?;
        let spread = self.spread();
        if self.region_diameter < spread * (1.0 - 1e-12) {
            return Err(Error::InvalidInput(format!(
                "region diameter {} is smaller than the point spread {spread}",
                self.region_diameter
            )));
        }
        Ok(())
    }

    fn check_shape(&self) -> Result<()> {
        if !(self.speed > 0.0 && self.speed.is_finite()) {
            return Err(Error::InvalidInput(format!("speed must be positive, got {}", self.speed)));
        }
        if self.horizon_t == 0 {
            return Err(Error::InvalidInput("horizon must be at least one slot".into()));
        }
        let n = self.horizon();
        for (name, stream) in [("destination", &self.destination_stream), ("peer", &self.peer_stream)] {
            if stream.len() < n {
                return Err(Error::InvalidInput(format!(
                    "{name} stream has {} entries, horizon needs {n}",
                    stream.len()
                )));
            }
            if stream.iter().any(|p| !p.is_finite()) {
                return Err(Error::InvalidInput(format!("{name} stream has non-finite points")));
            }
        }
        if !self.start.is_finite() {
            return Err(Error::InvalidInput("start is not finite".into()));
        }
        Ok(())
    }

    fn spread(&self) -> f64 {
        let n = self.horizon();
        let mut pts = Vec::with_capacity(2 * n + 1);
        pts.push(self.start);
        pts.extend_from_slice(&self.destination_stream[..n]);
        pts.extend_from_slice(&self.peer_stream[..n]);
        pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
        pts.dedup();
        diameter(&pts)
    }

    /// `T' = T + delta`.
    pub fn horizon(&self) -> usize {
        self.horizon_t + self.excess_delay
    }

    pub fn peer_at(&self, t: usize) -> Vec2 {
        self.peer_stream[t - 1]
    }

    pub fn destination_at(&self, t: usize) -> Vec2 {
        self.destination_stream[t - 1]
    }

    pub fn final_destination(&self) -> Vec2 {
        self.destination_stream[self.horizon() - 1]
    }

    pub fn with_excess_delay(&self, excess_delay: usize) -> Result<Self> {
        let mut s = self.clone();
        s.excess_delay = excess_delay;
        s.check_shape()?;
        s.region_diameter = s.region_diameter.max(s.spread());
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diameter_covers_all_points() {
        let s = Scenario::fixed(Vec2::ZERO, Vec2::new(3.0, 4.0), Vec2::new(0.0, 4.0), 1.0, 5, 1).unwrap();
        assert_eq!(s.horizon(), 6);
        assert_eq!(s.region_diameter, 5.0);
        assert!(s.validate().is_ok());
        assert!(s.clone().with_region_diameter(4.0).is_err());
        assert_eq!(s.with_region_diameter(10.0).unwrap().region_diameter, 10.0);
    }

    #[test]
    fn rejects_short_streams_and_bad_speed() {
        let short = Scenario::new(Vec2::ZERO, vec![Vec2::ZERO; 3], vec![Vec2::ZERO; 5], 1.0, 4, 1, NormKind::Euclidean);
        assert!(short.is_err());
        assert!(Scenario::fixed(Vec2::ZERO, Vec2::ZERO, Vec2::ZERO, 0.0, 4, 0).is_err());
        assert!(Scenario::fixed(Vec2::ZERO, Vec2::ZERO, Vec2::ZERO, 1.0, 0, 0).is_err());
    }
}
