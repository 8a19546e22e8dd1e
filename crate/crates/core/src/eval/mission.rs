use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::agents::{run_exploitation_phase, Learner, Mission, MissionReport};
use crate::error::{Error, Result};
use crate::gridmap::GridCoord;
use crate::math;
use crate::rng::{derive_seed, rng_from};
use crate::worldsim::{generate_world, Domain, WeatherCondition, WeatherKind, WorldSpec};

const MISSION_STREAM: u64 = 0x6d69_7373;

/// A world, its weather and the straight-line task across it. The start
/// and goal are the world's own endpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissionSpec {
    pub world: WorldSpec,
    pub weather: WeatherCondition,
    pub target_distance: f64,
    pub seed: u64,
}

/// Start and goal on a diagonal, `distance` apart (to the nearest cell),
/// centred in a square of side `side`.
pub fn diagonal_endpoints(side: u32, distance: f64) -> Result<(GridCoord, GridCoord)> {
    let offset = math::round(distance / core::f64::consts::SQRT_2) as i32;
    if offset < 0 || offset >= side as i32 {
        return Err(Error::Config("mission distance does not fit in the search area"));
    }
    let margin = (side as i32 - 1 - offset) / 2;
    Ok((GridCoord::new(margin, margin), GridCoord::new(margin + offset, margin + offset)))
}

impl MissionSpec {
    pub fn new(domain: Domain, side: u32, distance: f64, weather: WeatherCondition, seed: u64) -> Result<Self> {
        let (start, goal) = diagonal_endpoints(side, distance)?;
        let world = WorldSpec::for_domain(domain, side, side, start, goal, derive_seed(seed, 0));
        Ok(Self { world, weather, target_distance: distance, seed })
    }

    pub fn start(&self) -> GridCoord {
        self.world.start
    }

    pub fn goal(&self) -> GridCoord {
        self.world.goal
    }

    pub fn validate(&self) -> Result<()> {
        self.world.validate()?;
        if (self.start().distance(self.goal()) - self.target_distance).abs() > 1.0 {
            return Err(Error::Config("start and goal must lie the target distance apart"));
        }
        Ok(())
    }
}

/// Generates the world and flies the mission with `learner`, which keeps
/// learning online.
pub fn run_mission(spec: &MissionSpec, learner: &mut Learner) -> Result<MissionReport> {
    spec.validate()?;
    let mut world = generate_world(&spec.world)?;
    let mission = Mission {
        start: spec.start(),
        goal: spec.goal(),
        target_distance: spec.target_distance,
        weather: spec.weather,
    };
    let mut rng = rng_from(spec.seed, MISSION_STREAM);
    run_exploitation_phase(&mut world, &mission, learner, &mut rng)
}

/// Search-area sides and mission distances for the short and long tests.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SequenceScale {
    pub short_side: u32,
    pub short_distance: f64,
    pub long_side: u32,
    pub long_distance: f64,
}

impl SequenceScale {
    /// 100 m and 400 m missions in 100×100 and 400×400 areas.
    pub fn full() -> Self {
        Self { short_side: 100, short_distance: 100.0, long_side: 400, long_distance: 400.0 }
    }

    /// Same shape at a size that runs in seconds.
    pub fn desk() -> Self {
        Self { short_side: 20, short_distance: 14.0, long_side: 40, long_distance: 28.0 }
    }
}

/// Labels of the ten tests, in execution order.
pub const TEST_SEQUENCE: [&str; 10] = ["F100", "F400", "s15", "d15", "f15", "s30", "d30", "f30", "P400", "S400"];

fn weather_for(label: &str) -> Option<WeatherCondition> {
    let kind = match label.as_bytes().first()? {
        b's' => WeatherKind::Snow,
        b'd' => WeatherKind::Dust,
        b'f' => WeatherKind::Fog,
        _ => return None,
    };
    let intensity = if label.ends_with("15") { WeatherCondition::LIGHT } else { WeatherCondition::HEAVY };
    WeatherCondition::new(kind, intensity).ok()
}

/// The ten mission specs. Weather tests fly the long forest mission.
pub fn test_sequence(scale: SequenceScale, master_seed: u64) -> Result<Vec<(String, MissionSpec)>> {
    TEST_SEQUENCE
        .iter()
        .enumerate()
        .map(|(i, &label)| {
            let seed = derive_seed(master_seed, i as u64);
            let long = (scale.long_side, scale.long_distance);
            let (domain, (side, dist), weather) = match label {
                "F100" => (Domain::Forest, (scale.short_side, scale.short_distance), WeatherCondition::clear()),
                "F400" => (Domain::Forest, long, WeatherCondition::clear()),
                "P400" => (Domain::Plain, long, WeatherCondition::clear()),
                "S400" => (Domain::Savanna, long, WeatherCondition::clear()),
                w => (Domain::Forest, long, weather_for(w).expect("weather label")),
            };
            Ok((String::from(label), MissionSpec::new(domain, side, dist, weather, seed)?))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceResult {
    pub label: String,
    pub report: MissionReport,
}

/// Runs the ten tests in order, carrying the online-updated learner
/// forward. Failed missions are recorded and the sequence continues.
pub fn run_test_sequence(learner: &mut Learner, scale: SequenceScale, master_seed: u64) -> Result<Vec<SequenceResult>> {
    test_sequence(scale, master_seed)?
        .into_iter()
        .map(|(label, spec)| Ok(SequenceResult { label, report: run_mission(&spec, learner)? }))
        .collect()
}

/// Weather conditions of the comparison battery.
pub const BATTERY_WEATHER: [(WeatherKind, f64); 7] = [
    (WeatherKind::Clear, 0.0),
    (WeatherKind::Snow, WeatherCondition::LIGHT),
    (WeatherKind::Snow, WeatherCondition::HEAVY),
    (WeatherKind::Dust, WeatherCondition::LIGHT),
    (WeatherKind::Dust, WeatherCondition::HEAVY),
    (WeatherKind::Fog, WeatherCondition::LIGHT),
    (WeatherKind::Fog, WeatherCondition::HEAVY),
];

/// `count` forest missions of `distance` in `side`-sized areas, cycling
/// through [`BATTERY_WEATHER`].
pub fn weather_battery(count: usize, side: u32, distance: f64, master_seed: u64) -> Result<Vec<MissionSpec>> {
    (0..count)
        .map(|i| {
            let (kind, intensity) = BATTERY_WEATHER[i % BATTERY_WEATHER.len()];
            let weather = WeatherCondition::new(kind, intensity)?;
            MissionSpec::new(Domain::Forest, side, distance, weather, derive_seed(master_seed, i as u64))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoints_match_distance() {
        for (side, d) in [(100, 100.0), (400, 400.0), (20, 14.0), (12, 6.0)] {
            let (s, g) = diagonal_endpoints(side, d).unwrap();
            assert!((s.distance(g) - d).abs() <= 1.0);
            assert!(g.row < side as i32 && s.row >= 0);
        }
        assert!(diagonal_endpoints(10, 100.0).is_err());
    }

    #[test]
    fn sequence_order_and_conditions() {
        let seq = test_sequence(SequenceScale::full(), 1).unwrap();
        let labels: Vec<&str> = seq.iter().map(|(l, _)| l.as_str()).collect();
        assert_eq!(labels, TEST_SEQUENCE);
        assert_eq!(seq[0].1.world.width_m, 100);
        assert_eq!(seq[1].1.world.width_m, 400);
        assert_eq!(seq[4].1.weather.kind(), WeatherKind::Fog);
        assert_eq!(seq[5].1.weather.intensity(), WeatherCondition::HEAVY);
        assert_eq!(seq[8].1.world.domain, Domain::Plain);
        assert_eq!(seq[9].1.world.domain, Domain::Savanna);
        for (_, s) in &seq {
            s.validate().unwrap();
        }
    }

    #[test]
    fn battery_spans_every_condition() {
        let b = weather_battery(20, 20, 14.0, 3).unwrap();
        assert_eq!(b.len(), 20);
        for (kind, intensity) in BATTERY_WEATHER {
            assert!(b.iter().any(|m| m.weather.kind() == kind && m.weather.intensity() == intensity));
        }
    }
}
