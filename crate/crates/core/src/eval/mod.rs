//! Mission runner, the ten-test evaluation sequence, the weather battery and
//! the scalar Q-value decay experiment.

mod decay;
mod mission;

pub use crate::agents::MissionReport;
pub use decay::{decay_experiment, fixed_point, scalar_target, DecayConfig, DecayExperimentResult, DecaySummary};
pub use mission::{
    diagonal_endpoints, run_mission, run_test_sequence, test_sequence, weather_battery, MissionSpec, SequenceResult,
    SequenceScale, BATTERY_WEATHER, TEST_SEQUENCE,
};
