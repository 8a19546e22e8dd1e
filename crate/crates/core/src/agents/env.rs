use alloc::vec::Vec;

use crate::gridmap::{Action, GridCoord, LocalMap};
use crate::worldsim::{apply_weather, render_frame, sense_obstacles, WeatherCondition, WeatherKind, World, FRAME_SIZE};

use super::replay::Observation;

/// Renders the camera frame for `facing`, degrades it by `weather` and
/// resizes it to the network input, paired with the decision-map raster.
pub fn observe(
    world: &World,
    local: &LocalMap,
    facing: Action,
    weather: WeatherCondition,
    input_size: usize,
    weather_seed: u64,
) -> Observation {
    let mut frame = render_frame(world, local.agent_global(), facing);
    if weather.kind() != WeatherKind::Clear && weather.intensity() > 0.0 {
        frame = apply_weather(&frame, weather, weather_seed);
    }
    let image = if input_size == FRAME_SIZE { frame.pixels().to_vec() } else { frame.resized(input_size) };
    Observation { image, map: local.render().to_vec() }
}

/// Marks sensed neighbour obstacles in `local` and returns every sensed
/// global cell.
pub fn sense_into(world: &World, local: &mut LocalMap) -> Vec<GridCoord> {
    let sensed = sense_obstacles(world, local.agent_global());
    for &c in &sensed {
        local.mark_blocked(c);
    }
    sensed
}

/// Facing that points roughly at `to` from `from`, North when they coincide.
pub fn facing_towards(from: GridCoord, to: GridCoord) -> Action {
    let (dr, dc) = (to.row - from.row, to.col - from.col);
    if dr == 0 && dc == 0 {
        Action::North
    } else if dr.abs() >= dc.abs() {
        if dr < 0 {
            Action::North
        } else {
            Action::South
        }
    } else if dc > 0 {
        Action::East
    } else {
        Action::West
    }
}
