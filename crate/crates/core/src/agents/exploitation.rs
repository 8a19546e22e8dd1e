use alloc::collections::BTreeSet;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::config::Method;
use super::env::{facing_towards, observe, sense_into};
use super::learner::Learner;
use super::policy::{correct_action, EpsilonGreedy, PolicyDecision};
use super::replay::Transition;
use crate::error::{Error, Result};
use crate::gridmap::{reward, CellState, GlobalMap, GridCoord, LocalMap, Reward};
use crate::neuralnet::LstmState;
use crate::worldsim::{Domain, WeatherCondition, WeatherKind, World};

/// One continuous-flight task inside a world.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mission {
    pub start: GridCoord,
    pub goal: GridCoord,
    pub target_distance: f64,
    pub weather: WeatherCondition,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissionReport {
    pub method: Method,
    pub domain: Domain,
    pub weather: WeatherKind,
    pub intensity: f64,
    pub completed: bool,
    pub distance_m: f64,
    /// Steps flown at 1 m/s.
    pub time_s: u64,
    /// Distinct cells sensed as obstacles.
    pub obstacles: u64,
    pub predictions: u64,
    pub corrections: u64,
    pub random: u64,
    /// Executed moves whose destination was neither free nor visited.
    pub unsafe_moves: u64,
    pub route: Vec<GridCoord>,
    /// Provenance of each executed move, aligned with `route[1..]`.
    pub decisions: Vec<PolicyDecision>,
}

impl MissionReport {
    pub fn total_decisions(&self) -> u64 {
        self.predictions + self.corrections + self.random
    }

    /// Decision counts add up and time matches the route length.
    pub fn is_consistent(&self) -> bool {
        let count = |d: PolicyDecision| self.decisions.iter().filter(|x| **x == d).count() as u64;
        self.total_decisions() == self.decisions.len() as u64
            && count(PolicyDecision::Predicted) == self.predictions
            && count(PolicyDecision::Corrected) == self.corrections
            && count(PolicyDecision::Random) == self.random
            && self.route.len() as u64 == self.time_s + 1
    }
}

/// Destination membership in the free or visited cells of the decision map,
/// checked from the raw cell state.
fn lands_in_free_or_visited(local: &LocalMap, dest: GridCoord) -> bool {
    matches!(local.base_state(dest), Some(CellState::Free | CellState::Visited))
}

/// Continuous-flight mission with online learning. Predictions that leave
/// the free/visited cells are corrected towards the target cell; reaching
/// it merges the decision map into the global map and spawns a new one.
/// Movers in `world` advance one second per step.
pub fn run_exploitation_phase<R: Rng>(
    world: &mut World,
    mission: &Mission,
    learner: &mut Learner,
    rng: &mut R,
) -> Result<MissionReport> {
    let cfg = *learner.config();
    let input = cfg.architecture.input_size;
    let policy = EpsilonGreedy { epsilon: cfg.epsilon_test, branch: cfg.epsilon_branch, scope: cfg.greedy_scope };
    let area = world.area();
    let mut global = GlobalMap::new(area.width, area.height, mission.start, mission.goal)?;
    let mut report = MissionReport {
        method: cfg.method,
        domain: world.spec().domain,
        weather: mission.weather.kind(),
        intensity: mission.weather.intensity(),
        completed: mission.start == mission.goal,
        distance_m: mission.target_distance,
        time_s: 0,
        obstacles: 0,
        predictions: 0,
        corrections: 0,
        random: 0,
        unsafe_moves: 0,
        route: vec![mission.start],
        decisions: Vec::new(),
    };
    if report.completed {
        return Ok(report);
    }
    let mut sensed: BTreeSet<GridCoord> = BTreeSet::new();
    let spawn = |world: &World, global: &GlobalMap, at: GridCoord, sensed: &mut BTreeSet<GridCoord>| -> Result<LocalMap> {
        let mut local = global.spawn_local(at)?;
        sensed.extend(sense_into(world, &mut local));
        local.retarget(mission.goal);
        Ok(local)
    };
    let mut local = spawn(world, &global, mission.start, &mut sensed)?;
    let mut episode = learner.begin_episode();
    let mut hidden = LstmState::zeros();
    let mut facing = facing_towards(mission.start, local.target_global());
    let mut obs = Arc::new(observe(world, &local, facing, mission.weather, input, rng.gen()));
    let mut steps = 0;
    while steps < cfg.max_steps_per_mission {
        let valid = local.valid_actions();
        if valid.is_empty() {
            break;
        }
        let q = learner.q_values(&obs, &mut hidden)?;
        let (mut action, mut decision) = policy.choose(&q, valid, rng)?;
        if decision == PolicyDecision::Predicted {
            (action, decision) = correct_action(action, local.agent(), valid, local.target())?;
        }
        let dest_local = local.agent().step(action);
        if !lands_in_free_or_visited(&local, dest_local) {
            report.unsafe_moves += 1;
        }
        let target = local.target_global();
        let r = reward(local.to_global(dest_local), &local, target);
        local = local.apply_move(action).map_err(|_| Error::HardConstraint(action))?;
        facing = action;
        steps += 1;
        world.advance(1.0);
        sensed.extend(sense_into(world, &mut local));
        local.retarget(mission.goal);
        let reached = r == Reward::Reached;
        let next = Arc::new(observe(world, &local, facing, mission.weather, input, rng.gen()));
        learner.remember(Transition {
            state: obs,
            action,
            reward: r.value(),
            gamma: cfg.discount(),
            next: next.clone(),
            terminal: reached,
            valid_next: local.valid_actions(),
            episode,
        });
        if steps % cfg.train_every == 0 {
            learner.train(rng)?;
        }
        match decision {
            PolicyDecision::Predicted => report.predictions += 1,
            PolicyDecision::Corrected => report.corrections += 1,
            PolicyDecision::Random => report.random += 1,
        }
        report.decisions.push(decision);
        report.route.push(local.agent_global());
        obs = next;
        if reached {
            global.merge(&local);
            if local.agent_global() == mission.goal {
                report.completed = true;
                break;
            }
            local = spawn(world, &global, local.agent_global(), &mut sensed)?;
            episode = learner.begin_episode();
            hidden = LstmState::zeros();
            obs = Arc::new(observe(world, &local, facing, mission.weather, input, rng.gen()));
        }
    }
    report.time_s = steps as u64;
    report.obstacles = sensed.len() as u64;
    Ok(report)
}
