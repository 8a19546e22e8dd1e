use alloc::sync::Arc;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::env::{facing_towards, observe, sense_into};
use super::learner::Learner;
use super::policy::EpsilonGreedy;
use super::replay::Transition;
use crate::error::{Error, Result};
use crate::gridmap::{reward, GridCoord, LocalMap, Reward};
use crate::neuralnet::LstmState;
use crate::worldsim::{WeatherCondition, World};

/// Static world used for teleport-mode training. Episodes start at a clear
/// cell connected to the world's goal.
#[derive(Debug, Clone)]
pub struct TrainingEnv {
    world: World,
    weather: WeatherCondition,
    starts: Vec<GridCoord>,
}

impl TrainingEnv {
    pub fn new(world: World, weather: WeatherCondition) -> Result<Self> {
        let goal = world.spec().goal;
        if !world.is_clear(goal) {
            return Err(Error::InvalidWorld("goal cell is not clear"));
        }
        let starts: Vec<GridCoord> = world.clear_component(goal).into_iter().filter(|&c| c != goal).collect();
        if starts.is_empty() {
            return Err(Error::InvalidWorld("no clear cell connects to the goal"));
        }
        Ok(Self { world, weather, starts })
    }

    pub fn world(&self) -> &World {
        &self.world
    }

    pub fn weather(&self) -> WeatherCondition {
        self.weather
    }

    pub fn goal(&self) -> GridCoord {
        self.world.spec().goal
    }

    /// Uniform start cell among those connected to the goal.
    pub fn draw_start<R: Rng>(&self, rng: &mut R) -> GridCoord {
        self.starts[rng.gen_range(0..self.starts.len())]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeLog {
    pub episode: usize,
    pub steps: usize,
    pub reward_sum: f64,
    pub success: bool,
    pub streak: usize,
    /// Mean training loss over the episode, absent when no train step ran.
    pub loss_mean: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplorationOutcome {
    pub log: Vec<EpisodeLog>,
    pub converged: bool,
}

impl ExplorationOutcome {
    pub fn episodes(&self) -> usize {
        self.log.len()
    }
}

/// Teleport-mode training: every episode spawns a fresh decision map at a
/// random clear cell and runs uncorrected ε-greedy control until the
/// target cell is reached, a move breaks a hard constraint, the agent is
/// boxed in or the step cap is hit.
/// Stops after `success_streak` consecutive successes or `max_episodes`.
pub fn run_exploration_phase<R: Rng>(env: &TrainingEnv, learner: &mut Learner, rng: &mut R) -> Result<ExplorationOutcome> {
    let cfg = *learner.config();
    let policy = EpsilonGreedy { epsilon: cfg.epsilon_train, branch: cfg.epsilon_branch, scope: cfg.greedy_scope };
    let mut log = Vec::new();
    let mut streak = 0;
    for episode in 1..=cfg.max_episodes {
        let (steps, reward_sum, success, losses) = run_episode(env, learner, &policy, rng)?;
        streak = if success { streak + 1 } else { 0 };
        let loss_mean = (!losses.is_empty()).then(|| losses.iter().sum::<f64>() / losses.len() as f64);
        log.push(EpisodeLog { episode, steps, reward_sum, success, streak, loss_mean });
        if streak >= cfg.success_streak {
            return Ok(ExplorationOutcome { log, converged: true });
        }
    }
    Ok(ExplorationOutcome { log, converged: false })
}

fn run_episode<R: Rng>(
    env: &TrainingEnv,
    learner: &mut Learner,
    policy: &EpsilonGreedy,
    rng: &mut R,
) -> Result<(usize, f64, bool, Vec<f64>)> {
    let cfg = *learner.config();
    let input = cfg.architecture.input_size;
    let world = &env.world;
    let (start, goal) = (env.draw_start(rng), env.goal());
    let mut local = LocalMap::spawn(start, goal, world.area())?;
    sense_into(world, &mut local);
    local.retarget(goal);
    let episode = learner.begin_episode();
    let mut facing = facing_towards(start, local.target_global());
    let mut hidden = LstmState::zeros();
    let mut obs = Arc::new(observe(world, &local, facing, env.weather, input, rng.gen()));
    let (mut steps, mut reward_sum, mut losses) = (0, 0.0, Vec::new());
    loop {
        let valid = local.valid_actions();
        if valid.is_empty() {
            return Ok((steps, reward_sum, false, losses));
        }
        let q = learner.q_values(&obs, &mut hidden)?;
        let (action, _) = policy.choose(&q, valid, rng)?;
        let dest = local.to_global(local.agent().step(action));
        let r = reward(dest, &local, local.target_global());
        facing = action;
        let violated = !valid.contains(action);
        if !violated {
            local = local.apply_move(action)?;
            sense_into(world, &mut local);
            local.retarget(goal);
        }
        let reached = r == Reward::Reached;
        steps += 1;
        reward_sum += r.value();
        let next = Arc::new(observe(world, &local, facing, env.weather, input, rng.gen()));
        learner.remember(Transition {
            state: obs,
            action,
            reward: r.value(),
            gamma: cfg.discount(),
            next: next.clone(),
            terminal: reached || violated,
            valid_next: local.valid_actions(),
            episode,
        });
        if steps % cfg.train_every == 0 {
            if let Some(loss) = learner.train(rng)? {
                losses.push(loss);
            }
        }
        obs = next;
        if reached || violated || steps >= cfg.max_steps_per_episode {
            return Ok((steps, reward_sum, reached, losses));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::config::AgentConfig;
    use crate::rng::seeded;
    use crate::worldsim::{generate_world, Domain, WorldSpec};

    fn env(seed: u64) -> TrainingEnv {
        let mut spec = WorldSpec::for_domain(Domain::Forest, 10, 10, GridCoord::new(0, 0), GridCoord::new(9, 9), seed);
        spec.obstacle_density = 10.0;
        TrainingEnv::new(generate_world(&spec).unwrap(), WeatherCondition::clear()).unwrap()
    }

    #[test]
    fn starts_are_connected_to_the_goal() {
        let e = env(3);
        let reachable = e.world().clear_component(e.goal());
        let mut rng = seeded(1);
        for _ in 0..200 {
            let s = e.draw_start(&mut rng);
            assert_ne!(s, e.goal());
            assert!(reachable.contains(&s));
        }
    }

    #[test]
    fn stops_at_the_episode_cap() {
        let cfg = AgentConfig { max_episodes: 6, success_streak: 1000, ..AgentConfig::default() };
        let mut learner = Learner::new(cfg, 2).unwrap();
        let out = run_exploration_phase(&env(1), &mut learner, &mut seeded(4)).unwrap();
        assert!(!out.converged);
        assert_eq!(out.episodes(), 6);
    }

    #[test]
    fn streak_stops_training_early() {
        let cfg = AgentConfig { epsilon_train: 1.0, success_streak: 2, ..AgentConfig::default() };
        let mut learner = Learner::new(cfg, 2).unwrap();
        let out = run_exploration_phase(&env(1), &mut learner, &mut seeded(5)).unwrap();
        assert!(out.converged);
        let tail = &out.log[out.log.len() - 2..];
        assert!(tail.iter().all(|l| l.success));
        assert_eq!(tail[1].streak, 2);
    }

    #[test]
    fn violations_end_the_episode() {
        let cfg = AgentConfig { epsilon_train: 0.0, max_episodes: 20, success_streak: 1000, ..AgentConfig::default() };
        let mut learner = Learner::new(cfg, 7).unwrap();
        run_exploration_phase(&env(2), &mut learner, &mut seeded(6)).unwrap();
        let penalties = [Reward::Blocked.value(), Reward::Invalid.value()];
        let mut seen = 0;
        for t in learner.buffer().iter() {
            if penalties.contains(&t.reward) {
                assert!(t.terminal);
                seen += 1;
            } else {
                assert_eq!(t.terminal, t.reward == Reward::Reached.value());
            }
        }
        assert!(seen > 0);
    }
}
