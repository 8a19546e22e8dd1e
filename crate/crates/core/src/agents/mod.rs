//! Replay memory, ε-greedy and correction policies, the TD-target rules and
//! the two training loops.

mod config;
mod env;
mod exploitation;
mod exploration;
mod learner;
mod policy;
mod replay;

pub use config::{AgentConfig, EpsilonBranch, GreedyScope, Method, Rule};
pub use env::{facing_towards, observe, sense_into};
pub use exploitation::{run_exploitation_phase, Mission, MissionReport};
pub use exploration::{run_exploration_phase, EpisodeLog, ExplorationOutcome, TrainingEnv};
pub use learner::{
    bootstrap_value, combine_target, recurrent_warmup, sync_target, td_target, train_step, Learner,
};
pub use policy::{argmax_in, correct_action, epsilon_greedy, EpsilonGreedy, PolicyDecision};
pub use replay::{Observation, ReplayBuffer, Transition};
