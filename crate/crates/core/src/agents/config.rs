use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::neuralnet::Architecture;

/// Bootstrapped TD target family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rule {
    Dqn,
    Ddqn,
    Eddqn,
}

impl Rule {
    pub fn name(self) -> &'static str {
        match self {
            Rule::Dqn => "dqn",
            Rule::Ddqn => "ddqn",
            Rule::Eddqn => "eddqn",
        }
    }
}

/// The five compared learners. The recurrent ones bootstrap with the DQN rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Dqn,
    Ddqn,
    Eddqn,
    Drqn100,
    Drqn1000,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::Dqn, Method::Ddqn, Method::Eddqn, Method::Drqn100, Method::Drqn1000];

    pub fn rule(self) -> Rule {
        match self {
            Method::Ddqn => Rule::Ddqn,
            Method::Eddqn => Rule::Eddqn,
            Method::Dqn | Method::Drqn100 | Method::Drqn1000 => Rule::Dqn,
        }
    }

    /// Sequence length for recurrent replay, `None` for feedforward learners.
    pub fn trace_length(self) -> Option<usize> {
        match self {
            Method::Drqn100 => Some(100),
            Method::Drqn1000 => Some(1000),
            _ => None,
        }
    }

    pub fn is_recurrent(self) -> bool {
        self.trace_length().is_some()
    }

    pub fn name(self) -> &'static str {
        match self {
            Method::Dqn => "dqn",
            Method::Ddqn => "ddqn",
            Method::Eddqn => "eddqn",
            Method::Drqn100 => "drqn100",
            Method::Drqn1000 => "drqn1000",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Method::ALL.into_iter().find(|m| m.name() == s)
    }
}

/// Which side of the ε threshold draws the random action.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EpsilonBranch {
    /// Random action when μ ≤ ε.
    RandomBelow,
    /// Greedy action when μ ≤ ε.
    GreedyBelow,
}

/// Action set the greedy branch maximises over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GreedyScope {
    /// Argmax over all four actions; invalid picks are voided (exploration)
    /// or corrected (exploitation).
    AllActions,
    /// Argmax restricted to the valid actions.
    ValidOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentConfig {
    pub epsilon_train: f64,
    pub epsilon_test: f64,
    pub gamma: f64,
    /// Coefficient on the bootstrapped term; `None` uses `gamma`.
    pub bootstrap_coefficient: Option<f64>,
    pub replay_capacity: usize,
    /// Target-network copy period, in train steps.
    pub sync_every: u64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub method: Method,
    pub max_episodes: usize,
    pub success_streak: usize,
    pub max_steps_per_episode: usize,
    pub max_steps_per_mission: usize,
    /// Environment steps between train steps.
    pub train_every: usize,
    pub epsilon_branch: EpsilonBranch,
    pub greedy_scope: GreedyScope,
    pub architecture: Architecture,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            epsilon_train: 0.1,
            epsilon_test: 0.05,
            gamma: 0.95,
            bootstrap_coefficient: None,
            replay_capacity: 800,
            sync_every: 10,
            learning_rate: 0.001,
            batch_size: 32,
            method: Method::Eddqn,
            max_episodes: 1500,
            success_streak: 50,
            max_steps_per_episode: 150,
            max_steps_per_mission: 5000,
            train_every: 1,
            epsilon_branch: EpsilonBranch::RandomBelow,
            greedy_scope: GreedyScope::AllActions,
            architecture: Architecture::compact(),
        }
    }
}

impl AgentConfig {
    pub fn with_method(mut self, method: Method) -> Self {
        self.method = method;
        self
    }

    pub fn rule(&self) -> Rule {
        self.method.rule()
    }

    pub fn discount(&self) -> f64 {
        self.bootstrap_coefficient.unwrap_or(self.gamma)
    }

    /// Network layout with the recurrent cell toggled to match the method.
    pub fn network_architecture(&self) -> Architecture {
        self.architecture.with_recurrent(self.method.is_recurrent())
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        if !unit(self.epsilon_train) || !unit(self.epsilon_test) {
            return Err(Error::Config("exploration rates must lie in [0, 1]"));
        }
        if !unit(self.gamma) || !self.bootstrap_coefficient.is_none_or(unit) {
            return Err(Error::Config("discount must lie in [0, 1]"));
        }
        if self.replay_capacity == 0 || self.batch_size == 0 || self.sync_every == 0 || self.train_every == 0 {
            return Err(Error::Config("capacity, batch, sync and train periods must be positive"));
        }
        if self.batch_size > self.replay_capacity {
            return Err(Error::Config("batch larger than replay capacity"));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::Config("learning rate must be positive"));
        }
        if self.max_steps_per_episode == 0 || self.max_steps_per_mission == 0 {
            return Err(Error::Config("step budgets must be positive"));
        }
        self.architecture.validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_hyperparameter_table() {
        let c = AgentConfig::default();
        assert_eq!(c.epsilon_train, 0.1);
        assert_eq!(c.epsilon_test, 0.05);
        assert_eq!(c.gamma, 0.95);
        assert_eq!(c.discount(), 0.95);
        assert_eq!(c.replay_capacity, 800);
        assert_eq!(c.sync_every, 10);
        assert_eq!(c.learning_rate, 0.001);
        assert_eq!(c.batch_size, 32);
        assert_eq!(c.max_episodes, 1500);
        assert_eq!(c.success_streak, 50);
        c.validate().unwrap();
    }

    #[test]
    fn methods_map_to_rules() {
        assert_eq!(Method::Eddqn.rule(), Rule::Eddqn);
        assert_eq!(Method::Drqn1000.rule(), Rule::Dqn);
        assert_eq!(Method::Drqn100.trace_length(), Some(100));
        assert_eq!(Method::parse("drqn1000"), Some(Method::Drqn1000));
        assert_eq!(Method::parse("a2c"), None);
    }

    #[test]
    fn literal_bootstrap_reading_is_configurable() {
        let c = AgentConfig { bootstrap_coefficient: Some(0.001), ..AgentConfig::default() };
        assert_eq!(c.discount(), 0.001);
        c.validate().unwrap();
    }
}
