use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::agents::Rule;
use crate::error::{Error, Result};
use crate::math::quantile_sorted;
use crate::rng::seeded;

/// Scalar desk model of repeated replay of one transition: every state
/// holds a Q-value that feeds its own bootstrap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayConfig {
    pub population: usize,
    pub reward: f64,
    pub gamma: f64,
    pub updates: usize,
    /// Base step size of `q ← q + α(target − q)`.
    pub step_size: f64,
    /// Per-state multipliers are drawn from `[1 − spread, 1]`.
    pub step_spread: f64,
    pub seed: u64,
}

impl Default for DecayConfig {
    fn default() -> Self {
        Self { population: 100, reward: -0.04, gamma: 0.95, updates: 500, step_size: 1.0, step_spread: 0.5, seed: 0 }
    }
}

impl DecayConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population == 0 {
            return Err(Error::Config("population must be positive"));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::Config("discount must lie in [0, 1]"));
        }
        if !(self.step_size >= 0.0) || !(0.0..=1.0).contains(&self.step_spread) {
            return Err(Error::Config("step size must be non-negative and spread in [0, 1]"));
        }
        Ok(())
    }

    /// Per-state step sizes; identical for every rule under one seed.
    pub fn step_sizes(&self) -> Vec<f64> {
        let mut rng = seeded(self.seed);
        (0..self.population)
            .map(|_| self.step_size * (1.0 - self.step_spread * rng.gen::<f64>()))
            .collect()
    }
}

/// Five-number summary of the population after `update` updates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecaySummary {
    pub update: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

impl DecaySummary {
    pub fn of(update: usize, values: &[f64]) -> Self {
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        Self {
            update,
            min: v[0],
            q1: quantile_sorted(&v, 0.25),
            median: quantile_sorted(&v, 0.5),
            q3: quantile_sorted(&v, 0.75),
            max: v[v.len() - 1],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayExperimentResult {
    pub rule: Rule,
    pub initial: f64,
    /// One summary per update index `1..=updates`.
    pub summaries: Vec<DecaySummary>,
    /// `trajectories[i][k]` is state `i` after `k` updates.
    pub trajectories: Vec<Vec<f64>>,
}

impl DecayExperimentResult {
    pub fn final_values(&self) -> Vec<f64> {
        self.trajectories.iter().map(|t| t[t.len() - 1]).collect()
    }

    pub fn final_median(&self) -> f64 {
        DecaySummary::of(self.summaries.len(), &self.final_values()).median
    }
}

/// Bootstrapped target of the scalar model.
pub fn scalar_target(rule: Rule, reward: f64, gamma: f64, q: f64) -> f64 {
    match rule {
        Rule::Dqn | Rule::Ddqn => reward + gamma * q,
        Rule::Eddqn => reward - gamma * q,
    }
}

/// Limit of the scalar recurrence.
pub fn fixed_point(rule: Rule, reward: f64, gamma: f64) -> f64 {
    match rule {
        Rule::Dqn | Rule::Ddqn => reward / (1.0 - gamma),
        Rule::Eddqn => reward / (1.0 + gamma),
    }
}

/// Iterates every state `updates` times from the reward value.
pub fn decay_experiment(rule: Rule, config: &DecayConfig) -> Result<DecayExperimentResult> {
    config.validate()?;
    let steps = config.step_sizes();
    let initial = config.reward;
    let mut trajectories: Vec<Vec<f64>> = steps
        .iter()
        .map(|_| {
            let mut t = Vec::with_capacity(config.updates + 1);
            t.push(initial);
            t
        })
        .collect();
    let mut summaries = Vec::with_capacity(config.updates);
    let mut current = alloc::vec![initial; config.population];
    for k in 1..=config.updates {
        for ((q, alpha), traj) in current.iter_mut().zip(&steps).zip(trajectories.iter_mut()) {
            *q += alpha * (scalar_target(rule, config.reward, config.gamma, *q) - *q);
            traj.push(*q);
        }
        summaries.push(DecaySummary::of(k, &current));
    }
    Ok(DecayExperimentResult { rule, initial, summaries, trajectories })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_updates_is_identity() {
        let r = decay_experiment(Rule::Ddqn, &DecayConfig { updates: 0, ..DecayConfig::default() }).unwrap();
        assert!(r.summaries.is_empty());
        assert!(r.final_values().iter().all(|v| *v == -0.04));
    }

    #[test]
    fn rules_share_initial_value_and_steps() {
        let c = DecayConfig { updates: 3, ..DecayConfig::default() };
        let a = decay_experiment(Rule::Ddqn, &c).unwrap();
        let b = decay_experiment(Rule::Eddqn, &c).unwrap();
        assert_eq!(a.initial, b.initial);
        assert_eq!(a.trajectories.len(), 100);
        assert_eq!(a.summaries.len(), 3);
    }

    #[test]
    fn summary_of_known_values() {
        let s = DecaySummary::of(1, &[3.0, 1.0, 2.0, 4.0, 5.0]);
        assert_eq!((s.min, s.q1, s.median, s.q3, s.max), (1.0, 2.0, 3.0, 4.0, 5.0));
    }

    #[test]
    fn tiny_step_leaves_values_in_place() {
        let c = DecayConfig { step_size: 1e-9, updates: 200, ..DecayConfig::default() };
        for rule in [Rule::Ddqn, Rule::Eddqn] {
            let r = decay_experiment(rule, &c).unwrap();
            assert!(r.final_values().iter().all(|v| (v + 0.04).abs() < 1e-6));
        }
    }
}
