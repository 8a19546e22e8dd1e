use alloc::vec::Vec;

use rand::Rng;

use super::config::{AgentConfig, Rule};
use super::policy::argmax_in;
use super::replay::{Observation, ReplayBuffer, Transition};
use crate::error::Result;
use crate::gridmap::ActionMask;
use crate::neuralnet::{
    adam_step, AdamState, LstmState, Mode, NetworkParams, QValues, SequenceSample, TrainingSample,
};

/// Bootstrapped value of the next state given both networks' Q-values
/// there, restricted to `valid_next`. `None` when no next action is valid.
pub fn bootstrap_value(rule: Rule, online_next: &QValues, target_next: &QValues, valid_next: ActionMask) -> Option<f64> {
    match rule {
        Rule::Dqn => argmax_in(target_next, valid_next).map(|a| target_next[a.index()]),
        Rule::Ddqn | Rule::Eddqn => argmax_in(online_next, valid_next).map(|a| target_next[a.index()]),
    }
}

/// Combines reward and bootstrap. Terminal transitions, and those with no
/// valid next action, take the bare reward.
pub fn combine_target(rule: Rule, reward: f64, gamma: f64, bootstrap: Option<f64>, terminal: bool) -> f64 {
    match (terminal, bootstrap) {
        (false, Some(v)) => match rule {
            Rule::Dqn | Rule::Ddqn => reward + gamma * v,
            Rule::Eddqn => reward - gamma * v,
        },
        _ => reward,
    }
}

/// TD target for one transition, evaluating both networks on the next
/// state in eval mode.
pub fn td_target(rule: Rule, t: &Transition, online: &NetworkParams, target: &NetworkParams, gamma: f64) -> Result<f64> {
    if t.terminal || t.valid_next.is_empty() {
        return Ok(t.reward);
    }
    let q_target = target.forward(&t.next.image, &t.next.map, Mode::Eval)?;
    let q_online = match rule {
        Rule::Dqn => q_target,
        Rule::Ddqn | Rule::Eddqn => online.forward(&t.next.image, &t.next.map, Mode::Eval)?,
    };
    let v = bootstrap_value(rule, &q_online, &q_target, t.valid_next);
    Ok(combine_target(rule, t.reward, gamma, v, t.terminal))
}

/// Copies `online` into `target` when `step` is a multiple of `period`.
pub fn sync_target(online: &NetworkParams, target: &mut NetworkParams, step: u64, period: u64) -> bool {
    if period != 0 && step % period == 0 {
        target.clone_from(online);
        true
    } else {
        false
    }
}

/// One gradient step on `online`. Returns `None` (and leaves everything
/// untouched) when the buffer cannot supply a batch.
pub fn train_step<R: Rng>(
    buffer: &ReplayBuffer,
    online: &mut NetworkParams,
    target: &NetworkParams,
    adam: &mut AdamState,
    config: &AgentConfig,
    rng: &mut R,
) -> Result<Option<f64>> {
    match config.method.trace_length() {
        None => train_feedforward(buffer, online, target, adam, config, rng),
        Some(trace) => train_recurrent(buffer, online, target, adam, config, trace, rng),
    }
}

fn train_feedforward<R: Rng>(
    buffer: &ReplayBuffer,
    online: &mut NetworkParams,
    target: &NetworkParams,
    adam: &mut AdamState,
    config: &AgentConfig,
    rng: &mut R,
) -> Result<Option<f64>> {
    let Some(indices) = buffer.sample_indices(config.batch_size, rng) else {
        return Ok(None);
    };
    let rule = config.rule();
    let transitions: Vec<&Transition> = indices.iter().map(|&i| buffer.get(i).expect("sampled index")).collect();
    let mut samples = Vec::with_capacity(transitions.len());
    for t in &transitions {
        let y = td_target(rule, t, online, target, t.gamma)?;
        samples.push(TrainingSample { image: &t.state.image, map: &t.state.map, action: t.action, target: y });
    }
    let mode = Mode::Train { dropout_seed: rng.gen() };
    let (loss, grads) = online.loss_and_gradients(&samples, mode)?;
    adam_step(online, &grads, adam)?;
    Ok(Some(loss))
}

/// Minimum buffer fill before recurrent training starts.
pub fn recurrent_warmup(trace: usize, capacity: usize) -> usize {
    trace.min(capacity)
}

fn train_recurrent<R: Rng>(
    buffer: &ReplayBuffer,
    online: &mut NetworkParams,
    target: &NetworkParams,
    adam: &mut AdamState,
    config: &AgentConfig,
    trace: usize,
    rng: &mut R,
) -> Result<Option<f64>> {
    if buffer.len() < recurrent_warmup(trace, buffer.capacity()) {
        return Ok(None);
    }
    let Some(range) = buffer.sample_segment(trace, rng) else {
        return Ok(None);
    };
    let segment: Vec<&Transition> = range.map(|i| buffer.get(i).expect("segment index")).collect();
    // Inputs s_0..s_{L-1} followed by the last next-state, so step t+1 of
    // the unrolled run supplies the bootstrap for transition t.
    let last = segment.last().expect("non-empty segment");
    let mut unrolled: Vec<(&[f64], &[f64])> = segment.iter().map(|t| obs_pair(&t.state)).collect();
    unrolled.push(obs_pair(&last.next));
    let start = LstmState::zeros();
    let (q_target, _) = target.forward_recurrent(&unrolled, &start, Mode::Eval)?;
    let rule = config.rule();
    let q_online = match rule {
        Rule::Dqn => None,
        Rule::Ddqn | Rule::Eddqn => Some(online.forward_recurrent(&unrolled, &start, Mode::Eval)?.0),
    };
    let targets: Vec<f64> = segment
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let qt = &q_target[i + 1];
            let qo = q_online.as_ref().map_or(qt, |q| &q[i + 1]);
            combine_target(rule, t.reward, t.gamma, bootstrap_value(rule, qo, qt, t.valid_next), t.terminal)
        })
        .collect();
    unrolled.pop();
    let sample = SequenceSample { steps: unrolled, actions: segment.iter().map(|t| t.action).collect(), targets };
    let mode = Mode::Train { dropout_seed: rng.gen() };
    let (loss, grads) = online.sequence_loss_and_gradients(&[sample], mode)?;
    adam_step(online, &grads, adam)?;
    Ok(Some(loss))
}

fn obs_pair(o: &Observation) -> (&[f64], &[f64]) {
    (&o.image, &o.map)
}

/// Value network, target network, optimiser state and replay memory.
#[derive(Debug, Clone)]
pub struct Learner {
    config: AgentConfig,
    online: NetworkParams,
    target: NetworkParams,
    adam: AdamState,
    buffer: ReplayBuffer,
    train_steps: u64,
    episodes: u64,
}

impl Learner {
    pub fn new(config: AgentConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let online = NetworkParams::init(config.network_architecture(), seed)?;
        Ok(Self::from_params(config, online, None))
    }

    /// Resumes from saved weights; a missing optimiser state starts fresh.
    pub fn from_params(config: AgentConfig, online: NetworkParams, adam: Option<AdamState>) -> Self {
        let adam = adam.unwrap_or_else(|| AdamState::new(&online, config.learning_rate));
        Self {
            target: online.clone(),
            buffer: ReplayBuffer::new(config.replay_capacity),
            online,
            adam,
            config,
            train_steps: 0,
            episodes: 0,
        }
    }

    pub fn config(&self) -> &AgentConfig {
        &self.config
    }

    pub fn online(&self) -> &NetworkParams {
        &self.online
    }

    pub fn target(&self) -> &NetworkParams {
        &self.target
    }

    pub fn adam(&self) -> &AdamState {
        &self.adam
    }

    pub fn buffer(&self) -> &ReplayBuffer {
        &self.buffer
    }

    pub fn train_steps(&self) -> u64 {
        self.train_steps
    }

    pub fn is_recurrent(&self) -> bool {
        self.online.architecture().recurrent
    }

    /// Greedy-evaluation Q-values. Recurrent learners thread `hidden`.
    pub fn q_values(&self, obs: &Observation, hidden: &mut LstmState) -> Result<QValues> {
        if self.is_recurrent() {
            let (q, next) = self.online.forward_recurrent(&[(&obs.image, &obs.map)], hidden, Mode::Eval)?;
            *hidden = next;
            Ok(q[0])
        } else {
            self.online.forward(&obs.image, &obs.map, Mode::Eval)
        }
    }

    /// Fresh episode id for replay bookkeeping.
    pub fn begin_episode(&mut self) -> u64 {
        self.episodes += 1;
        self.episodes
    }

    pub fn remember(&mut self, t: Transition) {
        self.buffer.push(t);
    }

    /// One train step followed by the periodic target copy.
    pub fn train<R: Rng>(&mut self, rng: &mut R) -> Result<Option<f64>> {
        let loss = train_step(&self.buffer, &mut self.online, &self.target, &mut self.adam, &self.config, rng)?;
        if loss.is_some() {
            self.train_steps += 1;
            sync_target(&self.online, &mut self.target, self.train_steps, self.config.sync_every);
        }
        Ok(loss)
    }
}
