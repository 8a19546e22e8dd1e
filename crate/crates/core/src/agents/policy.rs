use rand::Rng;
use serde::{Deserialize, Serialize};

use super::config::{EpsilonBranch, GreedyScope};
use crate::error::{Error, Result};
use crate::gridmap::{Action, ActionMask, GridCoord};
use crate::neuralnet::QValues;

/// Provenance of an executed action.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolicyDecision {
    Random,
    Predicted,
    Corrected,
}

/// First action in N, S, E, W order attaining the maximum over `mask`.
pub fn argmax_in(q: &QValues, mask: ActionMask) -> Option<Action> {
    let mut best: Option<Action> = None;
    for a in mask.iter() {
        if best.is_none_or(|b| q[a.index()] > q[b.index()]) {
            best = Some(a);
        }
    }
    best
}

/// ε-greedy choice: random valid action when μ ≤ ε, otherwise the argmax
/// over the valid actions.
pub fn epsilon_greedy<R: Rng>(q: &QValues, valid: ActionMask, epsilon: f64, rng: &mut R) -> Result<(Action, PolicyDecision)> {
    EpsilonGreedy { epsilon, branch: EpsilonBranch::RandomBelow, scope: GreedyScope::ValidOnly }.choose(q, valid, rng)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsilonGreedy {
    pub epsilon: f64,
    pub branch: EpsilonBranch,
    pub scope: GreedyScope,
}

impl EpsilonGreedy {
    /// Draws μ once per call. With [`GreedyScope::AllActions`] the greedy
    /// pick may be invalid; the caller voids or corrects it.
    pub fn choose<R: Rng>(&self, q: &QValues, valid: ActionMask, rng: &mut R) -> Result<(Action, PolicyDecision)> {
        if valid.is_empty() {
            return Err(Error::BoxedIn);
        }
        let mu: f64 = rng.gen();
        let below = mu <= self.epsilon;
        let random = match self.branch {
            EpsilonBranch::RandomBelow => below,
            EpsilonBranch::GreedyBelow => !below,
        };
        if random {
            let k = rng.gen_range(0..valid.count());
            return Ok((valid.iter().nth(k).expect("index below count"), PolicyDecision::Random));
        }
        let scope = match self.scope {
            GreedyScope::AllActions => ActionMask::ALL,
            GreedyScope::ValidOnly => valid,
        };
        Ok((argmax_in(q, scope).expect("non-empty mask"), PolicyDecision::Predicted))
    }
}

/// Pass-through for valid predictions; otherwise the valid action whose
/// destination is closest to `target`, ties in N, S, E, W order.
pub fn correct_action(predicted: Action, pos: GridCoord, valid: ActionMask, target: GridCoord) -> Result<(Action, PolicyDecision)> {
    if valid.contains(predicted) {
        return Ok((predicted, PolicyDecision::Predicted));
    }
    let mut best: Option<(i64, Action)> = None;
    for a in valid.iter() {
        let d = pos.step(a).distance_sq(target);
        if best.is_none_or(|(bd, _)| d < bd) {
            best = Some((d, a));
        }
    }
    best.map(|(_, a)| (a, PolicyDecision::Corrected)).ok_or(Error::BoxedIn)
}
