use alloc::collections::VecDeque;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::ops::Range;

use rand::Rng;

use crate::gridmap::{Action, ActionMask};

/// Network inputs for one time step: the resized camera image and the
/// decision-map raster.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub image: Vec<f64>,
    pub map: Vec<f64>,
}

/// Consecutive transitions share their observations through `Arc`.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: Arc<Observation>,
    pub action: Action,
    pub reward: f64,
    pub gamma: f64,
    pub next: Arc<Observation>,
    pub terminal: bool,
    pub valid_next: ActionMask,
    pub episode: u64,
}

/// Fixed-capacity FIFO replay memory.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    items: VecDeque<Transition>,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        Self { capacity, items: VecDeque::with_capacity(capacity) }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Appends, evicting the oldest transition when full.
    pub fn push(&mut self, t: Transition) {
        if self.capacity == 0 {
            return;
        }
        if self.items.len() == self.capacity {
            self.items.pop_front();
        }
        self.items.push_back(t);
    }

    pub fn get(&self, i: usize) -> Option<&Transition> {
        self.items.get(i)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        self.items.iter()
    }

    /// `batch` distinct indices, uniformly without replacement. `None` when
    /// the buffer holds fewer than `batch` transitions.
    pub fn sample_indices<R: Rng>(&self, batch: usize, rng: &mut R) -> Option<Vec<usize>> {
        if batch == 0 || self.items.len() < batch {
            return None;
        }
        Some(rand::seq::index::sample(rng, self.items.len(), batch).into_vec())
    }

    /// A contiguous run starting at a uniformly drawn position and extending
    /// forward for at most `length` transitions without leaving the episode
    /// of its first element.
    pub fn sample_segment<R: Rng>(&self, length: usize, rng: &mut R) -> Option<Range<usize>> {
        if length == 0 || self.items.is_empty() {
            return None;
        }
        let start = rng.gen_range(0..self.items.len());
        Some(start..self.episode_run_end(start, length))
    }

    fn episode_run_end(&self, start: usize, length: usize) -> usize {
        let episode = self.items[start].episode;
        let limit = (start + length).min(self.items.len());
        let mut end = start + 1;
        while end < limit && self.items[end].episode == episode {
            end += 1;
        }
        end
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn obs() -> Arc<Observation> {
        Arc::new(Observation { image: alloc::vec![0.0; 4], map: alloc::vec![0.0; 4] })
    }

    fn t(reward: f64, episode: u64) -> Transition {
        Transition {
            state: obs(),
            action: Action::North,
            reward,
            gamma: 0.95,
            next: obs(),
            terminal: false,
            valid_next: ActionMask::ALL,
            episode,
        }
    }

    #[test]
    fn fifo_eviction() {
        let mut b = ReplayBuffer::new(800);
        for i in 0..801 {
            b.push(t(i as f64, 0));
        }
        assert_eq!(b.len(), 800);
        let rewards: Vec<f64> = b.iter().map(|x| x.reward).collect();
        let expected: Vec<f64> = (1..801).map(|i| i as f64).collect();
        assert_eq!(rewards, expected);
    }

    #[test]
    fn too_small_for_batch() {
        let mut b = ReplayBuffer::new(800);
        for i in 0..31 {
            b.push(t(i as f64, 0));
        }
        assert!(b.sample_indices(32, &mut seeded(1)).is_none());
        b.push(t(0.0, 0));
        let idx = b.sample_indices(32, &mut seeded(1)).unwrap();
        let mut sorted = idx.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), 32);
    }

    #[test]
    fn segments_stay_inside_one_episode() {
        let mut b = ReplayBuffer::new(50);
        for i in 0..70u64 {
            b.push(t(0.0, i / 7));
        }
        let mut rng = seeded(3);
        for _ in 0..500 {
            let r = b.sample_segment(10, &mut rng).unwrap();
            assert!(r.len() <= 10 && !r.is_empty());
            let ep = b.get(r.start).unwrap().episode;
            assert!(r.clone().all(|i| b.get(i).unwrap().episode == ep));
        }
    }
}
