use std::collections::VecDeque;
use std::sync::Arc;

use hgff_core::SimState;
use rand::Rng;

/// One stored step. States are shared with neighbouring transitions of the
/// same episode.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    /// Index into the trainer's instance list.
    pub instance: usize,
    pub state: Arc<SimState>,
    pub action: usize,
    pub reward: f64,
    pub next: Arc<SimState>,
    pub done: bool,
}

/// Fixed-capacity FIFO replay memory.
#[derive(Debug, Clone)]
pub struct ReplayBuffer<T = Transition> {
    capacity: usize,
    items: VecDeque<T>,
}

impl<T> ReplayBuffer<T> {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self {
            capacity,
            items: VecDeque::with_capacity(capacity.min(1 << 16)),
        }
    }

    pub fn push(&mut self, item: T) {
        if self.items.len() == self.capacity {
            self.items.pop_front();
        }
        self.items.push_back(item);
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn iter(&self) -> impl Iterator<Item = &T> {
        self.items.iter()
    }

    /// `n` distinct items drawn uniformly, or `None` while fewer than `n`
    /// are stored.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Option<Vec<&T>> {
        if n > self.items.len() {
            return None;
        }
        Some(
            rand::seq::index::sample(rng, self.items.len(), n)
                .into_iter()
                .map(|i| &self.items[i])
                .collect(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;

    proptest! {
        #[test]
        fn eviction_is_fifo(capacity in 1usize..50, extra in 0usize..60) {
            let mut buf = ReplayBuffer::new(capacity);
            for i in 0..capacity + extra {
                buf.push(i);
            }
            prop_assert_eq!(buf.len(), capacity);
            let kept: Vec<usize> = buf.iter().copied().collect();
            let expect: Vec<usize> = (extra..capacity + extra).collect();
            prop_assert_eq!(kept, expect);
        }
    }

    #[test]
    fn sample_needs_enough_items() {
        let mut buf = ReplayBuffer::new(10);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        buf.push(1);
        assert!(buf.sample(2, &mut rng).is_none());
        buf.push(2);
        let mut s: Vec<i32> = buf
            .sample(2, &mut rng)
            .unwrap()
            .into_iter()
            .copied()
            .collect();
        s.sort();
        assert_eq!(s, vec![1, 2]);
    }
}
