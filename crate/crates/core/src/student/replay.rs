use std::collections::VecDeque;

use crate::rng::SplitMix64;

/// FIFO ring buffer. Each item carries a flag marking it as a priority item
/// (a positive-reward transition); see [`ReplayBuffer::sample`].
#[derive(Debug, Clone)]
pub struct ReplayBuffer<T> {
    capacity: usize,
    items: VecDeque<T>,
    /// Insertion sequence number of the oldest stored item.
    head_seq: u64,
    /// Sequence numbers of stored priority items, oldest first.
    flagged: VecDeque<u64>,
}

impl<T> ReplayBuffer<T> {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        ReplayBuffer { capacity, items: VecDeque::new(), head_seq: 0, flagged: VecDeque::new() }
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

    pub fn push(&mut self, item: T, priority: bool) {
        if self.items.len() == self.capacity {
            self.items.pop_front();
            self.head_seq += 1;
            while self.flagged.front().is_some_and(|&s| s < self.head_seq) {
                self.flagged.pop_front();
            }
        }
        if priority {
            self.flagged.push_back(self.head_seq + self.items.len() as u64);
        }
        self.items.push_back(item);
    }

    pub fn get(&self, i: usize) -> Option<&T> {
        self.items.get(i)
    }

    /// Oldest first.
    pub fn iter(&self) -> impl Iterator<Item = &T> {
        self.items.iter()
    }

    pub fn num_flagged(&self) -> usize {
        self.flagged.len()
    }

    /// `n` indices drawn uniformly with replacement.
    pub fn sample_uniform(&self, n: usize, rng: &mut SplitMix64) -> Vec<usize> {
        if self.items.is_empty() {
            return Vec::new();
        }
        (0..n).map(|_| rng.below(self.items.len())).collect()
    }

    /// `n` indices: `round(priority_fraction · n)` uniformly from priority items (when
    /// any are stored), the rest uniformly from the whole buffer.
    pub fn sample(&self, n: usize, priority_fraction: f64, rng: &mut SplitMix64) -> Vec<usize> {
        if self.items.is_empty() {
            return Vec::new();
        }
        let n_flagged = if self.flagged.is_empty() { 0 } else { (priority_fraction * n as f64).round() as usize };
        let mut out: Vec<usize> = (0..n_flagged)
            .map(|_| (self.flagged[rng.below(self.flagged.len())] - self.head_seq) as usize)
            .collect();
        out.extend(self.sample_uniform(n - n_flagged, rng));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fifo_keeps_last_capacity_items() {
        let mut b = ReplayBuffer::new(5);
        for i in 0..12 {
            b.push(i, i % 3 == 0);
        }
        assert_eq!(b.iter().copied().collect::<Vec<_>>(), vec![7, 8, 9, 10, 11]);
        assert_eq!(b.num_flagged(), 1);
        let mut rng = SplitMix64::new(1);
        for i in b.sample(50, 1.0, &mut rng) {
            assert_eq!(*b.get(i).unwrap(), 9);
        }
    }

    #[test]
    fn priority_fraction_splits_batch() {
        let mut b = ReplayBuffer::new(1000);
        for i in 0..1000 {
            b.push(i, i < 10);
        }
        let mut rng = SplitMix64::new(2);
        let idx = b.sample(64, 0.5, &mut rng);
        assert_eq!(idx.len(), 64);
        assert!(idx[..32].iter().all(|&i| i < 10));
        let empty: ReplayBuffer<u8> = ReplayBuffer::new(3);
        assert!(empty.sample(4, 0.5, &mut rng).is_empty());
    }
}
