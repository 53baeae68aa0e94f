//! Fixed-capacity experience replay.

use rand::seq::index;

use crate::error::{Error, Result};
use crate::rng::Rng;

/// Ring buffer that overwrites its oldest entry once full.
#[derive(Debug, Clone)]
pub struct ReplayBuffer<T> {
    items: Vec<T>,
    capacity: usize,
    next: usize,
}

impl<T> ReplayBuffer<T> {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::pre("replay capacity must be positive"));
        }
        Ok(Self {
            items: Vec::with_capacity(capacity.min(1 << 16)),
            capacity,
            next: 0,
        })
    }

    pub fn push(&mut self, item: T) {
        if self.items.len() < self.capacity {
            self.items.push(item);
        } else {
            self.items[self.next] = item;
        }
        self.next = (self.next + 1) % self.capacity;
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

    /// Entries from oldest to newest.
    pub fn iter(&self) -> impl Iterator<Item = &T> {
        let split = if self.items.len() < self.capacity {
            0
        } else {
            self.next
        };
        self.items[split..].iter().chain(&self.items[..split])
    }

    /// Uniform sample of `n` distinct entries.
    pub fn sample(&self, n: usize, rng: &mut Rng) -> Result<Vec<&T>> {
        if n == 0 || n > self.items.len() {
            return Err(Error::pre(format!(
                "cannot draw {n} distinct items from {}",
                self.items.len()
            )));
        }
        Ok(index::sample(rng, self.items.len(), n)
            .into_iter()
            .map(|i| &self.items[i])
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn overwrites_oldest_first() {
        let mut b = ReplayBuffer::new(3).unwrap();
        for i in 0..5 {
            b.push(i);
        }
        assert_eq!(b.len(), 3);
        assert_eq!(b.iter().copied().collect::<Vec<_>>(), vec![2, 3, 4]);
    }

    #[test]
    fn sample_is_without_replacement() {
        let mut b = ReplayBuffer::new(10).unwrap();
        for i in 0..10 {
            b.push(i);
        }
        let mut s: Vec<i32> = b
            .sample(10, &mut seeded(1))
            .unwrap()
            .into_iter()
            .copied()
            .collect();
        s.sort();
        assert_eq!(s, (0..10).collect::<Vec<_>>());
        assert!(b.sample(11, &mut seeded(1)).is_err());
    }
}
