use std::collections::VecDeque;

use super::{MatchOutcome, Matcher, PoolEntry};
use crate::money::Money;

/// Greedy-cheapest pool: one FIFO bucket per integer cost tick and a pointer
/// to the lowest possibly nonempty bucket.
#[derive(Clone, Debug)]
pub struct BucketQueue {
    buckets: Vec<VecDeque<PoolEntry>>,
    pointer: usize,
    len: usize,
    ops: u64,
}

impl BucketQueue {
    /// Buckets `0..=c_max`; costs above `c_max` grow the array on insert.
    pub fn with_max_cost(c_max: Money) -> Self {
        BucketQueue { buckets: vec![VecDeque::new(); c_max.ticks() as usize + 1], pointer: 0, len: 0, ops: 0 }
    }

    pub fn from_pool(pool: &[PoolEntry], price: Money) -> Self {
        let mut q = Self::with_max_cost(price);
        let mut sorted = pool.to_vec();
        sorted.sort_by_key(|e| e.id);
        for e in sorted {
            q.insert(e);
        }
        q
    }

    pub fn push(&mut self, entry: PoolEntry) {
        let c = entry.cost.ticks() as usize;
        if c >= self.buckets.len() {
            let grown = (c + 1).max(2 * self.buckets.len());
            self.buckets.resize(grown, VecDeque::new());
        }
        let bucket = &mut self.buckets[c];
        // Same-cost entries leave in id order.
        if bucket.back().is_none_or(|b| b.id < entry.id) {
            bucket.push_back(entry);
        } else {
            let at = bucket.partition_point(|b| b.id < entry.id);
            bucket.insert(at, entry);
        }
        self.pointer = self.pointer.min(c);
        self.len += 1;
        self.ops += 1;
    }

    /// Removes a provider of globally minimal cost.
    pub fn pop_min(&mut self) -> Option<PoolEntry> {
        if self.len == 0 {
            return None;
        }
        while self.buckets[self.pointer].is_empty() {
            self.pointer += 1;
            self.ops += 1;
        }
        self.ops += 1;
        self.len -= 1;
        self.buckets[self.pointer].pop_front()
    }

    pub fn capacity_ticks(&self) -> usize {
        self.buckets.len() - 1
    }
}

impl Matcher for BucketQueue {
    fn insert(&mut self, entry: PoolEntry) {
        self.push(entry);
    }

    fn match_job(&mut self, hours: u32) -> MatchOutcome {
        match self.pop_min() {
            Some(p) => MatchOutcome::Matched { provider: p, feasible: p.tau >= hours },
            None => MatchOutcome::Empty,
        }
    }

    fn len(&self) -> usize {
        self.len
    }

    fn ops(&self) -> u64 {
        self.ops
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pops_in_cost_then_id_order_and_grows() {
        let mut q = BucketQueue::with_max_cost(Money::from_ticks(4));
        q.push(PoolEntry::new(3, 1, Money::from_ticks(2)));
        q.push(PoolEntry::new(1, 1, Money::from_ticks(2)));
        q.push(PoolEntry::new(2, 1, Money::from_ticks(9)));
        q.push(PoolEntry::new(0, 1, Money::from_ticks(3)));
        assert!(q.capacity_ticks() >= 9);
        let order: Vec<u32> = std::iter::from_fn(|| q.pop_min()).map(|e| e.id).collect();
        assert_eq!(order, vec![1, 3, 0, 2]);
    }

    #[test]
    fn insert_below_pointer_rewinds() {
        let mut q = BucketQueue::with_max_cost(Money::from_ticks(10));
        q.push(PoolEntry::new(0, 1, Money::from_ticks(8)));
        q.push(PoolEntry::new(1, 1, Money::from_ticks(9)));
        assert_eq!(q.pop_min().unwrap().id, 0);
        q.push(PoolEntry::new(2, 1, Money::from_ticks(1)));
        assert_eq!(q.pop_min().unwrap().id, 2);
        assert_eq!(q.pop_min().unwrap().id, 1);
        assert_eq!(q.pop_min(), None);
    }
}
