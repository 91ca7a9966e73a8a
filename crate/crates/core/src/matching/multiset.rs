use std::collections::{BTreeMap, VecDeque};

use super::{GsmFallback, MatchOutcome, Matcher, PoolEntry};

/// Greedy-shortest-feasible pool: an ordered multiset keyed by remaining
/// staking time. Equal times leave in (cost, id) order.
#[derive(Clone, Debug)]
pub struct AvailabilityMultiset {
    tree: BTreeMap<u32, VecDeque<PoolEntry>>,
    fallback: GsmFallback,
    len: usize,
    ops: u64,
}

impl AvailabilityMultiset {
    pub fn new(fallback: GsmFallback) -> Self {
        AvailabilityMultiset { tree: BTreeMap::new(), fallback, len: 0, ops: 0 }
    }

    pub fn from_pool(pool: &[PoolEntry], fallback: GsmFallback) -> Self {
        let mut s = Self::new(fallback);
        for &e in pool {
            s.insert(e);
        }
        s
    }

    /// Smallest key with `tau >= hours`.
    pub fn lower_bound(&self, hours: u32) -> Option<u32> {
        self.tree.range(hours..).next().map(|(&k, _)| k)
    }

    pub fn tau_max(&self) -> Option<u32> {
        self.tree.last_key_value().map(|(&k, _)| k)
    }

    /// Comparisons charged for one ordered-map lookup.
    fn depth(&self) -> u64 {
        64 - (self.tree.len() as u64).leading_zeros() as u64 + 1
    }

    fn take(&mut self, key: u32) -> PoolEntry {
        self.ops += self.depth();
        let queue = self.tree.get_mut(&key).expect("key present");
        let e = queue.pop_front().expect("nonempty key");
        if queue.is_empty() {
            self.tree.remove(&key);
        }
        self.len -= 1;
        e
    }
}

impl Matcher for AvailabilityMultiset {
    fn insert(&mut self, entry: PoolEntry) {
        self.ops += self.depth();
        let queue = self.tree.entry(entry.tau).or_default();
        let at = queue.partition_point(|q| (q.cost, q.id) < (entry.cost, entry.id));
        queue.insert(at, entry);
        self.len += 1;
    }

    fn match_job(&mut self, hours: u32) -> MatchOutcome {
        if self.len == 0 {
            return MatchOutcome::Empty;
        }
        self.ops += self.depth();
        if let Some(key) = self.lower_bound(hours) {
            return MatchOutcome::Matched { provider: self.take(key), feasible: true };
        }
        match self.fallback {
            GsmFallback::Reject => MatchOutcome::Rejected,
            GsmFallback::Longest => {
                let key = self.tau_max().expect("nonempty");
                MatchOutcome::Matched { provider: self.take(key), feasible: false }
            }
        }
    }

    fn len(&self) -> usize {
        self.len
    }

    fn ops(&self) -> u64 {
        self.ops
    }
}
