use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::{MatchOutcome, Matcher, PoolEntry};
use crate::money::Money;

/// Node summary: cheapest provider in the subtree as (cost, leaf, id).
type Best = Option<(Money, u32, u32)>;

fn better(a: Best, b: Best) -> Best {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (x, None) => x,
        (None, y) => y,
    }
}

/// Cheapest-feasible pool: a segment tree over the compressed distinct
/// staking times with a (cost, id) min-heap at every leaf.
#[derive(Clone, Debug)]
pub struct FeasibilityTree {
    taus: Vec<u32>,
    leaves: Vec<BinaryHeap<Reverse<(Money, u32)>>>,
    size: usize,
    best: Vec<Best>,
    len: usize,
    ops: u64,
    reject: bool,
}

impl FeasibilityTree {
    pub fn from_pool(pool: &[PoolEntry]) -> Self {
        let mut taus: Vec<u32> = pool.iter().map(|e| e.tau).collect();
        taus.sort_unstable();
        taus.dedup();
        let size = taus.len().next_power_of_two().max(1);
        let mut leaves = vec![BinaryHeap::new(); taus.len()];
        for e in pool {
            let u = taus.binary_search(&e.tau).expect("tau compressed");
            leaves[u].push(Reverse((e.cost, e.id)));
        }
        let mut best = vec![None; 2 * size];
        for (u, heap) in leaves.iter().enumerate() {
            best[size + u] = heap.peek().map(|Reverse((c, id))| (*c, u as u32, *id));
        }
        for i in (1..size).rev() {
            best[i] = better(best[2 * i], best[2 * i + 1]);
        }
        FeasibilityTree { taus, leaves, size, best, len: pool.len(), ops: pool.len() as u64, reject: false }
    }

    /// Variant that rejects instead of falling back to the longest provider.
    pub fn rejecting(pool: &[PoolEntry]) -> Self {
        FeasibilityTree { reject: true, ..Self::from_pool(pool) }
    }

    fn entries(&self) -> Vec<PoolEntry> {
        let mut out = Vec::with_capacity(self.len);
        for (u, heap) in self.leaves.iter().enumerate() {
            out.extend(heap.iter().map(|Reverse((c, id))| PoolEntry::new(*id, self.taus[u], *c)));
        }
        out
    }

    fn refresh(&mut self, u: usize) {
        let mut node = self.size + u;
        self.best[node] = self.leaves[u].peek().map(|Reverse((c, id))| (*c, u as u32, *id));
        while node > 1 {
            node /= 2;
            self.ops += 1;
            self.best[node] = better(self.best[2 * node], self.best[2 * node + 1]);
        }
    }

    /// Cheapest provider among leaves `from..`.
    pub fn suffix_min(&mut self, from: usize) -> Best {
        let mut res = None;
        let (mut l, mut r) = (from + self.size, self.taus.len() + self.size);
        while l < r {
            self.ops += 1;
            if l & 1 == 1 {
                res = better(res, self.best[l]);
                l += 1;
            }
            if r & 1 == 1 {
                r -= 1;
                res = better(res, self.best[r]);
            }
            l /= 2;
            r /= 2;
        }
        res
    }

    /// Leaf index of the largest occupied staking time.
    pub fn rightmost_nonempty(&mut self) -> Option<usize> {
        self.best[1]?;
        let mut node = 1;
        while node < self.size {
            self.ops += 1;
            node = if self.best[2 * node + 1].is_some() { 2 * node + 1 } else { 2 * node };
        }
        Some(node - self.size)
    }

    fn pop_leaf(&mut self, u: usize) -> PoolEntry {
        let heap_len = self.leaves[u].len() as u64;
        self.ops += 64 - heap_len.leading_zeros() as u64;
        let Reverse((cost, id)) = self.leaves[u].pop().expect("occupied leaf");
        self.len -= 1;
        self.refresh(u);
        PoolEntry::new(id, self.taus[u], cost)
    }
}

impl Matcher for FeasibilityTree {
    fn insert(&mut self, entry: PoolEntry) {
        match self.taus.binary_search(&entry.tau) {
            Ok(u) => {
                self.leaves[u].push(Reverse((entry.cost, entry.id)));
                self.len += 1;
                self.refresh(u);
            }
            Err(_) => {
                let mut all = self.entries();
                all.push(entry);
                let ops = self.ops + all.len() as u64;
                *self = Self::from_pool(&all);
                self.ops = ops;
            }
        }
    }

    fn match_job(&mut self, hours: u32) -> MatchOutcome {
        if self.len == 0 {
            return MatchOutcome::Empty;
        }
        let from = self.taus.partition_point(|&t| t < hours);
        self.ops += 64 - (self.taus.len() as u64).leading_zeros() as u64;
        if let Some((_, u, _)) = self.suffix_min(from) {
            return MatchOutcome::Matched { provider: self.pop_leaf(u as usize), feasible: true };
        }
        if self.reject {
            return MatchOutcome::Rejected;
        }
        let u = self.rightmost_nonempty().expect("nonempty pool");
        MatchOutcome::Matched { provider: self.pop_leaf(u), feasible: false }
    }

    fn len(&self) -> usize {
        self.len
    }

    fn ops(&self) -> u64 {
        self.ops
    }
}
