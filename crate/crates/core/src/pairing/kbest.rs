use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use super::{mwpm_restricted, Matching, PairCostMatrix};

/// A subproblem of the partition: its best matching under the constraints.
struct Node {
    matching: Matching,
    forced: Vec<(usize, usize)>,
    forbidden: Vec<(usize, usize)>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    // Reversed so the max-heap pops the cheapest matching.
    fn cmp(&self, other: &Self) -> Ordering {
        other.matching.rank_cmp(&self.matching)
    }
}

/// Lazily yields finite perfect matchings in non-decreasing cost.
///
/// Equal-cost matchings come out in lexicographic order of their pair
/// lists, so the sequence does not depend on which optimum the matching
/// routine happens to return.
pub struct MatchingEnumerator {
    costs: PairCostMatrix,
    heap: BinaryHeap<Node>,
    ready: VecDeque<Matching>,
}

impl MatchingEnumerator {
    pub fn new(costs: &PairCostMatrix) -> Self {
        let mut heap = BinaryHeap::new();
        if let Some(matching) = mwpm_restricted(costs, &[], &[]) {
            heap.push(Node { matching, forced: Vec::new(), forbidden: Vec::new() });
        }
        MatchingEnumerator { costs: costs.clone(), heap, ready: VecDeque::new() }
    }

    fn expand(&mut self, node: &Node) {
        let free: Vec<(usize, usize)> = node.matching.pairs.iter().copied().filter(|p| !node.forced.contains(p)).collect();
        // With one free pair left, the child would have to forbid its only option.
        for t in 0..free.len().saturating_sub(1) {
            let mut forced = node.forced.clone();
            forced.extend_from_slice(&free[..t]);
            let mut forbidden = node.forbidden.clone();
            forbidden.push(free[t]);
            if let Some(matching) = mwpm_restricted(&self.costs, &forced, &forbidden) {
                self.heap.push(Node { matching, forced, forbidden });
            }
        }
    }

    fn refill(&mut self) {
        let Some(first) = self.heap.pop() else { return };
        let cost = first.matching.total_cost;
        let mut group = Vec::new();
        let mut next = Some(first);
        while let Some(node) = next {
            self.expand(&node);
            group.push(node.matching);
            next = match self.heap.peek() {
                Some(top) if top.matching.total_cost == cost => self.heap.pop(),
                _ => None,
            };
        }
        group.sort_by(|a, b| a.rank_cmp(b));
        self.ready.extend(group);
    }
}

impl Iterator for MatchingEnumerator {
    type Item = Matching;

    fn next(&mut self) -> Option<Matching> {
        if self.ready.is_empty() {
            self.refill();
        }
        self.ready.pop_front()
    }
}

/// The `w` cheapest finite perfect matchings (fewer if fewer exist).
pub fn k_best_matchings(costs: &PairCostMatrix, w: usize) -> Vec<Matching> {
    MatchingEnumerator::new(costs).take(w).collect()
}
