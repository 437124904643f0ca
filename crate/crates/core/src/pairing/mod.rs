//! User pairing as minimum-weight perfect matching.
//!
//! Users are the vertices of a complete graph whose edge `(i, j)` costs the
//! pair's summed distortion `d_ij`, or is [`PairCostMatrix::INFEASIBLE`] when
//! either user would exceed the distortion cap. A pairing is a perfect
//! matching; the best one is found with a blossom algorithm, and
//! [`MatchingEnumerator`] walks the next-best ones in order.

mod blossom;
mod exhaustive;
mod kbest;

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::distortion::DistortionTable;
use crate::error::{Error, Result};

pub use exhaustive::{brute_force_mwpm, enumerate_matchings, BRUTE_FORCE_MAX_N};
pub use kbest::{k_best_matchings, MatchingEnumerator};

/// Symmetric pair-cost matrix with a dedicated marker for forbidden pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairCostMatrix {
    n: usize,
    costs: Vec<Option<f64>>,
}

impl PairCostMatrix {
    /// Marker for a pair that may never be matched (and for the diagonal).
    pub const INFEASIBLE: Option<f64> = None;

    /// Build from a cost function evaluated on `i < j`; `None` marks the pair
    /// infeasible.
    pub fn from_fn<F>(n: usize, mut cost: F) -> Result<Self>
    where
        F: FnMut(usize, usize) -> Option<f64>,
    {
        let mut costs = vec![None; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let c = cost(i, j);
                if let Some(v) = c {
                    if !(v >= 0.0) || !v.is_finite() {
                        return Err(Error::Input(format!("cost of pair ({i}, {j}) must be finite and >= 0, got {v}")));
                    }
                }
                costs[i * n + j] = c;
                costs[j * n + i] = c;
            }
        }
        Ok(PairCostMatrix { n, costs })
    }

    /// Build from a dense matrix; the diagonal is ignored and the two
    /// triangles must agree.
    pub fn from_rows(rows: &[Vec<Option<f64>>]) -> Result<Self> {
        let n = rows.len();
        if let Some(r) = rows.iter().position(|r| r.len() != n) {
            return Err(Error::Input(format!("row {r} has {} entries, expected {n}", rows[r].len())));
        }
        for i in 0..n {
            for j in i + 1..n {
                if rows[i][j] != rows[j][i] {
                    return Err(Error::Input(format!("cost matrix not symmetric at ({i}, {j})")));
                }
            }
        }
        Self::from_fn(n, |i, j| rows[i][j])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.costs[i * self.n + j]
    }

    pub fn is_feasible(&self, i: usize, j: usize) -> bool {
        self.get(i, j).is_some()
    }

    /// Copy with extra pairs marked infeasible.
    pub fn forbid(&self, pairs: &[(usize, usize)]) -> Self {
        let mut out = self.clone();
        for &(i, j) in pairs {
            out.costs[i * self.n + j] = None;
            out.costs[j * self.n + i] = None;
        }
        out
    }

    /// Copy with every finite cost multiplied by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Self {
        let costs = self.costs.iter().map(|c| c.map(|v| v * factor)).collect();
        PairCostMatrix { n: self.n, costs }
    }

    /// Finite edges `(i, j, cost)` with `i < j`, in row-major order.
    pub fn finite_edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| (i + 1..self.n).filter_map(move |j| self.get(i, j).map(|c| (i, j, c))))
    }
}

/// Edge weights from a distortion table: `d_ij` when both users stay within
/// `d_max`, infeasible otherwise.
pub fn build_cost_matrix(table: &DistortionTable, d_max: f64) -> Result<PairCostMatrix> {
    PairCostMatrix::from_fn(table.n(), |i, j| {
        let within = table.per_user(i, j) <= d_max && table.per_user(j, i) <= d_max;
        within.then(|| table.pair_sum(i, j))
    })
}

/// A perfect matching in canonical form: each pair is `(i, j)` with `i < j`,
/// pairs sorted by their first element.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matching {
    pub pairs: Vec<(usize, usize)>,
    /// Sum of pair costs; infinite if any pair is infeasible.
    pub total_cost: f64,
}

impl Matching {
    /// Canonicalise `pairs`, check that they partition `0..n` and sum their
    /// costs. Infeasible pairs are allowed and make the total infinite.
    pub fn new(pairs: Vec<(usize, usize)>, costs: &PairCostMatrix) -> Result<Self> {
        let n = costs.n();
        let mut pairs: Vec<(usize, usize)> = pairs.into_iter().map(|(a, b)| (a.min(b), a.max(b))).collect();
        pairs.sort_unstable();
        let mut seen = vec![false; n];
        for &(i, j) in &pairs {
            for v in [i, j] {
                if v >= n || seen[v] || i == j {
                    return Err(Error::Input(format!("pairs do not form a matching on {n} users (at {v})")));
                }
                seen[v] = true;
            }
        }
        if pairs.len() * 2 != n {
            return Err(Error::Input(format!("{} pairs cannot cover {n} users", pairs.len())));
        }
        let total_cost = pairs.iter().map(|&(i, j)| costs.get(i, j).unwrap_or(f64::INFINITY)).sum();
        Ok(Matching { pairs, total_cost })
    }

    pub fn is_finite(&self) -> bool {
        self.total_cost.is_finite()
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Ascending total cost, ties broken by the canonical pair list.
    pub fn rank_cmp(&self, other: &Matching) -> Ordering {
        self.total_cost.total_cmp(&other.total_cost).then_with(|| self.pairs.cmp(&other.pairs))
    }
}

/// Minimum-cost perfect matching, or `None` when no perfect matching avoids
/// every infeasible pair.
pub fn mwpm(costs: &PairCostMatrix) -> Option<Matching> {
    mwpm_restricted(costs, &[], &[])
}

/// Minimum-cost perfect matching that contains every pair in `forced` and
/// none in `forbidden`.
pub(crate) fn mwpm_restricted(costs: &PairCostMatrix, forced: &[(usize, usize)], forbidden: &[(usize, usize)]) -> Option<Matching> {
    let n = costs.n();
    if n % 2 != 0 {
        return None;
    }
    let mut taken = vec![false; n];
    for &(i, j) in forced {
        costs.get(i, j)?;
        taken[i] = true;
        taken[j] = true;
    }
    let free: Vec<usize> = (0..n).filter(|&v| !taken[v]).collect();
    let mut local = vec![usize::MAX; n];
    for (k, &v) in free.iter().enumerate() {
        local[v] = k;
    }
    let banned = |i: usize, j: usize| forbidden.iter().any(|&(a, b)| (a, b) == (i, j) || (b, a) == (i, j));

    let mut edges = Vec::new();
    for (a, &i) in free.iter().enumerate() {
        for &j in &free[a + 1..] {
            if let Some(c) = costs.get(i, j) {
                if !banned(i, j) {
                    // Maximum-cardinality matching on negated costs.
                    edges.push((local[i], local[j], -c));
                }
            }
        }
    }
    let mate = blossom::max_weight_matching(free.len(), &edges, true);
    let mut pairs = forced.to_vec();
    for (k, m) in mate.iter().enumerate() {
        match m {
            Some(other) if k < *other => pairs.push((free[k], free[*other])),
            Some(_) => {}
            None => return None,
        }
    }
    Matching::new(pairs, costs).ok()
}
