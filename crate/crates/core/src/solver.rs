//! Joint pairing and bandwidth allocation, plus the baseline strategies.
//!
//! The proposed method walks perfect matchings in ascending total
//! distortion and returns the first one whose KKT bandwidth allocation meets
//! every budget. Baselines fix a pairing heuristically and either split the
//! band equally or use the KKT allocator; their budget violations are
//! reported, not enforced.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bandwidth::{self, AllocationReport, Infeasibility};
use crate::error::{Error, Result};
use crate::latency_energy as le;
use crate::pairing::{self, Matching, MatchingEnumerator, PairCostMatrix};
use crate::scenario::Scenario;

pub const DEFAULT_W_COUNT: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Proposed,
    RandomEqual,
    GreedyEqual,
    ChannelBalancedEqual,
    RandomKkt,
}

impl Strategy {
    pub const ALL: [Strategy; 5] =
        [Strategy::Proposed, Strategy::RandomEqual, Strategy::GreedyEqual, Strategy::ChannelBalancedEqual, Strategy::RandomKkt];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Proposed => "proposed",
            Strategy::RandomEqual => "random_equal",
            Strategy::GreedyEqual => "greedy_equal",
            Strategy::ChannelBalancedEqual => "channel_balanced_equal",
            Strategy::RandomKkt => "random_kkt",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL.into_iter().find(|st| st.name() == s).ok_or_else(|| Error::Input(format!("unknown strategy {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    /// Candidate batch size; the search continues batch by batch with the
    /// batch size doubling until matchings run out.
    pub w_count: usize,
    /// Hard cap on candidates examined; `None` searches exhaustively.
    #[serde(default)]
    pub max_candidates: Option<usize>,
    /// Before enumerating, drop pairs that no feasible matching can contain
    /// (see [`doomed_pairs`]). The selected matching is unchanged; only
    /// `candidates_tried` shrinks.
    #[serde(default = "default_true")]
    pub prune: bool,
}

fn default_true() -> bool {
    true
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { w_count: DEFAULT_W_COUNT, max_candidates: None, prune: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub strategy: Strategy,
    pub matching: Option<Matching>,
    pub allocation: Option<AllocationReport>,
    /// Total pair cost of the matching; infinite if it uses a pair over the
    /// distortion cap.
    pub total_distortion: Option<f64>,
    pub candidates_tried: usize,
    /// Budgets met and no pair over the distortion cap.
    pub feasible: bool,
    pub infeasibility_reason: Option<Infeasibility>,
}

impl SolveResult {
    fn infeasible(strategy: Strategy, candidates_tried: usize) -> Self {
        SolveResult {
            strategy,
            matching: None,
            allocation: None,
            total_distortion: None,
            candidates_tried,
            feasible: false,
            infeasibility_reason: None,
        }
    }

    fn from_parts(strategy: Strategy, matching: Matching, allocation: AllocationReport, candidates_tried: usize) -> Self {
        let feasible = allocation.feasible && matching.is_finite();
        SolveResult {
            strategy,
            total_distortion: Some(matching.total_cost),
            infeasibility_reason: allocation.infeasibility_reason,
            matching: Some(matching),
            allocation: Some(allocation),
            candidates_tried,
            feasible,
        }
    }
}

/// Cost matrix of a scenario under its distortion cap.
pub fn cost_matrix(sc: &Scenario) -> Result<PairCostMatrix> {
    pairing::build_cost_matrix(&sc.distortions, sc.cfg.d_cap())
}

/// Matchings in the order the proposed method inspects them.
pub fn candidate_order(costs: &PairCostMatrix) -> MatchingEnumerator {
    MatchingEnumerator::new(costs)
}

/// Smallest latency bound of pair `(i, j)` over the configured group powers.
fn cheapest_bound(sc: &Scenario, i: usize, j: usize) -> Option<f64> {
    let mut powers = sc.cfg.group_powers.clone();
    powers.sort_by(f64::total_cmp);
    powers.dedup();
    powers.iter().filter_map(|&p| bandwidth::b_min_pair((i, j), &sc.users, p, &sc.cfg).b_min).min_by(f64::total_cmp)
}

/// Why pruning found no matching that could meet the budgets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hopeless {
    /// No perfect matching of latency-feasible pairs exists.
    Latency,
    /// Every such matching needs more than `B^max` just for its bounds.
    BandwidthSum,
}

/// Pairs that cannot appear in any budget-feasible matching.
///
/// A pair is doomed when it is latency-infeasible, or when its bound plus
/// the cheapest bounds of a completion of the remaining users already
/// exceeds `B^max`. Both tests use lower bounds only, so no feasible
/// matching is ever removed. `Err(_)` means nothing can be feasible.
pub fn doomed_pairs(sc: &Scenario, costs: &PairCostMatrix) -> Result<std::result::Result<Vec<(usize, usize)>, Hopeless>> {
    let n = costs.n();
    let limit = sc.cfg.b_max * (1.0 + bandwidth::OUTER_REL_TOL);
    let bounds = PairCostMatrix::from_fn(n, |i, j| if costs.is_feasible(i, j) { cheapest_bound(sc, i, j) } else { None })?;
    match pairing::mwpm(&bounds) {
        None => return Ok(Err(Hopeless::Latency)),
        Some(best) if best.total_cost > limit => return Ok(Err(Hopeless::BandwidthSum)),
        Some(_) => {}
    }
    let mut doomed = Vec::new();
    for (i, j, _) in costs.finite_edges() {
        let keep = match bounds.get(i, j) {
            None => false,
            Some(l) if l > limit => false,
            Some(_) => pairing::mwpm_restricted(&bounds, &[(i, j)], &[]).is_some_and(|m| m.total_cost <= limit),
        };
        if !keep {
            doomed.push((i, j));
        }
    }
    Ok(Ok(doomed))
}

/// First matching (ascending distortion) whose KKT allocation meets every
/// budget.
pub fn solve_proposed(sc: &Scenario, opts: &SolveOptions) -> Result<SolveResult> {
    if opts.w_count == 0 {
        return Err(Error::Input("candidate count must be at least 1".into()));
    }
    let strategy = Strategy::Proposed;
    let mut costs = cost_matrix(sc)?;
    // Compute energy does not depend on the pairing: if it alone breaks the
    // budget, no candidate can pass.
    if le::e_const(&sc.users, &sc.cfg) > sc.cfg.e_max {
        let mut r = SolveResult::infeasible(strategy, 0);
        r.infeasibility_reason = Some(Infeasibility::Energy);
        return Ok(r);
    }
    if opts.prune && pairing::mwpm(&costs).is_some() {
        match doomed_pairs(sc, &costs)? {
            Ok(doomed) => costs = costs.forbid(&doomed),
            Err(why) => {
                let mut r = SolveResult::infeasible(strategy, 0);
                r.infeasibility_reason = Some(match why {
                    Hopeless::Latency => Infeasibility::Latency,
                    Hopeless::BandwidthSum => Infeasibility::BandwidthSum,
                });
                return Ok(r);
            }
        }
    }

    let mut candidates = candidate_order(&costs);
    let mut tried = 0;
    let mut batch = opts.w_count;
    let cap = opts.max_candidates.unwrap_or(usize::MAX);
    loop {
        let mut exhausted = true;
        for m in candidates.by_ref().take(batch) {
            exhausted = false;
            if tried == cap {
                return Ok(SolveResult::infeasible(strategy, tried));
            }
            tried += 1;
            let report = bandwidth::check_feasibility(&m.pairs, &sc.users, &sc.cfg);
            if report.feasible {
                return Ok(SolveResult::from_parts(strategy, m, report, tried));
            }
        }
        if exhausted {
            return Ok(SolveResult::infeasible(strategy, tried));
        }
        batch = batch.saturating_mul(2);
    }
}

/// Uniform random perfect matching: shuffle, then pair neighbours.
pub fn random_matching<R: Rng + ?Sized>(costs: &PairCostMatrix, rng: &mut R) -> Matching {
    let mut order: Vec<usize> = (0..costs.n()).collect();
    order.shuffle(rng);
    let pairs = order.chunks_exact(2).map(|c| (c[0], c[1])).collect();
    Matching::new(pairs, costs).expect("shuffled pairs form a matching")
}

/// Repeatedly take the cheapest finite pair among unmatched users
/// (lowest `(i, j)` on ties). `None` on a dead end.
pub fn greedy_matching(costs: &PairCostMatrix) -> Option<Matching> {
    let mut edges: Vec<(usize, usize, f64)> = costs.finite_edges().collect();
    edges.sort_by(|a, b| a.2.total_cmp(&b.2).then((a.0, a.1).cmp(&(b.0, b.1))));
    let mut used = vec![false; costs.n()];
    let mut pairs = Vec::with_capacity(costs.n() / 2);
    for (i, j, _) in edges {
        if !used[i] && !used[j] {
            used[i] = true;
            used[j] = true;
            pairs.push((i, j));
        }
    }
    if pairs.len() * 2 != costs.n() {
        return None;
    }
    Matching::new(pairs, costs).ok()
}

/// Sort by linear gain, strongest first (stable), and pair rank `r` with
/// rank `N - 1 - r`.
pub fn channel_balanced_matching(sc: &Scenario, costs: &PairCostMatrix) -> Matching {
    let mut order: Vec<usize> = (0..sc.users.len()).collect();
    order.sort_by(|&a, &b| sc.users[b].channel.gain_linear.total_cmp(&sc.users[a].channel.gain_linear));
    let n = order.len();
    let pairs = (0..n / 2).map(|r| (order[r], order[n - 1 - r])).collect();
    Matching::new(pairs, costs).expect("rank pairing forms a matching")
}

fn equal_result(sc: &Scenario, strategy: Strategy, m: Matching) -> SolveResult {
    let report = bandwidth::equal_split(&m.pairs, &sc.users, &sc.cfg);
    SolveResult::from_parts(strategy, m, report, 1)
}

pub fn solve_random_equal<R: Rng + ?Sized>(sc: &Scenario, rng: &mut R) -> Result<SolveResult> {
    let m = random_matching(&cost_matrix(sc)?, rng);
    Ok(equal_result(sc, Strategy::RandomEqual, m))
}

pub fn solve_greedy_equal(sc: &Scenario) -> Result<SolveResult> {
    Ok(match greedy_matching(&cost_matrix(sc)?) {
        Some(m) => equal_result(sc, Strategy::GreedyEqual, m),
        None => SolveResult::infeasible(Strategy::GreedyEqual, 1),
    })
}

pub fn solve_channel_balanced_equal(sc: &Scenario) -> Result<SolveResult> {
    let m = channel_balanced_matching(sc, &cost_matrix(sc)?);
    Ok(equal_result(sc, Strategy::ChannelBalancedEqual, m))
}

pub fn solve_random_kkt<R: Rng + ?Sized>(sc: &Scenario, rng: &mut R) -> Result<SolveResult> {
    let m = random_matching(&cost_matrix(sc)?, rng);
    let report = bandwidth::check_feasibility(&m.pairs, &sc.users, &sc.cfg);
    Ok(SolveResult::from_parts(Strategy::RandomKkt, m, report, 1))
}

/// Run `strategy`; random strategies draw their pairing from `rng`.
pub fn solve<R: Rng + ?Sized>(sc: &Scenario, strategy: Strategy, opts: &SolveOptions, rng: &mut R) -> Result<SolveResult> {
    match strategy {
        Strategy::Proposed => solve_proposed(sc, opts),
        Strategy::RandomEqual => solve_random_equal(sc, rng),
        Strategy::GreedyEqual => solve_greedy_equal(sc),
        Strategy::ChannelBalancedEqual => solve_channel_balanced_equal(sc),
        Strategy::RandomKkt => solve_random_kkt(sc, rng),
    }
}
