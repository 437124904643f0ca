//! Bandwidth feasibility for a fixed pairing.
//!
//! The latency budget of group `(i, j)` becomes a lower bound on its
//! bandwidth: both users need `F_u(b) >= Q / Δ_ij`, which has a root only when
//! `Q / Δ_ij` is below the rate asymptote. Given those bounds `L_k`, the
//! transmit energy `Σ p_k max(Q/F_i(b_k), Q/F_j(b_k))` is minimised over
//! `Σ b_k <= B^max` by a water-filling rule
//!
//! ```text
//! b_k(Θ) = max(L_k, G_{u*(k)}^{-1}(Θ))
//! ```
//!
//! where `u*(k)` is the slower user of group `k` and `Θ` is found by bisection
//! so the bandwidths sum to `B^max`. The energy budget is then checked on the
//! resulting allocation.

use serde::{Deserialize, Serialize};

use crate::channel::{self, RateParams};
use crate::error::{Error, Result};
use crate::latency_energy::{self as le, SystemConfig, UserProfile};
use crate::root::{self, Monotone};

/// Relative tolerance of the inner roots (`b_min`, `G^{-1}`).
pub const INNER_REL_TOL: f64 = 1e-12;
/// Relative tolerance on `Σ b_k = B^max` for the multiplier search.
pub const OUTER_REL_TOL: f64 = 1e-9;
/// Slack allowed when re-checking the latency of an allocation.
const LATENCY_CHECK_TOL: f64 = 1e-12;

/// Minimum bandwidth that lets one pair meet its latency budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairBandwidthBound {
    pub pair: (usize, usize),
    /// Transmission slack `Δ_ij` in s.
    pub slack: f64,
    /// `None` when no finite bandwidth meets the budget.
    pub b_min: Option<f64>,
}

impl PairBandwidthBound {
    pub fn feasible(&self) -> bool {
        self.b_min.is_some()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Infeasibility {
    /// Some pair cannot meet its latency budget at the bandwidth it could get.
    Latency,
    /// The latency lower bounds alone exceed the bandwidth budget.
    BandwidthSum,
    /// The cheapest allocation still exceeds the energy budget.
    Energy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AllocationMethod {
    Kkt,
    EqualSplit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupAllocation {
    pub pair: (usize, usize),
    pub power: f64,
    pub slack: f64,
    pub lower_bound: Option<f64>,
    pub bandwidth: f64,
    /// `max(t_i, t_j)`, infinite when the group got no bandwidth.
    pub transmit_time: f64,
    pub group_time: f64,
    pub compute_energy: f64,
    pub transmit_energy: f64,
}

impl GroupAllocation {
    pub fn energy(&self) -> f64 {
        self.compute_energy + self.transmit_energy
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationReport {
    pub method: AllocationMethod,
    pub groups: Vec<GroupAllocation>,
    /// Bandwidth multiplier `Θ*`; only set by the KKT allocator.
    pub theta_star: Option<f64>,
    /// Transmit energy `Σ p_k ξ_k(b_k)` in J.
    pub objective: f64,
    pub bandwidth_used: f64,
    /// Compute plus transmit energy in J.
    pub energy_total: f64,
    pub feasible: bool,
    pub infeasibility_reason: Option<Infeasibility>,
}

impl AllocationReport {
    pub fn bandwidths(&self) -> Vec<f64> {
        self.groups.iter().map(|g| g.bandwidth).collect()
    }

    pub fn lower_bounds(&self) -> Vec<Option<f64>> {
        self.groups.iter().map(|g| g.lower_bound).collect()
    }
}

/// Smallest `b` with `F(b) >= Q / Δ`, or `None` when `Δ <= 0` or the target
/// rate is not below the asymptote.
pub fn b_min_user(delta: f64, params: &RateParams, payload_bits: f64) -> Option<f64> {
    if !(delta > 0.0) {
        return None;
    }
    let target = payload_bits / delta;
    if !(target > 0.0) || !target.is_finite() {
        return None;
    }
    if target >= channel::f_limit(params) {
        return None;
    }
    // F(b) <= b, so the root is never below the target rate itself.
    let bracket =
        root::solve_monotone(|b| channel::f_value(b, params), target, target, 2.0 * target, Monotone::Increasing, INNER_REL_TOL).ok()?;
    // The upper end satisfies the constraint rather than merely approaching it.
    Some(bracket.above)
}

/// Latency bound of the pair: the larger of the two users' roots.
pub fn b_min_pair(pair: (usize, usize), users: &[UserProfile], power: f64, cfg: &SystemConfig) -> PairBandwidthBound {
    let (ui, uj) = (&users[pair.0], &users[pair.1]);
    let slack = le::delta_slack(ui, uj, cfg);
    let bi = b_min_user(slack, &le::rate_params(ui, power, 0.0, cfg), cfg.payload_bits);
    let bj = b_min_user(slack, &le::rate_params(uj, power, 0.0, cfg), cfg.payload_bits);
    let b_min = match (bi, bj) {
        (Some(a), Some(b)) => Some(a.max(b)),
        _ => None,
    };
    PairBandwidthBound { pair, slack, b_min }
}

/// Unique `b > 0` with `G(b) = theta`.
pub fn g_inverse(theta: f64, payload_bits: f64, params: &RateParams) -> Result<f64> {
    if !(theta > 0.0) || !theta.is_finite() {
        return Err(Error::Domain(format!("multiplier must be positive and finite, got {theta}")));
    }
    // G(b) ~ p Q / b^2 below the knee; start there and let the bracket grow.
    let guess = (params.power * payload_bits / theta).sqrt();
    if !(guess > 0.0) || !guess.is_finite() {
        return Err(Error::Bracket(format!("no starting bandwidth for theta = {theta:e}")));
    }
    let g = |b: f64| channel::g_value(b, payload_bits, params).unwrap_or(f64::INFINITY);
    let bracket = root::solve_monotone(g, theta, 0.5 * guess, 2.0 * guess, Monotone::Decreasing, INNER_REL_TOL)
        .map_err(|e| Error::Bracket(format!("inverting G at theta = {theta:e}: {e}")))?;
    Ok(bracket.midpoint())
}

/// Which user of the group currently sets the transmit time.
fn slower_is_first(b: f64, pi: &RateParams, pj: &RateParams) -> bool {
    // Q/F_i >= Q/F_j  <=>  F_i <= F_j; ties go to the first user.
    channel::f_value(b, pi) <= channel::f_value(b, pj)
}

/// Two-branch inverse gradient of a group: invert user `i`'s map and keep it
/// if `i` is the slower user there, otherwise invert user `j`'s.
pub fn tilde_b(theta: f64, pi: &RateParams, pj: &RateParams, payload_bits: f64) -> Result<f64> {
    let bi = g_inverse(theta, payload_bits, pi)?;
    if slower_is_first(bi, pi, pj) {
        Ok(bi)
    } else {
        g_inverse(theta, payload_bits, pj)
    }
}

/// `G` of the slower user at `b`: `-d/db [p ξ(b)]` on the active branch.
pub fn active_gradient(b: f64, pi: &RateParams, pj: &RateParams, payload_bits: f64) -> Result<f64> {
    let active = if slower_is_first(b, pi, pj) { pi } else { pj };
    channel::g_value(b, payload_bits, active)
}

struct Group {
    lower: f64,
    pi: RateParams,
    pj: RateParams,
}

impl Group {
    fn bandwidth_at(&self, theta: f64, payload_bits: f64) -> Result<f64> {
        Ok(self.lower.max(tilde_b(theta, &self.pi, &self.pj, payload_bits)?))
    }
}

/// Latency bounds for every pair of a matching, pairing group `k` with power
/// `cfg.group_powers[k]`.
pub fn pair_bounds(pairs: &[(usize, usize)], users: &[UserProfile], cfg: &SystemConfig) -> Vec<PairBandwidthBound> {
    pairs.iter().zip(&cfg.group_powers).map(|(&pair, &power)| b_min_pair(pair, users, power, cfg)).collect()
}

/// Energy-optimal bandwidth split for a latency-feasible matching.
///
/// Every bound must be feasible; otherwise this is a contract error and the
/// caller should use [`check_feasibility`].
pub fn kkt_allocate(
    pairs: &[(usize, usize)],
    users: &[UserProfile],
    cfg: &SystemConfig,
    bounds: &[PairBandwidthBound],
) -> Result<AllocationReport> {
    if pairs.len() != bounds.len() || pairs.len() != cfg.group_powers.len() {
        return Err(Error::Contract(format!("{} pairs, {} bounds, {} group powers", pairs.len(), bounds.len(), cfg.group_powers.len())));
    }
    let q = cfg.payload_bits;
    let mut groups = Vec::with_capacity(pairs.len());
    for ((&pair, bound), &power) in pairs.iter().zip(bounds).zip(&cfg.group_powers) {
        let lower = bound.b_min.ok_or_else(|| Error::Contract(format!("pair {pair:?} is latency-infeasible; no lower bound")))?;
        groups.push(Group {
            lower,
            pi: le::rate_params(&users[pair.0], power, 0.0, cfg),
            pj: le::rate_params(&users[pair.1], power, 0.0, cfg),
        });
    }

    let lower_sum: f64 = groups.iter().map(|g| g.lower).sum();
    if lower_sum > cfg.b_max {
        let b: Vec<f64> = groups.iter().map(|g| g.lower).collect();
        return Ok(evaluate(pairs, users, cfg, &b, bounds, None, AllocationMethod::Kkt));
    }

    let mut theta_max: f64 = 0.0;
    for g in &groups {
        theta_max = theta_max.max(channel::g_value(g.lower, q, &g.pi)?).max(channel::g_value(g.lower, q, &g.pj)?);
    }

    let total = |theta: f64| -> Result<f64> {
        let mut s = 0.0;
        for g in &groups {
            s += g.bandwidth_at(theta, q)?;
        }
        Ok(s)
    };

    let b_max = cfg.b_max;
    let theta_star = if lower_sum >= b_max * (1.0 - INNER_REL_TOL) {
        // every group sits on its bound already
        theta_max
    } else {
        // Σ b(Θ) is non-increasing; find a Θ below which the budget is exceeded.
        let mut hi = theta_max;
        let mut lo = theta_max;
        let mut s_lo = total(lo)?;
        let mut s_hi = s_lo;
        let mut steps = 0;
        while s_lo < b_max {
            if steps == 120 {
                return Err(Error::Bracket(format!("multiplier search could not exceed B^max = {b_max:e} (reached {s_lo:e})")));
            }
            hi = lo;
            s_hi = s_lo;
            lo /= 16.0;
            s_lo = total(lo)?;
            debug_assert!(s_lo >= s_hi, "total bandwidth increased with the multiplier");
            steps += 1;
        }
        let mut theta = lo;
        for _ in 0..400 {
            let mid = lo * (hi / lo).sqrt();
            if !(mid > lo && mid < hi) {
                theta = hi;
                break;
            }
            let s = total(mid)?;
            debug_assert!(s_hi <= s && s <= s_lo, "total bandwidth not monotone in the multiplier");
            theta = mid;
            if (s - b_max).abs() <= OUTER_REL_TOL * b_max {
                break;
            }
            if s > b_max {
                lo = mid;
                s_lo = s;
            } else {
                hi = mid;
                s_hi = s;
            }
        }
        theta
    };

    let b: Vec<f64> = if lower_sum >= b_max * (1.0 - INNER_REL_TOL) {
        groups.iter().map(|g| g.lower).collect()
    } else {
        groups.iter().map(|g| g.bandwidth_at(theta_star, q)).collect::<Result<_>>()?
    };
    Ok(evaluate(pairs, users, cfg, &b, bounds, Some(theta_star), AllocationMethod::Kkt))
}

/// Equal split `B^max / K`, evaluated against every constraint but not
/// adjusted to satisfy them.
pub fn equal_split(pairs: &[(usize, usize)], users: &[UserProfile], cfg: &SystemConfig) -> AllocationReport {
    let bounds = pair_bounds(pairs, users, cfg);
    let share = cfg.b_max / pairs.len() as f64;
    let b = vec![share; pairs.len()];
    evaluate(pairs, users, cfg, &b, &bounds, None, AllocationMethod::EqualSplit)
}

/// Bounds, then the KKT allocator; every failure is encoded in the report.
pub fn check_feasibility(pairs: &[(usize, usize)], users: &[UserProfile], cfg: &SystemConfig) -> AllocationReport {
    let bounds = pair_bounds(pairs, users, cfg);
    if bounds.iter().all(PairBandwidthBound::feasible) {
        if let Ok(report) = kkt_allocate(pairs, users, cfg, &bounds) {
            return report;
        }
    }
    // Latency-infeasible pair (or numerically unresolvable multiplier): give
    // every group its bound where one exists.
    let b: Vec<f64> = bounds.iter().map(|bd| bd.b_min.unwrap_or(0.0)).collect();
    let mut report = evaluate(pairs, users, cfg, &b, &bounds, None, AllocationMethod::Kkt);
    report.feasible = false;
    report.infeasibility_reason.get_or_insert(Infeasibility::Latency);
    report
}

fn evaluate(
    pairs: &[(usize, usize)],
    users: &[UserProfile],
    cfg: &SystemConfig,
    bandwidths: &[f64],
    bounds: &[PairBandwidthBound],
    theta_star: Option<f64>,
    method: AllocationMethod,
) -> AllocationReport {
    let mut groups = Vec::with_capacity(pairs.len());
    for (k, &pair) in pairs.iter().enumerate() {
        let (ui, uj) = (&users[pair.0], &users[pair.1]);
        let power = cfg.group_powers[k];
        let b = bandwidths[k];
        let transmit_time = le::pair_transmit_time((ui, uj), b, power, cfg);
        groups.push(GroupAllocation {
            pair,
            power,
            slack: bounds[k].slack,
            lower_bound: bounds[k].b_min,
            bandwidth: b,
            transmit_time,
            group_time: le::group_time((ui, uj), b, power, cfg),
            compute_energy: le::compute_energy_pair((ui, uj), cfg),
            transmit_energy: power * transmit_time,
        });
    }
    let objective: f64 = groups.iter().map(|g| g.transmit_energy).sum();
    let bandwidth_used: f64 = bandwidths.iter().sum();
    let e_const = le::e_const(users, cfg);

    let latency_ok = groups.iter().zip(bounds).all(|(g, bd)| bd.feasible() && g.transmit_time <= bd.slack * (1.0 + LATENCY_CHECK_TOL));
    let bandwidth_ok = bandwidth_used <= cfg.b_max * (1.0 + OUTER_REL_TOL);
    let energy_ok = objective <= cfg.e_max - e_const;

    let infeasibility_reason = if !latency_ok {
        Some(Infeasibility::Latency)
    } else if !bandwidth_ok {
        Some(Infeasibility::BandwidthSum)
    } else if !energy_ok {
        Some(Infeasibility::Energy)
    } else {
        None
    };

    AllocationReport {
        method,
        groups,
        theta_star,
        objective,
        bandwidth_used,
        energy_total: e_const + objective,
        feasible: infeasibility_reason.is_none(),
        infeasibility_reason,
    }
}
