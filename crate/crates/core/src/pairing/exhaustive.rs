use super::{Matching, PairCostMatrix};
use crate::error::{Error, Result};

/// Largest user count accepted by the exhaustive routines (10395 matchings).
pub const BRUTE_FORCE_MAX_N: usize = 12;

/// Every finite perfect matching, sorted by [`Matching::rank_cmp`].
pub fn enumerate_matchings(costs: &PairCostMatrix) -> Result<Vec<Matching>> {
    let n = costs.n();
    if n > BRUTE_FORCE_MAX_N {
        return Err(Error::TooLarge { n, limit: BRUTE_FORCE_MAX_N });
    }
    let mut out = Vec::new();
    if n % 2 == 1 {
        return Ok(out);
    }
    let mut used = vec![false; n];
    let mut pairs = Vec::with_capacity(n / 2);
    recurse(costs, &mut used, &mut pairs, 0.0, &mut out);
    out.sort_by(|a, b| a.rank_cmp(b));
    Ok(out)
}

fn recurse(costs: &PairCostMatrix, used: &mut [bool], pairs: &mut Vec<(usize, usize)>, acc: f64, out: &mut Vec<Matching>) {
    let Some(i) = used.iter().position(|u| !u) else {
        // Re-sum in canonical order so totals agree bit-for-bit with Matching::new.
        if let Ok(m) = Matching::new(pairs.clone(), costs) {
            debug_assert!((m.total_cost - acc).abs() <= 1e-9 * acc.abs().max(1.0));
            out.push(m);
        }
        return;
    };
    used[i] = true;
    for j in i + 1..used.len() {
        if used[j] {
            continue;
        }
        if let Some(c) = costs.get(i, j) {
            used[j] = true;
            pairs.push((i, j));
            recurse(costs, used, pairs, acc + c, out);
            pairs.pop();
            used[j] = false;
        }
    }
    used[i] = false;
}

/// Exhaustive minimum-cost perfect matching for small `n`.
pub fn brute_force_mwpm(costs: &PairCostMatrix) -> Result<Option<Matching>> {
    Ok(enumerate_matchings(costs)?.into_iter().next())
}
