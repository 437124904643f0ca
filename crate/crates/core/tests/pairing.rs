use pairband::distortion::DistortionTable;
use pairband::pairing::{brute_force_mwpm, build_cost_matrix, enumerate_matchings, k_best_matchings, mwpm, Matching, PairCostMatrix};
use pairband::solver::random_matching;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_costs(rng: &mut ChaCha8Rng, n: usize, infeasible_share: f64) -> PairCostMatrix {
    PairCostMatrix::from_fn(n, |_, _| if rng.random_bool(infeasible_share) { None } else { Some(rng.random_range(0.0..10.0)) }).unwrap()
}

fn valid_partition(m: &Matching, n: usize) -> bool {
    let mut seen = vec![0; n];
    for &(i, j) in &m.pairs {
        seen[i] += 1;
        seen[j] += 1;
    }
    m.pairs.len() == n / 2 && seen.iter().all(|&c| c == 1)
}

#[test]
fn cost_matrix_from_table() {
    let table = DistortionTable::from_fn(4, "mse", |i, j| 0.1 * (i + 1) as f64 + 0.01 * j as f64).unwrap();
    let open = build_cost_matrix(&table, f64::INFINITY).unwrap();
    assert_eq!(open.finite_edges().count(), 6);
    assert_eq!(open.get(0, 2), Some(table.pair_sum(0, 2)));

    let closed = build_cost_matrix(&table, 0.0).unwrap();
    assert_eq!(closed.finite_edges().count(), 0);
    assert!(mwpm(&closed).is_none());

    // Only user 3 paired with user 1 exceeds the cap.
    let table = DistortionTable::from_fn(4, "mse", |i, j| if (i, j) == (3, 1) { 0.9 } else { 0.1 }).unwrap();
    let costs = build_cost_matrix(&table, 0.5).unwrap();
    let missing: Vec<_> = (0..4).flat_map(|i| (i + 1..4).map(move |j| (i, j))).filter(|&(i, j)| !costs.is_feasible(i, j)).collect();
    assert_eq!(missing, vec![(1, 3)]);
}

#[test]
fn matches_brute_force_on_random_matrices() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for n in [4, 6, 8, 10] {
        for round in 0..60 {
            let share = if round % 3 == 0 { 0.3 } else { 0.0 };
            let costs = random_costs(&mut rng, n, share);
            let fast = mwpm(&costs);
            let slow = brute_force_mwpm(&costs).unwrap();
            match (fast, slow) {
                (Some(a), Some(b)) => {
                    assert_eq!(a.total_cost, b.total_cost, "n {n} round {round}");
                    assert!(valid_partition(&a, n));
                    assert!(a.pairs.iter().all(|&(i, j)| costs.is_feasible(i, j)));
                }
                (None, None) => {}
                (a, b) => panic!("n {n}: mwpm {a:?} vs brute force {b:?}"),
            }
        }
    }
}

#[test]
fn planted_optimum_found() {
    let planted = [(0, 4), (1, 3), (2, 5)];
    let costs = PairCostMatrix::from_fn(6, |i, j| Some(if planted.contains(&(i, j)) { 0.0 } else { 1.0 })).unwrap();
    for m in [mwpm(&costs).unwrap(), brute_force_mwpm(&costs).unwrap().unwrap()] {
        assert_eq!(m.pairs, planted.to_vec());
        assert_eq!(m.total_cost, 0.0);
    }
}

#[test]
fn all_equal_costs() {
    let costs = PairCostMatrix::from_fn(8, |_, _| Some(0.25)).unwrap();
    assert_eq!(mwpm(&costs).unwrap().total_cost, 1.0);
    assert_eq!(brute_force_mwpm(&costs).unwrap().unwrap().total_cost, 1.0);
    assert_eq!(k_best_matchings(&costs, 200).len(), 105);
}

#[test]
fn brute_force_refuses_large_instances() {
    let costs = PairCostMatrix::from_fn(14, |_, _| Some(1.0)).unwrap();
    assert!(brute_force_mwpm(&costs).is_err());
}

#[test]
fn never_worse_than_random_matchings() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for n in [8, 16] {
        let costs = random_costs(&mut rng, n, 0.0);
        let best = mwpm(&costs).unwrap().total_cost;
        for _ in 0..1000 {
            let m = random_matching(&costs, &mut rng);
            assert!(valid_partition(&m, n));
            assert!(best <= m.total_cost);
        }
    }
}

#[test]
fn k_best_prefix_of_full_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for n in [4, 6, 8] {
        for round in 0..20 {
            let share = if round % 2 == 0 { 0.25 } else { 0.0 };
            let costs = random_costs(&mut rng, n, share);
            let all = enumerate_matchings(&costs).unwrap();
            for w in [1, 5, 20] {
                let got = k_best_matchings(&costs, w);
                let want: Vec<_> = all.iter().take(w).cloned().collect();
                assert_eq!(got, want, "n {n} w {w}");
            }
            if let Some(first) = mwpm(&costs) {
                assert_eq!(k_best_matchings(&costs, 1)[0].total_cost, first.total_cost);
            }
        }
    }
}

#[test]
fn k_best_strictly_sorted_without_duplicates() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    // Coarse integer costs produce many ties.
    let costs = PairCostMatrix::from_fn(8, |_, _| Some(rng.random_range(0..3) as f64)).unwrap();
    let list = k_best_matchings(&costs, 105);
    assert_eq!(list.len(), 105);
    for pair in list.windows(2) {
        assert!(pair[0].rank_cmp(&pair[1]).is_lt());
        assert!(pair[0].total_cost <= pair[1].total_cost);
    }
}

#[test]
fn k_best_exhausts_finite_matchings() {
    // Forbidding (0,1) leaves two of the three matchings.
    let costs = PairCostMatrix::from_fn(4, |i, j| (i, j).ne(&(0, 1)).then_some((i + j) as f64)).unwrap();
    let list = k_best_matchings(&costs, 10);
    assert_eq!(list.len(), 2);
    assert!(list.iter().all(|m| m.is_finite() && !m.pairs.contains(&(0, 1))));
}

proptest! {
    #[test]
    fn argmin_invariant_under_scaling(seed in any::<u64>(), factor in 1e-3f64..1e3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let costs = random_costs(&mut rng, 8, 0.0);
        let a = brute_force_mwpm(&costs).unwrap().unwrap();
        let b = mwpm(&costs.scaled(factor)).unwrap();
        prop_assert_eq!(&a.pairs, &b.pairs);
        prop_assert!((b.total_cost - factor * a.total_cost).abs() <= 1e-9 * b.total_cost.max(1e-12));
    }
}
