#![allow(dead_code)]

use pairband::channel::ChannelGain;
use pairband::latency_energy::{SystemConfig, UserProfile};
use pairband::pairing::Matching;
use pairband::scenario::{generate, Scenario, ScenarioParams};
use pairband::solver::SolveResult;
use rand::Rng;

/// Rate as an independent formula, used as the oracle throughout.
pub fn rate_oracle(b: f64, signal: f64, n0: f64) -> f64 {
    if b <= 0.0 {
        return 0.0;
    }
    b * (1.0 + signal / (2.0 * n0 * b + signal)).log2()
}

/// User whose compute delays are `tau_bs` and `tau_rx` under [`config`].
pub fn user(id: usize, loss_db: f64, tau_bs: f64, tau_rx: f64) -> UserProfile {
    UserProfile {
        id,
        position: (0.0, 0.0),
        q_bits: 1.0e6,
        // config(): f_BS = 1e9, chi_BS = 1  =>  tau_bs = q Γθ / 1e9
        enc_params: tau_bs * 1e9 / 1.0e6,
        // f_u = 1e9, chi_u = 1, Q = 1e5  =>  tau_rx = 1e5 Γφ / 1e9
        dec_params: tau_rx * 1e9 / 1.0e5,
        cpu_hz: 1e9,
        cycles_per_bit: 1.0,
        energy_coeff: 0.0,
        channel: ChannelGain::from_losses(loss_db, 0.0).unwrap(),
        noise_psd: None,
    }
}

pub fn config(n: usize) -> SystemConfig {
    SystemConfig {
        n_users: n,
        b_max: 1e7,
        t_max: 1.0,
        e_max: 1e3,
        d_max: None,
        noise_psd: 1e-20,
        payload_bits: 1e5,
        bs_cpu_hz: 1e9,
        bs_cycles_per_bit: 1.0,
        bs_energy_coeff: 0.0,
        group_powers: vec![1.0; n / 2],
    }
}

/// Random users mixing rate-limited and bandwidth-limited channels.
pub fn random_users<R: Rng>(rng: &mut R, n: usize) -> Vec<UserProfile> {
    (0..n).map(|id| user(id, rng.random_range(100.0..145.0), rng.random_range(0.0..0.2), rng.random_range(0.0..0.2))).collect()
}

/// Generated scenario with budgets loose enough that every matching is
/// feasible.
pub fn generous_scenario(n: usize, seed: u64) -> Scenario {
    let params = ScenarioParams { n_users: n, t_max_s: 50.0, e_max_j: 1e6, b_max_hz: 1e9, ..Default::default() };
    generate(&params, seed, None).unwrap()
}

/// Budget compliance of a feasible result, each within 1e-9 relative.
pub fn assert_compliant(sc: &Scenario, r: &SolveResult) {
    if !r.feasible {
        return;
    }
    let a = r.allocation.as_ref().expect("feasible results carry an allocation");
    let cfg = &sc.cfg;
    let used: f64 = a.groups.iter().map(|g| g.bandwidth).sum();
    assert!(used <= cfg.b_max * (1.0 + 1e-9), "bandwidth {used} > {}", cfg.b_max);
    for g in &a.groups {
        assert!(g.group_time <= cfg.t_max * (1.0 + 1e-9), "group time {} > {}", g.group_time, cfg.t_max);
    }
    let energy: f64 = a.groups.iter().map(|g| g.compute_energy + g.transmit_energy).sum();
    assert!(energy <= cfg.e_max * (1.0 + 1e-9), "energy {energy} > {}", cfg.e_max);
    let m: &Matching = r.matching.as_ref().unwrap();
    assert!(m.is_finite());
}
