//! Per-user and per-group delay and energy terms.
//!
//! A group `(i, j)` served with bandwidth `b` and power `p` takes
//!
//! ```text
//! T = tau_bs(i) + tau_bs(j) + max(t_i(b), t_j(b)) + tau_rx(i) + tau_rx(j)
//! ```
//!
//! where `t_u(b) = Q / F_u(b)`, and spends the compute energy of both users
//! plus `p * max(t_i, t_j)` on transmission.

use serde::{Deserialize, Serialize};

use crate::channel::{self, ChannelGain, RateParams};
use crate::error::{Error, Result};

/// Compute and channel parameters of one user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserProfile {
    pub id: usize,
    /// Position in metres; the base station is not necessarily at the origin.
    pub position: (f64, f64),
    /// Source image size `q_i` in bits.
    pub q_bits: f64,
    /// Encoder size `Γ(θ_i)` (normalised model-size factor).
    pub enc_params: f64,
    /// Decoder size `Γ(φ_i)`.
    pub dec_params: f64,
    /// Receiver CPU clock `f_i` in Hz.
    pub cpu_hz: f64,
    /// Receiver cycles per bit `χ_i`.
    pub cycles_per_bit: f64,
    /// Receiver energy coefficient `ζ_i`.
    pub energy_coeff: f64,
    pub channel: ChannelGain,
    /// Per-user noise PSD override; the system value is used when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_psd: Option<f64>,
}

impl UserProfile {
    pub fn validate(&self) -> Result<()> {
        let check = |name: &str, ok: bool, v: f64| {
            if ok {
                Ok(())
            } else {
                Err(Error::Input(format!("user {}: invalid {name} = {v}", self.id)))
            }
        };
        check("q_bits", self.q_bits > 0.0 && self.q_bits.is_finite(), self.q_bits)?;
        check("cpu_hz", self.cpu_hz > 0.0 && self.cpu_hz.is_finite(), self.cpu_hz)?;
        check("cycles_per_bit", self.cycles_per_bit > 0.0, self.cycles_per_bit)?;
        check("energy_coeff", self.energy_coeff >= 0.0, self.energy_coeff)?;
        check("enc_params", self.enc_params >= 0.0, self.enc_params)?;
        check("dec_params", self.dec_params >= 0.0, self.dec_params)?;
        if let Some(n0) = self.noise_psd {
            check("noise_psd", n0 > 0.0, n0)?;
        }
        self.channel.validate().map_err(|e| Error::Input(format!("user {}: {e}", self.id)))
    }
}

/// Global budgets and base-station constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub n_users: usize,
    /// Total bandwidth `B^max` in Hz.
    pub b_max: f64,
    /// End-to-end latency budget `T^max` in s.
    pub t_max: f64,
    /// Energy budget `E^max` in J.
    pub e_max: f64,
    /// Per-user distortion cap `D^max`; `None` means no cap.
    #[serde(default)]
    pub d_max: Option<f64>,
    /// Noise PSD `N0` in W/Hz.
    pub noise_psd: f64,
    /// Encoder output size `Q` in bits.
    pub payload_bits: f64,
    pub bs_cpu_hz: f64,
    pub bs_cycles_per_bit: f64,
    pub bs_energy_coeff: f64,
    /// Fixed power `p_k` in W for each of the `n_users / 2` groups.
    pub group_powers: Vec<f64>,
}

impl SystemConfig {
    pub fn n_groups(&self) -> usize {
        self.n_users / 2
    }

    pub fn d_cap(&self) -> f64 {
        self.d_max.unwrap_or(f64::INFINITY)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_users < 2 || self.n_users % 2 != 0 {
            return Err(Error::Input(format!("n_users must be even and >= 2, got {}", self.n_users)));
        }
        for (name, v) in [
            ("b_max", self.b_max),
            ("t_max", self.t_max),
            ("e_max", self.e_max),
            ("noise_psd", self.noise_psd),
            ("bs_cpu_hz", self.bs_cpu_hz),
            ("bs_cycles_per_bit", self.bs_cycles_per_bit),
        ] {
            if !(v > 0.0) {
                return Err(Error::Input(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.payload_bits > 0.0 && self.payload_bits.is_finite()) {
            return Err(Error::Input(format!("payload_bits must be positive, got {}", self.payload_bits)));
        }
        if !(self.bs_energy_coeff >= 0.0) {
            return Err(Error::Input(format!("bs_energy_coeff must be >= 0, got {}", self.bs_energy_coeff)));
        }
        if let Some(d) = self.d_max {
            if !(d >= 0.0) {
                return Err(Error::Input(format!("d_max must be >= 0, got {d}")));
            }
        }
        if self.group_powers.len() != self.n_groups() {
            return Err(Error::Input(format!("expected {} group powers, got {}", self.n_groups(), self.group_powers.len())));
        }
        if let Some(p) = self.group_powers.iter().find(|p| !(**p > 0.0)) {
            return Err(Error::Input(format!("group powers must be positive, got {p}")));
        }
        Ok(())
    }
}

/// Rate-model inputs for `user` in a group with power `power` and bandwidth `b`.
pub fn rate_params(user: &UserProfile, power: f64, b: f64, cfg: &SystemConfig) -> RateParams {
    RateParams { bandwidth: b, power, gain_linear: user.channel.gain_linear, noise_psd: user.noise_psd.unwrap_or(cfg.noise_psd) }
}

/// Encoder delay at the base station, `χ_BS q_i Γ(θ_i) / f_BS`.
pub fn tau_bs(user: &UserProfile, cfg: &SystemConfig) -> f64 {
    cfg.bs_cycles_per_bit * user.q_bits * user.enc_params / cfg.bs_cpu_hz
}

/// Decoder delay at the receiver, `χ_i Q Γ(φ_i) / f_i`.
pub fn tau_rx(user: &UserProfile, cfg: &SystemConfig) -> f64 {
    user.cycles_per_bit * cfg.payload_bits * user.dec_params / user.cpu_hz
}

/// Time left for transmission once both users' compute delays are paid.
/// Non-positive slack makes the pair latency-infeasible.
pub fn delta_slack(i: &UserProfile, j: &UserProfile, cfg: &SystemConfig) -> f64 {
    cfg.t_max - (tau_bs(i, cfg) + tau_rx(i, cfg) + tau_bs(j, cfg) + tau_rx(j, cfg))
}

/// `Q / r_u(b)`; infinite when the rate is zero.
pub fn transmit_time(b: f64, user: &UserProfile, power: f64, cfg: &SystemConfig) -> f64 {
    let r = channel::f_value(b, &rate_params(user, power, b, cfg));
    if r > 0.0 {
        cfg.payload_bits / r
    } else {
        f64::INFINITY
    }
}

/// `max(t_i, t_j)`: the group finishes when its slower user does.
pub fn pair_transmit_time(pair: (&UserProfile, &UserProfile), b: f64, power: f64, cfg: &SystemConfig) -> f64 {
    transmit_time(b, pair.0, power, cfg).max(transmit_time(b, pair.1, power, cfg))
}

pub fn group_time(pair: (&UserProfile, &UserProfile), b: f64, power: f64, cfg: &SystemConfig) -> f64 {
    let (i, j) = pair;
    tau_bs(i, cfg) + tau_bs(j, cfg) + pair_transmit_time(pair, b, power, cfg) + tau_rx(i, cfg) + tau_rx(j, cfg)
}

/// `ζ_BS f_BS^2 χ_BS q_i Γ(θ_i)`.
pub fn bs_compute_energy(user: &UserProfile, cfg: &SystemConfig) -> f64 {
    cfg.bs_energy_coeff * cfg.bs_cpu_hz.powi(2) * cfg.bs_cycles_per_bit * user.q_bits * user.enc_params
}

/// `ζ_i f_i^2 χ_i Q Γ(φ_i)`.
pub fn rx_compute_energy(user: &UserProfile, cfg: &SystemConfig) -> f64 {
    user.energy_coeff * user.cpu_hz.powi(2) * user.cycles_per_bit * cfg.payload_bits * user.dec_params
}

fn user_compute_energy(user: &UserProfile, cfg: &SystemConfig) -> f64 {
    bs_compute_energy(user, cfg) + rx_compute_energy(user, cfg)
}

pub fn compute_energy_pair(pair: (&UserProfile, &UserProfile), cfg: &SystemConfig) -> f64 {
    user_compute_energy(pair.0, cfg) + user_compute_energy(pair.1, cfg)
}

/// Matching-independent compute energy summed over every user.
///
/// Includes the cycles-per-bit factors so that it agrees with the sum of
/// [`compute_energy_pair`] over any perfect matching.
pub fn e_const(users: &[UserProfile], cfg: &SystemConfig) -> f64 {
    users.iter().map(|u| user_compute_energy(u, cfg)).sum()
}

/// `p * max(t_i, t_j)`.
pub fn transmit_energy(pair: (&UserProfile, &UserProfile), b: f64, power: f64, cfg: &SystemConfig) -> f64 {
    power * pair_transmit_time(pair, b, power, cfg)
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    pub fn user(id: usize, gain_db: f64) -> UserProfile {
        UserProfile {
            id,
            position: (0.0, 0.0),
            q_bits: 1000.0,
            enc_params: 10.0,
            dec_params: 5.0,
            cpu_hz: 1e3,
            cycles_per_bit: 2.0,
            energy_coeff: 0.0,
            channel: ChannelGain::from_losses(gain_db, 0.0).unwrap(),
            noise_psd: None,
        }
    }

    pub fn config(n: usize) -> SystemConfig {
        SystemConfig {
            n_users: n,
            b_max: 1e6,
            t_max: 10.0,
            e_max: 100.0,
            d_max: None,
            noise_psd: 1e-20,
            payload_bits: 100.0,
            bs_cpu_hz: 1e4,
            bs_cycles_per_bit: 1.0,
            bs_energy_coeff: 0.0,
            group_powers: vec![1.0; n / 2],
        }
    }
}
