//! Channel gains and the superimposed-pair rate model.
//!
//! Both users of a group share bandwidth `b` and the group power `p`. The
//! per-user rate is
//!
//! ```text
//! F_u(b) = b * log2(1 + s / (2 N0 b + s)),   s = |h_u|^2 p
//! ```
//!
//! which is strictly increasing and strictly concave in `b` and saturates at
//! `s / (2 N0 ln 2)`. The allocator only ever needs `F`, its derivative and the
//! gradient map `G(b) = p Q F'(b) / F(b)^2 = -d/db [p Q / F(b)]`.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const LN_2: f64 = std::f64::consts::LN_2;

/// Shadow-fading standard deviation used by the scenario generator.
pub const SHADOWING_SIGMA_DB: f64 = 8.0;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

/// Noise power spectral density in W/Hz from a dBm/Hz figure.
pub fn dbm_per_hz_to_watts(dbm: f64) -> f64 {
    db_to_linear(dbm) * 1e-3
}

/// Macro-cell path loss `128.1 + 37.6 log10(d)` with `d` in km.
pub fn path_loss_db(distance_km: f64) -> Result<f64> {
    if !(distance_km > 0.0) || !distance_km.is_finite() {
        return Err(Error::Domain(format!("path loss needs a positive finite distance, got {distance_km} km")));
    }
    Ok(128.1 + 37.6 * distance_km.log10())
}

/// Log-normal shadowing: a zero-mean Gaussian in dB.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Shadowing {
    pub sigma_db: f64,
}

impl Default for Shadowing {
    fn default() -> Self {
        Shadowing { sigma_db: SHADOWING_SIGMA_DB }
    }
}

impl Shadowing {
    pub fn new(sigma_db: f64) -> Result<Self> {
        if !(sigma_db >= 0.0) || !sigma_db.is_finite() {
            return Err(Error::Domain(format!("shadowing sigma must be >= 0, got {sigma_db}")));
        }
        Ok(Shadowing { sigma_db })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.sigma_db == 0.0 {
            return 0.0;
        }
        // sigma validated in `new`; the default is a positive constant.
        Normal::new(0.0, self.sigma_db).expect("valid sigma").sample(rng)
    }
}

/// One shadowing draw with the default 8 dB deviation.
pub fn sample_shadowing<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    Shadowing::default().sample(rng)
}

/// Large-scale channel power gain `|h|^2`, kept both in dB terms and linear.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelGain {
    pub pathloss_db: f64,
    pub shadowing_db: f64,
    pub gain_linear: f64,
}

impl ChannelGain {
    pub fn from_losses(pathloss_db: f64, shadowing_db: f64) -> Result<Self> {
        let gain_linear = db_to_linear(-(pathloss_db + shadowing_db));
        if !(gain_linear > 0.0) || !gain_linear.is_finite() {
            return Err(Error::Domain(format!("loss of {} dB gives a non-representable gain", pathloss_db + shadowing_db)));
        }
        Ok(ChannelGain { pathloss_db, shadowing_db, gain_linear })
    }

    pub fn at_distance(distance_km: f64, shadowing_db: f64) -> Result<Self> {
        Self::from_losses(path_loss_db(distance_km)?, shadowing_db)
    }

    pub fn validate(&self) -> Result<()> {
        let expected = db_to_linear(-(self.pathloss_db + self.shadowing_db));
        if !(self.gain_linear > 0.0) {
            return Err(Error::Input(format!("gain must be positive, got {}", self.gain_linear)));
        }
        if ((self.gain_linear - expected) / expected).abs() > 1e-12 {
            return Err(Error::Input(format!(
                "linear gain {} disagrees with {} dB total loss",
                self.gain_linear,
                self.pathloss_db + self.shadowing_db
            )));
        }
        Ok(())
    }
}

/// Inputs of the rate expression for one user in one group.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateParams {
    /// Group bandwidth in Hz. Ignored by the `f_*`/`g_value` functions,
    /// which take the bandwidth as an explicit argument.
    pub bandwidth: f64,
    /// Group transmit power in W.
    pub power: f64,
    pub gain_linear: f64,
    /// Noise power spectral density in W/Hz.
    pub noise_psd: f64,
}

impl RateParams {
    pub fn new(bandwidth: f64, power: f64, gain_linear: f64, noise_psd: f64) -> Result<Self> {
        let p = RateParams { bandwidth, power, gain_linear, noise_psd };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Domain(format!("{name} must be positive and finite, got {v}")))
            }
        };
        positive("power", self.power)?;
        positive("gain", self.gain_linear)?;
        positive("noise psd", self.noise_psd)?;
        if !(self.bandwidth >= 0.0) {
            return Err(Error::Domain(format!("bandwidth must be >= 0, got {}", self.bandwidth)));
        }
        Ok(())
    }

    pub fn with_bandwidth(self, bandwidth: f64) -> Self {
        RateParams { bandwidth, ..self }
    }

    /// Received signal power `|h|^2 p`.
    pub fn signal(&self) -> f64 {
        self.gain_linear * self.power
    }

    /// Inner SINR fraction `s / (2 N0 b + s)`, in `(0, 1]`.
    fn sinr(&self, b: f64) -> f64 {
        let s = self.signal();
        s / (2.0 * self.noise_psd * b + s)
    }
}

/// Achievable rate at `params.bandwidth`, with `rate(0) = 0`.
pub fn rate(params: &RateParams) -> f64 {
    f_value(params.bandwidth, params)
}

/// `F_u(b)` in bits/s. Continuous at the origin: `F_u(0) = 0`.
pub fn f_value(b: f64, params: &RateParams) -> f64 {
    if b <= 0.0 {
        return 0.0;
    }
    b * params.sinr(b).ln_1p() / LN_2
}

/// `F_u'(b)`, strictly positive for `b > 0`.
///
/// Written as `phi(x) / ln 2` with `x = s / (2 N0 b + s)` and
/// `phi(x) = ln(1 + x) - x (1 - x) / (1 + x)`, which is the same expression as
/// `log2((2N0b + 2s)/(2N0b + s)) - 2N0 b s / (ln2 (2N0b + 2s)(2N0b + s))`
/// but free of cancellation when `x` is small.
pub fn f_prime(b: f64, params: &RateParams) -> Result<f64> {
    if !(b > 0.0) {
        return Err(Error::Domain(format!("F' needs b > 0, got {b}")));
    }
    Ok(phi(params.sinr(b)) / LN_2)
}

fn phi(x: f64) -> f64 {
    if x < 1e-2 {
        // sum_{n>=2} (-1)^n (2 - 1/n) x^n
        let mut term = x * x;
        let mut acc = 0.0;
        for n in 2..16 {
            let nf = n as f64;
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            acc += sign * (2.0 - 1.0 / nf) * term;
            term *= x;
        }
        acc
    } else {
        x.ln_1p() - x * (1.0 - x) / (1.0 + x)
    }
}

/// `lim_{b -> inf} F_u(b) = |h|^2 p / (2 N0 ln 2)`.
pub fn f_limit(params: &RateParams) -> f64 {
    params.signal() / (2.0 * params.noise_psd * LN_2)
}

/// Gradient map `G(b) = p Q F'(b) / F(b)^2`, strictly decreasing in `b`.
///
/// `p` is `params.power`.
pub fn g_value(b: f64, payload_bits: f64, params: &RateParams) -> Result<f64> {
    let fp = f_prime(b, params)?;
    let f = f_value(b, params);
    Ok(params.power * payload_bits * fp / (f * f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params(s_over_n0: f64) -> RateParams {
        RateParams::new(0.0, 1.0, s_over_n0 * 1e-20, 1e-20).unwrap()
    }

    /// The derivative exactly as printed, for moderate `b`.
    fn f_prime_printed(b: f64, p: &RateParams) -> f64 {
        let (n0, s) = (p.noise_psd, p.signal());
        let a = 2.0 * n0 * b + 2.0 * s;
        let c = 2.0 * n0 * b + s;
        (a / c).log2() - 2.0 * n0 * b * s / (LN_2 * a * c)
    }

    #[test]
    fn path_loss_values() {
        assert_eq!(path_loss_db(1.0).unwrap(), 128.1);
        assert!((path_loss_db(0.1).unwrap() - 90.5).abs() < 1e-12);
        // 128.1 + 37.6 * log10(0.353) = 128.1 - 17.0037...
        assert!((path_loss_db(0.353).unwrap() - 111.09633).abs() < 1e-4);
        assert!(path_loss_db(0.0).is_err());
        assert!(path_loss_db(-1.0).is_err());
    }

    #[test]
    fn gain_matches_losses() {
        let g = ChannelGain::at_distance(0.2, 3.0).unwrap();
        let want = 10f64.powf(-(path_loss_db(0.2).unwrap() + 3.0) / 10.0);
        assert!(((g.gain_linear - want) / want).abs() < 1e-12);
        g.validate().unwrap();
        let bad = ChannelGain { gain_linear: g.gain_linear * 1.01, ..g };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn shadowing_is_deterministic_and_degenerate_at_zero() {
        let mut a = ChaCha8Rng::seed_from_u64(7);
        let mut b = ChaCha8Rng::seed_from_u64(7);
        assert_eq!(sample_shadowing(&mut a), sample_shadowing(&mut b));
        let flat = Shadowing::new(0.0).unwrap();
        assert!((0..100).all(|_| flat.sample(&mut a) == 0.0));
        assert!(Shadowing::new(-1.0).is_err());
    }

    #[test]
    fn shadowing_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let n = 1_000_000;
        let xs: Vec<f64> = (0..n).map(|_| sample_shadowing(&mut rng)).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!(mean.abs() <= 0.05, "mean {mean}");
        assert!((7.95..=8.05).contains(&var.sqrt()), "std {}", var.sqrt());
    }

    #[test]
    fn rate_special_points() {
        let p = params(1e7);
        assert_eq!(rate(&p.with_bandwidth(0.0)), 0.0);
        // s = 2 N0 b makes the inner fraction 1/2.
        let b = p.signal() / (2.0 * p.noise_psd);
        let r = rate(&p.with_bandwidth(b));
        assert!(((r - b * 1.5f64.log2()) / r).abs() < 1e-14);
        // far past the knee the rate sits on the asymptote
        let big = 1e6 * p.signal() / p.noise_psd;
        let lim = f_limit(&p);
        assert!(((rate(&p.with_bandwidth(big)) - lim) / lim).abs() < 1e-3);
        assert_eq!(f_value(b, &p), rate(&p.with_bandwidth(b)));
    }

    #[test]
    fn limit_values() {
        let p = RateParams::new(0.0, 1.0, 1.0, 0.5).unwrap();
        assert!((f_limit(&p) - 1.0 / LN_2).abs() < 1e-15);
        assert!((f_limit(&p) - 1.442695).abs() < 1e-6);
        let doubled = RateParams { power: 2.0, ..p };
        assert_eq!(f_limit(&doubled), 2.0 * f_limit(&p));
        let q = params(3e8);
        let b = 1e8 * q.signal() / q.noise_psd;
        assert!(((f_value(b, &q) - f_limit(&q)) / f_limit(&q)).abs() < 1e-4);
    }

    #[test]
    fn derivative_forms_agree() {
        let p = params(5e6);
        for &b in &[1.0, 1e3, 1e5, 1e6, 5e6, 1e7] {
            let ours = f_prime(b, &p).unwrap();
            let printed = f_prime_printed(b, &p);
            assert!(((ours - printed) / printed).abs() < 1e-9, "b={b}: {ours} vs {printed}");
        }
        // branch seam of the series
        let x_seam = 1e-2;
        let b_seam = p.signal() * (1.0 / x_seam - 1.0) / (2.0 * p.noise_psd);
        let left = f_prime(b_seam * (1.0 - 1e-9), &p).unwrap();
        let right = f_prime(b_seam * (1.0 + 1e-9), &p).unwrap();
        assert!(((left - right) / left).abs() < 1e-7);
        assert!(f_prime(0.0, &p).is_err());
    }

    #[test]
    fn g_vanishes_far_out() {
        let p = params(2e6);
        let q = 1e5;
        let far = 1e8 * p.signal() / p.noise_psd;
        let g_far = g_value(far, q, &p).unwrap();
        let g_one = g_value(1.0, q, &p).unwrap();
        assert!(g_far > 0.0 && g_far < 1e-6 * g_one);
        assert!(g_value(1e3, q, &p).unwrap() > g_value(2e3, q, &p).unwrap());
        assert!(g_value(-1.0, q, &p).is_err());
    }

    #[test]
    fn dbm_conversion() {
        assert!((dbm_per_hz_to_watts(-174.0) - 3.981071705534969e-21).abs() < 1e-33);
        assert!((linear_to_db(db_to_linear(-111.0)) + 111.0).abs() < 1e-12);
    }
}
