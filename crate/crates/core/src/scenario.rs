//! Self-contained problem instances and a seeded generator.
//!
//! Users are dropped uniformly in a square with the base station at its
//! centre. Gains come from the distance-based path loss plus log-normal
//! shadowing; compute parameters are drawn from the ranges in
//! [`ScenarioParams`]; distortions come from the synthetic similarity model
//! unless a table is supplied.
//!
//! The compute and payload defaults are not taken from any measurement.
//! They are set so that latency binds for a visible share of random
//! pairings at a few MHz and almost never at 20 MHz and above.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{self, ChannelGain, Shadowing};
use crate::distortion::{self, DistortionTable, SimilarityModel};
use crate::error::{Error, Result};
use crate::latency_energy::{SystemConfig, UserProfile};

pub const SCHEMA_VERSION: u32 = 1;

// Independent RNG streams per seed, so changing one part of the generator
// does not reshuffle the others.
const STREAM_PLACEMENT: u64 = 1;
const STREAM_COMPUTE: u64 = 2;
const STREAM_DISTORTION: u64 = 3;
const STREAM_PAIRING: u64 = 4;

/// Seeded generator for one stream of a seed.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// RNG used by the random-pairing strategies for a given seed.
pub fn pairing_rng(seed: u64) -> ChaCha8Rng {
    stream_rng(seed, STREAM_PAIRING)
}

/// Inclusive uniform range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub min: f64,
    pub max: f64,
}

impl Range {
    pub const fn new(min: f64, max: f64) -> Self {
        Range { min, max }
    }

    fn validate(&self, name: &str) -> Result<()> {
        if !(self.min.is_finite() && self.max.is_finite() && self.min <= self.max) {
            return Err(Error::Input(format!("{name}: invalid range [{}, {}]", self.min, self.max)));
        }
        Ok(())
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.min == self.max {
            self.min
        } else {
            rng.random_range(self.min..=self.max)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioParams {
    pub n_users: usize,
    /// Side of the square deployment area in metres.
    pub area_m: f64,
    /// Users closer than this to the base station are pushed out to it.
    pub min_distance_m: f64,
    pub shadowing_sigma_db: f64,
    pub b_max_hz: f64,
    pub t_max_s: f64,
    pub e_max_j: f64,
    #[serde(default)]
    pub d_max: Option<f64>,
    pub noise_dbm_per_hz: f64,
    pub power_w: f64,
    pub image_bits: f64,
    pub payload_bits: f64,
    pub bs_cpu_hz: f64,
    pub bs_cycles_per_bit: f64,
    pub bs_energy_coeff: f64,
    pub user_cpu_hz: Range,
    pub user_cycles_per_bit: f64,
    pub user_energy_coeff: f64,
    pub enc_params: Range,
    pub dec_params: Range,
    pub similarity: SimilarityModel,
}

impl Default for ScenarioParams {
    fn default() -> Self {
        ScenarioParams {
            n_users: 16,
            area_m: 500.0,
            min_distance_m: 10.0,
            shadowing_sigma_db: channel::SHADOWING_SIGMA_DB,
            b_max_hz: 20e6,
            t_max_s: 0.7,
            e_max_j: 200.0,
            d_max: None,
            noise_dbm_per_hz: -174.0,
            power_w: 1.0,
            image_bits: 256.0 * 256.0 * 3.0 * 8.0,
            payload_bits: 1.5e5,
            bs_cpu_hz: 2e10,
            bs_cycles_per_bit: 1000.0,
            bs_energy_coeff: 5e-30,
            user_cpu_hz: Range::new(1e9, 3e9),
            user_cycles_per_bit: 1200.0,
            user_energy_coeff: 1e-27,
            enc_params: Range::new(0.2, 2.0),
            dec_params: Range::new(0.2, 2.0),
            similarity: SimilarityModel::default(),
        }
    }
}

impl ScenarioParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_users < 2 || self.n_users % 2 != 0 {
            return Err(Error::Input(format!("user count must be even and >= 2, got {}", self.n_users)));
        }
        if !(self.area_m > 0.0 && self.area_m.is_finite()) {
            return Err(Error::Input(format!("area side must be positive, got {}", self.area_m)));
        }
        if !(self.min_distance_m > 0.0) {
            return Err(Error::Input(format!("minimum distance must be positive, got {}", self.min_distance_m)));
        }
        Shadowing::new(self.shadowing_sigma_db)?;
        self.user_cpu_hz.validate("user_cpu_hz")?;
        self.enc_params.validate("enc_params")?;
        self.dec_params.validate("dec_params")?;
        if !(self.user_cpu_hz.min > 0.0) {
            return Err(Error::Input("user CPU clock must be positive".into()));
        }
        if !(self.image_bits > 0.0) {
            return Err(Error::Input(format!("image size must be positive, got {}", self.image_bits)));
        }
        self.similarity.validate()?;
        self.system_config().validate()
    }

    /// The system-wide part of a generated scenario.
    pub fn system_config(&self) -> SystemConfig {
        SystemConfig {
            n_users: self.n_users,
            b_max: self.b_max_hz,
            t_max: self.t_max_s,
            e_max: self.e_max_j,
            d_max: self.d_max,
            noise_psd: channel::dbm_per_hz_to_watts(self.noise_dbm_per_hz),
            payload_bits: self.payload_bits,
            bs_cpu_hz: self.bs_cpu_hz,
            bs_cycles_per_bit: self.bs_cycles_per_bit,
            bs_energy_coeff: self.bs_energy_coeff,
            group_powers: vec![self.power_w; self.n_users / 2],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub schema_version: u32,
    pub seed: u64,
    pub bs_position: (f64, f64),
    pub cfg: SystemConfig,
    pub users: Vec<UserProfile>,
    pub distortions: DistortionTable,
    /// Generator settings, when the scenario was generated.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<ScenarioParams>,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Input(format!("unsupported scenario schema version {} (expected {SCHEMA_VERSION})", self.schema_version)));
        }
        self.cfg.validate()?;
        if self.users.len() != self.cfg.n_users {
            return Err(Error::Input(format!("{} users listed, config says {}", self.users.len(), self.cfg.n_users)));
        }
        if self.distortions.n() != self.cfg.n_users {
            return Err(Error::Input(format!("distortion table covers {} users, config says {}", self.distortions.n(), self.cfg.n_users)));
        }
        self.distortions.validate()?;
        for u in &self.users {
            u.validate()?;
        }
        Ok(())
    }

    /// Copy with a different bandwidth budget.
    pub fn with_b_max(&self, b_max: f64) -> Scenario {
        let mut s = self.clone();
        s.cfg.b_max = b_max;
        s
    }

    pub fn from_json(text: &str) -> Result<Scenario> {
        let sc: Scenario = serde_json::from_str(text).map_err(|e| Error::Input(format!("scenario is not valid JSON: {e}")))?;
        sc.validate()?;
        Ok(sc)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("scenario serialises");
        s.push('\n');
        s
    }
}

/// Generate a scenario. With `table`, that distortion table replaces the
/// synthetic one.
pub fn generate(params: &ScenarioParams, seed: u64, table: Option<DistortionTable>) -> Result<Scenario> {
    params.validate()?;
    let n = params.n_users;
    let centre = (params.area_m / 2.0, params.area_m / 2.0);
    let shadowing = Shadowing::new(params.shadowing_sigma_db)?;

    let mut place = stream_rng(seed, STREAM_PLACEMENT);
    let mut compute = stream_rng(seed, STREAM_COMPUTE);
    let mut users = Vec::with_capacity(n);
    for id in 0..n {
        let position = (place.random_range(0.0..=params.area_m), place.random_range(0.0..=params.area_m));
        let dist_m = (position.0 - centre.0).hypot(position.1 - centre.1).max(params.min_distance_m);
        let channel = ChannelGain::at_distance(dist_m / 1000.0, shadowing.sample(&mut place))?;
        users.push(UserProfile {
            id,
            position,
            q_bits: params.image_bits,
            enc_params: params.enc_params.sample(&mut compute),
            dec_params: params.dec_params.sample(&mut compute),
            cpu_hz: params.user_cpu_hz.sample(&mut compute),
            cycles_per_bit: params.user_cycles_per_bit,
            energy_coeff: params.user_energy_coeff,
            channel,
            noise_psd: None,
        });
    }

    let distortions = match table {
        Some(t) => t,
        None => distortion::synthesize_distortions(&mut stream_rng(seed, STREAM_DISTORTION), &params.similarity, n)?,
    };
    let sc = Scenario {
        schema_version: SCHEMA_VERSION,
        seed,
        bs_position: centre,
        cfg: params.system_config(),
        users,
        distortions,
        generator: Some(params.clone()),
    };
    sc.validate()?;
    Ok(sc)
}
