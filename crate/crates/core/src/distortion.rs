//! Pairwise distortion tables and a synthetic similarity-driven generator.
//!
//! A table stores `D_i(j)`, the distortion user `i` suffers when paired
//! with `j`. The pair cost is `d_ij = D_i(j) + D_j(i)`.
//!
//! # Text format
//!
//! ```text
//! # comments and blank lines are ignored
//! n 4
//! units mse
//! 0 1 0.012 0.015
//! 0 2 0.011 0.014
//! ...
//! ```
//!
//! After the `n` and `units` headers, each row `i j a b` gives
//! `D_i(j) = a` and `D_j(i) = b`. Every unordered pair must appear; a pair
//! may appear again in the reverse orientation only if it agrees within
//! 1e-9 relative.

use std::fmt::Write as _;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const AGREEMENT_REL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistortionTable {
    n: usize,
    units: String,
    /// Row-major `n × n`; the diagonal is zero and unused.
    per_user: Vec<f64>,
}

impl DistortionTable {
    /// Build from a per-user function evaluated on every ordered pair `i != j`.
    pub fn from_fn<F>(n: usize, units: &str, mut d: F) -> Result<Self>
    where
        F: FnMut(usize, usize) -> f64,
    {
        let mut per_user = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    per_user[i * n + j] = d(i, j);
                }
            }
        }
        let table = DistortionTable { n, units: units.to_string(), per_user };
        table.validate()?;
        Ok(table)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n % 2 != 0 {
            return Err(Error::Input(format!("distortion table needs an even user count, got {}", self.n)));
        }
        if self.per_user.len() != self.n * self.n {
            return Err(Error::Input(format!("distortion table has {} entries, expected {}", self.per_user.len(), self.n * self.n)));
        }
        if self.units.is_empty() || self.units.contains(char::is_whitespace) {
            return Err(Error::Input(format!("units must be a single token, got {:?}", self.units)));
        }
        for i in 0..self.n {
            for j in 0..self.n {
                let v = self.per_user[i * self.n + j];
                if i != j && !(v.is_finite() && v >= 0.0) {
                    return Err(Error::Input(format!("distortion D[{i}][{j}] = {v} must be finite and >= 0")));
                }
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn units(&self) -> &str {
        &self.units
    }

    /// `D_i(j)`: distortion of user `i` when paired with `j`.
    pub fn per_user(&self, i: usize, j: usize) -> f64 {
        self.per_user[i * self.n + j]
    }

    /// `d_ij = D_i(j) + D_j(i)`.
    pub fn pair_sum(&self, i: usize, j: usize) -> f64 {
        self.per_user(i, j) + self.per_user(j, i)
    }

    /// Serialise to the text format. Values use the shortest representation
    /// that parses back to the same `f64`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "n {}", self.n);
        let _ = writeln!(out, "units {}", self.units);
        for i in 0..self.n {
            for j in i + 1..self.n {
                let _ = writeln!(out, "{i} {j} {} {}", self.per_user(i, j), self.per_user(j, i));
            }
        }
        out
    }
}

fn agree(a: f64, b: f64) -> bool {
    (a - b).abs() <= AGREEMENT_REL_TOL * a.abs().max(b.abs())
}

/// Parse the text format.
pub fn load_distortion_table(source: &str) -> Result<DistortionTable> {
    let mut n: Option<usize> = None;
    let mut units: Option<String> = None;
    let mut cells: Vec<Option<f64>> = Vec::new();

    for (lineno, raw) in source.lines().enumerate() {
        let line_no = lineno + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        match tokens[0] {
            "n" => {
                if n.is_some() || tokens.len() != 2 {
                    return Err(Error::Input(format!("line {line_no}: expected a single `n <count>` header")));
                }
                let count: usize =
                    tokens[1].parse().map_err(|_| Error::Input(format!("line {line_no}: bad user count {:?}", tokens[1])))?;
                if count % 2 != 0 {
                    return Err(Error::Input(format!("line {line_no}: user count {count} must be even")));
                }
                n = Some(count);
                cells = vec![None; count * count];
            }
            "units" => {
                if units.is_some() || tokens.len() != 2 {
                    return Err(Error::Input(format!("line {line_no}: expected a single `units <token>` header")));
                }
                units = Some(tokens[1].to_string());
            }
            _ => {
                let Some(count) = n else {
                    return Err(Error::Input(format!("line {line_no}: data row before the `n` header")));
                };
                if units.is_none() {
                    return Err(Error::Input(format!("line {line_no}: data row before the `units` header")));
                }
                if tokens.len() != 4 {
                    return Err(Error::Input(format!("line {line_no}: expected `i j D_i D_j`, got {} fields", tokens.len())));
                }
                let idx = |t: &str| -> Result<usize> {
                    let v: usize = t.parse().map_err(|_| Error::Input(format!("line {line_no}: bad user index {t:?}")))?;
                    if v >= count {
                        return Err(Error::Input(format!("line {line_no}: user index {v} out of range 0..{count}")));
                    }
                    Ok(v)
                };
                let (i, j) = (idx(tokens[0])?, idx(tokens[1])?);
                if i == j {
                    return Err(Error::Input(format!("line {line_no}: row pairs user {i} with itself")));
                }
                let val = |t: &str, a: usize, b: usize| -> Result<f64> {
                    let v: f64 = t.parse().map_err(|_| Error::Input(format!("line {line_no}: bad value {t:?}")))?;
                    if !(v.is_finite() && v >= 0.0) {
                        return Err(Error::Input(format!("line {line_no}: D[{a}][{b}] = {v} must be finite and >= 0")));
                    }
                    Ok(v)
                };
                let (a, b) = (val(tokens[2], i, j)?, val(tokens[3], j, i)?);
                for (r, c, v) in [(i, j, a), (j, i, b)] {
                    match cells[r * count + c] {
                        Some(prev) if !agree(prev, v) => {
                            return Err(Error::Input(format!("line {line_no}: D[{r}][{c}] = {v} disagrees with earlier value {prev}")))
                        }
                        Some(_) => {}
                        None => cells[r * count + c] = Some(v),
                    }
                }
            }
        }
    }

    let n = n.ok_or_else(|| Error::Input("missing `n` header".into()))?;
    let units = units.ok_or_else(|| Error::Input("missing `units` header".into()))?;
    let mut missing = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if cells[i * n + j].is_none() {
                missing.push(format!("({i}, {j})"));
            }
        }
    }
    if !missing.is_empty() {
        return Err(Error::Input(format!("missing entries for pairs {}", missing.join(", "))));
    }
    DistortionTable::from_fn(n, &units, |i, j| cells[i * n + j].unwrap_or(0.0))
}

/// Logistic gate `σ(κ · cos_sim)`.
pub fn similarity_gate(cos_sim: f64, kappa: f64) -> Result<f64> {
    if !(-1.0..=1.0).contains(&cos_sim) {
        return Err(Error::Domain(format!("cosine similarity {cos_sim} outside [-1, 1]")));
    }
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(Error::Domain(format!("gate sharpness must be positive, got {kappa}")));
    }
    Ok(1.0 / (1.0 + (-kappa * cos_sim).exp()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityModel {
    pub kappa: f64,
    pub base_distortion: f64,
    pub similarity_weight: f64,
    pub feature_dim: usize,
}

impl Default for SimilarityModel {
    fn default() -> Self {
        SimilarityModel { kappa: 5.0, base_distortion: 0.01, similarity_weight: 0.3, feature_dim: 8 }
    }
}

impl SimilarityModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return Err(Error::Input(format!("kappa must be positive, got {}", self.kappa)));
        }
        if !(self.base_distortion > 0.0 && self.base_distortion.is_finite()) {
            return Err(Error::Input(format!("base distortion must be positive, got {}", self.base_distortion)));
        }
        if !(0.0..1.0).contains(&self.similarity_weight) {
            return Err(Error::Input(format!("similarity weight must lie in [0, 1), got {}", self.similarity_weight)));
        }
        if self.feature_dim == 0 {
            return Err(Error::Input("feature dimension must be at least 1".into()));
        }
        Ok(())
    }

    /// `base · (1 − weight · gate(cos))`.
    pub fn distortion(&self, cos_sim: f64) -> Result<f64> {
        Ok(self.base_distortion * (1.0 - self.similarity_weight * similarity_gate(cos_sim, self.kappa)?))
    }
}

/// Cosine similarity of two non-zero vectors, clamped to [-1, 1] against rounding.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    (dot / (na * nb)).clamp(-1.0, 1.0)
}

/// Draw one isotropic unit vector per user and derive every `D_i(j)` from
/// the pair's cosine similarity.
pub fn synthesize_distortions<R: Rng + ?Sized>(rng: &mut R, model: &SimilarityModel, n: usize) -> Result<DistortionTable> {
    model.validate()?;
    if n % 2 != 0 {
        return Err(Error::Input(format!("user count {n} must be even")));
    }
    let features: Vec<Vec<f64>> = (0..n)
        .map(|_| loop {
            let v: Vec<f64> = (0..model.feature_dim).map(|_| rng.sample(StandardNormal)).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-12 {
                break v.into_iter().map(|x| x / norm).collect();
            }
        })
        .collect();
    let mut per_user = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let d = model.distortion(cosine(&features[i], &features[j]))?;
            per_user[i * n + j] = d;
            per_user[j * n + i] = d;
        }
    }
    DistortionTable::from_fn(n, "mse", |i, j| per_user[i * n + j])
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const FIXTURE: &str = "\
# four users
n 4
units mse
0 1 0.10 0.20
0 2 0.30 0.40
0 3 0.15 0.25
1 2 0.05 0.06
1 3 0.07 0.08
2 3 0.11 0.12
";

    #[test]
    fn loads_fixture() {
        let t = load_distortion_table(FIXTURE).unwrap();
        assert_eq!(t.n(), 4);
        assert_eq!(t.units(), "mse");
        let entries = (0..4).flat_map(|i| (0..4).filter(move |&j| j != i)).count();
        assert_eq!(entries, 12);
        assert_eq!(t.per_user(2, 0), 0.40);
        assert!((t.pair_sum(0, 1) - 0.30).abs() < 1e-15);
    }

    #[test]
    fn rejects_negative_with_location() {
        let bad = FIXTURE.replace("1 2 0.05 0.06", "1 2 -0.05 0.06");
        let err = load_distortion_table(&bad).unwrap_err().to_string();
        assert!(err.contains("D[1][2]"), "{err}");
        assert!(err.contains("line 7"), "{err}");
    }

    #[test]
    fn rejects_missing_and_conflicting() {
        let missing = FIXTURE.replace("2 3 0.11 0.12\n", "");
        let err = load_distortion_table(&missing).unwrap_err().to_string();
        assert!(err.contains("(2, 3)"), "{err}");
        let conflict = format!("{FIXTURE}1 0 0.20 0.11\n");
        assert!(load_distortion_table(&conflict).is_err());
        let consistent = format!("{FIXTURE}1 0 0.20 0.10\n");
        assert!(load_distortion_table(&consistent).is_ok());
        assert!(load_distortion_table("n 3\nunits mse\n").is_err());
    }

    #[test]
    fn save_load_roundtrip_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let t = synthesize_distortions(&mut rng, &SimilarityModel::default(), 10).unwrap();
        let back = load_distortion_table(&t.to_text()).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn gate_values() {
        assert_eq!(similarity_gate(0.0, 3.0).unwrap(), 0.5);
        let direct = 1.0 / (1.0 + (-5.0f64).exp());
        assert!(similarity_gate(1.0, 5.0).unwrap() > 0.99);
        assert_eq!(similarity_gate(1.0, 5.0).unwrap(), direct);
        for x in [-1.0, -0.3, 0.2, 0.9] {
            let s = similarity_gate(x, 4.0).unwrap() + similarity_gate(-x, 4.0).unwrap();
            assert!((s - 1.0).abs() < 1e-15);
        }
        assert!(similarity_gate(1.2, 5.0).is_err());
        assert!(similarity_gate(0.5, 0.0).is_err());
    }

    #[test]
    fn model_corners() {
        let m = SimilarityModel::default();
        let gate1 = similarity_gate(1.0, m.kappa).unwrap();
        assert_eq!(m.distortion(1.0).unwrap(), m.base_distortion * (1.0 - m.similarity_weight * gate1));
        assert_eq!(m.distortion(0.0).unwrap(), m.base_distortion * (1.0 - m.similarity_weight / 2.0));
        assert!(m.distortion(0.8).unwrap() < m.distortion(0.2).unwrap());
        let bad = SimilarityModel { similarity_weight: 1.0, ..m };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(synthesize_distortions(&mut rng, &bad, 4).is_err());
    }

    #[test]
    fn synthetic_tables_are_valid_and_seeded() {
        for seed in 0..20 {
            let a = synthesize_distortions(&mut ChaCha8Rng::seed_from_u64(seed), &SimilarityModel::default(), 8).unwrap();
            let b = synthesize_distortions(&mut ChaCha8Rng::seed_from_u64(seed), &SimilarityModel::default(), 8).unwrap();
            assert_eq!(a, b);
            a.validate().unwrap();
            for i in 0..8 {
                for j in 0..8 {
                    if i != j {
                        assert!(a.per_user(i, j) > 0.0);
                    }
                }
            }
        }
    }
}
