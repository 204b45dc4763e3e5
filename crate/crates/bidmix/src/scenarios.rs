//! Synthetic arrival generators: the truncated-Gaussian suite `s0`, the
//! orthogonal-complementarity pair `s4`, the uniform-reward pair
//! `example1`, and JSON-defined user scenarios.
//!
//! Builders take the budget scaling factor `rho` and bake it into the
//! scenario's baseline budget, so downstream code runs them at scaling 1.

use std::path::Path;
use std::sync::Arc;

use rand::Rng;
use rand::RngCore;
use rand_distr::{Distribution, Normal};
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::model::{ArrivalSource, RewardResourcePair, ScenarioSpec};

/// Truncated-Gaussian configuration parameters.
#[derive(Debug, Clone, Deserialize)]
pub struct GaussianConfig {
    pub mu_r: f64,
    pub sigma_r: f64,
    pub mu_a: Vec<f64>,
    pub sigma_a: Vec<f64>,
}

/// One configuration's sampling recipe.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConfigSampler {
    /// Gaussian reward and consumption, rejection-truncated to
    /// [0.01, R_max] and [0.01, A_max].
    GaussianTruncated(GaussianConfig),
    /// Uniform reward on [r_lo, r_hi] with deterministic consumption.
    Uniform { r_lo: f64, r_hi: f64, a: Vec<f64> },
    /// Reward 1 +- `noise`, consumption = unit vector on `axis` with
    /// +- `noise` uniform jitter clipped below at 0.
    OrthogonalUnit {
        axis: usize,
        #[serde(default = "default_noise")]
        noise: f64,
    },
}

fn default_noise() -> f64 {
    0.01
}

/// Rejection attempts per truncated draw before giving up; with the s0
/// parameters the acceptance probability is far above one half, so the
/// cap is unreachable in practice.
const MAX_REJECTION_ATTEMPTS: usize = 1000;

struct SyntheticSource {
    configs: Vec<ConfigSampler>,
    dim: usize,
    r_max: f64,
    a_max: f64,
}

impl SyntheticSource {
    fn truncated_normal(&self, mu: f64, sigma: f64, hi: f64, rng: &mut dyn RngCore) -> f64 {
        let dist = Normal::new(mu, sigma).expect("sigma > 0 checked at construction");
        for _ in 0..MAX_REJECTION_ATTEMPTS {
            let v = dist.sample(rng);
            if (0.01..=hi).contains(&v) {
                return v;
            }
        }
        panic!("rejection sampling exhausted {MAX_REJECTION_ATTEMPTS} attempts (mu={mu}, sigma={sigma})");
    }
}

impl ArrivalSource for SyntheticSource {
    fn sample(&self, config: usize, rng: &mut dyn RngCore) -> RewardResourcePair {
        match &self.configs[config] {
            ConfigSampler::GaussianTruncated(g) => {
                let r = self.truncated_normal(g.mu_r, g.sigma_r, self.r_max, rng);
                let a = g
                    .mu_a
                    .iter()
                    .zip(&g.sigma_a)
                    .map(|(mu, sigma)| self.truncated_normal(*mu, *sigma, self.a_max, rng))
                    .collect();
                RewardResourcePair::new(r, a)
            }
            ConfigSampler::Uniform { r_lo, r_hi, a } => {
                RewardResourcePair::new(rng.gen_range(*r_lo..*r_hi), a.clone())
            }
            ConfigSampler::OrthogonalUnit { axis, noise } => {
                let r = 1.0 + rng.gen_range(-noise..*noise);
                let a = (0..self.dim)
                    .map(|i| {
                        let base = if i == *axis { 1.0 } else { 0.0 };
                        (base + rng.gen_range(-noise..*noise)).max(0.0)
                    })
                    .collect();
                RewardResourcePair::new(r, a)
            }
        }
    }
}

fn assemble(
    name: &str,
    dim: usize,
    r_max: f64,
    a_max: f64,
    base_budget: Vec<f64>,
    configs: Vec<ConfigSampler>,
) -> ScenarioSpec {
    let num_configs = configs.len();
    ScenarioSpec {
        name: name.to_string(),
        num_configs,
        dim,
        r_max,
        a_max,
        base_budget,
        source: Arc::new(SyntheticSource {
            configs,
            dim,
            r_max,
            a_max,
        }),
    }
}

/// Five truncated-Gaussian configurations over three resources. The
/// baseline budget is the mean consumption of the most resource-intensive
/// configuration (config 0), scaled by `rho`.
pub fn make_s0(rho: f64) -> ScenarioSpec {
    let mu_r = [1.0, 0.8, 0.6, 0.9, 0.4];
    let mu_a: [[f64; 3]; 5] = [
        [0.8, 0.2, 0.2],
        [0.2, 0.7, 0.2],
        [0.2, 0.2, 0.6],
        [0.5, 0.5, 0.5],
        [0.1, 0.1, 0.1],
    ];
    let configs = mu_r
        .iter()
        .zip(&mu_a)
        .map(|(mu_r, mu_a)| {
            ConfigSampler::GaussianTruncated(GaussianConfig {
                mu_r: *mu_r,
                sigma_r: 0.3,
                mu_a: mu_a.to_vec(),
                sigma_a: vec![0.2; 3],
            })
        })
        .collect();
    let base = vec![rho * 0.8, rho * 0.2, rho * 0.2];
    assemble("s0", 3, 2.0, 2.0, base, configs)
}

/// Two near-deterministic configurations with orthogonal unit consumption
/// and reward ~ 1; the complementarity showcase.
pub fn make_s4(rho: f64) -> ScenarioSpec {
    let configs = vec![
        ConfigSampler::OrthogonalUnit {
            axis: 0,
            noise: 0.01,
        },
        ConfigSampler::OrthogonalUnit {
            axis: 1,
            noise: 0.01,
        },
    ];
    assemble("s4", 2, 1.01, 1.01, vec![rho * 0.5, rho * 0.5], configs)
}

/// Two configurations with Uniform(0,2) rewards and deterministic
/// orthogonal unit consumption at baseline budget [0.5, 0.5].
pub fn make_example1() -> ScenarioSpec {
    let configs = vec![
        ConfigSampler::Uniform {
            r_lo: 0.0,
            r_hi: 2.0,
            a: vec![1.0, 0.0],
        },
        ConfigSampler::Uniform {
            r_lo: 0.0,
            r_hi: 2.0,
            a: vec![0.0, 1.0],
        },
    ];
    assemble("example1", 2, 2.0, 1.0, vec![0.5, 0.5], configs)
}

/// Boundedness enforcement for user data: clip reward and consumption
/// into their boxes, then add uniform jitter eta to the reward (breaking
/// exact ties) and re-clip.
pub fn clip_and_jitter(
    r: f64,
    a: &[f64],
    r_max: f64,
    a_max: f64,
    eta: f64,
    rng: &mut dyn RngCore,
) -> RewardResourcePair {
    let mut r = r.clamp(0.0, r_max);
    if eta > 0.0 {
        r = (r + rng.gen_range(-eta..eta)).clamp(0.0, r_max);
    }
    let a = a.iter().map(|v| v.clamp(0.0, a_max)).collect();
    RewardResourcePair::new(r, a)
}

pub const BUILTIN_NAMES: [&str; 3] = ["s0", "s4", "example1"];

/// JSON scenario file schema.
#[derive(Debug, Deserialize)]
struct ScenarioFile {
    name: Option<String>,
    #[serde(rename = "K")]
    k: usize,
    d: usize,
    #[serde(rename = "R_max")]
    r_max: f64,
    #[serde(rename = "A_max")]
    a_max: f64,
    b0: Vec<f64>,
    configs: Vec<ConfigSampler>,
}

fn load_file(path: &Path, rho: f64) -> Result<ScenarioSpec> {
    let text = std::fs::read_to_string(path)?;
    let file: ScenarioFile = serde_json::from_str(&text)
        .map_err(|e| Error::Scenario(format!("{}: {e}", path.display())))?;
    if file.configs.len() != file.k {
        return Err(Error::Scenario(format!(
            "K={} but {} configs listed",
            file.k,
            file.configs.len()
        )));
    }
    if file.b0.len() != file.d {
        return Err(Error::Scenario(format!(
            "d={} but b0 has {} entries",
            file.d,
            file.b0.len()
        )));
    }
    for (i, c) in file.configs.iter().enumerate() {
        match c {
            ConfigSampler::GaussianTruncated(g) => {
                if g.mu_a.len() != file.d || g.sigma_a.len() != file.d {
                    return Err(Error::Scenario(format!("config {i}: mu_a/sigma_a dim != d")));
                }
                if g.sigma_r <= 0.0 || g.sigma_a.iter().any(|s| *s <= 0.0) {
                    return Err(Error::Scenario(format!("config {i}: sigma must be > 0")));
                }
            }
            ConfigSampler::Uniform { r_lo, r_hi, a } => {
                if a.len() != file.d {
                    return Err(Error::Scenario(format!("config {i}: a dim != d")));
                }
                if !(r_lo < r_hi) || *r_lo < 0.0 || *r_hi > file.r_max {
                    return Err(Error::Scenario(format!(
                        "config {i}: need 0 <= r_lo < r_hi <= R_max"
                    )));
                }
            }
            ConfigSampler::OrthogonalUnit { axis, noise } => {
                if *axis >= file.d {
                    return Err(Error::Scenario(format!("config {i}: axis >= d")));
                }
                if *noise < 0.0 {
                    return Err(Error::Scenario(format!("config {i}: noise < 0")));
                }
            }
        }
    }
    let name = file
        .name
        .unwrap_or_else(|| path.file_stem().unwrap_or_default().to_string_lossy().into_owned());
    let base = file.b0.iter().map(|b| rho * b).collect();
    Ok(assemble(
        &name,
        file.d,
        file.r_max,
        file.a_max,
        base,
        file.configs,
    ))
}

/// Resolves a scenario by built-in name (`s0`, `s4`, `example1`) or by
/// path to a JSON scenario file. The budget scaling `rho` is applied to
/// the baseline budget.
pub fn load(name_or_path: &str, rho: f64) -> Result<ScenarioSpec> {
    if rho <= 0.0 {
        return Err(Error::Precondition(format!("rho must be > 0, got {rho}")));
    }
    match name_or_path {
        "s0" => Ok(make_s0(rho)),
        "s4" => Ok(make_s4(rho)),
        "example1" => {
            let mut s = make_example1();
            s.base_budget.iter_mut().for_each(|b| *b *= rho);
            Ok(s)
        }
        other => {
            let path = Path::new(other);
            if path.exists() {
                load_file(path, rho)
            } else {
                Err(Error::Scenario(format!(
                    "unknown scenario '{other}'; valid names: {} or a path to a scenario file",
                    BUILTIN_NAMES.join(", ")
                )))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn s0_samples_stay_in_bounds() {
        let s = make_s0(0.7);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for theta in 0..s.num_configs {
            for _ in 0..20_000 {
                let p = s.source.sample(theta, &mut rng);
                assert!((0.01..=2.0).contains(&p.reward));
                for a in &p.consumption {
                    assert!((0.01..=2.0).contains(a));
                }
            }
        }
    }

    #[test]
    fn s0_config4_mean_consumption_near_point_one() {
        let s = make_s0(1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 100_000;
        let mut mean = vec![0.0; 3];
        for _ in 0..n {
            let p = s.source.sample(4, &mut rng);
            for (m, a) in mean.iter_mut().zip(&p.consumption) {
                *m += a / n as f64;
            }
        }
        // Truncation to [0.01, 2.0] biases the N(0.1, 0.2^2) mean upward.
        for m in &mean {
            assert!((m - 0.1).abs() < 0.15, "mean {m}");
        }
    }

    #[test]
    fn s0_budget_scales_with_rho() {
        let s = make_s0(0.7);
        assert!((s.base_budget[0] - 0.56).abs() < 1e-12);
        assert!((s.base_budget[1] - 0.14).abs() < 1e-12);
    }

    #[test]
    fn s4_budget_and_reward_band() {
        let s = make_s4(0.7);
        assert_eq!(s.base_budget, vec![0.35, 0.35]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for theta in 0..2 {
            for _ in 0..5000 {
                let p = s.source.sample(theta, &mut rng);
                assert!((0.99..=1.01).contains(&p.reward));
                assert!(p.consumption[theta] >= 0.99);
                assert!(p.consumption[1 - theta] <= 0.01);
                assert!(p.consumption[1 - theta] >= 0.0);
            }
        }
    }

    #[test]
    fn example1_rewards_pass_ks_against_uniform() {
        let s = make_example1();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n = 10_000;
        let mut rewards: Vec<f64> = (0..n).map(|_| s.source.sample(0, &mut rng).reward).collect();
        rewards.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut ks = 0.0f64;
        for (i, r) in rewards.iter().enumerate() {
            let cdf = r / 2.0;
            let hi = (i + 1) as f64 / n as f64;
            let lo = i as f64 / n as f64;
            ks = ks.max((cdf - lo).abs()).max((cdf - hi).abs());
        }
        assert!(ks < 0.02, "KS statistic {ks}");
    }

    #[test]
    fn example1_consumption_is_orthogonal_unit() {
        let s = make_example1();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        assert_eq!(s.source.sample(0, &mut rng).consumption, vec![1.0, 0.0]);
        assert_eq!(s.source.sample(1, &mut rng).consumption, vec![0.0, 1.0]);
    }

    #[test]
    fn generators_are_deterministic_per_seed() {
        for name in ["s0", "s4", "example1"] {
            let s = load(name, 1.0).unwrap();
            let mut a = ChaCha8Rng::seed_from_u64(9);
            let mut b = ChaCha8Rng::seed_from_u64(9);
            for theta in 0..s.num_configs {
                for _ in 0..50 {
                    assert_eq!(
                        s.source.sample(theta, &mut a),
                        s.source.sample(theta, &mut b)
                    );
                }
            }
        }
    }

    #[test]
    fn clip_and_jitter_contract() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let p = clip_and_jitter(15.0, &[3.0, -1.0], 10.0, 2.0, 1e-6, &mut rng);
        assert!(p.reward >= 10.0 - 1e-6 && p.reward <= 10.0);
        assert_eq!(p.consumption, vec![2.0, 0.0]);

        let p = clip_and_jitter(5.0, &[1.0], 10.0, 2.0, 0.0, &mut rng);
        assert_eq!(p.reward, 5.0);
    }

    #[test]
    fn jitter_breaks_ties() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 100_000;
        let mut vals: Vec<f64> = (0..n)
            .map(|_| clip_and_jitter(1.0, &[1.0], 2.0, 2.0, 1e-6, &mut rng).reward)
            .collect();
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let dupes = vals.windows(2).filter(|w| w[0] == w[1]).count();
        assert!((dupes as f64) < 1e-3 * n as f64, "{dupes} duplicates");
    }

    #[test]
    fn unknown_name_lists_builtins() {
        let err = load("nope", 1.0).unwrap_err().to_string();
        assert!(err.contains("s0") && err.contains("s4") && err.contains("example1"));
    }

    #[test]
    fn json_scenario_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("two_arm.json");
        std::fs::write(
            &path,
            r#"{
                "K": 2, "d": 1, "R_max": 2.0, "A_max": 1.0, "b0": [0.4],
                "configs": [
                    {"kind": "uniform", "r_lo": 0.0, "r_hi": 2.0, "a": [1.0]},
                    {"kind": "gaussian_truncated", "mu_r": 0.5, "sigma_r": 0.2,
                     "mu_a": [0.3], "sigma_a": [0.1]}
                ]
            }"#,
        )
        .unwrap();
        let s = load(path.to_str().unwrap(), 0.5).unwrap();
        assert_eq!(s.num_configs, 2);
        assert_eq!(s.base_budget, vec![0.2]);
        assert_eq!(s.name, "two_arm");
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let p = s.source.sample(1, &mut rng);
        assert!(p.reward >= 0.01 && p.reward <= 2.0);
    }

    #[test]
    fn json_scenario_rejects_bad_dims() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.json");
        std::fs::write(
            &path,
            r#"{"K": 1, "d": 2, "R_max": 1.0, "A_max": 1.0, "b0": [0.5],
                "configs": [{"kind": "orthogonal_unit", "axis": 0}]}"#,
        )
        .unwrap();
        assert!(load(path.to_str().unwrap(), 1.0).is_err());
    }
}
