//! Experiment orchestration: multi-seed sweeps over policies, oracle
//! precomputation with an on-disk cache, metric aggregation, and
//! deterministic CSV output.
//!
//! Unit conventions: `v_mix` is per-period, `v_fixed` is the total over
//! the horizon; `regret_mix` compares against `T * v_mix`.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::ScenarioSpec;
use crate::par;
use crate::policy::{
    competitive_ratios, regret_mix, run_baseline, run_spucb, BaselineKind, PolicyParams,
    ResolveSchedule, RunRecord,
};
use crate::saddle::{mixed_fluid_saddle, v_fixed, SaddleSolution};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyKind {
    Spucb,
    Greedy,
    Random,
    Oracle,
    OneHot,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 5] = [
        PolicyKind::Spucb,
        PolicyKind::Greedy,
        PolicyKind::Random,
        PolicyKind::Oracle,
        PolicyKind::OneHot,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            PolicyKind::Spucb => "spucb",
            PolicyKind::Greedy => "greedy",
            PolicyKind::Random => "random",
            PolicyKind::Oracle => "oracle",
            PolicyKind::OneHot => "onehot",
        }
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "spucb" => Ok(PolicyKind::Spucb),
            "greedy" => Ok(PolicyKind::Greedy),
            "random" => Ok(PolicyKind::Random),
            "oracle" => Ok(PolicyKind::Oracle),
            "onehot" => Ok(PolicyKind::OneHot),
            other => Err(Error::Precondition(format!(
                "unknown policy '{other}'; valid: spucb, greedy, random, oracle, onehot, all"
            ))),
        }
    }
}

/// Inclusive seed range `a..b` (or a single seed `a`).
pub fn parse_seed_range(s: &str) -> Result<(u64, u64)> {
    if let Some((a, b)) = s.split_once("..") {
        let lo: u64 = a
            .trim()
            .parse()
            .map_err(|_| Error::Precondition(format!("bad seed range '{s}'")))?;
        let hi: u64 = b
            .trim()
            .parse()
            .map_err(|_| Error::Precondition(format!("bad seed range '{s}'")))?;
        if hi < lo {
            return Err(Error::Precondition(format!("empty seed range '{s}'")));
        }
        Ok((lo, hi))
    } else {
        let v: u64 = s
            .trim()
            .parse()
            .map_err(|_| Error::Precondition(format!("bad seed '{s}'")))?;
        Ok((v, v))
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub scenario: ScenarioSpec,
    /// Name or path as given on the command line; recorded in the CSV.
    pub scenario_label: String,
    pub horizon: usize,
    pub rho: f64,
    pub policies: Vec<PolicyKind>,
    pub alpha: f64,
    /// Inclusive.
    pub seeds: (u64, u64),
    pub mc_samples: usize,
    pub mc_paths: usize,
    /// Also estimate v_fixed and fill cr_star (expensive).
    pub want_cr_star: bool,
    pub out: Option<PathBuf>,
    /// Worker count; 0 = all cores, 1 = sequential.
    pub jobs: usize,
    pub use_cache: bool,
    pub cache_dir: PathBuf,
    pub log_trajectory: bool,
    pub resolve_schedule: ResolveSchedule,
}

impl ExperimentConfig {
    pub fn new(scenario: ScenarioSpec, label: &str, horizon: usize, rho: f64) -> Self {
        Self {
            scenario,
            scenario_label: label.to_string(),
            horizon,
            rho,
            policies: vec![PolicyKind::Spucb],
            alpha: 1.5,
            seeds: (0, 0),
            mc_samples: 10_000,
            mc_paths: 200,
            want_cr_star: false,
            out: None,
            jobs: 0,
            use_cache: true,
            cache_dir: PathBuf::from(".bidmix-cache"),
            log_trajectory: false,
            resolve_schedule: ResolveSchedule::Doubling,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunRow {
    pub scenario: String,
    pub policy: PolicyKind,
    pub alpha: f64,
    pub rho: f64,
    pub horizon: usize,
    pub seed: u64,
    pub total_reward: f64,
    pub regret_mix: f64,
    pub cr_mix: f64,
    pub cr_star: Option<f64>,
    pub solve_count: usize,
}

#[derive(Debug, Clone)]
pub struct PolicySummary {
    pub policy: PolicyKind,
    pub n: usize,
    pub regret_mean: f64,
    pub regret_std: f64,
    pub regret_per_sqrt_t_mean: f64,
    pub regret_per_sqrt_t_std: f64,
    pub cr_mix_mean: f64,
    pub cr_mix_std: f64,
    pub cr_star_mean: Option<f64>,
    pub cr_star_std: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub rows: Vec<RunRow>,
    pub summaries: Vec<PolicySummary>,
    pub v_mix: f64,
    pub v_fixed: Option<f64>,
}

fn hash_seed(parts: &[&str]) -> u64 {
    let mut h = Sha256::new();
    for p in parts {
        h.update(p.as_bytes());
        h.update([0u8]);
    }
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().unwrap())
}

#[derive(Serialize, Deserialize)]
struct CachedValue {
    /// Human-readable copy of the value.
    value: f64,
    /// Exact IEEE-754 bits; the authoritative field on load.
    bits: u64,
}

fn cache_lookup(dir: &Path, key: &str) -> Option<f64> {
    let path = dir.join(format!("{:016x}.json", hash_seed(&[key])));
    let text = std::fs::read_to_string(path).ok()?;
    serde_json::from_str::<CachedValue>(&text)
        .ok()
        .map(|c| f64::from_bits(c.bits))
}

fn cache_store(dir: &Path, key: &str, value: f64) {
    // Cache writes are best-effort; a failed write only costs recompute time.
    if std::fs::create_dir_all(dir).is_err() {
        return;
    }
    let path = dir.join(format!("{:016x}.json", hash_seed(&[key])));
    let entry = CachedValue {
        value,
        bits: value.to_bits(),
    };
    if let Ok(text) = serde_json::to_string(&entry) {
        let _ = std::fs::write(path, text);
    }
}

/// Per-period switching-aware oracle with its saddle certificate,
/// computed at the run budget (not the safe budget) with a
/// deterministically derived Monte Carlo stream.
pub fn oracle_saddle(
    scenario: &ScenarioSpec,
    label: &str,
    rho: f64,
    mc_samples: usize,
) -> Result<SaddleSolution> {
    let b = scenario.per_period_budget(rho);
    let seed = hash_seed(&["v_mix", label, &format!("{rho}"), &format!("{mc_samples}")]);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    mixed_fluid_saddle(scenario, &b, mc_samples, &mut rng)
}

#[allow(clippy::too_many_arguments)]
fn estimate_v_fixed(
    config: &ExperimentConfig,
) -> Result<f64> {
    let key = format!(
        "v_fixed|{}|{}|{}|{}",
        config.scenario_label, config.rho, config.horizon, config.mc_paths
    );
    if config.use_cache {
        if let Some(v) = cache_lookup(&config.cache_dir, &key) {
            return Ok(v);
        }
    }
    let b = config.scenario.per_period_budget(config.rho);
    let mut rng = ChaCha8Rng::seed_from_u64(hash_seed(&[&key, "rng"]));
    let v = v_fixed(
        &config.scenario,
        &b,
        config.horizon,
        config.mc_paths,
        &mut rng,
        config.jobs,
    )?;
    if config.use_cache {
        cache_store(&config.cache_dir, &key, v);
    }
    Ok(v)
}

fn estimate_v_mix(config: &ExperimentConfig, saddle: Option<&SaddleSolution>) -> Result<f64> {
    if let Some(s) = saddle {
        return Ok(s.value);
    }
    let key = format!(
        "v_mix|{}|{}|{}|{}",
        config.scenario_label, config.rho, config.horizon, config.mc_samples
    );
    if config.use_cache {
        if let Some(v) = cache_lookup(&config.cache_dir, &key) {
            return Ok(v);
        }
    }
    let v = oracle_saddle(
        &config.scenario,
        &config.scenario_label,
        config.rho,
        config.mc_samples,
    )?
    .value;
    if config.use_cache {
        cache_store(&config.cache_dir, &key, v);
    }
    Ok(v)
}

fn run_single(
    config: &ExperimentConfig,
    policy: PolicyKind,
    seed: u64,
    oracle_sol: Option<&SaddleSolution>,
) -> Result<RunRecord> {
    let mut params = PolicyParams::new(config.alpha);
    params.log_trajectory = config.log_trajectory;
    params.resolve_schedule = config.resolve_schedule;
    let stream = hash_seed(&[
        &config.scenario_label,
        policy.as_str(),
        &format!("{seed}"),
    ]);
    let mut rng = ChaCha8Rng::seed_from_u64(stream);
    match policy {
        PolicyKind::Spucb => run_spucb(
            &config.scenario,
            config.horizon,
            config.rho,
            &params,
            &mut rng,
        ),
        PolicyKind::Greedy => run_baseline(
            BaselineKind::Greedy,
            &config.scenario,
            config.horizon,
            config.rho,
            &params,
            None,
            &mut rng,
        ),
        PolicyKind::Random => run_baseline(
            BaselineKind::Random,
            &config.scenario,
            config.horizon,
            config.rho,
            &params,
            None,
            &mut rng,
        ),
        PolicyKind::Oracle => run_baseline(
            BaselineKind::Oracle,
            &config.scenario,
            config.horizon,
            config.rho,
            &params,
            oracle_sol,
            &mut rng,
        ),
        PolicyKind::OneHot => run_baseline(
            BaselineKind::OneHot,
            &config.scenario,
            config.horizon,
            config.rho,
            &params,
            None,
            &mut rng,
        ),
    }
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

/// Runs every (policy, seed) pair on the worker pool, aggregates metrics,
/// and writes the CSV when an output path is configured. Data rows are
/// deterministic for a fixed config; timestamps live only in `#` comments.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    if config.seeds.1 < config.seeds.0 {
        return Err(Error::Precondition("empty seed range".into()));
    }
    if config.policies.is_empty() {
        return Err(Error::Precondition("no policies selected".into()));
    }

    let oracle_sol = if config.policies.contains(&PolicyKind::Oracle) {
        Some(oracle_saddle(
            &config.scenario,
            &config.scenario_label,
            config.rho,
            config.mc_samples,
        )?)
    } else {
        None
    };
    let v_mix = estimate_v_mix(config, oracle_sol.as_ref())?;
    let v_fixed_total = if config.want_cr_star {
        Some(estimate_v_fixed(config)?)
    } else {
        None
    };

    let seeds: Vec<u64> = (config.seeds.0..=config.seeds.1).collect();
    let jobs_list: Vec<(PolicyKind, u64)> = config
        .policies
        .iter()
        .flat_map(|p| seeds.iter().map(move |s| (*p, *s)))
        .collect();
    let records = par::map_indexed(config.jobs, jobs_list.len(), |i| {
        let (policy, seed) = jobs_list[i];
        run_single(config, policy, seed, oracle_sol.as_ref())
    });

    let mut rows = Vec::with_capacity(jobs_list.len());
    for ((policy, seed), record) in jobs_list.iter().zip(records) {
        let record = record?;
        record
            .verify_feasible()
            .map_err(|e| Error::Precondition(format!("{} seed {seed}: {e}", policy.as_str())))?;
        let regret = regret_mix(&record, v_mix, config.horizon);
        let (cr_mix, cr_star) = match v_fixed_total {
            Some(vf) => {
                let (a, b) = competitive_ratios(&record, v_mix, vf, config.horizon)?;
                (a, Some(b))
            }
            None => (
                record.total_reward / (config.horizon as f64 * v_mix),
                None,
            ),
        };
        rows.push(RunRow {
            scenario: config.scenario_label.clone(),
            policy: *policy,
            alpha: config.alpha,
            rho: config.rho,
            horizon: config.horizon,
            seed: *seed,
            total_reward: record.total_reward,
            regret_mix: regret,
            cr_mix,
            cr_star,
            solve_count: record.solve_count,
        });
    }

    let sqrt_t = (config.horizon as f64).sqrt();
    let mut summaries = Vec::new();
    for policy in &config.policies {
        let sel: Vec<&RunRow> = rows.iter().filter(|r| r.policy == *policy).collect();
        let regrets: Vec<f64> = sel.iter().map(|r| r.regret_mix).collect();
        let scaled: Vec<f64> = regrets.iter().map(|r| r / sqrt_t).collect();
        let crms: Vec<f64> = sel.iter().map(|r| r.cr_mix).collect();
        let (regret_mean, regret_std) = mean_std(&regrets);
        let (sm, ss) = mean_std(&scaled);
        let (cm, cs) = mean_std(&crms);
        let (cr_star_mean, cr_star_std) = if v_fixed_total.is_some() {
            let stars: Vec<f64> = sel.iter().filter_map(|r| r.cr_star).collect();
            let (m, s) = mean_std(&stars);
            (Some(m), Some(s))
        } else {
            (None, None)
        };
        summaries.push(PolicySummary {
            policy: *policy,
            n: sel.len(),
            regret_mean,
            regret_std,
            regret_per_sqrt_t_mean: sm,
            regret_per_sqrt_t_std: ss,
            cr_mix_mean: cm,
            cr_mix_std: cs,
            cr_star_mean,
            cr_star_std,
        });
    }

    let result = ExperimentResult {
        rows,
        summaries,
        v_mix,
        v_fixed: v_fixed_total,
    };
    if let Some(path) = &config.out {
        write_csv(path, config, &result)?;
    }
    Ok(result)
}

fn write_csv(path: &Path, config: &ExperimentConfig, result: &ExperimentResult) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    let now = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    writeln!(out, "# generated_unix_secs={now}")?;
    writeln!(
        out,
        "# v_mix_per_period={} v_fixed_total={}",
        result.v_mix,
        result
            .v_fixed
            .map(|v| v.to_string())
            .unwrap_or_else(|| "n/a".into())
    )?;
    writeln!(out, "# aggregate +- values below are standard deviations over seeds")?;
    writeln!(
        out,
        "scenario,policy,alpha,rho,T,seed,total_reward,regret_mix,cr_mix,cr_star,solve_count"
    )?;
    for r in &result.rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.scenario,
            r.policy.as_str(),
            r.alpha,
            r.rho,
            r.horizon,
            r.seed,
            r.total_reward,
            r.regret_mix,
            r.cr_mix,
            r.cr_star.map(|v| v.to_string()).unwrap_or_default(),
            r.solve_count
        )?;
    }
    for s in &result.summaries {
        writeln!(
            out,
            "# summary policy={} T={} n={} regret_mean={} regret_std={} regret_per_sqrt_t_mean={} regret_per_sqrt_t_std={} cr_mix_mean={} cr_mix_std={} cr_star_mean={} cr_star_std={}",
            s.policy.as_str(),
            config.horizon,
            s.n,
            s.regret_mean,
            s.regret_std,
            s.regret_per_sqrt_t_mean,
            s.regret_per_sqrt_t_std,
            s.cr_mix_mean,
            s.cr_mix_std,
            s.cr_star_mean.map(|v| v.to_string()).unwrap_or_else(|| "n/a".into()),
            s.cr_star_std.map(|v| v.to_string()).unwrap_or_else(|| "n/a".into()),
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct OracleReport {
    pub v_mix: f64,
    pub t_v_mix: f64,
    pub v_fixed: f64,
    /// (T * v_mix) / v_fixed.
    pub gap: f64,
}

/// Estimates both oracles for a scenario and reports the gap between the
/// switching-aware and fixed-configuration values.
pub fn cmd_oracle(config: &ExperimentConfig) -> Result<OracleReport> {
    let v_mix = estimate_v_mix(config, None)?;
    let vf = estimate_v_fixed(config)?;
    if vf <= 0.0 {
        return Err(Error::Precondition(format!(
            "nonpositive fixed-configuration value {vf}"
        )));
    }
    let t_v_mix = config.horizon as f64 * v_mix;
    Ok(OracleReport {
        v_mix,
        t_v_mix,
        v_fixed: vf,
        gap: t_v_mix / vf,
    })
}
