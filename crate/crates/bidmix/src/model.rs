//! Domain types shared by every policy: reward-resource pairs, prices,
//! mixtures over configurations, budget state, per-configuration sample
//! stores, and the empirical surplus / threshold-consumption estimators
//! that power the saddle solves.

use std::sync::Arc;

use rand::RngCore;

use crate::error::{Error, Result};

/// One arrival: a nonnegative reward and a nonnegative consumption vector.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardResourcePair {
    pub reward: f64,
    pub consumption: Vec<f64>,
}

impl RewardResourcePair {
    pub fn new(reward: f64, consumption: Vec<f64>) -> Self {
        Self {
            reward,
            consumption,
        }
    }

    pub fn dim(&self) -> usize {
        self.consumption.len()
    }
}

/// Nonnegative bid-price vector, one coordinate per resource.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceVector(pub Vec<f64>);

impl PriceVector {
    pub fn zeros(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn dot(&self, consumption: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(consumption)
            .map(|(p, a)| p * a)
            .sum()
    }
}

/// Probability weights over the K configurations.
#[derive(Debug, Clone, PartialEq)]
pub struct Mixture(Vec<f64>);

impl Mixture {
    const SUM_TOL: f64 = 1e-9;

    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|w| *w < 0.0) {
            return Err(Error::Precondition("mixture weight < 0".into()));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > Self::SUM_TOL {
            return Err(Error::Precondition(format!(
                "mixture weights sum to {sum}, not 1"
            )));
        }
        Ok(Self(weights))
    }

    /// Clamps tiny negatives and renormalizes. Fails if the drift exceeds `tol`.
    pub fn normalized(weights: Vec<f64>, tol: f64) -> Result<Self> {
        let mut w = weights;
        for v in w.iter_mut() {
            if *v < 0.0 {
                if *v < -tol {
                    return Err(Error::Precondition(format!(
                        "mixture weight {v} below -{tol}"
                    )));
                }
                *v = 0.0;
            }
        }
        let sum: f64 = w.iter().sum();
        if (sum - 1.0).abs() > tol {
            return Err(Error::Precondition(format!(
                "mixture mass {sum} drifted beyond {tol}"
            )));
        }
        for v in w.iter_mut() {
            *v /= sum;
        }
        Ok(Self(w))
    }

    pub fn point_mass(index: usize, len: usize) -> Self {
        let mut w = vec![0.0; len];
        w[index] = 1.0;
        Self(w)
    }

    pub fn uniform(len: usize) -> Self {
        Self(vec![1.0 / len as f64; len])
    }

    pub fn weights(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Index of the largest weight; ties resolve to the lowest index.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, w) in self.0.iter().enumerate().skip(1) {
            if *w > self.0[best] {
                best = i;
            }
        }
        best
    }

    /// Draws a configuration index by inverse CDF.
    pub fn sample(&self, rng: &mut dyn RngCore) -> usize {
        use rand::Rng;
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for (i, w) in self.0.iter().enumerate() {
            acc += w;
            if u < acc {
                return i;
            }
        }
        self.0.len() - 1
    }
}

/// Remaining / total budget plus the per-period and safe budgets.
#[derive(Debug, Clone)]
pub struct BudgetState {
    pub remaining: Vec<f64>,
    pub total: Vec<f64>,
    /// Per-period budget B/T.
    pub per_period: Vec<f64>,
    /// (1 - eps) * per_period.
    pub safe: Vec<f64>,
    pub eps: f64,
}

impl BudgetState {
    pub fn new(total: Vec<f64>, horizon: usize) -> Self {
        let t = horizon as f64;
        let eps = if horizon > 1 {
            (t.ln() / t).sqrt()
        } else {
            0.0
        };
        let per_period: Vec<f64> = total.iter().map(|b| b / t).collect();
        let safe: Vec<f64> = per_period.iter().map(|b| (1.0 - eps) * b).collect();
        Self {
            remaining: total.clone(),
            total,
            per_period,
            safe,
            eps,
        }
    }

    pub fn dim(&self) -> usize {
        self.total.len()
    }

    pub fn can_afford(&self, consumption: &[f64]) -> bool {
        self.remaining
            .iter()
            .zip(consumption)
            .all(|(rem, a)| *a <= *rem)
    }
}

/// Append-only history of observed pairs, one sequence per configuration.
/// Every observed arrival is recorded regardless of the admission outcome.
#[derive(Debug, Clone)]
pub struct SampleStore {
    per_config: Vec<Vec<RewardResourcePair>>,
}

impl SampleStore {
    pub fn new(num_configs: usize) -> Self {
        Self {
            per_config: vec![Vec::new(); num_configs],
        }
    }

    pub fn push(&mut self, config: usize, pair: RewardResourcePair) {
        self.per_config[config].push(pair);
    }

    pub fn count(&self, config: usize) -> usize {
        self.per_config[config].len()
    }

    pub fn samples(&self, config: usize) -> &[RewardResourcePair] {
        &self.per_config[config]
    }

    pub fn num_configs(&self) -> usize {
        self.per_config.len()
    }

    pub fn total_samples(&self) -> usize {
        self.per_config.iter().map(|s| s.len()).sum()
    }

    pub fn min_count(&self) -> usize {
        self.per_config.iter().map(|s| s.len()).min().unwrap_or(0)
    }
}

/// Source of configuration-conditional arrivals.
///
/// `sample` draws i.i.d. from the configuration's distribution (used by the
/// Monte Carlo oracles); `arrival` produces the in-run arrival for a given
/// round, which trace replay overrides to walk the trace in temporal order.
pub trait ArrivalSource: Send + Sync {
    fn sample(&self, config: usize, rng: &mut dyn RngCore) -> RewardResourcePair;

    fn arrival(&self, round: usize, config: usize, rng: &mut dyn RngCore) -> RewardResourcePair {
        let _ = round;
        self.sample(config, rng)
    }

    /// Number of rounds the source can replay, when bounded (trace replay).
    fn horizon_cap(&self) -> Option<usize> {
        None
    }
}

/// A scenario: configuration count, resource dimension, bound constants,
/// baseline per-period budget, and the arrival generator.
#[derive(Clone)]
pub struct ScenarioSpec {
    pub name: String,
    pub num_configs: usize,
    pub dim: usize,
    pub r_max: f64,
    pub a_max: f64,
    /// Baseline per-period budget b0; the run budget is rho * b0.
    pub base_budget: Vec<f64>,
    pub source: Arc<dyn ArrivalSource>,
}

impl ScenarioSpec {
    /// Per-period budget at scaling factor rho.
    pub fn per_period_budget(&self, rho: f64) -> Vec<f64> {
        self.base_budget.iter().map(|b| rho * b).collect()
    }

    /// Price-box bound 2*R_max/b_min for the given per-period budget.
    pub fn p_max(&self, per_period: &[f64]) -> f64 {
        let b_min = per_period.iter().cloned().fold(f64::INFINITY, f64::min);
        2.0 * self.r_max / b_min
    }
}

impl std::fmt::Debug for ScenarioSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ScenarioSpec")
            .field("name", &self.name)
            .field("num_configs", &self.num_configs)
            .field("dim", &self.dim)
            .field("r_max", &self.r_max)
            .field("a_max", &self.a_max)
            .field("base_budget", &self.base_budget)
            .finish()
    }
}

/// Threshold mode for the empirical consumption estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThresholdMode {
    /// Indicator r > <p, a>.
    Strict,
    /// Indicator r >= <p, a>.
    Weak,
}

/// Sample mean of hinge surpluses (r - <p,a>)_+; 0 for an empty store.
pub fn empirical_surplus(samples: &[RewardResourcePair], price: &PriceVector) -> Result<f64> {
    if samples.is_empty() {
        return Ok(0.0);
    }
    let mut sum = 0.0;
    for pair in samples {
        if pair.dim() != price.dim() {
            return Err(Error::DimensionMismatch {
                expected: price.dim(),
                got: pair.dim(),
            });
        }
        sum += (pair.reward - price.dot(&pair.consumption)).max(0.0);
    }
    Ok(sum / samples.len() as f64)
}

/// Mean consumption of samples passing the threshold test.
pub fn empirical_consumption(
    samples: &[RewardResourcePair],
    price: &PriceVector,
    mode: ThresholdMode,
) -> Result<Vec<f64>> {
    if samples.is_empty() {
        return Err(Error::EmptyStore { config: 0 });
    }
    let dim = price.dim();
    let mut acc = vec![0.0; dim];
    for pair in samples {
        if pair.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: pair.dim(),
            });
        }
        let priced = price.dot(&pair.consumption);
        let pass = match mode {
            ThresholdMode::Strict => pair.reward > priced,
            ThresholdMode::Weak => pair.reward >= priced,
        };
        if pass {
            for (a, v) in acc.iter_mut().zip(&pair.consumption) {
                *a += v;
            }
        }
    }
    let n = samples.len() as f64;
    for a in acc.iter_mut() {
        *a /= n;
    }
    Ok(acc)
}

/// Bid-price admission: accept iff the arrival fits the remaining budget and
/// its reward strictly beats the priced consumption. On accept the budget is
/// debited; on reject the state is unchanged.
pub fn admit(pair: &RewardResourcePair, price: &PriceVector, budget: &mut BudgetState) -> bool {
    admit_with_mode(pair, price, budget, ThresholdMode::Strict)
}

/// Same admission rule with a selectable threshold mode. The policies use
/// strict; the weak variant exists so the validation suite can demonstrate
/// that the modes separate exactly at ties.
pub fn admit_with_mode(
    pair: &RewardResourcePair,
    price: &PriceVector,
    budget: &mut BudgetState,
    mode: ThresholdMode,
) -> bool {
    debug_assert_eq!(pair.dim(), price.dim());
    if !budget.can_afford(&pair.consumption) {
        return false;
    }
    let priced = price.dot(&pair.consumption);
    let pass = match mode {
        ThresholdMode::Strict => pair.reward > priced,
        ThresholdMode::Weak => pair.reward >= priced,
    };
    if pass {
        for (rem, a) in budget.remaining.iter_mut().zip(&pair.consumption) {
            *rem -= a;
        }
    }
    pass
}
