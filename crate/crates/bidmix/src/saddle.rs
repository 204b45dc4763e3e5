//! Switching-aware fluid oracle: empirical saddle points of the mixed
//! value via LP, Monte Carlo estimates of the mixed and fixed oracles,
//! and the saddle/KKT certificate checks.

use rand::RngCore;

use crate::error::{Error, Result};
use crate::lp::{LinearProgram, Sense};
use crate::model::{empirical_surplus, Mixture, PriceVector, SampleStore, ScenarioSpec};
use crate::par;

/// A (mixture, price, value) triple from a saddle solve, with the
/// envelope-active configurations and the tie-weighted consumption of the
/// certificate.
#[derive(Debug, Clone)]
pub struct SaddleSolution {
    pub mixture: Mixture,
    pub price: PriceVector,
    /// L(w, p) at the solution.
    pub value: f64,
    pub active_set: Vec<usize>,
    /// Consumption implied by the solve's complementarity certificate.
    pub consumption: Vec<f64>,
}

/// Largest total sample count routed to the monolithic LP; bigger
/// instances use the cutting-plane decomposition, whose inner solves stay
/// at d rows regardless of sample count.
const DIRECT_SAMPLE_LIMIT: usize = 240;

const MAX_CUTS: usize = 500;
const DUAL_DRIFT_TOL: f64 = 1e-6;

/// L(w, p) = <p, b> + sum_theta w_theta (g_hat_theta(p) + beta_theta).
pub fn lagrangian(
    stores: &SampleStore,
    weights: &[f64],
    price: &PriceVector,
    bonuses: &[f64],
    budget: &[f64],
) -> Result<f64> {
    let mut v: f64 = price.0.iter().zip(budget).map(|(p, b)| p * b).sum();
    for (theta, w) in weights.iter().enumerate() {
        let g = empirical_surplus(stores.samples(theta), price)?;
        v += w * (g + bonuses[theta]);
    }
    Ok(v)
}

fn check_preconditions(stores: &SampleStore, bonuses: &[f64], budget: &[f64]) -> Result<()> {
    let k = stores.num_configs();
    if bonuses.len() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            got: bonuses.len(),
        });
    }
    for theta in 0..k {
        if stores.count(theta) == 0 {
            return Err(Error::EmptyStore { config: theta });
        }
    }
    if budget.iter().any(|b| *b <= 0.0) {
        return Err(Error::Precondition("budget must be positive".into()));
    }
    Ok(())
}

/// Computes the empirical saddle point for the given stores, bonuses and
/// per-period budget. Small instances solve the monolithic epigraph LP and
/// read the mixture off the envelope-row duals; large instances use an
/// exact cutting-plane scheme over the mixture simplex whose inner solves
/// are d-row LPs.
pub fn solve_saddle(
    stores: &SampleStore,
    bonuses: &[f64],
    budget: &[f64],
) -> Result<SaddleSolution> {
    check_preconditions(stores, bonuses, budget)?;
    if stores.total_samples() <= DIRECT_SAMPLE_LIMIT {
        solve_saddle_direct(stores, bonuses, budget)
    } else {
        solve_saddle_decomposed(stores, bonuses, budget)
    }
}

/// Monolithic LP: minimize b.p + z subject to
/// z >= beta_theta + (1/N_theta) sum_j y_{j,theta} for every theta and
/// y_{j,theta} >= r_j - a_j.p for every sample, with p, y, z >= 0.
/// The mixture is the dual of the K envelope rows; the price is primal.
pub fn solve_saddle_direct(
    stores: &SampleStore,
    bonuses: &[f64],
    budget: &[f64],
) -> Result<SaddleSolution> {
    check_preconditions(stores, bonuses, budget)?;
    let k = stores.num_configs();
    let d = budget.len();
    let n_total = stores.total_samples();
    let n_vars = d + 1 + n_total;

    let mut objective = vec![0.0; n_vars];
    objective[..d].copy_from_slice(budget);
    objective[d] = 1.0; // z
    let mut lp = LinearProgram::minimize(objective);

    // Envelope rows first so their duals are easy to slice out.
    let mut y_offset = d + 1;
    for theta in 0..k {
        let n_theta = stores.count(theta);
        let mut row = vec![0.0; n_vars];
        row[d] = 1.0;
        for j in 0..n_theta {
            row[y_offset + j] = -1.0 / n_theta as f64;
        }
        lp.add_constraint(row, Sense::Ge, bonuses[theta]);
        y_offset += n_theta;
    }
    let mut y_offset = d + 1;
    for theta in 0..k {
        for pair in stores.samples(theta) {
            let mut row = vec![0.0; n_vars];
            row[..d].copy_from_slice(&pair.consumption);
            row[y_offset] = 1.0;
            lp.add_constraint(row, Sense::Ge, pair.reward);
            y_offset += 1;
        }
    }

    let sol = crate::lp::solve(&lp)?.optimal()?;
    let price = PriceVector(sol.x[..d].to_vec());
    let mut w = sol.duals[..k].to_vec();
    let sum: f64 = w.iter().sum();
    if sum < 1.0 - DUAL_DRIFT_TOL {
        // The epigraph variable sits at its zero lower bound, which means
        // every configuration's envelope value ties at the max; any
        // completion of the dual mass is optimal, so park it on the best
        // envelope entry.
        let mut best = 0;
        let mut best_val = f64::NEG_INFINITY;
        for theta in 0..k {
            let v = empirical_surplus(stores.samples(theta), &price)? + bonuses[theta];
            if v > best_val {
                best_val = v;
                best = theta;
            }
        }
        w[best] += 1.0 - sum;
    }
    let mixture = Mixture::normalized(w, DUAL_DRIFT_TOL)?;

    // Tie-weighted consumption from the sample-row duals eta:
    // H = sum eta_{j,theta} a_{j,theta}.
    let mut consumption = vec![0.0; d];
    let mut row = k;
    for theta in 0..k {
        for pair in stores.samples(theta) {
            let eta = sol.duals[row];
            if eta != 0.0 {
                for (h, a) in consumption.iter_mut().zip(&pair.consumption) {
                    *h += eta * a;
                }
            }
            row += 1;
        }
    }

    let value = lagrangian(stores, mixture.weights(), &price, bonuses, budget)?;
    let active_set = active_configs(stores, &price, bonuses)?;
    Ok(SaddleSolution {
        mixture,
        price,
        value,
        active_set,
        consumption,
    })
}

/// Inner solve of the decomposition: for a fixed mixture, minimize
/// b.p + sum_theta w_theta g_hat_theta(p) over p >= 0 by solving its dual
/// (a d-row LP with per-sample box variables) and reading the price off
/// the capacity-row duals.
fn weighted_price_response(
    stores: &SampleStore,
    weights: &[f64],
    budget: &[f64],
) -> Result<(PriceVector, f64, Vec<f64>)> {
    let k = stores.num_configs();
    let d = budget.len();
    let n_total = stores.total_samples();

    let mut objective = Vec::with_capacity(n_total);
    for theta in 0..k {
        for pair in stores.samples(theta) {
            objective.push(-pair.reward);
        }
    }
    let mut lp = LinearProgram::minimize(objective);
    let mut col = 0;
    for theta in 0..k {
        let cap = weights[theta] / stores.count(theta) as f64;
        for _ in 0..stores.count(theta) {
            lp.set_bounds(col, 0.0, Some(cap));
            col += 1;
        }
    }
    for i in 0..d {
        let mut coeffs = Vec::with_capacity(n_total);
        for theta in 0..k {
            for pair in stores.samples(theta) {
                coeffs.push(pair.consumption[i]);
            }
        }
        lp.add_constraint(coeffs, Sense::Le, budget[i]);
    }

    let sol = crate::lp::solve(&lp)?.optimal()?;
    let price = PriceVector(sol.duals.iter().map(|y| -y).collect());
    let value_no_bonus = -sol.objective;
    let mut consumption = vec![0.0; d];
    let mut col = 0;
    for theta in 0..k {
        for pair in stores.samples(theta) {
            let eta = sol.x[col];
            if eta != 0.0 {
                for (h, a) in consumption.iter_mut().zip(&pair.consumption) {
                    *h += eta * a;
                }
            }
            col += 1;
        }
    }
    Ok((price, value_no_bonus, consumption))
}

/// Cutting-plane outer loop over the mixture simplex. Each inner solve is
/// exact, each cut is the (linear-in-w) Lagrangian at the inner price, and
/// the loop stops when the master upper bound meets the best evaluated
/// mixture value.
pub fn solve_saddle_decomposed(
    stores: &SampleStore,
    bonuses: &[f64],
    budget: &[f64],
) -> Result<SaddleSolution> {
    check_preconditions(stores, bonuses, budget)?;
    let k = stores.num_configs();
    let d = budget.len();
    let r_max_obs = (0..k)
        .flat_map(|t| stores.samples(t))
        .map(|p| p.reward)
        .fold(0.0f64, f64::max);
    // Base accuracy plus a roundoff allowance that grows with the number
    // of summed columns in the inner solves.
    let tol = 1e-8 * (1.0 + r_max_obs) + 1e-12 * stores.total_samples() as f64;

    let mut weights = vec![1.0 / k as f64; k];
    let mut cuts: Vec<(f64, Vec<f64>)> = Vec::new();
    let mut best: Option<(Vec<f64>, PriceVector, f64, Vec<f64>)> = None;

    for iter in 0..MAX_CUTS {
        let (price, value_no_bonus, consumption) =
            weighted_price_response(stores, &weights, budget)?;
        let phi: f64 = value_no_bonus
            + weights
                .iter()
                .zip(bonuses)
                .map(|(w, b)| w * b)
                .sum::<f64>();
        if best.as_ref().map(|(_, _, v, _)| phi > *v).unwrap_or(true) {
            best = Some((weights.clone(), price.clone(), phi, consumption));
        }

        let intercept: f64 = price.0.iter().zip(budget).map(|(p, b)| p * b).sum();
        let mut slopes = Vec::with_capacity(k);
        for theta in 0..k {
            slopes.push(empirical_surplus(stores.samples(theta), &price)? + bonuses[theta]);
        }
        cuts.push((intercept, slopes));

        // Master: max t s.t. t <= intercept_i + slopes_i . w, w in simplex.
        let mut objective = vec![0.0; k + 1];
        objective[k] = -1.0;
        let mut master = LinearProgram::minimize(objective);
        let mut simplex_row = vec![1.0; k + 1];
        simplex_row[k] = 0.0;
        master.add_constraint(simplex_row, Sense::Eq, 1.0);
        for (intercept, slopes) in &cuts {
            let mut row = vec![0.0; k + 1];
            row[..k].copy_from_slice(slopes);
            for v in row.iter_mut().take(k) {
                *v = -*v;
            }
            row[k] = 1.0;
            master.add_constraint(row, Sense::Le, *intercept);
        }
        let msol = crate::lp::solve(&master)?.optimal()?;
        let upper = msol.x[k];
        let best_phi = best.as_ref().map(|(_, _, v, _)| *v).unwrap();
        if upper - best_phi <= tol {
            break;
        }
        weights = msol.x[..k].to_vec();
        // Clamp master roundoff before the next inner solve.
        for w in weights.iter_mut() {
            *w = w.max(0.0);
        }
        let sum: f64 = weights.iter().sum();
        for w in weights.iter_mut() {
            *w /= sum;
        }
        if iter + 1 == MAX_CUTS {
            // Kelley tails off near the optimum; settle for a looser gap
            // at the cut budget rather than failing outright.
            if upper - best_phi <= 1e-6 * (1.0 + r_max_obs) {
                break;
            }
            return Err(Error::SaddleStalled {
                iterations: MAX_CUTS,
                gap: upper - best_phi,
            });
        }
    }

    let (w, price, _, consumption) = best.unwrap();
    let mixture = Mixture::normalized(w, DUAL_DRIFT_TOL)?;
    let value = lagrangian(stores, mixture.weights(), &price, bonuses, budget)?;
    let active_set = active_configs(stores, &price, bonuses)?;
    let _ = d;
    Ok(SaddleSolution {
        mixture,
        price,
        value,
        active_set,
        consumption,
    })
}

fn active_configs(
    stores: &SampleStore,
    price: &PriceVector,
    bonuses: &[f64],
) -> Result<Vec<usize>> {
    let k = stores.num_configs();
    let r_max_obs = (0..k)
        .flat_map(|t| stores.samples(t))
        .map(|p| p.reward)
        .fold(0.0f64, f64::max);
    let tol = 1e-6 * (1.0 + r_max_obs);
    let mut vals = Vec::with_capacity(k);
    for theta in 0..k {
        vals.push(empirical_surplus(stores.samples(theta), price)? + bonuses[theta]);
    }
    let max = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok((0..k).filter(|t| vals[*t] >= max - tol).collect())
}

/// Grid-search value of the saddle problem: min over a price grid of
/// b.p + max_theta (g_hat_theta(p) + beta_theta). Only for d <= 2.
pub fn brute_force_saddle(
    stores: &SampleStore,
    bonuses: &[f64],
    budget: &[f64],
    grid_step: f64,
) -> Result<f64> {
    check_preconditions(stores, bonuses, budget)?;
    let d = budget.len();
    if d > 2 {
        return Err(Error::Precondition(
            "grid saddle search refuses d > 2".into(),
        ));
    }
    let k = stores.num_configs();
    let r_max_obs = (0..k)
        .flat_map(|t| stores.samples(t))
        .map(|p| p.reward)
        .fold(0.0f64, f64::max);
    let b_min = budget.iter().cloned().fold(f64::INFINITY, f64::min);
    let p_max = 2.0 * r_max_obs / b_min;
    let steps = (p_max / grid_step).ceil() as usize + 1;

    let eval = |price: &PriceVector| -> Result<f64> {
        let mut envelope = f64::NEG_INFINITY;
        for theta in 0..k {
            let g = empirical_surplus(stores.samples(theta), price)? + bonuses[theta];
            envelope = envelope.max(g);
        }
        Ok(price.0.iter().zip(budget).map(|(p, b)| p * b).sum::<f64>() + envelope)
    };

    let mut best = f64::INFINITY;
    if d == 1 {
        for i in 0..=steps {
            let p = PriceVector(vec![(i as f64 * grid_step).min(p_max)]);
            best = best.min(eval(&p)?);
        }
    } else {
        for i in 0..=steps {
            for j in 0..=steps {
                let p = PriceVector(vec![
                    (i as f64 * grid_step).min(p_max),
                    (j as f64 * grid_step).min(p_max),
                ]);
                best = best.min(eval(&p)?);
            }
        }
    }
    Ok(best)
}

/// Monte Carlo estimate of the mixed fluid saddle: draws
/// `n_samples_per_config` i.i.d. samples per configuration and solves the
/// empirical saddle with zero bonuses at the given per-period budget.
pub fn mixed_fluid_saddle(
    scenario: &ScenarioSpec,
    per_period_budget: &[f64],
    n_samples_per_config: usize,
    rng: &mut dyn RngCore,
) -> Result<SaddleSolution> {
    if n_samples_per_config == 0 {
        return Err(Error::Precondition("need at least one sample".into()));
    }
    let mut stores = SampleStore::new(scenario.num_configs);
    for theta in 0..scenario.num_configs {
        for _ in 0..n_samples_per_config {
            stores.push(theta, scenario.source.sample(theta, rng));
        }
    }
    let bonuses = vec![0.0; scenario.num_configs];
    solve_saddle(&stores, &bonuses, per_period_budget)
}

/// Per-period switching-aware oracle value V^mix.
pub fn v_mix(
    scenario: &ScenarioSpec,
    per_period_budget: &[f64],
    n_samples_per_config: usize,
    rng: &mut dyn RngCore,
) -> Result<f64> {
    Ok(mixed_fluid_saddle(scenario, per_period_budget, n_samples_per_config, rng)?.value)
}

/// Fixed-configuration oracle V*: for each configuration, the Monte Carlo
/// mean over sampled paths of the offline allocation LP
/// max r.x s.t. sum a_t x_t <= T b, x in [0,1]^T; returns the best
/// configuration's mean in total (not per-period) units.
pub fn v_fixed(
    scenario: &ScenarioSpec,
    per_period_budget: &[f64],
    horizon: usize,
    n_paths: usize,
    rng: &mut dyn RngCore,
    jobs: usize,
) -> Result<f64> {
    if horizon == 0 || n_paths == 0 {
        return Err(Error::Precondition("horizon and n_paths must be >= 1".into()));
    }
    let total_budget: Vec<f64> = per_period_budget
        .iter()
        .map(|b| b * horizon as f64)
        .collect();
    let k = scenario.num_configs;
    let seeds: Vec<u64> = (0..k * n_paths).map(|_| rng.next_u64()).collect();

    let path_values = par::map_indexed(jobs, k * n_paths, |idx| {
        use rand::SeedableRng;
        let theta = idx / n_paths;
        let mut path_rng = rand_chacha::ChaCha8Rng::seed_from_u64(seeds[idx]);
        let mut rewards = Vec::with_capacity(horizon);
        let mut lp = LinearProgram::minimize(vec![0.0; horizon]);
        let mut rows: Vec<Vec<f64>> = vec![vec![0.0; horizon]; total_budget.len()];
        for t in 0..horizon {
            let pair = scenario.source.sample(theta, &mut path_rng);
            lp.objective[t] = -pair.reward;
            lp.set_bounds(t, 0.0, Some(1.0));
            for (row, a) in rows.iter_mut().zip(&pair.consumption) {
                row[t] = *a;
            }
            rewards.push(pair.reward);
        }
        for (row, cap) in rows.into_iter().zip(&total_budget) {
            lp.add_constraint(row, Sense::Le, *cap);
        }
        crate::lp::solve(&lp)
            .and_then(|o| o.optimal())
            .map(|s| -s.objective)
    });

    let mut best = f64::NEG_INFINITY;
    for theta in 0..k {
        let mut sum = 0.0;
        for idx in theta * n_paths..(theta + 1) * n_paths {
            sum += match &path_values[idx] {
                Ok(v) => *v,
                Err(e) => {
                    return Err(Error::Precondition(format!(
                        "offline path solve failed: {e}"
                    )))
                }
            };
        }
        best = best.max(sum / n_paths as f64);
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy)]
pub struct KktReport {
    pub support_ok: bool,
    pub feasible_ok: bool,
    pub complementary_ok: bool,
}

impl KktReport {
    pub fn all_ok(&self) -> bool {
        self.support_ok && self.feasible_ok && self.complementary_ok
    }
}

#[derive(Debug, Clone, Copy)]
pub struct KktTolerances {
    /// Weights below this are treated as zero.
    pub weight: f64,
    /// Envelope slack allowed for supported configurations.
    pub envelope: f64,
    /// Componentwise feasibility slack.
    pub feasibility: f64,
    /// Complementarity slack.
    pub complementarity: f64,
}

impl KktTolerances {
    pub fn standard(r_max: f64, budget: &[f64]) -> Self {
        let b_min = budget.iter().cloned().fold(f64::INFINITY, f64::min);
        let p_max = 2.0 * r_max / b_min;
        let b_l1: f64 = budget.iter().sum();
        Self {
            weight: 1e-8,
            envelope: 1e-6 * (1.0 + r_max),
            feasibility: 1e-6,
            complementarity: 1e-6 * (1.0 + b_l1 * p_max),
        }
    }
}

/// Verifies the three saddle conditions: envelope support, feasibility of
/// some tie-weighted consumption, and complementarity of some tie-weighted
/// consumption. Feasibility and complementarity use the strict/weak
/// consumption sandwich: the achievable consumptions form a componentwise
/// box between the two, so existence checks reduce to interval tests.
pub fn kkt_check(
    mixture: &Mixture,
    price: &PriceVector,
    stores: &SampleStore,
    bonuses: &[f64],
    budget: &[f64],
    tol: &KktTolerances,
) -> Result<KktReport> {
    let k = stores.num_configs();
    let mut env = Vec::with_capacity(k);
    for theta in 0..k {
        env.push(empirical_surplus(stores.samples(theta), price)? + bonuses[theta]);
    }
    let env_max = env.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let support_ok = mixture
        .weights()
        .iter()
        .enumerate()
        .all(|(t, w)| *w <= tol.weight || env[t] >= env_max - tol.envelope);

    let d = budget.len();
    let mut h_strict = vec![0.0; d];
    let mut h_weak = vec![0.0; d];
    for (theta, w) in mixture.weights().iter().enumerate() {
        if *w <= tol.weight {
            continue;
        }
        let samples = stores.samples(theta);
        let scale = w / samples.len() as f64;
        for pair in samples {
            // A vertex price makes some samples exact ties; reclassifying
            // them by raw floating-point sign would randomly move whole
            // sample weights across the strict/weak split, so ties are
            // detected with a small relative band instead.
            let margin = pair.reward - price.dot(&pair.consumption);
            let band = 1e-8 * (1.0 + pair.reward.abs());
            if margin > band {
                for (h, a) in h_strict.iter_mut().zip(&pair.consumption) {
                    *h += scale * a;
                }
            }
            if margin >= -band {
                for (h, a) in h_weak.iter_mut().zip(&pair.consumption) {
                    *h += scale * a;
                }
            }
        }
    }
    let feasible_ok = h_strict
        .iter()
        .zip(budget)
        .all(|(h, b)| *h <= b + tol.feasibility);

    // <p, b - H> over the consumption box spans an interval; complementarity
    // holds iff the interval reaches zero.
    let slack_hi: f64 = price
        .0
        .iter()
        .zip(budget.iter().zip(&h_strict))
        .map(|(p, (b, h))| p * (b - h))
        .sum();
    let slack_lo: f64 = price
        .0
        .iter()
        .zip(budget.iter().zip(&h_weak))
        .map(|(p, (b, h))| p * (b - h))
        .sum();
    let complementary_ok = slack_lo <= tol.complementarity && slack_hi >= -tol.complementarity;

    Ok(KktReport {
        support_ok,
        feasible_ok,
        complementary_ok,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::RewardResourcePair;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn store_from(configs: &[&[(f64, &[f64])]]) -> SampleStore {
        let mut s = SampleStore::new(configs.len());
        for (theta, samples) in configs.iter().enumerate() {
            for (r, a) in samples.iter() {
                s.push(theta, RewardResourcePair::new(*r, a.to_vec()));
            }
        }
        s
    }

    fn random_instance(rng: &mut ChaCha8Rng) -> (SampleStore, Vec<f64>, Vec<f64>) {
        let k = rng.gen_range(1..=3);
        let d = rng.gen_range(1..=2);
        let mut stores = SampleStore::new(k);
        for theta in 0..k {
            let n = rng.gen_range(1..=6);
            for _ in 0..n {
                let r: f64 = rng.gen_range(0.05..2.0);
                let a: Vec<f64> = (0..d).map(|_| rng.gen_range(0.05..1.5)).collect();
                stores.push(theta, RewardResourcePair::new(r, a));
            }
        }
        let bonuses: Vec<f64> = (0..k).map(|_| rng.gen_range(0.0..0.5)).collect();
        let budget: Vec<f64> = (0..d).map(|_| rng.gen_range(0.2..1.5)).collect();
        (stores, bonuses, budget)
    }

    #[test]
    fn single_sample_non_binding_budget() {
        let stores = store_from(&[&[(1.0, &[1.0])]]);
        let sol = solve_saddle(&stores, &[0.0], &[2.0]).unwrap();
        assert!(sol.price.0[0].abs() < 1e-9);
        assert!((sol.mixture.weights()[0] - 1.0).abs() < 1e-9);
        assert!((sol.value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn orthogonal_pair_complementarity() {
        let stores = store_from(&[&[(1.0, &[1.0, 0.0])], &[(1.0, &[0.0, 1.0])]]);
        let sol = solve_saddle(&stores, &[0.0, 0.0], &[0.35, 0.35]).unwrap();
        assert!((sol.value - 0.7).abs() < 1e-8, "value {}", sol.value);
        assert!((sol.price.0[0] - 1.0).abs() < 1e-8);
        assert!((sol.price.0[1] - 1.0).abs() < 1e-8);
        let tol = KktTolerances::standard(1.0, &[0.35, 0.35]);
        let report = kkt_check(
            &sol.mixture,
            &sol.price,
            &stores,
            &[0.0, 0.0],
            &[0.35, 0.35],
            &tol,
        )
        .unwrap();
        assert!(report.all_ok(), "{report:?}");
    }

    #[test]
    fn uniform_bonus_translates_value() {
        let stores = store_from(&[&[(1.0, &[1.0, 0.0])], &[(1.0, &[0.0, 1.0])]]);
        let base = solve_saddle(&stores, &[0.0, 0.0], &[0.35, 0.35]).unwrap();
        let shifted = solve_saddle(&stores, &[10.0, 10.0], &[0.35, 0.35]).unwrap();
        assert!((shifted.value - base.value - 10.0).abs() < 1e-8);
    }

    #[test]
    fn brute_force_on_analytic_cases() {
        let stores = store_from(&[&[(1.0, &[1.0])]]);
        let v = brute_force_saddle(&stores, &[0.0], &[2.0], 0.01).unwrap();
        assert!((v - 1.0).abs() <= 0.02);

        let stores = store_from(&[&[(1.0, &[1.0, 0.0])], &[(1.0, &[0.0, 1.0])]]);
        let v = brute_force_saddle(&stores, &[0.0, 0.0], &[0.35, 0.35], 0.01).unwrap();
        assert!((v - 0.7).abs() <= 0.02);
    }

    #[test]
    fn brute_force_refuses_high_dimension() {
        let stores = store_from(&[&[(1.0, &[1.0, 1.0, 1.0])]]);
        assert!(brute_force_saddle(&stores, &[0.0], &[1.0, 1.0, 1.0], 0.1).is_err());
    }

    #[test]
    fn lp_matches_grid_search_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let grid_step = 0.01;
        for case in 0..40 {
            let (stores, bonuses, budget) = random_instance(&mut rng);
            let sol = solve_saddle(&stores, &bonuses, &budget).unwrap();
            let grid = brute_force_saddle(&stores, &bonuses, &budget, grid_step).unwrap();
            let b_l1: f64 = budget.iter().sum();
            let tol = 2.0 * grid_step * (b_l1 + 1.0);
            assert!(
                (sol.value - grid).abs() <= tol,
                "case {case}: lp {} grid {grid} tol {tol}",
                sol.value
            );
            assert!(sol.value <= grid + 1e-9, "lp must not exceed the grid min");
        }
    }

    #[test]
    fn decomposition_matches_direct() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        for _ in 0..20 {
            let (stores, bonuses, budget) = random_instance(&mut rng);
            let direct = solve_saddle_direct(&stores, &bonuses, &budget).unwrap();
            let decomposed = solve_saddle_decomposed(&stores, &bonuses, &budget).unwrap();
            assert!(
                (direct.value - decomposed.value).abs() <= 1e-7 * (1.0 + direct.value.abs()),
                "direct {} decomposed {}",
                direct.value,
                decomposed.value
            );
        }
    }

    #[test]
    fn kkt_passes_on_solver_output() {
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        for case in 0..50 {
            let (stores, bonuses, budget) = random_instance(&mut rng);
            let sol = solve_saddle(&stores, &bonuses, &budget).unwrap();
            let r_max = 2.0;
            let tol = KktTolerances::standard(r_max, &budget);
            let report =
                kkt_check(&sol.mixture, &sol.price, &stores, &bonuses, &budget, &tol).unwrap();
            assert!(report.all_ok(), "case {case}: {report:?}");
        }
    }

    #[test]
    fn kkt_rejects_off_envelope_point_mass() {
        // Config 1 has a much lower reward, so at the solver's price a point
        // mass on it violates envelope support.
        let stores = store_from(&[&[(1.0, &[0.5])], &[(0.1, &[0.5])]]);
        let budget = vec![1.0];
        let sol = solve_saddle(&stores, &[0.0, 0.0], &budget).unwrap();
        let tol = KktTolerances::standard(1.0, &budget);
        let bad = Mixture::point_mass(1, 2);
        let report = kkt_check(&bad, &sol.price, &stores, &[0.0, 0.0], &budget, &tol).unwrap();
        assert!(!report.support_ok);
    }

    #[test]
    fn price_stays_in_the_box() {
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        for _ in 0..40 {
            let (stores, bonuses, budget) = random_instance(&mut rng);
            let sol = solve_saddle(&stores, &bonuses, &budget).unwrap();
            let r_max_obs = (0..stores.num_configs())
                .flat_map(|t| stores.samples(t))
                .map(|p| p.reward)
                .fold(0.0f64, f64::max);
            let b_min = budget.iter().cloned().fold(f64::INFINITY, f64::min);
            for p in &sol.price.0 {
                assert!(*p <= r_max_obs / b_min + 1e-6);
            }
        }
    }

    #[test]
    fn saddle_inequalities_hold() {
        let mut rng = ChaCha8Rng::seed_from_u64(59);
        for _ in 0..20 {
            let (stores, bonuses, budget) = random_instance(&mut rng);
            let k = stores.num_configs();
            let sol = solve_saddle(&stores, &bonuses, &budget).unwrap();
            let value = sol.value;
            // Vertex mixtures cannot beat w* at p*.
            for theta in 0..k {
                let vertex = Mixture::point_mass(theta, k);
                let l =
                    lagrangian(&stores, vertex.weights(), &sol.price, &bonuses, &budget).unwrap();
                assert!(l <= value + 1e-6);
            }
            // Grid prices cannot undercut p* at w*.
            let b_min = budget.iter().cloned().fold(f64::INFINITY, f64::min);
            let p_max = 2.0 * 2.0 / b_min;
            for step in 0..21 {
                let level = p_max * step as f64 / 20.0;
                let p = PriceVector(vec![level; budget.len()]);
                let l =
                    lagrangian(&stores, sol.mixture.weights(), &p, &bonuses, &budget).unwrap();
                assert!(l >= value - 1e-6);
            }
        }
    }

    #[test]
    fn empty_store_is_a_precondition_error() {
        let stores = SampleStore::new(2);
        assert!(solve_saddle(&stores, &[0.0, 0.0], &[1.0, 1.0]).is_err());
    }
}
