//! Online policies: the optimistic saddle-point policy (warm start,
//! UCB-style surplus bonuses, doubling resolve schedule, bid-price
//! admission) and the Greedy / Random / Oracle / OneHot baselines, plus
//! regret and competitive-ratio metrics.

use rand::RngCore;

use crate::error::{Error, Result};
use crate::model::{admit, BudgetState, Mixture, PriceVector, SampleStore, ScenarioSpec};
use crate::saddle::{solve_saddle, SaddleSolution};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResolveSchedule {
    EveryRound,
    /// Re-solve only when some configuration's sample count has doubled
    /// since the last solve.
    Doubling,
}

#[derive(Debug, Clone)]
pub struct PolicyParams {
    /// Exploration scale; 0 turns the bonus off (Greedy).
    pub alpha: f64,
    /// Confidence level; `None` means 1/T^2.
    pub delta: Option<f64>,
    pub c_g: f64,
    pub c_0: f64,
    pub resolve_schedule: ResolveSchedule,
    /// Record the per-round trajectory (memory-heavy on long sweeps).
    pub log_trajectory: bool,
}

impl PolicyParams {
    pub fn new(alpha: f64) -> Self {
        Self {
            alpha,
            delta: None,
            c_g: 0.0707,
            c_0: 1.0,
            resolve_schedule: ResolveSchedule::Doubling,
            log_trajectory: true,
        }
    }

    fn validate(&self, horizon: usize) -> Result<f64> {
        if self.alpha < 0.0 || self.c_g <= 0.0 {
            return Err(Error::Precondition("need alpha >= 0 and c_g > 0".into()));
        }
        let delta = self
            .delta
            .unwrap_or_else(|| (horizon as f64).powi(-2).max(f64::MIN_POSITIVE));
        if !(0.0..1.0).contains(&delta) || delta == 0.0 {
            return Err(Error::Precondition(format!("delta {delta} not in (0,1)")));
        }
        Ok(delta)
    }
}

/// One round of a recorded trajectory.
#[derive(Debug, Clone)]
pub struct RoundLog {
    pub config: usize,
    pub reward: f64,
    pub consumption: Vec<f64>,
    pub accepted: bool,
    pub price: PriceVector,
    pub mixture: Mixture,
}

#[derive(Debug, Clone)]
pub struct RunRecord {
    pub total_reward: f64,
    pub accepted: usize,
    pub solve_count: usize,
    pub budget: BudgetState,
    pub rounds: Option<Vec<RoundLog>>,
}

impl RunRecord {
    /// Pathwise budget feasibility: replays the log and checks the
    /// accepted consumption never exceeds the total budget componentwise.
    pub fn verify_feasible(&self) -> std::result::Result<(), String> {
        for (i, rem) in self.budget.remaining.iter().enumerate() {
            if *rem < -1e-9 {
                return Err(format!("resource {i} overdrawn: remaining {rem}"));
            }
        }
        if let Some(rounds) = &self.rounds {
            let mut used = vec![0.0; self.budget.dim()];
            let mut reward = 0.0;
            for r in rounds {
                if r.accepted {
                    reward += r.reward;
                    for (u, a) in used.iter_mut().zip(&r.consumption) {
                        *u += a;
                    }
                }
            }
            for (i, (u, b)) in used.iter().zip(&self.budget.total).enumerate() {
                if *u > b + 1e-9 {
                    return Err(format!("resource {i}: used {u} > budget {b}"));
                }
            }
            if (reward - self.total_reward).abs() > 1e-9 * (1.0 + self.total_reward.abs()) {
                return Err("logged rewards disagree with total".into());
            }
        }
        Ok(())
    }
}

/// UCB-style surplus bonus
/// alpha * c_g * R_max * sqrt((d log(c_0 d P_max A_max T / R_max) + log(K T / delta)) / max(N,1)).
#[allow(clippy::too_many_arguments)]
pub fn confidence_radius(
    n: usize,
    alpha: f64,
    c_g: f64,
    c_0: f64,
    delta: f64,
    r_max: f64,
    a_max: f64,
    p_max: f64,
    d: usize,
    k: usize,
    horizon: usize,
) -> Result<f64> {
    let t = horizon as f64;
    let arg1 = c_0 * d as f64 * p_max * a_max * t / r_max;
    let arg2 = k as f64 * t / delta;
    if arg1 <= 0.0 || arg2 <= 0.0 {
        return Err(Error::Precondition(format!(
            "degenerate confidence-radius log arguments ({arg1}, {arg2})"
        )));
    }
    let bracket = d as f64 * arg1.ln() + arg2.ln();
    if bracket < 0.0 {
        return Err(Error::Precondition(format!(
            "negative confidence-radius bracket {bracket}"
        )));
    }
    Ok(alpha * c_g * r_max * (bracket / n.max(1) as f64).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineKind {
    Greedy,
    Random,
    Oracle,
    OneHot,
}

enum Selector<'a> {
    /// Optimistic saddle with bonuses; `one_hot` commits to the argmax
    /// configuration of the first post-warm-start mixture instead of
    /// sampling. Re-projecting at every solve would alternate
    /// configurations in blocks and still exploit complementarity, which
    /// is exactly what a single-configuration policy cannot do.
    Optimistic { one_hot: bool },
    /// Fixed (w*, p*) every round.
    FixedSaddle(&'a SaddleSolution),
    /// Uniform configuration choice, admission by feasibility only.
    RandomUniform,
}

/// Floor applied to the solver's budget so degenerate zero-budget runs
/// stay well-posed; admission still uses the true remaining budget.
const SOLVER_BUDGET_FLOOR: f64 = 1e-9;

fn run_policy(
    scenario: &ScenarioSpec,
    horizon: usize,
    rho: f64,
    params: &PolicyParams,
    selector: Selector<'_>,
    rng: &mut dyn RngCore,
) -> Result<RunRecord> {
    let k = scenario.num_configs;
    let d = scenario.dim;
    let warm = matches!(selector, Selector::Optimistic { .. });
    if warm && horizon <= k {
        return Err(Error::Precondition(format!(
            "horizon {horizon} must exceed the {k}-round warm start"
        )));
    }
    if let Some(cap) = scenario.source.horizon_cap() {
        if horizon > cap {
            return Err(Error::Precondition(format!(
                "horizon {horizon} exceeds the source's {cap} rounds"
            )));
        }
    }
    let delta = params.validate(horizon)?;
    let per_period = scenario.per_period_budget(rho);
    let total: Vec<f64> = per_period.iter().map(|b| b * horizon as f64).collect();
    let mut budget = BudgetState::new(total, horizon);
    let solver_budget: Vec<f64> = budget
        .safe
        .iter()
        .map(|b| b.max(SOLVER_BUDGET_FLOOR))
        .collect();
    let p_max = scenario.p_max(&solver_budget);

    let mut stores = SampleStore::new(k);
    let mut record = RunRecord {
        total_reward: 0.0,
        accepted: 0,
        solve_count: 0,
        budget: budget.clone(),
        rounds: params.log_trajectory.then(Vec::new),
    };

    let mut mixture = Mixture::uniform(k);
    let mut price = PriceVector::zeros(d);
    // Counts at the most recent solve; a solve is due when any count has
    // doubled since then.
    let mut counts_at_solve: Option<Vec<usize>> = None;
    // One-hot commitment, fixed at the first post-warm-start solve.
    let mut committed: Option<usize> = None;

    for round in 0..horizon {
        let (theta, observe_only) = match &selector {
            Selector::Optimistic { one_hot } => {
                if round < k {
                    (round, true) // warm start: round-robin, no admission
                } else {
                    let due = match params.resolve_schedule {
                        ResolveSchedule::EveryRound => true,
                        ResolveSchedule::Doubling => match &counts_at_solve {
                            None => true,
                            Some(at) => {
                                (0..k).any(|t| stores.count(t) >= 2 * at[t].max(1))
                            }
                        },
                    };
                    if due {
                        let mut bonuses = Vec::with_capacity(k);
                        for t in 0..k {
                            bonuses.push(confidence_radius(
                                stores.count(t),
                                params.alpha,
                                params.c_g,
                                params.c_0,
                                delta,
                                scenario.r_max,
                                scenario.a_max,
                                p_max,
                                d,
                                k,
                                horizon,
                            )?);
                        }
                        let sol = solve_saddle(&stores, &bonuses, &solver_budget)?;
                        mixture = sol.mixture;
                        price = sol.price;
                        record.solve_count += 1;
                        counts_at_solve = Some((0..k).map(|t| stores.count(t)).collect());
                    }
                    let theta = if *one_hot {
                        *committed.get_or_insert_with(|| mixture.argmax())
                    } else {
                        mixture.sample(rng)
                    };
                    (theta, false)
                }
            }
            Selector::FixedSaddle(sol) => {
                mixture = sol.mixture.clone();
                price = sol.price.clone();
                (mixture.sample(rng), false)
            }
            Selector::RandomUniform => {
                use rand::Rng;
                (rng.gen_range(0..k), false)
            }
        };

        let arrival = scenario.source.arrival(round, theta, rng);
        stores.push(theta, arrival.clone());

        let accepted = if observe_only {
            false
        } else {
            match &selector {
                Selector::RandomUniform => {
                    // Feasibility-only admission.
                    if budget.can_afford(&arrival.consumption) {
                        for (rem, a) in budget.remaining.iter_mut().zip(&arrival.consumption) {
                            *rem -= a;
                        }
                        true
                    } else {
                        false
                    }
                }
                _ => admit(&arrival, &price, &mut budget),
            }
        };
        if accepted {
            record.total_reward += arrival.reward;
            record.accepted += 1;
        }
        if let Some(rounds) = &mut record.rounds {
            rounds.push(RoundLog {
                config: theta,
                reward: arrival.reward,
                consumption: arrival.consumption,
                accepted,
                price: price.clone(),
                mixture: mixture.clone(),
            });
        }
    }
    record.budget = budget;
    Ok(record)
}

/// Optimistic saddle-point policy: K observation-only warm-start rounds,
/// then per-round mixture sampling from the latest optimistic saddle at
/// the safe budget, with strict bid-price admission against the full
/// remaining budget.
pub fn run_spucb(
    scenario: &ScenarioSpec,
    horizon: usize,
    rho: f64,
    params: &PolicyParams,
    rng: &mut dyn RngCore,
) -> Result<RunRecord> {
    run_policy(
        scenario,
        horizon,
        rho,
        params,
        Selector::Optimistic { one_hot: false },
        rng,
    )
}

/// Baselines. `oracle_solution` is required for `Oracle` and holds the
/// true-distribution saddle at the unscaled (non-safe) budget.
pub fn run_baseline(
    kind: BaselineKind,
    scenario: &ScenarioSpec,
    horizon: usize,
    rho: f64,
    params: &PolicyParams,
    oracle_solution: Option<&SaddleSolution>,
    rng: &mut dyn RngCore,
) -> Result<RunRecord> {
    match kind {
        BaselineKind::Greedy => {
            let mut p = params.clone();
            p.alpha = 0.0;
            run_policy(
                scenario,
                horizon,
                rho,
                &p,
                Selector::Optimistic { one_hot: false },
                rng,
            )
        }
        BaselineKind::Random => run_policy(
            scenario,
            horizon,
            rho,
            params,
            Selector::RandomUniform,
            rng,
        ),
        BaselineKind::Oracle => {
            let sol = oracle_solution.ok_or_else(|| {
                Error::Precondition("oracle baseline needs a precomputed saddle".into())
            })?;
            run_policy(
                scenario,
                horizon,
                rho,
                params,
                Selector::FixedSaddle(sol),
                rng,
            )
        }
        BaselineKind::OneHot => run_policy(
            scenario,
            horizon,
            rho,
            params,
            Selector::Optimistic { one_hot: true },
            rng,
        ),
    }
}

/// Shortfall against the switching-aware benchmark: T * v_mix - R_T.
pub fn regret_mix(record: &RunRecord, v_mix_per_period: f64, horizon: usize) -> f64 {
    horizon as f64 * v_mix_per_period - record.total_reward
}

/// (reward / (T * v_mix), reward / v_fixed_total).
pub fn competitive_ratios(
    record: &RunRecord,
    v_mix_per_period: f64,
    v_fixed_total: f64,
    horizon: usize,
) -> Result<(f64, f64)> {
    let denom_mix = horizon as f64 * v_mix_per_period;
    if denom_mix <= 0.0 || v_fixed_total <= 0.0 {
        return Err(Error::Precondition(format!(
            "nonpositive oracle denominators ({denom_mix}, {v_fixed_total})"
        )));
    }
    Ok((
        record.total_reward / denom_mix,
        record.total_reward / v_fixed_total,
    ))
}
