//! Runtime validation suite: named, independently runnable property
//! checks over the estimators, the LP solver, the saddle solves and the
//! policies. Exposed through the CLI so a deployed binary can re-verify
//! itself without the test harness.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::lp;
use crate::model::{
    admit_with_mode, empirical_consumption, BudgetState, Mixture, PriceVector,
    RewardResourcePair, SampleStore, ThresholdMode,
};
use crate::policy::{run_spucb, PolicyParams};
use crate::reference;
use crate::saddle::{brute_force_saddle, kkt_check, solve_saddle, KktTolerances};

type Check = std::result::Result<(), String>;

pub struct PropertyResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn random_saddle_instance(rng: &mut ChaCha8Rng) -> (SampleStore, Vec<f64>, Vec<f64>) {
    let k = rng.gen_range(1..=3);
    let d = rng.gen_range(1..=2);
    let mut stores = SampleStore::new(k);
    for theta in 0..k {
        for _ in 0..rng.gen_range(1..=6) {
            let r = rng.gen_range(0.05..2.0);
            let a = (0..d).map(|_| rng.gen_range(0.05..1.5)).collect();
            stores.push(theta, RewardResourcePair::new(r, a));
        }
    }
    let bonuses = (0..k).map(|_| rng.gen_range(0.0..0.5)).collect();
    let budget = (0..d).map(|_| rng.gen_range(0.2..1.5)).collect();
    (stores, bonuses, budget)
}

/// r x <= <p,a> x + (r - <p,a>)_+ pathwise, over 10^4 random cases.
fn surplus_pathwise_inequality() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for case in 0..10_000 {
        let r: f64 = rng.gen_range(0.0..2.0);
        let a: Vec<f64> = (0..2).map(|_| rng.gen_range(0.0..2.0)).collect();
        let p = PriceVector(vec![rng.gen_range(0.0..4.0), rng.gen_range(0.0..4.0)]);
        let x = f64::from(rng.gen_bool(0.5));
        let priced = p.dot(&a);
        if r * x > priced * x + (r - priced).max(0.0) + 1e-9 {
            return Err(format!("case {case}: r={r} p.a={priced} x={x}"));
        }
    }
    Ok(())
}

/// Strict threshold consumption <= weak threshold consumption.
fn consumption_sandwich() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    for case in 0..200 {
        let (stores, _, _) = random_saddle_instance(&mut rng);
        for theta in 0..stores.num_configs() {
            let d = stores.samples(theta)[0].dim();
            let p = PriceVector((0..d).map(|_| rng.gen_range(0.0..2.0)).collect());
            let strict = empirical_consumption(stores.samples(theta), &p, ThresholdMode::Strict)
                .map_err(|e| e.to_string())?;
            let weak = empirical_consumption(stores.samples(theta), &p, ThresholdMode::Weak)
                .map_err(|e| e.to_string())?;
            for (s, w) in strict.iter().zip(&weak) {
                if s > w {
                    return Err(format!("case {case}: strict {s} > weak {w}"));
                }
            }
        }
    }
    Ok(())
}

/// Solver prices stay within ||p||_inf <= R_max / b_min + 1e-6.
fn price_box_bound() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(107);
    for case in 0..100 {
        let (stores, bonuses, budget) = random_saddle_instance(&mut rng);
        let sol = solve_saddle(&stores, &bonuses, &budget).map_err(|e| e.to_string())?;
        let r_max = (0..stores.num_configs())
            .flat_map(|t| stores.samples(t))
            .map(|p| p.reward)
            .fold(0.0f64, f64::max);
        let b_min = budget.iter().cloned().fold(f64::INFINITY, f64::min);
        for p in &sol.price.0 {
            if *p > r_max / b_min + 1e-6 {
                return Err(format!("case {case}: price {p} above box {}", r_max / b_min));
            }
        }
    }
    Ok(())
}

/// Recorded runs never overdraw any resource.
fn budget_feasibility() -> Check {
    let mut params = PolicyParams::new(0.5);
    params.log_trajectory = true;
    for (seed, rho) in [(1u64, 0.5), (2, 0.7), (3, 1.0)] {
        for scenario in [crate::scenarios::make_s0(1.0), crate::scenarios::make_s4(1.0)] {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let rec = run_spucb(&scenario, 120, rho, &params, &mut rng)
                .map_err(|e| e.to_string())?;
            rec.verify_feasible()
                .map_err(|e| format!("{} rho={rho} seed={seed}: {e}", scenario.name))?;
        }
    }
    Ok(())
}

/// Empirical draw frequencies track the mixture weights.
fn mixture_frequency() -> Check {
    let w = Mixture::new(vec![0.1, 0.6, 0.3]).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(109);
    let n = 100_000usize;
    let mut counts = [0usize; 3];
    for _ in 0..n {
        counts[w.sample(&mut rng)] += 1;
    }
    for (c, target) in counts.iter().zip(w.weights()) {
        let freq = *c as f64 / n as f64;
        let tol = 4.0 * (target / n as f64).sqrt();
        if (freq - target).abs() > tol {
            return Err(format!("freq {freq} vs weight {target} (tol {tol})"));
        }
    }
    Ok(())
}

/// Exactly K observation rounds with zero admissions and untouched budget.
fn warm_start() -> Check {
    let scenario = crate::scenarios::make_s0(0.7);
    let mut params = PolicyParams::new(1.5);
    params.log_trajectory = true;
    let mut rng = ChaCha8Rng::seed_from_u64(113);
    let rec = run_spucb(&scenario, 60, 1.0, &params, &mut rng).map_err(|e| e.to_string())?;
    let rounds = rec.rounds.as_ref().ok_or("trajectory missing")?;
    for (t, r) in rounds.iter().take(scenario.num_configs).enumerate() {
        if r.config != t || r.accepted {
            return Err(format!("round {t}: config {} accepted {}", r.config, r.accepted));
        }
    }
    if rounds
        .iter()
        .skip(scenario.num_configs)
        .all(|r| !r.accepted)
    {
        return Err("no admissions after warm start".into());
    }
    Ok(())
}

/// Doubling schedule keeps solves within K (log2 T + 2) + 1.
fn doubling_count() -> Check {
    let scenario = crate::scenarios::make_s4(0.7);
    let horizon = 800;
    let mut rng = ChaCha8Rng::seed_from_u64(127);
    let rec = run_spucb(&scenario, horizon, 1.0, &PolicyParams::new(0.1), &mut rng)
        .map_err(|e| e.to_string())?;
    let bound = scenario.num_configs as f64 * ((horizon as f64).log2() + 2.0) + 1.0;
    if rec.solve_count as f64 > bound {
        return Err(format!("{} solves exceed bound {bound}", rec.solve_count));
    }
    Ok(())
}

/// Simplex agrees with the exhaustive vertex enumerator and its
/// certificate (duality, complementary slackness) verifies.
fn lp_vertex_oracle() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(131);
    for case in 0..150 {
        let p = reference::random_bounded_lp(&mut rng, 4, 6);
        let sol = lp::solve(&p)
            .and_then(|o| o.optimal())
            .map_err(|e| format!("case {case}: {e}"))?;
        let oracle = reference::vertex_enumeration_optimum(&p)
            .ok_or_else(|| format!("case {case}: oracle found no vertex"))?;
        if (sol.objective - oracle).abs() > 1e-6 * (1.0 + oracle.abs()) {
            return Err(format!("case {case}: {} vs oracle {oracle}", sol.objective));
        }
        sol.verify(&p).map_err(|e| format!("case {case}: {e}"))?;
    }
    Ok(())
}

/// Saddle LP value equals the grid search within the grid's error bound.
fn saddle_grid_equivalence() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(137);
    let grid_step = 0.01;
    for case in 0..30 {
        let (stores, bonuses, budget) = random_saddle_instance(&mut rng);
        let sol = solve_saddle(&stores, &bonuses, &budget).map_err(|e| e.to_string())?;
        let grid =
            brute_force_saddle(&stores, &bonuses, &budget, grid_step).map_err(|e| e.to_string())?;
        let tol = 2.0 * grid_step * (budget.iter().sum::<f64>() + 1.0);
        if (sol.value - grid).abs() > tol {
            return Err(format!("case {case}: lp {} grid {grid}", sol.value));
        }
    }
    Ok(())
}

/// Saddle certificates satisfy support, feasibility and complementarity.
fn kkt_certificate() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(139);
    for case in 0..60 {
        let (stores, bonuses, budget) = random_saddle_instance(&mut rng);
        let sol = solve_saddle(&stores, &bonuses, &budget).map_err(|e| e.to_string())?;
        let tol = KktTolerances::standard(2.0, &budget);
        let report = kkt_check(&sol.mixture, &sol.price, &stores, &bonuses, &budget, &tol)
            .map_err(|e| e.to_string())?;
        if !report.all_ok() {
            return Err(format!("case {case}: {report:?}"));
        }
    }
    Ok(())
}

/// Strict and weak admission separate exactly at reward ties.
fn tie_mode_separation() -> Check {
    let pair = RewardResourcePair::new(0.5, vec![1.0]);
    let price = PriceVector(vec![0.5]);
    let mut strict_budget = BudgetState::new(vec![10.0], 10);
    let mut weak_budget = BudgetState::new(vec![10.0], 10);
    let strict = admit_with_mode(&pair, &price, &mut strict_budget, ThresholdMode::Strict);
    let weak = admit_with_mode(&pair, &price, &mut weak_budget, ThresholdMode::Weak);
    if strict || !weak {
        return Err(format!("tie handled wrong: strict={strict} weak={weak}"));
    }
    if strict_budget.remaining[0] != 10.0 || weak_budget.remaining[0] != 9.0 {
        return Err("tie admission debited the wrong budget".into());
    }
    Ok(())
}

const PROPERTIES: [(&str, fn() -> Check); 11] = [
    ("surplus_pathwise_inequality", surplus_pathwise_inequality),
    ("consumption_sandwich", consumption_sandwich),
    ("price_box_bound", price_box_bound),
    ("budget_feasibility", budget_feasibility),
    ("mixture_frequency", mixture_frequency),
    ("warm_start", warm_start),
    ("doubling_count", doubling_count),
    ("lp_vertex_oracle", lp_vertex_oracle),
    ("saddle_grid_equivalence", saddle_grid_equivalence),
    ("kkt_certificate", kkt_certificate),
    ("tie_mode_separation", tie_mode_separation),
];

/// Runs every property whose name contains `filter` (all when `None`).
pub fn run_properties(filter: Option<&str>) -> Vec<PropertyResult> {
    PROPERTIES
        .iter()
        .filter(|(name, _)| filter.map(|f| name.contains(f)).unwrap_or(true))
        .map(|(name, f)| match f() {
            Ok(()) => PropertyResult {
                name,
                passed: true,
                detail: String::new(),
            },
            Err(detail) => PropertyResult {
                name,
                passed: false,
                detail,
            },
        })
        .collect()
}

pub fn property_names() -> Vec<&'static str> {
    PROPERTIES.iter().map(|(n, _)| *n).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_suite_is_green() {
        for r in run_properties(None) {
            assert!(r.passed, "{}: {}", r.name, r.detail);
        }
    }

    #[test]
    fn filter_selects_subset() {
        let results = run_properties(Some("tie"));
        assert_eq!(results.len(), 1);
        assert_eq!(results[0].name, "tie_mode_separation");
        assert!(run_properties(Some("no_such_property")).is_empty());
    }
}
