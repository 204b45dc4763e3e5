//! Full-scale acceptance gate. Runs without the libtest harness so that
//! exactly one PASS/FAIL line prints per criterion; exits nonzero when
//! any criterion fails. Criterion 7 needs a real cluster trace and is
//! skipped with a notice unless `TRACE_PATH` is set.

use bidmix::harness::{run_experiment, ExperimentConfig, PolicyKind};
use bidmix::model::{RewardResourcePair, SampleStore};
use bidmix::reference::{random_bounded_lp, vertex_enumeration_optimum};
use bidmix::saddle::{brute_force_saddle, kkt_check, solve_saddle, KktTolerances};
use bidmix::scenarios;
use bidmix::trace::{parse_trace, trace_scenario, RegimeTable};
use bidmix::{lp, validate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

use Outcome::{Fail, Pass, Skip};

fn base_config(scenario: &str, horizon: usize, rho: f64) -> ExperimentConfig {
    let spec = scenarios::load(scenario, 1.0).expect("builtin scenario");
    let mut config = ExperimentConfig::new(spec, scenario, horizon, rho);
    config.use_cache = false;
    config.log_trajectory = false;
    config
}

/// Example-1 oracle gap: T.v_mix = 100 +- 2 and v_fixed = 74.75 +- 0.7
/// (the closed forms are 1 per period and 7550/101 in total at T=100).
fn oracle_gap() -> Outcome {
    let mut config = base_config("example1", 100, 1.0);
    config.mc_samples = 10_000;
    config.mc_paths = 500;
    config.want_cr_star = true;
    let report = match bidmix::harness::cmd_oracle(&config) {
        Ok(r) => r,
        Err(e) => return Fail(format!("oracle estimation failed: {e}")),
    };
    let detail = format!(
        "T.v_mix={:.3} (want 100+-2), v_fixed={:.3} (want 74.75+-0.7)",
        report.t_v_mix, report.v_fixed
    );
    if (report.t_v_mix - 100.0).abs() <= 2.0 && (report.v_fixed - 74.75).abs() <= 0.7 {
        Pass(detail)
    } else {
        Fail(detail)
    }
}

/// Complementarity benchmark on s4 (rho=0.7, T=5000, 10 seeds): Random
/// nearly matches the mixing benchmark and doubles the fixed one, Greedy
/// and the saddle policy sit below it, the single-configuration policy
/// cannot exploit complementarity, and nobody beats T.v_mix.
fn complementarity_table() -> Outcome {
    let mut config = base_config("s4", 5000, 0.7);
    config.policies = PolicyKind::ALL.to_vec();
    config.alpha = 0.1;
    config.seeds = (0, 9);
    config.want_cr_star = true;
    let result = match run_experiment(&config) {
        Ok(r) => r,
        Err(e) => return Fail(format!("experiment failed: {e}")),
    };
    let mut details = Vec::new();
    let mut ok = true;
    for s in &result.summaries {
        let se = s.cr_mix_std / (s.n as f64).sqrt();
        if s.cr_mix_mean > 1.0 + 3.0 * se {
            ok = false;
            details.push(format!("{} cr_mix={:.4}>1+3SE", s.policy.as_str(), s.cr_mix_mean));
            continue;
        }
        let window = match s.policy {
            PolicyKind::Random => {
                let star = s.cr_star_mean.unwrap_or(f64::NAN);
                (0.97..=1.00).contains(&s.cr_mix_mean) && (1.92..=2.00).contains(&star)
            }
            PolicyKind::Greedy => (0.92..=0.99).contains(&s.cr_mix_mean),
            PolicyKind::Spucb => (0.85..=0.96).contains(&s.cr_mix_mean),
            PolicyKind::OneHot => {
                (0.95..=1.08).contains(&s.cr_star_mean.unwrap_or(f64::NAN))
            }
            PolicyKind::Oracle => true,
        };
        ok &= window;
        details.push(format!(
            "{} cr_mix={:.4} cr_star={}{}",
            s.policy.as_str(),
            s.cr_mix_mean,
            s.cr_star_mean.map_or("-".into(), |v| format!("{v:.4}")),
            if window { "" } else { " OUT-OF-WINDOW" }
        ));
    }
    let detail = details.join("; ");
    if ok {
        Pass(detail)
    } else {
        Fail(detail)
    }
}

/// Regret scaling on s0 (alpha=1.5, rho=0.7, 50 seeds): mean regret/sqrt(T)
/// within [1.0, 2.3] at T in {100, 500, 2000}, and the T=2000 / T=100
/// ratio within [0.6, 1.6].
fn regret_scaling() -> Outcome {
    let mut per_t = Vec::new();
    for horizon in [100usize, 500, 2000] {
        let mut config = base_config("s0", horizon, 0.7);
        config.alpha = 1.5;
        config.seeds = (0, 49);
        let result = match run_experiment(&config) {
            Ok(r) => r,
            Err(e) => return Fail(format!("T={horizon} failed: {e}")),
        };
        per_t.push(result.summaries[0].regret_per_sqrt_t_mean);
    }
    let ratio = per_t[2] / per_t[0];
    let level_ok = per_t.iter().all(|v| (1.0..=2.3).contains(v));
    let ratio_ok = (0.6..=1.6).contains(&ratio);
    let detail = format!(
        "regret/sqrt(T)=[{:.3}, {:.3}, {:.3}] at T=[100,500,2000] (want each in [1.0,2.3]), ratio={:.3} (want [0.6,1.6])",
        per_t[0], per_t[1], per_t[2], ratio
    );
    if level_ok && ratio_ok {
        Pass(detail)
    } else {
        Fail(detail)
    }
}

/// Saddle LP vs. dense grid search plus certificate checks on 200 random
/// small instances.
fn saddle_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4242);
    let grid_step = 0.005;
    for case in 0..200 {
        let k = rng.gen_range(1..=3);
        let d = rng.gen_range(1..=2);
        let mut stores = SampleStore::new(k);
        for theta in 0..k {
            for _ in 0..rng.gen_range(1..=6) {
                let r = rng.gen_range(0.05..1.5);
                let a = (0..d).map(|_| rng.gen_range(0.05..1.5)).collect();
                stores.push(theta, RewardResourcePair::new(r, a));
            }
        }
        let bonuses: Vec<f64> = (0..k).map(|_| rng.gen_range(0.0..0.5)).collect();
        let budget: Vec<f64> = (0..d).map(|_| rng.gen_range(0.4..1.5)).collect();

        let sol = match solve_saddle(&stores, &bonuses, &budget) {
            Ok(s) => s,
            Err(e) => return Fail(format!("case {case}: solve failed: {e}")),
        };
        let grid = match brute_force_saddle(&stores, &bonuses, &budget, grid_step) {
            Ok(v) => v,
            Err(e) => return Fail(format!("case {case}: grid failed: {e}")),
        };
        if (sol.value - grid).abs() > 0.02 {
            return Fail(format!(
                "case {case}: lp value {:.5} vs grid {grid:.5}",
                sol.value
            ));
        }
        let tol = KktTolerances::standard(1.5, &budget);
        match kkt_check(&sol.mixture, &sol.price, &stores, &bonuses, &budget, &tol) {
            Ok(rep) if rep.all_ok() => {}
            Ok(rep) => {
                return Fail(format!(
                    "case {case}: certificate failed (support={} feasible={} complementary={})",
                    rep.support_ok, rep.feasible_ok, rep.complementary_ok
                ))
            }
            Err(e) => return Fail(format!("case {case}: certificate error: {e}")),
        }
    }
    Pass("200 instances within 0.02 of grid search, all certificates hold".into())
}

/// Simplex vs. exhaustive vertex enumeration on 500 random bounded LPs.
fn lp_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(777);
    for case in 0..500 {
        let program = random_bounded_lp(&mut rng, 5, 8);
        let sol = match lp::solve(&program).and_then(|s| s.optimal()) {
            Ok(s) => s,
            Err(e) => return Fail(format!("case {case}: solve failed: {e}")),
        };
        let oracle = match vertex_enumeration_optimum(&program) {
            Some(v) => v,
            None => return Fail(format!("case {case}: oracle found no feasible vertex")),
        };
        if (sol.objective - oracle).abs() > 1e-6 * (1.0 + oracle.abs()) {
            return Fail(format!(
                "case {case}: objective {:.9} vs oracle {oracle:.9}",
                sol.objective
            ));
        }
        if let Err(e) = sol.verify(&program) {
            return Fail(format!("case {case}: duality check failed: {e}"));
        }
    }
    Pass("500 LPs match vertex enumeration within 1e-6; duality holds on all".into())
}

/// The full invariant property suite.
fn invariant_suite() -> Outcome {
    let results = validate::run_properties(None);
    let failed: Vec<String> = results
        .iter()
        .filter(|r| !r.passed)
        .map(|r| format!("{}: {}", r.name, r.detail))
        .collect();
    if failed.is_empty() {
        Pass(format!("{} properties green", results.len()))
    } else {
        Fail(failed.join("; "))
    }
}

/// Cluster-trace reproduction (needs TRACE_PATH): the saddle policy at
/// alpha=0.01 keeps cr_mix >= 0.94 over 10 seeds while Random sits in
/// [0.55, 0.67].
fn trace_reproduction() -> Outcome {
    let path = match std::env::var_os("TRACE_PATH") {
        Some(p) => std::path::PathBuf::from(p),
        None => return Skip("set TRACE_PATH to a batch_task.csv to enable".into()),
    };
    let horizon = 5000;
    let (arrivals, _dropped) = match parse_trace(&path, horizon) {
        Ok(v) => v,
        Err(e) => return Fail(format!("trace parse failed: {e}")),
    };
    let (spec, _total) = match trace_scenario(arrivals, RegimeTable::default(), 0.1, 1.0) {
        Ok(v) => v,
        Err(e) => return Fail(format!("trace scenario failed: {e}")),
    };
    let mut config = ExperimentConfig::new(spec, "trace-acceptance", horizon, 1.0);
    config.use_cache = false;
    config.log_trajectory = false;
    config.alpha = 0.01;
    config.seeds = (0, 9);
    config.policies = vec![PolicyKind::Spucb, PolicyKind::Random];
    let result = match run_experiment(&config) {
        Ok(r) => r,
        Err(e) => return Fail(format!("experiment failed: {e}")),
    };
    let mut spucb = f64::NAN;
    let mut random = f64::NAN;
    for s in &result.summaries {
        match s.policy {
            PolicyKind::Spucb => spucb = s.cr_mix_mean,
            PolicyKind::Random => random = s.cr_mix_mean,
            _ => {}
        }
    }
    let detail =
        format!("spucb cr_mix={spucb:.4} (want >=0.94), random cr_mix={random:.4} (want [0.55,0.67])");
    if spucb >= 0.94 && (0.55..=0.67).contains(&random) {
        Pass(detail)
    } else {
        Fail(detail)
    }
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 7] = [
        ("1 example1 oracle gap", oracle_gap),
        ("2 s4 complementarity table", complementarity_table),
        ("3 s0 regret scaling", regret_scaling),
        ("4 saddle vs grid oracle", saddle_oracle),
        ("5 simplex vs vertex oracle", lp_oracle),
        ("6 invariant suite", invariant_suite),
        ("7 trace reproduction", trace_reproduction),
    ];
    let mut failures = 0;
    for (name, run) in criteria {
        match run() {
            Pass(d) => println!("acceptance {name}: PASS — {d}"),
            Fail(d) => {
                failures += 1;
                println!("acceptance {name}: FAIL — {d}");
            }
            Skip(d) => println!("acceptance {name}: SKIPPED — {d}"),
        }
    }
    if failures > 0 {
        eprintln!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
}
