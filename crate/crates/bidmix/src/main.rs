//! Command-line front end: simulate / oracle / validate / trace-simulate.
//! Exit codes: 0 success, 1 usage error, 2 runtime failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use bidmix::harness::{
    cmd_oracle, parse_seed_range, run_experiment, ExperimentConfig, PolicyKind,
};
use bidmix::model::ScenarioSpec;
use bidmix::trace::{parse_trace, trace_scenario, RegimeTable};
use bidmix::{scenarios, validate};

#[derive(Parser)]
#[command(name = "bidmix", version, about = "Budgeted configuration-selection simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct OracleArgs {
    /// Monte Carlo samples per configuration for the mixed oracle.
    #[arg(long, default_value_t = 10_000)]
    mc_samples: usize,
    /// Sample paths per configuration for the fixed-configuration oracle.
    #[arg(long, default_value_t = 200)]
    mc_paths: usize,
    /// Bypass the oracle value cache.
    #[arg(long)]
    no_cache: bool,
    #[arg(long, default_value = ".bidmix-cache")]
    cache_dir: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long = "T")]
    t: usize,
    #[arg(long, default_value_t = 1.0)]
    rho: f64,
    #[arg(long, default_value_t = 1.5)]
    alpha: f64,
    /// Inclusive seed range `a..b` (or a single seed).
    #[arg(long, default_value = "0..9")]
    seeds: String,
    /// Output CSV path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker count; 0 uses all cores.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// Skip the per-round trajectory log (lower memory on long sweeps).
    #[arg(long)]
    no_trajectory_log: bool,
    /// Also estimate v_fixed and fill the cr_star column (expensive).
    #[arg(long)]
    cr_star: bool,
    /// Re-solve the saddle every round instead of on the doubling schedule.
    #[arg(long)]
    resolve_every_round: bool,
    #[command(flatten)]
    oracle: OracleArgs,
}

#[derive(Subcommand)]
enum Command {
    /// Multi-seed policy sweep on a synthetic or file-defined scenario.
    Simulate {
        /// Built-in name (s0, s4, example1) or path to a scenario file.
        #[arg(long)]
        scenario: String,
        /// spucb | greedy | random | oracle | onehot | all
        #[arg(long, default_value = "spucb")]
        policy: String,
        #[command(flatten)]
        sweep: SweepArgs,
    },
    /// Report v_mix, T*v_mix, v_fixed and their gap for a scenario.
    Oracle {
        #[arg(long)]
        scenario: String,
        #[arg(long, default_value_t = 1.0)]
        rho: f64,
        #[arg(long = "T")]
        t: usize,
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        #[command(flatten)]
        oracle: OracleArgs,
    },
    /// Run the named property suites and report pass/fail per property.
    Validate {
        /// Substring filter on property names.
        #[arg(long)]
        filter: Option<String>,
    },
    /// Multi-seed sweep replaying a cluster trace.
    TraceSimulate {
        /// Path to batch_task.csv (defaults to $TRACE_PATH).
        #[arg(long, env = "TRACE_PATH")]
        trace: PathBuf,
        /// Reward noise standard deviation.
        #[arg(long, default_value_t = 0.1)]
        sigma: f64,
        #[arg(long, default_value = "spucb")]
        policy: String,
        #[command(flatten)]
        sweep: SweepArgs,
    },
}

fn parse_policies(s: &str) -> Result<Vec<PolicyKind>, bidmix::Error> {
    if s == "all" {
        Ok(PolicyKind::ALL.to_vec())
    } else {
        s.split(',').map(|p| p.trim().parse()).collect()
    }
}

struct Usage(String);

fn build_config(
    scenario: ScenarioSpec,
    label: &str,
    policy: &str,
    sweep: &SweepArgs,
) -> Result<ExperimentConfig, Usage> {
    let mut config = ExperimentConfig::new(scenario, label, sweep.t, sweep.rho);
    config.policies = parse_policies(policy).map_err(|e| Usage(e.to_string()))?;
    config.alpha = sweep.alpha;
    config.seeds = parse_seed_range(&sweep.seeds).map_err(|e| Usage(e.to_string()))?;
    config.mc_samples = sweep.oracle.mc_samples;
    config.mc_paths = sweep.oracle.mc_paths;
    config.want_cr_star = sweep.cr_star;
    config.out = sweep.out.clone();
    config.jobs = sweep.jobs;
    config.use_cache = !sweep.oracle.no_cache;
    config.cache_dir = sweep.oracle.cache_dir.clone();
    config.log_trajectory = !sweep.no_trajectory_log;
    if sweep.resolve_every_round {
        config.resolve_schedule = bidmix::policy::ResolveSchedule::EveryRound;
    }
    Ok(config)
}

fn print_sweep(config: &ExperimentConfig) -> Result<(), bidmix::Error> {
    let result = run_experiment(config)?;
    println!(
        "v_mix_per_period={} T_v_mix={}",
        result.v_mix,
        config.horizon as f64 * result.v_mix
    );
    if let Some(vf) = result.v_fixed {
        println!("v_fixed_total={vf}");
    }
    for s in &result.summaries {
        println!(
            "policy={} n={} regret={:.4}+-{:.4} regret/sqrt(T)={:.4}+-{:.4} cr_mix={:.4}+-{:.4}{}",
            s.policy.as_str(),
            s.n,
            s.regret_mean,
            s.regret_std,
            s.regret_per_sqrt_t_mean,
            s.regret_per_sqrt_t_std,
            s.cr_mix_mean,
            s.cr_mix_std,
            match (s.cr_star_mean, s.cr_star_std) {
                (Some(m), Some(sd)) => format!(" cr_star={m:.4}+-{sd:.4}"),
                _ => String::new(),
            }
        );
    }
    if let Some(path) = &config.out {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode, ExitCode> {
    let usage = |msg: String| {
        eprintln!("error: {msg}");
        ExitCode::from(1)
    };
    let runtime = |e: bidmix::Error| {
        eprintln!("error: {e}");
        ExitCode::from(2)
    };

    match cli.command {
        Command::Simulate {
            scenario,
            policy,
            sweep,
        } => {
            let spec = scenarios::load(&scenario, 1.0).map_err(|e| usage(e.to_string()))?;
            let config =
                build_config(spec, &scenario, &policy, &sweep).map_err(|u| usage(u.0))?;
            print_sweep(&config).map_err(runtime)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Oracle {
            scenario,
            rho,
            t,
            jobs,
            oracle,
        } => {
            let spec = scenarios::load(&scenario, 1.0).map_err(|e| usage(e.to_string()))?;
            let mut config = ExperimentConfig::new(spec, &scenario, t, rho);
            config.mc_samples = oracle.mc_samples;
            config.mc_paths = oracle.mc_paths;
            config.use_cache = !oracle.no_cache;
            config.cache_dir = oracle.cache_dir;
            config.jobs = jobs;
            let report = cmd_oracle(&config).map_err(runtime)?;
            println!("scenario={scenario} rho={rho} T={t}");
            println!("v_mix_per_period={}", report.v_mix);
            println!("T_v_mix={}", report.t_v_mix);
            println!("v_fixed_total={}", report.v_fixed);
            println!("gap={}", report.gap);
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate { filter } => {
            let results = validate::run_properties(filter.as_deref());
            if results.is_empty() {
                println!("0 properties run (filter matched nothing)");
                return Ok(ExitCode::SUCCESS);
            }
            let mut failed = 0;
            for r in &results {
                if r.passed {
                    println!("PASS {}", r.name);
                } else {
                    failed += 1;
                    println!("FAIL {}: {}", r.name, r.detail);
                }
            }
            println!("{}/{} properties passed", results.len() - failed, results.len());
            if failed > 0 {
                return Ok(ExitCode::from(2));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::TraceSimulate {
            trace,
            sigma,
            policy,
            sweep,
        } => {
            let (arrivals, dropped) =
                parse_trace(&trace, sweep.t).map_err(|e| usage(e.to_string()))?;
            if dropped > 0 {
                eprintln!("warning: dropped {dropped} invalid trace rows");
            }
            let (spec, total) =
                trace_scenario(arrivals, RegimeTable::default(), sigma, 1.0)
                    .map_err(runtime)?;
            println!(
                "trace window T={} total_budget=[{}]",
                sweep.t,
                total
                    .iter()
                    .map(|v| format!("{:.3}", v * sweep.rho))
                    .collect::<Vec<_>>()
                    .join(", ")
            );
            let label = format!("trace:{}", trace.display());
            let config =
                build_config(spec, &label, &policy, &sweep).map_err(|u| usage(u.0))?;
            print_sweep(&config).map_err(runtime)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(code) => code,
    }
}
