//! Cluster-trace ingestion: parses batch task records (headerless CSV,
//! v2018 column order), normalizes CPU/memory requests, builds
//! regime-dependent rewards, and wraps the result as a replayable
//! scenario whose arrival order is fixed and only the reward noise and
//! policy randomness vary across seeds.

use std::path::Path;
use std::sync::Arc;

use rand::Rng;
use rand::RngCore;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::model::{ArrivalSource, RewardResourcePair, ScenarioSpec};

/// One valid trace row after normalization (plan_cpu/100, plan_mem/100).
#[derive(Debug, Clone, PartialEq)]
pub struct TraceArrival {
    pub cpu: f64,
    pub mem: f64,
    /// Temporal position after the stable start_time sort.
    pub order_index: usize,
}

/// Reward coefficients (c1, c2) per regime: CPU-heavy, memory-heavy,
/// balanced.
#[derive(Debug, Clone, PartialEq)]
pub struct RegimeTable {
    pub coeffs: [(f64, f64); 3],
}

impl Default for RegimeTable {
    fn default() -> Self {
        Self {
            coeffs: [(2.0, 0.5), (0.5, 2.0), (1.2, 1.2)],
        }
    }
}

impl RegimeTable {
    pub fn num_regimes(&self) -> usize {
        self.coeffs.len()
    }

    pub fn get(&self, theta: usize) -> Result<(f64, f64)> {
        self.coeffs
            .get(theta)
            .copied()
            .ok_or_else(|| Error::Trace(format!("unknown regime {theta}")))
    }
}

/// Column positions in the v2018 batch_task layout:
/// task_name, instance_num, job_name, task_type, status, start_time,
/// end_time, plan_cpu, plan_mem.
const COL_START_TIME: usize = 5;
const COL_PLAN_CPU: usize = 7;
const COL_PLAN_MEM: usize = 8;

/// Parses the trace, drops rows with missing or nonpositive plan_cpu /
/// plan_mem (or an unparseable start_time), stable-sorts by start_time,
/// and keeps the first `t_cap` valid rows. Returns the arrivals and the
/// number of dropped rows.
pub fn parse_trace(path: &Path, t_cap: usize) -> Result<(Vec<TraceArrival>, usize)> {
    let file = std::fs::File::open(path)
        .map_err(|e| Error::Trace(format!("{}: {e}", path.display())))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(file);

    let mut rows: Vec<(i64, f64, f64)> = Vec::new();
    let mut dropped = 0usize;
    for record in reader.records() {
        let record = record.map_err(|e| Error::Trace(format!("csv error: {e}")))?;
        let parsed = (|| {
            let start: i64 = record.get(COL_START_TIME)?.trim().parse().ok()?;
            let cpu: f64 = record.get(COL_PLAN_CPU)?.trim().parse().ok()?;
            let mem: f64 = record.get(COL_PLAN_MEM)?.trim().parse().ok()?;
            (cpu > 0.0 && mem > 0.0).then_some((start, cpu, mem))
        })();
        match parsed {
            Some(row) => rows.push(row),
            None => dropped += 1,
        }
    }
    rows.sort_by_key(|(start, _, _)| *start);
    if rows.len() < t_cap {
        return Err(Error::Trace(format!(
            "trace has {} valid rows, need {t_cap} (short by {})",
            rows.len(),
            t_cap - rows.len()
        )));
    }
    let arrivals = rows
        .into_iter()
        .take(t_cap)
        .enumerate()
        .map(|(order_index, (_, cpu, mem))| TraceArrival {
            cpu: cpu / 100.0,
            mem: mem / 100.0,
            order_index,
        })
        .collect();
    Ok((arrivals, dropped))
}

/// Regime reward max(0, c1*cpu + c2*mem + eps) with eps ~ N(0, sigma^2);
/// the clip keeps rewards nonnegative for near-zero tasks.
pub fn construct_reward(
    arrival: &TraceArrival,
    theta: usize,
    regimes: &RegimeTable,
    sigma: f64,
    rng: &mut dyn RngCore,
) -> Result<f64> {
    if sigma < 0.0 {
        return Err(Error::Precondition("sigma must be >= 0".into()));
    }
    let (c1, c2) = regimes.get(theta)?;
    let mut r = c1 * arrival.cpu + c2 * arrival.mem;
    if sigma > 0.0 {
        let noise = Normal::new(0.0, sigma).expect("sigma > 0");
        r += noise.sample(rng);
    }
    Ok(r.max(0.0))
}

struct TraceSource {
    arrivals: Vec<TraceArrival>,
    regimes: RegimeTable,
    sigma: f64,
}

impl TraceSource {
    fn pair(&self, arrival: &TraceArrival, config: usize, rng: &mut dyn RngCore) -> RewardResourcePair {
        let r = construct_reward(arrival, config, &self.regimes, self.sigma, rng)
            .expect("regime index validated at construction");
        RewardResourcePair::new(r, vec![arrival.cpu, arrival.mem])
    }
}

impl ArrivalSource for TraceSource {
    /// Stationary surrogate for the oracles: uniform resampling with
    /// replacement from the trace window.
    fn sample(&self, config: usize, rng: &mut dyn RngCore) -> RewardResourcePair {
        let idx = rng.gen_range(0..self.arrivals.len());
        self.pair(&self.arrivals[idx], config, rng)
    }

    /// In-run arrivals replay the trace in temporal order; the (cpu, mem)
    /// stream is identical across regimes, only rewards differ.
    fn arrival(&self, round: usize, config: usize, rng: &mut dyn RngCore) -> RewardResourcePair {
        self.pair(&self.arrivals[round], config, rng)
    }

    fn horizon_cap(&self) -> Option<usize> {
        Some(self.arrivals.len())
    }
}

/// Packages trace arrivals as a scenario: K regimes over d=2 resources,
/// per-period budget rho * 0.5 * a_bar with a_bar the mean [cpu, mem].
/// Returns the scenario and the total budget over the window.
pub fn trace_scenario(
    arrivals: Vec<TraceArrival>,
    regimes: RegimeTable,
    sigma: f64,
    rho: f64,
) -> Result<(ScenarioSpec, Vec<f64>)> {
    if arrivals.is_empty() {
        return Err(Error::Trace("empty arrival sequence".into()));
    }
    let t = arrivals.len() as f64;
    let mean_cpu = arrivals.iter().map(|a| a.cpu).sum::<f64>() / t;
    let mean_mem = arrivals.iter().map(|a| a.mem).sum::<f64>() / t;
    let max_cpu = arrivals.iter().map(|a| a.cpu).fold(0.0f64, f64::max);
    let max_mem = arrivals.iter().map(|a| a.mem).fold(0.0f64, f64::max);
    let max_coeff = regimes
        .coeffs
        .iter()
        .map(|(c1, c2)| c1.max(*c2))
        .fold(0.0f64, f64::max);
    let per_period = vec![rho * 0.5 * mean_cpu, rho * 0.5 * mean_mem];
    let total = per_period.iter().map(|b| b * t).collect();
    let spec = ScenarioSpec {
        name: "trace".into(),
        num_configs: regimes.num_regimes(),
        dim: 2,
        r_max: max_coeff * max_cpu + max_coeff * max_mem + 6.0 * sigma,
        a_max: max_cpu.max(max_mem),
        base_budget: per_period,
        source: Arc::new(TraceSource {
            arrivals,
            regimes,
            sigma,
        }),
    };
    Ok((spec, total))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::io::Write;

    fn write_trace(rows: &[&str]) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        for row in rows {
            writeln!(f, "{row}").unwrap();
        }
        f
    }

    #[test]
    fn parse_normalizes_and_sorts() {
        let f = write_trace(&[
            "t2,1,j1,1,Terminated,30,40,100,50",
            "t1,1,j1,1,Terminated,10,20,200,25",
            "t3,1,j1,1,Terminated,20,25,50,75",
        ]);
        let (arrivals, dropped) = parse_trace(f.path(), 3).unwrap();
        assert_eq!(dropped, 0);
        assert_eq!(arrivals[0], TraceArrival { cpu: 2.0, mem: 0.25, order_index: 0 });
        assert_eq!(arrivals[1].cpu, 0.5);
        assert_eq!(arrivals[2], TraceArrival { cpu: 1.0, mem: 0.5, order_index: 2 });
    }

    #[test]
    fn parse_drops_invalid_rows() {
        let f = write_trace(&[
            "t1,1,j1,1,Terminated,10,20,100,",
            "t2,1,j1,1,Terminated,11,20,0,50",
            "t3,1,j1,1,Terminated,12,20,,50",
            "t4,1,j1,1,Terminated,13,20,100,50",
        ]);
        let (arrivals, dropped) = parse_trace(f.path(), 1).unwrap();
        assert_eq!(dropped, 3);
        assert_eq!(arrivals.len(), 1);
        assert_eq!(arrivals[0].cpu, 1.0);
    }

    #[test]
    fn parse_reports_shortfall() {
        let f = write_trace(&["t1,1,j1,1,Terminated,10,20,100,50"]);
        let err = parse_trace(f.path(), 5).unwrap_err().to_string();
        assert!(err.contains("need 5"), "{err}");
    }

    #[test]
    fn parse_missing_file_errors() {
        assert!(parse_trace(Path::new("/nonexistent/batch_task.csv"), 1).is_err());
    }

    #[test]
    fn parse_is_idempotent() {
        let f = write_trace(&[
            "t1,1,j1,1,Terminated,10,20,100,50",
            "t2,1,j1,1,Terminated,5,20,30,60",
        ]);
        let a = parse_trace(f.path(), 2).unwrap();
        let b = parse_trace(f.path(), 2).unwrap();
        assert_eq!(a.0, b.0);
        assert_eq!(a.1, b.1);
    }

    #[test]
    fn reward_zero_noise_values() {
        let regimes = RegimeTable::default();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = TraceArrival { cpu: 1.0, mem: 0.5, order_index: 0 };
        assert_eq!(construct_reward(&a, 0, &regimes, 0.0, &mut rng).unwrap(), 2.25);
        let b = TraceArrival { cpu: 0.0, mem: 1.0, order_index: 0 };
        assert_eq!(construct_reward(&b, 1, &regimes, 0.0, &mut rng).unwrap(), 2.0);
        assert!(construct_reward(&a, 3, &regimes, 0.0, &mut rng).is_err());
    }

    #[test]
    fn reward_noise_mean_matches() {
        let regimes = RegimeTable::default();
        let a = TraceArrival { cpu: 0.8, mem: 0.6, order_index: 0 };
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 10_000;
        let mean: f64 = (0..n)
            .map(|_| construct_reward(&a, 2, &regimes, 0.1, &mut rng).unwrap())
            .sum::<f64>()
            / n as f64;
        assert!((mean - 1.2 * (0.8 + 0.6)).abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn regime_table_is_pinned() {
        assert_eq!(
            RegimeTable::default().coeffs,
            [(2.0, 0.5), (0.5, 2.0), (1.2, 1.2)]
        );
    }

    #[test]
    fn scenario_budget_rule() {
        let arrivals = vec![
            TraceArrival { cpu: 1.0, mem: 0.2, order_index: 0 },
            TraceArrival { cpu: 0.6, mem: 0.6, order_index: 1 },
        ];
        let (spec, total) =
            trace_scenario(arrivals, RegimeTable::default(), 0.1, 1.0).unwrap();
        // a_bar = [0.8, 0.4]; per-period budget = 0.5 * a_bar.
        assert!((spec.base_budget[0] - 0.4).abs() < 1e-12);
        assert!((spec.base_budget[1] - 0.2).abs() < 1e-12);
        assert!((total[0] - 0.8).abs() < 1e-12);
        assert_eq!(spec.num_configs, 3);
        assert_eq!(spec.dim, 2);
        assert!((spec.r_max - (2.0 * 1.0 + 2.0 * 0.6 + 0.6)).abs() < 1e-12);
    }

    #[test]
    fn arrival_stream_identical_across_regimes() {
        let arrivals = vec![
            TraceArrival { cpu: 1.0, mem: 0.2, order_index: 0 },
            TraceArrival { cpu: 0.6, mem: 0.6, order_index: 1 },
        ];
        let (spec, _) = trace_scenario(arrivals, RegimeTable::default(), 0.1, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for round in 0..2 {
            let mut seen: Option<Vec<f64>> = None;
            for theta in 0..3 {
                let p = spec.source.arrival(round, theta, &mut rng);
                assert!(p.reward >= 0.0);
                match &seen {
                    None => seen = Some(p.consumption),
                    Some(c) => assert_eq!(c, &p.consumption),
                }
            }
        }
        assert_eq!(spec.source.horizon_cap(), Some(2));
    }

    #[test]
    fn bundled_fixture_parses() {
        let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/batch_task_fixture.csv");
        let (arrivals, dropped) = parse_trace(&path, 190).unwrap();
        assert_eq!(arrivals.len(), 190);
        assert!(dropped >= 1, "fixture carries invalid rows on purpose");
        assert!(arrivals.windows(2).all(|w| w[0].order_index + 1 == w[1].order_index));
        let (spec, _) = trace_scenario(arrivals, RegimeTable::default(), 0.1, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let rec = crate::policy::run_spucb(
            &spec,
            150,
            1.0,
            &crate::policy::PolicyParams::new(0.01),
            &mut rng,
        )
        .unwrap();
        rec.verify_feasible().unwrap();
        assert!(rec.total_reward > 0.0);
    }
}
