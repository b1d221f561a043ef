//! Wall-clock cost of growing a Tangle to a given size, and the log-log
//! exponent of that cost.

use std::hint::black_box;
use std::time::Instant;

use crate::arrival::{run_simulation, SimConfig};
use crate::error::{config_err, Result};
use crate::metrics::loglog_slope;
use crate::selector::SelectorKind;

pub const DEFAULT_BENCH_LAMBDA: f64 = 100.0;

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub selector: SelectorKind,
    /// Whether cumulative weights were maintained during the run.
    pub weights_updated: bool,
    pub n: usize,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    /// Log-log slope of seconds against n; `None` with fewer than two sizes.
    pub exponent: Option<f64>,
}

/// Seconds to issue `n` transactions at rate `lambda` with no observers.
pub fn time_run(selector: SelectorKind, lambda: f64, n: usize, seed: u64) -> Result<f64> {
    if n == 0 {
        return Err(config_err("transaction count must be at least 1"));
    }
    // long enough that the transaction cap, not the clock, ends the run
    let duration = 2.0 * n as f64 / lambda + 100.0;
    let config = SimConfig::new(lambda, selector)
        .with_duration(duration)
        .with_warmup(0.0)
        .with_seed(seed)
        .with_max_transactions(n);
    config.validate()?;
    let start = Instant::now();
    let out = run_simulation(&config, &mut [])?;
    let seconds = start.elapsed().as_secs_f64();
    black_box(out.state.tip_count());
    Ok(seconds)
}

/// Times one run per entry of `tx_counts`, keeping the fastest of `reps`
/// repetitions, serially on the calling thread.
pub fn bench(selector: SelectorKind, lambda: f64, tx_counts: &[usize], reps: usize, seed: u64) -> Result<BenchReport> {
    if tx_counts.is_empty() {
        return Err(config_err("no transaction counts given"));
    }
    if reps == 0 {
        return Err(config_err("reps must be at least 1"));
    }
    selector.validate()?;
    let mut rows = Vec::with_capacity(tx_counts.len());
    for &n in tx_counts {
        let mut best = f64::INFINITY;
        for _ in 0..reps {
            best = best.min(time_run(selector, lambda, n, seed)?);
        }
        rows.push(BenchRow { selector, weights_updated: selector.needs_weights(), n, seconds: best });
    }
    let ns: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
    let secs: Vec<f64> = rows.iter().map(|r| r.seconds).collect();
    Ok(BenchReport { exponent: loglog_slope(&ns, &secs), rows })
}
