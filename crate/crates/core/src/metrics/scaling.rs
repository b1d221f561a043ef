//! Batches of independent runs and the tip-count scaling study.

use rayon::prelude::*;

use crate::arrival::SimConfig;
use crate::error::{config_err, Result};
use crate::metrics::fit::fit_line;
use crate::metrics::record::{run_recorded, summarize_tips, RecordOptions};
use crate::rng::run_seed;
use crate::selector::SelectorKind;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSummary {
    pub index: usize,
    pub seed: u64,
    pub mean_tips: f64,
    pub std_tips: f64,
    /// Approval-time moments: count, mean, sum of squared deviations.
    pub approvals: usize,
    pub mean_ta: f64,
    pub m2_ta: f64,
    pub orphans: usize,
}

impl RunSummary {
    pub fn std_ta(&self) -> f64 {
        if self.approvals > 1 {
            (self.m2_ta / (self.approvals - 1) as f64).sqrt()
        } else {
            0.0
        }
    }
}

/// Aggregate over a batch of runs at one configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchSummary {
    pub lambda: f64,
    pub selector: SelectorKind,
    pub runs: usize,
    /// Mean of the per-run time-weighted means.
    pub mean_tips: f64,
    /// Standard deviation of the pooled tip-count distribution.
    pub std_tips: f64,
    /// Pooled over every approval sample of every run.
    pub mean_ta: f64,
    pub std_ta: f64,
    pub orphans: usize,
}

/// Runs `runs` simulations with seeds derived from `config.seed`.
pub fn run_batch(config: &SimConfig, runs: usize, options: &RecordOptions) -> Result<(BatchSummary, Vec<RunSummary>)> {
    if runs == 0 {
        return Err(config_err("runs must be at least 1"));
    }
    config.validate()?;
    let per_run: Vec<RunSummary> = (0..runs)
        .into_par_iter()
        .map(|index| {
            let seed = run_seed(config.seed, index as u64);
            let cfg = SimConfig { seed, ..config.clone() };
            let (_, record) = run_recorded(&cfg, options)?;
            let tips = summarize_tips(&record)?;
            let n = record.approval_times.len();
            let mean_ta = if n > 0 { record.approval_times.iter().map(|a| a.t_a).sum::<f64>() / n as f64 } else { 0.0 };
            let m2_ta = record.approval_times.iter().map(|a| (a.t_a - mean_ta).powi(2)).sum();
            Ok(RunSummary {
                index,
                seed,
                mean_tips: tips.mean,
                std_tips: tips.std,
                approvals: n,
                mean_ta,
                m2_ta,
                orphans: record.orphan_count,
            })
        })
        .collect::<Result<_>>()?;
    Ok((aggregate(config, &per_run), per_run))
}

fn aggregate(config: &SimConfig, runs: &[RunSummary]) -> BatchSummary {
    let k = runs.len() as f64;
    let mean_tips = runs.iter().map(|r| r.mean_tips).sum::<f64>() / k;
    let pooled_var = runs.iter().map(|r| r.std_tips.powi(2) + (r.mean_tips - mean_tips).powi(2)).sum::<f64>() / k;

    // Chan et al. parallel merge of approval-time moments
    let (mut n, mut mean, mut m2) = (0usize, 0.0f64, 0.0f64);
    for r in runs.iter().filter(|r| r.approvals > 0) {
        let total = n + r.approvals;
        let delta = r.mean_ta - mean;
        mean += delta * r.approvals as f64 / total as f64;
        m2 += r.m2_ta + delta * delta * (n as f64) * (r.approvals as f64) / total as f64;
        n = total;
    }
    let std_ta = if n > 1 { (m2 / (n - 1) as f64).sqrt() } else { 0.0 };

    BatchSummary {
        lambda: config.lambda,
        selector: config.selector,
        runs: runs.len(),
        mean_tips,
        std_tips: pooled_var.sqrt(),
        mean_ta: mean,
        std_ta,
        orphans: runs.iter().map(|r| r.orphans).sum(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingStudy {
    pub rows: Vec<BatchSummary>,
    /// Log-log slope of mean tip count against lambda (needs two lambdas).
    pub mean_exponent: Option<f64>,
    /// Log-log slope of the tip-count standard deviation against lambda.
    pub std_exponent: Option<f64>,
}

/// Batch runs at every lambda in `lambdas`; every other setting comes from
/// `base`.
pub fn scaling_study(
    lambdas: &[f64],
    base: &SimConfig,
    runs_per_lambda: usize,
    options: &RecordOptions,
) -> Result<ScalingStudy> {
    if lambdas.is_empty() {
        return Err(config_err("no lambda values given"));
    }
    if let Some(bad) = lambdas.iter().find(|&&l| l.is_nan() || l < 1.0) {
        return Err(config_err(format!("scaling lambdas must be >= 1, got {bad}")));
    }
    let rows = lambdas
        .iter()
        .map(|&lambda| run_batch(&SimConfig { lambda, ..base.clone() }, runs_per_lambda, options).map(|b| b.0))
        .collect::<Result<Vec<_>>>()?;
    let xs: Vec<f64> = rows.iter().map(|r| r.lambda).collect();
    Ok(ScalingStudy {
        mean_exponent: loglog_slope(&xs, &rows.iter().map(|r| r.mean_tips).collect::<Vec<_>>()),
        std_exponent: loglog_slope(&xs, &rows.iter().map(|r| r.std_tips).collect::<Vec<_>>()),
        rows,
    })
}

/// Slope of `ln y` against `ln x`; `None` with fewer than two distinct x or
/// any non-positive value.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.iter().chain(ys).any(|&v| v <= 0.0) {
        return None;
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    fit_line(&lx, &ly).map(|f| f.slope)
}
