use std::collections::BTreeMap;

use crate::arrival::{run_simulation, Observer, SimConfig};
use crate::error::{Error, Result};
use crate::metrics::fit::fit_line;
use crate::tangle::{TangleState, TxId, REVEAL_DELAY};

pub const DEFAULT_ORPHAN_HORIZON: f64 = 20.0;
/// Bit-mask tracking caps the number of simultaneously tracked transactions.
pub const MAX_TRACKED: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct RecordOptions {
    /// A transaction still unapproved this long after issuance is an orphan.
    pub orphan_horizon: f64,
    /// Number of transactions, the first revealed ones issued at or after the
    /// warm-up, whose cumulative weight is tracked over time.
    pub tracked: usize,
}

impl Default for RecordOptions {
    fn default() -> Self {
        RecordOptions { orphan_horizon: DEFAULT_ORPHAN_HORIZON, tracked: 1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApprovalSample {
    pub tx: TxId,
    pub issue_time: f64,
    /// Time from this transaction's reveal until its first approval is
    /// revealed; equivalently, from its issuance until the first approver
    /// was issued. Includes one reveal delay, so it is never below 1.
    pub t_a: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightTrajectory {
    pub tx: TxId,
    pub issue_time: f64,
    /// (time since issuance, cumulative weight), one point per change.
    pub points: Vec<(f64, u64)>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricsRecord {
    /// (time, tip count) after every reveal inside the recording window.
    pub tip_series: Vec<(f64, usize)>,
    pub window_start: f64,
    pub end_time: f64,
    pub approval_times: Vec<ApprovalSample>,
    pub cw_trajectories: Vec<WeightTrajectory>,
    pub orphan_count: usize,
    /// Set when the run hit its transaction cap.
    pub truncated: bool,
}

impl MetricsRecord {
    /// Holding time of each tip-series sample: until the next sample, the
    /// last one until the end of the run.
    fn holding_times(&self) -> Vec<f64> {
        let s = &self.tip_series;
        (0..s.len())
            .map(|i| {
                let next = s.get(i + 1).map_or(self.end_time, |n| n.0);
                (next - s[i].0).max(0.0)
            })
            .collect()
    }

    /// Time-weighted empirical distribution of the tip count.
    pub fn tip_histogram(&self) -> Vec<(usize, f64)> {
        let mut hold = self.holding_times();
        let mut total: f64 = hold.iter().sum();
        if total <= 0.0 {
            hold.iter_mut().for_each(|h| *h = 1.0);
            total = hold.len() as f64;
        }
        let mut hist: BTreeMap<usize, f64> = BTreeMap::new();
        for (&(_, l), h) in self.tip_series.iter().zip(hold) {
            *hist.entry(l).or_default() += h / total;
        }
        hist.into_iter().collect()
    }
}

/// Standard recorder: tip series, approval times, orphans and weight
/// trajectories.
#[derive(Debug)]
pub struct MetricsRecorder {
    options: RecordOptions,
    record: MetricsRecord,
    // bit j set on y when y indirectly approves the j-th tracked transaction
    masks: Vec<u64>,
    tracked_weight: Vec<u64>,
}

impl MetricsRecorder {
    pub fn new(options: RecordOptions) -> Self {
        let tracked = options.tracked.min(MAX_TRACKED);
        MetricsRecorder {
            options: RecordOptions { tracked, ..options },
            record: MetricsRecord::default(),
            masks: Vec::new(),
            tracked_weight: Vec::new(),
        }
    }

    pub fn finish(self) -> MetricsRecord {
        self.record
    }

    fn track(&mut self, state: &TangleState, id: TxId) {
        let i = id.index();
        if self.masks.len() <= i {
            self.masks.resize(i + 1, 0);
        }
        let mut inherited = 0u64;
        if let Some([a, b]) = state.parents(id) {
            inherited = self.mask(a) | self.mask(b);
        }
        let mut own = 0u64;
        let n = self.record.cw_trajectories.len();
        if n < self.options.tracked && state.issue_time(id) >= self.record.window_start {
            own = 1 << n;
            self.record.cw_trajectories.push(WeightTrajectory {
                tx: id,
                issue_time: state.issue_time(id),
                points: vec![(REVEAL_DELAY, 1)],
            });
            self.tracked_weight.push(1);
        }
        self.masks[i] = inherited | own;

        let now = state.reveal_time(id);
        let mut bits = inherited;
        while bits != 0 {
            let j = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            self.tracked_weight[j] += 1;
            let traj = &mut self.record.cw_trajectories[j];
            traj.points.push((now - traj.issue_time, self.tracked_weight[j]));
        }
    }

    fn mask(&self, id: TxId) -> u64 {
        self.masks.get(id.index()).copied().unwrap_or(0)
    }
}

impl Observer for MetricsRecorder {
    fn on_window_start(&mut self, _state: &TangleState, t: f64) {
        self.record.window_start = t;
    }

    fn on_reveal(&mut self, state: &TangleState, id: TxId) {
        self.record.tip_series.push((state.reveal_time(id), state.tip_count()));
        if self.options.tracked > 0 {
            self.track(state, id);
        }
    }

    fn on_finish(&mut self, state: &TangleState, end: f64) {
        self.record.end_time = end;
        // only transactions old enough to have been approved are judged,
        // so the tail of the run does not censor long approval times
        let cutoff = end - self.options.orphan_horizon;
        for id in state.ids().skip(1) {
            let issued = state.issue_time(id);
            if issued < self.record.window_start {
                continue;
            }
            if issued > cutoff {
                break;
            }
            match state.first_approval_time(id) {
                Some(t) => self.record.approval_times.push(ApprovalSample {
                    tx: id,
                    issue_time: issued,
                    t_a: t - state.reveal_time(id),
                }),
                None => self.record.orphan_count += 1,
            }
        }
    }
}

/// Runs one simulation with the standard recorder attached.
pub fn run_recorded(config: &SimConfig, options: &RecordOptions) -> Result<(TangleState, MetricsRecord)> {
    let mut recorder = MetricsRecorder::new(options.clone());
    let outcome = run_simulation(config, &mut [&mut recorder])?;
    let mut record = recorder.finish();
    record.truncated = outcome.truncated;
    if record.end_time == 0.0 {
        record.end_time = outcome.end_time;
    }
    Ok((outcome.state, record))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

/// Time-weighted mean and standard deviation of the tip count.
pub fn summarize_tips(record: &MetricsRecord) -> Result<Summary> {
    if record.tip_series.is_empty() {
        return Err(Error::InsufficientData("empty tip series".into()));
    }
    let mut hold = record.holding_times();
    let mut total: f64 = hold.iter().sum();
    if total <= 0.0 {
        hold.iter_mut().for_each(|h| *h = 1.0);
        total = hold.len() as f64;
    }
    // centred on the first sample so a constant series comes out exact
    let base = record.tip_series[0].1 as f64;
    let mean =
        base + record.tip_series.iter().zip(&hold).map(|(&(_, l), h)| (l as f64 - base) * h).sum::<f64>() / total;
    let var =
        record.tip_series.iter().zip(&hold).map(|(&(_, l), h)| (l as f64 - mean).powi(2) * h).sum::<f64>() / total;
    Ok(Summary { mean, std: var.max(0.0).sqrt(), n: record.tip_series.len() })
}

/// Sample mean and standard deviation of the first-approval times.
pub fn summarize_approval(record: &MetricsRecord) -> Result<Summary> {
    let xs: Vec<f64> = record.approval_times.iter().map(|a| a.t_a).collect();
    sample_summary(&xs).ok_or_else(|| Error::InsufficientData("no approved transactions".into()))
}

pub(crate) fn sample_summary(xs: &[f64]) -> Option<Summary> {
    if xs.is_empty() {
        return None;
    }
    let n = xs.len();
    let mean = xs.iter().sum::<f64>() / n as f64;
    let var = if n > 1 { xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64 } else { 0.0 };
    Some(Summary { mean, std: var.sqrt(), n })
}

/// Relative residual of `L = (t_A - 1) * 2 * lambda`, the tip-count /
/// approval-time relation that holds under uniform tip selection.
pub fn check_tip_approval_relation(mean_tips: f64, mean_t_a: f64, lambda: f64) -> f64 {
    (mean_tips - (mean_t_a - REVEAL_DELAY) * 2.0 * lambda).abs() / mean_tips
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrendFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    /// Slope standard error corrected for lag-1 autocorrelation of the
    /// residuals (event-sampled tip counts are strongly autocorrelated).
    pub slope_se: f64,
    pub effective_n: f64,
}

/// Least-squares line through the tip series.
pub fn tip_growth_slope(record: &MetricsRecord) -> Result<TrendFit> {
    let xs: Vec<f64> = record.tip_series.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = record.tip_series.iter().map(|p| p.1 as f64).collect();
    trend(&xs, &ys)
}

pub fn trend(xs: &[f64], ys: &[f64]) -> Result<TrendFit> {
    let n = xs.len();
    if n < 3 {
        return Err(Error::InsufficientData(format!("trend needs at least 3 points, got {n}")));
    }
    let fit = fit_line(xs, ys).ok_or_else(|| Error::InsufficientData("degenerate time axis".into()))?;
    let resid: Vec<f64> = xs.iter().zip(ys).map(|(&x, &y)| y - fit.eval(x)).collect();
    let ss: f64 = resid.iter().map(|r| r * r).sum();
    let rho =
        if ss > 0.0 { (resid.windows(2).map(|w| w[0] * w[1]).sum::<f64>() / ss).clamp(0.0, 0.999_999) } else { 0.0 };
    let effective_n = (n as f64 * (1.0 - rho) / (1.0 + rho)).max(3.0);
    let mx = xs.iter().sum::<f64>() / n as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    // residual variance with n_eff - 2 degrees of freedom; sxx rescaled to n_eff points
    let sigma2 = ss / n as f64 * effective_n / (effective_n - 2.0).max(1.0);
    let slope_se = (sigma2 / (sxx * effective_n / n as f64)).sqrt();
    Ok(TrendFit { slope: fit.slope, intercept: fit.intercept, r2: fit.r2, slope_se, effective_n })
}
