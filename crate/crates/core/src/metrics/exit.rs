//! Exit probabilities and confidence levels, estimated by repeated tip
//! selection on a frozen Tangle.

use rayon::prelude::*;

use crate::arrival::{run_simulation, SimConfig};
use crate::error::{config_err, Result};
use crate::rng::{run_seed, stream, Stream};
use crate::selector::SelectorKind;
use crate::tangle::{TangleState, TxId};

/// Selections per independently seeded work unit. Fixed so that results do
/// not depend on the size of the thread pool.
const CHUNK: usize = 1 << 16;

fn chunk_sizes(total: usize) -> Vec<(u64, usize)> {
    (0..total.div_ceil(CHUNK)).map(|c| (c as u64, CHUNK.min(total - c * CHUNK))).collect()
}

/// Runs `samples` selections and returns how many landed on each current
/// tip, in `state.tips()` order. Per-chunk counts are merged after the fact.
pub fn selection_counts(state: &TangleState, kind: SelectorKind, samples: usize, seed: u64) -> Result<Vec<u64>> {
    let tips = state.tips();
    let mut slot = vec![u32::MAX; state.len()];
    for (i, t) in tips.iter().enumerate() {
        slot[t.index()] = i as u32;
    }
    let partial: Vec<Vec<u64>> = chunk_sizes(samples)
        .into_par_iter()
        .map(|(c, n)| {
            let mut rng = stream(run_seed(seed, c), Stream::Estimation);
            let mut counts = vec![0u64; tips.len()];
            for _ in 0..n {
                let tip = kind.select(state, &mut rng)?;
                counts[slot[tip.index()] as usize] += 1;
            }
            Ok(counts)
        })
        .collect::<Result<_>>()?;
    let mut total = vec![0u64; tips.len()];
    for counts in partial {
        for (t, c) in total.iter_mut().zip(counts) {
            *t += c;
        }
    }
    Ok(total)
}

/// Empirical exit probability of every current tip.
pub fn exit_frequencies(
    state: &TangleState,
    kind: SelectorKind,
    samples: usize,
    seed: u64,
) -> Result<Vec<(TxId, f64)>> {
    if samples == 0 {
        return Err(config_err("need at least one selection"));
    }
    let counts = selection_counts(state, kind, samples, seed)?;
    Ok(state.tips().iter().zip(counts).map(|(&t, c)| (t, c as f64 / samples as f64)).collect())
}

/// Probabilities sorted from most to least likely.
pub fn ranked(freqs: &[(TxId, f64)]) -> Vec<f64> {
    let mut v: Vec<f64> = freqs.iter().map(|f| f.1).collect();
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

/// Zero-pads every vector to the longest one and averages element-wise.
pub fn average_padded(vectors: &[Vec<f64>]) -> Vec<f64> {
    let width = vectors.iter().map(Vec::len).max().unwrap_or(0);
    let mut acc = vec![0.0; width];
    for v in vectors {
        for (a, x) in acc.iter_mut().zip(v) {
            *a += x;
        }
    }
    let runs = vectors.len().max(1) as f64;
    acc.iter_mut().for_each(|a| *a /= runs);
    acc
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExitProfile {
    /// Adjusted average exit probability of the i-th most probable tip.
    pub probabilities: Vec<f64>,
    pub runs: usize,
    pub walks_per_run: usize,
}

impl ExitProfile {
    /// Largest element-wise difference, padding the shorter profile with 0.
    pub fn max_gap(&self, other: &ExitProfile) -> f64 {
        let n = self.probabilities.len().max(other.probabilities.len());
        (0..n)
            .map(|i| {
                let a = self.probabilities.get(i).copied().unwrap_or(0.0);
                let b = other.probabilities.get(i).copied().unwrap_or(0.0);
                (a - b).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Grows `runs` Tangles (seeds derived from `config.seed`), estimates the
/// exit probabilities of each final tip set with `walks_per_run` selections
/// using the same selector, and averages the ranked, zero-padded vectors.
pub fn exit_profile(config: &SimConfig, runs: usize, walks_per_run: usize) -> Result<ExitProfile> {
    if runs == 0 || walks_per_run == 0 {
        return Err(config_err("exit profile needs runs >= 1 and walks >= 1"));
    }
    config.validate()?;
    let vectors: Vec<Vec<f64>> = (0..runs as u64)
        .into_par_iter()
        .map(|r| {
            let seed = run_seed(config.seed, r);
            let cfg = SimConfig { seed, ..config.clone() };
            let state = run_simulation(&cfg, &mut [])?.state;
            Ok(ranked(&exit_frequencies(&state, config.selector, walks_per_run, seed)?))
        })
        .collect::<Result<_>>()?;
    Ok(ExitProfile { probabilities: average_padded(&vectors), runs, walks_per_run })
}

/// Fraction of `samples` selections returning a tip that indirectly
/// approves `x`.
pub fn confidence_level(state: &TangleState, x: TxId, kind: SelectorKind, samples: usize, seed: u64) -> Result<f64> {
    if samples == 0 {
        return Err(config_err("need at least one selection"));
    }
    let cone = state.future_cone(x)?;
    let counts = selection_counts(state, kind, samples, seed)?;
    let hits: u64 = state.tips().iter().zip(counts).filter(|(t, _)| cone[t.index()]).map(|(_, c)| c).sum();
    Ok(hits as f64 / samples as f64)
}
