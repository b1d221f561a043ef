//! Tip selection: uniform random tip selection and the (biased) random walk
//! from the genesis.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{config_err, Error, Result};
use crate::tangle::{TangleState, TxId};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SelectorKind {
    /// Uniform random tip selection.
    Urts,
    /// Random walk from the genesis. `alpha = 0` is the unbiased walk.
    Walk { alpha: f64 },
}

impl SelectorKind {
    pub fn walk(alpha: f64) -> Result<Self> {
        if !alpha.is_finite() || alpha < 0.0 {
            return Err(config_err(format!("alpha must be finite and >= 0, got {alpha}")));
        }
        Ok(SelectorKind::Walk { alpha })
    }

    pub fn alpha(&self) -> f64 {
        match *self {
            SelectorKind::Urts => 0.0,
            SelectorKind::Walk { alpha } => alpha,
        }
    }

    /// Whether a simulation driven by this selector needs cumulative weights.
    pub fn needs_weights(&self) -> bool {
        matches!(*self, SelectorKind::Walk { alpha } if alpha > 0.0)
    }

    /// Short label: `urts`, `urw` or `brw`.
    pub fn label(&self) -> &'static str {
        match *self {
            SelectorKind::Urts => "urts",
            SelectorKind::Walk { alpha: 0.0 } => "urw",
            SelectorKind::Walk { .. } => "brw",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            SelectorKind::Urts => Ok(()),
            SelectorKind::Walk { alpha } => Self::walk(alpha).map(|_| ()),
        }
    }

    pub fn select<R: Rng + ?Sized>(&self, state: &TangleState, rng: &mut R) -> Result<TxId> {
        match *self {
            SelectorKind::Urts => select_urts(state, rng),
            SelectorKind::Walk { alpha } => select_walk(state, alpha, rng),
        }
    }
}

impl fmt::Display for SelectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            SelectorKind::Urts => f.write_str("urts"),
            SelectorKind::Walk { alpha: 0.0 } => f.write_str("urw"),
            SelectorKind::Walk { alpha } => write!(f, "brw:{alpha}"),
        }
    }
}

/// Accepts `urts`, `urw`, `walk` (alpha 0), `brw:<alpha>` and `walk:<alpha>`.
impl FromStr for SelectorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        let (name, alpha) = match s.split_once(':') {
            Some((n, a)) => {
                let a: f64 = a.parse().map_err(|_| config_err(format!("bad alpha in selector {s:?}")))?;
                (n.to_string(), Some(a))
            }
            None => (s.clone(), None),
        };
        match (name.as_str(), alpha) {
            ("urts", None) => Ok(SelectorKind::Urts),
            ("urw", None) | ("walk", None) => Ok(SelectorKind::Walk { alpha: 0.0 }),
            ("brw", Some(a)) | ("walk", Some(a)) => SelectorKind::walk(a),
            _ => Err(config_err(format!("unknown selector {s:?}"))),
        }
    }
}

pub fn select_urts<R: Rng + ?Sized>(state: &TangleState, rng: &mut R) -> Result<TxId> {
    let tips = state.tips();
    if tips.is_empty() {
        return Err(Error::EmptyTipSet);
    }
    Ok(tips[rng.random_range(0..tips.len())])
}

/// Step probabilities `exp(alpha * w_i) / sum_j exp(alpha * w_j)`, computed
/// with the largest exponent shifted to zero so large weights cannot overflow.
pub fn softmax(weights: &[f64], alpha: f64) -> Vec<f64> {
    let max = weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = weights.iter().map(|&w| (alpha * (w - max)).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Transition distribution from `x` over its revealed approvers.
pub fn transition_probabilities(state: &TangleState, x: TxId, alpha: f64) -> Result<Vec<(TxId, f64)>> {
    let approvers = state.approvers(x);
    if approvers.is_empty() {
        return Err(Error::NoApprovers(x));
    }
    let weights: Vec<f64> = approvers.iter().map(|&z| state.weight(z) as f64).collect();
    Ok(approvers.iter().copied().zip(softmax(&weights, alpha)).collect())
}

/// One step of the walk: moves from `x` to one of its revealed approvers.
pub fn walk_step<R: Rng + ?Sized>(state: &TangleState, x: TxId, alpha: f64, rng: &mut R) -> Result<TxId> {
    let approvers = state.approvers(x);
    match approvers.len() {
        0 => Err(Error::NoApprovers(x)),
        1 => Ok(approvers[0]),
        n if alpha == 0.0 => Ok(approvers[rng.random_range(0..n)]),
        _ => Ok(weighted_step(state, approvers, alpha, rng)),
    }
}

fn weighted_step<R: Rng + ?Sized>(state: &TangleState, approvers: &[TxId], alpha: f64, rng: &mut R) -> TxId {
    let max = approvers.iter().map(|&z| state.weight(z)).max().unwrap_or(0) as f64;
    let term = |z: TxId| (alpha * (state.weight(z) as f64 - max)).exp();
    let total: f64 = approvers.iter().map(|&z| term(z)).sum();
    let mut u = rng.random::<f64>() * total;
    for &z in approvers {
        u -= term(z);
        if u < 0.0 {
            return z;
        }
    }
    // rounding left u marginally non-negative
    *approvers.last().expect("non-empty")
}

/// Walks from the genesis until it reaches a transaction without revealed
/// approvers, and returns that tip.
pub fn select_walk<R: Rng + ?Sized>(state: &TangleState, alpha: f64, rng: &mut R) -> Result<TxId> {
    let mut current = TxId::GENESIS;
    loop {
        match walk_step(state, current, alpha, rng) {
            Ok(next) => current = next,
            Err(Error::NoApprovers(_)) => return Ok(current),
            Err(e) => return Err(e),
        }
    }
}

/// Two independent selections. The pair may repeat a tip.
pub fn select_pair<R: Rng + ?Sized>(state: &TangleState, kind: SelectorKind, rng: &mut R) -> Result<[TxId; 2]> {
    Ok([kind.select(state, rng)?, kind.select(state, rng)?])
}
