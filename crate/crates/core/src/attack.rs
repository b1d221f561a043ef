//! Parasite-chain double-spend attacks.
//!
//! An attacker builds a sub-Tangle in private, approving the honest Tangle
//! but invisible to it, and publishes everything at once. Success is the
//! confidence level of the attacker's double-spend after publication.

use std::fmt;
use std::str::FromStr;

use crate::arrival::{run_simulation, SimConfig};
use crate::error::{config_err, Error, Result};
use crate::metrics::confidence_level;
use crate::selector::SelectorKind;
use crate::tangle::{TangleState, TxId};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParasiteKind {
    /// Many attacker tips over the double-spend; aimed at uniform selection.
    TipFlood,
    /// A chain hooked onto a cut set so walks get absorbed; aimed at URW.
    CutSetChain,
}

impl ParasiteKind {
    pub fn label(&self) -> &'static str {
        match self {
            ParasiteKind::TipFlood => "tip_flood",
            ParasiteKind::CutSetChain => "cut_set_chain",
        }
    }
}

impl fmt::Display for ParasiteKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for ParasiteKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "tip_flood" | "flood" => Ok(ParasiteKind::TipFlood),
            "cut_set_chain" | "cut_set" | "chain" => Ok(ParasiteKind::CutSetChain),
            other => Err(config_err(format!("unknown attack kind '{other}'"))),
        }
    }
}

/// Which set of honest transactions the chain hooks onto. Every path from the
/// genesis to a tip must cross it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CutSet {
    /// The direct approvers of the genesis.
    #[default]
    GenesisApprovers,
    /// The genesis alone.
    Genesis,
}

impl fmt::Display for CutSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CutSet::GenesisApprovers => "genesis_approvers",
            CutSet::Genesis => "genesis",
        })
    }
}

impl FromStr for CutSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "genesis_approvers" => Ok(CutSet::GenesisApprovers),
            "genesis" => Ok(CutSet::Genesis),
            other => Err(config_err(format!("unknown cut set '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParasiteSpec {
    pub kind: ParasiteKind,
    /// Honest transaction approved by the tip-flood double-spend.
    pub anchor: TxId,
    /// Attacker tips for a flood; transaction budget for a chain.
    pub size: usize,
    /// Target share of cut-set approvers (chain only).
    pub kappa: f64,
    pub cut_set: CutSet,
}

impl ParasiteSpec {
    pub fn tip_flood(size: usize) -> Self {
        ParasiteSpec {
            kind: ParasiteKind::TipFlood,
            anchor: TxId::GENESIS,
            size,
            kappa: 0.5,
            cut_set: CutSet::default(),
        }
    }

    pub fn cut_set_chain(kappa: f64, budget: usize) -> Self {
        ParasiteSpec {
            kind: ParasiteKind::CutSetChain,
            anchor: TxId::GENESIS,
            size: budget,
            kappa,
            cut_set: CutSet::default(),
        }
    }

    pub fn with_cut_set(mut self, cut_set: CutSet) -> Self {
        self.cut_set = cut_set;
        self
    }

    pub fn with_anchor(mut self, anchor: TxId) -> Self {
        self.anchor = anchor;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.size < 1 {
            return Err(config_err("attacker size must be at least 1"));
        }
        if !(self.kappa > 0.0 && self.kappa < 1.0) {
            return Err(config_err(format!("kappa must lie in (0, 1), got {}", self.kappa)));
        }
        Ok(())
    }
}

/// Attacker size either as an absolute count or as a multiple of the honest
/// tip count at publication time. Parses `"300"` or `"3L"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AttackSize {
    Absolute(usize),
    TipMultiple(f64),
}

impl AttackSize {
    pub fn resolve(&self, honest_tips: usize) -> usize {
        match *self {
            AttackSize::Absolute(n) => n,
            AttackSize::TipMultiple(k) => (k * honest_tips as f64).round() as usize,
        }
    }
}

impl fmt::Display for AttackSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AttackSize::Absolute(n) => write!(f, "{n}"),
            AttackSize::TipMultiple(k) => write!(f, "{k}L"),
        }
    }
}

impl FromStr for AttackSize {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || config_err(format!("attacker size must be a count or a multiple like '3L', got '{s}'"));
        if let Some(k) = s.strip_suffix(['L', 'l']) {
            let k: f64 = if k.is_empty() { 1.0 } else { k.parse().map_err(|_| bad())? };
            if !(k.is_finite() && k > 0.0) {
                return Err(bad());
            }
            Ok(AttackSize::TipMultiple(k))
        } else {
            s.parse().map(AttackSize::Absolute).map_err(|_| bad())
        }
    }
}

/// Attacker transactions in issuance order. Until [`Parasite::publish`] is
/// called they exist in the state but are invisible to every query.
#[derive(Debug, Clone, PartialEq)]
pub struct Parasite {
    pub double_spend: TxId,
    pub transactions: Vec<TxId>,
}

impl Parasite {
    /// Reveals every attacker transaction in issuance order, then recomputes
    /// all cumulative weights so walk selectors see coherent values.
    pub fn publish(&self, state: &mut TangleState) -> Result<()> {
        for &id in &self.transactions {
            state.reveal(id)?;
        }
        state.recompute_weights();
        Ok(())
    }
}

/// Issues the tip flood in private. The double-spend approves the anchor
/// twice, a stem approves the double-spend, and `size` tips each approve the
/// double-spend and the stem. Honest transactions still in flight are
/// revealed first so the attack sees a settled Tangle.
pub fn prepare_tip_flood(state: &mut TangleState, spec: &ParasiteSpec) -> Result<Parasite> {
    spec.validate()?;
    if !state.is_revealed(spec.anchor) {
        return Err(Error::ParentNotRevealed { parent: spec.anchor, issue_time: state.now() });
    }
    state.drain();
    let t = state.now();
    let y = state.add_private_transaction([spec.anchor; 2], t)?;
    state.set_conflict_marker(y, true)?;
    let stem = state.add_private_transaction([y; 2], t)?;
    let mut transactions = Vec::with_capacity(spec.size + 2);
    transactions.extend([y, stem]);
    for _ in 0..spec.size {
        transactions.push(state.add_private_transaction([y, stem], t)?);
    }
    Ok(Parasite { double_spend: y, transactions })
}

pub fn build_tip_flood(state: &mut TangleState, spec: &ParasiteSpec) -> Result<Parasite> {
    let parasite = prepare_tip_flood(state, spec)?;
    parasite.publish(state)?;
    Ok(parasite)
}

/// The cut set selected by `choice`, in id order.
pub fn cut_set(state: &TangleState, choice: CutSet) -> Vec<TxId> {
    match choice {
        CutSet::Genesis => vec![TxId::GENESIS],
        CutSet::GenesisApprovers => {
            let mut y = state.approvers(TxId::GENESIS).to_vec();
            y.sort_unstable();
            y
        }
    }
}

/// Smallest number of chain approvers `c` with `c / (c + honest) > kappa`.
pub fn approvers_needed(honest: usize, kappa: f64) -> usize {
    let mut c = (kappa * honest as f64 / (1.0 - kappa)).floor() as usize;
    while (c as f64) <= kappa * (c + honest) as f64 {
        c += 1;
    }
    c
}

/// Issues the cut-set chain in private. `x0` (the double-spend) approves the
/// first cut-set element twice; every later `x_i` approves `x_{i-1}` and the
/// cut-set element furthest from its target share. The chain stops as soon
/// as every element's share of chain approvers exceeds kappa, and fails if
/// that takes more than `spec.size` transactions.
pub fn prepare_cut_set_chain(state: &mut TangleState, spec: &ParasiteSpec) -> Result<Parasite> {
    spec.validate()?;
    state.drain();
    let ys = cut_set(state, spec.cut_set);
    if ys.is_empty() {
        return Err(Error::InsufficientData("cut set is empty".into()));
    }
    let mut deficit: Vec<usize> = ys.iter().map(|&y| approvers_needed(state.approvers(y).len(), spec.kappa)).collect();
    let total: usize = deficit.iter().sum();
    if total > spec.size {
        return Err(Error::BudgetExceeded { budget: spec.size, kappa: spec.kappa });
    }

    let t = state.now();
    let x0 = state.add_private_transaction([ys[0]; 2], t)?;
    state.set_conflict_marker(x0, true)?;
    deficit[0] -= 1;
    let mut transactions = Vec::with_capacity(total);
    transactions.push(x0);
    let mut prev = x0;
    while let Some((j, _)) = deficit.iter().enumerate().filter(|d| *d.1 > 0).max_by_key(|&(j, &d)| (d, usize::MAX - j))
    {
        deficit[j] -= 1;
        prev = state.add_private_transaction([prev, ys[j]], t)?;
        transactions.push(prev);
    }
    Ok(Parasite { double_spend: x0, transactions })
}

pub fn build_cut_set_chain(state: &mut TangleState, spec: &ParasiteSpec) -> Result<Parasite> {
    let parasite = prepare_cut_set_chain(state, spec)?;
    parasite.publish(state)?;
    Ok(parasite)
}

/// Builds and publishes the parasite described by `spec`.
pub fn launch(state: &mut TangleState, spec: &ParasiteSpec) -> Result<Parasite> {
    match spec.kind {
        ParasiteKind::TipFlood => build_tip_flood(state, spec),
        ParasiteKind::CutSetChain => build_cut_set_chain(state, spec),
    }
}

/// Confidence level of the double-spend under `kind`.
pub fn evaluate_attack(
    state: &TangleState,
    double_spend: TxId,
    kind: SelectorKind,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    confidence_level(state, double_spend, kind, samples, seed)
}

/// One line of an attack report.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackOutcome {
    pub kind: ParasiteKind,
    pub selector: SelectorKind,
    pub kappa: f64,
    /// Attacker transactions actually issued.
    pub attacker_size: usize,
    /// Honest tips just before publication.
    pub honest_tips: usize,
    pub confidence: f64,
}

/// Grows an honest Tangle with `config`, publishes one parasite sized by
/// `size` (a flood's tip count, or a chain's budget) and measures the
/// double-spend's confidence under each of `evaluators`.
pub fn run_attack(
    config: &SimConfig,
    spec: &ParasiteSpec,
    size: AttackSize,
    evaluators: &[SelectorKind],
    samples: usize,
) -> Result<Vec<AttackOutcome>> {
    config.validate()?;
    for e in evaluators {
        e.validate()?;
    }
    let mut state = run_simulation(config, &mut [])?.state;
    state.drain();
    let honest_tips = state.tip_count();
    let spec = ParasiteSpec { size: size.resolve(honest_tips), ..spec.clone() };
    let parasite = launch(&mut state, &spec)?;
    evaluators
        .iter()
        .map(|&selector| {
            Ok(AttackOutcome {
                kind: spec.kind,
                selector,
                kappa: spec.kappa,
                attacker_size: parasite.transactions.len(),
                honest_tips,
                confidence: evaluate_attack(&state, parasite.double_spend, selector, samples, config.seed)?,
            })
        })
        .collect()
}
