//! Continuous-time driver: Poisson issuance, delayed reveals, warm-up.

use rand::Rng;
use rand_distr::{Distribution, Exp};

use crate::error::{config_err, Result};
use crate::rng::{stream, Stream};
use crate::selector::{select_pair, SelectorKind};
use crate::tangle::{TangleState, TxId};

pub const DEFAULT_WARMUP: f64 = 50.0;
pub const DEFAULT_DURATION: f64 = 150.0;

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    /// Transactions per unit of reveal delay.
    pub lambda: f64,
    pub selector: SelectorKind,
    pub duration: f64,
    /// Observers see nothing before this time.
    pub warmup: f64,
    pub seed: u64,
    /// Stop issuing once this many transactions (genesis excluded) exist.
    pub max_transactions: Option<usize>,
}

impl SimConfig {
    pub fn new(lambda: f64, selector: SelectorKind) -> Self {
        SimConfig {
            lambda,
            selector,
            duration: DEFAULT_DURATION,
            warmup: DEFAULT_WARMUP,
            seed: 0,
            max_transactions: None,
        }
    }

    pub fn with_duration(mut self, duration: f64) -> Self {
        self.duration = duration;
        self
    }

    pub fn with_warmup(mut self, warmup: f64) -> Self {
        self.warmup = warmup;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_max_transactions(mut self, cap: usize) -> Self {
        self.max_transactions = Some(cap);
        self
    }

    pub fn alpha(&self) -> f64 {
        self.selector.alpha()
    }

    /// Incremental weight updates are only paid for when the selector reads
    /// weights, i.e. a walk with positive bias.
    pub fn maintains_weights(&self) -> bool {
        self.selector.needs_weights()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return Err(config_err(format!("lambda must be positive, got {}", self.lambda)));
        }
        self.selector.validate()?;
        if self.duration.is_nan() || self.duration <= 0.0 {
            return Err(config_err(format!("duration must be positive, got {}", self.duration)));
        }
        if !(self.warmup >= 0.0 && self.warmup < self.duration) {
            return Err(config_err(format!(
                "warmup must lie in [0, duration), got {} with duration {}",
                self.warmup, self.duration
            )));
        }
        if self.max_transactions == Some(0) {
            return Err(config_err("max_transactions must be at least 1"));
        }
        Ok(())
    }
}

/// Exp(lambda) interarrival time.
pub fn next_interarrival<R: Rng + ?Sized>(rng: &mut R, lambda: f64) -> Result<f64> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(config_err(format!("lambda must be positive, got {lambda}")));
    }
    let exp = Exp::new(lambda).map_err(|e| config_err(e.to_string()))?;
    Ok(exp.sample(rng))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Event {
    Reveal(f64),
    Issue(f64),
}

impl Event {
    pub fn time(&self) -> f64 {
        match *self {
            Event::Reveal(t) | Event::Issue(t) => t,
        }
    }
}

/// Merges the Tangle's reveal queue with the Poisson issuance clock.
#[derive(Debug, Clone)]
pub struct EventQueue {
    next_issue: f64,
}

impl EventQueue {
    pub fn new(first_issue: f64) -> Self {
        EventQueue { next_issue: first_issue }
    }

    /// Earliest pending event. A reveal wins a tie with an issuance.
    pub fn peek(&self, state: &TangleState) -> Event {
        match state.next_reveal_time() {
            Some(r) if r <= self.next_issue => Event::Reveal(r),
            _ => Event::Issue(self.next_issue),
        }
    }

    pub fn schedule_issue(&mut self, t: f64) {
        self.next_issue = t;
    }
}

/// Hooks fired while a run is inside its recording window.
pub trait Observer {
    /// Called once, when simulated time first reaches the warm-up boundary.
    fn on_window_start(&mut self, _state: &TangleState, _t: f64) {}
    fn on_issue(&mut self, _state: &TangleState, _id: TxId) {}
    fn on_reveal(&mut self, _state: &TangleState, _id: TxId) {}
    /// Called at the end of any run whose recording window was entered.
    fn on_finish(&mut self, _state: &TangleState, _end: f64) {}
}

#[derive(Debug, Clone)]
pub struct SimOutcome {
    pub state: TangleState,
    /// Simulated time at which the run stopped.
    pub end_time: f64,
    /// Number of non-genesis transactions issued.
    pub issued: usize,
    /// True when `max_transactions` stopped the run before `duration`.
    pub truncated: bool,
}

/// Runs one simulation. Issuance events select two tips against the
/// currently revealed Tangle; reveal events make transactions visible one
/// time unit after issuance.
pub fn run_simulation(config: &SimConfig, observers: &mut [&mut dyn Observer]) -> Result<SimOutcome> {
    config.validate()?;
    let mut arrivals = stream(config.seed, Stream::Arrivals);
    let mut selection = stream(config.seed, Stream::TipSelection);

    let expected = (config.lambda * config.duration * 1.05) as usize + 16;
    let capacity = config.max_transactions.map_or(expected, |m| m.min(expected) + 1);
    let mut state = TangleState::with_capacity(config.maintains_weights(), capacity.min(1 << 26));

    let mut queue = EventQueue::new(next_interarrival(&mut arrivals, config.lambda)?);
    let mut recording = false;
    let mut issued = 0usize;
    let mut truncated = false;

    loop {
        let event = queue.peek(&state);
        let t = event.time();
        if t > config.duration {
            break;
        }
        if !recording && t >= config.warmup {
            recording = true;
            for o in observers.iter_mut() {
                o.on_window_start(&state, config.warmup);
            }
        }
        match event {
            Event::Reveal(_) => {
                let id = state.reveal_next().expect("peeked reveal");
                if recording {
                    for o in observers.iter_mut() {
                        o.on_reveal(&state, id);
                    }
                }
            }
            Event::Issue(_) => {
                if config.max_transactions.is_some_and(|cap| issued >= cap) {
                    truncated = true;
                    break;
                }
                let parents = select_pair(&state, config.selector, &mut selection)?;
                let id = state.add_transaction(parents, t)?;
                issued += 1;
                if recording {
                    for o in observers.iter_mut() {
                        o.on_issue(&state, id);
                    }
                }
                queue.schedule_issue(t + next_interarrival(&mut arrivals, config.lambda)?);
            }
        }
    }

    let end_time = if truncated { state.now() } else { config.duration };
    if !recording && !truncated && end_time >= config.warmup {
        recording = true;
        for o in observers.iter_mut() {
            o.on_window_start(&state, config.warmup);
        }
    }
    if recording {
        for o in observers.iter_mut() {
            o.on_finish(&state, end_time);
        }
    }
    Ok(SimOutcome { state, end_time, issued, truncated })
}
