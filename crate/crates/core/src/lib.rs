//! Continuous-time simulation of the Tangle, a DAG-structured ledger in
//! which every transaction approves two earlier tips.
//!
//! * [`tangle`] stores the DAG and cumulative weights.
//! * [`arrival`] drives Poisson issuance with a fixed reveal delay.
//! * [`selector`] implements uniform tip selection and the biased walk.
//! * [`metrics`] records and summarizes runs.
//! * [`attack`] builds parasite chains and measures their success.
//! * [`bench`] times runs and fits complexity exponents.

pub mod arrival;
pub mod attack;
pub mod bench;
pub mod error;
pub mod metrics;
pub mod output;
pub mod rng;
pub mod selector;
pub mod tangle;

pub use arrival::{run_simulation, Observer, SimConfig, SimOutcome};
pub use error::{Error, Result};
pub use selector::SelectorKind;
pub use tangle::{TangleState, Transaction, TxId};
