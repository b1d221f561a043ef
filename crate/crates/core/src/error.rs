use thiserror::Error;

use crate::tangle::TxId;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unknown transaction {0}")]
    UnknownTx(TxId),

    #[error("parent {parent} is not revealed at issue time {issue_time}")]
    ParentNotRevealed { parent: TxId, issue_time: f64 },

    #[error("issue time {issue_time} precedes current simulation time {now}")]
    TimeWentBackwards { issue_time: f64, now: f64 },

    #[error("transaction {0} is already revealed")]
    AlreadyRevealed(TxId),

    #[error("transaction {0} has no revealed approver")]
    NoApprovers(TxId),

    #[error("tip set is empty")]
    EmptyTipSet,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("not enough data: {0}")]
    InsufficientData(String),

    #[error("attack budget of {budget} transactions cannot push every cut-set approver share above {kappa}")]
    BudgetExceeded { budget: usize, kappa: f64 },

    #[error("malformed edge list at line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}
