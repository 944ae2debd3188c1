use thiserror::Error;

use crate::ops::{FailedPredicate, OperatorInstance};
use crate::schedule::{TaskId, Violation};

fn list(violations: &[Violation]) -> String {
    violations.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

#[derive(Debug, Error)]
pub enum ScheduleError {
    #[error("structural error: {}", list(.0))]
    Structural(Vec<Violation>),
    #[error("malformed schedule document: {0}")]
    Parse(#[from] serde_json::Error),
}

#[derive(Debug, Error)]
pub enum PlantError {
    #[error("invalid plant config: {0}")]
    Config(String),
    #[error("order {0} has no capable resource")]
    Infeasible(TaskId),
    #[error("order {0} is already scheduled")]
    DuplicateOrder(TaskId),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error("malformed document: {0}")]
    Parse(#[from] serde_json::Error),
}

#[derive(Debug, Error)]
pub enum OpError {
    #[error("operator references unknown task {0}")]
    UnknownTask(TaskId),
    #[error("{op} is not applicable: {predicate}")]
    Precondition { op: OperatorInstance, predicate: FailedPredicate },
    #[error("unknown operator kind {0:?}")]
    UnknownKind(String),
    #[error("malformed operator trace line {line}: {source}")]
    Trace { line: usize, source: serde_json::Error },
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
}

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error("invalid learner config: {0}")]
    Config(String),
    #[error("bad rule key {0:?}")]
    BadKey(String),
    #[error("policy uses {found} buckets but the learner expects {expected}")]
    BucketMismatch { expected: u32, found: u32 },
    #[error("policy created_count {claimed} disagrees with its {actual} rules")]
    CountMismatch { claimed: u64, actual: usize },
    #[error("rule {0:?} has a non-finite value")]
    NonFinite(String),
    #[error("malformed policy document: {0}")]
    Parse(#[from] serde_json::Error),
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("no operator was proposed")]
pub struct SelectError;

#[derive(Debug, Error)]
pub enum CycleError {
    #[error(transparent)]
    Plant(#[from] PlantError),
    #[error(transparent)]
    Op(#[from] OpError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error("malformed training curve: {0}")]
    Curve(#[from] csv::Error),
    #[error("invalid run settings: {0}")]
    Settings(String),
}
