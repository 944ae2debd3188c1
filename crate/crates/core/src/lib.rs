//! Learning schedule-repair policies.
//!
//! A disrupted production schedule is repaired by a sequence of local
//! operators ([`ops`]) picked from summed rule preferences ([`rules`]) that
//! are learned with SARSA(λ) over simulated disruptions ([`cycle`]) of a
//! generated plant ([`plant`]).

pub mod cycle;
pub mod error;
pub mod ops;
pub mod plant;
pub mod rules;
pub mod schedule;

pub use cycle::{
    goal_reached, repair, reward, run_episode, train, train_with, EpisodeResult, EpisodeSettings, GoalKind,
    RepairGoal, Scenario, TrainOptions, TrainingCurve,
};
pub use error::{CycleError, OpError, PlantError, PolicyError, ScheduleError, SelectError};
pub use ops::{applicable, apply, propose, OperatorInstance, OperatorKind};
pub use plant::{Order, Plant, PlantConfig};
pub use rules::{LearnerConfig, Policy, RuleTable};
pub use schedule::{Resource, ResourceId, Schedule, ScheduleMetrics, Task, TaskId};
