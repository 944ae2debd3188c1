//! Relational schedule model.
//!
//! A [`Schedule`] is a set of parallel resources, each holding an ordered
//! sequence of tasks. Timing is always derived: every sequence is
//! left-compacted from time zero, so a task starts exactly when its
//! predecessor on the same resource finishes. Repair operators only change
//! sequences and then call [`Schedule::recompute_timing`].

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::ScheduleError;

pub type ProductId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TaskId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ResourceId(pub u32);

impl fmt::Display for TaskId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "T{}", self.0)
    }
}

impl fmt::Display for ResourceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "r{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassKind {
    Latex,
    Alkyd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProductClass {
    pub id: ProductId,
    pub kind: ClassKind,
}

/// A batch to be processed on exactly one resource.
///
/// `start`, `finish`, `duration`, `resource` and `seq_index` are derived by
/// [`Schedule::recompute_timing`] and are meaningless before that.
#[derive(Debug, Clone, PartialEq)]
pub struct Task {
    pub id: TaskId,
    pub name: String,
    pub product: ProductId,
    /// Units to process (> 0).
    pub quantity: f64,
    /// Hours from the horizon origin.
    pub due_date: f64,
    start: f64,
    finish: f64,
    duration: f64,
    resource: Option<ResourceId>,
    seq_index: usize,
}

impl Task {
    pub fn new(
        id: TaskId,
        name: impl Into<String>,
        product: ProductId,
        quantity: f64,
        due_date: f64,
    ) -> Self {
        Self {
            id,
            name: name.into(),
            product,
            quantity,
            due_date,
            start: 0.0,
            finish: 0.0,
            duration: 0.0,
            resource: None,
            seq_index: 0,
        }
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn finish(&self) -> f64 {
        self.finish
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn resource(&self) -> Option<ResourceId> {
        self.resource
    }

    pub fn seq_index(&self) -> usize {
        self.seq_index
    }

    /// `max(0, finish - due_date)`.
    pub fn tardiness(&self) -> f64 {
        task_tardiness(self.finish, self.due_date)
    }
}

/// Tardiness of a task finishing at `finish` against `due_date`.
pub fn task_tardiness(finish: f64, due_date: f64) -> f64 {
    (finish - due_date).max(0.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Resource {
    /// Ordinal id; left/right operator directions compare these.
    pub id: ResourceId,
    pub name: String,
    pub capabilities: BTreeSet<ProductId>,
    /// Units per hour (> 0).
    pub rate: f64,
    pub sequence: Vec<TaskId>,
}

impl Resource {
    pub fn new(
        id: ResourceId,
        name: impl Into<String>,
        rate: f64,
        capabilities: impl IntoIterator<Item = ProductId>,
    ) -> Self {
        Self {
            id,
            name: name.into(),
            capabilities: capabilities.into_iter().collect(),
            rate,
            sequence: Vec::new(),
        }
    }

    pub fn can_process(&self, product: ProductId) -> bool {
        self.capabilities.contains(&product)
    }

    /// Hour at which the last task in the sequence finishes (0 when idle).
    pub fn available_at(&self, schedule: &Schedule) -> f64 {
        self.sequence.last().and_then(|id| schedule.tasks.get(id)).map_or(0.0, |t| t.finish)
    }
}

/// An invariant breach reported by [`Schedule::validate`].
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum Violation {
    DuplicateResourceId { resource: ResourceId },
    NonDenseResourceIds { resources: Vec<ResourceId> },
    InvalidRate { resource: ResourceId },
    DuplicateTaskId { task: TaskId },
    InvalidQuantity { task: TaskId },
    InvalidDueDate { task: TaskId },
    UnknownTask { task: TaskId, resource: ResourceId },
    DuplicatePlacement { task: TaskId, resources: Vec<ResourceId> },
    Unplaced { task: TaskId },
    Capability { task: TaskId, resource: ResourceId, product: ProductId },
    StaleTiming { task: TaskId },
}

impl Violation {
    pub fn rule(&self) -> &'static str {
        match self {
            Violation::DuplicateResourceId { .. } => "duplicate-resource-id",
            Violation::NonDenseResourceIds { .. } => "non-dense-resource-ids",
            Violation::InvalidRate { .. } => "invalid-rate",
            Violation::DuplicateTaskId { .. } => "duplicate-task-id",
            Violation::InvalidQuantity { .. } => "invalid-quantity",
            Violation::InvalidDueDate { .. } => "invalid-due-date",
            Violation::UnknownTask { .. } => "unknown-task",
            Violation::DuplicatePlacement { .. } => "duplicate-placement",
            Violation::Unplaced { .. } => "unplaced",
            Violation::Capability { .. } => "capability",
            Violation::StaleTiming { .. } => "stale-timing",
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: ", self.rule())?;
        match self {
            Violation::DuplicateResourceId { resource } => write!(f, "{resource} appears twice"),
            Violation::NonDenseResourceIds { resources } => {
                write!(f, "ids {resources:?} are not exactly 1..={}", resources.len())
            }
            Violation::InvalidRate { resource } => {
                write!(f, "{resource} needs a finite rate > 0")
            }
            Violation::DuplicateTaskId { task } => write!(f, "{task} defined twice"),
            Violation::InvalidQuantity { task } => write!(f, "{task} needs a finite quantity > 0"),
            Violation::InvalidDueDate { task } => write!(f, "{task} needs a finite due date >= 0"),
            Violation::UnknownTask { task, resource } => {
                write!(f, "{resource} sequences undefined task {task}")
            }
            Violation::DuplicatePlacement { task, resources } => {
                write!(f, "{task} placed on {resources:?}")
            }
            Violation::Unplaced { task } => write!(f, "{task} is on no resource"),
            Violation::Capability { task, resource, product } => {
                write!(f, "{resource} cannot process product {product} of {task}")
            }
            Violation::StaleTiming { task } => write!(f, "{task} timing is not left-compacted"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Schedule {
    pub resources: Vec<Resource>,
    pub tasks: BTreeMap<TaskId, Task>,
}

impl Schedule {
    /// Builds a schedule and derives its timing.
    pub fn new(
        resources: Vec<Resource>,
        tasks: impl IntoIterator<Item = Task>,
    ) -> Result<Self, ScheduleError> {
        let mut schedule = Self { resources, tasks: tasks.into_iter().map(|t| (t.id, t)).collect() };
        schedule.recompute_timing()?;
        Ok(schedule)
    }

    pub fn resource(&self, id: ResourceId) -> Option<&Resource> {
        // Fast path for dense ordinal ids stored in order.
        match self.resources.get((id.0 as usize).wrapping_sub(1)) {
            Some(r) if r.id == id => Some(r),
            _ => self.resources.iter().find(|r| r.id == id),
        }
    }

    pub fn resource_mut(&mut self, id: ResourceId) -> Option<&mut Resource> {
        let idx = match self.resources.get((id.0 as usize).wrapping_sub(1)) {
            Some(r) if r.id == id => Some((id.0 - 1) as usize),
            _ => self.resources.iter().position(|r| r.id == id),
        }?;
        self.resources.get_mut(idx)
    }

    pub fn task(&self, id: TaskId) -> Option<&Task> {
        self.tasks.get(&id)
    }

    pub fn is_empty(&self) -> bool {
        self.tasks.is_empty()
    }

    /// `(resource, seq_index)` of every placed task, keyed by task id.
    pub fn placements(&self) -> BTreeMap<TaskId, (ResourceId, usize)> {
        self.resources
            .iter()
            .flat_map(|r| r.sequence.iter().enumerate().map(move |(k, t)| (*t, (r.id, k))))
            .collect()
    }

    /// Violations of the placement rules alone: unknown or duplicated
    /// entries, unplaced tasks, and capability breaches.
    fn placement_violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut seen: BTreeMap<TaskId, Vec<ResourceId>> = BTreeMap::new();
        for r in &self.resources {
            for &tid in &r.sequence {
                match self.tasks.get(&tid) {
                    None => out.push(Violation::UnknownTask { task: tid, resource: r.id }),
                    Some(t) => {
                        seen.entry(tid).or_default().push(r.id);
                        if !r.can_process(t.product) {
                            out.push(Violation::Capability { task: tid, resource: r.id, product: t.product });
                        }
                    }
                }
            }
        }
        for (&tid, placed) in &seen {
            if placed.len() > 1 {
                out.push(Violation::DuplicatePlacement { task: tid, resources: placed.clone() });
            }
        }
        for &tid in self.tasks.keys() {
            if !seen.contains_key(&tid) {
                out.push(Violation::Unplaced { task: tid });
            }
        }
        out
    }

    /// Left-compacts every sequence from time zero.
    ///
    /// Fails without touching any timing if a placement rule is broken.
    pub fn recompute_timing(&mut self) -> Result<(), ScheduleError> {
        let violations = self.placement_violations();
        if !violations.is_empty() {
            return Err(ScheduleError::Structural(violations));
        }
        for r in &self.resources {
            let mut clock = 0.0;
            for (k, tid) in r.sequence.iter().enumerate() {
                let task = self.tasks.get_mut(tid).expect("placement checked");
                let duration = task.quantity / r.rate;
                task.start = clock;
                task.duration = duration;
                task.finish = clock + duration;
                task.resource = Some(r.id);
                task.seq_index = k;
                clock = task.finish;
            }
        }
        Ok(())
    }

    /// Every broken invariant; empty iff the schedule is well formed and
    /// its derived timing is current.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();

        let mut ids: Vec<ResourceId> = self.resources.iter().map(|r| r.id).collect();
        ids.sort();
        for pair in ids.windows(2) {
            if pair[0] == pair[1] {
                out.push(Violation::DuplicateResourceId { resource: pair[0] });
            }
        }
        if ids.iter().enumerate().any(|(k, id)| id.0 as usize != k + 1) {
            out.push(Violation::NonDenseResourceIds { resources: ids });
        }
        for r in &self.resources {
            if !(r.rate.is_finite() && r.rate > 0.0) {
                out.push(Violation::InvalidRate { resource: r.id });
            }
        }
        for t in self.tasks.values() {
            if !(t.quantity.is_finite() && t.quantity > 0.0) {
                out.push(Violation::InvalidQuantity { task: t.id });
            }
            if !(t.due_date.is_finite() && t.due_date >= 0.0) {
                out.push(Violation::InvalidDueDate { task: t.id });
            }
        }

        let placement = self.placement_violations();
        let placement_ok = placement.is_empty();
        out.extend(placement);

        if placement_ok {
            for r in &self.resources {
                let mut clock = 0.0;
                for (k, tid) in r.sequence.iter().enumerate() {
                    let t = &self.tasks[tid];
                    let finish = clock + t.quantity / r.rate;
                    if t.start != clock || t.finish != finish || t.resource != Some(r.id) || t.seq_index != k
                    {
                        out.push(Violation::StaleTiming { task: t.id });
                    }
                    clock = finish;
                }
            }
        }
        out
    }

    /// Global attributes of the current timing. `init_tardiness` is passed
    /// through as the episode baseline.
    pub fn compute_metrics(&self, init_tardiness: f64) -> ScheduleMetrics {
        let mut m = ScheduleMetrics {
            init_tardiness,
            cant_task: self.tasks.len(),
            cant_resource: self.resources.len(),
            ..ScheduleMetrics::default()
        };
        for r in &self.resources {
            m.per_resource_tardiness.insert(r.id, 0.0);
        }
        for t in self.tasks.values() {
            let tard = t.tardiness();
            m.tot_tard += tard;
            m.total_wip += t.duration;
            m.max_tard = m.max_tard.max(tard);
            if tard > 0.0 {
                m.exceeded_tasks += 1;
            }
            if let Some(rid) = t.resource {
                *m.per_resource_tardiness.entry(rid).or_insert(0.0) += tard;
            }
        }
        if m.cant_task > 0 {
            m.avg_tard = m.tot_tard / m.cant_task as f64;
        }
        m
    }

    pub fn from_json(text: &str) -> Result<Self, ScheduleError> {
        let doc: ScheduleDoc = serde_json::from_str(text)?;
        doc.into_schedule()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&ScheduleDoc::from(self)).expect("schedule serializes")
    }
}

/// Global attributes that drive features, rewards and goals.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScheduleMetrics {
    #[serde(rename = "totTard")]
    pub tot_tard: f64,
    /// Total tardiness averaged over all tasks.
    #[serde(rename = "avgTard")]
    pub avg_tard: f64,
    #[serde(rename = "maxTard")]
    pub max_tard: f64,
    /// Total work content in hours.
    #[serde(rename = "totalWIP")]
    pub total_wip: f64,
    #[serde(rename = "cantTask")]
    pub cant_task: usize,
    #[serde(rename = "cantResource")]
    pub cant_resource: usize,
    #[serde(rename = "initTardiness")]
    pub init_tardiness: f64,
    #[serde(rename = "exceededTasks")]
    pub exceeded_tasks: usize,
    #[serde(rename = "perResourceTardiness")]
    pub per_resource_tardiness: BTreeMap<ResourceId, f64>,
}

#[derive(Debug, Serialize, Deserialize)]
pub(crate) struct ScheduleDoc {
    pub resources: Vec<ResourceDoc>,
    pub tasks: Vec<TaskDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
pub(crate) struct ResourceDoc {
    pub id: u32,
    pub name: String,
    pub rate: f64,
    pub capabilities: Vec<ProductId>,
    pub sequence: Vec<u32>,
}

#[derive(Debug, Serialize, Deserialize)]
pub(crate) struct TaskDoc {
    pub id: u32,
    pub name: String,
    pub product: ProductId,
    pub quantity: f64,
    pub due: f64,
}

impl ScheduleDoc {
    pub(crate) fn into_schedule(self) -> Result<Schedule, ScheduleError> {
        let mut violations = Vec::new();
        let mut tasks = BTreeMap::new();
        for t in self.tasks {
            let id = TaskId(t.id);
            if tasks.contains_key(&id) {
                violations.push(Violation::DuplicateTaskId { task: id });
                continue;
            }
            tasks.insert(id, Task::new(id, t.name, t.product, t.quantity, t.due));
        }
        let resources = self
            .resources
            .into_iter()
            .map(|r| Resource {
                id: ResourceId(r.id),
                name: r.name,
                capabilities: r.capabilities.into_iter().collect(),
                rate: r.rate,
                sequence: r.sequence.into_iter().map(TaskId).collect(),
            })
            .collect();
        let mut schedule = Schedule { resources, tasks };
        violations
            .extend(schedule.validate().into_iter().filter(|v| !matches!(v, Violation::StaleTiming { .. })));
        if !violations.is_empty() {
            return Err(ScheduleError::Structural(violations));
        }
        schedule.recompute_timing()?;
        Ok(schedule)
    }
}

impl From<&Schedule> for ScheduleDoc {
    fn from(s: &Schedule) -> Self {
        ScheduleDoc {
            resources: s
                .resources
                .iter()
                .map(|r| ResourceDoc {
                    id: r.id.0,
                    name: r.name.clone(),
                    rate: r.rate,
                    capabilities: r.capabilities.iter().copied().collect(),
                    sequence: r.sequence.iter().map(|t| t.0).collect(),
                })
                .collect(),
            tasks: s
                .tasks
                .values()
                .map(|t| TaskDoc {
                    id: t.id.0,
                    name: t.name.clone(),
                    product: t.product,
                    quantity: t.quantity,
                    due: t.due_date,
                })
                .collect(),
        }
    }
}
