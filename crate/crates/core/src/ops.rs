//! Repair operators.
//!
//! An operator moves a *focal* task relative to an *auxiliary* task. The
//! kind is a triple: vertical (auxiliary starts earlier = `up`, later =
//! `down`), horizontal (auxiliary's resource id is lower = `left`, equal =
//! `same`, higher = `right`) and mode (`jump` re-inserts the focal task next
//! to the auxiliary, `swap` exchanges their positions).

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use crate::error::OpError;
use crate::schedule::{Schedule, Task, TaskId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Vertical {
    Down,
    Up,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Horizontal {
    Left,
    Right,
    Same,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Mode {
    Jump,
    Swap,
}

/// Variant order is alphabetical so the derived `Ord` matches name order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OperatorKind {
    pub vertical: Vertical,
    pub horizontal: Horizontal,
    pub mode: Mode,
}

impl OperatorKind {
    pub const fn new(vertical: Vertical, horizontal: Horizontal, mode: Mode) -> Self {
        Self { vertical, horizontal, mode }
    }

    /// All twelve kinds in name order.
    pub fn all() -> [OperatorKind; 12] {
        let mut out = [OperatorKind::new(Vertical::Down, Horizontal::Left, Mode::Jump); 12];
        let mut k = 0;
        for v in [Vertical::Down, Vertical::Up] {
            for h in [Horizontal::Left, Horizontal::Right, Horizontal::Same] {
                for m in [Mode::Jump, Mode::Swap] {
                    out[k] = OperatorKind::new(v, h, m);
                    k += 1;
                }
            }
        }
        out
    }

    pub fn name(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for OperatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = match self.vertical {
            Vertical::Up => "up",
            Vertical::Down => "down",
        };
        let h = match self.horizontal {
            Horizontal::Left => "left",
            Horizontal::Same => "same",
            Horizontal::Right => "right",
        };
        let m = match self.mode {
            Mode::Jump => "jump",
            Mode::Swap => "swap",
        };
        write!(f, "{v}-{h}-{m}")
    }
}

impl FromStr for OperatorKind {
    type Err = OpError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || OpError::UnknownKind(s.to_owned());
        let mut parts = s.split('-');
        let vertical = match parts.next() {
            Some("up") => Vertical::Up,
            Some("down") => Vertical::Down,
            _ => return Err(bad()),
        };
        let horizontal = match parts.next() {
            Some("left") => Horizontal::Left,
            Some("same") => Horizontal::Same,
            Some("right") => Horizontal::Right,
            _ => return Err(bad()),
        };
        let mode = match parts.next() {
            Some("jump") => Mode::Jump,
            Some("swap") => Mode::Swap,
            _ => return Err(bad()),
        };
        if parts.next().is_some() {
            return Err(bad());
        }
        Ok(OperatorKind::new(vertical, horizontal, mode))
    }
}

impl Serialize for OperatorKind {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for OperatorKind {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct OperatorInstance {
    pub kind: OperatorKind,
    pub focal: TaskId,
    pub auxiliary: TaskId,
}

impl fmt::Display for OperatorInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({}, {})", self.kind, self.focal, self.auxiliary)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailedPredicate {
    SameTask,
    Vertical,
    Horizontal,
    Capability,
}

impl fmt::Display for FailedPredicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FailedPredicate::SameTask => "focal and auxiliary are the same task",
            FailedPredicate::Vertical => "auxiliary start time is on the wrong side of the focal",
            FailedPredicate::Horizontal => "auxiliary resource is on the wrong side of the focal",
            FailedPredicate::Capability => "a resource cannot process the moved product",
        })
    }
}

fn first_failure(
    schedule: &Schedule,
    kind: OperatorKind,
    focal: &Task,
    aux: &Task,
) -> Option<FailedPredicate> {
    if focal.id == aux.id {
        return Some(FailedPredicate::SameTask);
    }
    let vertical_ok = match kind.vertical {
        Vertical::Up => aux.start() < focal.start(),
        Vertical::Down => aux.start() > focal.start(),
    };
    if !vertical_ok {
        return Some(FailedPredicate::Vertical);
    }
    let (Some(fr), Some(ar)) = (focal.resource(), aux.resource()) else {
        return Some(FailedPredicate::Horizontal);
    };
    let horizontal_ok = match kind.horizontal {
        Horizontal::Left => ar < fr,
        Horizontal::Same => ar == fr,
        Horizontal::Right => ar > fr,
    };
    if !horizontal_ok {
        return Some(FailedPredicate::Horizontal);
    }
    let can = |rid, product| schedule.resource(rid).is_some_and(|r| r.can_process(product));
    let capable = match kind.mode {
        Mode::Jump => can(ar, focal.product),
        Mode::Swap => can(ar, focal.product) && can(fr, aux.product),
    };
    (!capable).then_some(FailedPredicate::Capability)
}

fn lookup(schedule: &Schedule, id: TaskId) -> Result<&Task, OpError> {
    schedule.task(id).ok_or(OpError::UnknownTask(id))
}

/// The first precondition `op` breaks, if any.
pub fn check(schedule: &Schedule, op: &OperatorInstance) -> Result<Option<FailedPredicate>, OpError> {
    let focal = lookup(schedule, op.focal)?;
    let aux = lookup(schedule, op.auxiliary)?;
    Ok(first_failure(schedule, op.kind, focal, aux))
}

pub fn applicable(schedule: &Schedule, op: &OperatorInstance) -> Result<bool, OpError> {
    Ok(check(schedule, op)?.is_none())
}

/// Applies `op` to a copy of `schedule` and retimes it.
pub fn apply(schedule: &Schedule, op: &OperatorInstance) -> Result<Schedule, OpError> {
    if let Some(predicate) = check(schedule, op)? {
        return Err(OpError::Precondition { op: *op, predicate });
    }
    let focal = &schedule.tasks[&op.focal];
    let aux = &schedule.tasks[&op.auxiliary];
    let (fr, fk) = (focal.resource().expect("placed"), focal.seq_index());
    let (ar, ak) = (aux.resource().expect("placed"), aux.seq_index());
    let at = |rid, k| schedule.resource(rid).and_then(|r| r.sequence.get(k).copied());
    if at(fr, fk) != Some(op.focal) || at(ar, ak) != Some(op.auxiliary) {
        let stale = vec![crate::schedule::Violation::StaleTiming { task: op.focal }];
        return Err(OpError::Schedule(crate::error::ScheduleError::Structural(stale)));
    }

    let mut next = schedule.clone();
    match op.kind.mode {
        Mode::Swap => {
            next.resource_mut(fr).expect("resource").sequence[fk] = op.auxiliary;
            next.resource_mut(ar).expect("resource").sequence[ak] = op.focal;
        }
        Mode::Jump => {
            next.resource_mut(fr).expect("resource").sequence.remove(fk);
            let seq = &mut next.resource_mut(ar).expect("resource").sequence;
            let at = seq.iter().position(|&t| t == op.auxiliary).expect("auxiliary placed");
            let at = match op.kind.vertical {
                Vertical::Up => at,
                Vertical::Down => at + 1,
            };
            seq.insert(at, op.focal);
        }
    }
    next.recompute_timing()?;
    Ok(next)
}

/// Focal anchors: the `k` tardiest tasks (ties to the lower id), or the `k`
/// latest-finishing tasks when nothing is tardy.
pub fn focal_candidates(schedule: &Schedule, k: usize) -> Vec<TaskId> {
    let mut tardy: Vec<&Task> = schedule.tasks.values().filter(|t| t.tardiness() > 0.0).collect();
    if tardy.is_empty() {
        let mut all: Vec<&Task> = schedule.tasks.values().collect();
        all.sort_by(|a, b| b.finish().total_cmp(&a.finish()).then(a.id.cmp(&b.id)));
        return all.into_iter().take(k).map(|t| t.id).collect();
    }
    tardy.sort_by(|a, b| b.tardiness().total_cmp(&a.tardiness()).then(a.id.cmp(&b.id)));
    tardy.into_iter().take(k).map(|t| t.id).collect()
}

/// Every applicable instance anchored on the focal candidates, with up to
/// `k_aux` auxiliaries per (focal, kind) chosen nearest in start time.
/// Sorted by (kind name, focal, auxiliary).
pub fn propose(schedule: &Schedule, k_focal: usize, k_aux: usize) -> Vec<OperatorInstance> {
    let mut out = Vec::new();
    for fid in focal_candidates(schedule, k_focal) {
        let focal = &schedule.tasks[&fid];
        for kind in OperatorKind::all() {
            let mut aux: Vec<&Task> = schedule
                .tasks
                .values()
                .filter(|a| first_failure(schedule, kind, focal, a).is_none())
                .collect();
            aux.sort_by(|a, b| {
                let da = (a.start() - focal.start()).abs();
                let db = (b.start() - focal.start()).abs();
                da.total_cmp(&db).then(a.id.cmp(&b.id))
            });
            out.extend(aux.into_iter().take(k_aux).map(|a| OperatorInstance {
                kind,
                focal: fid,
                auxiliary: a.id,
            }));
        }
    }
    out.sort_by(cmp_instances);
    out.dedup();
    out
}

fn cmp_instances(a: &OperatorInstance, b: &OperatorInstance) -> Ordering {
    a.kind.cmp(&b.kind).then(a.focal.cmp(&b.focal)).then(a.auxiliary.cmp(&b.auxiliary))
}

/// One applied operator, as exported in operator traces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceRecord {
    pub kind: OperatorKind,
    pub focal: TaskId,
    pub auxiliary: TaskId,
    #[serde(rename = "totTard_after")]
    pub tot_tard_after: f64,
}

impl TraceRecord {
    pub fn instance(&self) -> OperatorInstance {
        OperatorInstance { kind: self.kind, focal: self.focal, auxiliary: self.auxiliary }
    }
}

/// JSON lines, one record per line, newline terminated.
pub fn write_trace(records: &[TraceRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("trace record serializes"));
        out.push('\n');
    }
    out
}

pub fn parse_trace(text: &str) -> Result<Vec<TraceRecord>, OpError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(k, l)| serde_json::from_str(l).map_err(|source| OpError::Trace { line: k + 1, source }))
        .collect()
}
