//! The repair decision cycle.
//!
//! Each step runs four phases against the current schedule:
//!
//! 1. **Input**: adopt the schedule produced by the previous step.
//! 2. **Elaboration**: derive metrics and per-candidate feature vectors.
//! 3. **Proposal-evaluation**: propose operators and pick one ε-greedily
//!    from the summed rule preferences.
//! 4. **Application**: apply it, observe the reward and mark the firing
//!    rules' traces.
//!
//! The TD backup for a step happens once the *next* operator has been
//! selected (on-policy SARSA), or with a zero target when the episode ends
//! at a goal state or with nothing left to propose.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::error::{CycleError, PlantError};
use crate::ops::{self, OperatorInstance, TraceRecord};
use crate::plant::{self, Order, Plant, PlantConfig};
use crate::rules::{
    self, abstract_features, Candidate, LearnerConfig, Policy, RewardMode, RuleTable, Selection, TraceSet,
};
use crate::schedule::{Schedule, ScheduleMetrics, TaskId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GoalKind {
    Tardiness,
    Stability,
    Balancing,
}

impl GoalKind {
    pub const ALL: [GoalKind; 3] = [GoalKind::Tardiness, GoalKind::Stability, GoalKind::Balancing];

    pub fn name(self) -> &'static str {
        match self {
            GoalKind::Tardiness => "tardiness",
            GoalKind::Stability => "stability",
            GoalKind::Balancing => "balancing",
        }
    }
}

impl fmt::Display for GoalKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GoalKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tardiness" | "tardiness_improvement" | "tardiness-improvement" => Ok(GoalKind::Tardiness),
            "stability" => Ok(GoalKind::Stability),
            "balancing" => Ok(GoalKind::Balancing),
            other => Err(format!("unknown goal {other:?}; expected tardiness, stability or balancing")),
        }
    }
}

/// Terminal predicate of a repair episode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RepairGoal {
    pub kind: GoalKind,
    /// Goal needs `totTard <= tard_threshold * initTardiness`.
    pub tard_threshold: f64,
    /// Largest tolerated fraction of displaced tasks.
    pub stability_threshold: f64,
    /// Optional absolute bound on total tardiness, hours.
    pub abs_tard_limit: Option<f64>,
}

impl RepairGoal {
    pub fn new(kind: GoalKind) -> Self {
        let (tard_threshold, stability_threshold) = match kind {
            GoalKind::Tardiness => (0.95, 1.0),
            GoalKind::Stability => (1.0, 0.2),
            GoalKind::Balancing => (0.975, 0.5),
        };
        Self { kind, tard_threshold, stability_threshold, abs_tard_limit: None }
    }

    pub fn validate(&self) -> Result<(), CycleError> {
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        if !unit(self.tard_threshold) || !unit(self.stability_threshold) {
            return Err(CycleError::Settings("goal thresholds must lie in [0, 1]".into()));
        }
        if let Some(limit) = self.abs_tard_limit {
            if !(limit.is_finite() && limit >= 0.0) {
                return Err(CycleError::Settings("abs_tard_limit must be >= 0".into()));
            }
        }
        Ok(())
    }
}

/// Fraction of the current tasks that sit at a different (resource,
/// position) than in `baseline`. Tasks absent from the baseline never count.
pub fn displaced_fraction(baseline: &Schedule, current: &Schedule) -> f64 {
    if current.tasks.is_empty() {
        return 0.0;
    }
    let before = baseline.placements();
    let displaced =
        current.placements().iter().filter(|(id, place)| before.get(id).is_some_and(|b| b != *place)).count();
    displaced as f64 / current.tasks.len() as f64
}

/// A goal state must also improve strictly on the initial tardiness, unless
/// that was already zero.
pub fn goal_reached(
    goal: &RepairGoal,
    metrics: &ScheduleMetrics,
    baseline: &Schedule,
    current: &Schedule,
) -> bool {
    let init = metrics.init_tardiness;
    let tot = metrics.tot_tard;
    let improved = init == 0.0 || tot < init;
    improved
        && tot <= goal.tard_threshold * init
        && goal.abs_tard_limit.is_none_or(|limit| tot <= limit)
        && displaced_fraction(baseline, current) <= goal.stability_threshold
}

/// Tardiness removed by a step, relative to the episode's initial
/// tardiness; raw hours when that is zero.
pub fn reward(before: &ScheduleMetrics, after: &ScheduleMetrics, init_tardiness: f64) -> f64 {
    let gain = before.tot_tard - after.tot_tard;
    if init_tardiness == 0.0 {
        gain
    } else {
        gain / init_tardiness
    }
}

fn step_reward(mode: RewardMode, before: &ScheduleMetrics, after: &ScheduleMetrics, init: f64) -> f64 {
    match mode {
        RewardMode::Normalized => reward(before, after, init),
        RewardMode::RawHours => before.tot_tard - after.tot_tard,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpisodeSettings {
    pub max_steps: usize,
    /// Focal anchors per proposal round.
    pub k_focal: usize,
    /// Auxiliaries per (focal, kind).
    pub k_aux: usize,
}

impl Default for EpisodeSettings {
    fn default() -> Self {
        Self { max_steps: 2000, k_focal: 5, k_aux: 3 }
    }
}

impl EpisodeSettings {
    /// Step cap for the desk preset.
    pub fn desk() -> Self {
        Self { max_steps: 200, ..Self::default() }
    }

    pub fn for_preset(name: &str) -> Self {
        match name {
            "desk" => Self::desk(),
            _ => Self::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    Goal,
    /// Nothing could be proposed.
    Irreparable,
    StepCap,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeResult {
    pub steps: usize,
    pub reached_goal: bool,
    pub termination: Termination,
    pub final_metrics: ScheduleMetrics,
    pub final_schedule: Schedule,
    pub rules_created_total: u64,
    pub operator_trace: Vec<TraceRecord>,
    /// One reward per applied operator.
    pub rewards: Vec<f64>,
}

enum Access<'a, R> {
    Learn { table: &'a mut RuleTable, traces: TraceSet, epsilon: f64, rng: &'a mut R },
    Frozen { table: &'a RuleTable, rng: Box<ChaCha8Rng> },
}

impl<R: Rng> Access<'_, R> {
    fn select(&mut self, candidates: &[Candidate]) -> Option<Selection> {
        match self {
            Access::Learn { table, epsilon, rng, .. } => {
                rules::select_operator(table, candidates, *epsilon, *rng).ok()
            }
            Access::Frozen { table, rng } => rules::select_greedy(table, candidates, rng.as_mut()).ok(),
        }
    }

    fn fired(&mut self, c: &Candidate) {
        if let Access::Learn { traces, .. } = self {
            rules::mark_fired(traces, &c.features, c.op.kind);
        }
    }

    fn backup(&mut self, q_sa: f64, reward: f64, q_next: f64, config: &LearnerConfig) {
        if let Access::Learn { table, traces, .. } = self {
            rules::td_update(table, traces, q_sa, reward, q_next, config);
        }
    }

    fn current_q(&self, c: &Candidate) -> f64 {
        match self {
            Access::Learn { table, .. } => table.peek_q(&c.features, c.op.kind),
            Access::Frozen { table, .. } => table.peek_q(&c.features, c.op.kind),
        }
    }

    fn created(&self) -> u64 {
        match self {
            Access::Learn { table, .. } => table.created_count(),
            Access::Frozen { table, .. } => table.created_count(),
        }
    }
}

/// Elaboration: feature vectors for every proposed operator. A candidate
/// that would restore `previous`, the schedule before the last step, is
/// dropped.
fn elaborate(
    schedule: &Schedule,
    metrics: &ScheduleMetrics,
    settings: &EpisodeSettings,
    n_buckets: u32,
    previous: Option<(&Schedule, &OperatorInstance)>,
) -> Result<Vec<Candidate>, CycleError> {
    let mut out = Vec::new();
    for op in ops::propose(schedule, settings.k_focal, settings.k_aux) {
        if let Some((before, last)) = previous {
            if undoes(schedule, before, last, &op)? {
                continue;
            }
        }
        let focal = schedule.tasks[&op.focal].tardiness();
        let aux = schedule.tasks[&op.auxiliary].tardiness();
        out.push(Candidate { op, features: abstract_features(metrics, focal, aux, n_buckets) });
    }
    Ok(out)
}

fn undoes(
    schedule: &Schedule,
    before: &Schedule,
    last: &OperatorInstance,
    op: &OperatorInstance,
) -> Result<bool, CycleError> {
    let moved = [last.focal, last.auxiliary];
    if !moved.contains(&op.focal) && !moved.contains(&op.auxiliary) {
        return Ok(false);
    }
    let next = ops::apply(schedule, op)?;
    Ok(next.resources.iter().zip(&before.resources).all(|(a, b)| a.sequence == b.sequence))
}

fn episode<R: Rng>(
    post: &Schedule,
    baseline: &Schedule,
    goal: &RepairGoal,
    config: &LearnerConfig,
    settings: &EpisodeSettings,
    mut access: Access<'_, R>,
) -> Result<EpisodeResult, CycleError> {
    let init = post.compute_metrics(0.0).tot_tard;
    let mut state = post.clone();
    let mut metrics = state.compute_metrics(init);
    let mut trace = Vec::new();
    let mut rewards = Vec::new();

    let finish =
        |state, metrics, termination, trace, rewards: Vec<f64>, access: &Access<'_, R>| EpisodeResult {
            steps: rewards.len(),
            reached_goal: termination == Termination::Goal,
            termination,
            final_metrics: metrics,
            final_schedule: state,
            rules_created_total: access.created(),
            operator_trace: trace,
            rewards,
        };

    if goal_reached(goal, &metrics, baseline, &state) {
        return Ok(finish(state, metrics, Termination::Goal, trace, rewards, &access));
    }
    if settings.max_steps == 0 {
        return Ok(finish(state, metrics, Termination::StepCap, trace, rewards, &access));
    }
    let mut candidates = elaborate(&state, &metrics, settings, config.n_buckets, None)?;
    let Some(mut selected) = access.select(&candidates) else {
        return Ok(finish(state, metrics, Termination::Irreparable, trace, rewards, &access));
    };

    loop {
        let chosen = candidates[selected.index];
        let next = ops::apply(&state, &chosen.op)?;
        let next_metrics = next.compute_metrics(init);
        let r = step_reward(config.reward_mode, &metrics, &next_metrics, init);
        access.fired(&chosen);
        trace.push(TraceRecord {
            kind: chosen.op.kind,
            focal: chosen.op.focal,
            auxiliary: chosen.op.auxiliary,
            tot_tard_after: next_metrics.tot_tard,
        });
        rewards.push(r);
        let before = std::mem::replace(&mut state, next);
        metrics = next_metrics;

        if goal_reached(goal, &metrics, baseline, &state) {
            access.backup(selected.q, r, 0.0, config);
            return Ok(finish(state, metrics, Termination::Goal, trace, rewards, &access));
        }
        candidates = elaborate(&state, &metrics, settings, config.n_buckets, Some((&before, &chosen.op)))?;
        let Some(next_sel) = access.select(&candidates) else {
            access.backup(selected.q, r, 0.0, config);
            return Ok(finish(state, metrics, Termination::Irreparable, trace, rewards, &access));
        };
        // A truncated episode still bootstraps from the operator it would
        // have applied next.
        access.backup(selected.q, r, next_sel.q, config);
        if rewards.len() >= settings.max_steps {
            return Ok(finish(state, metrics, Termination::StepCap, trace, rewards, &access));
        }
        selected = Selection { index: next_sel.index, q: access.current_q(&candidates[next_sel.index]) };
    }
}

/// One learning episode from the disrupted schedule `post`. `baseline` is
/// the pre-disruption schedule used to measure displacement.
#[allow(clippy::too_many_arguments)]
pub fn run_episode<R: Rng>(
    post: &Schedule,
    baseline: &Schedule,
    goal: &RepairGoal,
    table: &mut RuleTable,
    config: &LearnerConfig,
    settings: &EpisodeSettings,
    rng: &mut R,
) -> Result<EpisodeResult, CycleError> {
    let access = Access::Learn { table, traces: TraceSet::new(), epsilon: config.epsilon, rng };
    episode(post, baseline, goal, config, settings, access)
}

/// Greedy repair with a trained policy: no exploration, no learning and no
/// rule creation. Argmax ties are broken by a fixed-seed generator, so
/// results are reproducible.
pub fn repair(
    post: &Schedule,
    baseline: &Schedule,
    goal: &RepairGoal,
    policy: &Policy,
    settings: &EpisodeSettings,
) -> Result<EpisodeResult, CycleError> {
    let access: Access<'_, ChaCha8Rng> =
        Access::Frozen { table: &policy.table, rng: Box::new(ChaCha8Rng::seed_from_u64(0)) };
    episode(post, baseline, goal, &policy.config, settings, access)
}

/// A plant with its pre-disruption FIFO schedule.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub plant: Plant,
    pub baseline: Schedule,
}

#[derive(Debug, Clone)]
pub struct Disruption {
    pub order: Order,
    pub post: Schedule,
    pub post_metrics: ScheduleMetrics,
}

impl Scenario {
    /// Generates the plant from `config` and `config.n_orders` base orders
    /// from `seed`.
    pub fn generate(config: &PlantConfig, seed: u64) -> Result<Self, PlantError> {
        let plant = plant::generate_plant(config)?;
        let orders = plant::generate_orders(&plant, config.n_orders as usize, seed)?;
        let baseline = plant::fifo_schedule(&plant, &orders)?;
        Ok(Self { plant, baseline })
    }

    pub fn next_order_id(&self) -> TaskId {
        TaskId(self.baseline.tasks.keys().last().map_or(1, |t| t.0 + 1))
    }

    /// Samples a new order and inserts it FIFO.
    pub fn disrupt<R: Rng>(&self, rng: &mut R) -> Result<Disruption, PlantError> {
        let order = plant::sample_new_order(&self.plant, &self.baseline, self.next_order_id(), rng);
        self.disrupt_with(order)
    }

    pub fn disrupt_with(&self, order: Order) -> Result<Disruption, PlantError> {
        let (post, post_metrics) = plant::inject_new_order(&self.baseline, &order)?;
        Ok(Disruption { order, post, post_metrics })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DisruptionMode {
    /// A new order is sampled for every episode.
    #[default]
    Fresh,
    /// One order sampled up front and reused; for debugging.
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainOptions {
    pub episodes: usize,
    pub seed: u64,
    pub settings: EpisodeSettings,
    pub disruption: DisruptionMode,
}

impl TrainOptions {
    pub fn new(episodes: usize, seed: u64) -> Self {
        Self { episodes, seed, settings: EpisodeSettings::default(), disruption: DisruptionMode::Fresh }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRecord {
    pub episode: usize,
    pub steps: usize,
    pub reached_goal: bool,
    pub rules_total: u64,
    pub final_tottard: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingCurve {
    pub records: Vec<CurveRecord>,
}

impl TrainingCurve {
    pub const HEADER: &'static str = "episode,steps,reached_goal,rules_total,final_tottard";

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn steps(&self) -> impl Iterator<Item = usize> + '_ {
        self.records.iter().map(|r| r.steps)
    }

    /// Running mean of steps up to and including each episode.
    pub fn accumulated_average(&self) -> Vec<f64> {
        let mut sum = 0.0;
        self.records
            .iter()
            .enumerate()
            .map(|(k, r)| {
                sum += r.steps as f64;
                sum / (k + 1) as f64
            })
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        if self.records.is_empty() {
            w.write_record(Self::HEADER.split(',')).expect("in-memory write");
        }
        for r in &self.records {
            w.serialize(r).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
    }

    pub fn from_csv(text: &str) -> Result<Self, CycleError> {
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        let header = reader.headers()?.iter().collect::<Vec<_>>().join(",");
        if header != Self::HEADER {
            return Err(CycleError::Settings(format!("unexpected curve header {header:?}")));
        }
        let records = reader.deserialize().collect::<Result<Vec<CurveRecord>, _>>()?;
        Ok(Self { records })
    }
}

/// Trains a fresh table with SARSA(λ) and reports every finished episode
/// to `observe`.
pub fn train_with<F>(
    plant_config: &PlantConfig,
    goal: &RepairGoal,
    learner: &LearnerConfig,
    options: &TrainOptions,
    mut observe: F,
) -> Result<(RuleTable, TrainingCurve), CycleError>
where
    F: FnMut(usize, &Disruption, &EpisodeResult),
{
    if options.episodes == 0 {
        return Err(CycleError::Settings("training needs at least one episode".into()));
    }
    learner.validate()?;
    goal.validate()?;
    let scenario = Scenario::generate(plant_config, options.seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    rng.set_stream(1);
    let fixed = match options.disruption {
        DisruptionMode::Fixed => Some(scenario.disrupt(&mut rng)?),
        DisruptionMode::Fresh => None,
    };

    let mut table = RuleTable::new();
    let mut curve = TrainingCurve::default();
    for episode in 0..options.episodes {
        let disruption = match &fixed {
            Some(d) => d.clone(),
            None => scenario.disrupt(&mut rng)?,
        };
        let result = run_episode(
            &disruption.post,
            &scenario.baseline,
            goal,
            &mut table,
            learner,
            &options.settings,
            &mut rng,
        )?;
        curve.records.push(CurveRecord {
            episode: episode + 1,
            steps: result.steps,
            reached_goal: result.reached_goal,
            rules_total: result.rules_created_total,
            final_tottard: result.final_metrics.tot_tard,
        });
        observe(episode, &disruption, &result);
    }
    Ok((table, curve))
}

pub fn train(
    plant_config: &PlantConfig,
    goal: &RepairGoal,
    learner: &LearnerConfig,
    options: &TrainOptions,
) -> Result<(RuleTable, TrainingCurve), CycleError> {
    train_with(plant_config, goal, learner, options, |_, _, _| {})
}
