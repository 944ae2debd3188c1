//! Experiment harness behind the `resched` binary: instance generation,
//! replicated training runs and policy-driven repair with a report.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use log::info;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use resched_core::cycle::{Disruption, EpisodeSettings, TrainOptions, TrainingCurve};
use resched_core::ops::write_trace;
use resched_core::plant::{self, fifo_schedule, generate_orders, generate_plant, Order};
use resched_core::{
    repair, train, CycleError, GoalKind, LearnerConfig, OpError, PlantConfig, PlantError, Policy,
    PolicyError, RepairGoal, Schedule, ScheduleError, ScheduleMetrics,
};

#[derive(Debug, Error)]
pub enum HarnessError {
    /// Bad arguments or an inconsistent configuration.
    #[error("{0}")]
    Usage(String),
    /// Unreadable, malformed or infeasible input data.
    #[error("{0}")]
    Data(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Usage(_) => 1,
            HarnessError::Data(_) | HarnessError::Io { .. } => 2,
        }
    }

    fn data(path: &Path, err: impl std::fmt::Display) -> Self {
        HarnessError::Data(format!("{}: {err}", path.display()))
    }
}

impl From<CycleError> for HarnessError {
    fn from(err: CycleError) -> Self {
        match err {
            CycleError::Settings(_)
            | CycleError::Policy(PolicyError::Config(_))
            | CycleError::Plant(PlantError::Config(_)) => HarnessError::Usage(err.to_string()),
            _ => HarnessError::Data(err.to_string()),
        }
    }
}

impl From<PlantError> for HarnessError {
    fn from(err: PlantError) -> Self {
        match err {
            PlantError::Config(_) => HarnessError::Usage(err.to_string()),
            _ => HarnessError::Data(err.to_string()),
        }
    }
}

fn read(path: &Path) -> Result<String, HarnessError> {
    fs::read_to_string(path).map_err(|source| HarnessError::Io { path: path.into(), source })
}

fn write(path: &Path, contents: &str) -> Result<(), HarnessError> {
    fs::write(path, contents).map_err(|source| HarnessError::Io { path: path.into(), source })
}

fn ensure_dir(dir: &Path) -> Result<(), HarnessError> {
    fs::create_dir_all(dir).map_err(|source| HarnessError::Io { path: dir.into(), source })
}

fn pretty<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("harness documents serialize");
    text.push('\n');
    text
}

/// Resolves a preset name, listing the known ones on failure.
pub fn preset(name: &str) -> Result<PlantConfig, HarnessError> {
    PlantConfig::preset(name).ok_or_else(|| {
        HarnessError::Usage(format!(
            "unknown preset {name:?}; available presets: {}",
            PlantConfig::PRESETS.join(", ")
        ))
    })
}

pub fn load_plant_config(path: &Path) -> Result<PlantConfig, HarnessError> {
    PlantConfig::from_json(&read(path)?).map_err(|e| match e {
        PlantError::Config(_) => HarnessError::Usage(format!("{}: {e}", path.display())),
        _ => HarnessError::data(path, e),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenSummary {
    pub resources: usize,
    pub orders: usize,
    pub metrics: ScheduleMetrics,
}

/// Writes `plant.json`, `orders.json` and the FIFO `schedule.json`.
pub fn cmd_gen(mut config: PlantConfig, seed: u64, out: &Path) -> Result<GenSummary, HarnessError> {
    config.seed = seed;
    config.validate()?;
    let plant = generate_plant(&config)?;
    let orders = generate_orders(&plant, config.n_orders as usize, seed)?;
    let schedule = fifo_schedule(&plant, &orders)?;
    ensure_dir(out)?;
    write(&out.join("plant.json"), &(plant.to_json() + "\n"))?;
    write(&out.join("orders.json"), &pretty(&orders))?;
    write(&out.join("schedule.json"), &(schedule.to_json() + "\n"))?;
    let metrics = schedule.compute_metrics(0.0);
    Ok(GenSummary { resources: plant.resources.len(), orders: orders.len(), metrics })
}

/// Everything that determines a training run's outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub preset: String,
    pub goal: GoalKind,
    pub learner: LearnerConfig,
    pub episodes: usize,
    pub max_steps: usize,
    pub seeds: Vec<u64>,
    pub out: PathBuf,
}

impl RunManifest {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.seeds.is_empty() {
            return Err(HarnessError::Usage("at least one seed is required".into()));
        }
        let mut seen = self.seeds.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != self.seeds.len() {
            return Err(HarnessError::Usage("seeds must be distinct".into()));
        }
        if self.episodes == 0 {
            return Err(HarnessError::Usage("episodes must be at least 1".into()));
        }
        self.learner.validate().map_err(|e| HarnessError::Usage(e.to_string()))?;
        preset(&self.preset)?;
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SeedRun {
    pub seed: u64,
    pub curve: TrainingCurve,
    pub policy: Policy,
}

#[derive(Debug, Serialize)]
struct AggregateRow {
    episode: usize,
    mean_steps: f64,
    accumulated_avg_steps: f64,
    mean_rules_total: f64,
    goal_rate: f64,
}

/// Per-episode means over replicates plus the running mean of steps.
pub fn aggregate_csv(runs: &[SeedRun]) -> String {
    let n = runs.len() as f64;
    let episodes = runs.iter().map(|r| r.curve.len()).min().unwrap_or(0);
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut acc = 0.0;
    for k in 0..episodes {
        let recs = runs.iter().map(|r| &r.curve.records[k]);
        let mean_steps = recs.clone().map(|r| r.steps as f64).sum::<f64>() / n;
        acc += mean_steps;
        w.serialize(AggregateRow {
            episode: k + 1,
            mean_steps,
            accumulated_avg_steps: acc / (k + 1) as f64,
            mean_rules_total: recs.clone().map(|r| r.rules_total as f64).sum::<f64>() / n,
            goal_rate: recs.filter(|r| r.reached_goal).count() as f64 / n,
        })
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
}

/// Trains one replicate per seed concurrently and writes per-seed curves
/// and policies, the aggregate curve, `policy.json` (lowest seed) and the
/// manifest itself.
pub fn cmd_train(manifest: &RunManifest) -> Result<Vec<SeedRun>, HarnessError> {
    manifest.validate()?;
    let config = preset(&manifest.preset)?;
    let goal = RepairGoal::new(manifest.goal);
    ensure_dir(&manifest.out)?;

    let results: Vec<Result<SeedRun, CycleError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = manifest
            .seeds
            .iter()
            .map(|&seed| {
                let (config, goal) = (&config, &goal);
                scope.spawn(move || {
                    let mut options = TrainOptions::new(manifest.episodes, seed);
                    options.settings.max_steps = manifest.max_steps;
                    let (table, curve) = train(config, goal, &manifest.learner, &options)?;
                    info!("seed {seed}: {} episodes, {} rules", curve.len(), table.len());
                    Ok(SeedRun { seed, curve, policy: Policy { config: manifest.learner, table } })
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("training thread panicked")).collect()
    });
    let mut runs = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    runs.sort_by_key(|r| r.seed);

    for run in &runs {
        write(&manifest.out.join(format!("curve_seed_{}.csv", run.seed)), &run.curve.to_csv())?;
        write(&manifest.out.join(format!("policy_seed_{}.json", run.seed)), &(run.policy.to_json() + "\n"))?;
    }
    write(&manifest.out.join("aggregate_curve.csv"), &aggregate_csv(&runs))?;
    write(&manifest.out.join("policy.json"), &(runs[0].policy.to_json() + "\n"))?;
    write(&manifest.out.join("manifest.json"), &pretty(manifest))?;
    Ok(runs)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub initial: f64,
    pub post_insertion: f64,
    pub repaired: f64,
}

impl ReportRow {
    fn new(f: impl Fn(&ScheduleMetrics) -> f64, m: [&ScheduleMetrics; 3]) -> Self {
        Self { initial: f(m[0]), post_insertion: f(m[1]), repaired: f(m[2]) }
    }
}

/// Initial, post-insertion and repaired metrics side by side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepairReport {
    #[serde(rename = "totTard")]
    pub tot_tard: ReportRow,
    #[serde(rename = "exceededTasks")]
    pub exceeded_tasks: ReportRow,
    #[serde(rename = "avgTard")]
    pub avg_tard: ReportRow,
    #[serde(rename = "totalWIP")]
    pub total_wip: ReportRow,
    /// Percent reduction of totTard relative to the post-insertion schedule.
    pub reduction_vs_post_pct: f64,
    /// Percent reduction of totTard relative to the initial schedule.
    pub reduction_vs_initial_pct: f64,
    pub steps: usize,
    pub reached_goal: bool,
}

fn reduction_pct(from: f64, to: f64) -> f64 {
    if from == 0.0 {
        0.0
    } else {
        100.0 * (from - to) / from
    }
}

impl RepairReport {
    pub fn new(
        initial: &ScheduleMetrics,
        post: &ScheduleMetrics,
        repaired: &ScheduleMetrics,
        steps: usize,
        reached_goal: bool,
    ) -> Self {
        let m = [initial, post, repaired];
        Self {
            tot_tard: ReportRow::new(|m| m.tot_tard, m),
            exceeded_tasks: ReportRow::new(|m| m.exceeded_tasks as f64, m),
            avg_tard: ReportRow::new(|m| m.avg_tard, m),
            total_wip: ReportRow::new(|m| m.total_wip, m),
            reduction_vs_post_pct: reduction_pct(post.tot_tard, repaired.tot_tard),
            reduction_vs_initial_pct: reduction_pct(initial.tot_tard, repaired.tot_tard),
            steps,
            reached_goal,
        }
    }

    /// Plain-text table for the terminal.
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:<22}{:>12}{:>16}{:>12}", "", "initial", "post-insertion", "repaired");
        let rows = [
            ("Total Tardiness (h)", &self.tot_tard, 2),
            ("Exceeded Tasks (#)", &self.exceeded_tasks, 0),
            ("Avg. Tardiness (h/t)", &self.avg_tard, 2),
            ("Total WIP (h)", &self.total_wip, 2),
        ];
        for (label, row, p) in rows {
            let _ = writeln!(
                s,
                "{label:<22}{:>12.p$}{:>16.p$}{:>12.p$}",
                row.initial, row.post_insertion, row.repaired
            );
        }
        let _ = writeln!(s, "reduction vs post-insertion: {:.1}%", self.reduction_vs_post_pct);
        let _ = writeln!(s, "reduction vs initial: {:.1}%", self.reduction_vs_initial_pct);
        let _ = writeln!(
            s,
            "{} operators applied, goal {}",
            self.steps,
            if self.reached_goal { "reached" } else { "not reached" }
        );
        s
    }
}

#[derive(Debug, Clone)]
pub struct RepairRequest {
    pub schedule: PathBuf,
    pub order: PathBuf,
    pub policy: PathBuf,
    pub goal: GoalKind,
    /// Also require the repaired totTard to be at most this many hours.
    pub abs_tard_limit: Option<f64>,
    /// Bucket count the caller expects the policy to use.
    pub buckets: Option<u32>,
    pub max_steps: usize,
    pub out: PathBuf,
}

/// Injects the order into the schedule, repairs it with the policy and
/// writes `repaired_schedule.json`, `trace.jsonl` and `report.json`.
pub fn cmd_repair(req: &RepairRequest) -> Result<RepairReport, HarnessError> {
    let schedule = Schedule::from_json(&read(&req.schedule)?).map_err(|e| match e {
        ScheduleError::Parse(_) | ScheduleError::Structural(_) => HarnessError::data(&req.schedule, e),
    })?;
    let order = Order::from_json(&read(&req.order)?).map_err(|e| HarnessError::data(&req.order, e))?;
    let policy = Policy::from_json(&read(&req.policy)?).map_err(|e| HarnessError::data(&req.policy, e))?;
    if let Some(n) = req.buckets {
        policy
            .expect_buckets(n)
            .map_err(|e| HarnessError::Usage(format!("{}: {e}", req.policy.display())))?;
    }
    let mut goal = RepairGoal::new(req.goal);
    goal.abs_tard_limit = req.abs_tard_limit;
    goal.validate()?;

    let initial = schedule.compute_metrics(0.0);
    let (post, post_metrics) = plant::inject_new_order(&schedule, &order)?;
    let disruption = Disruption { order, post, post_metrics };
    let settings = EpisodeSettings { max_steps: req.max_steps, ..EpisodeSettings::default() };
    let result = repair(&disruption.post, &schedule, &goal, &policy, &settings)?;

    let report = RepairReport::new(
        &initial,
        &disruption.post_metrics,
        &result.final_metrics,
        result.steps,
        result.reached_goal,
    );
    ensure_dir(&req.out)?;
    write(&req.out.join("repaired_schedule.json"), &(result.final_schedule.to_json() + "\n"))?;
    write(&req.out.join("trace.jsonl"), &write_trace(&result.operator_trace))?;
    write(&req.out.join("report.json"), &pretty(&report))?;
    Ok(report)
}

/// Replays an exported operator trace onto `post`.
pub fn replay_trace(post: &Schedule, trace: &str) -> Result<Schedule, HarnessError> {
    let records = resched_core::ops::parse_trace(trace).map_err(|e| HarnessError::Data(e.to_string()))?;
    let mut state = post.clone();
    for r in records {
        state = resched_core::apply(&state, &r.instance())
            .map_err(|e: OpError| HarnessError::Data(e.to_string()))?;
    }
    Ok(state)
}
