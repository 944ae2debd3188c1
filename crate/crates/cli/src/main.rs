use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use resched_cli::{
    cmd_gen, cmd_repair, cmd_train, load_plant_config, preset, HarnessError, RepairRequest, RunManifest,
};
use resched_core::{EpisodeSettings, GoalKind, LearnerConfig};

#[derive(Parser)]
#[command(name = "resched", version, about = "Learned repair policies for disrupted schedules")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a plant, its orders and the FIFO schedule.
    Gen(GenArgs),
    /// Train repair policies, one replicate per seed.
    Train(TrainArgs),
    /// Insert an order into a schedule and repair it with a policy.
    Repair(RepairArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, conflicts_with = "config", required_unless_present = "config")]
    preset: Option<String>,
    /// Plant configuration JSON instead of a preset.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long, default_value = "desk")]
    preset: String,
    #[arg(long, default_value = "tardiness")]
    goal: GoalKind,
    #[arg(long, default_value_t = 300)]
    episodes: usize,
    #[arg(long, default_value_t = LearnerConfig::default().alpha)]
    alpha: f64,
    #[arg(long, default_value_t = LearnerConfig::default().gamma)]
    gamma: f64,
    #[arg(long, default_value_t = LearnerConfig::default().lambda)]
    lambda: f64,
    #[arg(long, default_value_t = LearnerConfig::default().epsilon)]
    epsilon: f64,
    #[arg(long, default_value_t = LearnerConfig::default().n_buckets)]
    buckets: u32,
    /// Defaults to 200 for the desk preset and 2000 otherwise.
    #[arg(long)]
    max_steps: Option<usize>,
    /// Comma-separated replicate seeds.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    seeds: Vec<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RepairArgs {
    #[arg(long)]
    schedule: PathBuf,
    #[arg(long)]
    order: PathBuf,
    #[arg(long)]
    policy: PathBuf,
    #[arg(long, default_value = "tardiness")]
    goal: GoalKind,
    /// Keep repairing until totTard is at most this many hours.
    #[arg(long)]
    tard_limit: Option<f64>,
    /// Reject policies trained with a different bucket count.
    #[arg(long)]
    buckets: Option<u32>,
    #[arg(long, default_value_t = EpisodeSettings::default().max_steps)]
    max_steps: usize,
    #[arg(long)]
    out: PathBuf,
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Gen(a) => {
            let config = match (&a.preset, &a.config) {
                (Some(name), _) => preset(name)?,
                (None, Some(path)) => load_plant_config(path)?,
                (None, None) => unreachable!("clap requires one of --preset/--config"),
            };
            let s = cmd_gen(config, a.seed, &a.out)?;
            let m = &s.metrics;
            println!("{} resources, {} orders -> {}", s.resources, s.orders, a.out.display());
            println!(
                "totTard {:.2} h, exceededTasks {}, avgTard {:.2} h/t, maxTard {:.2} h, totalWIP {:.2} h",
                m.tot_tard, m.exceeded_tasks, m.avg_tard, m.max_tard, m.total_wip
            );
        }
        Command::Train(a) => {
            let learner = LearnerConfig {
                alpha: a.alpha,
                gamma: a.gamma,
                lambda: a.lambda,
                epsilon: a.epsilon,
                n_buckets: a.buckets,
                ..LearnerConfig::default()
            };
            let max_steps = a.max_steps.unwrap_or(EpisodeSettings::for_preset(&a.preset).max_steps);
            let manifest = RunManifest {
                preset: a.preset,
                goal: a.goal,
                learner,
                episodes: a.episodes,
                max_steps,
                seeds: a.seeds,
                out: a.out,
            };
            for run in cmd_train(&manifest)? {
                let steps: Vec<usize> = run.curve.steps().collect();
                let tail = &steps[steps.len().saturating_sub(50)..];
                println!(
                    "seed {}: {} episodes, mean steps (last {}) {:.1}, {} rules",
                    run.seed,
                    steps.len(),
                    tail.len(),
                    tail.iter().sum::<usize>() as f64 / tail.len() as f64,
                    run.policy.table.len()
                );
            }
            println!("wrote {}", manifest.out.display());
        }
        Command::Repair(a) => {
            let req = RepairRequest {
                schedule: a.schedule,
                order: a.order,
                policy: a.policy,
                goal: a.goal,
                abs_tard_limit: a.tard_limit,
                buckets: a.buckets,
                max_steps: a.max_steps,
                out: a.out,
            };
            print!("{}", cmd_repair(&req)?.render());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
