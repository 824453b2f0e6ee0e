//! `croprl`: simulate scripted or trained irrigation policies, train PPO,
//! and evaluate checkpoints.
//!
//! Exit status is 0 on success, 1 for usage errors and 2 for runtime errors.
//! Log verbosity follows `CROPRL_LOG` (e.g. `CROPRL_LOG=info`).

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use croprl::episode::{episode_csv, evaluate, run_episode, summary_csv, write_atomic, Evaluation};
use croprl::rl::checkpoint::{load_checkpoint, save_checkpoint};
use croprl::rl::train::{history_csv, train_with};
use croprl::rl::{GaussianPolicy, PolicyParameters, PpoConfig};
use croprl::{ConstantPolicy, Execution, Policy, PolicySpec, Scenario};

#[derive(Parser)]
#[command(
    name = "croprl",
    version,
    about = "Crop irrigation environment and PPO trainer"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one season with a fixed policy and write its daily log.
    Simulate(SimulateArgs),
    /// Train a PPO policy and write its learning curve and checkpoint.
    Train(TrainArgs),
    /// Evaluate a policy over several seeded seasons.
    Evaluate(EvaluateArgs),
}

#[derive(Args)]
struct Common {
    /// Scenario TOML file.
    #[arg(long)]
    scenario: PathBuf,
    /// Overrides the scenario's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Run on the calling thread only.
    #[arg(long)]
    sequential: bool,
}

impl Common {
    fn load(&self) -> Result<(Scenario, u64)> {
        let scenario = Scenario::load(&self.scenario)
            .with_context(|| format!("loading scenario {}", self.scenario.display()))?;
        let seed = self.seed.unwrap_or(scenario.seed);
        Ok((scenario, seed))
    }

    fn execution(&self) -> Execution {
        if self.sequential {
            Execution::Sequential
        } else {
            Execution::default()
        }
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    /// `zero`, `constant:<mm>` or `checkpoint:<path>`.
    #[arg(long, default_value = "constant:10")]
    policy: String,
    /// Sample from a trained policy instead of using its mean action.
    #[arg(long)]
    stochastic: bool,
    /// Output directory for episode.csv and summary.csv.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    common: Common,
    /// PPO settings as TOML; omitted keys take defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    iterations: Option<usize>,
    /// Episodes collected per iteration.
    #[arg(long)]
    episodes: Option<usize>,
    /// Also save the checkpoint every N iterations.
    #[arg(long, value_name = "N")]
    checkpoint_every: Option<usize>,
    /// Output directory for history.csv and policy.json.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    common: Common,
    /// `zero`, `constant:<mm>` or `checkpoint:<path>`.
    #[arg(
        long,
        conflicts_with = "checkpoint",
        required_unless_present = "checkpoint"
    )]
    policy: Option<String>,
    /// Shorthand for `--policy checkpoint:<path>`.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    episodes: usize,
    #[arg(long)]
    stochastic: bool,
    /// Optional directory for evaluation.csv.
    #[arg(long)]
    out: Option<PathBuf>,
}

enum LoadedPolicy {
    Constant(f64),
    Trained(PolicyParameters),
}

impl LoadedPolicy {
    fn from_spec(spec: &str) -> Result<Self> {
        let spec: PolicySpec = spec.parse()?;
        Ok(match spec {
            PolicySpec::Constant(level) => LoadedPolicy::Constant(level),
            PolicySpec::Checkpoint(path) => LoadedPolicy::Trained(
                load_checkpoint(&path)
                    .with_context(|| format!("loading checkpoint {}", path.display()))?,
            ),
        })
    }

    fn build(&self, stochastic: bool, seed: u64) -> croprl::Result<Box<dyn Policy + '_>> {
        Ok(match self {
            LoadedPolicy::Constant(level) => Box::new(ConstantPolicy::new(*level)?),
            LoadedPolicy::Trained(p) if stochastic => Box::new(GaussianPolicy::stochastic(p, seed)),
            LoadedPolicy::Trained(p) => Box::new(GaussianPolicy::deterministic(p)),
        })
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let (scenario, seed) = args.common.load()?;
    let policy = LoadedPolicy::from_spec(&args.policy)?;
    let mut actor = policy.build(args.stochastic, seed)?;
    let log = run_episode(&scenario, actor.as_mut(), seed)?;
    ensure_dir(&args.out)?;
    write_atomic(args.out.join("episode.csv"), &episode_csv(&log)?)?;
    write_atomic(args.out.join("summary.csv"), &summary_csv(&log.summary)?)?;
    let s = &log.summary;
    println!(
        "days {}  yield {:.3} t/ha  irrigation {:.1} mm  return {:.4}  normalized {:.4}",
        s.days, s.yield_t_ha, s.total_irrigation, s.episode_return, s.normalized_return
    );
    Ok(())
}

fn train_cmd(args: TrainArgs) -> Result<()> {
    let (scenario, seed) = args.common.load()?;
    let mut cfg = match &args.config {
        Some(path) => PpoConfig::load(path)?,
        None => PpoConfig::default(),
    };
    if let Some(n) = args.iterations {
        cfg.iterations = n;
    }
    if let Some(n) = args.episodes {
        cfg.episodes_per_iteration = n;
    }
    if args.checkpoint_every == Some(0) {
        anyhow::bail!("--checkpoint-every must be at least 1");
    }
    ensure_dir(&args.out)?;
    let checkpoint = args.out.join("policy.json");

    let mut save_error = None;
    let outcome = train_with(
        &scenario,
        &cfg,
        seed,
        args.common.execution(),
        |row, params| {
            log::info!(
                "iteration {:>4}  steps {:>8}  normalized return {:.4}  irrigation {:.1} mm",
                row.iteration,
                row.env_steps,
                row.normalized_return,
                row.mean_irrigation
            );
            if let Some(every) = args.checkpoint_every {
                if (row.iteration + 1) % every == 0 && save_error.is_none() {
                    save_error = save_checkpoint(&checkpoint, params).err();
                }
            }
        },
    )?;
    if let Some(e) = save_error {
        return Err(e).context("writing periodic checkpoint");
    }

    write_atomic(
        args.out.join("history.csv"),
        &history_csv(&outcome.history)?,
    )?;
    save_checkpoint(&checkpoint, &outcome.params)?;
    match outcome.history.last() {
        Some(last) => println!(
            "{} iterations, {} steps; last iteration normalized return {:.4}",
            outcome.history.len(),
            last.env_steps,
            last.normalized_return
        ),
        None => println!("0 iterations; wrote the initial policy"),
    }
    Ok(())
}

fn evaluation_csv(eval: &Evaluation) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    writeln!(
        out,
        "seed,days,matured,yield_t_ha,total_irrigation,episode_return,normalized_return"
    )?;
    for s in &eval.episodes {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            s.seed,
            s.days,
            s.matured,
            s.yield_t_ha,
            s.total_irrigation,
            s.episode_return,
            s.normalized_return
        )?;
    }
    Ok(out)
}

fn evaluate_cmd(args: EvaluateArgs) -> Result<()> {
    let (scenario, seed) = args.common.load()?;
    let spec = match (&args.policy, &args.checkpoint) {
        (Some(spec), _) => spec.clone(),
        (None, Some(path)) => format!("checkpoint:{}", path.display()),
        (None, None) => unreachable!("clap requires one of --policy or --checkpoint"),
    };
    let policy = LoadedPolicy::from_spec(&spec)?;
    let eval = evaluate(
        &scenario,
        args.episodes,
        seed,
        args.common.execution(),
        |s| policy.build(args.stochastic, s),
    )?;
    if let Some(dir) = &args.out {
        ensure_dir(dir)?;
        write_atomic(dir.join("evaluation.csv"), &evaluation_csv(&eval)?)?;
    }
    println!(
        "episodes {}  return {:.4} +/- {:.4}  normalized {:.4} +/- {:.4}",
        eval.episodes.len(),
        eval.mean_return,
        eval.std_return,
        eval.mean_normalized,
        eval.std_normalized
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("CROPRL_LOG", "warn")).init();

    let result = match cli.command {
        Command::Simulate(args) => simulate(args),
        Command::Train(args) => train_cmd(args),
        Command::Evaluate(args) => evaluate_cmd(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
