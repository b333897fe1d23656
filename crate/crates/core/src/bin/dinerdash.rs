use clap::{Parser, Subcommand, ValueEnum};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use dinerdash::baselines::{bc_train, BcHyper};
use dinerdash::dpgm::{dpgm_train, ActMode, DpgmHyper, Structures};
use dinerdash::harness::{compare, evaluate, load_policy_with_mode, serve_env, EvalReport, EVAL_EPISODES, EVAL_SEED_BASE};
use dinerdash::policy::{ExpertPolicy, Policy, RandomPolicy};
use dinerdash::rng::{Rng, Stream};
use dinerdash::sim::{Env, EnvConfig};
use dinerdash::trajectory::{record_episodes, Dataset};
use dinerdash::{Error, Result};

/// Diner Dash simulator, imitation learning pipeline and evaluation harness.
#[derive(Parser)]
#[command(name = "dinerdash", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Demonstrator {
    Expert,
    Random,
}

#[derive(Subcommand)]
enum Command {
    /// Record demonstration episodes to a JSON Lines dataset.
    Collect {
        #[arg(long, value_enum, default_value = "expert")]
        policy: Demonstrator,
        #[arg(long, default_value_t = 274)]
        episodes: usize,
        /// Episode k uses seed S + k.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Environment config (TOML); defaults to the hard preset.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Train a DPGM policy on a dataset.
    TrainDpgm {
        #[arg(long)]
        data: PathBuf,
        /// Per-action model structures (TOML); defaults to the bundled file.
        #[arg(long)]
        structures: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Skip the joint fine-tuning of graphs and reweighting network.
        #[arg(long)]
        no_finetune: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Train the behaviour-cloning baseline on a dataset.
    TrainBc {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 20)]
        epochs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Evaluate a policy over consecutive seeds.
    Eval {
        /// `expert`, `random`, or a checkpoint path.
        #[arg(long)]
        policy: String,
        #[arg(long, default_value_t = EVAL_EPISODES)]
        episodes: usize,
        #[arg(long, default_value_t = EVAL_SEED_BASE)]
        seed: u64,
        /// Write the report as JSON.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Name stored in the report (defaults to the policy kind).
        #[arg(long)]
        name: Option<String>,
        /// Sample DPGM actions from the softmax instead of taking the argmax.
        #[arg(long)]
        sample: bool,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Rank saved evaluation reports by mean return.
    Compare {
        #[arg(required = true, num_args = 2..)]
        reports: Vec<PathBuf>,
        /// Also write the ranking as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Serve one environment over newline-delimited JSON on stdin/stdout.
    Serve {
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Play one episode and print per-step results.
    Rollout {
        #[arg(long)]
        policy: String,
        #[arg(long, default_value_t = EVAL_SEED_BASE)]
        seed: u64,
        /// Print the restaurant after every step.
        #[arg(long)]
        render: bool,
        /// Stop after this many steps even if the episode continues.
        #[arg(long)]
        max_steps: Option<u64>,
        #[arg(long)]
        sample: bool,
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn load_config(path: &Option<PathBuf>) -> Result<EnvConfig> {
    match path {
        Some(p) => EnvConfig::load(p),
        None => Ok(EnvConfig::default()),
    }
}

fn mode(sample: bool) -> ActMode {
    if sample {
        ActMode::Sample
    } else {
        ActMode::Argmax
    }
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Collect { policy, episodes, seed, out, config } => {
            let cfg = load_config(&config)?;
            let p: Box<dyn Policy> = match policy {
                Demonstrator::Expert => Box::new(ExpertPolicy::default()),
                Demonstrator::Random => Box::new(RandomPolicy),
            };
            let s = record_episodes(&cfg, &p, episodes, seed, &out)?;
            println!(
                "recorded {} episodes, {} pairs (mean length {:.1}, mean return {:.2}) to {}",
                s.n_episodes,
                s.n_pairs,
                s.mean_length,
                s.mean_return,
                out.display()
            );
        }
        Command::TrainDpgm { data, structures, out, no_finetune, seed } => {
            let ds = Dataset::load(&data)?;
            let st = match structures {
                Some(p) => Structures::load(&p, ds.config())?,
                None => Structures::default_for(ds.config()),
            };
            let hyper = DpgmHyper { finetune: !no_finetune, seed, ..Default::default() };
            let (policy, report) = dpgm_train(&ds, &st, &hyper)?;
            if !report.zero_positive_actions.is_empty() {
                eprintln!(
                    "warning: no positive examples for actions {:?}; their models only saw negatives",
                    report.zero_positive_actions
                );
            }
            policy.save(&out)?;
            println!(
                "trained dpgm on {} pairs: training accuracy {:.4}, reweighting loss {:.5}{}; saved to {}",
                ds.transitions.len(),
                report.train_accuracy,
                report.reweight_losses.last().copied().unwrap_or(f64::NAN),
                report.finetune_losses.last().map(|l| format!(", fine-tune loss {l:.5}")).unwrap_or_default(),
                out.display()
            );
        }
        Command::TrainBc { data, out, epochs, seed } => {
            let ds = Dataset::load(&data)?;
            let (policy, report) = bc_train(&ds, &BcHyper { epochs, seed, ..Default::default() })?;
            policy.save(&out)?;
            println!(
                "trained bc on {} pairs: loss {:.4} -> {:.4}, training accuracy {:.4}; saved to {}",
                ds.transitions.len(),
                report.losses.first().copied().unwrap_or(f64::NAN),
                report.losses.last().copied().unwrap_or(f64::NAN),
                report.train_accuracy,
                out.display()
            );
        }
        Command::Eval { policy, episodes, seed, report, name, sample, config } => {
            let cfg = load_config(&config)?;
            let p = load_policy_with_mode(&policy, mode(sample))?;
            let mut r = evaluate(&cfg, &p, episodes, seed)?;
            if let Some(n) = name {
                r.policy = n;
            }
            println!(
                "{}: mean {:.2} std {:.2} min {:.2} max {:.2} over {} episodes (mean length {:.1})",
                r.policy,
                r.mean,
                r.std,
                r.min,
                r.max,
                r.n_episodes,
                r.mean_length()
            );
            if let Some(path) = report {
                r.save(&path)?;
            }
        }
        Command::Compare { reports, csv } => {
            let loaded = reports.iter().map(|p| EvalReport::load(p)).collect::<Result<Vec<_>>>()?;
            let c = compare(&loaded)?;
            for w in &c.warnings {
                eprintln!("warning: {w}");
            }
            print!("{}", c.to_text());
            if let Some(path) = csv {
                write(&path, &c.to_csv())?;
            }
        }
        Command::Serve { config } => {
            let cfg = load_config(&config)?;
            let stdin = std::io::stdin();
            serve_env(&cfg, stdin.lock(), std::io::stdout().lock())?;
        }
        Command::Rollout { policy, seed, render, max_steps, sample, config } => {
            let cfg = load_config(&config)?;
            let p = load_policy_with_mode(&policy, mode(sample))?;
            let mut env = Env::new(cfg, seed)?;
            let mut rng = Rng::stream(seed, Stream::Policy);
            env.reset();
            if render {
                println!("{}", env.render_text());
            }
            let mut total = 0.0;
            loop {
                let a = p.act(&env, &mut rng);
                let step = env.step(a)?;
                total += step.reward;
                println!(
                    "step {:>4}  action {:>2}  reward {:>7.2}  return {:>8.2}  lives {}",
                    step.info.step_count, a, step.reward, total, step.info.lives
                );
                if render {
                    println!("{}", env.render_text());
                }
                if step.done || max_steps.is_some_and(|m| step.info.step_count >= m) {
                    break;
                }
            }
            println!("episode return {total:.2}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_data_error() { 2 } else { 1 })
        }
    }
}
