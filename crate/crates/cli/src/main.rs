//! `sls`: train, evaluate, inspect and serve So Long Sucker agents.
//!
//! Exit codes: 0 success, 1 usage error, 2 runtime failure.

use std::fs;
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use sls_core::agents::AgentVariant;
use sls_core::config::RunConfig;
use sls_core::curves::emit_curves;
use sls_core::trace::EpisodeTrace;
use sls_core::training::{evaluate, load_policy, read_metrics, resume, train, EpisodeStats, EvalReport};
use sls_server::ServerConfig;

#[derive(Debug, Parser)]
#[command(name = "sls", version, about = "So Long Sucker reinforcement-learning toolkit")]
struct Cli {
    /// JSON run configuration; flags override its values.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train a learner and write metrics, checkpoints and traces.
    Train {
        #[arg(long)]
        variant: Option<AgentVariant>,
        #[arg(long)]
        episodes: Option<u32>,
        #[arg(long)]
        seed: Option<u64>,
        /// Write a replayable trace every N episodes (0 disables).
        #[arg(long)]
        trace_every: Option<u32>,
        /// Run directory [default: $SLS_OUT_DIR/<variant>-seed<seed>, with SLS_OUT_DIR defaulting to ./runs].
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Continue the run in this directory from its last snapshot.
        #[arg(long, value_name = "DIR", conflicts_with_all = ["variant", "seed", "out_dir", "trace_every"])]
        resume: Option<PathBuf>,
    },
    /// Evaluate a checkpoint with a frozen policy.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        episodes: Option<u32>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        epsilon: Option<f64>,
        /// Also write the report here.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Evaluate the uniform random agent.
    Baseline {
        #[arg(long)]
        episodes: Option<u32>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Draw moving-average learning curves from a metrics file.
    Plot {
        #[arg(long)]
        metrics: PathBuf,
        #[arg(long, default_value_t = 100)]
        window: usize,
        /// Output directory [default: next to the metrics file, in plots/].
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-simulate a trace and verify every recorded step.
    Replay {
        #[arg(long)]
        trace: PathBuf,
    },
    /// Run the game server.
    Serve {
        /// Default policy for agent seats.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: IpAddr,
        /// Directory with the web UI bundle.
        #[arg(long, value_name = "DIR")]
        r#static: Option<PathBuf>,
        /// Root for checkpoint paths named in session requests.
        #[arg(long, value_name = "DIR", default_value = ".")]
        checkpoint_dir: PathBuf,
        /// Pause before each automated move.
        #[arg(long, default_value_t = 400)]
        delay_ms: u64,
    },
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
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    match path {
        None => Ok(RunConfig::default()),
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
            RunConfig::from_json(&text).with_context(|| format!("in {}", p.display()))
        }
    }
}

fn print_report(report: &EvalReport, output: Option<&Path>) -> Result<()> {
    let json = serde_json::to_string_pretty(report)?;
    println!("{json}");
    if let Some(path) = output {
        fs::write(path, format!("{json}\n")).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn progress(every: u32) -> impl FnMut(&EpisodeStats) {
    move |s| {
        if every > 0 && s.episode % every == 0 {
            eprintln!(
                "episode {:>6}  reward {:>8.2}  steps {:>4}  illegal {:>3}  epsilon {:.3}",
                s.episode, s.reward, s.steps, s.illegal, s.epsilon
            );
        }
    }
}

fn summarize(stats: &[EpisodeStats], dir: &Path) {
    let tail = &stats[stats.len().saturating_sub(100)..];
    if tail.is_empty() {
        println!("nothing to do; run directory {}", dir.display());
        return;
    }
    let n = tail.len() as f64;
    println!(
        "{} episodes; last {} mean reward {:.2}, mean steps {:.2}; run directory {}",
        stats.len(),
        tail.len(),
        tail.iter().map(|s| s.reward).sum::<f64>() / n,
        tail.iter().map(|s| s.steps as f64).sum::<f64>() / n,
        dir.display()
    );
}

fn run(cli: Cli) -> Result<()> {
    let config = load_config(cli.config.as_deref())?;
    match cli.command {
        Command::Train {
            variant,
            episodes,
            seed,
            trace_every,
            out_dir,
            resume: resume_dir,
        } => {
            if let Some(dir) = resume_dir {
                let out = resume(&dir, episodes, progress(100))?;
                summarize(&out.stats, &dir);
                return Ok(());
            }
            let mut tc = config.train_config();
            tc.variant = variant.unwrap_or(tc.variant);
            tc.episodes = episodes.unwrap_or(tc.episodes);
            tc.seed = seed.unwrap_or(tc.seed);
            tc.trace_every = trace_every.unwrap_or(tc.trace_every);
            let dir = match out_dir.or(tc.out_dir.take()) {
                Some(d) => d,
                None => {
                    let base = std::env::var_os("SLS_OUT_DIR").map_or_else(|| PathBuf::from("runs"), PathBuf::from);
                    base.join(format!("{}-seed{}", tc.variant, tc.seed))
                }
            };
            tc.out_dir = Some(dir.clone());
            let out = train(tc, progress(100))?;
            summarize(&out.stats, &dir);
        }
        Command::Eval {
            checkpoint,
            episodes,
            seed,
            epsilon,
            output,
        } => {
            let (variant, net) = load_policy(&checkpoint)?;
            let mut ec = config.eval_config();
            ec.episodes = episodes.unwrap_or(ec.episodes);
            ec.seed = seed.unwrap_or(ec.seed);
            ec.epsilon = epsilon.unwrap_or(ec.epsilon);
            let report = evaluate(variant, Some(&net), Some(checkpoint.display().to_string()), &ec)?;
            print_report(&report, output.as_deref())?;
        }
        Command::Baseline { episodes, seed, output } => {
            let mut ec = config.eval_config();
            ec.episodes = episodes.unwrap_or(ec.episodes);
            ec.seed = seed.unwrap_or(ec.seed);
            let report = evaluate(AgentVariant::Random, None, None, &ec)?;
            print_report(&report, output.as_deref())?;
        }
        Command::Plot { metrics, window, out } => {
            let stats = read_metrics(&metrics)?;
            let dir = out.unwrap_or_else(|| metrics.parent().unwrap_or(Path::new(".")).join("plots"));
            for path in emit_curves(&stats, window, &dir)? {
                println!("{}", path.display());
            }
        }
        Command::Replay { trace } => {
            let t = EpisodeTrace::read(&trace).with_context(|| format!("reading {}", trace.display()))?;
            let summary = t.replay().with_context(|| format!("replaying {}", trace.display()))?;
            let winner = summary
                .winner
                .map_or_else(|| "none (truncated)".to_string(), |w| w.to_string());
            println!(
                "ok: {} steps verified, total reward {:.4}, winner {winner}",
                summary.steps, summary.total_reward
            );
        }
        Command::Serve {
            checkpoint,
            port,
            host,
            r#static,
            checkpoint_dir,
            delay_ms,
        } => {
            if !checkpoint_dir.is_dir() {
                bail!("checkpoint directory {} does not exist", checkpoint_dir.display());
            }
            let server = ServerConfig {
                checkpoint_root: checkpoint_dir,
                default_checkpoint: checkpoint,
                static_dir: r#static,
                delay: Duration::from_millis(delay_ms),
                ..ServerConfig::default()
            };
            let addr = SocketAddr::new(host, port);
            let runtime = tokio::runtime::Runtime::new()?;
            eprintln!("listening on http://{addr}");
            runtime.block_on(sls_server::serve(server, addr))?;
        }
    }
    Ok(())
}
