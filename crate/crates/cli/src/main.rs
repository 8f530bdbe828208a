use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use swarm_cli::commands::{self, CliError};
use swarm_cli::render::RenderOptions;
use swarm_core::config::ExperimentConfig;

#[derive(Parser)]
#[command(name = "swarm", version, about = "Collision-free gathering pattern discovery for fat robot swarms")]
struct Cli {
    /// Only print warnings and errors.
    #[arg(long, global = true, env = "SWARM_QUIET")]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Source {
    /// Experiment config file (TOML).
    #[arg(long, env = "SWARM_CONFIG")]
    config: Option<PathBuf>,
    /// Preset id A-F, or a label for --config runs.
    #[arg(long, env = "SWARM_EXPERIMENT")]
    experiment: Option<String>,
    /// Override the number of PPO epochs.
    #[arg(long)]
    epochs: Option<usize>,
}

impl Source {
    fn resolve(&self) -> anyhow::Result<(String, ExperimentConfig)> {
        let (label, mut cfg) = commands::resolve_config(self.config.as_deref(), self.experiment.as_deref())?;
        if let Some(z) = self.epochs {
            cfg.ppo.epochs = z;
        }
        Ok((label, cfg))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Train one policy and write checkpoints and per-epoch metrics.
    Train {
        #[command(flatten)]
        source: Source,
        #[arg(long, env = "SWARM_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long, env = "SWARM_OUT", default_value = "runs/train")]
        out: PathBuf,
    },
    /// Train a base/auxiliary chain and validate the patterns it forms.
    Discover {
        #[command(flatten)]
        source: Source,
        #[arg(long, env = "SWARM_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long, env = "SWARM_OUT", default_value = "runs/discover")]
        out: PathBuf,
    },
    /// Run a saved chain on fresh start states.
    Evaluate {
        /// Chain bundle directory.
        #[arg(long)]
        chain: PathBuf,
        #[arg(long, env = "SWARM_EPISODES", default_value_t = 20)]
        episodes: usize,
        #[arg(long, env = "SWARM_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long, env = "SWARM_OUT", default_value = "runs/evaluate")]
        out: PathBuf,
    },
    /// Mean pattern-formation steps for chains under RUNS/<id>/chain.
    Bench {
        #[arg(long, default_value = "runs")]
        runs: PathBuf,
        /// Experiment ids (repeatable, or comma separated).
        #[arg(long, required = true, value_delimiter = ',')]
        experiment: Vec<String>,
        #[arg(long, env = "SWARM_EPISODES", default_value_t = 200)]
        episodes: usize,
        #[arg(long, env = "SWARM_SEED", default_value_t = 0)]
        seed: u64,
        /// Output CSV file.
        #[arg(long, env = "SWARM_OUT", default_value = "runs/bench.csv")]
        out: PathBuf,
    },
    /// Draw SVG snapshots from a trajectory file.
    Render {
        /// JSON-lines trajectory file.
        trajectory: PathBuf,
        #[arg(long, env = "SWARM_OUT", default_value = "runs/render")]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        episode: usize,
        /// Also draw every STRIDE-th step.
        #[arg(long)]
        stride: Option<usize>,
        /// Draw sensing rings of this radius.
        #[arg(long)]
        scan_rings: Option<f64>,
        /// Highlight robots that cannot see every other robot.
        #[arg(long)]
        occlusion: bool,
        #[arg(long, default_value_t = 1.0)]
        r_bot: f64,
        /// Half-extent of the square world.
        #[arg(long, default_value_t = 20.0)]
        world: f64,
    },
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Train { source, seed, out } => {
            let (label, cfg) = source.resolve()?;
            let result = commands::train(&cfg, seed, &out)?;
            let last = result.metrics.last();
            println!(
                "{label}: trained {} epochs, final mean return {:.4}, {} of {} evaluation states collision-free; wrote {}",
                result.metrics.len(),
                last.map_or(0.0, |m| m.mean_return),
                result.sigma_star.len(),
                cfg.discovery.sigma_size,
                out.display()
            );
        }
        Command::Discover { source, seed, out } => {
            let (label, cfg) = source.resolve()?;
            let d = commands::discover(&label, &cfg, seed, &out)?;
            println!(
                "{label}: chain of {} policies, {:.0}% of evaluation episodes valid; wrote {}",
                d.chain.len(),
                100.0 * d.verdict.success_rate(),
                out.display()
            );
            if let Some(reason) = d.failure {
                eprintln!("error: {}", CliError::DiscoveryFailure(reason));
                return Ok(ExitCode::from(2));
            }
        }
        Command::Evaluate { chain, episodes, seed, out } => {
            let v = commands::evaluate(&chain, episodes, seed, &out)?;
            println!(
                "valid: {}, success rate {:.3}, collisions {}; wrote {}",
                v.valid,
                v.success_rate(),
                v.collisions(),
                out.display()
            );
        }
        Command::Bench {
            runs,
            experiment,
            episodes,
            seed,
            out,
        } => {
            let rows = commands::bench(&runs, &experiment, episodes, seed, &out)?;
            println!("{:<10} {:>10} {:>10} {:>10} {:>8} {:>10}", "experiment", "base", "aux", "total", "success", "collisions");
            for r in &rows {
                println!(
                    "{:<10} {:>10.2} {:>10.2} {:>10.2} {:>8.3} {:>10}",
                    r.experiment, r.steps_base, r.steps_aux, r.steps_total, r.success_rate, r.collisions
                );
            }
        }
        Command::Render {
            trajectory,
            out,
            episode,
            stride,
            scan_rings,
            occlusion,
            r_bot,
            world,
        } => {
            let opts = RenderOptions {
                episode,
                stride,
                scan_radius: scan_rings,
                occlusion,
                r_bot,
                x_w: world,
                y_w: world,
            };
            let files = commands::render_file(&trajectory, &out, &opts)?;
            println!("wrote {} frames to {}", files.len(), out.display());
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.quiet { "warn" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
