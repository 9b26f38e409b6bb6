//! `emberwatch`: seeded simulation and training runs with plain-text
//! metric output. Every subcommand writes a manifest into its output
//! directory; re-running with the same seed and config reproduces the
//! metric files byte for byte.

mod manifest;

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use emberwatch_core::config::ScenarioConfig;
use emberwatch_core::env::ThresholdTable;
use emberwatch_core::harness::{self, Stage};
use emberwatch_core::learner::model_io;

#[derive(Parser)]
#[command(name = "emberwatch", version, about = "Wildfire-tracking UAV swarm simulator")]
struct Cli {
    /// Master seed for every random stream in the run.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Scenario TOML; omit to run the built-in reference scenario.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (created if missing).
    #[arg(long, global = true, default_value = "runs/out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum StageArg {
    Tracking,
    Charging,
}

#[derive(Subcommand)]
enum Command {
    /// Propagate a fire and write per-slot perimeter/density snapshots.
    SimulateFire {
        /// Write every n-th slot.
        #[arg(long, default_value_t = 1)]
        stride: usize,
    },
    /// Monte-Carlo vs deterministic spectral efficiency over an (M, L) grid.
    ValidateRmt {
        /// Channel draws per grid cell.
        #[arg(long, default_value_t = 10_000)]
        draws: usize,
        /// Grid as "MxL,MxL,...".
        #[arg(long, default_value = "1x4,3x6,6x12,8x24")]
        grid: String,
    },
    /// Train a policy for one mission stage.
    Train {
        #[arg(long, value_enum)]
        stage: StageArg,
        /// Continue from a checkpoint written by a previous run.
        #[arg(long)]
        resume: Option<PathBuf>,
        /// Override the configured episode count.
        #[arg(long)]
        episodes: Option<usize>,
    },
    /// Evaluate frozen policies over independent fire realizations.
    Evaluate {
        #[arg(long)]
        tracking_model: Option<PathBuf>,
        #[arg(long)]
        charging_model: Option<PathBuf>,
        #[arg(long)]
        threshold_table: Option<PathBuf>,
        #[arg(long)]
        realizations: Option<usize>,
    },
    /// Placement baselines vs the learned policy (paired fires).
    Benchmark {
        #[arg(long)]
        tracking_model: PathBuf,
        #[arg(long)]
        realizations: Option<usize>,
    },
    /// Build the tracking-to-charging switch table from a charging policy.
    BuildThreshold {
        #[arg(long)]
        charging_model: PathBuf,
        /// Evaluation episodes feeding the table.
        #[arg(long, default_value_t = 5000)]
        episodes: usize,
    },
}

fn load_config(path: &Option<PathBuf>) -> Result<ScenarioConfig> {
    match path {
        Some(p) => ScenarioConfig::from_path(p).with_context(|| format!("loading {}", p.display())),
        None => Ok(ScenarioConfig::default()),
    }
}

fn parse_grid(text: &str) -> Result<Vec<(usize, usize)>> {
    let mut out = Vec::new();
    for cell in text.split(',') {
        let (m, l) = cell
            .trim()
            .split_once('x')
            .with_context(|| format!("grid cell `{cell}` is not MxL"))?;
        out.push((m.trim().parse()?, l.trim().parse()?));
    }
    if out.is_empty() {
        bail!("empty grid");
    }
    Ok(out)
}

fn prepare_out(dir: &Path, cfg: &ScenarioConfig) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("config.toml"), cfg.to_toml())?;
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let mut cfg = load_config(&cli.config)?;
    let out = cli.out.clone();
    let started = std::time::Instant::now();

    match &cli.command {
        Command::SimulateFire { stride } => {
            prepare_out(&out, &cfg)?;
            let written = harness::simulate_fire(&cfg, cli.seed, &out, *stride)?;
            println!("wrote {written} perimeter/density snapshots to {}", out.display());
        }
        Command::ValidateRmt { draws, grid } => {
            prepare_out(&out, &cfg)?;
            let cells = parse_grid(grid)?;
            let rows = harness::validate_rmt(&cfg, cli.seed, &cells, *draws, Some(&out))?;
            for r in &rows {
                println!(
                    "M={} L={}: mc {:.4} b/s/Hz, deterministic {:.4} b/s/Hz, max gap {:.2}%",
                    r.num_uavs,
                    r.num_aps,
                    r.mc_se,
                    r.det_se,
                    100.0 * r.max_rel_gap
                );
            }
        }
        Command::Train { stage, resume, episodes } => {
            if let Some(e) = episodes {
                cfg.td3.train_episodes = *e;
            }
            prepare_out(&out, &cfg)?;
            let stage = match stage {
                StageArg::Tracking => Stage::Tracking,
                StageArg::Charging => Stage::Charging,
            };
            let outcome = harness::train(&cfg, stage, cli.seed, Some(&out), resume.as_deref())?;
            let last = outcome.curve.last().map(|s| s.reward).unwrap_or(0.0);
            println!(
                "trained {} episodes; final episode reward {last:.2}; actor at {}",
                outcome.curve.len(),
                out.join("actor.bin").display()
            );
        }
        Command::Evaluate { tracking_model, charging_model, threshold_table, realizations } => {
            prepare_out(&out, &cfg)?;
            let tracking = tracking_model.as_deref().map(model_io::load_mlp).transpose()?;
            let charging = charging_model.as_deref().map(model_io::load_mlp).transpose()?;
            let table = threshold_table.as_deref().map(ThresholdTable::read_from).transpose()?;
            let n = realizations.unwrap_or(cfg.eval.realizations);
            let summary = harness::evaluate(
                &cfg,
                tracking.as_ref(),
                charging.as_ref(),
                table.as_ref(),
                n,
                cli.seed,
                Some(&out),
            )?;
            let cdf_slot = summary.cdf_slot;
            println!(
                "evaluated {n} realizations; mean coverage at slot {} = {:.3}",
                cdf_slot + 1,
                summary.mean_coverage_at(cdf_slot)
            );
        }
        Command::Benchmark { tracking_model, realizations } => {
            prepare_out(&out, &cfg)?;
            let actor = model_io::load_mlp(tracking_model)?;
            let n = realizations.unwrap_or(cfg.eval.realizations);
            let summary = harness::benchmark(&cfg, &actor, n, cli.seed, Some(&out))?;
            for arm in &summary.arms {
                let last = *arm.mean_coverage.last().unwrap_or(&0.0);
                println!("arm {:12}: final-slot mean coverage {last:.3}", arm.name);
            }
        }
        Command::BuildThreshold { charging_model, episodes } => {
            prepare_out(&out, &cfg)?;
            let actor = model_io::load_mlp(charging_model)?;
            let table = harness::build_threshold_table(&cfg, &actor, *episodes, cli.seed)?;
            table.write_to(&out.join("threshold_table.tsv"))?;
            println!(
                "threshold table over {} bins written to {}",
                table.max_energy.len(),
                out.join("threshold_table.tsv").display()
            );
        }
    }

    manifest::write(&out, cli.seed, &cli.config, started.elapsed())?;
    Ok(())
}
