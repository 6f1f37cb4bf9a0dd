use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use spintrack::harness::{self, ExperimentConfig};
use spintrack::io;

#[derive(Parser)]
#[command(
    name = "spintrack",
    version,
    about = "Track a jumping field with a monitored spin"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// `key = value` experiment file; unset keys keep their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output_dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    duration: Option<f64>,
    /// Probe amplitude.
    #[arg(long)]
    beta: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one record and estimate it forward and backward.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Sweep the probe amplitude over every configured seed.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Comma-separated seeds (overrides `seeds`).
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
    },
    /// Re-estimate a stored record.
    Replay {
        #[command(flatten)]
        common: Common,
        /// `.bin` or `.csv` record.
        #[arg(long)]
        record: PathBuf,
        /// Truth CSV to score against.
        #[arg(long)]
        truth: Option<PathBuf>,
    },
}

fn load(common: &Common) -> Result<(ExperimentConfig, PathBuf)> {
    let mut cfg = match &common.config {
        Some(path) => {
            ExperimentConfig::load(path).with_context(|| format!("reading {}", path.display()))?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(dt) = common.dt {
        cfg.dt = dt;
    }
    if let Some(d) = common.duration {
        cfg.duration = d;
    }
    if let Some(b) = common.beta {
        cfg.params.beta_drive = b;
    }
    cfg.validate()?;
    if let Some(w) = cfg.params.bad_cavity_warning() {
        eprintln!("warning: {w}");
    }
    let out = common.out.clone().unwrap_or_else(|| cfg.output_dir.clone());
    Ok((cfg, out))
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run { common, seed } => {
            let (cfg, out) = load(&common)?;
            let run = harness::run_one(&cfg, seed, Some(&out))?;
            let m = run.metrics;
            println!(
                "beta {} seed {} over {} samples",
                m.beta, m.seed, m.forward.samples
            );
            println!(
                "forward  rmse_map {:.4}  post_std {:.4}",
                m.forward.rmse_map, m.forward.mean_post_std
            );
            println!(
                "pqs      rmse_map {:.4}  post_std {:.4}",
                m.pqs.rmse_map, m.pqs.mean_post_std
            );
            let tag = format!("beta{}_seed{}", m.beta, m.seed);
            std::fs::write(
                out.join(format!("trace_{tag}.gp")),
                harness::trace_gnuplot(
                    &format!("pqs_{tag}.csv"),
                    &format!("truth_{tag}.csv"),
                    cfg.hmm.states(),
                ),
            )?;
            println!("wrote {}", out.display());
        }
        Command::Sweep { common, seeds } => {
            let (mut cfg, out) = load(&common)?;
            if let Some(s) = seeds {
                cfg.seeds = s;
            }
            let sweep = harness::beta_sweep(&cfg, Some(&out))?;
            println!(
                "{:>6} {:>10} {:>10} {:>10} {:>10}",
                "beta", "rmse_fwd", "rmse_pqs", "std_fwd", "std_pqs"
            );
            for a in &sweep.aggregates {
                println!(
                    "{:>6} {:>10.4} {:>10.4} {:>10.4} {:>10.4}",
                    a.beta,
                    a.rmse_map_forward,
                    a.rmse_map_pqs,
                    a.mean_post_std_forward,
                    a.mean_post_std_pqs
                );
            }
            for (b, s, e) in &sweep.failures {
                eprintln!("failed: beta {b} seed {s}: {e}");
            }
            println!("wrote {}", out.display());
            if sweep.runs.is_empty() {
                bail!("every run failed");
            }
        }
        Command::Replay {
            common,
            record,
            truth,
        } => {
            let (cfg, out) = load(&common)?;
            let rec = io::read_record(&record)
                .with_context(|| format!("reading {}", record.display()))?;
            let truth = truth.map(|p| io::read_truth_csv(&p)).transpose()?;
            let (_, scored) = harness::replay(&cfg, &rec, truth.as_deref(), Some(&out))?;
            if let Some((f, s)) = scored {
                println!(
                    "forward  rmse_map {:.4}  post_std {:.4}",
                    f.rmse_map, f.mean_post_std
                );
                println!(
                    "pqs      rmse_map {:.4}  post_std {:.4}",
                    s.rmse_map, s.mean_post_std
                );
            }
            println!("wrote {}", out.display());
        }
    }
    Ok(())
}
