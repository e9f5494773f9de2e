use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sigreg::harness::{
    cmd_ablate, cmd_report, cmd_train, output_root, run_gradcheck, AblationConfig, CheckTarget, GradcheckSpec,
    RunConfig,
};

#[derive(Parser)]
#[command(name = "sigreg", version, about = "Sketched isotropic Gaussian regularization experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one model from a config file.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Run directory (default: $SIGREG_OUTPUT_ROOT/<name> or runs/<name>).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override a scalar config leaf, e.g. `sgd.learning_rate=0.1`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Run every cell of an ablation grid.
    Ablate {
        #[arg(long)]
        config: PathBuf,
        /// Replaces the seed axis with this single seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override a scalar leaf of the base run config.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Compare analytic gradients against central finite differences.
    Gradcheck {
        /// Optional TOML spec; defaults to the built-in 20-case sweep.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Restrict to targets: weak, strong, cross_entropy, model_weak, model_strong.
        #[arg(long = "target")]
        targets: Vec<String>,
        /// Offset all case seeds.
        #[arg(long)]
        seed: Option<u64>,
        /// Write the report as JSON into this directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Negative control: corrupt the analytic gradients.
        #[arg(long)]
        inject_fault: bool,
    },
    /// Merge run directories into plot-ready JSON.
    Report {
        dirs: Vec<PathBuf>,
        /// Output file (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> sigreg::Result<ExitCode> {
    match cli.command {
        Command::Train {
            config,
            seed,
            out,
            mut overrides,
        } => {
            if let Some(s) = seed {
                overrides.push(format!("seed={s}"));
            }
            let cfg = RunConfig::load(&config, &overrides)?;
            let dir = out
                .or_else(|| cfg.output.clone())
                .unwrap_or_else(|| output_root().join(&cfg.name));
            let summary = cmd_train(&cfg, &dir)?;
            let last = summary.final_metrics.as_ref();
            println!(
                "{}: status={:?} epochs={} test_top1={} effective_rank={} -> {}",
                summary.name,
                summary.status,
                summary.epochs_completed,
                last.map_or("n/a".into(), |r| format!("{:.4}", r.test_top1)),
                last.and_then(|r| r.effective_rank)
                    .map_or("n/a".into(), |e| format!("{e:.3}")),
                dir.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Ablate {
            config,
            seed,
            out,
            overrides,
        } => {
            let mut cfg = AblationConfig::load(&config, &overrides)?;
            if let Some(s) = seed {
                cfg.axes.seed = Some(vec![s]);
            }
            let root = out.unwrap_or_else(|| output_root().join(&cfg.name));
            let outcome = cmd_ablate(&cfg, &root)?;
            for g in &outcome.groups {
                println!(
                    "{:<7} alpha={:<6} K={:<4} T={:<3} runs={} mean_top1={} mean_erank={}",
                    g.variant.as_str(),
                    g.alpha,
                    g.sketch_dim,
                    g.integration_points,
                    g.runs,
                    g.mean_test_top1.map_or("n/a".into(), |v| format!("{v:.4}")),
                    g.mean_effective_rank.map_or("n/a".into(), |v| format!("{v:.3}")),
                );
            }
            println!("{} cells, {} failed -> {}", outcome.rows.len(), outcome.failures(), root.display());
            Ok(if outcome.failures() == 0 {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
        Command::Gradcheck {
            config,
            targets,
            seed,
            out,
            inject_fault,
        } => {
            let mut spec = match config {
                Some(path) => {
                    let text = std::fs::read_to_string(&path).map_err(|e| sigreg::Error::io(&path, e))?;
                    toml::from_str(&text).map_err(|e| sigreg::Error::Config(e.to_string()))?
                }
                None => GradcheckSpec::default(),
            };
            if !targets.is_empty() {
                spec.targets = targets
                    .iter()
                    .map(|t| {
                        CheckTarget::parse(t).ok_or_else(|| sigreg::Error::Config(format!("unknown target {t:?}")))
                    })
                    .collect::<sigreg::Result<_>>()?;
            }
            if let Some(offset) = seed {
                for c in spec.cases.iter_mut().chain(spec.model_cases.iter_mut()) {
                    c.seed = c.seed.wrapping_add(offset);
                }
            }
            spec.inject_fault |= inject_fault;
            let report = run_gradcheck(&spec)?;
            println!("{report}");
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir).map_err(|e| sigreg::Error::io(&dir, e))?;
                let path = dir.join("gradcheck.json");
                std::fs::write(&path, serde_json::to_string_pretty(&report)?).map_err(|e| sigreg::Error::io(&path, e))?;
            }
            Ok(if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
        Command::Report { dirs, out } => {
            let report = cmd_report(&dirs);
            let json = serde_json::to_string_pretty(&report)?;
            match out {
                Some(path) => std::fs::write(&path, json).map_err(|e| sigreg::Error::io(&path, e))?,
                None => println!("{json}"),
            }
            for f in &report.failures {
                eprintln!("skipped {}: {}", f.dir.display(), f.error);
            }
            Ok(if report.is_complete() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
    }
}
