// `!(x > t)` deliberately rejects NaN along with values at or below `t`.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cyclosep::benchmark::{run_benchmark, BenchmarkConfig, ExperimentConfig, Profile};
use cyclosep::curves::{emit_curves, to_csv, to_json, CurveFormat, EstimatorKind};
use cyclosep::dataset::{export_dataset, DatasetMetadata};
use cyclosep::estimators::BankOptions;
use cyclosep::matrix_io::write_covariance;
use cyclosep::mixture::{kappa_to_sir, make_dataset, make_dataset_at_kappa, KappaLevel, MixtureConfig};
use cyclosep::{Error, Result};

#[derive(Parser)]
#[command(name = "cyclosep", version, about = "Cyclostationary Gaussian source separation toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the model config and a labeled dataset drawn from the κ prior.
    Generate {
        #[command(flatten)]
        exp: ExperimentArgs,
        /// Number of records.
        #[arg(long, default_value_t = 1000)]
        count: usize,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Dump the marginal and offset-conditional covariances of both models.
    Covariance {
        #[command(flatten)]
        exp: ExperimentArgs,
        /// Offsets to dump for the conditional covariances (default: every offset).
        #[arg(long, value_delimiter = ',')]
        tau: Option<Vec<usize>>,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Sweep the SIR levels and emit MSE curves.
    Benchmark {
        #[command(flatten)]
        exp: ExperimentArgs,
        /// Monte Carlo trials per SIR level.
        #[arg(long)]
        trials: Option<usize>,
        /// Comma-separated subset of lmmse, lmmse_known_kappa, oracle, mmse.
        #[arg(long, value_delimiter = ',', default_value = "lmmse,lmmse_known_kappa,oracle,mmse")]
        estimators: Vec<EstimatorKind>,
        #[arg(long, default_value = "csv")]
        format: CurveFormat,
        /// Filter-bank memory budget in GiB.
        #[arg(long, default_value_t = 8.0)]
        memory_budget_gib: f64,
        /// Output file (stdout when absent).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write latent-free train/val splits and per-SIR test sets with latents.
    ExportDataset {
        #[command(flatten)]
        exp: ExperimentArgs,
        #[arg(long, default_value_t = 10_000)]
        train_per_level: usize,
        #[arg(long, default_value_t = 500)]
        val_per_level: usize,
        #[arg(long, default_value_t = 1000)]
        test_per_level: usize,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct ExperimentArgs {
    /// Experiment config (JSON).
    #[arg(long, conflicts_with = "profile")]
    config: Option<PathBuf>,
    /// Built-in experiment: s51, s52 or s52-reduced.
    #[arg(long)]
    profile: Option<Profile>,
    /// Noise standard deviation; overrides the config value.
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl ExperimentArgs {
    fn experiment(&self) -> Result<ExperimentConfig> {
        match (&self.config, self.profile) {
            (Some(path), _) => ExperimentConfig::load(path),
            (None, Some(p)) => Ok(p.config()),
            (None, None) => Err(Error::InvalidParameter("one of --config or --profile is required".into())),
        }
    }

    fn mixture(&self) -> Result<(ExperimentConfig, MixtureConfig)> {
        let exp = self.experiment()?;
        let mix = exp.mixture(self.sigma)?;
        Ok((exp, mix))
    }
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Independent seed per split so splits never share substreams.
fn split_seed(seed: u64, split: u64) -> u64 {
    seed ^ split.wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

fn metadata(mix: &MixtureConfig, seed: u64, split: &str, count: usize, latents: bool) -> DatasetMetadata {
    DatasetMetadata {
        source: mix.source.clone(),
        interference: mix.interference.clone(),
        sigma: mix.sigma,
        kappa_levels: mix.kappa_levels.clone(),
        seed,
        split: split.to_string(),
        n: mix.n,
        count,
        latents,
    }
}

fn generate(exp: &ExperimentArgs, count: usize, out: &Path) -> Result<()> {
    let (mut config, mix) = exp.mixture()?;
    config.sigma = Some(mix.sigma);
    create_dir(out)?;
    write_text(&out.join("models.json"), &config.to_json()?)?;
    let records = make_dataset(&mix, count, exp.seed)?;
    let meta = metadata(&mix, exp.seed, "generate", count, true);
    export_dataset(&records, out.join("dataset.csds"), true, Some(&meta))
}

fn covariance(exp: &ExperimentArgs, tau: Option<&[usize]>, out: &Path) -> Result<()> {
    let config = exp.experiment()?;
    create_dir(out)?;
    for (name, model) in [("source", &config.source), ("interference", &config.interference)] {
        write_covariance(
            &model.marginal_covariance(config.n)?.matrix,
            out.join(format!("{name}_marginal.cscv")),
        )?;
        let offsets: Vec<usize> = match tau {
            Some(t) => t.to_vec(),
            None => (0..model.period()).collect(),
        };
        for t in offsets {
            let c = model.conditional_covariance(t, config.n)?;
            write_covariance(&c.matrix, out.join(format!("{name}_tau{t}.cscv")))?;
        }
    }
    Ok(())
}

fn benchmark(
    exp: &ExperimentArgs,
    trials: Option<usize>,
    estimators: Vec<EstimatorKind>,
    format: CurveFormat,
    budget_gib: f64,
    out: Option<&Path>,
) -> Result<()> {
    let (_, mix) = exp.mixture()?;
    if !(budget_gib > 0.0) {
        return Err(Error::InvalidParameter("memory budget must be positive".into()));
    }
    let trials = trials.unwrap_or_else(|| exp.profile.map_or(1000, Profile::default_trials));
    let cfg = BenchmarkConfig {
        mixture: mix,
        trials,
        estimators,
        seed: exp.seed,
        bank: BankOptions {
            memory_budget_bytes: (budget_gib * (1u64 << 30) as f64) as u128,
            ..BankOptions::default()
        },
    };
    let table = run_benchmark(&cfg)?;
    match out {
        Some(path) => emit_curves(&table, path, format),
        None => {
            let text = match format {
                CurveFormat::Csv => to_csv(&table),
                CurveFormat::Json => to_json(&table)?,
            };
            print!("{text}");
            Ok(())
        }
    }
}

fn export(exp: &ExperimentArgs, train: usize, val: usize, test: usize, out: &Path) -> Result<()> {
    let (_, mix) = exp.mixture()?;
    create_dir(out)?;
    let k = mix.kappa_levels.len();
    for (split, per_level, salt) in [("train", train, 1), ("val", val, 2)] {
        let seed = split_seed(exp.seed, salt);
        let count = per_level * k;
        let records = make_dataset(&mix, count, seed)?;
        let meta = metadata(&mix, seed, split, count, false);
        export_dataset(&records, out.join(format!("{split}.csds")), false, Some(&meta))?;
    }
    for (li, level) in mix.kappa_levels.iter().enumerate() {
        let seed = split_seed(exp.seed, 3 + li as u64);
        let records = make_dataset_at_kappa(&mix, level.kappa, test, seed)?;
        let fixed = MixtureConfig {
            kappa_levels: vec![KappaLevel {
                kappa: level.kappa,
                prior: 1.0,
            }],
            ..mix.clone()
        };
        let meta = metadata(&fixed, seed, "test", test, true);
        let name = format!("test_sir_{}.csds", format_sir(kappa_to_sir(level.kappa)));
        export_dataset(&records, out.join(name), true, Some(&meta))?;
    }
    Ok(())
}

/// `-7.5` → `m7.5`, `3` → `3`: filename-safe and sortable by eye.
fn format_sir(sir: f64) -> String {
    let rounded = (sir * 1e6).round() / 1e6;
    let text = format!("{}", rounded.abs());
    if rounded < 0.0 {
        format!("m{text}")
    } else {
        text
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate { exp, count, out } => generate(&exp, count, &out),
        Command::Covariance { exp, tau, out } => covariance(&exp, tau.as_deref(), &out),
        Command::Benchmark {
            exp,
            trials,
            estimators,
            format,
            memory_budget_gib,
            out,
        } => benchmark(&exp, trials, estimators, format, memory_budget_gib, out.as_deref()),
        Command::ExportDataset {
            exp,
            train_per_level,
            val_per_level,
            test_per_level,
            out,
        } => export(&exp, train_per_level, val_per_level, test_per_level, &out),
    }
}

fn report(kind: &str, message: &str) {
    let err = serde_json::json!({ "error": kind, "message": message });
    eprintln!("{err}");
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            report("usage", e.to_string().trim_end());
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            report(e.kind(), &e.to_string());
            ExitCode::FAILURE
        }
    }
}
