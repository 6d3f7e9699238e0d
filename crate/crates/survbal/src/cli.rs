use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::commands;
use crate::config::{self, RunConfig, SynthConfig, SynthKind};
use crate::error::{CliError, CliResult};
use crate::exec::Runner;

#[derive(Debug, Parser)]
#[command(name = "survbal", version, about = "Class-balancing pipelines and tree ensembles for imbalanced survival data")]
pub struct Cli {
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true, default_value_t = 1)]
    pub threads: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// Run configuration (TOML, JSON, or a manifest from an earlier run).
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory, overriding `output` in the config.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Drop incomplete rows, filter, merge rare categories and derive labels.
    Preprocess(ConfigArgs),
    /// ANOVA screening and the Cramér's V association matrix.
    Screen(ConfigArgs),
    /// Run one sampler pipeline over the prepared data.
    Sample {
        #[command(flatten)]
        args: ConfigArgs,
        #[arg(long)]
        sampler: Option<String>,
    },
    /// Fit one model (after an optional sampler) on all prepared rows.
    Train {
        #[command(flatten)]
        args: ConfigArgs,
        #[arg(long)]
        model: Option<String>,
        #[arg(long)]
        sampler: Option<String>,
    },
    /// Score a CSV with a trained model.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        threshold: f64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Stratified cross-validation of every sampler and model pair.
    Evaluate(ConfigArgs),
    /// Generate a synthetic data set.
    Synth {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_parser = ["blobs", "categorical"])]
        kind: Option<String>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        minority_frac: Option<f64>,
        #[arg(long)]
        overlap: Option<f64>,
        #[arg(long)]
        features: Option<usize>,
        #[arg(long)]
        categories: Option<usize>,
        #[arg(long)]
        signal: Option<f64>,
    },
    /// Rebuild report.csv and print the summary rows of a report.json.
    Report {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

fn load(args: &ConfigArgs) -> CliResult<RunConfig> {
    let mut cfg = config::load(&args.config)?;
    if let Some(out) = &args.out {
        cfg.output = out.display().to_string();
    }
    Ok(cfg)
}

fn synth_config(
    cfg: Option<RunConfig>,
    seed: Option<u64>,
    kind: Option<String>,
    overrides: (Option<usize>, Option<f64>, Option<f64>, Option<usize>, Option<usize>, Option<f64>),
) -> CliResult<RunConfig> {
    let mut cfg = match (cfg, seed) {
        (Some(mut c), seed) => {
            if let Some(s) = seed {
                c.seed = s;
            }
            c
        }
        (None, Some(s)) => RunConfig::with_seed(s),
        (None, None) => return Err(CliError::config("seed", "a seed is required (--seed)")),
    };
    let mut s: SynthConfig = cfg.synth.clone().unwrap_or_default();
    if let Some(k) = kind {
        s.kind = if k == "categorical" { SynthKind::Categorical } else { SynthKind::Blobs };
    }
    let (n, frac, overlap, features, categories, signal) = overrides;
    s.n = n.unwrap_or(s.n);
    s.minority_frac = frac.unwrap_or(s.minority_frac);
    s.overlap = overlap.unwrap_or(s.overlap);
    s.features = features.unwrap_or(s.features);
    s.categories = categories.unwrap_or(s.categories);
    s.signal = signal.unwrap_or(s.signal);
    cfg.synth = Some(s);
    Ok(cfg)
}

pub fn execute(cli: Cli) -> CliResult<()> {
    if cli.threads == 0 {
        return Err(CliError::config("threads", "must be at least 1"));
    }
    let runner = Runner::new(cli.threads)?;
    match cli.command {
        Command::Preprocess(a) => commands::preprocess(&load(&a)?),
        Command::Screen(a) => commands::screen(&load(&a)?),
        Command::Sample { args, sampler } => {
            let mut cfg = load(&args)?;
            if sampler.is_some() {
                cfg.sample.sampler = sampler;
                cfg.validate()?;
            }
            commands::sample(&cfg)
        }
        Command::Train { args, model, sampler } => {
            let mut cfg = load(&args)?;
            if model.is_some() {
                cfg.train.model = model;
            }
            if sampler.is_some() {
                cfg.train.sampler = sampler;
            }
            cfg.validate()?;
            commands::train(&cfg, &runner)
        }
        Command::Predict { model, input, threshold, out } => commands::predict(&model, &input, threshold, &out),
        Command::Evaluate(a) => commands::evaluate(&load(&a)?, &runner).map(|_| ()),
        Command::Synth { config, out, seed, kind, n, minority_frac, overlap, features, categories, signal } => {
            let base = config.as_deref().map(config::load).transpose()?;
            let mut cfg = synth_config(base, seed, kind, (n, minority_frac, overlap, features, categories, signal))?;
            if let Some(out) = out {
                cfg.output = out.display().to_string();
            }
            commands::synth(&cfg)
        }
        Command::Report { input, out } => {
            print!("{}", commands::report(&input, &out)?);
            Ok(())
        }
    }
}

/// Parse `argv`, run, print a one-line diagnostic on failure and return
/// the process exit code.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.to_string().replace('\n', " "));
            e.exit_code()
        }
    }
}
