//! The `rescon` command line: synth, ingest, saliency, panels, collab,
//! trends and the composed pipeline.
//!
//! Every stage reads its inputs from files and writes its outputs plus a
//! merged `manifest.json` into `--out`, so stages can be run one at a time.

use std::ffi::OsString;
use std::path::PathBuf;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand, ValueEnum};

use rescon_core::aggregate::AttributionMode;
use rescon_core::{Error, Result};

pub mod config;
pub mod manifest;
pub mod stages;

use config::AnalysisConfig;

#[derive(Debug, Parser)]
#[command(name = "rescon", version, about = "Research output, citation and saliency analytics")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// Generator seed; overrides the config file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: available cores). Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Report format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic corpus from a scenario file.
    Synth(SynthArgs),
    /// Validate and index a corpus directory.
    Ingest(StageArgs),
    /// Compute the saliency vector at the cutoff.
    Saliency(StageArgs),
    /// Output, citation and saliency panels plus saliency ratios.
    Panels(StageArgs),
    /// Transregional collaboration panels.
    Collab(StageArgs),
    /// Convergence trend report.
    Trends(TrendsArgs),
    /// synth (when the config has a generator and no --input), ingest,
    /// saliency, panels, collab and trends.
    Pipeline(TrendsArgs),
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct StageArgs {
    /// Scenario or analysis config (TOML).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Directory holding the stage inputs; defaults to --out.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Clone, Args)]
pub struct TrendsArgs {
    #[command(flatten)]
    pub stage: StageArgs,
    /// Also write one plot-ready CSV per figure under plots/.
    #[arg(long)]
    pub plot_data: bool,
}

/// Flags that override `[analysis]` keys.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    #[arg(long)]
    pub cutoff: Option<NaiveDate>,
    #[arg(long)]
    pub horizon_years: Option<u32>,
    #[arg(long)]
    pub damping: Option<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// auto, oracle or predicted.
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long)]
    pub training_cutoffs: Option<usize>,
    /// Panel years as START..END (end exclusive).
    #[arg(long, value_parser = parse_years)]
    pub years: Option<[i32; 2]>,
    #[arg(long)]
    pub attribution: Option<AttributionMode>,
    #[arg(long)]
    pub observation_cutoff: Option<NaiveDate>,
    /// identity, stem, or a grouping file.
    #[arg(long)]
    pub fields: Option<String>,
    #[arg(long)]
    pub overall_field: Option<String>,
    /// Comma-separated A-B pairs.
    #[arg(long, value_delimiter = ',')]
    pub pairs: Option<Vec<String>>,
    /// Comma-separated SUBJECT:GROUP pairs.
    #[arg(long, value_delimiter = ',')]
    pub bellwethers: Option<Vec<String>>,
    #[arg(long)]
    pub regions_file: Option<PathBuf>,
    #[arg(long)]
    pub aggregates_file: Option<PathBuf>,
}

fn parse_years(s: &str) -> std::result::Result<[i32; 2], String> {
    let (a, b) = s.split_once("..").ok_or("expected START..END")?;
    let a = a.trim().parse().map_err(|_| format!("bad start year {a:?}"))?;
    let b = b.trim().parse().map_err(|_| format!("bad end year {b:?}"))?;
    Ok([a, b])
}

impl Overrides {
    pub fn apply(&self, a: &mut AnalysisConfig) {
        macro_rules! set {
            ($flag:ident => $key:ident) => {
                if let Some(v) = &self.$flag {
                    a.$key = v.clone().into();
                }
            };
        }
        set!(cutoff => cutoff);
        set!(horizon_years => horizon_years);
        set!(damping => damping);
        set!(tol => tolerance);
        set!(max_iters => max_iterations);
        set!(mode => saliency_mode);
        set!(training_cutoffs => training_cutoffs);
        set!(years => years);
        set!(attribution => attribution);
        set!(observation_cutoff => observation_cutoff);
        set!(fields => fields);
        set!(overall_field => overall_field);
        set!(pairs => pairs);
        set!(bellwethers => bellwethers);
        set!(regions_file => regions_file);
        set!(aggregates_file => aggregates_file);
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code. Errors go to stderr as one JSON line.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| execute(&cli)));
    match outcome {
        Ok(Ok(())) => 0,
        Ok(Err(e)) => {
            report_error(e.kind(), &e.to_string());
            if e.is_validation() {
                1
            } else {
                2
            }
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            report_error("internal", &msg);
            2
        }
    }
}

fn report_error(kind: &str, message: &str) {
    eprintln!("{}", serde_json::json!({ "error": kind, "message": message }));
}

/// Runs a parsed command inside a thread pool sized by `--threads`.
pub fn execute(cli: &Cli) -> Result<()> {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.global.threads {
        if n == 0 {
            return Err(Error::Config("--threads must be at least 1".into()));
        }
        pool = pool.num_threads(n);
    }
    let pool = pool
        .build()
        .map_err(|e| Error::Config(format!("cannot start thread pool: {e}")))?;
    pool.install(|| stages::dispatch(cli))
}
