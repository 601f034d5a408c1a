//! Command line front end.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mwl_core::bandindex::IndexId;
use mwl_core::cohort::{cohort_ratings, cohort_subjects, simulate_recording};
use mwl_core::learn::{ModelFamily, ModelSpec};
use mwl_core::montecarlo::DatasetSelector;
use mwl_core::Condition;

use crate::config::PipelineConfig;
use crate::dataio;
use crate::error::{MwlError, Result};
use crate::pipeline::{self, Run};
use crate::report;

#[derive(Debug, Parser)]
#[command(name = "mwl", version, about = "EEG mental-workload classification from band-ratio indexes")]
pub struct Cli {
    /// Pipeline configuration (JSON). Defaults apply to missing fields.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Top-level seed; demo, split and synthesis seeds derive from it.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Dataset manifest; without one the demo cohort is simulated.
    #[arg(long, global = true)]
    pub manifest: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads; defaults to the number of CPUs.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Log debug messages.
    #[arg(short, long, global = true)]
    pub verbose: bool,
    /// Log warnings and errors only.
    #[arg(short, long, global = true, conflicts_with = "verbose")]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Re-reference, high-pass and ICA-clean every recording.
    Denoise(DenoiseArgs),
    /// Compute the ten per-window workload indexes.
    Indexes(IndexArgs),
    /// Extract the feature catalog from every labelled index series.
    Features,
    /// Rank, halve and decorrelate features per index.
    Select(SelectArgs),
    /// Generate synthetic subjects and score their quality.
    Synth(SynthArgs),
    /// Monte Carlo evaluation of every index and learner.
    Train(TrainArgs),
    /// Write metric, t-test, density and quality tables.
    Report,
    /// Every stage in order.
    RunAll(RunAllArgs),
    /// Write the demo cohort as a dataset directory with a manifest.
    Demo(DemoArgs),
    /// Build a manifest for a directory of sub{NN}_{lo|hi}.txt files.
    Manifest(ManifestArgs),
    /// Print the resolved configuration.
    Config,
}

#[derive(Debug, Clone, Default, Args)]
pub struct DenoiseArgs {
    /// Remove components with |z| above this on any statistic.
    #[arg(long)]
    pub z_threshold: Option<f64>,
    /// Demo cohort size.
    #[arg(long)]
    pub demo_subjects: Option<usize>,
    /// Demo recording length in seconds.
    #[arg(long)]
    pub demo_duration: Option<f64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct IndexArgs {
    /// Window length in seconds.
    #[arg(long)]
    pub window_s: Option<f64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SelectArgs {
    /// Keep a fixed number of top-ranked features instead of searching.
    #[arg(long)]
    pub no_k_search: bool,
    /// Number of features kept without the search.
    #[arg(long)]
    pub k: Option<usize>,
    /// Monte Carlo iterations per candidate K.
    #[arg(long)]
    pub eval_iterations: Option<usize>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SynthArgs {
    /// Synthetic subjects per condition.
    #[arg(long)]
    pub synth_subjects: Option<usize>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub iterations: Option<usize>,
    /// Comma-separated learners: L-R, SVM, DTR.
    #[arg(long, value_delimiter = ',')]
    pub learners: Option<Vec<ModelFamily>>,
    /// Comma-separated indexes, e.g. at-1,ta-1.
    #[arg(long, value_delimiter = ',')]
    pub indexes: Option<Vec<IndexId>>,
    /// Comma-separated datasets: original, combined.
    #[arg(long, value_delimiter = ',', value_parser = parse_dataset)]
    pub datasets: Option<Vec<DatasetSelector>>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunAllArgs {
    #[command(flatten)]
    pub denoise: DenoiseArgs,
    #[command(flatten)]
    pub index: IndexArgs,
    #[command(flatten)]
    pub select: SelectArgs,
    #[command(flatten)]
    pub synth: SynthArgs,
    #[command(flatten)]
    pub train: TrainArgs,
}

#[derive(Debug, Clone, Args)]
pub struct DemoArgs {
    /// Directory to write.
    #[arg(long)]
    pub dir: PathBuf,
    #[arg(long)]
    pub subjects: Option<usize>,
    /// Seconds per recording.
    #[arg(long)]
    pub duration: Option<f64>,
    /// Peak blink amplitude in microvolts; 0 disables blinks.
    #[arg(long)]
    pub blink: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct ManifestArgs {
    /// Directory holding sub{NN}_{lo|hi}.txt and ratings.txt.
    #[arg(long)]
    pub dir: PathBuf,
    /// Output path; defaults to <dir>/manifest.json.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

fn parse_dataset(s: &str) -> std::result::Result<DatasetSelector, String> {
    match s.trim().to_ascii_lowercase().as_str() {
        "original" => Ok(DatasetSelector::Original),
        "combined" => Ok(DatasetSelector::Combined),
        other => Err(format!("unknown dataset `{other}` (expected original or combined)")),
    }
}

impl DenoiseArgs {
    fn apply(&self, cfg: &mut PipelineConfig) {
        if let Some(z) = self.z_threshold {
            cfg.denoise.z_threshold = z;
        }
        if let Some(n) = self.demo_subjects {
            cfg.demo.n_subjects = n;
        }
        if let Some(d) = self.demo_duration {
            cfg.demo.duration_s = d;
        }
    }
}

impl IndexArgs {
    fn apply(&self, cfg: &mut PipelineConfig) {
        if let Some(w) = self.window_s {
            cfg.window_s = w;
        }
    }
}

impl SelectArgs {
    fn apply(&self, cfg: &mut PipelineConfig) {
        if self.no_k_search {
            cfg.select.config.k_search = false;
        }
        if let Some(k) = self.k {
            cfg.select.config.k_search = false;
            cfg.select.config.fixed_k = Some(k);
        }
        if let Some(n) = self.eval_iterations {
            cfg.select.evaluation.iterations = n;
        }
    }
}

impl SynthArgs {
    fn apply(&self, cfg: &mut PipelineConfig) {
        if let Some(n) = self.synth_subjects {
            cfg.synth.n_subjects = n;
        }
    }
}

impl TrainArgs {
    fn apply(&self, cfg: &mut PipelineConfig) {
        let exp = &mut cfg.train.experiment;
        if let Some(n) = self.iterations {
            exp.iterations = n;
        }
        if let Some(l) = &self.learners {
            exp.learners = l.iter().map(|f| ModelSpec::new(*f)).collect();
        }
        if let Some(i) = &self.indexes {
            exp.indexes = i.clone();
        }
        if let Some(d) = &self.datasets {
            cfg.train.datasets = d.clone();
        }
    }
}

impl Cli {
    /// Configuration file (or defaults) with the command line applied.
    pub fn config(&self) -> Result<PipelineConfig> {
        let mut cfg = match &self.config {
            Some(p) => PipelineConfig::load(p)?,
            None => PipelineConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(m) = &self.manifest {
            cfg.manifest = Some(m.clone());
        }
        if let Some(o) = &self.out {
            cfg.out_dir = o.clone();
        }
        if let Some(t) = self.threads {
            cfg.threads = Some(t);
        }
        match &self.command {
            Command::Denoise(a) => a.apply(&mut cfg),
            Command::Indexes(a) => a.apply(&mut cfg),
            Command::Select(a) => a.apply(&mut cfg),
            Command::Synth(a) => a.apply(&mut cfg),
            Command::Train(a) => a.apply(&mut cfg),
            Command::RunAll(a) => {
                a.denoise.apply(&mut cfg);
                a.index.apply(&mut cfg);
                a.select.apply(&mut cfg);
                a.synth.apply(&mut cfg);
                a.train.apply(&mut cfg);
            }
            _ => {}
        }
        if matches!(self.command, Command::RunAll(_)) {
            // Without synth there is no combined dataset to train on.
            if !cfg.stages.synth {
                cfg.train.datasets.retain(|d| *d != DatasetSelector::Combined);
            }
        }
        Ok(cfg)
    }
}

/// Executes a parsed command line.
pub fn execute(cli: &Cli) -> Result<()> {
    let cfg = cli.config()?;
    match &cli.command {
        Command::Demo(a) => return write_demo(&cfg, a),
        Command::Manifest(a) => {
            let m = dataio::stew_manifest(&a.dir)?;
            let out = a.output.clone().unwrap_or_else(|| a.dir.join("manifest.json"));
            let m = dataio::DatasetManifest { root: relative_root(&a.dir, &out), ..m };
            m.save(&out)?;
            println!("{}: {} recordings", out.display(), m.recordings.len());
            return Ok(());
        }
        Command::Config => {
            let cfg = cfg.resolve();
            println!("{}", serde_json::to_string_pretty(&cfg).expect("config serializes"));
            return Ok(());
        }
        _ => {}
    }
    let name = command_name(&cli.command);
    let run = Run::start(cfg, name)?;
    match &cli.command {
        Command::Denoise(_) => pipeline::stage_denoise(&run).map(drop),
        Command::Indexes(_) => pipeline::stage_indexes(&run).map(drop),
        Command::Features => pipeline::stage_features(&run).map(drop),
        Command::Select(_) => pipeline::stage_select(&run).map(drop),
        Command::Synth(_) => pipeline::stage_synth(&run).map(drop),
        Command::Train(_) => pipeline::stage_train(&run).map(drop),
        Command::Report => report::stage_report(&run).map(drop),
        Command::RunAll(_) => pipeline::run_all(&run),
        Command::Demo(_) | Command::Manifest(_) | Command::Config => unreachable!("handled above"),
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Denoise(_) => "denoise",
        Command::Indexes(_) => "indexes",
        Command::Features => "features",
        Command::Select(_) => "select",
        Command::Synth(_) => "synth",
        Command::Train(_) => "train",
        Command::Report => "report",
        Command::RunAll(_) => "run-all",
        Command::Demo(_) => "demo",
        Command::Manifest(_) => "manifest",
        Command::Config => "config",
    }
}

/// Manifest root pointing from the manifest's directory to `dir`.
fn relative_root(dir: &std::path::Path, manifest: &std::path::Path) -> PathBuf {
    let parent = manifest.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(std::path::Path::new("."));
    match (dir.canonicalize(), parent.canonicalize()) {
        (Ok(d), Ok(p)) if d == p => PathBuf::from("."),
        (Ok(d), _) => d,
        _ => dir.to_path_buf(),
    }
}

fn write_demo(cfg: &PipelineConfig, a: &DemoArgs) -> Result<()> {
    let mut cohort = cfg.clone().resolve().demo;
    if let Some(n) = a.subjects {
        cohort.n_subjects = n;
    }
    if let Some(d) = a.duration {
        cohort.duration_s = d;
    }
    if let Some(b) = a.blink {
        cohort.blink_amplitude_uv = b;
    }
    let subjects = cohort_subjects(&cohort);
    let recordings = subjects
        .iter()
        .flat_map(|s| Condition::ALL.map(|c| (s, c)))
        .map(|(s, c)| simulate_recording(&cohort, s, c).map_err(MwlError::from))
        .collect::<Result<Vec<_>>>()?;
    let path = dataio::write_stew_layout(&a.dir, &recordings, &cohort_ratings(&subjects))?;
    println!("{}: {} recordings", path.display(), recordings.len());
    Ok(())
}

fn init_logging(cli: &Cli) {
    let level = if cli.verbose {
        "debug"
    } else if cli.quiet {
        "warn"
    } else {
        "info"
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .try_init();
}

/// Entry point of the `mwl` binary: 0 on success, 1 for invalid input or
/// configuration, 2 for failures while running.
pub fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    init_logging(&cli);
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
