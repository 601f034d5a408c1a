//! Pipeline configuration: one JSON document holding every stage's settings.
//!
//! Missing fields take their defaults, so `{}` is a valid configuration
//! that runs the bundled demo cohort. Every run writes the fully resolved
//! document to `<out_dir>/config.resolved.json`.

use std::path::{Path, PathBuf};

use mwl_core::bandindex::IndexId;
use mwl_core::cohort::CohortConfig;
use mwl_core::features::{CatalogParams, FeatureCatalog};
use mwl_core::learn::{ModelFamily, ModelSpec};
use mwl_core::montecarlo::{DatasetSelector, ExperimentConfig};
use mwl_core::preprocess::DenoiseConfig;
use mwl_core::select::SelectConfig;
use mwl_core::synth::SynthConfig;
use serde::{Deserialize, Serialize};

use crate::dataio;
use crate::error::{MwlError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct StageToggles {
    pub denoise: bool,
    pub indexes: bool,
    pub features: bool,
    pub select: bool,
    pub synth: bool,
    pub train: bool,
    pub report: bool,
}

impl Default for StageToggles {
    fn default() -> Self {
        Self { denoise: true, indexes: true, features: true, select: true, synth: true, train: true, report: true }
    }
}

/// Which catalog features are extracted.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CatalogSelection {
    pub params: CatalogParams,
    /// Feature names to keep, in catalog order; `None` keeps all of them.
    pub features: Option<Vec<String>>,
}

impl CatalogSelection {
    pub fn build(&self) -> Result<FeatureCatalog> {
        let full = FeatureCatalog::with_params(self.params.clone())?;
        match &self.features {
            Some(names) => Ok(full.subset(names)?),
            None => Ok(full),
        }
    }
}

/// How each candidate `K` is scored during the halving search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KSearchEvaluation {
    /// Mean Monte Carlo accuracy is averaged over these learners.
    pub learners: Vec<ModelSpec>,
    pub iterations: usize,
    /// Apply the correlation filter to each candidate set before scoring,
    /// so candidates are scored on the columns the final model would see.
    pub filtered: bool,
}

impl Default for KSearchEvaluation {
    fn default() -> Self {
        Self { learners: ModelSpec::defaults(), iterations: 100, filtered: true }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct SelectStage {
    #[serde(flatten)]
    pub config: SelectConfig,
    pub evaluation: KSearchEvaluation,
}

/// Datasets the train stage evaluates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainStage {
    #[serde(flatten)]
    pub experiment: ExperimentConfig,
    /// Overrides `experiment.dataset`: every listed dataset is evaluated.
    pub datasets: Vec<DatasetSelector>,
    /// Persist one model per (dataset, index, learner) fitted on all rows.
    pub save_models: bool,
}

impl Default for TrainStage {
    fn default() -> Self {
        Self {
            experiment: ExperimentConfig::default(),
            datasets: vec![DatasetSelector::Original, DatasetSelector::Combined],
            save_models: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReportStage {
    /// Grid points of the density series.
    pub density_points: usize,
}

impl Default for ReportStage {
    fn default() -> Self {
        Self { density_points: 101 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    /// Dataset manifest; `None` runs the demo cohort.
    pub manifest: Option<PathBuf>,
    pub out_dir: PathBuf,
    /// Seeds every stage. The demo, experiment and synth seeds are
    /// overwritten with it on resolution.
    pub seed: u64,
    pub stages: StageToggles,
    pub demo: CohortConfig,
    pub denoise: DenoiseConfig,
    /// Index window length in seconds.
    pub window_s: f64,
    pub catalog: CatalogSelection,
    pub select: SelectStage,
    pub synth: SynthConfig,
    pub train: TrainStage,
    pub report: ReportStage,
    /// Worker threads; `None` uses every core.
    pub threads: Option<usize>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            manifest: None,
            out_dir: PathBuf::from("mwl-out"),
            seed: 0,
            stages: StageToggles::default(),
            demo: demo_cohort(),
            denoise: DenoiseConfig::default(),
            window_s: 1.0,
            catalog: CatalogSelection::default(),
            select: SelectStage::default(),
            synth: SynthConfig::default(),
            train: TrainStage::default(),
            report: ReportStage::default(),
            threads: None,
        }
    }
}

/// Default demo cohort: 48 subjects of 150 s at 128 Hz, like the reference
/// dataset.
pub fn demo_cohort() -> CohortConfig {
    CohortConfig { n_subjects: 48, duration_s: 150.0, ..CohortConfig::default() }
}

impl PipelineConfig {
    /// Reads a configuration file. A relative `manifest` or `out_dir` is
    /// resolved against the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let mut cfg: PipelineConfig = dataio::read_json(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        if let Some(m) = cfg.manifest.as_mut().filter(|m| m.is_relative()) {
            *m = base.join(&*m);
        }
        if cfg.out_dir.is_relative() {
            cfg.out_dir = base.join(&cfg.out_dir);
        }
        Ok(cfg)
    }

    /// Propagates the top-level seed into the stage configurations.
    pub fn resolve(mut self) -> Self {
        self.demo.seed = self.seed;
        self.train.experiment.seed = self.seed;
        self.synth.seed = self.seed;
        self
    }

    /// Every invalid field, prefixed with its path.
    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        if let Some(m) = &self.manifest {
            if !m.is_file() {
                errs.push(format!("manifest: file {} does not exist", m.display()));
            }
        } else {
            if self.demo.n_subjects < 4 {
                errs.push(format!("demo.n_subjects: at least 4 needed, got {}", self.demo.n_subjects));
            }
            if !(self.demo.duration_s > 0.0) {
                errs.push(format!("demo.duration_s: must be positive, got {}", self.demo.duration_s));
            }
            if !(self.demo.map_jitter >= 0.0) {
                errs.push(format!("demo.map_jitter: must be non-negative, got {}", self.demo.map_jitter));
            }
        }
        if self.out_dir.as_os_str().is_empty() {
            errs.push("out_dir: must not be empty".into());
        }
        let d = &self.denoise;
        if d.highpass.order == 0 {
            errs.push("denoise.highpass.order: must be at least 1".into());
        }
        if !(d.highpass.cutoff_hz > 0.0) {
            errs.push(format!("denoise.highpass.cutoff_hz: must be positive, got {}", d.highpass.cutoff_hz));
        }
        if !(d.z_threshold > 0.0) {
            errs.push(format!("denoise.z_threshold: must be positive, got {}", d.z_threshold));
        }
        if !(d.ica.tolerance > 0.0) {
            errs.push(format!("denoise.ica.tolerance: must be positive, got {}", d.ica.tolerance));
        }
        if d.ica.max_iterations == 0 {
            errs.push("denoise.ica.max_iterations: must be at least 1".into());
        }
        if !(self.window_s > 0.0) {
            errs.push(format!("window_s: must be positive, got {}", self.window_s));
        }
        if let Err(e) = self.catalog.build() {
            errs.push(format!("catalog: {e}"));
        }
        let s = &self.select;
        if !(s.config.correlation_threshold > 0.0 && s.config.correlation_threshold <= 1.0) {
            errs.push(format!(
                "select.correlation_threshold: must lie in (0, 1], got {}",
                s.config.correlation_threshold
            ));
        }
        if s.config.fixed_k == Some(0) {
            errs.push("select.fixed_k: must be at least 1".into());
        }
        if s.config.k_search {
            if s.evaluation.learners.is_empty() {
                errs.push("select.evaluation.learners: must not be empty".into());
            }
            if s.evaluation.iterations == 0 {
                errs.push("select.evaluation.iterations: must be at least 1".into());
            }
            for l in &s.evaluation.learners {
                if let Err(e) = l.validate() {
                    errs.extend(e.into_iter().map(|m| format!("select.evaluation.learners.{}: {m}", l.family)));
                }
            }
        }
        if self.synth.n_subjects == 0 {
            errs.push("synth.n_subjects: must be at least 1".into());
        }
        if let Err(e) = self.train.experiment.validate() {
            errs.extend(e.into_iter().map(|m| format!("train: {m}")));
        }
        if self.train.datasets.is_empty() {
            errs.push("train.datasets: must not be empty".into());
        }
        if self.train.datasets.contains(&DatasetSelector::Combined) && !self.stages.synth {
            errs.push("train.datasets: `combined` needs the synth stage".into());
        }
        if self.report.density_points < 2 {
            errs.push(format!("report.density_points: at least 2 needed, got {}", self.report.density_points));
        }
        if self.threads == Some(0) {
            errs.push("threads: must be at least 1".into());
        }
        errs
    }

    pub fn validated(self) -> Result<Self> {
        let errs = self.validate();
        if errs.is_empty() {
            Ok(self)
        } else {
            Err(MwlError::Validation(errs))
        }
    }

    pub fn indexes(&self) -> &[IndexId] {
        &self.train.experiment.indexes
    }

    pub fn learner_families(&self) -> Vec<ModelFamily> {
        self.train.experiment.learners.iter().map(|l| l.family).collect()
    }
}
