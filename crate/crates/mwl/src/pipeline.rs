//! Stage drivers. Each stage reads the previous stage's files from the
//! output directory and writes its own, so stages can be rerun one at a
//! time. Output layout:
//!
//! ```text
//! <out>/config.resolved.json   resolved configuration of the last command
//! <out>/stage.log              one line per stage event
//! <out>/ratings.csv            ratings joined to the recordings
//! <out>/denoised/*.mwl         denoised recordings (binary container)
//! <out>/removals.csv           ICA components removed per recording
//! <out>/indexes/index_series.csv
//! <out>/features/features.csv, extraction.json
//! <out>/select/<index>/selection.json, correlation.csv, features.csv
//! <out>/synth/<index>.csv, quality.json
//! <out>/train/<dataset>/metrics_long.csv, distributions.json, models/*.json
//! <out>/report/…               see the report module
//! ```

use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::{info, warn};
use mwl_core::bandindex::{compute_indexes_with, ClusterSpec, IndexId, IndexSeries};
use mwl_core::cohort::{cohort_ratings, cohort_subjects, simulate_recording};
use mwl_core::features::{extract_all_with, extract_features, ExtractionReport, FeatureVector};
use mwl_core::learn::{self, ModelSpec};
use mwl_core::montecarlo::{run_iteration, DatasetSelector, ExperimentResult, IterationOutcome};
use mwl_core::preprocess::{denoise, RemovalReport};
use mwl_core::rng::derive_seed;
use mwl_core::select::{multicollinearity_filter, select_features, SelectionResult};
use mwl_core::synth::{index_quality, synthesize, SyntheticQualityReport};
use mwl_core::{Condition, EegRecording, FeatureMatrix, Rating};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::PipelineConfig;
use crate::dataio::{self, DatasetManifest};
use crate::error::{MwlError, Result};

const TAG_ICA: u64 = 0x4943_4100;
const TAG_SELECT: u64 = 0x5345_4c00;

/// Paths of every artifact under one output directory.
#[derive(Debug, Clone)]
pub struct Layout {
    pub root: PathBuf,
}

impl Layout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }
    pub fn resolved_config(&self) -> PathBuf {
        self.root.join("config.resolved.json")
    }
    pub fn stage_log(&self) -> PathBuf {
        self.root.join("stage.log")
    }
    pub fn ratings(&self) -> PathBuf {
        self.root.join("ratings.csv")
    }
    pub fn denoised_dir(&self) -> PathBuf {
        self.root.join("denoised")
    }
    pub fn denoised(&self, subject_id: u32, condition: Condition) -> PathBuf {
        self.denoised_dir().join(format!("sub{subject_id:02}_{condition}.mwl"))
    }
    pub fn removals(&self) -> PathBuf {
        self.root.join("removals.csv")
    }
    pub fn index_series(&self) -> PathBuf {
        self.root.join("indexes").join("index_series.csv")
    }
    pub fn features(&self) -> PathBuf {
        self.root.join("features").join("features.csv")
    }
    pub fn extraction(&self) -> PathBuf {
        self.root.join("features").join("extraction.json")
    }
    pub fn select_dir(&self, index: IndexId) -> PathBuf {
        self.root.join("select").join(index.as_str())
    }
    pub fn selected_features(&self, index: IndexId) -> PathBuf {
        self.select_dir(index).join("features.csv")
    }
    pub fn synthetic(&self, index: IndexId) -> PathBuf {
        self.root.join("synth").join(format!("{index}.csv"))
    }
    pub fn quality(&self) -> PathBuf {
        self.root.join("synth").join("quality.json")
    }
    pub fn train_dir(&self, dataset: DatasetSelector) -> PathBuf {
        self.root.join("train").join(dataset_name(dataset))
    }
    pub fn distributions(&self, dataset: DatasetSelector) -> PathBuf {
        self.train_dir(dataset).join("distributions.json")
    }
    pub fn report_dir(&self) -> PathBuf {
        self.root.join("report")
    }
}

pub fn dataset_name(d: DatasetSelector) -> &'static str {
    match d {
        DatasetSelector::Original => "original",
        DatasetSelector::Combined => "combined",
    }
}

/// Appends stage events to `stage.log` and mirrors them to the logger.
pub struct StageLog {
    path: PathBuf,
}

impl StageLog {
    pub fn open(layout: &Layout) -> Result<Self> {
        fs::create_dir_all(&layout.root).map_err(|e| MwlError::io(&layout.root, e))?;
        Ok(Self { path: layout.stage_log() })
    }

    pub fn line(&self, stage: &str, message: &str) -> Result<()> {
        info!("[{stage}] {message}");
        let mut f = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&self.path)
            .map_err(|e| MwlError::io(&self.path, e))?;
        writeln!(f, "[{stage}] {message}").map_err(|e| MwlError::io(&self.path, e))
    }
}

/// Shared state of one command invocation.
pub struct Run {
    pub cfg: PipelineConfig,
    pub layout: Layout,
    pub log: StageLog,
}

impl Run {
    /// Validates the configuration, creates the output directory and writes
    /// the resolved configuration.
    pub fn start(cfg: PipelineConfig, command: &str) -> Result<Self> {
        let cfg = cfg.resolve().validated()?;
        let layout = Layout::new(&cfg.out_dir);
        let log = StageLog::open(&layout)?;
        dataio::write_json(&layout.resolved_config(), &cfg)?;
        log.line(command, &format!("seed {} config {}", cfg.seed, layout.resolved_config().display()))?;
        Ok(Self { cfg, layout, log })
    }

    /// Runs `f` on a pool with the configured thread count.
    pub fn install<T: Send>(&self, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
        match self.cfg.threads {
            Some(n) => rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| MwlError::Validation(vec![format!("threads: {e}")]))?
                .install(f),
            None => f(),
        }
    }

    fn timed<T>(&self, stage: &str, f: impl FnOnce() -> Result<(T, String)>) -> Result<T> {
        let t0 = Instant::now();
        self.log.line(stage, "start")?;
        let (out, summary) = f()?;
        self.log.line(stage, &format!("done in {:.2} s: {summary}", t0.elapsed().as_secs_f64()))?;
        Ok(out)
    }
}

fn require(path: &Path, producer: &str) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(MwlError::MissingInput { path: path.to_path_buf(), hint: format!("run `mwl {producer}` first") })
    }
}

/// Where raw recordings come from.
enum Source {
    Demo,
    Manifest(DatasetManifest),
}

/// Per-recording ICA seed, independent of processing order.
pub fn ica_seed(seed: u64, subject_id: u32, condition: Condition) -> u64 {
    derive_seed(seed, &[TAG_ICA, u64::from(subject_id), condition as u64])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenoiseOutput {
    pub reports: Vec<RemovalReport>,
    pub ratings: Vec<Rating>,
}

/// Loads or simulates every recording, denoises it and stores the result.
pub fn stage_denoise(run: &Run) -> Result<DenoiseOutput> {
    run.timed("denoise", || {
        let cfg = &run.cfg;
        let (source, jobs, ratings): (Source, Vec<(u32, Condition)>, Vec<Rating>) = match &cfg.manifest {
            None => {
                let subjects = cohort_subjects(&cfg.demo);
                let jobs = subjects.iter().flat_map(|s| Condition::ALL.map(|c| (s.subject_id, c))).collect();
                (Source::Demo, jobs, cohort_ratings(&subjects))
            }
            Some(path) => {
                let m = DatasetManifest::load(path)?;
                let errs = m.validate();
                if !errs.is_empty() {
                    return Err(MwlError::Validation(errs.into_iter().map(|e| format!("manifest.{e}")).collect()));
                }
                let ratings = match &m.ratings {
                    Some(r) => dataio::read_ratings(&m.resolve(r))?,
                    None => Vec::new(),
                };
                let mut jobs: Vec<_> = m.recordings.iter().map(|e| (e.subject_id, e.condition)).collect();
                jobs.sort_unstable();
                (Source::Manifest(m), jobs, ratings)
            }
        };
        let dir = run.layout.denoised_dir();
        if dir.exists() {
            fs::remove_dir_all(&dir).map_err(|e| MwlError::io(&dir, e))?;
        }
        fs::create_dir_all(&dir).map_err(|e| MwlError::io(&dir, e))?;
        let subjects = cohort_subjects(&cfg.demo);
        let reports: Vec<RemovalReport> = run.install(|| {
            jobs.par_iter()
                .map(|&(sid, cond)| {
                    let rec = match &source {
                        Source::Demo => {
                            let s = subjects.iter().find(|s| s.subject_id == sid).expect("job from cohort");
                            simulate_recording(&cfg.demo, s, cond)?
                        }
                        Source::Manifest(m) => load_entry(m, sid, cond)?,
                    };
                    let (clean, report) = denoise(&rec, &cfg.denoise, ica_seed(cfg.seed, sid, cond))?;
                    if !report.ica_converged {
                        warn!("subject {sid} / {cond}: ICA stopped at {} iterations", report.ica_iterations);
                    }
                    dataio::write_recording(&run.layout.denoised(sid, cond), &clean)?;
                    Ok(report)
                })
                .collect::<Result<Vec<_>>>()
        })?;
        dataio::write_ratings(&run.layout.ratings(), &ratings)?;
        write_removals(&run.layout.removals(), &reports)?;
        let removed: usize = reports.iter().map(RemovalReport::removed_count).sum();
        let summary = format!("{} recordings, {removed} components removed", reports.len());
        Ok((DenoiseOutput { reports, ratings }, summary))
    })
}

fn load_entry(m: &DatasetManifest, sid: u32, cond: Condition) -> Result<EegRecording> {
    let e = m.recordings.iter().find(|e| e.subject_id == sid && e.condition == cond).expect("job from manifest");
    let samples = dataio::read_matrix(&m.resolve(&e.path), Some(m.channel_names.len()), m.n_samples)?;
    Ok(EegRecording::new(sid, cond, samples, m.sampling_rate_hz, m.channel_names.clone())?)
}

pub fn write_removals(path: &Path, reports: &[RemovalReport]) -> Result<()> {
    let mut text = String::from("subject_id,condition,n_components,removed_count,removed_indices,ica_converged,ica_iterations\n");
    for r in reports {
        let idx: Vec<String> = r.removed_indices.iter().map(usize::to_string).collect();
        text.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.subject,
            r.condition,
            r.n_components,
            r.removed_count(),
            idx.join(";"),
            r.ica_converged,
            r.ica_iterations
        ));
    }
    dataio::write_text(path, &text)
}

/// One row of `removals.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct RemovalRow {
    pub subject_id: u32,
    pub condition: Condition,
    pub n_components: usize,
    pub removed_count: usize,
}

pub fn read_removals(path: &Path) -> Result<Vec<RemovalRow>> {
    let text = dataio::read_text(path)?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        let cells: Vec<&str> = line.split(',').collect();
        let bad = || MwlError::parse(path, i + 1, "malformed removal row");
        if cells.len() != 7 {
            return Err(bad());
        }
        out.push(RemovalRow {
            subject_id: cells[0].parse().map_err(|_| bad())?,
            condition: cells[1].parse().map_err(|_| bad())?,
            n_components: cells[2].parse().map_err(|_| bad())?,
            removed_count: cells[3].parse().map_err(|_| bad())?,
        });
    }
    Ok(out)
}

/// Computes the ten index series of every denoised recording.
pub fn stage_indexes(run: &Run) -> Result<Vec<IndexSeries>> {
    run.timed("indexes", || {
        let dir = run.layout.denoised_dir();
        require(&dir, "denoise")?;
        let mut files: Vec<PathBuf> = fs::read_dir(&dir)
            .map_err(|e| MwlError::io(&dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "mwl"))
            .collect();
        files.sort();
        let clusters = ClusterSpec::canonical();
        let per_rec: Vec<Vec<IndexSeries>> = run.install(|| {
            files
                .par_iter()
                .map(|p| {
                    let rec = dataio::read_recording(p)?;
                    Ok(compute_indexes_with(&rec, &clusters, run.cfg.window_s)?)
                })
                .collect::<Result<Vec<_>>>()
        })?;
        let mut series: Vec<IndexSeries> = per_rec.into_iter().flatten().collect();
        series.sort_by_key(|s| (s.subject_id, s.condition, index_pos(s.index_id)));
        dataio::save_index_series(&series, &run.layout.index_series())?;
        let summary = format!("{} series", series.len());
        Ok((series, summary))
    })
}

pub fn index_pos(id: IndexId) -> usize {
    IndexId::ALL.iter().position(|i| *i == id).expect("known index")
}

/// Extracts the catalog from every labelled index series.
pub fn stage_features(run: &Run) -> Result<FeatureMatrix> {
    run.timed("features", || {
        require(&run.layout.index_series(), "indexes")?;
        require(&run.layout.ratings(), "denoise")?;
        let series = dataio::load_index_series(&run.layout.index_series())?;
        let ratings = dataio::read_ratings(&run.layout.ratings())?;
        let catalog = run.cfg.catalog.build()?;
        let fs_index = 1.0 / run.cfg.window_s;
        let vectors: Vec<FeatureVector> = run.install(|| {
            series
                .par_iter()
                .map(|s| Ok(extract_features(s, &catalog, fs_index)?))
                .collect::<Result<Vec<_>>>()
        })?;
        let mut next = vectors.into_iter();
        let (fm, report): (FeatureMatrix, ExtractionReport) =
            extract_all_with(&series, &catalog, &ratings, fs_index, |_| Ok(next.next().expect("one vector per series")))?;
        dataio::save_feature_matrix(&fm, &run.layout.features())?;
        dataio::write_json(&run.layout.extraction(), &report)?;
        for (sid, cond, id) in report.unlabelled.iter().chain(&report.neutral) {
            run.log.line("features", &format!("dropped unlabelled or neutral series: subject {sid} / {cond} / {id}"))?;
        }
        let summary = format!(
            "{} rows × {} features, {} degenerate cells",
            fm.n_rows(),
            fm.n_features(),
            report.degenerate_cells.len()
        );
        Ok((fm, summary))
    })
}

/// Mean Monte Carlo accuracy of `names` on `fm`, averaged over the
/// evaluation learners. Candidate sets go through the correlation filter
/// first when the configuration asks for it.
pub fn k_search_score(run: &Run, fm: &FeatureMatrix, names: &[String], seed: u64) -> mwl_core::Result<f64> {
    let ev = &run.cfg.select.evaluation;
    let names = if ev.filtered {
        multicollinearity_filter(fm, names, run.cfg.select.config.correlation_threshold)?.retained
    } else {
        names.to_vec()
    };
    let sub = fm.select_columns(&names)?;
    let fraction = run.cfg.train.experiment.train_fraction;
    let mut total = 0.0;
    for spec in &ev.learners {
        let accs = (0..ev.iterations as u64)
            .into_par_iter()
            .map(|i| Ok(run_iteration(&sub, spec, fraction, seed, i)?.metrics.accuracy))
            .collect::<mwl_core::Result<Vec<f64>>>()?;
        total += accs.iter().sum::<f64>() / accs.len() as f64;
    }
    Ok(total / ev.learners.len() as f64)
}

/// Ranks, halves and filters the features of every configured index.
pub fn stage_select(run: &Run) -> Result<Vec<(IndexId, SelectionResult)>> {
    run.timed("select", || {
        require(&run.layout.features(), "features")?;
        let fm = dataio::load_feature_matrix(&run.layout.features())?;
        let mut out = Vec::new();
        for &index in run.cfg.indexes() {
            let part = fm.for_index(index);
            if part.n_rows() == 0 {
                return Err(MwlError::MissingInput {
                    path: run.layout.features(),
                    hint: format!("no rows for index {index}"),
                });
            }
            let seed = derive_seed(run.cfg.seed, &[TAG_SELECT, index_pos(index) as u64]);
            let res = run.install(|| {
                Ok(select_features(&part, &run.cfg.select.config, |names| k_search_score(run, &part, names, seed))?)
            })?;
            let dir = run.layout.select_dir(index);
            dataio::write_json(&dir.join("selection.json"), &SelectionFile::from(&res))?;
            write_correlation(&dir.join("correlation.csv"), &res.selected, &res.correlation)?;
            dataio::save_feature_matrix(&part.select_columns(&res.selected)?, &run.layout.selected_features(index))?;
            run.log.line(
                "select",
                &format!("{index}: K = {}, {} features after the correlation filter, trace {:?}", res.k, res.selected.len(), res.trace),
            )?;
            out.push((index, res));
        }
        let summary = format!("{} indexes", out.len());
        Ok((out, summary))
    })
}

/// Persisted part of a [`SelectionResult`]; infinite F-values are written
/// as `null`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionFile {
    pub k: usize,
    pub trace: Vec<(usize, f64)>,
    pub selected: Vec<String>,
    pub dropped: Vec<mwl_core::select::DroppedFeature>,
    pub ranking: Vec<mwl_core::select::FeatureScore>,
}

impl From<&SelectionResult> for SelectionFile {
    fn from(r: &SelectionResult) -> Self {
        Self {
            k: r.k,
            trace: r.trace.clone(),
            selected: r.selected.clone(),
            dropped: r.dropped.clone(),
            ranking: r.ranking.entries.clone(),
        }
    }
}

fn write_correlation(path: &Path, names: &[String], m: &mwl_core::linalg::Matrix) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |source| MwlError::Csv { path: path.to_path_buf(), source };
    let mut header = vec![String::from("feature")];
    header.extend(names.iter().cloned());
    w.write_record(&header).map_err(csv_err)?;
    for (i, n) in names.iter().enumerate() {
        let mut rec = vec![n.clone()];
        rec.extend(m.row(i).iter().map(f64::to_string));
        w.write_record(&rec).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| MwlError::io(path, e.into_error()))?;
    dataio::write_text(path, &String::from_utf8(bytes).expect("csv output is UTF-8"))
}

fn load_selected(run: &Run, index: IndexId) -> Result<FeatureMatrix> {
    let p = run.layout.selected_features(index);
    require(&p, "select")?;
    dataio::load_feature_matrix(&p)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityEntry {
    pub index: IndexId,
    pub report: SyntheticQualityReport,
}

/// Synthetic subjects for every selected index, with their quality scores.
pub fn stage_synth(run: &Run) -> Result<Vec<QualityEntry>> {
    run.timed("synth", || {
        let jobs: Vec<(IndexId, FeatureMatrix)> =
            run.cfg.indexes().iter().map(|&i| Ok((i, load_selected(run, i)?))).collect::<Result<_>>()?;
        let out: Vec<QualityEntry> = run.install(|| {
            jobs.par_iter()
                .map(|(index, fm)| {
                    let syn = synthesize(fm, &run.cfg.synth)?;
                    dataio::save_feature_matrix(&syn, &run.layout.synthetic(*index))?;
                    Ok(QualityEntry { index: *index, report: index_quality(fm, &syn, *index)? })
                })
                .collect::<Result<Vec<_>>>()
        })?;
        dataio::write_json(&run.layout.quality(), &out)?;
        let overall: Vec<String> = out.iter().map(|q| format!("{} {:.1}%", q.index, q.report.overall)).collect();
        Ok((out, format!("overall quality {}", overall.join(", "))))
    })
}

/// Feature rows the train stage uses for `index` on `dataset`.
pub fn training_matrix(run: &Run, index: IndexId, dataset: DatasetSelector) -> Result<FeatureMatrix> {
    let original = load_selected(run, index)?;
    match dataset {
        DatasetSelector::Original => Ok(original),
        DatasetSelector::Combined => {
            let p = run.layout.synthetic(index);
            require(&p, "synth")?;
            Ok(original.concat(&dataio::load_feature_matrix(&p)?)?)
        }
    }
}

/// Monte Carlo evaluation of every (dataset, index, learner).
pub fn stage_train(run: &Run) -> Result<Vec<(DatasetSelector, ExperimentResult)>> {
    run.timed("train", || {
        let exp = &run.cfg.train.experiment;
        let mut results = Vec::new();
        for &dataset in &run.cfg.train.datasets {
            let matrices: Vec<(IndexId, FeatureMatrix)> = exp
                .indexes
                .iter()
                .map(|&i| Ok((i, training_matrix(run, i, dataset)?)))
                .collect::<Result<_>>()?;
            let jobs: Vec<(usize, &ModelSpec, u64)> = (0..matrices.len())
                .flat_map(|m| exp.learners.iter().flat_map(move |l| (0..exp.iterations as u64).map(move |it| (m, l, it))))
                .collect();
            let outcomes: Vec<IterationOutcome> = run.install(|| {
                jobs.par_iter()
                    .map(|&(m, spec, it)| Ok(run_iteration(&matrices[m].1, spec, exp.train_fraction, exp.seed, it)?))
                    .collect::<Result<Vec<_>>>()
            })?;
            let mut result = ExperimentResult::default();
            for (chunk, (m, l)) in outcomes
                .chunks(exp.iterations)
                .zip((0..matrices.len()).flat_map(|m| exp.learners.iter().map(move |l| (m, l))))
            {
                result.push_outcomes(matrices[m].0, l.family, chunk);
            }
            let dir = run.layout.train_dir(dataset);
            write_metrics_long(&dir.join("metrics_long.csv"), &result)?;
            dataio::write_json(&run.layout.distributions(dataset), &result)?;
            if run.cfg.train.save_models {
                for (index, fm) in &matrices {
                    for spec in &exp.learners {
                        let seed = derive_seed(exp.seed, &[index_pos(*index) as u64, spec.family as u64]);
                        let model = learn::train(spec, fm.values(), fm.labels(), seed)?;
                        let file = SavedModel { index: *index, features: fm.columns().to_vec(), model };
                        dataio::write_json(&dir.join("models").join(format!("{index}_{}.json", spec.family)), &file)?;
                    }
                }
            }
            for (index, learner, it, redraws) in &result.redrawn {
                run.log.line("train", &format!("{dataset:?} {index} {learner} iteration {it}: split redrawn {redraws} times"))?;
            }
            if !result.unconverged.is_empty() {
                run.log.line("train", &format!("{} fits hit the iteration cap", result.unconverged.len()))?;
            }
            results.push((dataset, result));
        }
        Ok((results, format!("{} datasets", run.cfg.train.datasets.len())))
    })
}

/// A model fitted on every row of one index, with its input columns.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SavedModel {
    pub index: IndexId,
    pub features: Vec<String>,
    pub model: learn::TrainedModel,
}

fn write_metrics_long(path: &Path, result: &ExperimentResult) -> Result<()> {
    let mut text = String::from("index,learner,metric,iteration,value\n");
    for d in &result.distributions {
        for (i, v) in d.values.iter().enumerate() {
            text.push_str(&format!("{},{},{},{i},{v}\n", d.index_id, d.learner, d.metric));
        }
    }
    dataio::write_text(path, &text)
}

/// Runs every enabled stage in order.
pub fn run_all(run: &Run) -> Result<()> {
    let s = run.cfg.stages;
    if s.denoise {
        stage_denoise(run)?;
    }
    if s.indexes {
        stage_indexes(run)?;
    }
    if s.features {
        stage_features(run)?;
    }
    if s.select {
        stage_select(run)?;
    }
    if s.synth {
        stage_synth(run)?;
    }
    if s.train {
        stage_train(run)?;
    }
    if s.report {
        crate::report::stage_report(run)?;
    }
    Ok(())
}
