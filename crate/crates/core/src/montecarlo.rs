//! Repeated subject-level train/test splits, metric distributions and the
//! t-test comparisons between indexes.
//!
//! Iteration `i` draws its split from `derive_seed(seed, [i, attempt])`, so
//! every index and learner sees the same split for the same iteration and
//! iterations can run in any order. A split whose train or test fold holds a
//! single class is redrawn with the next attempt.

use alloc::string::String;
use alloc::vec::Vec;

use libm::sqrt;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::bandindex::IndexId;
use crate::features::FeatureMatrix;
use crate::learn::{self, Metric, MetricsReport, ModelFamily, ModelSpec};
use crate::recording::WorkloadClass;
use crate::rng;
use crate::stats;
use crate::{Error, Result};

/// Redraws allowed per iteration before giving up.
pub const MAX_ATTEMPTS: u64 = 1000;

/// Which rows feed the experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetSelector {
    #[default]
    Original,
    Combined,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub indexes: Vec<IndexId>,
    pub learners: Vec<ModelSpec>,
    pub train_fraction: f64,
    pub iterations: usize,
    pub seed: u64,
    pub dataset: DatasetSelector,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            indexes: IndexId::ALL.to_vec(),
            learners: ModelSpec::defaults(),
            train_fraction: 0.7,
            iterations: 100,
            seed: 0,
            dataset: DatasetSelector::Original,
        }
    }
}

impl ExperimentConfig {
    /// Lists every invalid field.
    pub fn validate(&self) -> core::result::Result<(), Vec<String>> {
        let mut errs = Vec::new();
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            errs.push(alloc::format!("train_fraction must lie in (0, 1), got {}", self.train_fraction));
        }
        if self.iterations == 0 {
            errs.push("iterations must be at least 1".into());
        }
        if self.indexes.is_empty() {
            errs.push("indexes must not be empty".into());
        }
        if self.learners.is_empty() {
            errs.push("learners must not be empty".into());
        }
        for l in &self.learners {
            if let Err(e) = l.validate() {
                errs.extend(e.into_iter().map(|m| alloc::format!("learner {}: {m}", l.family)));
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(errs)
        }
    }
}

/// Subject ids on each side of a split, ascending.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<u32>,
    pub test: Vec<u32>,
}

/// `round(x)` with halves rounded up.
fn round_half_up(x: f64) -> usize {
    libm::floor(x + 0.5) as usize
}

/// A subject's stratum: its class when all its instances agree, otherwise
/// mixed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Stratum {
    Suboptimal,
    SuperOptimal,
    Mixed,
}

/// Splits subjects into train and test. `instances` lists `(subject, class)`
/// per row. Subjects are stratified by class (subjects whose rows carry both
/// classes form a third stratum) and `round_half_up(fraction · count)` of
/// each stratum go to train.
pub fn stratified_subject_split(instances: &[(u32, WorkloadClass)], fraction: f64, seed: u64) -> Result<Split> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidArgument(alloc::format!("train fraction {fraction} outside (0, 1)")));
    }
    let mut subjects: Vec<(u32, Stratum)> = Vec::new();
    let mut sorted = instances.to_vec();
    sorted.sort_unstable();
    for (id, class) in sorted {
        let s = if class.is_positive() { Stratum::SuperOptimal } else { Stratum::Suboptimal };
        match subjects.last_mut() {
            Some((last, st)) if *last == id => {
                if *st != s {
                    *st = Stratum::Mixed;
                }
            }
            _ => subjects.push((id, s)),
        }
    }
    for (class, name) in [(WorkloadClass::Suboptimal, "suboptimal"), (WorkloadClass::SuperOptimal, "superoptimal")] {
        let mut ids: Vec<u32> = instances.iter().filter(|(_, c)| *c == class).map(|(s, _)| *s).collect();
        ids.sort_unstable();
        ids.dedup();
        if ids.len() < 2 {
            return Err(Error::SingleClass(alloc::format!("{name} class has {} subject(s), need at least 2", ids.len())));
        }
    }
    let mut rng = rng::stream(seed, &[]);
    let mut split = Split { train: Vec::new(), test: Vec::new() };
    for stratum in [Stratum::Suboptimal, Stratum::SuperOptimal, Stratum::Mixed] {
        let mut ids: Vec<u32> = subjects.iter().filter(|(_, s)| *s == stratum).map(|(id, _)| *id).collect();
        let n_train = round_half_up(fraction * ids.len() as f64).min(ids.len());
        ids.shuffle(&mut rng);
        split.train.extend_from_slice(&ids[..n_train]);
        split.test.extend_from_slice(&ids[n_train..]);
    }
    split.train.sort_unstable();
    split.test.sort_unstable();
    Ok(split)
}

fn instances(fm: &FeatureMatrix) -> Vec<(u32, WorkloadClass)> {
    fm.keys().iter().zip(fm.labels()).map(|(k, c)| (k.subject_id, *c)).collect()
}

fn both_classes(labels: &[WorkloadClass]) -> bool {
    labels.iter().any(|c| c.is_positive()) && labels.iter().any(|c| !c.is_positive())
}

/// Split for iteration `iteration`: the first attempt whose folds both
/// contain the two classes. Returns the split and the number of redraws.
pub fn iteration_split(fm: &FeatureMatrix, fraction: f64, seed: u64, iteration: u64) -> Result<(Split, u64)> {
    let inst = instances(fm);
    for attempt in 0..MAX_ATTEMPTS {
        let split = stratified_subject_split(&inst, fraction, rng::derive_seed(seed, &[iteration, attempt]))?;
        let fold_ok = |ids: &[u32]| {
            let labels: Vec<WorkloadClass> =
                inst.iter().filter(|(s, _)| ids.binary_search(s).is_ok()).map(|(_, c)| *c).collect();
            both_classes(&labels)
        };
        if fold_ok(&split.train) && fold_ok(&split.test) {
            return Ok((split, attempt));
        }
    }
    Err(Error::Numerical(alloc::format!("no two-class split found for iteration {iteration} in {MAX_ATTEMPTS} attempts")))
}

/// Metrics from one iteration of one learner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationOutcome {
    pub iteration: u64,
    pub metrics: MetricsReport,
    pub redraws: u64,
    pub converged: bool,
}

/// Trains `spec` on the train subjects of `split` and scores the test
/// subjects. Normalizer statistics come from the train rows only.
pub fn evaluate_split(fm: &FeatureMatrix, spec: &ModelSpec, split: &Split, seed: u64) -> Result<(MetricsReport, bool)> {
    let in_train = |i: usize| split.train.binary_search(&fm.keys()[i].subject_id).is_ok();
    let in_test = |i: usize| split.test.binary_search(&fm.keys()[i].subject_id).is_ok();
    let train = fm.filter_rows(in_train);
    let test = fm.filter_rows(in_test);
    let model = learn::train(spec, train.values(), train.labels(), seed)?;
    let pred = model.predict(test.values())?;
    Ok((learn::metrics(&pred, test.labels())?, model.converged))
}

/// One Monte Carlo iteration for one learner.
pub fn run_iteration(fm: &FeatureMatrix, spec: &ModelSpec, fraction: f64, seed: u64, iteration: u64) -> Result<IterationOutcome> {
    let (split, redraws) = iteration_split(fm, fraction, seed, iteration)?;
    let (metrics, converged) = evaluate_split(fm, spec, &split, rng::derive_seed(seed, &[iteration, u64::MAX]))?;
    Ok(IterationOutcome { iteration, metrics, redraws, converged })
}

/// Per-iteration values of one metric with their mean and sample standard
/// deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricDistribution {
    pub index_id: IndexId,
    pub learner: ModelFamily,
    pub metric: Metric,
    pub values: Vec<f64>,
    pub mean: f64,
    pub sd: f64,
}

impl MetricDistribution {
    pub fn new(index_id: IndexId, learner: ModelFamily, metric: Metric, values: Vec<f64>) -> Self {
        let mean = stats::mean(&values);
        let sd = sqrt(stats::sample_variance(&values));
        Self { index_id, learner, metric, values, mean, sd }
    }
}

/// Distributions for every (index, learner, metric), plus iteration notes.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub distributions: Vec<MetricDistribution>,
    /// `(index, learner, iteration, redraws)` for iterations whose split was
    /// redrawn.
    pub redrawn: Vec<(IndexId, ModelFamily, u64, u64)>,
    /// `(index, learner, iteration)` where the solver hit its iteration cap.
    pub unconverged: Vec<(IndexId, ModelFamily, u64)>,
}

impl ExperimentResult {
    pub fn get(&self, index: IndexId, learner: ModelFamily, metric: Metric) -> Option<&MetricDistribution> {
        self.distributions.iter().find(|d| d.index_id == index && d.learner == learner && d.metric == metric)
    }

    /// Adds the four distributions from a learner's iteration outcomes,
    /// which must be ordered by iteration.
    pub fn push_outcomes(&mut self, index: IndexId, learner: ModelFamily, outcomes: &[IterationOutcome]) {
        for m in Metric::ALL {
            let values = outcomes.iter().map(|o| o.metrics.get(m)).collect();
            self.distributions.push(MetricDistribution::new(index, learner, m, values));
        }
        for o in outcomes {
            if o.redraws > 0 {
                self.redrawn.push((index, learner, o.iteration, o.redraws));
            }
            if !o.converged {
                self.unconverged.push((index, learner, o.iteration));
            }
        }
    }

    pub fn learners(&self) -> Vec<ModelFamily> {
        let mut l: Vec<ModelFamily> = self.distributions.iter().map(|d| d.learner).collect();
        l.sort_unstable();
        l.dedup();
        l
    }
}

/// Runs every configured index and learner sequentially. `matrices` pairs an
/// index with its prepared feature rows.
pub fn run_experiment(cfg: &ExperimentConfig, matrices: &[(IndexId, FeatureMatrix)]) -> Result<ExperimentResult> {
    cfg.validate().map_err(|e| Error::InvalidArgument(e.join("; ")))?;
    let mut result = ExperimentResult::default();
    for index in &cfg.indexes {
        let fm = matrices
            .iter()
            .find(|(id, _)| id == index)
            .map(|(_, fm)| fm)
            .ok_or_else(|| Error::InvalidArgument(alloc::format!("no feature matrix for {index}")))?;
        for spec in &cfg.learners {
            let outcomes = (0..cfg.iterations as u64)
                .map(|i| run_iteration(fm, spec, cfg.train_fraction, cfg.seed, i))
                .collect::<Result<Vec<_>>>()?;
            result.push_outcomes(*index, spec.family, &outcomes);
        }
    }
    Ok(result)
}

/// Pooled-variance two-sample t-test with Bonferroni adjustment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTestResult {
    pub t: f64,
    pub df: f64,
    pub p: f64,
    /// `min(1, m·p)`.
    pub p_adjusted: f64,
    pub comparisons: usize,
    /// Raw `p < 0.05`.
    pub significant_05: bool,
    /// Raw `p < 0.005`.
    pub significant_005: bool,
}

pub fn two_tailed_ttest(a: &[f64], b: &[f64], m_comparisons: usize) -> Result<TTestResult> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::TooShort { needed: 2, got: a.len().min(b.len()) });
    }
    if m_comparisons == 0 {
        return Err(Error::InvalidArgument("number of comparisons must be at least 1".into()));
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let df = na + nb - 2.0;
    let diff = stats::mean(a) - stats::mean(b);
    let sp2 = ((na - 1.0) * stats::sample_variance(a) + (nb - 1.0) * stats::sample_variance(b)) / df;
    let t = if sp2 > 0.0 {
        diff / sqrt(sp2 * (1.0 / na + 1.0 / nb))
    } else if diff == 0.0 {
        0.0
    } else {
        f64::INFINITY.copysign(diff)
    };
    let p = stats::student_t_two_tailed_p(t, df);
    Ok(TTestResult {
        t,
        df,
        p,
        p_adjusted: (m_comparisons as f64 * p).min(1.0),
        comparisons: m_comparisons,
        significant_05: p < 0.05,
        significant_005: p < 0.005,
    })
}

/// Which comparison family a row belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComparisonTable {
    /// `at-k` against `ta-k`.
    RatioDirection,
    /// Each ratio against its two constituent cluster powers.
    RatioVsConstituent,
    /// `at-1`, `at-3` against `at-2` and `ta-1`, `ta-3` against `ta-2`.
    ClusterChoice,
}

impl ComparisonTable {
    pub const ALL: [ComparisonTable; 3] =
        [ComparisonTable::RatioDirection, ComparisonTable::RatioVsConstituent, ComparisonTable::ClusterChoice];

    pub fn as_str(self) -> &'static str {
        match self {
            ComparisonTable::RatioDirection => "ratio_direction",
            ComparisonTable::RatioVsConstituent => "ratio_vs_constituent",
            ComparisonTable::ClusterChoice => "cluster_choice",
        }
    }

    /// Ordered `(a, b)` pairs; `t > 0` means `a` scored higher.
    pub fn pairs(self) -> Vec<(IndexId, IndexId)> {
        use IndexId::*;
        match self {
            ComparisonTable::RatioDirection => alloc::vec![(At1, Ta1), (At2, Ta2), (At3, Ta3)],
            ComparisonTable::RatioVsConstituent => IndexId::RATIOS
                .iter()
                .flat_map(|r| {
                    let (num, den) = r.constituents().expect("ratio index");
                    [(*r, num), (*r, den)]
                })
                .collect(),
            ComparisonTable::ClusterChoice => alloc::vec![(At1, At2), (At3, At2), (Ta1, Ta2), (Ta3, Ta2)],
        }
    }
}

/// One t-test row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub table: ComparisonTable,
    pub learner: ModelFamily,
    pub metric: Metric,
    pub index_a: IndexId,
    pub index_b: IndexId,
    pub mean_a: f64,
    pub mean_b: f64,
    pub test: TTestResult,
}

/// Runs `table` for every learner in `result` on `metric`. The Bonferroni
/// factor is the number of pairs in the table.
pub fn compare_table(result: &ExperimentResult, table: ComparisonTable, metric: Metric) -> Result<Vec<Comparison>> {
    let pairs = table.pairs();
    let m = pairs.len();
    let mut out = Vec::new();
    for learner in result.learners() {
        for (a, b) in &pairs {
            let get = |id: IndexId| {
                result.get(id, learner, metric).ok_or_else(|| {
                    Error::InvalidArgument(alloc::format!("missing {metric} distribution for {id} / {learner}"))
                })
            };
            let (da, db) = (get(*a)?, get(*b)?);
            out.push(Comparison {
                table,
                learner,
                metric,
                index_a: *a,
                index_b: *b,
                mean_a: da.mean,
                mean_b: db.mean,
                test: two_tailed_ttest(&da.values, &db.values, m)?,
            });
        }
    }
    Ok(out)
}

/// All three comparison tables.
pub fn compare_indexes(result: &ExperimentResult, metric: Metric) -> Result<Vec<Comparison>> {
    let mut out = Vec::new();
    for t in ComparisonTable::ALL {
        out.extend(compare_table(result, t, metric)?);
    }
    Ok(out)
}

/// Gaussian kernel density of `values` on `points` evenly spaced points over
/// `[0, 1]`, the range of every metric.
pub fn density_series(values: &[f64], points: usize) -> Vec<(f64, f64)> {
    let grid: Vec<f64> = (0..points).map(|i| if points == 1 { 0.5 } else { i as f64 / (points - 1) as f64 }).collect();
    let dens = stats::gaussian_kde(values, &grid);
    grid.into_iter().zip(dens).collect()
}
