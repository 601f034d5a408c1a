//! Logistic regression, linear SVM and CART decision trees on z-scored
//! features, plus the four evaluation metrics.
//!
//! [`train`] fits a [`Normalizer`] on the training rows and stores it in the
//! model, so [`TrainedModel::predict`] takes raw feature rows. The linear
//! families score `w·z + b` and predict [`WorkloadClass::SuperOptimal`] for
//! positive scores.
//!
//! - Logistic regression minimises `½‖w‖² + C Σ log(1 + exp(−yᵢ(w·zᵢ + b)))`
//!   with damped Newton steps until the gradient norm is below the tolerance.
//!   The bias is not penalised.
//! - The linear SVM minimises `½‖(w, b)‖² + C Σ max(0, 1 − yᵢ(w·zᵢ + b))` by
//!   dual coordinate descent; the bias is an extra constant feature.
//! - The tree splits greedily on Gini gain at midpoints between distinct
//!   values and routes `z ≤ threshold` left.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use libm::{exp, fabs, log1p, sqrt};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::linalg::{cholesky_solve, dot, Matrix};
use crate::recording::WorkloadClass;
use crate::rng;
use crate::{Error, Result};

/// Standard deviations below this are replaced by 1.
pub const SD_FLOOR: f64 = 1e-12;

/// Per-column mean and population standard deviation of training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
}

impl Normalizer {
    pub fn fit(x: &Matrix) -> Result<Self> {
        let n = x.rows();
        if n == 0 {
            return Err(Error::InvalidArgument("cannot fit a normalizer on zero rows".into()));
        }
        let d = x.cols();
        let mut mean = alloc::vec![0.0; d];
        for i in 0..n {
            for (m, v) in mean.iter_mut().zip(x.row(i)) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);
        let mut var = alloc::vec![0.0; d];
        for i in 0..n {
            for ((s, v), m) in var.iter_mut().zip(x.row(i)).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let sd = var.iter().map(|s| sqrt(s / n as f64)).map(|s| if s < SD_FLOOR { 1.0 } else { s }).collect();
        Ok(Self { mean, sd })
    }

    pub fn arity(&self) -> usize {
        self.mean.len()
    }

    pub fn transform_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter().zip(&self.mean).zip(&self.sd).map(|((v, m), s)| (v - m) / s).collect()
    }

    pub fn transform(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.arity() {
            return Err(arity_error(self.arity(), x.cols()));
        }
        let mut out = Vec::with_capacity(x.rows() * x.cols());
        for i in 0..x.rows() {
            out.extend(self.transform_row(x.row(i)));
        }
        Matrix::from_vec(x.rows(), x.cols(), out)
    }
}

fn arity_error(expected: usize, got: usize) -> Error {
    Error::Shape(alloc::format!("model expects {expected} features, got {got}"))
}

/// Classifier family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ModelFamily {
    LogisticRegression,
    LinearSvm,
    DecisionTree,
}

impl ModelFamily {
    pub const ALL: [ModelFamily; 3] = [ModelFamily::LogisticRegression, ModelFamily::LinearSvm, ModelFamily::DecisionTree];

    /// Short label used in reports.
    pub fn as_str(self) -> &'static str {
        match self {
            ModelFamily::LogisticRegression => "L-R",
            ModelFamily::LinearSvm => "SVM",
            ModelFamily::DecisionTree => "DTR",
        }
    }
}

impl fmt::Display for ModelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "l-r" | "lr" | "logistic" | "logisticregression" | "logistic_regression" => Ok(ModelFamily::LogisticRegression),
            "svm" | "linearsvm" | "linear_svm" => Ok(ModelFamily::LinearSvm),
            "dtr" | "tree" | "decisiontree" | "decision_tree" => Ok(ModelFamily::DecisionTree),
            other => Err(Error::InvalidArgument(alloc::format!("unknown learner `{other}`"))),
        }
    }
}

/// Learner family and hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub family: ModelFamily,
    /// Inverse regularisation strength of the linear families.
    #[serde(default = "default_c")]
    pub c: f64,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
    #[serde(default = "default_min_samples_split")]
    pub min_samples_split: usize,
    #[serde(default)]
    pub max_depth: Option<usize>,
}

fn default_c() -> f64 {
    1.0
}
fn default_tolerance() -> f64 {
    1e-4
}
fn default_max_iterations() -> usize {
    1000
}
fn default_min_samples_split() -> usize {
    2
}

impl ModelSpec {
    pub fn new(family: ModelFamily) -> Self {
        Self {
            family,
            c: default_c(),
            tolerance: default_tolerance(),
            max_iterations: default_max_iterations(),
            min_samples_split: default_min_samples_split(),
            max_depth: None,
        }
    }

    pub fn defaults() -> Vec<Self> {
        ModelFamily::ALL.iter().map(|f| Self::new(*f)).collect()
    }

    /// Lists every invalid field.
    pub fn validate(&self) -> core::result::Result<(), Vec<String>> {
        let mut errs = Vec::new();
        if !(self.c > 0.0 && self.c.is_finite()) {
            errs.push(alloc::format!("c must be positive and finite, got {}", self.c));
        }
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            errs.push(alloc::format!("tolerance must be positive, got {}", self.tolerance));
        }
        if self.max_iterations == 0 {
            errs.push("max_iterations must be at least 1".into());
        }
        if self.min_samples_split < 2 {
            errs.push(alloc::format!("min_samples_split must be at least 2, got {}", self.min_samples_split));
        }
        if self.max_depth == Some(0) {
            errs.push("max_depth must be at least 1 when set".into());
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(errs)
        }
    }
}

/// A tree node; children are indices into [`ModelParams::Tree::nodes`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "lowercase")]
pub enum TreeNode {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
        /// Gini gain of the split; zero only when no split of the node had
        /// positive gain.
        gain: f64,
    },
    Leaf {
        class: WorkloadClass,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelParams {
    Linear { weights: Vec<f64>, bias: f64 },
    Tree { nodes: Vec<TreeNode> },
}

/// A fitted classifier and the normalizer it was trained behind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub family: ModelFamily,
    pub normalizer: Normalizer,
    pub params: ModelParams,
    /// `false` when the solver hit its iteration cap.
    pub converged: bool,
    /// Stopping quantity at exit: gradient norm (L-R) or projected-gradient
    /// gap (SVM); 0 for trees.
    pub final_tolerance: f64,
}

impl TrainedModel {
    /// Decision score on a raw row: `w·z + b` for the linear families,
    /// ±1 for trees.
    pub fn decision(&self, row: &[f64]) -> Result<f64> {
        if row.len() != self.normalizer.arity() {
            return Err(arity_error(self.normalizer.arity(), row.len()));
        }
        let z = self.normalizer.transform_row(row);
        Ok(decision_normalized(&self.params, &z))
    }

    pub fn predict_row(&self, row: &[f64]) -> Result<WorkloadClass> {
        self.decision(row).map(class_of_score)
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<WorkloadClass>> {
        if x.rows() > 0 && x.cols() != self.normalizer.arity() {
            return Err(arity_error(self.normalizer.arity(), x.cols()));
        }
        (0..x.rows()).map(|i| self.predict_row(x.row(i))).collect()
    }
}

fn class_of_score(s: f64) -> WorkloadClass {
    if s > 0.0 {
        WorkloadClass::SuperOptimal
    } else {
        WorkloadClass::Suboptimal
    }
}

/// Score of already normalized features.
pub fn decision_normalized(params: &ModelParams, z: &[f64]) -> f64 {
    match params {
        ModelParams::Linear { weights, bias } => dot(weights, z) + bias,
        ModelParams::Tree { nodes } => {
            let mut i = 0;
            loop {
                match &nodes[i] {
                    TreeNode::Split { feature, threshold, left, right, .. } => {
                        i = if z[*feature] <= *threshold { *left } else { *right };
                    }
                    TreeNode::Leaf { class } => return if class.is_positive() { 1.0 } else { -1.0 },
                }
            }
        }
    }
}

fn sign(c: WorkloadClass) -> f64 {
    if c.is_positive() {
        1.0
    } else {
        -1.0
    }
}

/// Fits a normalizer on `x`, then the model on the normalized rows.
pub fn train(spec: &ModelSpec, x: &Matrix, y: &[WorkloadClass], seed: u64) -> Result<TrainedModel> {
    let normalizer = Normalizer::fit(x)?;
    let z = normalizer.transform(x)?;
    let fit = train_normalized(spec, &z, y, seed)?;
    Ok(TrainedModel {
        family: spec.family,
        normalizer,
        params: fit.params,
        converged: fit.converged,
        final_tolerance: fit.final_tolerance,
    })
}

/// Solver output on normalized data.
#[derive(Debug, Clone, PartialEq)]
pub struct Fit {
    pub params: ModelParams,
    pub converged: bool,
    pub final_tolerance: f64,
}

pub fn train_normalized(spec: &ModelSpec, z: &Matrix, y: &[WorkloadClass], seed: u64) -> Result<Fit> {
    spec.validate().map_err(|e| Error::InvalidArgument(e.join("; ")))?;
    if z.rows() != y.len() {
        return Err(Error::Shape(alloc::format!("{} rows for {} labels", z.rows(), y.len())));
    }
    if !y.iter().any(|c| c.is_positive()) || y.iter().all(|c| c.is_positive()) {
        return Err(Error::SingleClass("training labels".into()));
    }
    if !z.is_finite() {
        return Err(Error::InvalidArgument("training rows contain non-finite values".into()));
    }
    Ok(match spec.family {
        ModelFamily::LogisticRegression => logistic(spec, z, y),
        ModelFamily::LinearSvm => svm(spec, z, y, seed),
        ModelFamily::DecisionTree => Fit { params: tree(spec, z, y), converged: true, final_tolerance: 0.0 },
    })
}

/// `log(1 + exp(-m))` without overflow.
fn log_loss(m: f64) -> f64 {
    if m > 0.0 {
        log1p(exp(-m))
    } else {
        -m + log1p(exp(m))
    }
}

/// `1 / (1 + exp(m))`.
fn sigmoid_neg(m: f64) -> f64 {
    if m > 0.0 {
        let e = exp(-m);
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + exp(m))
    }
}

/// Objective of the logistic regression; parameters are `[w..., b]`.
pub fn logistic_objective(theta: &[f64], z: &Matrix, y: &[WorkloadClass], c: f64) -> f64 {
    let d = z.cols();
    let w = &theta[..d];
    let reg = 0.5 * dot(w, w);
    let loss: f64 = (0..z.rows()).map(|i| log_loss(sign(y[i]) * (dot(w, z.row(i)) + theta[d]))).sum();
    reg + c * loss
}

/// Gradient of [`logistic_objective`].
pub fn logistic_gradient(theta: &[f64], z: &Matrix, y: &[WorkloadClass], c: f64) -> Vec<f64> {
    let d = z.cols();
    let mut g = theta.to_vec();
    g[d] = 0.0;
    for (i, cls) in y.iter().enumerate() {
        let yi = sign(*cls);
        let m = yi * (dot(&theta[..d], z.row(i)) + theta[d]);
        let coef = -c * yi * sigmoid_neg(m);
        for (gj, xj) in g.iter_mut().zip(z.row(i)) {
            *gj += coef * xj;
        }
        g[d] += coef;
    }
    g
}

fn norm(v: &[f64]) -> f64 {
    sqrt(dot(v, v))
}

fn logistic(spec: &ModelSpec, z: &Matrix, y: &[WorkloadClass]) -> Fit {
    let d = z.cols();
    let c = spec.c;
    let mut theta = alloc::vec![0.0; d + 1];
    let mut g = logistic_gradient(&theta, z, y, c);
    let mut f = logistic_objective(&theta, z, y, c);
    let mut it = 0;
    while norm(&g) > spec.tolerance && it < spec.max_iterations {
        it += 1;
        let mut h = Matrix::zeros(d + 1, d + 1);
        for j in 0..d {
            h[(j, j)] = 1.0;
        }
        for (i, cls) in y.iter().enumerate() {
            let m = sign(*cls) * (dot(&theta[..d], z.row(i)) + theta[d]);
            let s = sigmoid_neg(m);
            let wgt = c * s * (1.0 - s);
            if wgt == 0.0 {
                continue;
            }
            let row = z.row(i);
            for a in 0..=d {
                let xa = if a < d { row[a] } else { 1.0 };
                for b in a..=d {
                    let xb = if b < d { row[b] } else { 1.0 };
                    h[(a, b)] += wgt * xa * xb;
                }
            }
        }
        for a in 0..=d {
            for b in 0..a {
                h[(a, b)] = h[(b, a)];
            }
        }
        // A tiny ridge on the bias keeps the system solvable when every
        // margin has saturated.
        h[(d, d)] += 1e-12;
        let step = match cholesky_solve(&h, &g) {
            Ok(s) => s,
            Err(_) => g.clone(),
        };
        let slope = dot(&g, &step);
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let cand: Vec<f64> = theta.iter().zip(&step).map(|(p, s)| p - t * s).collect();
            let fc = logistic_objective(&cand, z, y, c);
            if fc <= f - 1e-4 * t * slope {
                theta = cand;
                f = fc;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        g = logistic_gradient(&theta, z, y, c);
        if !accepted {
            break;
        }
    }
    let gn = norm(&g);
    Fit {
        params: ModelParams::Linear { weights: theta[..d].to_vec(), bias: theta[d] },
        converged: gn <= spec.tolerance,
        final_tolerance: gn,
    }
}

fn svm(spec: &ModelSpec, z: &Matrix, y: &[WorkloadClass], seed: u64) -> Fit {
    let n = z.rows();
    let d = z.cols();
    let c = spec.c;
    let ys: Vec<f64> = y.iter().map(|v| sign(*v)).collect();
    // Augmented rows carry the bias as feature d with value 1.
    let qii: Vec<f64> = (0..n).map(|i| dot(z.row(i), z.row(i)) + 1.0).collect();
    let mut alpha = alloc::vec![0.0; n];
    let mut w = alloc::vec![0.0; d + 1];
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = rng::stream(seed, &[0x5356_4d00]);
    let mut gap = f64::INFINITY;
    let mut it = 0;
    while it < spec.max_iterations {
        it += 1;
        order.shuffle(&mut rng);
        let mut pg_max = f64::NEG_INFINITY;
        let mut pg_min = f64::INFINITY;
        for &i in &order {
            let row = z.row(i);
            let g = ys[i] * (dot(&w[..d], row) + w[d]) - 1.0;
            let pg = if alpha[i] == 0.0 {
                g.min(0.0)
            } else if alpha[i] == c {
                g.max(0.0)
            } else {
                g
            };
            pg_max = pg_max.max(pg);
            pg_min = pg_min.min(pg);
            if fabs(pg) > 1e-14 {
                let old = alpha[i];
                alpha[i] = (old - g / qii[i]).clamp(0.0, c);
                let delta = (alpha[i] - old) * ys[i];
                for (wj, xj) in w.iter_mut().zip(row) {
                    *wj += delta * xj;
                }
                w[d] += delta;
            }
        }
        gap = pg_max - pg_min;
        if gap <= spec.tolerance {
            break;
        }
    }
    Fit {
        params: ModelParams::Linear { weights: w[..d].to_vec(), bias: w[d] },
        converged: gap <= spec.tolerance,
        final_tolerance: gap,
    }
}

/// Gini impurity of a node with `pos` positives out of `n`.
pub fn gini(pos: usize, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let p = pos as f64 / n as f64;
    2.0 * p * (1.0 - p)
}

/// Best split of `rows` as `(feature, threshold, gain)`. Ties keep the
/// first feature and the lowest threshold. `None` when every feature is
/// constant on `rows`.
pub fn best_split(z: &Matrix, y: &[WorkloadClass], rows: &[usize]) -> Option<(usize, f64, f64)> {
    let n = rows.len();
    let pos_total = rows.iter().filter(|&&i| y[i].is_positive()).count();
    let parent = gini(pos_total, n);
    let mut best: Option<(usize, f64, f64)> = None;
    let mut sorted = rows.to_vec();
    for f in 0..z.cols() {
        sorted.sort_by(|&a, &b| z[(a, f)].total_cmp(&z[(b, f)]));
        let mut pos_left = 0;
        for k in 0..n - 1 {
            if y[sorted[k]].is_positive() {
                pos_left += 1;
            }
            let (lo, hi) = (z[(sorted[k], f)], z[(sorted[k + 1], f)]);
            if lo == hi {
                continue;
            }
            let nl = k + 1;
            let nr = n - nl;
            let child = (nl as f64 * gini(pos_left, nl) + nr as f64 * gini(pos_total - pos_left, nr)) / n as f64;
            let gain = parent - child;
            let threshold = lo + (hi - lo) / 2.0;
            if best.is_none_or(|(_, _, g)| gain > g + 1e-15) {
                best = Some((f, threshold, gain.max(0.0)));
            }
        }
    }
    best
}

fn tree(spec: &ModelSpec, z: &Matrix, y: &[WorkloadClass]) -> ModelParams {
    let mut nodes = Vec::new();
    let rows: Vec<usize> = (0..z.rows()).collect();
    grow(spec, z, y, rows, 0, &mut nodes);
    ModelParams::Tree { nodes }
}

fn grow(spec: &ModelSpec, z: &Matrix, y: &[WorkloadClass], rows: Vec<usize>, depth: usize, nodes: &mut Vec<TreeNode>) -> usize {
    let id = nodes.len();
    let pos = rows.iter().filter(|&&i| y[i].is_positive()).count();
    // Majority class; ties go to the negative class.
    let majority = if 2 * pos > rows.len() { WorkloadClass::SuperOptimal } else { WorkloadClass::Suboptimal };
    nodes.push(TreeNode::Leaf { class: majority });
    let pure = pos == 0 || pos == rows.len();
    if pure || rows.len() < spec.min_samples_split || spec.max_depth.is_some_and(|m| depth >= m) {
        return id;
    }
    let Some((feature, threshold, gain)) = best_split(z, y, &rows) else {
        return id;
    };
    let (l, r): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| z[(i, feature)] <= threshold);
    let left = grow(spec, z, y, l, depth + 1, nodes);
    let right = grow(spec, z, y, r, depth + 1, nodes);
    nodes[id] = TreeNode::Split { feature, threshold, left, right, gain };
    id
}

/// Confusion counts and the derived metrics. `SuperOptimal` is positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Set when a denominator was zero and the metric was reported as 0.
    pub precision_undefined: bool,
    pub recall_undefined: bool,
    pub f1_undefined: bool,
}

impl MetricsReport {
    pub fn from_counts(tp: usize, tn: usize, fp: usize, fn_: usize) -> Result<Self> {
        let n = tp + tn + fp + fn_;
        if n == 0 {
            return Err(Error::InvalidArgument("metrics need at least one instance".into()));
        }
        let ratio = |a: usize, b: usize| if b == 0 { (0.0, true) } else { (a as f64 / b as f64, false) };
        let (precision, pu) = ratio(tp, tp + fp);
        let (recall, ru) = ratio(tp, tp + fn_);
        let (f1, fu) = if precision + recall > 0.0 { (2.0 * precision * recall / (precision + recall), false) } else { (0.0, true) };
        Ok(Self {
            tp,
            tn,
            fp,
            fn_,
            accuracy: (tp + tn) as f64 / n as f64,
            precision,
            recall,
            f1,
            precision_undefined: pu,
            recall_undefined: ru,
            f1_undefined: fu,
        })
    }

    pub fn get(&self, metric: Metric) -> f64 {
        match metric {
            Metric::Accuracy => self.accuracy,
            Metric::Precision => self.precision,
            Metric::Recall => self.recall,
            Metric::F1 => self.f1,
        }
    }
}

/// Evaluation metric selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Accuracy,
    Precision,
    Recall,
    F1,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::Accuracy, Metric::Precision, Metric::Recall, Metric::F1];

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Accuracy => "accuracy",
            Metric::Precision => "precision",
            Metric::Recall => "recall",
            Metric::F1 => "f1",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

pub fn metrics(predictions: &[WorkloadClass], truths: &[WorkloadClass]) -> Result<MetricsReport> {
    if predictions.len() != truths.len() {
        return Err(Error::Shape(alloc::format!("{} predictions for {} truths", predictions.len(), truths.len())));
    }
    let (mut tp, mut tn, mut fp, mut fn_) = (0, 0, 0, 0);
    for (p, t) in predictions.iter().zip(truths) {
        match (p.is_positive(), t.is_positive()) {
            (true, true) => tp += 1,
            (false, false) => tn += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
        }
    }
    MetricsReport::from_counts(tp, tn, fp, fn_)
}

impl fmt::Display for TrainedModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.params {
            ModelParams::Linear { weights, .. } => write!(f, "{} ({} weights)", self.family, weights.len()),
            ModelParams::Tree { nodes } => write!(f, "{} ({} nodes)", self.family, nodes.len()),
        }
    }
}
