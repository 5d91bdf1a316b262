//! Classifiers and evaluation: stratified splitting, exhaustive
//! Minkowski KNN, Gaussian naive Bayes, confusion-matrix metrics, and
//! k-fold cross-validation.
//!
//! Every tie in the module breaks deterministically: nearest-neighbor
//! ranking falls back to the lower training index, and class-score ties
//! resolve toward the lower class index.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SplitMix64;

// ======================= Dataset =======================

/// Feature vectors with integer labels indexing into a fixed class list.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub class_names: Vec<String>,
}

impl LabeledDataset {
    pub fn new(features: Vec<Vec<f64>>, labels: Vec<usize>, class_names: Vec<String>) -> Result<Self> {
        if features.len() != labels.len() {
            return Err(Error::Dataset(format!(
                "{} feature vectors but {} labels",
                features.len(),
                labels.len()
            )));
        }
        if class_names.is_empty() {
            return Err(Error::Dataset("empty class list".into()));
        }
        if let Some(dim) = features.first().map(Vec::len) {
            if let Some(bad) = features.iter().find(|f| f.len() != dim) {
                return Err(Error::Dataset(format!(
                    "inconsistent feature dimensions: {} vs {}",
                    dim,
                    bad.len()
                )));
            }
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= class_names.len()) {
            return Err(Error::Dataset(format!(
                "label {bad} out of range for {} classes",
                class_names.len()
            )));
        }
        Ok(Self {
            features,
            labels,
            class_names,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.first().map_or(0, Vec::len)
    }

    /// New dataset holding the given sample indices, in order.
    pub fn subset(&self, indices: &[usize]) -> LabeledDataset {
        LabeledDataset {
            features: indices.iter().map(|&i| self.features[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            class_names: self.class_names.clone(),
        }
    }
}

/// Index-level train/test split. With `stratify`, each class is shuffled
/// and cut independently so class proportions carry over; otherwise the
/// whole index range is shuffled and cut once. The train size per group is
/// `round(fraction * group_size)`.
pub fn split_indices(
    labels: &[usize],
    num_classes: usize,
    fraction: f64,
    seed: u64,
    stratify: bool,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "train fraction must be in (0, 1), got {fraction}"
        )));
    }
    if labels.is_empty() {
        return Err(Error::Dataset("cannot split an empty dataset".into()));
    }
    let mut rng = SplitMix64::new(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    if stratify {
        for class in 0..num_classes {
            let mut members: Vec<usize> = labels
                .iter()
                .enumerate()
                .filter(|&(_, &l)| l == class)
                .map(|(i, _)| i)
                .collect();
            if members.len() < 2 {
                return Err(Error::Dataset(format!(
                    "class {class} has {} samples; stratified splitting needs at least 2",
                    members.len()
                )));
            }
            rng.shuffle(&mut members);
            let n_train = (fraction * members.len() as f64).round() as usize;
            train.extend_from_slice(&members[..n_train]);
            test.extend_from_slice(&members[n_train..]);
        }
    } else {
        let mut all: Vec<usize> = (0..labels.len()).collect();
        rng.shuffle(&mut all);
        let n_train = (fraction * all.len() as f64).round() as usize;
        train.extend_from_slice(&all[..n_train]);
        test.extend_from_slice(&all[n_train..]);
    }
    Ok((train, test))
}

/// Stratified train/test split of a dataset.
pub fn stratified_split(
    ds: &LabeledDataset,
    fraction: f64,
    seed: u64,
) -> Result<(LabeledDataset, LabeledDataset)> {
    let (train_idx, test_idx) =
        split_indices(&ds.labels, ds.class_names.len(), fraction, seed, true)?;
    Ok((ds.subset(&train_idx), ds.subset(&test_idx)))
}

// ======================= KNN =======================

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Weighting {
    Uniform,
    Distance,
}

impl std::str::FromStr for Weighting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(Weighting::Uniform),
            "distance" => Ok(Weighting::Distance),
            other => Err(Error::InvalidParameter(format!(
                "unknown weighting {other:?} (expected uniform or distance)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KnnConfig {
    pub k: usize,
    /// Minkowski order (1 = city block, 2 = Euclidean).
    pub p: f64,
    pub weighting: Weighting,
}

impl Default for KnnConfig {
    fn default() -> Self {
        Self {
            k: 9,
            p: 1.0,
            weighting: Weighting::Distance,
        }
    }
}

impl KnnConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidParameter("k must be at least 1".into()));
        }
        if !self.p.is_finite() || self.p < 1.0 {
            return Err(Error::InvalidParameter(format!(
                "Minkowski order must be finite and at least 1, got {}",
                self.p
            )));
        }
        Ok(())
    }
}

/// Minkowski distance of order `p`.
pub fn minkowski_distance(a: &[f64], b: &[f64], p: f64) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    if p == 1.0 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
    } else if p == 2.0 {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()
    } else {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).abs().powf(p))
            .sum::<f64>()
            .powf(1.0 / p)
    }
}

/// Exhaustive KNN vote. Neighbor ranking ties break toward the lower
/// training index. If any selected neighbor matches the query exactly
/// (distance zero), the vote restricts to those exact matches with equal
/// weights; otherwise weights follow the configured scheme. Class-score
/// ties resolve toward the lower class index.
pub fn knn_predict(train: &LabeledDataset, query: &[f64], cfg: &KnnConfig) -> Result<usize> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::Classifier("empty training set".into()));
    }
    if cfg.k > train.len() {
        return Err(Error::Classifier(format!(
            "k = {} exceeds the {} training samples",
            cfg.k,
            train.len()
        )));
    }
    if query.len() != train.dim() {
        return Err(Error::Classifier(format!(
            "query has {} dimensions, training data has {}",
            query.len(),
            train.dim()
        )));
    }
    let mut ranked: Vec<(f64, usize)> = train
        .features
        .iter()
        .enumerate()
        .map(|(i, f)| (minkowski_distance(query, f, cfg.p), i))
        .collect();
    ranked.sort_unstable_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    let selected = &ranked[..cfg.k];

    let mut votes = vec![0.0f64; train.class_names.len()];
    if selected.iter().any(|&(d, _)| d == 0.0) {
        for &(d, i) in selected.iter().filter(|&&(d, _)| d == 0.0) {
            let _ = d;
            votes[train.labels[i]] += 1.0;
        }
    } else {
        for &(d, i) in selected {
            let weight = match cfg.weighting {
                Weighting::Uniform => 1.0,
                Weighting::Distance => 1.0 / d,
            };
            votes[train.labels[i]] += weight;
        }
    }
    Ok(argmax(&votes))
}

/// First index of the strict maximum (lower index wins ties).
fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

// ======================= Gaussian naive Bayes =======================

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GnbConfig {
    /// Fraction of the largest whole-set feature variance added to every
    /// per-class variance for numerical stability.
    pub var_smoothing: f64,
}

impl Default for GnbConfig {
    fn default() -> Self {
        Self {
            var_smoothing: 3.51e-8,
        }
    }
}

impl GnbConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.var_smoothing.is_finite() || self.var_smoothing < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "var_smoothing must be finite and non-negative, got {}",
                self.var_smoothing
            )));
        }
        Ok(())
    }
}

/// Fitted Gaussian naive Bayes model (per-class feature means and
/// smoothed population variances, plus log priors from class frequencies).
#[derive(Debug, Clone, PartialEq)]
pub struct GnbModel {
    pub priors: Vec<f64>,
    pub means: Vec<Vec<f64>>,
    pub variances: Vec<Vec<f64>>,
    pub num_classes: usize,
    dim: usize,
}

pub fn gnb_fit(train: &LabeledDataset, cfg: &GnbConfig) -> Result<GnbModel> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::Classifier("empty training set".into()));
    }
    let num_classes = train.class_names.len();
    let dim = train.dim();
    let n = train.len();

    // Whole-set population variance per dimension, for the smoothing term.
    let mut grand_mean = vec![0.0f64; dim];
    for f in &train.features {
        for (m, &v) in grand_mean.iter_mut().zip(f) {
            *m += v;
        }
    }
    for m in &mut grand_mean {
        *m /= n as f64;
    }
    let mut grand_var = vec![0.0f64; dim];
    for f in &train.features {
        for ((gv, &v), &m) in grand_var.iter_mut().zip(f).zip(&grand_mean) {
            *gv += (v - m) * (v - m);
        }
    }
    for gv in &mut grand_var {
        *gv /= n as f64;
    }
    let epsilon = cfg.var_smoothing * grand_var.iter().cloned().fold(0.0, f64::max);

    let mut counts = vec![0usize; num_classes];
    let mut means = vec![vec![0.0f64; dim]; num_classes];
    for (f, &label) in train.features.iter().zip(&train.labels) {
        counts[label] += 1;
        for (m, &v) in means[label].iter_mut().zip(f) {
            *m += v;
        }
    }
    for (class, count) in counts.iter().enumerate() {
        if *count == 0 {
            return Err(Error::Classifier(format!(
                "class {:?} has no training samples",
                train.class_names[class]
            )));
        }
        for m in &mut means[class] {
            *m /= *count as f64;
        }
    }

    let mut variances = vec![vec![0.0f64; dim]; num_classes];
    for (f, &label) in train.features.iter().zip(&train.labels) {
        for ((v, &x), &m) in variances[label].iter_mut().zip(f).zip(&means[label]) {
            *v += (x - m) * (x - m);
        }
    }
    for (class, count) in counts.iter().enumerate() {
        for v in &mut variances[class] {
            *v = *v / *count as f64 + epsilon;
            if *v <= 0.0 {
                return Err(Error::Classifier(
                    "zero variance with zero smoothing; increase var_smoothing".into(),
                ));
            }
        }
    }

    let priors = counts.iter().map(|&c| c as f64 / n as f64).collect();
    Ok(GnbModel {
        priors,
        means,
        variances,
        num_classes,
        dim,
    })
}

pub fn gnb_predict(model: &GnbModel, query: &[f64]) -> Result<usize> {
    if query.len() != model.dim {
        return Err(Error::Classifier(format!(
            "query has {} dimensions, model has {}",
            query.len(),
            model.dim
        )));
    }
    let ln_2pi = (2.0 * std::f64::consts::PI).ln();
    let mut scores = Vec::with_capacity(model.num_classes);
    for class in 0..model.num_classes {
        let mut score = model.priors[class].ln();
        for ((&x, &m), &v) in query
            .iter()
            .zip(&model.means[class])
            .zip(&model.variances[class])
        {
            score += -0.5 * (ln_2pi + v.ln()) - (x - m) * (x - m) / (2.0 * v);
        }
        scores.push(score);
    }
    Ok(argmax(&scores))
}

// ======================= Classifier dispatch =======================

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassifierConfig {
    Knn(KnnConfig),
    Gnb(GnbConfig),
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig::Knn(KnnConfig::default())
    }
}

impl ClassifierConfig {
    pub fn name(&self) -> &'static str {
        match self {
            ClassifierConfig::Knn(_) => "knn",
            ClassifierConfig::Gnb(_) => "gnb",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ClassifierConfig::Knn(c) => c.validate(),
            ClassifierConfig::Gnb(c) => c.validate(),
        }
    }
}

/// Trains (where applicable) and predicts labels for a batch of queries.
pub fn classify(
    train: &LabeledDataset,
    queries: &[Vec<f64>],
    cfg: &ClassifierConfig,
) -> Result<Vec<usize>> {
    match cfg {
        ClassifierConfig::Knn(knn) => queries
            .iter()
            .map(|q| knn_predict(train, q, knn))
            .collect(),
        ClassifierConfig::Gnb(gnb) => {
            let model = gnb_fit(train, gnb)?;
            queries.iter().map(|q| gnb_predict(&model, q)).collect()
        }
    }
}

// ======================= Metrics =======================

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCounts {
    pub true_pos: usize,
    pub false_pos: usize,
    pub false_neg: usize,
    pub true_neg: usize,
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub num_classes: usize,
    /// `confusion[t][p]`: samples of true class `t` predicted as `p`.
    pub confusion: Vec<Vec<usize>>,
    pub per_class: Vec<ClassCounts>,
    pub weighted_precision: f64,
    pub weighted_recall: f64,
    pub weighted_f1: f64,
}

/// Builds the confusion matrix and per-class counts. Weighted metrics are
/// left at zero; see [`weighted_metrics`].
pub fn confusion_matrix(
    true_labels: &[usize],
    predicted: &[usize],
    num_classes: usize,
) -> Result<MetricsReport> {
    if true_labels.len() != predicted.len() {
        return Err(Error::Classifier(format!(
            "{} true labels but {} predictions",
            true_labels.len(),
            predicted.len()
        )));
    }
    if true_labels.is_empty() {
        return Err(Error::Classifier("no predictions to score".into()));
    }
    let mut confusion = vec![vec![0usize; num_classes]; num_classes];
    for (&t, &p) in true_labels.iter().zip(predicted) {
        if t >= num_classes || p >= num_classes {
            return Err(Error::Classifier(format!(
                "label ({t}, {p}) out of range for {num_classes} classes"
            )));
        }
        confusion[t][p] += 1;
    }
    let total = true_labels.len();
    let per_class = (0..num_classes)
        .map(|c| {
            let true_pos = confusion[c][c];
            let support: usize = confusion[c].iter().sum();
            let false_neg = support - true_pos;
            let false_pos: usize = (0..num_classes).map(|t| confusion[t][c]).sum::<usize>() - true_pos;
            let true_neg = total - true_pos - false_neg - false_pos;
            ClassCounts {
                true_pos,
                false_pos,
                false_neg,
                true_neg,
                support,
            }
        })
        .collect();
    Ok(MetricsReport {
        num_classes,
        confusion,
        per_class,
        weighted_precision: 0.0,
        weighted_recall: 0.0,
        weighted_f1: 0.0,
    })
}

/// Fills in support-weighted precision, recall, and F1. Classes with zero
/// support are skipped; a per-class ratio with a zero denominator counts
/// as zero.
pub fn weighted_metrics(mut report: MetricsReport) -> Result<MetricsReport> {
    let mut total_support = 0.0f64;
    let mut precision_sum = 0.0f64;
    let mut recall_sum = 0.0f64;
    let mut f1_sum = 0.0f64;
    for counts in &report.per_class {
        if counts.support == 0 {
            continue;
        }
        let tp = counts.true_pos as f64;
        let precision = if counts.true_pos + counts.false_pos > 0 {
            tp / (counts.true_pos + counts.false_pos) as f64
        } else {
            0.0
        };
        let recall = tp / (counts.true_pos + counts.false_neg) as f64;
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        let support = counts.support as f64;
        total_support += support;
        precision_sum += support * precision;
        recall_sum += support * recall;
        f1_sum += support * f1;
    }
    if total_support == 0.0 {
        return Err(Error::Classifier("all classes have zero support".into()));
    }
    report.weighted_precision = precision_sum / total_support;
    report.weighted_recall = recall_sum / total_support;
    report.weighted_f1 = f1_sum / total_support;
    Ok(report)
}

/// Confusion matrix plus weighted metrics in one call.
pub fn evaluate(
    true_labels: &[usize],
    predicted: &[usize],
    num_classes: usize,
) -> Result<MetricsReport> {
    weighted_metrics(confusion_matrix(true_labels, predicted, num_classes)?)
}

// ======================= Cross-validation =======================

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CvReport {
    pub folds: Vec<MetricsReport>,
    pub mean_precision: f64,
    pub mean_recall: f64,
    pub mean_f1: f64,
}

/// Stratified k-fold cross-validation: within each class, shuffled samples
/// are dealt round-robin to folds, so fold sizes differ by at most one per
/// class and every sample is validated exactly once.
pub fn kfold_cv(
    ds: &LabeledDataset,
    k_folds: usize,
    classifier: &ClassifierConfig,
    seed: u64,
) -> Result<CvReport> {
    if k_folds < 2 {
        return Err(Error::InvalidParameter(format!(
            "k_folds must be at least 2, got {k_folds}"
        )));
    }
    classifier.validate()?;
    let num_classes = ds.class_names.len();
    let mut assignment = vec![0usize; ds.len()];
    let mut rng = SplitMix64::new(seed);
    for class in 0..num_classes {
        let mut members: Vec<usize> = ds
            .labels
            .iter()
            .enumerate()
            .filter(|&(_, &l)| l == class)
            .map(|(i, _)| i)
            .collect();
        if members.len() < k_folds {
            return Err(Error::Dataset(format!(
                "class {class} has {} samples; {k_folds}-fold CV needs at least {k_folds}",
                members.len()
            )));
        }
        rng.shuffle(&mut members);
        for (pos, &idx) in members.iter().enumerate() {
            assignment[idx] = pos % k_folds;
        }
    }

    let mut folds = Vec::with_capacity(k_folds);
    for fold in 0..k_folds {
        let train_idx: Vec<usize> = (0..ds.len()).filter(|&i| assignment[i] != fold).collect();
        let val_idx: Vec<usize> = (0..ds.len()).filter(|&i| assignment[i] == fold).collect();
        let train = ds.subset(&train_idx);
        let val = ds.subset(&val_idx);
        let predictions = classify(&train, &val.features, classifier)?;
        folds.push(evaluate(&val.labels, &predictions, num_classes)?);
    }
    let k = folds.len() as f64;
    let mean_precision = folds.iter().map(|f| f.weighted_precision).sum::<f64>() / k;
    let mean_recall = folds.iter().map(|f| f.weighted_recall).sum::<f64>() / k;
    let mean_f1 = folds.iter().map(|f| f.weighted_f1).sum::<f64>() / k;
    Ok(CvReport {
        folds,
        mean_precision,
        mean_recall,
        mean_f1,
    })
}

// ======================= Tests =======================
