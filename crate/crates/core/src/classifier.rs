//! The abstaining robust classifier and its baselines.
//!
//! The classifier predicts the label of the nearest training feature when
//! that neighbor is strictly closer than the threshold τ and answers "don't
//! know" otherwise. Preprocessing with a separation parameter σ deletes, in
//! one simultaneous pass over the original dataset, every training point
//! whose nearest cross-label neighbor is closer than σ.

use crate::data::{nearest_neighbor, parse_dataset_str, LabeledDataset};
use crate::linalg::{dist, dot};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Threshold τ and separation parameter σ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifierConfig {
    pub tau: f64,
    pub sigma: f64,
}

impl ClassifierConfig {
    pub fn new(tau: f64, sigma: f64) -> Result<Self> {
        if !(tau >= 0.0) || !(sigma >= 0.0) || sigma.is_nan() {
            return Err(Error::Config(format!(
                "tau and sigma must be finite and >= 0 (tau may be +inf), got tau={tau}, sigma={sigma}"
            )));
        }
        if sigma.is_infinite() {
            return Err(Error::Config("sigma must be finite".into()));
        }
        Ok(Self { tau, sigma })
    }
}

/// A prediction or an abstention.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Label(u32),
    Abstain,
}

impl Outcome {
    pub fn is_abstain(&self) -> bool {
        matches!(self, Outcome::Abstain)
    }

    /// True when the outcome is a non-abstaining label different from `y`.
    pub fn is_wrong_label(&self, y: u32) -> bool {
        matches!(self, Outcome::Label(k) if *k != y)
    }
}

/// Nearest cross-label distance of each point, computed against the full
/// dataset (+inf when no cross-label point exists).
fn cross_label_distances(ds: &LabeledDataset) -> Vec<f64> {
    let m = ds.len();
    let mut out = vec![f64::INFINITY; m];
    for i in 0..m {
        for j in i + 1..m {
            if ds.label(i) != ds.label(j) {
                let d = dist(ds.feature(i), ds.feature(j));
                if d < out[i] {
                    out[i] = d;
                }
                if d < out[j] {
                    out[j] = d;
                }
            }
        }
    }
    out
}

/// Deletes every point whose nearest cross-label distance in the ORIGINAL
/// dataset is strictly below `sigma` (a single simultaneous pass, so the
/// criterion never cascades). Returns the surviving dataset together with the
/// removed original indices.
pub fn preprocess_separation(
    ds: &LabeledDataset,
    sigma: f64,
) -> Result<(LabeledDataset, Vec<usize>)> {
    if sigma < 0.0 || !sigma.is_finite() {
        return Err(Error::Config(format!("sigma must be finite and >= 0, got {sigma}")));
    }
    let dists = cross_label_distances(ds);
    let mut keep = Vec::new();
    let mut removed = Vec::new();
    for (i, d) in dists.iter().enumerate() {
        if *d < sigma {
            removed.push(i);
        } else {
            keep.push(i);
        }
    }
    if keep.is_empty() {
        return Err(Error::Empty(format!(
            "sigma={sigma} removed every training point"
        )));
    }
    Ok((ds.subset(&keep)?, removed))
}

/// σ-preprocessed training set plus threshold τ.
#[derive(Debug, Clone, PartialEq)]
pub struct RobustModel {
    train: LabeledDataset,
    config: ClassifierConfig,
    removed_indices: Vec<usize>,
}

impl RobustModel {
    /// Preprocesses `ds` with `config.sigma` and stores the survivors.
    pub fn fit(ds: &LabeledDataset, config: ClassifierConfig) -> Result<Self> {
        let (train, removed_indices) = preprocess_separation(ds, config.sigma)?;
        Ok(Self {
            train,
            config,
            removed_indices,
        })
    }

    pub fn train(&self) -> &LabeledDataset {
        &self.train
    }

    pub fn config(&self) -> ClassifierConfig {
        self.config
    }

    pub fn tau(&self) -> f64 {
        self.config.tau
    }

    pub fn removed_indices(&self) -> &[usize] {
        &self.removed_indices
    }

    /// Same model with a different threshold (the training set is unaffected
    /// by τ).
    pub fn with_tau(&self, tau: f64) -> Self {
        let mut out = self.clone();
        out.config.tau = tau;
        out
    }
}

/// Thresholded nearest-neighbor prediction: the label of the nearest
/// training point when its distance is strictly below τ, else abstain.
/// Ties break to the lowest training index.
pub fn predict(model: &RobustModel, x: &[f64]) -> Outcome {
    predict_with_tau(model, x, model.config.tau)
}

/// [`predict`] with an explicit threshold override.
pub fn predict_with_tau(model: &RobustModel, x: &[f64], tau: f64) -> Outcome {
    let (idx, d) = nearest_neighbor(&model.train, x);
    if d < tau {
        Outcome::Label(model.train.label(idx))
    } else {
        Outcome::Abstain
    }
}

/// Point-specific thresholds: τ_i = min distance from A_i to any point of B
/// with a different label (+inf when none exists).
pub fn point_specific_thresholds(set_a: &LabeledDataset, set_b: &LabeledDataset) -> Vec<f64> {
    (0..set_a.len())
        .map(|i| {
            let mut best = f64::INFINITY;
            for j in 0..set_b.len() {
                if set_b.label(j) != set_a.label(i) {
                    best = best.min(dist(set_a.feature(i), set_b.feature(j)));
                }
            }
            best
        })
        .collect()
}

/// Indices of A points whose point-specific threshold is infinite (no
/// differing-label point in B); such points can never cause an abstention.
pub fn point_specific_validation(set_a: &LabeledDataset, set_b: &LabeledDataset) -> Vec<usize> {
    point_specific_thresholds(set_a, set_b)
        .iter()
        .enumerate()
        .filter(|(_, t)| t.is_infinite())
        .map(|(i, _)| i)
        .collect()
}

/// Nearest-neighbor prediction over A with the point-specific threshold of
/// the matched neighbor.
pub fn predict_point_specific(
    set_a: &LabeledDataset,
    set_b: &LabeledDataset,
    x: &[f64],
) -> Result<Outcome> {
    if set_a.dim() != set_b.dim() {
        return Err(Error::Dimension(format!(
            "set A has dimension {}, set B {}",
            set_a.dim(),
            set_b.dim()
        )));
    }
    let taus = point_specific_thresholds(set_a, set_b);
    let (i_min, d) = nearest_neighbor(set_a, x);
    if d < taus[i_min] {
        Ok(Outcome::Label(set_a.label(i_min)))
    } else {
        Ok(Outcome::Abstain)
    }
}

/// One-vs-rest linear classifier (never abstains).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    /// K weight rows of length n2.
    pub weights: Vec<Vec<f64>>,
    /// K biases.
    pub biases: Vec<f64>,
    /// Class id of each row.
    pub classes: Vec<u32>,
}

pub const DEFAULT_RIDGE_LAMBDA: f64 = 1e-3;

/// One-vs-rest ridge regression on ±1 targets. If the normal equations are
/// numerically singular the regularization is escalated by x10 up to three
/// times before failing.
pub fn train_linear_baseline(ds: &LabeledDataset, lambda: f64) -> Result<LinearModel> {
    let classes = ds.classes();
    if classes.len() < 2 {
        return Err(Error::Undefined(
            "linear baseline needs at least two classes".into(),
        ));
    }
    if !(lambda > 0.0) {
        return Err(Error::Config(format!("ridge lambda must be > 0, got {lambda}")));
    }
    let m = ds.len();
    let n = ds.dim() + 1; // bias column
    // Normal matrix G = X'X (with the augmented ones column), shared by all
    // classes; only the right-hand side changes.
    let mut gram = vec![0.0; n * n];
    for row in ds.features() {
        for a in 0..n {
            let xa = if a < ds.dim() { row[a] } else { 1.0 };
            for b in a..n {
                let xb = if b < ds.dim() { row[b] } else { 1.0 };
                gram[a * n + b] += xa * xb;
            }
        }
    }
    for a in 0..n {
        for b in 0..a {
            gram[a * n + b] = gram[b * n + a];
        }
    }
    let mut lam = lambda;
    for attempt in 0..4 {
        let mut reg = gram.clone();
        for a in 0..n {
            reg[a * n + a] += lam;
        }
        let mut weights = Vec::with_capacity(classes.len());
        let mut biases = Vec::with_capacity(classes.len());
        let mut ok = true;
        for &k in &classes {
            let mut rhs = vec![0.0; n];
            for i in 0..m {
                let t = if ds.label(i) == k { 1.0 } else { -1.0 };
                for a in 0..ds.dim() {
                    rhs[a] += ds.feature(i)[a] * t;
                }
                rhs[n - 1] += t;
            }
            match crate::linalg::cholesky_solve(&reg, &rhs, n, 1e-12) {
                Some(w) => {
                    biases.push(w[n - 1]);
                    weights.push(w[..n - 1].to_vec());
                }
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            if attempt > 0 {
                log::warn!("ridge regularization escalated to {lam}");
            }
            return Ok(LinearModel {
                weights,
                biases,
                classes,
            });
        }
        lam *= 10.0;
    }
    Err(Error::NonConverged {
        iterations: 4,
        violation: f64::NAN,
        gap: f64::NAN,
        best_point: Vec::new(),
    })
}

/// argmax_k (w_k·x + b_k); ties break to the lowest class index.
pub fn predict_linear(model: &LinearModel, x: &[f64]) -> u32 {
    let mut best = (0usize, f64::NEG_INFINITY);
    for (k, (w, b)) in model.weights.iter().zip(&model.biases).enumerate() {
        let s = dot(w, x) + b;
        if s > best.1 {
            best = (k, s);
        }
    }
    model.classes[best.0]
}

/// Serialized robust model: parameters plus a reference to the ORIGINAL
/// training data (preprocessing is re-run on load and checked against the
/// stored removal set).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFile {
    pub tau: f64,
    pub sigma: f64,
    pub removed_indices: Vec<usize>,
    pub dataset: DatasetSource,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetSource {
    Path(String),
    InlineCsv(String),
}

impl ModelFile {
    pub fn from_model(model: &RobustModel, dataset: DatasetSource) -> Self {
        Self {
            tau: model.config.tau,
            sigma: model.config.sigma,
            removed_indices: model.removed_indices.clone(),
            dataset,
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    /// Rebuilds the model, re-running preprocessing and verifying it removes
    /// exactly the recorded indices.
    pub fn build(&self) -> Result<RobustModel> {
        let ds = match &self.dataset {
            DatasetSource::Path(p) => crate::data::load_dataset(p)?,
            DatasetSource::InlineCsv(text) => parse_dataset_str(text)?,
        };
        let model = RobustModel::fit(&ds, ClassifierConfig::new(self.tau, self.sigma)?)?;
        if model.removed_indices != self.removed_indices {
            return Err(Error::Config(
                "stored removal set does not match the referenced dataset".into(),
            ));
        }
        Ok(model)
    }
}
