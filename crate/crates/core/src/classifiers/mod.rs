//! Four classifier families — k-nearest-neighbors, L2 logistic regression,
//! Gaussian-process classification with a Laplace approximation, and
//! gradient-boosted trees — plus grid search scored on balanced accuracy.
//!
//! Conventions shared by every family:
//! - the positive class is [`Label::Trainee`];
//! - `predict_proba` returns the probability of the positive class, in
//!   `[0, 1]`;
//! - the predicted label is positive iff the probability is `>= 0.5`;
//! - fitting is deterministic in `(data, hyperparameters, seed)`.

mod gboost;
mod gp;
mod knn;
mod logreg;
mod search;

pub use gboost::{fit_gboost, GBoostModel};
pub use gp::{fit_gp_laplace, GpModel};
pub use knn::{fit_knn, KnnModel};
pub use logreg::{fit_logreg, logreg_gradient, logreg_objective, LogRegModel};
pub use search::{grid_search, SearchResult};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::Label;
use crate::linalg::Matrix;

/// The class scored as positive by probabilities and sensitivity.
pub const POSITIVE_CLASS: Label = Label::Trainee;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassifierFamily {
    Knn,
    LogReg,
    Gp,
    GBoost,
}

impl ClassifierFamily {
    pub fn as_str(self) -> &'static str {
        match self {
            ClassifierFamily::Knn => "knn",
            ClassifierFamily::LogReg => "logreg",
            ClassifierFamily::Gp => "gp",
            ClassifierFamily::GBoost => "gboost",
        }
    }

    pub fn parse(s: &str) -> Option<ClassifierFamily> {
        match s {
            "knn" => Some(ClassifierFamily::Knn),
            "logreg" => Some(ClassifierFamily::LogReg),
            "gp" => Some(ClassifierFamily::Gp),
            "gboost" => Some(ClassifierFamily::GBoost),
            _ => None,
        }
    }
}

impl std::fmt::Display for ClassifierFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One point of a family's hyperparameter grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum HyperParams {
    Knn {
        k: usize,
    },
    LogReg {
        l2: f64,
    },
    /// `bandwidth_scale` multiplies the median pairwise training distance
    /// to obtain the RBF lengthscale.
    Gp {
        bandwidth_scale: f64,
        signal_variance: f64,
    },
    GBoost {
        n_trees: usize,
        depth: usize,
        learning_rate: f64,
    },
}

impl std::fmt::Display for HyperParams {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            HyperParams::Knn { k } => write!(f, "k={k}"),
            HyperParams::LogReg { l2 } => write!(f, "l2={l2}"),
            HyperParams::Gp {
                bandwidth_scale,
                signal_variance,
            } => {
                write!(
                    f,
                    "bandwidth_scale={bandwidth_scale},signal_variance={signal_variance}"
                )
            }
            HyperParams::GBoost {
                n_trees,
                depth,
                learning_rate,
            } => {
                write!(
                    f,
                    "n_trees={n_trees},depth={depth},learning_rate={learning_rate}"
                )
            }
        }
    }
}

/// A classifier family together with its hyperparameter grid, enumerated in
/// documented order (the order of the vectors; for boosted trees the nesting
/// is trees, then depth, then learning rate).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierSpec {
    pub family: ClassifierFamily,
    pub grid: Vec<HyperParams>,
}

impl ClassifierSpec {
    pub fn new(family: ClassifierFamily, grid: Vec<HyperParams>) -> Result<Self, ModelError> {
        if grid.is_empty() {
            return Err(ModelError::InvalidParameter(
                "hyperparameter grid is empty".into(),
            ));
        }
        for hp in &grid {
            let ok = match *hp {
                HyperParams::Knn { k } => family == ClassifierFamily::Knn && k >= 1,
                HyperParams::LogReg { l2 } => family == ClassifierFamily::LogReg && l2 >= 0.0,
                HyperParams::Gp {
                    bandwidth_scale,
                    signal_variance,
                } => {
                    family == ClassifierFamily::Gp && bandwidth_scale > 0.0 && signal_variance > 0.0
                }
                HyperParams::GBoost {
                    n_trees,
                    depth,
                    learning_rate,
                } => {
                    family == ClassifierFamily::GBoost
                        && n_trees >= 1
                        && depth >= 1
                        && learning_rate > 0.0
                        && learning_rate <= 1.0
                }
            };
            if !ok {
                return Err(ModelError::InvalidParameter(format!(
                    "grid point {hp} invalid for family {family}"
                )));
            }
        }
        Ok(ClassifierSpec { family, grid })
    }

    /// The default grids used by the sweep when a config does not override
    /// them.
    pub fn default_grid(family: ClassifierFamily) -> ClassifierSpec {
        let grid = match family {
            ClassifierFamily::Knn => [1usize, 3, 5, 7]
                .iter()
                .map(|&k| HyperParams::Knn { k })
                .collect(),
            ClassifierFamily::LogReg => [0.01, 0.1, 1.0, 10.0]
                .iter()
                .map(|&l2| HyperParams::LogReg { l2 })
                .collect(),
            ClassifierFamily::Gp => [0.5, 1.0, 2.0]
                .iter()
                .map(|&s| HyperParams::Gp {
                    bandwidth_scale: s,
                    signal_variance: 1.0,
                })
                .collect(),
            ClassifierFamily::GBoost => {
                let mut grid = Vec::new();
                for &n_trees in &[50usize, 200] {
                    for &depth in &[1usize, 2, 3] {
                        grid.push(HyperParams::GBoost {
                            n_trees,
                            depth,
                            learning_rate: 0.1,
                        });
                    }
                }
                grid
            }
        };
        ClassifierSpec { family, grid }
    }
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("k={k} exceeds the {n_train} training rows")]
    KTooLarge { k: usize, n_train: usize },
    #[error("kernel matrix could not be factorized even with jitter up to {max_jitter}")]
    IllConditionedKernel { max_jitter: f64 },
    #[error("labels and matrix disagree: {0}")]
    ShapeMismatch(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("both classes must appear in the truth labels")]
    SingleClassTruth,
    #[error("class {label} has {count} rows, fewer than the {folds} folds")]
    TooFewPerClass {
        label: Label,
        count: usize,
        folds: usize,
    },
}

/// An immutable fitted classifier of any family.
///
/// Serializes to JSON as `{"family": "<tag>", ...fitted parameters}`; a
/// deserialized model predicts bit-identically to the original.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum TrainedModel {
    Knn(KnnModel),
    LogReg(LogRegModel),
    Gp(GpModel),
    GBoost(GBoostModel),
}

impl TrainedModel {
    pub fn family(&self) -> ClassifierFamily {
        match self {
            TrainedModel::Knn(_) => ClassifierFamily::Knn,
            TrainedModel::LogReg(_) => ClassifierFamily::LogReg,
            TrainedModel::Gp(_) => ClassifierFamily::Gp,
            TrainedModel::GBoost(_) => ClassifierFamily::GBoost,
        }
    }

    pub fn feature_dimension(&self) -> usize {
        match self {
            TrainedModel::Knn(m) => m.feature_dimension(),
            TrainedModel::LogReg(m) => m.feature_dimension(),
            TrainedModel::Gp(m) => m.feature_dimension(),
            TrainedModel::GBoost(m) => m.feature_dimension(),
        }
    }

    /// Probability of the positive class for each row.
    pub fn predict_proba(&self, rows: &Matrix) -> Vec<f64> {
        match self {
            TrainedModel::Knn(m) => m.predict_proba(rows),
            TrainedModel::LogReg(m) => m.predict_proba(rows),
            TrainedModel::Gp(m) => m.predict_proba(rows),
            TrainedModel::GBoost(m) => m.predict_proba(rows),
        }
    }

    /// Threshold probabilities at 0.5 (positive on ties).
    pub fn predict_labels(&self, rows: &Matrix) -> Vec<Label> {
        self.predict_proba(rows)
            .iter()
            .map(|&p| proba_to_label(p))
            .collect()
    }
}

/// The single thresholding rule shared by every family.
pub fn proba_to_label(p: f64) -> Label {
    if p >= 0.5 {
        POSITIVE_CLASS
    } else {
        POSITIVE_CLASS.flipped()
    }
}

/// Fit one grid point on the given training data.
pub fn fit(x: &Matrix, labels: &[Label], params: HyperParams) -> Result<TrainedModel, ModelError> {
    if x.nrows() != labels.len() {
        return Err(ModelError::ShapeMismatch(format!(
            "{} rows vs {} labels",
            x.nrows(),
            labels.len()
        )));
    }
    match params {
        HyperParams::Knn { k } => Ok(TrainedModel::Knn(fit_knn(x, labels, k)?)),
        HyperParams::LogReg { l2 } => {
            Ok(TrainedModel::LogReg(fit_logreg(x, labels, l2, 1e-8, 100)?))
        }
        HyperParams::Gp {
            bandwidth_scale,
            signal_variance,
        } => Ok(TrainedModel::Gp(fit_gp_laplace(
            x,
            labels,
            bandwidth_scale,
            signal_variance,
        )?)),
        HyperParams::GBoost {
            n_trees,
            depth,
            learning_rate,
        } => Ok(TrainedModel::GBoost(fit_gboost(
            x,
            labels,
            n_trees,
            depth,
            learning_rate,
        )?)),
    }
}

/// `(sensitivity + specificity) / 2`; errors unless both classes appear in
/// the truth labels.
pub fn balanced_accuracy(truth: &[Label], predicted: &[Label]) -> Result<f64, ModelError> {
    assert_eq!(truth.len(), predicted.len(), "label vectors must align");
    let (mut tp, mut fn_, mut tn, mut fp) = (0usize, 0usize, 0usize, 0usize);
    for (&t, &p) in truth.iter().zip(predicted) {
        match (t == POSITIVE_CLASS, p == POSITIVE_CLASS) {
            (true, true) => tp += 1,
            (true, false) => fn_ += 1,
            (false, false) => tn += 1,
            (false, true) => fp += 1,
        }
    }
    if tp + fn_ == 0 || tn + fp == 0 {
        return Err(ModelError::SingleClassTruth);
    }
    let sensitivity = tp as f64 / (tp + fn_) as f64;
    let specificity = tn as f64 / (tn + fp) as f64;
    Ok((sensitivity + specificity) / 2.0)
}

/// Labels as {0, 1} with the positive class mapped to 1.
pub(crate) fn labels_to_y01(labels: &[Label]) -> Vec<f64> {
    labels
        .iter()
        .map(|&l| if l == POSITIVE_CLASS { 1.0 } else { 0.0 })
        .collect()
}

/// Numerically stable logistic function.
#[inline]
pub(crate) fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// `log(sigmoid(t))` without overflow.
#[inline]
pub(crate) fn log_sigmoid(t: f64) -> f64 {
    // -softplus(-t)
    let u = -t;
    -(u.max(0.0) + (-u.abs()).exp().ln_1p())
}
