//! Hyperparameter grid search scored by balanced accuracy over stratified
//! inner folds.

use crate::data::Label;
use crate::evaluation::stratified_folds;
use crate::linalg::Matrix;

use super::{balanced_accuracy, fit, ClassifierSpec, HyperParams, ModelError, TrainedModel};

/// Outcome of a grid search: the winning grid point, its mean inner
/// balanced accuracy, and the model refit on the full training split.
#[derive(Debug)]
pub struct SearchResult {
    pub best_params: HyperParams,
    pub best_inner_score: f64,
    pub model: TrainedModel,
}

/// Score every grid point by mean balanced accuracy over `inner_folds`
/// stratified folds of the training split (probabilities thresholded at
/// 0.5), then refit the best point on the whole split. Ties keep the
/// earlier grid point.
pub fn grid_search(
    spec: &ClassifierSpec,
    x: &Matrix,
    labels: &[Label],
    inner_folds: usize,
    seed: u64,
) -> Result<SearchResult, ModelError> {
    if spec.grid.is_empty() {
        return Err(ModelError::InvalidParameter(
            "hyperparameter grid is empty".into(),
        ));
    }
    if inner_folds < 2 {
        return Err(ModelError::InvalidParameter(
            "inner_folds must be >= 2".into(),
        ));
    }
    for label in [Label::Faculty, Label::Trainee] {
        let count = labels.iter().filter(|&&l| l == label).count();
        if count < inner_folds {
            return Err(ModelError::TooFewPerClass {
                label,
                count,
                folds: inner_folds,
            });
        }
    }

    let plan = stratified_folds(labels, inner_folds, seed)
        .expect("class counts were checked against the fold count");

    let mut best: Option<(HyperParams, f64)> = None;
    for &params in &spec.grid {
        let mut total = 0.0;
        for fold in 0..inner_folds {
            let train_idx = plan.train_indices(fold);
            let hold_idx = plan.holdout_indices(fold);
            let train_x = x.select_rows(&train_idx);
            let train_y: Vec<Label> = train_idx.iter().map(|&i| labels[i]).collect();
            let hold_x = x.select_rows(&hold_idx);
            let hold_y: Vec<Label> = hold_idx.iter().map(|&i| labels[i]).collect();

            let model = fit(&train_x, &train_y, params)?;
            let predicted = model.predict_labels(&hold_x);
            total += balanced_accuracy(&hold_y, &predicted)?;
        }
        let score = total / inner_folds as f64;
        if best.as_ref().is_none_or(|(_, s)| score > *s) {
            best = Some((params, score));
        }
    }

    let (best_params, best_inner_score) = best.expect("grid is non-empty");
    let model = fit(x, labels, best_params)?;
    Ok(SearchResult {
        best_params,
        best_inner_score,
        model,
    })
}
