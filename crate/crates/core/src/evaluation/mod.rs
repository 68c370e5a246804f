//! Cross-validated evaluation: stratified folds, report metrics, leak-free
//! per-configuration runs, the full-factorial sweep, and table aggregation.
//!
//! The evaluation unit is one *configuration cell*: a feature space
//! (spatiotemporal encoding at some grid/temporal resolution, or the five
//! traditional features), a reduction, a classifier family with its
//! hyperparameter grid, and an outer seed. [`evaluate_config`] runs
//! stratified outer cross-validation for one cell, fitting the reduction
//! and grid-searching the classifier on each fold's training split only.

mod folds;
mod metrics;
mod sweep;

pub use folds::{stratified_folds, FoldPlan};
pub use metrics::{confusion_metrics, roc_auc, ConfusionMetrics, MetricSet};
pub use sweep::{
    default_extractions, evaluate_cell, format_metric_tables, read_raw_records_csv, run_sweep,
    sweep_cells, write_aggregates_csv, write_raw_records_csv, BestSelection, CellSpec, SweepReport,
    SweepSpace,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classifiers::{
    grid_search, proba_to_label, ClassifierFamily, ClassifierSpec, ModelError,
};
use crate::data::{Dataset, Label, SalientMask};
use crate::dimred::{
    default_gamma, fit_kpca, fit_pca, transform_kpca, transform_pca, DimRedError, Kernel,
    ReductionSpec,
};
use crate::encoding::{encode_dataset, EncodingConfig};
use crate::features::{compute_traditional, FeatureError, TradParams};
use crate::linalg::Matrix;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("class {label} has {count} trials, fewer than the {folds} folds")]
    TooFewPerClass {
        label: Label,
        count: usize,
        folds: usize,
    },
    #[error("both classes must appear in the truth labels")]
    SingleClassTruth,
    #[error("cannot aggregate an empty record group")]
    EmptyGroup,
    #[error("invalid evaluation settings: {0}")]
    InvalidSettings(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    DimRed(#[from] DimRedError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
}

/// Which feature family feeds the classifiers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataType {
    Encoded,
    Traditional,
}

impl DataType {
    pub fn as_str(self) -> &'static str {
        match self {
            DataType::Encoded => "encoded",
            DataType::Traditional => "traditional",
        }
    }

    pub fn parse(s: &str) -> Option<DataType> {
        match s {
            "encoded" => Some(DataType::Encoded),
            "traditional" => Some(DataType::Traditional),
            _ => None,
        }
    }
}

impl std::fmt::Display for DataType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The dataset under evaluation plus its salient mask (needed by the
/// traditional features).
#[derive(Debug, Clone, Copy)]
pub struct EvalInputs<'a> {
    pub acquisition: &'a str,
    pub dataset: &'a Dataset,
    pub mask: &'a SalientMask,
}

/// Everything the protocol leaves configurable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSettings {
    pub k_folds: usize,
    pub inner_folds: usize,
    /// RBF gamma for KPCA; `None` uses the per-fold default heuristic.
    pub kpca_gamma: Option<f64>,
    pub trad_params: TradParams,
}

impl Default for EvalSettings {
    fn default() -> Self {
        EvalSettings {
            k_folds: 10,
            inner_folds: 3,
            kpca_gamma: None,
            trad_params: TradParams::default(),
        }
    }
}

/// Feature space of a configuration cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum FeatureSpace {
    Encoded(EncodingConfig),
    Traditional,
}

impl FeatureSpace {
    pub fn data_type(&self) -> DataType {
        match self {
            FeatureSpace::Encoded(_) => DataType::Encoded,
            FeatureSpace::Traditional => DataType::Traditional,
        }
    }
}

/// Metrics of one configuration cell: per-fold values plus their mean and
/// population variance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub acquisition: String,
    pub classifier: ClassifierFamily,
    pub data_type: DataType,
    /// Reduction label, e.g. `none` or `kpca-90%`.
    pub extraction: String,
    pub grid_size: Option<usize>,
    pub t_groups: Option<usize>,
    pub seed: u64,
    pub fold_metrics: Vec<MetricSet>,
    pub mean: MetricSet,
    pub variance: MetricSet,
}

impl RunRecord {
    #[allow(clippy::too_many_arguments)] // mirrors the record's key fields
    pub fn from_folds(
        acquisition: String,
        classifier: ClassifierFamily,
        data_type: DataType,
        extraction: String,
        grid_size: Option<usize>,
        t_groups: Option<usize>,
        seed: u64,
        fold_metrics: Vec<MetricSet>,
    ) -> RunRecord {
        let collect = |name: &str| -> Vec<f64> {
            fold_metrics.iter().map(|m| m.get(name).unwrap()).collect()
        };
        let mean = MetricSet::from_fn(|name| mean_of(&collect(name)));
        let variance = MetricSet::from_fn(|name| population_variance(&collect(name)));
        RunRecord {
            acquisition,
            classifier,
            data_type,
            extraction,
            grid_size,
            t_groups,
            seed,
            fold_metrics,
            mean,
            variance,
        }
    }

    /// Identity of the configuration this record instantiates (everything
    /// but the seed).
    pub fn config_key(&self) -> String {
        format!(
            "{}|{}|{}|{}|{}|{}",
            self.acquisition,
            self.data_type,
            self.grid_size.map_or_else(|| "-".into(), |g| g.to_string()),
            self.t_groups.map_or_else(|| "-".into(), |t| t.to_string()),
            self.extraction,
            self.classifier,
        )
    }
}

pub(crate) fn mean_of(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

pub(crate) fn population_variance(values: &[f64]) -> f64 {
    let m = mean_of(values);
    values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / values.len() as f64
}

/// Deterministic per-fold seed derivation (splitmix64 of seed + salt).
pub(crate) fn mix_seed(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9E3779B97F4A7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Build the feature matrix and label vector for one feature space.
pub fn build_features(
    inputs: EvalInputs<'_>,
    feature: FeatureSpace,
    trad_params: &TradParams,
) -> Result<(Matrix, Vec<Label>), EvalError> {
    match feature {
        FeatureSpace::Encoded(cfg) => Ok(encode_dataset(inputs.dataset, cfg)),
        FeatureSpace::Traditional => Ok(compute_traditional(
            inputs.dataset,
            inputs.mask,
            trad_params,
        )?),
    }
}

/// Fit the reduction on the training rows only, then transform both splits.
/// The returned matrices are (train, holdout).
pub fn reduce_fold(
    features: &Matrix,
    train_idx: &[usize],
    hold_idx: &[usize],
    reduction: ReductionSpec,
    kpca_gamma: Option<f64>,
) -> Result<(Matrix, Matrix), EvalError> {
    let train = features.select_rows(train_idx);
    let hold = features.select_rows(hold_idx);
    match reduction {
        ReductionSpec::None => Ok((train, hold)),
        ReductionSpec::Pca { mode } => {
            let model = fit_pca(&train, mode)?;
            Ok((
                transform_pca(&model, &train)?,
                transform_pca(&model, &hold)?,
            ))
        }
        ReductionSpec::Kpca { mode } => {
            let gamma = kpca_gamma.unwrap_or_else(|| default_gamma(&train));
            let model = fit_kpca(&train, mode, Kernel::Rbf { gamma })?;
            Ok((
                transform_kpca(&model, &train)?,
                transform_kpca(&model, &hold)?,
            ))
        }
    }
}

/// Run one configuration cell: outer stratified cross-validation with
/// per-fold reduction fitting and inner grid search, scoring each fold's
/// holdout with all five metrics.
pub fn evaluate_config(
    inputs: EvalInputs<'_>,
    feature: FeatureSpace,
    reduction: ReductionSpec,
    classifier: &ClassifierSpec,
    settings: &EvalSettings,
    seed: u64,
) -> Result<RunRecord, EvalError> {
    let (features, labels) = build_features(inputs, feature, &settings.trad_params)?;
    let plan = stratified_folds(&labels, settings.k_folds, seed)?;

    let mut fold_metrics = Vec::with_capacity(settings.k_folds);
    for fold in 0..settings.k_folds {
        let train_idx = plan.train_indices(fold);
        let hold_idx = plan.holdout_indices(fold);
        let (train_m, hold_m) = reduce_fold(
            &features,
            &train_idx,
            &hold_idx,
            reduction,
            settings.kpca_gamma,
        )?;
        let train_y: Vec<Label> = train_idx.iter().map(|&i| labels[i]).collect();
        let hold_y: Vec<Label> = hold_idx.iter().map(|&i| labels[i]).collect();

        let inner_seed = mix_seed(seed, fold as u64 + 1);
        let result = grid_search(
            classifier,
            &train_m,
            &train_y,
            settings.inner_folds,
            inner_seed,
        )?;

        let probs = result.model.predict_proba(&hold_m);
        let predicted: Vec<Label> = probs.iter().map(|&p| proba_to_label(p)).collect();
        let auc = roc_auc(&probs, &hold_y)?;
        let cm = confusion_metrics(&predicted, &hold_y)?;
        fold_metrics.push(MetricSet {
            auc,
            f1: cm.f1,
            accuracy: cm.accuracy,
            sensitivity: cm.sensitivity,
            specificity: cm.specificity,
        });
    }

    let (grid_size, t_groups) = match feature {
        FeatureSpace::Encoded(cfg) => (Some(cfg.x_div), Some(cfg.t_groups)),
        FeatureSpace::Traditional => (None, None),
    };
    Ok(RunRecord::from_folds(
        inputs.acquisition.to_string(),
        classifier.family,
        feature.data_type(),
        reduction.label(),
        grid_size,
        t_groups,
        seed,
        fold_metrics,
    ))
}

/// Aggregation keys for [`aggregate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupKey {
    Acquisition,
    Classifier,
    DataType,
    Extraction,
    GridSize,
    TGroups,
    Seed,
}

impl GroupKey {
    pub fn name(self) -> &'static str {
        match self {
            GroupKey::Acquisition => "acquisition",
            GroupKey::Classifier => "classifier",
            GroupKey::DataType => "data_type",
            GroupKey::Extraction => "extraction",
            GroupKey::GridSize => "grid_size",
            GroupKey::TGroups => "t_groups",
            GroupKey::Seed => "seed",
        }
    }

    fn value_of(self, r: &RunRecord) -> String {
        match self {
            GroupKey::Acquisition => r.acquisition.clone(),
            GroupKey::Classifier => r.classifier.to_string(),
            GroupKey::DataType => r.data_type.to_string(),
            GroupKey::Extraction => r.extraction.clone(),
            GroupKey::GridSize => r.grid_size.map_or_else(|| "-".into(), |v| v.to_string()),
            GroupKey::TGroups => r.t_groups.map_or_else(|| "-".into(), |v| v.to_string()),
            GroupKey::Seed => r.seed.to_string(),
        }
    }
}

/// One aggregated cell: mean and population variance over the pooled
/// fold-level metric values of every member record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub keys: Vec<(String, String)>,
    pub n_fold_values: usize,
    pub mean: MetricSet,
    pub variance: MetricSet,
}

/// Group records and reduce each group's fold-level metric values to a mean
/// and a population variance. Groups appear in first-encounter order.
pub fn aggregate(records: &[RunRecord], keys: &[GroupKey]) -> Result<Vec<AggregateRow>, EvalError> {
    if records.is_empty() {
        return Err(EvalError::EmptyGroup);
    }
    let mut order: Vec<String> = Vec::new();
    let mut groups: std::collections::HashMap<String, Vec<&RunRecord>> =
        std::collections::HashMap::new();
    for r in records {
        let id: Vec<String> = keys.iter().map(|k| k.value_of(r)).collect();
        let id = id.join("|");
        if !groups.contains_key(&id) {
            order.push(id.clone());
        }
        groups.entry(id).or_default().push(r);
    }

    let mut out = Vec::with_capacity(order.len());
    for id in order {
        let members = &groups[&id];
        let pooled = |name: &str| -> Vec<f64> {
            members
                .iter()
                .flat_map(|r| r.fold_metrics.iter().map(|m| m.get(name).unwrap()))
                .collect()
        };
        let n_fold_values = members.iter().map(|r| r.fold_metrics.len()).sum();
        out.push(AggregateRow {
            keys: keys
                .iter()
                .map(|k| (k.name().to_string(), k.value_of(members[0])))
                .collect(),
            n_fold_values,
            mean: MetricSet::from_fn(|name| mean_of(&pooled(name))),
            variance: MetricSet::from_fn(|name| population_variance(&pooled(name))),
        });
    }
    Ok(out)
}
