//! The JSON run configuration shared by every subcommand, plus provenance
//! records.
//!
//! Exactly one of `input` (paths to a fixation CSV and a mask PGM) or
//! `synth` (a generator config) must be present. Every pipeline default the
//! protocol leaves open is a key here, so a config file pins a run
//! completely; the SHA-256 hash of the canonicalized config is stamped into
//! every provenance record.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use gazegrid::classifiers::{ClassifierFamily, ClassifierSpec, HyperParams};
use gazegrid::dimred::ReductionSpec;
use gazegrid::evaluation::{DataType, EvalSettings, SweepSpace};
use gazegrid::features::{SaccadeMetric, TradParams};
use gazegrid::synth::GeneratorConfig;

use crate::AppError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputPaths {
    pub fixations_csv: PathBuf,
    pub mask_pgm: PathBuf,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<InputPaths>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synth: Option<GeneratorConfig>,
    pub output_dir: PathBuf,
    /// PGM intensity above which a pixel counts as salient.
    #[serde(default = "default_mask_threshold")]
    pub mask_threshold: u8,
    /// Keep trials whose fixations were all filtered out. The encoder maps
    /// them to zero vectors; the traditional features reject them.
    #[serde(default)]
    pub keep_empty_trials: bool,
    /// (grid, temporal groups) pairs for the `encode` subcommand.
    #[serde(default = "default_encodings")]
    pub encodings: Vec<EncodingAxis>,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub hyper_grids: HyperGridConfig,
    #[serde(default)]
    pub trad: TradConfig,
    /// Fixed RBF gamma for KPCA; omit to use the per-fold heuristic
    /// `1 / (d * mean per-feature variance)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kpca_gamma: Option<f64>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EncodingAxis {
    pub grid: usize,
    pub t_groups: usize,
}

fn default_mask_threshold() -> u8 {
    10
}

fn default_encodings() -> Vec<EncodingAxis> {
    vec![EncodingAxis {
        grid: 10,
        t_groups: 5,
    }]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub grid_sizes: Vec<usize>,
    pub t_groups: Vec<usize>,
    /// Extraction labels: `none`, `pca-2`, `pca-50%`, ..., `kpca-99%`.
    pub extractions: Vec<String>,
    /// Classifier families: `knn`, `logreg`, `gp`, `gboost`.
    pub classifiers: Vec<String>,
    /// Data types: `encoded`, `traditional`.
    pub data_types: Vec<String>,
    pub k_folds: usize,
    pub inner_folds: usize,
    pub seeds: Vec<u64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            grid_sizes: vec![5, 7, 10, 15],
            t_groups: vec![3, 5, 10, 20],
            extractions: gazegrid::evaluation::default_extractions()
                .iter()
                .map(|e| e.label())
                .collect(),
            classifiers: vec!["knn".into(), "logreg".into(), "gp".into(), "gboost".into()],
            data_types: vec!["encoded".into(), "traditional".into()],
            k_folds: 10,
            inner_folds: 3,
            seeds: vec![0, 1, 2, 3, 4],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HyperGridConfig {
    pub knn_k: Vec<usize>,
    pub logreg_l2: Vec<f64>,
    pub gp_bandwidth_scales: Vec<f64>,
    pub gp_signal_variances: Vec<f64>,
    pub gboost_trees: Vec<usize>,
    pub gboost_depths: Vec<usize>,
    pub gboost_learning_rates: Vec<f64>,
}

impl Default for HyperGridConfig {
    fn default() -> Self {
        HyperGridConfig {
            knn_k: vec![1, 3, 5, 7],
            logreg_l2: vec![0.01, 0.1, 1.0, 10.0],
            gp_bandwidth_scales: vec![0.5, 1.0, 2.0],
            gp_signal_variances: vec![1.0],
            gboost_trees: vec![50, 200],
            gboost_depths: vec![1, 2, 3],
            gboost_learning_rates: vec![0.1],
        }
    }
}

impl HyperGridConfig {
    pub fn spec_for(&self, family: ClassifierFamily) -> Result<ClassifierSpec, AppError> {
        let grid: Vec<HyperParams> = match family {
            ClassifierFamily::Knn => self.knn_k.iter().map(|&k| HyperParams::Knn { k }).collect(),
            ClassifierFamily::LogReg => self
                .logreg_l2
                .iter()
                .map(|&l2| HyperParams::LogReg { l2 })
                .collect(),
            ClassifierFamily::Gp => {
                let mut grid = Vec::new();
                for &bandwidth_scale in &self.gp_bandwidth_scales {
                    for &signal_variance in &self.gp_signal_variances {
                        grid.push(HyperParams::Gp {
                            bandwidth_scale,
                            signal_variance,
                        });
                    }
                }
                grid
            }
            ClassifierFamily::GBoost => {
                let mut grid = Vec::new();
                for &n_trees in &self.gboost_trees {
                    for &depth in &self.gboost_depths {
                        for &learning_rate in &self.gboost_learning_rates {
                            grid.push(HyperParams::GBoost {
                                n_trees,
                                depth,
                                learning_rate,
                            });
                        }
                    }
                }
                grid
            }
        };
        ClassifierSpec::new(family, grid)
            .map_err(|e| AppError::Config(format!("bad hyperparameter grid: {e}")))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TradConfig {
    pub regress_grid: usize,
    pub fovea_radius_px: f64,
    pub saccade_metric: SaccadeMetric,
}

impl Default for TradConfig {
    fn default() -> Self {
        TradConfig {
            regress_grid: 10,
            fovea_radius_px: 25.0,
            saccade_metric: SaccadeMetric::Spatial,
        }
    }
}

impl TradConfig {
    pub fn params(&self) -> TradParams {
        TradParams {
            regress_x_div: self.regress_grid,
            regress_y_div: self.regress_grid,
            fovea_radius_px: self.fovea_radius_px,
            saccade_metric: self.saccade_metric,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig, AppError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| AppError::Config(format!("cannot read config {}: {e}", path.display())))?;
        let config: RunConfig = serde_json::from_str(&text)
            .map_err(|e| AppError::Config(format!("bad config {}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), AppError> {
        match (&self.input, &self.synth) {
            (Some(_), Some(_)) => {
                return Err(AppError::Config(
                    "config must set exactly one of \"input\" and \"synth\", found both".into(),
                ))
            }
            (None, None) => {
                return Err(AppError::Config(
                    "config must set exactly one of \"input\" and \"synth\", found neither".into(),
                ))
            }
            _ => {}
        }
        if !self.output_dir.is_dir() {
            return Err(AppError::Config(format!(
                "output directory {} does not exist",
                self.output_dir.display()
            )));
        }
        for axis in &self.encodings {
            if axis.grid < 1 || axis.t_groups < 1 {
                return Err(AppError::Config("encoding axes must be >= 1".into()));
            }
        }
        if self.sweep.k_folds < 2 || self.sweep.inner_folds < 2 {
            return Err(AppError::Config(
                "k_folds and inner_folds must be >= 2".into(),
            ));
        }
        if self.sweep.seeds.is_empty() {
            return Err(AppError::Config("sweep.seeds must not be empty".into()));
        }
        if self.trad.regress_grid < 1 {
            return Err(AppError::Config("trad.regress_grid must be >= 1".into()));
        }
        if self.trad.fovea_radius_px.is_nan() || self.trad.fovea_radius_px <= 0.0 {
            return Err(AppError::Config(
                "trad.fovea_radius_px must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Apply the `--seed` override: replaces the synth seed and collapses
    /// the sweep seed list.
    pub fn override_seed(&mut self, seed: u64) {
        if let Some(synth) = &mut self.synth {
            synth.seed = seed;
        }
        self.sweep.seeds = vec![seed];
    }

    /// SHA-256 over the canonical serialized form.
    pub fn hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let canonical = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        format!("sha256:{hex}")
    }

    pub fn sweep_space(&self) -> Result<SweepSpace, AppError> {
        let extractions: Vec<ReductionSpec> = self
            .sweep
            .extractions
            .iter()
            .map(|s| {
                ReductionSpec::parse_label(s)
                    .ok_or_else(|| AppError::Config(format!("unknown extraction {s:?}")))
            })
            .collect::<Result<_, _>>()?;
        let classifiers: Vec<ClassifierSpec> = self
            .sweep
            .classifiers
            .iter()
            .map(|s| {
                ClassifierFamily::parse(s)
                    .ok_or_else(|| AppError::Config(format!("unknown classifier {s:?}")))
                    .and_then(|family| self.hyper_grids.spec_for(family))
            })
            .collect::<Result<_, _>>()?;
        let data_types: Vec<DataType> = self
            .sweep
            .data_types
            .iter()
            .map(|s| {
                DataType::parse(s)
                    .ok_or_else(|| AppError::Config(format!("unknown data type {s:?}")))
            })
            .collect::<Result<_, _>>()?;
        let space = SweepSpace {
            grid_sizes: self.sweep.grid_sizes.clone(),
            t_groups: self.sweep.t_groups.clone(),
            extractions,
            classifiers,
            data_types,
            seeds: self.sweep.seeds.clone(),
            settings: EvalSettings {
                k_folds: self.sweep.k_folds,
                inner_folds: self.sweep.inner_folds,
                kpca_gamma: self.kpca_gamma,
                trad_params: self.trad.params(),
            },
        };
        space
            .validate()
            .map_err(|e| AppError::Config(e.to_string()))?;
        Ok(space)
    }
}

/// Reproducibility record written beside every command's outputs.
#[derive(Debug, Serialize)]
pub struct Provenance<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    pub config_hash: String,
    pub seeds: Vec<u64>,
    pub decisions: DecisionFlags<'a>,
}

/// The pinned conventions a reader needs to reproduce outputs bit-for-bit.
#[derive(Debug, Serialize)]
pub struct DecisionFlags<'a> {
    pub rng: &'static str,
    pub mask_threshold: u8,
    pub keep_empty_trials: bool,
    pub fovea_radius_px: f64,
    pub regress_grid: usize,
    pub saccade_metric: &'a SaccadeMetric,
    pub kpca_gamma: Option<f64>,
    pub flatten_order: &'static str,
    pub cell_tie_break: &'static str,
    pub temporal_split_remainder: &'static str,
    pub fold_remainder_policy: &'static str,
    pub reduction_fitting: &'static str,
    pub gp_link_integration: &'static str,
    pub best_selection: &'static str,
    pub spread_statistic: &'static str,
}

impl<'a> Provenance<'a> {
    pub fn for_command(command: &'a str, config: &'a RunConfig) -> Provenance<'a> {
        Provenance {
            tool: "gazegrid",
            version: env!("CARGO_PKG_VERSION"),
            command,
            config_hash: config.hash(),
            seeds: config.sweep.seeds.clone(),
            decisions: DecisionFlags {
                rng: "ChaCha8Rng seeded from the 64-bit config seed; trial i draws from stream i",
                mask_threshold: config.mask_threshold,
                keep_empty_trials: config.keep_empty_trials,
                fovea_radius_px: config.trad.fovea_radius_px,
                regress_grid: config.trad.regress_grid,
                saccade_metric: &config.trad.saccade_metric,
                kpca_gamma: config.kpca_gamma,
                flatten_order: "time-major, then row-major: i*(x*y) + iy*x + ix",
                cell_tie_break: "equidistant centroids resolve to the lowest linear index",
                temporal_split_remainder: "first (n mod t) groups hold one extra fixation",
                fold_remainder_policy:
                    "per class, floor(count/k) trials per fold are held out; leftovers train in every fold",
                reduction_fitting: "PCA/KPCA fit on each fold's training rows only",
                gp_link_integration: "MacKay: sigmoid(mu / sqrt(1 + pi*var/8))",
                best_selection: "highest mean AUC pooled over seeds, ties to the earliest configuration",
                spread_statistic: "population variance over pooled fold-level metric values",
            },
        }
    }

    pub fn write(&self, path: &Path) -> Result<(), AppError> {
        let json = serde_json::to_string_pretty(self).expect("provenance serializes");
        std::fs::write(path, json)
            .map_err(|e| AppError::Config(format!("cannot write {}: {e}", path.display())))
    }
}
