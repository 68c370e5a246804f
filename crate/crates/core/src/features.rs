//! The five classical per-trial scanpath features used as the comparison
//! baseline: time to scan, regressive fixation count, fixation count, total
//! saccade length, and coverage of salient regions.
//!
//! Saccade "length" is Euclidean distance in pixels by default. Because the
//! term is also sometimes glossed as the time between fixations, a temporal
//! variant (sum of consecutive onset gaps) is available behind
//! [`SaccadeMetric`]; the active choice is stamped into run metadata by the
//! CLI.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Label, SalientMask, Trial};
use crate::encoding::{encode_trial, EncodingConfig};
use crate::linalg::Matrix;
use thiserror::Error;

/// The five features of one trial, in canonical column order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraditionalFeatures {
    pub time_to_scan_ms: f64,
    pub regressive_fixation_count: usize,
    pub fixation_count: usize,
    pub total_saccade_length_px: f64,
    pub coverage_fraction: f64,
}

impl TraditionalFeatures {
    pub fn as_row(&self) -> [f64; 5] {
        [
            self.time_to_scan_ms,
            self.regressive_fixation_count as f64,
            self.fixation_count as f64,
            self.total_saccade_length_px,
            self.coverage_fraction,
        ]
    }
}

/// Which quantity "total saccade length" sums.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SaccadeMetric {
    /// Euclidean distance between consecutive fixation positions (pixels).
    #[default]
    Spatial,
    /// Gap between consecutive fixation onsets (milliseconds).
    Temporal,
}

/// Parameters the feature definitions leave open.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TradParams {
    /// Spatial grid for the regressive-fixation discretization (applied with
    /// a single temporal group).
    pub regress_x_div: usize,
    pub regress_y_div: usize,
    /// Radius of the disk a fixation covers, in mask pixels.
    pub fovea_radius_px: f64,
    pub saccade_metric: SaccadeMetric,
}

impl Default for TradParams {
    fn default() -> Self {
        TradParams {
            regress_x_div: 10,
            regress_y_div: 10,
            fovea_radius_px: 25.0,
            saccade_metric: SaccadeMetric::Spatial,
        }
    }
}

impl TradParams {
    pub fn regress_grid(&self) -> EncodingConfig {
        EncodingConfig::new(self.regress_x_div, self.regress_y_div, 1)
    }
}

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("trial {0:?} has no fixations")]
    EmptyTrial(String),
    #[error("salient mask has no salient pixels")]
    EmptyMask,
}

/// Total trial duration: (last onset + last duration) - first onset.
pub fn time_to_scan(trial: &Trial) -> Result<f64, FeatureError> {
    let fx = trial.fixations();
    let first = fx
        .first()
        .ok_or_else(|| FeatureError::EmptyTrial(trial.trial_id().into()))?;
    let last = fx.last().unwrap();
    Ok(last.onset_ms + last.duration_ms - first.onset_ms)
}

/// Number of grid cells that captured two or more fixations, on a
/// single-temporal-group encoding grid.
pub fn regressive_fixation_count(trial: &Trial, regress_grid: EncodingConfig) -> usize {
    let grid = EncodingConfig::new(regress_grid.x_div, regress_grid.y_div, 1);
    encode_trial(trial, grid)
        .values
        .iter()
        .filter(|&&c| c >= 2)
        .count()
}

pub fn fixation_count(trial: &Trial) -> usize {
    trial.fixations().len()
}

/// Sum over consecutive fixation pairs; zero with fewer than two fixations.
pub fn total_saccade_length(trial: &Trial, metric: SaccadeMetric) -> f64 {
    trial
        .fixations()
        .windows(2)
        .map(|p| match metric {
            SaccadeMetric::Spatial => {
                let dx = p[1].x_px - p[0].x_px;
                let dy = p[1].y_px - p[0].y_px;
                (dx * dx + dy * dy).sqrt()
            }
            SaccadeMetric::Temporal => p[1].onset_ms - p[0].onset_ms,
        })
        .sum()
}

/// Fraction of salient pixels within `fovea_radius_px` of at least one
/// fixation.
///
/// Fixations are mapped from screen coordinates into mask pixel coordinates
/// through the trial's display rectangle; a pixel counts as covered when its
/// center lies within the radius (inclusive) of some mapped fixation.
pub fn coverage(
    trial: &Trial,
    mask: &SalientMask,
    fovea_radius_px: f64,
) -> Result<f64, FeatureError> {
    if mask.salient_count() == 0 {
        return Err(FeatureError::EmptyMask);
    }
    if trial.fixations().is_empty() {
        return Ok(0.0);
    }
    let rect = trial.display_rect();
    let (w, h) = (mask.width(), mask.height());
    let sx = w as f64 / rect.width;
    let sy = h as f64 / rect.height;

    let mut covered = vec![false; w * h];
    let r = fovea_radius_px;
    for f in trial.fixations() {
        let mx = (f.x_px - rect.x0) * sx;
        let my = (f.y_px - rect.y0) * sy;
        // Pixel (col, row) has its center at (col + 0.5, row + 0.5).
        let col_lo = ((mx - r - 0.5).floor().max(0.0)) as usize;
        let col_hi = ((mx + r + 0.5).ceil().min(w as f64 - 1.0)).max(0.0) as usize;
        let row_lo = ((my - r - 0.5).floor().max(0.0)) as usize;
        let row_hi = ((my + r + 0.5).ceil().min(h as f64 - 1.0)).max(0.0) as usize;
        for row in row_lo..=row_hi.min(h - 1) {
            let cy = row as f64 + 0.5;
            for col in col_lo..=col_hi.min(w - 1) {
                let cx = col as f64 + 0.5;
                let dx = cx - mx;
                let dy = cy - my;
                if dx * dx + dy * dy <= r * r {
                    covered[row * w + col] = true;
                }
            }
        }
    }
    let hit = (0..h)
        .flat_map(|row| (0..w).map(move |col| (col, row)))
        .filter(|&(col, row)| mask.salient(col, row) && covered[row * w + col])
        .count();
    Ok(hit as f64 / mask.salient_count() as f64)
}

/// Compute all five features for one trial.
pub fn trial_features(
    trial: &Trial,
    mask: &SalientMask,
    params: &TradParams,
) -> Result<TraditionalFeatures, FeatureError> {
    Ok(TraditionalFeatures {
        time_to_scan_ms: time_to_scan(trial)?,
        regressive_fixation_count: regressive_fixation_count(trial, params.regress_grid()),
        fixation_count: fixation_count(trial),
        total_saccade_length_px: total_saccade_length(trial, params.saccade_metric),
        coverage_fraction: coverage(trial, mask, params.fovea_radius_px)?,
    })
}

/// Feature matrix (rows in dataset order, five columns in canonical order)
/// plus the label vector.
pub fn compute_traditional(
    dataset: &Dataset,
    mask: &SalientMask,
    params: &TradParams,
) -> Result<(Matrix, Vec<Label>), FeatureError> {
    let mut m = Matrix::zeros(dataset.len(), 5);
    for (i, t) in dataset.trials().iter().enumerate() {
        let f = trial_features(t, mask, params)?;
        m.row_mut(i).copy_from_slice(&f.as_row());
    }
    Ok((m, dataset.labels()))
}

/// CSV export with header
/// `time_to_scan_ms,regressive_count,fixation_count,saccade_length_px,coverage,label,trial_id`.
pub fn write_traditional_csv<W: Write>(
    dataset: &Dataset,
    mask: &SalientMask,
    params: &TradParams,
    w: W,
) -> Result<(), crate::data::DataError> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record([
        "time_to_scan_ms",
        "regressive_count",
        "fixation_count",
        "saccade_length_px",
        "coverage",
        "label",
        "trial_id",
    ])?;
    for t in dataset.trials() {
        let f = trial_features(t, mask, params).map_err(|e| {
            csv::Error::from(std::io::Error::new(
                std::io::ErrorKind::InvalidData,
                e.to_string(),
            ))
        })?;
        wtr.write_record([
            f.time_to_scan_ms.to_string(),
            f.regressive_fixation_count.to_string(),
            f.fixation_count.to_string(),
            f.total_saccade_length_px.to_string(),
            f.coverage_fraction.to_string(),
            t.label().as_str().to_string(),
            t.trial_id().to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}
