//! Discretized spatiotemporal vector encoding of fixation sequences.
//!
//! A trial's fixations are split evenly into `t_groups` contiguous temporal
//! groups. For each group, fixations are counted into an `x_div` x `y_div`
//! grid of cells over the trial's display rectangle, assigning each fixation
//! to the cell whose centroid is nearest. The per-group grids are flattened
//! into one vector of length `t_groups * x_div * y_div`, time-major then
//! row-major:
//!
//! ```text
//! linear index = group * (x_div * y_div) + iy * x_div + ix
//! ```
//!
//! The vector length is fixed by the configuration alone, so trials of any
//! duration and fixation count map to comparable feature vectors; longer
//! trials simply accumulate larger counts.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Label, Rect, Trial};
use crate::linalg::Matrix;

/// Grid resolution of the encoding: spatial subdivisions per axis and the
/// number of temporal groups.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EncodingConfig {
    pub x_div: usize,
    pub y_div: usize,
    pub t_groups: usize,
}

impl EncodingConfig {
    pub fn new(x_div: usize, y_div: usize, t_groups: usize) -> EncodingConfig {
        assert!(
            x_div >= 1 && y_div >= 1 && t_groups >= 1,
            "all subdivisions must be >= 1"
        );
        EncodingConfig {
            x_div,
            y_div,
            t_groups,
        }
    }

    /// Square spatial grid, as swept in the evaluation protocol.
    pub fn square(grid: usize, t_groups: usize) -> EncodingConfig {
        EncodingConfig::new(grid, grid, t_groups)
    }

    /// Total vector length `t_groups * x_div * y_div` (never zero).
    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.t_groups * self.x_div * self.y_div
    }

    pub fn cells_per_group(&self) -> usize {
        self.x_div * self.y_div
    }
}

/// Cell centroids over a display rectangle.
///
/// Centroid (ix, iy) sits at the center of its cell:
/// `(x0 + (ix + 0.5) * width / x_div, y0 + (iy + 0.5) * height / y_div)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridLayout {
    x_div: usize,
    y_div: usize,
    x_centroids: Vec<f64>,
    y_centroids: Vec<f64>,
}

impl GridLayout {
    pub fn new(rect: Rect, x_div: usize, y_div: usize) -> GridLayout {
        assert!(x_div >= 1 && y_div >= 1);
        let x_centroids = (0..x_div)
            .map(|i| rect.x0 + (i as f64 + 0.5) * rect.width / x_div as f64)
            .collect();
        let y_centroids = (0..y_div)
            .map(|j| rect.y0 + (j as f64 + 0.5) * rect.height / y_div as f64)
            .collect();
        GridLayout {
            x_div,
            y_div,
            x_centroids,
            y_centroids,
        }
    }

    pub fn x_div(&self) -> usize {
        self.x_div
    }

    pub fn y_div(&self) -> usize {
        self.y_div
    }

    /// Centroid coordinates of cell (ix, iy).
    pub fn centroid(&self, ix: usize, iy: usize) -> (f64, f64) {
        (self.x_centroids[ix], self.y_centroids[iy])
    }

    /// All centroids in linear-index order (`iy * x_div + ix`).
    pub fn centroids(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(self.x_div * self.y_div);
        for &cy in &self.y_centroids {
            for &cx in &self.x_centroids {
                out.push((cx, cy));
            }
        }
        out
    }
}

/// The flattened spatiotemporal count vector of one trial.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedVector {
    pub values: Vec<u32>,
    pub config: EncodingConfig,
    pub trial_id: String,
}

impl EncodedVector {
    pub fn total_count(&self) -> u64 {
        self.values.iter().map(|&v| v as u64).sum()
    }
}

/// Split an ordered fixation sequence into `t_groups` contiguous groups of
/// near-equal size: the first `n % t_groups` groups hold one extra element.
/// With fewer fixations than groups, trailing groups are empty.
///
/// Returned as index ranges into the input slice, so the groups concatenate
/// back to the input by construction.
pub fn temporal_split(n_fixations: usize, t_groups: usize) -> Vec<std::ops::Range<usize>> {
    assert!(t_groups >= 1);
    let base = n_fixations / t_groups;
    let extra = n_fixations % t_groups;
    let mut out = Vec::with_capacity(t_groups);
    let mut start = 0;
    for g in 0..t_groups {
        let size = base + usize::from(g < extra);
        out.push(start..start + size);
        start += size;
    }
    out
}

/// Nearest-centroid cell assignment: returns (ix, iy) of the cell whose
/// centroid minimizes the Euclidean distance to the point, breaking ties by
/// the smallest linear index `iy * x_div + ix`.
///
/// The squared distance decomposes per axis, so the minimizing cell is found
/// by an independent nearest-centroid scan along each axis; equidistant
/// centroids resolve to the lower index on each axis, which is exactly the
/// smallest-linear-index rule.
pub fn assign_cell(point: (f64, f64), layout: &GridLayout) -> (usize, usize) {
    (
        nearest_axis(point.0, &layout.x_centroids),
        nearest_axis(point.1, &layout.y_centroids),
    )
}

fn nearest_axis(v: f64, centroids: &[f64]) -> usize {
    let mut best = 0usize;
    let mut best_d = {
        let d = v - centroids[0];
        d * d
    };
    for (i, &c) in centroids.iter().enumerate().skip(1) {
        let d = v - c;
        let d2 = d * d;
        if d2 < best_d {
            best_d = d2;
            best = i;
        }
    }
    best
}

/// Encode one trial. Fixations are assumed to be bounds-filtered already;
/// any stray point is still assigned to its nearest cell. An empty trial
/// yields the all-zero vector.
pub fn encode_trial(trial: &Trial, config: EncodingConfig) -> EncodedVector {
    let layout = GridLayout::new(trial.display_rect(), config.x_div, config.y_div);
    let mut values = vec![0u32; config.len()];
    let cells = config.cells_per_group();
    for (group, range) in temporal_split(trial.fixations().len(), config.t_groups)
        .into_iter()
        .enumerate()
    {
        for f in &trial.fixations()[range] {
            let (ix, iy) = assign_cell((f.x_px, f.y_px), &layout);
            values[group * cells + iy * config.x_div + ix] += 1;
        }
    }
    EncodedVector {
        values,
        config,
        trial_id: trial.trial_id().to_string(),
    }
}

/// Encode every trial of a dataset into a feature matrix (rows in dataset
/// order, columns per the linear-index rule) plus the label vector.
pub fn encode_dataset(dataset: &Dataset, config: EncodingConfig) -> (Matrix, Vec<Label>) {
    let mut m = Matrix::zeros(dataset.len(), config.len());
    for (i, trial) in dataset.trials().iter().enumerate() {
        let v = encode_trial(trial, config);
        let row = m.row_mut(i);
        for (dst, src) in row.iter_mut().zip(&v.values) {
            *dst = *src as f64;
        }
    }
    (m, dataset.labels())
}

/// Write an encoded matrix as CSV with header `v0..v{n-1},label,trial_id`.
pub fn write_encoded_csv<W: Write>(
    dataset: &Dataset,
    config: EncodingConfig,
    w: W,
) -> Result<(), crate::data::DataError> {
    let mut wtr = csv::Writer::from_writer(w);
    let mut header: Vec<String> = (0..config.len()).map(|i| format!("v{i}")).collect();
    header.push("label".into());
    header.push("trial_id".into());
    wtr.write_record(&header)?;
    for trial in dataset.trials() {
        let v = encode_trial(trial, config);
        let mut rec: Vec<String> = v.values.iter().map(|c| c.to_string()).collect();
        rec.push(trial.label().as_str().into());
        rec.push(trial.trial_id().into());
        wtr.write_record(&rec)?;
    }
    wtr.flush()?;
    Ok(())
}
