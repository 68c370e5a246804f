//! Gradient-boosted regression trees on the logistic loss.
//!
//! Stagewise fit: each stage grows a depth-limited regression tree on the
//! negative gradient of the logistic loss at the current margins, with leaf
//! values set by a Newton step `sum(grad) / (sum(hess) + 1e-12)`. The
//! initial margin is the log-odds of the training prior (clamped away from
//! 0 and 1). Split search is exhaustive over midpoints of sorted unique
//! feature values, minimizing the squared error of the gradient fit;
//! equally good splits resolve to the lowest feature index, then the lowest
//! threshold.

use serde::{Deserialize, Serialize};

use crate::data::Label;
use crate::linalg::Matrix;

use super::{labels_to_y01, sigmoid, ModelError};

#[derive(Debug, Clone, Serialize, Deserialize)]
enum TreeNode {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        value: f64,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Tree {
    nodes: Vec<TreeNode>,
}

impl Tree {
    fn predict(&self, row: &[f64]) -> f64 {
        let mut idx = 0;
        loop {
            match self.nodes[idx] {
                TreeNode::Leaf { value } => return value,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    idx = if row[feature] <= threshold {
                        left
                    } else {
                        right
                    };
                }
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GBoostModel {
    trees: Vec<Tree>,
    initial_margin: f64,
    learning_rate: f64,
    feature_dimension: usize,
    /// Training logistic loss after each stage (stage 0 = initial margin).
    stage_losses: Vec<f64>,
}

impl GBoostModel {
    pub fn feature_dimension(&self) -> usize {
        self.feature_dimension
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    /// Mean training logistic loss per stage; index 0 is the loss of the
    /// bare initial margin.
    pub fn stage_losses(&self) -> &[f64] {
        &self.stage_losses
    }

    fn margin(&self, row: &[f64]) -> f64 {
        let mut m = self.initial_margin;
        for t in &self.trees {
            m += self.learning_rate * t.predict(row);
        }
        m
    }

    pub fn predict_proba(&self, rows: &Matrix) -> Vec<f64> {
        (0..rows.nrows())
            .map(|r| sigmoid(self.margin(rows.row(r))))
            .collect()
    }
}

/// Per-feature presorted view of the training column: row indices ascending
/// by value (row index breaks ties) with the values alongside, so node
/// scans touch contiguous memory.
struct SortedColumn {
    idx: Vec<u32>,
    vals: Vec<f64>,
    /// False when the whole column is constant (never splittable).
    splittable: bool,
}

struct TreeBuilder<'a> {
    x: &'a Matrix,
    columns: &'a [SortedColumn],
    grad: &'a [f64],
    depth_limit: usize,
    nodes: Vec<TreeNode>,
    in_node: Vec<bool>,
    scratch_vals: Vec<f64>,
    scratch_grads: Vec<f64>,
}

struct BestSplit {
    total_sse: f64,
    feature: usize,
    threshold: f64,
}

impl<'a> TreeBuilder<'a> {
    fn leaf_value(&self, rows: &[u32], hess: &[f64]) -> f64 {
        let sum_g: f64 = rows.iter().map(|&i| self.grad[i as usize]).sum();
        let sum_h: f64 = rows.iter().map(|&i| hess[i as usize]).sum();
        sum_g / (sum_h + 1e-12)
    }

    fn build(&mut self, rows: &[u32], level: usize, hess: &[f64]) -> usize {
        if level >= self.depth_limit || rows.len() < 2 {
            self.nodes.push(TreeNode::Leaf {
                value: self.leaf_value(rows, hess),
            });
            return self.nodes.len() - 1;
        }

        let n = rows.len() as f64;
        let (mut sum, mut sum_sq) = (0.0, 0.0);
        for &i in rows {
            let g = self.grad[i as usize];
            sum += g;
            sum_sq += g * g;
        }
        let parent_sse = sum_sq - sum * sum / n;

        for &i in rows {
            self.in_node[i as usize] = true;
        }
        let mut best: Option<BestSplit> = None;
        for (feature, column) in self.columns.iter().enumerate() {
            if !column.splittable {
                continue;
            }
            self.scratch_vals.clear();
            self.scratch_grads.clear();
            for (&i, &v) in column.idx.iter().zip(&column.vals) {
                if self.in_node[i as usize] {
                    self.scratch_vals.push(v);
                    self.scratch_grads.push(self.grad[i as usize]);
                }
            }
            let vals = &self.scratch_vals;
            let grads = &self.scratch_grads;
            let m = vals.len();
            if vals[0] == vals[m - 1] {
                continue;
            }
            let (mut lsum, mut lsq) = (0.0f64, 0.0f64);
            for split in 0..m - 1 {
                let g = grads[split];
                lsum += g;
                lsq += g * g;
                if vals[split] == vals[split + 1] {
                    continue;
                }
                let lcnt = (split + 1) as f64;
                let rcnt = (m - split - 1) as f64;
                let rsum = sum - lsum;
                let rsq = sum_sq - lsq;
                let total = (lsq - lsum * lsum / lcnt) + (rsq - rsum * rsum / rcnt);
                if best.as_ref().is_none_or(|b| total < b.total_sse) {
                    best = Some(BestSplit {
                        total_sse: total,
                        feature,
                        threshold: 0.5 * (vals[split] + vals[split + 1]),
                    });
                }
            }
        }
        for &i in rows {
            self.in_node[i as usize] = false;
        }

        let Some(split) = best else {
            self.nodes.push(TreeNode::Leaf {
                value: self.leaf_value(rows, hess),
            });
            return self.nodes.len() - 1;
        };
        if parent_sse - split.total_sse <= 1e-12 {
            self.nodes.push(TreeNode::Leaf {
                value: self.leaf_value(rows, hess),
            });
            return self.nodes.len() - 1;
        }

        let (left_rows, right_rows): (Vec<u32>, Vec<u32>) = rows
            .iter()
            .partition(|&&i| self.x.get(i as usize, split.feature) <= split.threshold);

        let here = self.nodes.len();
        self.nodes.push(TreeNode::Leaf { value: 0.0 }); // placeholder
        let left = self.build(&left_rows, level + 1, hess);
        let right = self.build(&right_rows, level + 1, hess);
        self.nodes[here] = TreeNode::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        here
    }
}

fn mean_logistic_loss(margins: &[f64], y01: &[f64]) -> f64 {
    let total: f64 = margins
        .iter()
        .zip(y01)
        .map(|(&m, &y)| m.max(0.0) + (-m.abs()).exp().ln_1p() - y * m)
        .sum();
    total / margins.len() as f64
}

pub fn fit_gboost(
    x: &Matrix,
    labels: &[Label],
    n_trees: usize,
    depth: usize,
    learning_rate: f64,
) -> Result<GBoostModel, ModelError> {
    if n_trees < 1 {
        return Err(ModelError::InvalidParameter("n_trees must be >= 1".into()));
    }
    if depth < 1 {
        return Err(ModelError::InvalidParameter("depth must be >= 1".into()));
    }
    if !(learning_rate > 0.0 && learning_rate <= 1.0) {
        return Err(ModelError::InvalidParameter(
            "learning_rate must be in (0, 1]".into(),
        ));
    }
    let n = x.nrows();
    if n == 0 {
        return Err(ModelError::ShapeMismatch("empty training matrix".into()));
    }

    let y01 = labels_to_y01(labels);
    let prior = (y01.iter().sum::<f64>() / n as f64).clamp(1e-12, 1.0 - 1e-12);
    let initial_margin = (prior / (1.0 - prior)).ln();

    let columns: Vec<SortedColumn> = (0..x.ncols())
        .map(|j| {
            let mut idx: Vec<u32> = (0..n as u32).collect();
            idx.sort_by(|&a, &b| {
                x.get(a as usize, j)
                    .partial_cmp(&x.get(b as usize, j))
                    .unwrap()
                    .then(a.cmp(&b))
            });
            let vals: Vec<f64> = idx.iter().map(|&i| x.get(i as usize, j)).collect();
            let splittable = n > 0 && vals[0] != vals[n - 1];
            SortedColumn {
                idx,
                vals,
                splittable,
            }
        })
        .collect();

    let mut margins = vec![initial_margin; n];
    let mut trees = Vec::with_capacity(n_trees);
    let mut stage_losses = Vec::with_capacity(n_trees + 1);
    stage_losses.push(mean_logistic_loss(&margins, &y01));

    let all_rows: Vec<u32> = (0..n as u32).collect();
    for _ in 0..n_trees {
        let probs: Vec<f64> = margins.iter().map(|&m| sigmoid(m)).collect();
        let grad: Vec<f64> = (0..n).map(|i| y01[i] - probs[i]).collect();
        let hess: Vec<f64> = probs.iter().map(|p| p * (1.0 - p)).collect();

        let mut builder = TreeBuilder {
            x,
            columns: &columns,
            grad: &grad,
            depth_limit: depth,
            nodes: Vec::new(),
            in_node: vec![false; n],
            scratch_vals: Vec::with_capacity(n),
            scratch_grads: Vec::with_capacity(n),
        };
        builder.build(&all_rows, 0, &hess);
        let tree = Tree {
            nodes: builder.nodes,
        };

        for (i, m) in margins.iter_mut().enumerate() {
            *m += learning_rate * tree.predict(x.row(i));
        }
        stage_losses.push(mean_logistic_loss(&margins, &y01));
        trees.push(tree);
    }

    Ok(GBoostModel {
        trees,
        initial_margin,
        learning_rate,
        feature_dimension: x.ncols(),
        stage_losses,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Label::{Faculty as F, Trainee as T};

    fn splitmix(state: &mut u64) -> f64 {
        *state = state.wrapping_add(0x9E3779B97F4A7C15);
        let mut z = *state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
        ((z ^ (z >> 31)) >> 11) as f64 / (1u64 << 53) as f64
    }

    #[test]
    fn single_stump_separates_threshold_data() {
        let x = Matrix::from_rows(&[vec![0.0], vec![1.0], vec![2.0], vec![3.0]]);
        let y = vec![F, F, T, T];
        let model = fit_gboost(&x, &y, 1, 1, 0.1).unwrap();
        let probs = model.predict_proba(&x);
        let pred: Vec<Label> = probs
            .iter()
            .map(|&p| super::super::proba_to_label(p))
            .collect();
        assert_eq!(pred, y, "probs {probs:?}");
    }

    #[test]
    fn zero_trees_disallowed() {
        let x = Matrix::from_rows(&[vec![0.0], vec![1.0]]);
        assert!(matches!(
            fit_gboost(&x, &[F, T], 0, 1, 0.1),
            Err(ModelError::InvalidParameter(_))
        ));
    }

    #[test]
    fn constant_labels_stay_near_prior() {
        let x = Matrix::from_rows(&[vec![0.0], vec![1.0], vec![2.0]]);
        let model = fit_gboost(&x, &[T, T, T], 10, 2, 0.1).unwrap();
        for p in model.predict_proba(&x) {
            assert!(p > 0.999_999);
        }
    }

    #[test]
    fn training_loss_non_increasing() {
        for seed in 0..50u64 {
            let mut state = seed.wrapping_mul(0x9E3779B97F4A7C15).wrapping_add(1);
            let n = 24;
            let rows: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..3).map(|_| splitmix(&mut state) * 2.0 - 1.0).collect())
                .collect();
            let x = Matrix::from_rows(&rows);
            let mut labels: Vec<Label> = (0..n)
                .map(|_| if splitmix(&mut state) > 0.5 { T } else { F })
                .collect();
            labels[0] = T;
            labels[1] = F;
            let model = fit_gboost(&x, &labels, 30, 2, 0.1).unwrap();
            for w in model.stage_losses().windows(2) {
                assert!(w[1] <= w[0] + 1e-12, "loss increased: {} -> {}", w[0], w[1]);
            }
        }
    }

    #[test]
    fn split_tie_breaks_to_lowest_feature() {
        // Feature 1 duplicates feature 0: identical best splits exist in
        // both; the tree must pick feature 0.
        let x = Matrix::from_rows(&[
            vec![0.0, 0.0],
            vec![1.0, 1.0],
            vec![2.0, 2.0],
            vec![3.0, 3.0],
        ]);
        let model = fit_gboost(&x, &[F, F, T, T], 1, 1, 0.1).unwrap();
        match model.trees[0].nodes[0] {
            TreeNode::Split {
                feature, threshold, ..
            } => {
                assert_eq!(feature, 0);
                assert_eq!(threshold, 1.5);
            }
            TreeNode::Leaf { .. } => panic!("expected a split at the root"),
        }
    }

    #[test]
    fn deterministic_fit() {
        let x = Matrix::from_rows(&[
            vec![0.3, 1.0],
            vec![1.4, 0.2],
            vec![2.2, -0.5],
            vec![3.1, 0.9],
            vec![0.9, -1.2],
        ]);
        let y = vec![F, F, T, T, F];
        let a = fit_gboost(&x, &y, 20, 3, 0.1).unwrap();
        let b = fit_gboost(&x, &y, 20, 3, 0.1).unwrap();
        assert_eq!(a.predict_proba(&x), b.predict_proba(&x));
        assert_eq!(a.stage_losses(), b.stage_losses());
    }
}
