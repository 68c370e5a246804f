//! K-nearest-neighbors with Euclidean distance; equal distances resolve to
//! the lower training-row index.

use serde::{Deserialize, Serialize};

use crate::data::Label;
use crate::linalg::{squared_distance, Matrix};

use super::{labels_to_y01, ModelError};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KnnModel {
    k: usize,
    train: Matrix,
    /// 1.0 for the positive class.
    y01: Vec<f64>,
}

impl KnnModel {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn feature_dimension(&self) -> usize {
        self.train.ncols()
    }

    /// Fraction of the k nearest training rows labeled positive.
    pub fn predict_proba(&self, rows: &Matrix) -> Vec<f64> {
        let n = self.train.nrows();
        let mut out = Vec::with_capacity(rows.nrows());
        let mut dist: Vec<(f64, usize)> = Vec::with_capacity(n);
        for r in 0..rows.nrows() {
            let q = rows.row(r);
            dist.clear();
            dist.extend((0..n).map(|i| (squared_distance(q, self.train.row(i)), i)));
            dist.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
            let pos: f64 = dist[..self.k].iter().map(|&(_, i)| self.y01[i]).sum();
            out.push(pos / self.k as f64);
        }
        out
    }
}

pub fn fit_knn(x: &Matrix, labels: &[Label], k: usize) -> Result<KnnModel, ModelError> {
    if k == 0 {
        return Err(ModelError::InvalidParameter("k must be >= 1".into()));
    }
    if k > x.nrows() {
        return Err(ModelError::KTooLarge {
            k,
            n_train: x.nrows(),
        });
    }
    Ok(KnnModel {
        k,
        train: x.clone(),
        y01: labels_to_y01(labels),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Label::{Faculty as F, Trainee as T};

    fn line_data() -> (Matrix, Vec<Label>) {
        let x = Matrix::from_rows(&[vec![0.0], vec![1.0], vec![2.0], vec![3.0]]);
        (x, vec![F, F, T, T])
    }

    #[test]
    fn k1_exact_match_returns_that_label() {
        let (x, y) = line_data();
        let m = fit_knn(&x, &y, 1).unwrap();
        let p = m.predict_proba(&Matrix::from_rows(&[vec![2.0], vec![0.0]]));
        assert_eq!(p, vec![1.0, 0.0]);
    }

    #[test]
    fn k_equals_n_gives_the_prior() {
        let (x, y) = line_data();
        let m = fit_knn(&x, &y, 4).unwrap();
        let p = m.predict_proba(&Matrix::from_rows(&[vec![-100.0], vec![100.0]]));
        assert_eq!(p, vec![0.5, 0.5]);
    }

    #[test]
    fn k3_near_boundary() {
        let (x, y) = line_data();
        let m = fit_knn(&x, &y, 3).unwrap();
        // Query at 1.2: neighbors {1.0, 2.0, 0.0} -> one positive of three.
        let p = m.predict_proba(&Matrix::from_rows(&[vec![1.2], vec![1.8]]));
        assert!((p[0] - 1.0 / 3.0).abs() < 1e-12);
        // Query at 1.8: neighbors {2.0, 1.0, 3.0} -> two positives of three.
        assert!((p[1] - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn distance_ties_break_by_row_index() {
        // Two training rows at the same point with different labels: k=1
        // must pick row 0.
        let x = Matrix::from_rows(&[vec![1.0], vec![1.0]]);
        let m = fit_knn(&x, &[F, T], 1).unwrap();
        let p = m.predict_proba(&Matrix::from_rows(&[vec![1.0]]));
        assert_eq!(p, vec![0.0]);
    }

    #[test]
    fn k_too_large_rejected() {
        let (x, y) = line_data();
        assert!(matches!(
            fit_knn(&x, &y, 5),
            Err(ModelError::KTooLarge { .. })
        ));
    }

    #[test]
    fn scaling_features_and_distances_uniformly_keeps_predictions() {
        let (x, y) = line_data();
        let m = fit_knn(&x, &y, 3).unwrap();
        let scaled_rows: Vec<Vec<f64>> = x.rows_iter().map(|r| vec![r[0] * 2.0]).collect();
        let m2 = fit_knn(&Matrix::from_rows(&scaled_rows), &y, 3).unwrap();
        let q = Matrix::from_rows(&[vec![0.4], vec![1.7], vec![2.9]]);
        let q2 = Matrix::from_rows(&[vec![0.8], vec![3.4], vec![5.8]]);
        assert_eq!(m.predict_proba(&q), m2.predict_proba(&q2));
    }
}
