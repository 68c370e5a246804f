//! L2-regularized logistic regression fit by Newton iterations with
//! step-halving. The bias is unpenalized.
//!
//! The objective being maximized, with labels y in {-1, +1}, is
//!
//! ```text
//! l(w, b) = sum_i log sigmoid(y_i (w . x_i + b)) - (l2 / 2) ||w||^2
//! ```
//!
//! When the feature count exceeds the row count, the optimum lies in the
//! span of the training rows, so the problem is first re-expressed in an
//! orthonormal basis of that span (from the Gram-matrix eigendecomposition)
//! and solved there; the returned weights are mapped back to feature space.
//! This keeps the Newton system at most (n+1) x (n+1) regardless of the
//! encoded dimensionality.

use serde::{Deserialize, Serialize};

use crate::data::Label;
use crate::linalg::{self, Matrix};

use super::{log_sigmoid, sigmoid, ModelError, POSITIVE_CLASS};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LogRegModel {
    weights: Vec<f64>,
    bias: f64,
    converged: bool,
    iterations: usize,
}

impl LogRegModel {
    pub fn feature_dimension(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    /// False when the gradient norm never dropped below the tolerance
    /// within the iteration cap; the model still holds the last iterate.
    pub fn converged(&self) -> bool {
        self.converged
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn predict_proba(&self, rows: &Matrix) -> Vec<f64> {
        (0..rows.nrows())
            .map(|r| sigmoid(linalg::dot(rows.row(r), &self.weights) + self.bias))
            .collect()
    }

    #[cfg(test)]
    pub(crate) fn with_parameters(weights: Vec<f64>, bias: f64) -> LogRegModel {
        LogRegModel {
            weights,
            bias,
            converged: true,
            iterations: 0,
        }
    }
}

fn signed_labels(labels: &[Label]) -> Vec<f64> {
    labels
        .iter()
        .map(|&l| if l == POSITIVE_CLASS { 1.0 } else { -1.0 })
        .collect()
}

/// The penalized log-likelihood at (w, b).
pub fn logreg_objective(x: &Matrix, labels: &[Label], w: &[f64], b: f64, l2: f64) -> f64 {
    let y = signed_labels(labels);
    let mut obj = 0.0;
    for r in 0..x.nrows() {
        let z = linalg::dot(x.row(r), w) + b;
        obj += log_sigmoid(y[r] * z);
    }
    obj - 0.5 * l2 * linalg::dot(w, w)
}

/// Analytic gradient of [`logreg_objective`] with respect to (w, b).
pub fn logreg_gradient(
    x: &Matrix,
    labels: &[Label],
    w: &[f64],
    b: f64,
    l2: f64,
) -> (Vec<f64>, f64) {
    let y = signed_labels(labels);
    let d = x.ncols();
    let mut gw = vec![0.0; d];
    let mut gb = 0.0;
    for r in 0..x.nrows() {
        let z = linalg::dot(x.row(r), w) + b;
        // d/dz log sigmoid(y z) = y * sigmoid(-y z)
        let c = y[r] * sigmoid(-y[r] * z);
        for (g, &xv) in gw.iter_mut().zip(x.row(r)) {
            *g += c * xv;
        }
        gb += c;
    }
    for (g, &wv) in gw.iter_mut().zip(w) {
        *g -= l2 * wv;
    }
    (gw, gb)
}

struct NewtonFit {
    w: Vec<f64>,
    b: f64,
    converged: bool,
    iterations: usize,
}

/// Newton with step-halving on the given design matrix.
fn newton(x: &Matrix, y: &[f64], l2: f64, tol: f64, max_iter: usize) -> NewtonFit {
    let (n, d) = (x.nrows(), x.ncols());
    let mut w = vec![0.0; d];
    let mut b = 0.0;

    let objective = |w: &[f64], b: f64| -> f64 {
        let mut obj = 0.0;
        for r in 0..n {
            obj += log_sigmoid(y[r] * (linalg::dot(x.row(r), w) + b));
        }
        obj - 0.5 * l2 * linalg::dot(w, w)
    };

    let mut converged = false;
    let mut iterations = 0;
    for _ in 0..max_iter {
        iterations += 1;
        // Gradient.
        let mut g = vec![0.0; d + 1];
        let mut z = vec![0.0; n];
        for r in 0..n {
            z[r] = linalg::dot(x.row(r), &w) + b;
            let c = y[r] * sigmoid(-y[r] * z[r]);
            for (gj, &xv) in g[..d].iter_mut().zip(x.row(r)) {
                *gj += c * xv;
            }
            g[d] += c;
        }
        for j in 0..d {
            g[j] -= l2 * w[j];
        }
        if g.iter().fold(0.0f64, |m, v| m.max(v.abs())) < tol {
            converged = true;
            break;
        }

        // Hessian of the negated objective: X~^T diag(pi (1-pi)) X~ + l2 I*.
        let mut h = Matrix::zeros(d + 1, d + 1);
        for r in 0..n {
            let p = sigmoid(z[r]);
            let wgt = p * (1.0 - p);
            if wgt == 0.0 {
                continue;
            }
            let row = x.row(r);
            for i in 0..d {
                let wi = wgt * row[i];
                for j in 0..=i {
                    let v = h.get(i, j) + wi * row[j];
                    h.set(i, j, v);
                }
                let v = h.get(d, i) + wi;
                h.set(d, i, v);
            }
            let v = h.get(d, d) + wgt;
            h.set(d, d, v);
        }
        for i in 0..d {
            let v = h.get(i, i) + l2;
            h.set(i, i, v);
            for j in 0..i {
                h.set(j, i, h.get(i, j));
            }
        }
        for i in 0..d {
            h.set(i, d, h.get(d, i));
        }

        let step = match linalg::solve_spd(&h, &g) {
            Some(s) => s,
            None => {
                // Near-singular Hessian (saturated probabilities, l2 = 0):
                // retry with a small ridge, else stop at the current iterate.
                for i in 0..=d {
                    let v = h.get(i, i) + 1e-8;
                    h.set(i, i, v);
                }
                match linalg::solve_spd(&h, &g) {
                    Some(s) => s,
                    None => break,
                }
            }
        };

        let base = objective(&w, b);
        let mut scale = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let cand_w: Vec<f64> = w
                .iter()
                .zip(&step[..d])
                .map(|(wv, s)| wv + scale * s)
                .collect();
            let cand_b = b + scale * step[d];
            if objective(&cand_w, cand_b) >= base - 1e-12 * base.abs() {
                w = cand_w;
                b = cand_b;
                accepted = true;
                break;
            }
            scale *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    NewtonFit {
        w,
        b,
        converged,
        iterations,
    }
}

/// Orthonormal basis of the row space of `x`, via the Gram eigendecomposition.
/// Returns (basis rows `r x d`, coordinates `n x r`).
fn row_space_basis(x: &Matrix) -> (Matrix, Matrix) {
    let n = x.nrows();
    let d = x.ncols();
    let gram = x.matmul_t(x);
    let eig = linalg::sym_eig(&gram);
    let lead = eig.values.first().copied().unwrap_or(0.0);
    let kept: Vec<usize> = (0..n)
        .filter(|&i| eig.values[i] > (1e-10 * lead).max(1e-12))
        .collect();
    let r = kept.len();
    let mut basis = Matrix::zeros(r, d);
    let mut coords = Matrix::zeros(n, r);
    for (bi, &ei) in kept.iter().enumerate() {
        let lam_sqrt = eig.values[ei].sqrt();
        let u = eig.vectors.row(ei);
        let brow = basis.row_mut(bi);
        for (rowi, &ur) in u.iter().enumerate() {
            for (bv, &xv) in brow.iter_mut().zip(x.row(rowi)) {
                *bv += ur * xv;
            }
        }
        for bv in brow.iter_mut() {
            *bv /= lam_sqrt;
        }
        for rowi in 0..n {
            coords.set(rowi, bi, u[rowi] * lam_sqrt);
        }
    }
    (basis, coords)
}

/// Fit by Newton iterations; convergence means the gradient infinity-norm
/// dropped below `tol`. Non-convergence within `max_iter` is not an error:
/// the model is returned with [`LogRegModel::converged`] set to false.
pub fn fit_logreg(
    x: &Matrix,
    labels: &[Label],
    l2: f64,
    tol: f64,
    max_iter: usize,
) -> Result<LogRegModel, ModelError> {
    if !(l2 >= 0.0) || !l2.is_finite() {
        return Err(ModelError::InvalidParameter(
            "l2 strength must be >= 0".into(),
        ));
    }
    let y = signed_labels(labels);
    let (n, d) = (x.nrows(), x.ncols());

    let fitted = if d > n {
        let (basis, coords) = row_space_basis(x);
        let fit = newton(&coords, &y, l2, tol, max_iter);
        let mut w = vec![0.0; d];
        for (c, wc) in fit.w.iter().enumerate() {
            for (wv, &bv) in w.iter_mut().zip(basis.row(c)) {
                *wv += wc * bv;
            }
        }
        NewtonFit {
            w,
            b: fit.b,
            converged: fit.converged,
            iterations: fit.iterations,
        }
    } else {
        newton(x, &y, l2, tol, max_iter)
    };

    Ok(LogRegModel {
        weights: fitted.w,
        bias: fitted.b,
        converged: fitted.converged,
        iterations: fitted.iterations,
    })
}
