//! Binary Gaussian-process classification with the Laplace approximation.
//!
//! The latent GP uses an RBF kernel
//! `k(x, x') = signal_variance * exp(-||x - x'||^2 / (2 l^2))` with the
//! lengthscale `l = bandwidth_scale * median pairwise training distance`,
//! a logistic likelihood `p(y_i | f_i) = sigmoid(y_i f_i)` for y in
//! {-1, +1}, and a small diagonal jitter on the training kernel.
//!
//! The posterior mode is found by Newton iterations in the standard
//! numerically stable form built on `B = I + W^(1/2) K W^(1/2)`; at the
//! mode, `f = K grad log p(y | f)` holds, which is the self-consistency
//! identity tests assert.
//!
//! Predictive class probabilities integrate the logistic link over the
//! latent Gaussian with the MacKay approximation:
//!
//! ```text
//! p(y=+1 | x*) ~= sigmoid( mu* / sqrt(1 + pi sigma*^2 / 8) )
//! ```
//!
//! where `mu*` and `sigma*^2` are the latent predictive mean and variance.

use serde::{Deserialize, Serialize};

use crate::data::Label;
use crate::linalg::{self, Matrix};

use super::{labels_to_y01, sigmoid, ModelError};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GpModel {
    train: Matrix,
    lengthscale: f64,
    signal_variance: f64,
    jitter: f64,
    /// Latent posterior mode over the training points.
    f_mode: Vec<f64>,
    /// grad log p(y | f) at the mode (= y01 - sigmoid(f_mode)).
    grad_at_mode: Vec<f64>,
    w_sqrt: Vec<f64>,
    /// Cholesky factor of B = I + W^(1/2) K W^(1/2).
    chol_b: Matrix,
}

impl GpModel {
    pub fn feature_dimension(&self) -> usize {
        self.train.ncols()
    }

    pub fn lengthscale(&self) -> f64 {
        self.lengthscale
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    fn kernel(&self, a: &[f64], b: &[f64]) -> f64 {
        let d2 = linalg::squared_distance(a, b);
        self.signal_variance * (-d2 / (2.0 * self.lengthscale * self.lengthscale)).exp()
    }

    fn train_kernel(&self) -> Matrix {
        let n = self.train.nrows();
        let mut k = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let v = self.kernel(self.train.row(i), self.train.row(j));
                k.set(i, j, v);
                k.set(j, i, v);
            }
            let v = k.get(i, i) + self.jitter;
            k.set(i, i, v);
        }
        k
    }

    /// Infinity norm of `f_mode - K grad log p(y | f_mode)`; near zero at a
    /// converged Laplace mode.
    pub fn mode_self_consistency_residual(&self) -> f64 {
        let k = self.train_kernel();
        let n = self.train.nrows();
        let mut resid = 0.0f64;
        for i in 0..n {
            let kg = linalg::dot(k.row(i), &self.grad_at_mode);
            resid = resid.max((self.f_mode[i] - kg).abs());
        }
        resid
    }

    pub fn predict_proba(&self, rows: &Matrix) -> Vec<f64> {
        let n = self.train.nrows();
        let mut out = Vec::with_capacity(rows.nrows());
        let mut kstar = vec![0.0; n];
        for r in 0..rows.nrows() {
            let q = rows.row(r);
            for (i, slot) in kstar.iter_mut().enumerate() {
                *slot = self.kernel(q, self.train.row(i));
            }
            let mu = linalg::dot(&kstar, &self.grad_at_mode);
            let scaled: Vec<f64> = kstar.iter().zip(&self.w_sqrt).map(|(k, s)| k * s).collect();
            let v = linalg::forward_substitute(&self.chol_b, &scaled);
            let var = (self.signal_variance - linalg::dot(&v, &v)).max(0.0);
            out.push(sigmoid(
                mu / (1.0 + std::f64::consts::PI * var / 8.0).sqrt(),
            ));
        }
        out
    }
}

fn median_pairwise_distance(x: &Matrix) -> f64 {
    let n = x.nrows();
    let mut d = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            d.push(linalg::squared_distance(x.row(i), x.row(j)).sqrt());
        }
    }
    if d.is_empty() {
        return 1.0;
    }
    d.sort_by(f64::total_cmp);
    let m = d.len();
    if m % 2 == 1 {
        d[m / 2]
    } else {
        0.5 * (d[m / 2 - 1] + d[m / 2])
    }
}

const JITTER_LADDER: [f64; 3] = [1e-8, 1e-7, 1e-6];
const MAX_NEWTON_ITERS: usize = 100;

/// One Newton mode-finding run at a fixed jitter; `None` when the B-matrix
/// factorization fails (non-finite kernel entries).
struct ModeResult {
    f: Vec<f64>,
    grad: Vec<f64>,
    w_sqrt: Vec<f64>,
    chol_b: Matrix,
}

fn find_mode(k: &Matrix, y01: &[f64]) -> Option<ModeResult> {
    let n = y01.len();
    let mut f = vec![0.0; n];
    let mut a = vec![0.0; n];

    // Psi(f) = log p(y|f) - 0.5 a^T f, with a = K^{-1} f maintained
    // alongside f so no extra solves are needed.
    let psi = |f: &[f64], a: &[f64]| -> f64 {
        let mut loglik = 0.0;
        for i in 0..n {
            let y = 2.0 * y01[i] - 1.0;
            loglik += super::log_sigmoid(y * f[i]);
        }
        loglik - 0.5 * linalg::dot(a, f)
    };

    let mut last = None;
    for _ in 0..MAX_NEWTON_ITERS {
        let pi: Vec<f64> = f.iter().map(|&v| sigmoid(v)).collect();
        let grad: Vec<f64> = (0..n).map(|i| y01[i] - pi[i]).collect();
        let w: Vec<f64> = pi.iter().map(|p| p * (1.0 - p)).collect();
        let w_sqrt: Vec<f64> = w.iter().map(|v| v.sqrt()).collect();

        let mut b_mat = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                b_mat.set(i, j, w_sqrt[i] * k.get(i, j) * w_sqrt[j]);
            }
            let v = b_mat.get(i, i) + 1.0;
            b_mat.set(i, i, v);
        }
        let l = linalg::cholesky(&b_mat)?;

        let b_vec: Vec<f64> = (0..n).map(|i| w[i] * f[i] + grad[i]).collect();
        let kb: Vec<f64> = (0..n).map(|i| linalg::dot(k.row(i), &b_vec)).collect();
        let swkb: Vec<f64> = (0..n).map(|i| w_sqrt[i] * kb[i]).collect();
        let sol = linalg::back_substitute(&l, &linalg::forward_substitute(&l, &swkb));
        let a_new: Vec<f64> = (0..n).map(|i| b_vec[i] - w_sqrt[i] * sol[i]).collect();

        // Step-halve toward the Newton point if the objective would drop.
        let base = psi(&f, &a);
        let mut scale = 1.0;
        let mut f_next = f.clone();
        let mut a_next = a.clone();
        for _ in 0..30 {
            let a_cand: Vec<f64> = a
                .iter()
                .zip(&a_new)
                .map(|(old, new)| old + scale * (new - old))
                .collect();
            let f_cand: Vec<f64> = (0..n).map(|i| linalg::dot(k.row(i), &a_cand)).collect();
            if psi(&f_cand, &a_cand) >= base - 1e-12 * base.abs() {
                f_next = f_cand;
                a_next = a_cand;
                break;
            }
            scale *= 0.5;
        }

        let delta = f
            .iter()
            .zip(&f_next)
            .fold(0.0f64, |m, (old, new)| m.max((old - new).abs()));
        f = f_next;
        a = a_next;
        last = Some(ModeResult {
            f: f.clone(),
            grad: (0..n).map(|i| y01[i] - sigmoid(f[i])).collect(),
            w_sqrt,
            chol_b: l,
        });
        if delta < 1e-12 {
            break;
        }
    }
    last
}

/// Fit the Laplace-approximated GP classifier. The kernel diagonal carries a
/// jitter starting at 1e-8 and escalating to 1e-6 before the fit is declared
/// ill-conditioned.
pub fn fit_gp_laplace(
    x: &Matrix,
    labels: &[Label],
    bandwidth_scale: f64,
    signal_variance: f64,
) -> Result<GpModel, ModelError> {
    if !(bandwidth_scale > 0.0) || !(signal_variance > 0.0) {
        return Err(ModelError::InvalidParameter(
            "bandwidth scale and signal variance must be positive".into(),
        ));
    }
    if x.nrows() == 0 {
        return Err(ModelError::ShapeMismatch("empty training matrix".into()));
    }
    let y01 = labels_to_y01(labels);
    let median = median_pairwise_distance(x);
    let lengthscale = if median > 0.0 {
        bandwidth_scale * median
    } else {
        1.0
    };

    for jitter in JITTER_LADDER {
        let model = GpModel {
            train: x.clone(),
            lengthscale,
            signal_variance,
            jitter,
            f_mode: vec![],
            grad_at_mode: vec![],
            w_sqrt: vec![],
            chol_b: Matrix::zeros(0, 0),
        };
        let k = model.train_kernel();
        if !k.is_finite() {
            continue;
        }
        if let Some(mode) = find_mode(&k, &y01) {
            return Ok(GpModel {
                f_mode: mode.f,
                grad_at_mode: mode.grad,
                w_sqrt: mode.w_sqrt,
                chol_b: mode.chol_b,
                ..model
            });
        }
    }
    Err(ModelError::IllConditionedKernel {
        max_jitter: *JITTER_LADDER.last().unwrap(),
    })
}
