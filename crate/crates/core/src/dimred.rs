//! From-scratch PCA and RBF kernel PCA with two component-selection modes:
//! a fixed component count, or the smallest dimension reaching a target
//! explained-variance fraction.
//!
//! Fitting reads training rows only; transforming never mutates a model, so
//! per-fold fitting inside cross-validation stays leak-free.
//!
//! PCA eigendecomposes the sample covariance (divisor n-1) when the feature
//! count is small, and the n x n Gram matrix of the centered rows when the
//! feature count exceeds the row count (the nonzero spectra coincide up to
//! the n-1 divisor). KPCA double-centers the kernel matrix and scales each
//! eigenvector u by 1/sqrt(lambda), so the projected training variance of
//! component i is lambda_i / n.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{self, Matrix};

/// Component selection: keep exactly `k`, or the smallest `k` whose
/// cumulative explained-variance ratio reaches the fraction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectionMode {
    Components(usize),
    Variance(f64),
}

impl SelectionMode {
    fn validate(&self) -> Result<(), DimRedError> {
        match *self {
            SelectionMode::Components(k) if k >= 1 => Ok(()),
            SelectionMode::Components(_) => Err(DimRedError::InvalidSpec(
                "component count must be >= 1".into(),
            )),
            SelectionMode::Variance(f) if f > 0.0 && f <= 1.0 => Ok(()),
            SelectionMode::Variance(_) => Err(DimRedError::InvalidSpec(
                "variance fraction must be in (0, 1]".into(),
            )),
        }
    }

    /// Smallest k whose cumulative ratio reaches the target (with a small
    /// tolerance so a full-rank cumulative sum of 1-1e-16 still satisfies a
    /// target of 1.0); `Components` clamps to the available rank.
    fn select(&self, ratios: &[f64]) -> usize {
        match *self {
            SelectionMode::Components(k) => k.min(ratios.len()),
            SelectionMode::Variance(f) => {
                let mut cum = 0.0;
                for (i, r) in ratios.iter().enumerate() {
                    cum += r;
                    if cum >= f - 1e-9 {
                        return i + 1;
                    }
                }
                ratios.len()
            }
        }
    }
}

/// Which reduction to apply, if any.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "lowercase")]
pub enum ReductionSpec {
    None,
    Pca { mode: SelectionMode },
    Kpca { mode: SelectionMode },
}

impl ReductionSpec {
    /// Short label used in reports, e.g. `pca-2` or `kpca-90%`.
    pub fn label(&self) -> String {
        fn mode_label(mode: &SelectionMode) -> String {
            match *mode {
                SelectionMode::Components(k) => k.to_string(),
                SelectionMode::Variance(f) => format!("{}%", (f * 100.0).round() as u32),
            }
        }
        match self {
            ReductionSpec::None => "none".into(),
            ReductionSpec::Pca { mode } => format!("pca-{}", mode_label(mode)),
            ReductionSpec::Kpca { mode } => format!("kpca-{}", mode_label(mode)),
        }
    }

    /// Inverse of [`label`](Self::label), for config files and report axes.
    pub fn parse_label(s: &str) -> Option<ReductionSpec> {
        if s == "none" {
            return Some(ReductionSpec::None);
        }
        let (method, rest) = s.split_once('-')?;
        let mode = if let Some(pct) = rest.strip_suffix('%') {
            let f = pct.parse::<f64>().ok()? / 100.0;
            SelectionMode::Variance(f)
        } else {
            SelectionMode::Components(rest.parse().ok()?)
        };
        match method {
            "pca" => Some(ReductionSpec::Pca { mode }),
            "kpca" => Some(ReductionSpec::Kpca { mode }),
            _ => None,
        }
    }
}

#[derive(Debug, Error)]
pub enum DimRedError {
    #[error("degenerate data: {0}")]
    DegenerateData(String),
    #[error("dimension mismatch: model fit on {expected} features, input has {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("kernel matrix contains non-finite entries")]
    NonFiniteKernel,
    #[error("invalid reduction spec: {0}")]
    InvalidSpec(String),
}

/// Fitted linear PCA.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PcaModel {
    mean: Vec<f64>,
    /// `k` orthonormal rows of length `d`.
    components: Matrix,
    explained_variance_ratios: Vec<f64>,
    k: usize,
    rank: usize,
}

impl PcaModel {
    pub fn k(&self) -> usize {
        self.k
    }

    /// Numerical rank of the centered training data.
    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn explained_variance_ratios(&self) -> &[f64] {
        &self.explained_variance_ratios
    }

    pub fn components(&self) -> &Matrix {
        &self.components
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }
}

const RANK_EPS: f64 = 1e-12;

/// Deterministic sign: flip each component so its largest-magnitude entry
/// (first such entry on ties) is non-negative.
fn fix_signs(m: &mut Matrix) {
    for r in 0..m.nrows() {
        let row = m.row_mut(r);
        let mut best = 0usize;
        for (i, v) in row.iter().enumerate() {
            if v.abs() > row[best].abs() {
                best = i;
            }
        }
        if row[best] < 0.0 {
            for v in row.iter_mut() {
                *v = -*v;
            }
        }
    }
}

fn column_means(x: &Matrix) -> Vec<f64> {
    let (n, d) = (x.nrows(), x.ncols());
    let mut mean = vec![0.0; d];
    for r in 0..n {
        for (m, v) in mean.iter_mut().zip(x.row(r)) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    mean
}

fn centered(x: &Matrix) -> (Matrix, Vec<f64>) {
    let mean = column_means(x);
    let mut c = x.clone();
    for r in 0..c.nrows() {
        for (v, m) in c.row_mut(r).iter_mut().zip(&mean) {
            *v -= m;
        }
    }
    (c, mean)
}

/// Fit linear PCA on an `n x d` matrix (n >= 2 rows).
pub fn fit_pca(x: &Matrix, mode: SelectionMode) -> Result<PcaModel, DimRedError> {
    mode.validate()?;
    let (n, d) = (x.nrows(), x.ncols());
    if n < 2 {
        return Err(DimRedError::DegenerateData("need at least 2 rows".into()));
    }
    if !x.is_finite() {
        return Err(DimRedError::DegenerateData("non-finite entries".into()));
    }

    let (xc, mean) = centered(x);
    let denom = (n - 1) as f64;
    let total_variance: f64 = xc.data().iter().map(|v| v * v).sum::<f64>() / denom;
    if total_variance <= 0.0 {
        return Err(DimRedError::DegenerateData(
            "all rows identical (zero covariance)".into(),
        ));
    }

    // (eigenvalue of covariance, component row) pairs, descending.
    let (values, vectors): (Vec<f64>, Matrix) = if d <= n {
        let mut cov = xc.transpose().matmul(&xc);
        for i in 0..d {
            for j in 0..d {
                let v = cov.get(i, j) / denom;
                cov.set(i, j, v);
            }
        }
        let eig = linalg::sym_eig(&cov);
        (eig.values, eig.vectors)
    } else {
        // Gram route: an eigenvector u of X_c X_c^T maps to the covariance
        // eigenvector X_c^T u / sqrt(lambda).
        let gram = xc.matmul_t(&xc);
        let eig = linalg::sym_eig(&gram);
        let mut comps = Vec::new();
        let mut vals = Vec::new();
        for (i, &lam) in eig.values.iter().enumerate() {
            if lam <= 0.0 {
                continue;
            }
            let u = eig.vectors.row(i);
            let mut v = vec![0.0; d];
            for (r, &ur) in u.iter().enumerate() {
                for (vj, &xj) in v.iter_mut().zip(xc.row(r)) {
                    *vj += ur * xj;
                }
            }
            let norm = lam.sqrt();
            for vj in &mut v {
                *vj /= norm;
            }
            comps.push(v);
            vals.push(lam / denom);
        }
        (vals, Matrix::from_rows(&comps))
    };

    let lead = values.first().copied().unwrap_or(0.0);
    let rank = values
        .iter()
        .take_while(|&&v| v > RANK_EPS * lead.max(1e-300))
        .count();
    if rank == 0 {
        return Err(DimRedError::DegenerateData(
            "covariance has no positive eigenvalues".into(),
        ));
    }
    let ratios: Vec<f64> = values[..rank].iter().map(|v| v / total_variance).collect();
    let k = mode.select(&ratios);

    let mut components = Matrix::zeros(k, d);
    for i in 0..k {
        components.row_mut(i).copy_from_slice(vectors.row(i));
    }
    fix_signs(&mut components);

    Ok(PcaModel {
        mean,
        components,
        explained_variance_ratios: ratios[..k].to_vec(),
        k,
        rank,
    })
}

/// Project rows onto the model's components: `(x - mean) C^T`.
pub fn transform_pca(model: &PcaModel, x: &Matrix) -> Result<Matrix, DimRedError> {
    if x.ncols() != model.mean.len() {
        return Err(DimRedError::DimensionMismatch {
            expected: model.mean.len(),
            found: x.ncols(),
        });
    }
    let mut out = Matrix::zeros(x.nrows(), model.k);
    for r in 0..x.nrows() {
        let row = x.row(r);
        for c in 0..model.k {
            let comp = model.components.row(c);
            let mut s = 0.0;
            for ((v, m), w) in row.iter().zip(&model.mean).zip(comp) {
                s += (v - m) * w;
            }
            out.set(r, c, s);
        }
    }
    Ok(out)
}

/// Map reduced rows back to the original space: `z C + mean`.
pub fn reconstruct_pca(model: &PcaModel, z: &Matrix) -> Result<Matrix, DimRedError> {
    if z.ncols() != model.k {
        return Err(DimRedError::DimensionMismatch {
            expected: model.k,
            found: z.ncols(),
        });
    }
    let d = model.mean.len();
    let mut out = Matrix::zeros(z.nrows(), d);
    for r in 0..z.nrows() {
        let row = out.row_mut(r);
        row.copy_from_slice(&model.mean);
        for c in 0..model.k {
            let w = z.get(r, c);
            for (o, comp) in row.iter_mut().zip(model.components.row(c)) {
                *o += w * comp;
            }
        }
    }
    Ok(out)
}

/// Kernel of the kernel-PCA map. `Linear` exists as a test hook: with it,
/// KPCA reproduces linear PCA projections up to component sign.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Kernel {
    Rbf { gamma: f64 },
    Linear,
}

impl Kernel {
    #[inline]
    fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match *self {
            Kernel::Rbf { gamma } => (-gamma * linalg::squared_distance(a, b)).exp(),
            Kernel::Linear => linalg::dot(a, b),
        }
    }
}

/// The conventional RBF bandwidth heuristic: `1 / (d * mean per-feature
/// variance)` of the fit data (population variance). Falls back to 1.0 for
/// constant data.
pub fn default_gamma(x: &Matrix) -> f64 {
    let (n, d) = (x.nrows(), x.ncols());
    if n == 0 || d == 0 {
        return 1.0;
    }
    let mean = column_means(x);
    let mut total = 0.0;
    for r in 0..n {
        for (v, m) in x.row(r).iter().zip(&mean) {
            let c = v - m;
            total += c * c;
        }
    }
    let mean_var = total / (n as f64 * d as f64);
    if mean_var > 0.0 {
        1.0 / (d as f64 * mean_var)
    } else {
        1.0
    }
}

/// Fitted kernel PCA.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KpcaModel {
    training_points: Matrix,
    kernel: Kernel,
    /// `k` rows of length `n`: eigenvector `u_i / sqrt(lambda_i)`.
    alphas: Matrix,
    eigenvalues: Vec<f64>,
    explained_variance_ratios: Vec<f64>,
    row_means: Vec<f64>,
    grand_mean: f64,
    k: usize,
}

impl KpcaModel {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn explained_variance_ratios(&self) -> &[f64] {
        &self.explained_variance_ratios
    }

    pub fn kernel(&self) -> Kernel {
        self.kernel
    }
}

/// Eigenvalues at or below this are treated as numerically null kernel modes.
const KPCA_EIG_MIN: f64 = 1e-12;

/// Fit kernel PCA on an `n x d` matrix (n >= 2 rows).
pub fn fit_kpca(x: &Matrix, mode: SelectionMode, kernel: Kernel) -> Result<KpcaModel, DimRedError> {
    mode.validate()?;
    let n = x.nrows();
    if n < 2 {
        return Err(DimRedError::DegenerateData("need at least 2 rows".into()));
    }
    if let Kernel::Rbf { gamma } = kernel {
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(DimRedError::InvalidSpec(
                "gamma must be positive and finite".into(),
            ));
        }
    }

    let mut k_mat = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v = kernel.eval(x.row(i), x.row(j));
            k_mat.set(i, j, v);
            k_mat.set(j, i, v);
        }
    }
    if !k_mat.is_finite() {
        return Err(DimRedError::NonFiniteKernel);
    }

    let row_means: Vec<f64> = (0..n)
        .map(|i| k_mat.row(i).iter().sum::<f64>() / n as f64)
        .collect();
    let grand_mean = row_means.iter().sum::<f64>() / n as f64;
    let mut kc = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            kc.set(
                i,
                j,
                k_mat.get(i, j) - row_means[i] - row_means[j] + grand_mean,
            );
        }
    }

    let eig = linalg::sym_eig(&kc);
    let kept: Vec<usize> = (0..n).filter(|&i| eig.values[i] > KPCA_EIG_MIN).collect();
    if kept.is_empty() {
        return Err(DimRedError::DegenerateData(
            "centered kernel has no usable eigenvalues (all rows identical?)".into(),
        ));
    }
    let eigensum: f64 = kept.iter().map(|&i| eig.values[i]).sum();
    let ratios: Vec<f64> = kept.iter().map(|&i| eig.values[i] / eigensum).collect();
    let k = mode.select(&ratios);

    let mut u = Matrix::zeros(k, n);
    for (r, &i) in kept[..k].iter().enumerate() {
        u.row_mut(r).copy_from_slice(eig.vectors.row(i));
    }
    fix_signs(&mut u);
    let mut alphas = u;
    let eigenvalues: Vec<f64> = kept[..k].iter().map(|&i| eig.values[i]).collect();
    for (r, &lam) in eigenvalues.iter().enumerate() {
        let s = lam.sqrt();
        for v in alphas.row_mut(r) {
            *v /= s;
        }
    }

    Ok(KpcaModel {
        training_points: x.clone(),
        kernel,
        alphas,
        eigenvalues,
        explained_variance_ratios: ratios[..k].to_vec(),
        row_means,
        grand_mean,
        k,
    })
}

/// Project rows into the fitted kernel principal subspace.
pub fn transform_kpca(model: &KpcaModel, x: &Matrix) -> Result<Matrix, DimRedError> {
    let d = model.training_points.ncols();
    if x.ncols() != d {
        return Err(DimRedError::DimensionMismatch {
            expected: d,
            found: x.ncols(),
        });
    }
    let n = model.training_points.nrows();
    let mut out = Matrix::zeros(x.nrows(), model.k);
    let mut kz = vec![0.0; n];
    for r in 0..x.nrows() {
        let z = x.row(r);
        for (i, slot) in kz.iter_mut().enumerate() {
            *slot = model.kernel.eval(z, model.training_points.row(i));
        }
        if kz.iter().any(|v| !v.is_finite()) {
            return Err(DimRedError::NonFiniteKernel);
        }
        let z_mean = kz.iter().sum::<f64>() / n as f64;
        for c in 0..model.k {
            let alpha = model.alphas.row(c);
            let mut s = 0.0;
            for i in 0..n {
                let centered = kz[i] - z_mean - model.row_means[i] + model.grand_mean;
                s += alpha[i] * centered;
            }
            out.set(r, c, s);
        }
    }
    Ok(out)
}
