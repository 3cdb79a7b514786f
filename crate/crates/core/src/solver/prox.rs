//! Proximal operators of the nuclear norm and the entrywise ℓ1 norm.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::numerics::{svd_matrix, DenseMatrix};

/// Singular value thresholding `Σ (σᵢ − λ)₊ uᵢ vᵢᵀ`, the minimizer of
/// `½‖M − X‖_F² + λ‖X‖_*`.
pub fn svt(m: &DenseMatrix, lambda: f64) -> Result<DenseMatrix> {
    check_weight("lambda", lambda)?;
    let out = svt_matrix(m.as_matrix(), lambda);
    Ok(DenseMatrix::from_matrix_unchecked(out.x).with_labels_of(m))
}

/// Entrywise `sign(m)·(|m| − β)₊`, the minimizer of `½‖M − E‖_F² + β‖E‖₁`.
pub fn soft_threshold(m: &DenseMatrix, beta: f64) -> Result<DenseMatrix> {
    check_weight("beta", beta)?;
    Ok(DenseMatrix::from_matrix_unchecked(soft_matrix(m.as_matrix(), beta)).with_labels_of(m))
}

fn check_weight(name: &str, w: f64) -> Result<()> {
    if !(w >= 0.0 && w.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "{name} must be a finite non-negative number, got {w}"
        )));
    }
    Ok(())
}

#[inline]
pub(crate) fn shrink(v: f64, beta: f64) -> f64 {
    let a = v.abs() - beta;
    if a > 0.0 {
        a.copysign(v)
    } else {
        0.0
    }
}

pub(crate) fn soft_matrix(m: &DMatrix<f64>, beta: f64) -> DMatrix<f64> {
    m.map(|v| shrink(v, beta))
}

pub(crate) struct SvtOutput {
    pub x: DMatrix<f64>,
    /// Thresholded singular values `(σᵢ − λ)₊`, non-increasing.
    pub shrunk: Vec<f64>,
}

#[cfg(test)]
impl SvtOutput {
    pub fn nuclear_norm(&self) -> f64 {
        self.shrunk.iter().sum()
    }
}

/// Short side at or below which a strongly rectangular input goes through
/// the Gram route.
const GRAM_MAX_SHORT: usize = 256;
const GRAM_MIN_RATIO: usize = 8;

pub(crate) fn svt_matrix(m: &DMatrix<f64>, lambda: f64) -> SvtOutput {
    let (n, p) = m.shape();
    let short = n.min(p);
    if short > 0 && short <= GRAM_MAX_SHORT && n.max(p) >= GRAM_MIN_RATIO * short {
        svt_gram(m, lambda)
    } else {
        svt_dense(m, lambda)
    }
}

pub(crate) fn svt_dense(m: &DMatrix<f64>, lambda: f64) -> SvtOutput {
    let f = svd_matrix(m);
    let shrunk: Vec<f64> = f
        .singular_values
        .iter()
        .map(|s| (s - lambda).max(0.0))
        .take_while(|&s| s > 0.0)
        .collect();
    let k = shrunk.len();
    let mut left = f.u.columns(0, k).into_owned();
    for (j, s) in shrunk.iter().enumerate() {
        left.column_mut(j).scale_mut(*s);
    }
    let x = left * f.v.columns(0, k).transpose();
    SvtOutput { x, shrunk }
}

/// Thresholding through the eigensystem of the small Gram matrix.
///
/// For `M` with `n ≫ p`, `MᵀM = V Σ² Vᵀ` and
/// `D_λ(M) = M · V diag((σᵢ − λ)₊ / σᵢ) Vᵀ`, so the tall factor `U` is never
/// formed. Components with `σᵢ ≤ λ` are dropped, which keeps the division
/// away from small, inaccurately resolved eigenvalues.
pub(crate) fn svt_gram(m: &DMatrix<f64>, lambda: f64) -> SvtOutput {
    if m.nrows() < m.ncols() {
        let t = svt_gram(&m.transpose(), lambda);
        return SvtOutput {
            x: t.x.transpose(),
            shrunk: t.shrunk,
        };
    }
    let gram = m.tr_mul(m);
    let eig = SymmetricEigen::new(gram);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let p = m.ncols();
    let mut weights = DMatrix::zeros(p, p);
    let mut shrunk = Vec::new();
    for &k in &order {
        let sigma = eig.eigenvalues[k].max(0.0).sqrt();
        if sigma <= lambda || sigma == 0.0 {
            break;
        }
        let kept = sigma - lambda;
        shrunk.push(kept);
        let v = eig.eigenvectors.column(k);
        weights.ger(kept / sigma, &v, &v, 1.0);
    }
    let x = if shrunk.is_empty() {
        DMatrix::zeros(m.nrows(), p)
    } else {
        m * weights
    };
    SvtOutput { x, shrunk }
}
