use nalgebra::DMatrix;

use super::DenseMatrix;

/// Thin singular value decomposition `M = U · diag(σ) · Vᵀ`.
///
/// `u` is `n × r`, `v` is `p × r` with `r = min(n, p)`, and the singular
/// values are sorted non-increasing.
#[derive(Debug, Clone)]
pub struct SvdFactors {
    pub u: DMatrix<f64>,
    pub singular_values: Vec<f64>,
    pub v: DMatrix<f64>,
}

impl SvdFactors {
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let mut us = self.u.clone();
        for (k, s) in self.singular_values.iter().enumerate() {
            us.column_mut(k).scale_mut(*s);
        }
        us * self.v.transpose()
    }

    /// Number of singular values above `rel_tol · σ₁`.
    pub fn rank(&self, rel_tol: f64) -> usize {
        let Some(&top) = self.singular_values.first() else {
            return 0;
        };
        if top <= 0.0 {
            return 0;
        }
        self.singular_values.iter().filter(|&&s| s > rel_tol * top).count()
    }

    pub fn nuclear_norm(&self) -> f64 {
        self.singular_values.iter().sum()
    }

    pub fn spectral_norm(&self) -> f64 {
        self.singular_values.first().copied().unwrap_or(0.0)
    }

    fn transposed(self) -> Self {
        SvdFactors {
            u: self.v,
            singular_values: self.singular_values,
            v: self.u,
        }
    }
}

pub fn svd(m: &DenseMatrix) -> SvdFactors {
    svd_matrix(m.as_matrix())
}

/// Aspect ratio beyond which a QR pre-reduction is applied.
const TALL_RATIO: usize = 4;

pub(crate) fn svd_matrix(m: &DMatrix<f64>) -> SvdFactors {
    let (n, p) = m.shape();
    if n == 0 || p == 0 {
        let r = n.min(p);
        return SvdFactors {
            u: DMatrix::zeros(n, r),
            singular_values: Vec::new(),
            v: DMatrix::zeros(p, r),
        };
    }
    if p > n {
        return svd_matrix(&m.transpose()).transposed();
    }
    if n >= TALL_RATIO * p {
        // M = QR, R = Ur Σ Vᵀ  =>  M = (Q Ur) Σ Vᵀ
        let qr = m.clone().qr();
        let inner = svd_square(qr.r());
        return SvdFactors {
            u: qr.q() * inner.u,
            singular_values: inner.singular_values,
            v: inner.v,
        };
    }
    svd_square(m.clone())
}

/// Cap on Jacobi sweeps; convergence is quadratic and takes well under 20
/// sweeps in practice.
const MAX_SWEEPS: usize = 60;

/// One-sided Jacobi SVD of an `n × p` matrix with `n ≥ p`.
///
/// Column pairs of `A·V` are rotated until every pair is orthogonal to
/// working precision relative to the column norms; the column norms are
/// then the singular values. Columns that vanish exactly get left vectors
/// completed from the standard basis so that `U` stays orthonormal.
fn svd_square(m: DMatrix<f64>) -> SvdFactors {
    let (n, p) = m.shape();
    debug_assert!(n >= p);
    let mut a = m;
    let mut v = DMatrix::<f64>::identity(p, p);
    let tol = f64::EPSILON * (n as f64).sqrt();
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for i in 0..p {
            for j in i + 1..p {
                let (ci, cj) = (a.column(i), a.column(j));
                let alpha = ci.norm_squared();
                let beta = cj.norm_squared();
                let gamma = ci.dot(&cj);
                if gamma == 0.0 || gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut a, i, j, c, s);
                rotate(&mut v, i, j, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let norms: Vec<f64> = (0..p).map(|k| a.column(k).norm()).collect();
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&x, &y| norms[y].total_cmp(&norms[x]));
    let mut u = DMatrix::zeros(n, p);
    let mut vs = DMatrix::zeros(p, p);
    let mut singular_values = Vec::with_capacity(p);
    let mut missing = Vec::new();
    for (k, &src) in order.iter().enumerate() {
        let s = norms[src];
        singular_values.push(s);
        vs.set_column(k, &v.column(src));
        if s > 0.0 && s.is_finite() {
            u.set_column(k, &(a.column(src) / s));
        } else {
            missing.push(k);
        }
    }
    complete_orthonormal(&mut u, &missing);
    SvdFactors {
        u,
        singular_values,
        v: vs,
    }
}

fn rotate(m: &mut DMatrix<f64>, i: usize, j: usize, c: f64, s: f64) {
    for r in 0..m.nrows() {
        let (x, y) = (m[(r, i)], m[(r, j)]);
        m[(r, i)] = c * x - s * y;
        m[(r, j)] = s * x + c * y;
    }
}

/// Fills the listed columns of `u` with unit vectors orthogonal to all
/// other columns, by Gram–Schmidt against the standard basis.
fn complete_orthonormal(u: &mut DMatrix<f64>, missing: &[usize]) {
    let n = u.nrows();
    let mut candidate = 0;
    for &k in missing {
        while candidate < n {
            let mut w = nalgebra::DVector::<f64>::zeros(n);
            w[candidate] = 1.0;
            candidate += 1;
            for _ in 0..2 {
                for c in 0..u.ncols() {
                    if c != k {
                        let proj = u.column(c).dot(&w);
                        w.axpy(-proj, &u.column(c), 1.0);
                    }
                }
            }
            let norm = w.norm();
            if norm > 0.5 {
                u.set_column(k, &(w / norm));
                break;
            }
        }
    }
}
