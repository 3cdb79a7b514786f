//! Alternating proximal solver for
//! `½‖D − X − E‖_F² + α‖X‖_* + β‖E‖_1`.
//!
//! Each sweep sets `X ← D_α(D − E)` (singular value thresholding) and then
//! `E ← S_β(D − X)` (soft-thresholding). Both steps are exact block
//! minimizations, so the objective never increases.

mod params;
mod prox;

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::numerics::{format_value, svd_matrix, BoolMatrix, DenseMatrix};

pub use params::{
    default_params, default_params_with_factor, estimate_sigma, resolve_params, ParamRequest,
    ResolvedParams, Threshold, DEFAULT_BETA_FACTOR, DEFAULT_THRESHOLD_FACTOR, MAD_SCALE,
};
pub use prox::{soft_threshold, svt};

pub const DEFAULT_MAX_ITERATIONS: usize = 500;
pub const DEFAULT_REL_TOLERANCE: f64 = 1e-10;
/// Singular values of X̂ below this fraction of σ₁ do not count toward its rank.
pub const RANK_REL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub alpha: f64,
    pub beta: f64,
    pub max_iterations: usize,
    pub rel_tolerance: f64,
    pub detection_threshold: Threshold,
}

impl SolverConfig {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        let config = SolverConfig {
            alpha,
            beta,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            rel_tolerance: DEFAULT_REL_TOLERANCE,
            detection_threshold: Threshold::Auto,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::InvalidParameter(format!("alpha must be positive, got {}", self.alpha)));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::InvalidParameter(format!("beta must be positive, got {}", self.beta)));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidParameter("max_iterations must be at least 1".into()));
        }
        if !(self.rel_tolerance > 0.0 && self.rel_tolerance.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "rel_tolerance must be positive, got {}",
                self.rel_tolerance
            )));
        }
        if let Threshold::Fixed(t) = self.detection_threshold {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(Error::InvalidParameter(format!("threshold must be non-negative, got {t}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SolverResult {
    pub x_hat: DenseMatrix,
    pub e_hat: DenseMatrix,
    /// Objective at the starting point followed by its value after each sweep.
    pub objective_trace: Vec<f64>,
    pub iterations_used: usize,
    pub converged: bool,
    pub rank_of_x: usize,
    pub nnz_of_e: usize,
}

impl SolverResult {
    pub fn final_objective(&self) -> f64 {
        *self.objective_trace.last().expect("trace holds the starting value")
    }

    /// Two-column `iteration\tobjective` TSV; iteration 0 is the start point.
    pub fn trace_tsv(&self) -> String {
        let mut out = String::from("iteration\tobjective\n");
        for (i, f) in self.objective_trace.iter().enumerate() {
            let _ = writeln!(out, "{i}\t{}", format_value(*f));
        }
        out
    }

    pub fn write_trace_tsv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.trace_tsv()).map_err(|e| Error::io(path, e))
    }
}

/// `½‖D − X − E‖_F² + α‖X‖_* + β‖E‖_1`.
pub fn objective(d: &DenseMatrix, x: &DenseMatrix, e: &DenseMatrix, alpha: f64, beta: f64) -> Result<f64> {
    d.ensure_same_shape(x)?;
    d.ensure_same_shape(e)?;
    let nuclear = svd_matrix(x.as_matrix()).nuclear_norm();
    Ok(smooth_part(d.as_matrix(), x.as_matrix(), e.as_matrix()) + alpha * nuclear + beta * l1(e.as_matrix()))
}

fn smooth_part(d: &DMatrix<f64>, x: &DMatrix<f64>, e: &DMatrix<f64>) -> f64 {
    let mut acc = 0.0;
    for ((dv, xv), ev) in d.iter().zip(x.iter()).zip(e.iter()) {
        let r = dv - xv - ev;
        acc += r * r;
    }
    0.5 * acc
}

fn l1(m: &DMatrix<f64>) -> f64 {
    m.iter().map(|v| v.abs()).sum()
}

/// Runs the alternating solver from `X = E = 0`.
pub fn solve(d: &DenseMatrix, config: &SolverConfig) -> Result<SolverResult> {
    solve_from(d, config, None)
}

/// Runs the alternating solver from a given `(X, E)` starting pair.
///
/// Stops once `(F_prev − F) / max(F_prev, 1)` drops below the relative
/// tolerance. Hitting the iteration cap is reported through
/// [`SolverResult::converged`], not as an error.
pub fn solve_from(
    d: &DenseMatrix,
    config: &SolverConfig,
    start: Option<(&DenseMatrix, &DenseMatrix)>,
) -> Result<SolverResult> {
    config.validate()?;
    let dm = d.as_matrix();
    let (alpha, beta) = (config.alpha, config.beta);
    let (mut x, mut e) = match start {
        Some((x0, e0)) => {
            d.ensure_same_shape(x0)?;
            d.ensure_same_shape(e0)?;
            (x0.as_matrix().clone(), e0.as_matrix().clone())
        }
        None => (DMatrix::zeros(dm.nrows(), dm.ncols()), DMatrix::zeros(dm.nrows(), dm.ncols())),
    };

    let mut f_prev = match start {
        Some((x0, e0)) => objective(d, x0, e0, alpha, beta)?,
        None => smooth_part(dm, &x, &e),
    };
    let mut trace = vec![f_prev];
    let mut shrunk = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    while iterations < config.max_iterations {
        iterations += 1;
        let step = prox::svt_matrix(&(dm - &e), alpha);
        x = step.x;
        e = prox::soft_matrix(&(dm - &x), beta);
        let f = smooth_part(dm, &x, &e) + alpha * step.shrunk.iter().sum::<f64>() + beta * l1(&e);
        shrunk = step.shrunk;
        trace.push(f);
        if (f_prev - f) / f_prev.max(1.0) < config.rel_tolerance {
            converged = true;
            break;
        }
        f_prev = f;
    }

    let rank_of_x = match shrunk.first() {
        Some(&top) if top > 0.0 => shrunk.iter().filter(|&&s| s > RANK_REL_TOL * top).count(),
        _ => 0,
    };
    let nnz_of_e = e.iter().filter(|v| **v != 0.0).count();
    Ok(SolverResult {
        x_hat: DenseMatrix::from_matrix_unchecked(x).with_labels_of(d),
        e_hat: DenseMatrix::from_matrix_unchecked(e).with_labels_of(d),
        objective_trace: trace,
        iterations_used: iterations,
        converged,
        rank_of_x,
        nnz_of_e,
    })
}

/// Violation of the first-order optimality conditions at `(X, E)`.
///
/// With `R = D − X − E` and `X = U Σ Vᵀ` (numerical rank k), optimality
/// requires `UᵀR = αVᵀ`, `RV = αU`, `‖(I − UUᵀ) R (I − VVᵀ)‖₂ ≤ α`, and
/// entrywise `Rᵢⱼ = β·sign(Eᵢⱼ)` where `Eᵢⱼ ≠ 0`, `|Rᵢⱼ| ≤ β` elsewhere.
/// The result is the largest violation over all these conditions, measured
/// entrywise (spectrally for the complement block); it is zero exactly at
/// the optimum.
pub fn optimality_residual(
    d: &DenseMatrix,
    x: &DenseMatrix,
    e: &DenseMatrix,
    alpha: f64,
    beta: f64,
) -> Result<f64> {
    d.ensure_same_shape(x)?;
    d.ensure_same_shape(e)?;
    let (xm, em) = (x.as_matrix(), e.as_matrix());
    let r = d.as_matrix() - xm - em;

    let f = svd_matrix(xm);
    let k = f.rank(RANK_REL_TOL);
    let u = f.u.columns(0, k);
    let v = f.v.columns(0, k);
    let ut_r = u.transpose() * &r;
    let r_v = &r * v;
    let mut worst: f64 = 0.0;
    if k > 0 {
        worst = worst.max((&ut_r - v.transpose() * alpha).amax());
        worst = worst.max((&r_v - u * alpha).amax());
    }
    // (I − UUᵀ) R (I − VVᵀ) = R − U(UᵀR) − (RV)Vᵀ + U(UᵀRV)Vᵀ
    let complement = &r - u * &ut_r - &r_v * v.transpose() + u * (&ut_r * v) * v.transpose();
    let spectral = svd_matrix(&complement).spectral_norm();
    worst = worst.max(spectral - alpha);

    for (rv, ev) in r.iter().zip(em.iter()) {
        let violation = if *ev == 0.0 {
            rv.abs() - beta
        } else {
            (rv - beta * ev.signum()).abs()
        };
        worst = worst.max(violation);
    }
    Ok(worst.max(0.0))
}

/// Entries reported by either component: `|X̂ᵢⱼ| > T` or `|Êᵢⱼ| > T`.
pub fn detect(result: &SolverResult, threshold: f64) -> BoolMatrix {
    detect_in(&result.x_hat, &result.e_hat, threshold)
}

/// [`detect`] for components read back from disk.
pub fn detect_components(x: &DenseMatrix, e: &DenseMatrix, threshold: f64) -> Result<BoolMatrix> {
    x.ensure_same_shape(e)?;
    Ok(detect_in(x, e, threshold))
}

fn detect_in(x: &DenseMatrix, e: &DenseMatrix, threshold: f64) -> BoolMatrix {
    BoolMatrix::from_fn(x.n_rows(), x.n_cols(), |i, j| {
        x.get(i, j).abs() > threshold || e.get(i, j).abs() > threshold
    })
}

/// Options for a full decomposition run with data-driven parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct DecomposeOptions {
    pub params: ParamRequest,
    pub max_iterations: usize,
    pub rel_tolerance: f64,
}

impl Default for DecomposeOptions {
    fn default() -> Self {
        DecomposeOptions {
            params: ParamRequest::default(),
            max_iterations: DEFAULT_MAX_ITERATIONS,
            rel_tolerance: DEFAULT_REL_TOLERANCE,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Decomposition {
    pub params: ResolvedParams,
    pub result: SolverResult,
    pub mask: BoolMatrix,
}

/// Resolves σ̂, α, β and T for `d`, solves, and applies detection.
pub fn decompose(d: &DenseMatrix, options: &DecomposeOptions) -> Result<Decomposition> {
    let params = resolve_params(d, &options.params)?;
    let config = SolverConfig {
        alpha: params.alpha,
        beta: params.beta,
        max_iterations: options.max_iterations,
        rel_tolerance: options.rel_tolerance,
        detection_threshold: Threshold::Fixed(params.threshold),
    };
    let result = solve(d, &config)?;
    let mask = detect(&result, params.threshold);
    Ok(Decomposition { params, result, mask })
}
