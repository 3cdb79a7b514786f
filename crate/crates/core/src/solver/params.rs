//! Data-driven choice of α, β and the detection threshold.

use crate::error::{Error, Result};
use crate::numerics::{median_all, median_in_place, DenseMatrix};

/// Consistency constant of the MAD scale estimator.
pub const MAD_SCALE: f64 = 1.48;
/// β = `DEFAULT_BETA_FACTOR` · α / √m, m the larger dimension.
pub const DEFAULT_BETA_FACTOR: f64 = 2.0;
/// Auto detection threshold T = `DEFAULT_THRESHOLD_FACTOR` · σ̂.
pub const DEFAULT_THRESHOLD_FACTOR: f64 = 0.25;

/// `1.48 · median |dᵢⱼ − median(D)|`. A constant matrix yields 0.
pub fn estimate_sigma(d: &DenseMatrix) -> Result<f64> {
    let center = median_all(d)?;
    let mut dev: Vec<f64> = d.iter().map(|v| (v - center).abs()).collect();
    Ok(MAD_SCALE * median_in_place(&mut dev)?)
}

/// α = (√n + √p)·σ and β = 2α/√max(n, p).
pub fn default_params(n: usize, p: usize, sigma: f64) -> Result<(f64, f64)> {
    default_params_with_factor(n, p, sigma, DEFAULT_BETA_FACTOR)
}

pub fn default_params_with_factor(
    n: usize,
    p: usize,
    sigma: f64,
    beta_factor: f64,
) -> Result<(f64, f64)> {
    if n == 0 || p == 0 {
        return Err(Error::InvalidParameter(format!(
            "matrix dimensions must be positive, got {n}x{p}"
        )));
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::Degenerate(format!(
            "noise scale estimate is {sigma}; supply alpha and beta explicitly"
        )));
    }
    let alpha = ((n as f64).sqrt() + (p as f64).sqrt()) * sigma;
    Ok((alpha, beta_from_alpha(alpha, n, p, beta_factor)))
}

fn beta_from_alpha(alpha: f64, n: usize, p: usize, beta_factor: f64) -> f64 {
    beta_factor * alpha / (n.max(p) as f64).sqrt()
}

/// Detection threshold: either derived from σ̂ or given.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Threshold {
    #[default]
    Auto,
    Fixed(f64),
}

/// Which parameters the caller fixed and which are derived from the data.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamRequest {
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub threshold: Threshold,
    pub beta_factor: f64,
    pub threshold_factor: f64,
}

impl Default for ParamRequest {
    fn default() -> Self {
        ParamRequest {
            alpha: None,
            beta: None,
            threshold: Threshold::Auto,
            beta_factor: DEFAULT_BETA_FACTOR,
            threshold_factor: DEFAULT_THRESHOLD_FACTOR,
        }
    }
}

/// Resolved parameter values together with the rule that produced each.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedParams {
    pub sigma_hat: f64,
    pub alpha: f64,
    pub alpha_rule: String,
    pub beta: f64,
    pub beta_rule: String,
    pub threshold: f64,
    pub threshold_rule: String,
}

pub fn resolve_params(d: &DenseMatrix, req: &ParamRequest) -> Result<ResolvedParams> {
    let (n, p) = d.shape();
    if n == 0 || p == 0 {
        return Err(Error::Degenerate(format!("empty {n}x{p} input matrix")));
    }
    for (name, v) in [("alpha", req.alpha), ("beta", req.beta)] {
        if let Some(v) = v {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
    }
    if !(req.beta_factor > 0.0 && req.threshold_factor >= 0.0) {
        return Err(Error::InvalidParameter(
            "beta factor must be positive and threshold factor non-negative".into(),
        ));
    }
    let sigma_hat = estimate_sigma(d)?;
    let m = n.max(p);

    let (alpha, alpha_rule) = match req.alpha {
        Some(a) => (a, "user".to_string()),
        None => {
            let (a, _) = default_params_with_factor(n, p, sigma_hat, req.beta_factor)?;
            (a, "(sqrt(n)+sqrt(p))*sigma_hat".to_string())
        }
    };
    let (beta, beta_rule) = match req.beta {
        Some(b) => (b, "user".to_string()),
        None => (
            beta_from_alpha(alpha, n, p, req.beta_factor),
            format!("{}*alpha/sqrt({m})", req.beta_factor),
        ),
    };
    let (threshold, threshold_rule) = match req.threshold {
        Threshold::Fixed(t) => {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "threshold must be non-negative, got {t}"
                )));
            }
            (t, "user".to_string())
        }
        Threshold::Auto => (
            req.threshold_factor * sigma_hat,
            format!("{}*sigma_hat", req.threshold_factor),
        ),
    };
    Ok(ResolvedParams {
        sigma_hat,
        alpha,
        alpha_rule,
        beta,
        beta_rule,
        threshold,
        threshold_rule,
    })
}
