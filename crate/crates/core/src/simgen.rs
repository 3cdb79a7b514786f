//! Synthetic bicluster benchmark: four signal patterns on a 100 × 50 grid,
//! with optional sparse spikes, row/column shuffling and Gaussian noise.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::numerics::{format_value, BoolMatrix, DenseMatrix};

pub const N_ROWS: usize = 100;
pub const N_COLS: usize = 50;

// Independent random streams, so that patterns sharing a seed share their
// permutations and noise.
const STREAM_PERMUTATION: u64 = 1;
const STREAM_SPARSE: u64 = 2;
const STREAM_NOISE: u64 = 3;

/// Unit-norm factors of the two planted biclusters.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorVectors {
    pub u1: Vec<f64>,
    pub v1: Vec<f64>,
    pub u2: Vec<f64>,
    pub v2: Vec<f64>,
}

fn blocks(parts: &[(f64, usize)]) -> Vec<f64> {
    parts
        .iter()
        .flat_map(|&(value, len)| std::iter::repeat_n(value, len))
        .collect()
}

fn normalized(mut v: Vec<f64>) -> Vec<f64> {
    let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    v.iter_mut().for_each(|a| *a /= norm);
    v
}

fn singles(values: &[f64]) -> Vec<(f64, usize)> {
    values.iter().map(|&v| (v, 1)).collect()
}

pub fn factor_vectors() -> FactorVectors {
    let mut u1 = singles(&[10., 9., 8., 7., 6., 5., 4., 3.]);
    u1.extend([(2., 17), (0., 75)]);

    let mut v1 = singles(&[10., -10., 8., -8., 5., -5.]);
    v1.extend([(3., 5), (-3., 5), (0., 34)]);

    let mut u2 = vec![(0., 13)];
    u2.extend(singles(&[10., 9., 8., 7., 6., 5., 4., 3.]));
    u2.extend([(2., 17), (0., 62)]);

    let mut v2 = vec![(0., 9)];
    v2.extend(singles(&[10., -9., 8., -7., 6., -5.]));
    v2.extend([(4., 5), (-3., 5), (0., 25)]);

    FactorVectors {
        u1: normalized(blocks(&u1)),
        v1: normalized(blocks(&v1)),
        u2: normalized(blocks(&u2)),
        v2: normalized(blocks(&v2)),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatternSpec {
    /// 1: rank one; 2: rank one plus spikes; 3: two overlapping biclusters;
    /// 4: two biclusters plus spikes.
    pub pattern: u8,
    pub d: f64,
    pub sparse_prob: f64,
    pub sparse_value: f64,
    pub noise_sigma: f64,
    pub signal_divisor: f64,
    pub seed: u64,
}

impl PatternSpec {
    pub fn new(pattern: u8, signal_divisor: f64, seed: u64) -> Self {
        PatternSpec {
            pattern,
            d: 50.0,
            sparse_prob: 0.01,
            sparse_value: 6.0,
            noise_sigma: 1.0,
            signal_divisor,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=4).contains(&self.pattern) {
            return Err(Error::InvalidParameter(format!(
                "pattern must be 1, 2, 3 or 4, got {}",
                self.pattern
            )));
        }
        if !(0.0..=1.0).contains(&self.sparse_prob) {
            return Err(Error::InvalidParameter(format!(
                "sparse probability must lie in [0, 1], got {}",
                self.sparse_prob
            )));
        }
        if !(self.signal_divisor >= 1.0 && self.signal_divisor.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "signal divisor must be at least 1, got {}",
                self.signal_divisor
            )));
        }
        if !(self.noise_sigma > 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "noise sigma must be positive, got {}",
                self.noise_sigma
            )));
        }
        if !(self.d.is_finite() && self.sparse_value.is_finite()) {
            return Err(Error::InvalidParameter("scale and spike value must be finite".into()));
        }
        Ok(())
    }

    fn has_spikes(&self) -> bool {
        matches!(self.pattern, 2 | 4)
    }

    fn rank(&self) -> usize {
        if self.pattern >= 3 {
            2
        } else {
            1
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimulatedInstance {
    pub spec: PatternSpec,
    pub data: DenseMatrix,
    /// Noise-free signal in shuffled coordinates.
    pub truth_signal: DenseMatrix,
    pub truth_mask: BoolMatrix,
    /// Shuffled row `i` holds original row `row_perm[i]`.
    pub row_perm: Vec<usize>,
    pub col_perm: Vec<usize>,
    pub snr: f64,
}

/// Root mean square of the signal over its support, in units of noise σ.
pub fn compute_snr(truth_signal: &DenseMatrix, noise_sigma: f64) -> Result<f64> {
    let (sum_sq, count) = truth_signal
        .iter()
        .filter(|v| **v != 0.0)
        .fold((0.0, 0usize), |(s, c), v| (s + v * v, c + 1));
    if count == 0 {
        return Err(Error::Degenerate("signal matrix has no nonzero entries".into()));
    }
    if !(noise_sigma > 0.0 && noise_sigma.is_finite()) {
        return Err(Error::InvalidParameter(format!("noise sigma must be positive, got {noise_sigma}")));
    }
    Ok((sum_sq / count as f64).sqrt() / noise_sigma)
}

fn rng_stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn generate(spec: &PatternSpec) -> Result<SimulatedInstance> {
    spec.validate()?;
    let f = factor_vectors();
    let mut base = DMatrix::from_fn(N_ROWS, N_COLS, |i, j| spec.d * f.u1[i] * f.v1[j]);
    if spec.rank() == 2 {
        base += DMatrix::from_fn(N_ROWS, N_COLS, |i, j| spec.d * f.u2[i] * f.v2[j]);
    }
    if spec.has_spikes() {
        let mut rng = rng_stream(spec.seed, STREAM_SPARSE);
        for i in 0..N_ROWS {
            for j in 0..N_COLS {
                if rng.random::<f64>() < spec.sparse_prob {
                    base[(i, j)] += spec.sparse_value;
                }
            }
        }
    }
    base /= spec.signal_divisor;

    let mut rng = rng_stream(spec.seed, STREAM_PERMUTATION);
    let mut row_perm: Vec<usize> = (0..N_ROWS).collect();
    let mut col_perm: Vec<usize> = (0..N_COLS).collect();
    row_perm.shuffle(&mut rng);
    col_perm.shuffle(&mut rng);
    let truth = DMatrix::from_fn(N_ROWS, N_COLS, |i, j| base[(row_perm[i], col_perm[j])]);

    let mut rng = rng_stream(spec.seed, STREAM_NOISE);
    let mut data = truth.clone();
    for i in 0..N_ROWS {
        for j in 0..N_COLS {
            data[(i, j)] += spec.noise_sigma * rng.sample::<f64, _>(StandardNormal);
        }
    }

    let truth_signal = DenseMatrix::from_matrix(truth)?;
    let snr = compute_snr(&truth_signal, spec.noise_sigma)?;
    Ok(SimulatedInstance {
        spec: spec.clone(),
        data: DenseMatrix::from_matrix(data)?,
        truth_mask: BoolMatrix::support_of(&truth_signal),
        truth_signal,
        row_perm,
        col_perm,
        snr,
    })
}

fn join(values: &[usize]) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

impl SimulatedInstance {
    /// Flat `key=value` description of the instance.
    pub fn meta(&self) -> String {
        let s = &self.spec;
        let mut out = String::new();
        let _ = writeln!(out, "pattern={}", s.pattern);
        let _ = writeln!(out, "seed={}", s.seed);
        let _ = writeln!(out, "divisor={}", format_value(s.signal_divisor));
        let _ = writeln!(out, "snr={}", format_value(self.snr));
        let _ = writeln!(out, "d={}", format_value(s.d));
        let _ = writeln!(out, "sparse_prob={}", format_value(s.sparse_prob));
        let _ = writeln!(out, "sparse_value={}", format_value(s.sparse_value));
        let _ = writeln!(out, "noise_sigma={}", format_value(s.noise_sigma));
        let _ = writeln!(out, "n_rows={}", self.data.n_rows());
        let _ = writeln!(out, "n_cols={}", self.data.n_cols());
        let _ = writeln!(out, "row_perm={}", join(&self.row_perm));
        let _ = writeln!(out, "col_perm={}", join(&self.col_perm));
        out
    }

    /// Writes `data.tsv`, `truth.tsv`, `mask.tsv` and `meta.txt` into `dir`.
    pub fn write_dir(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        self.data.write_tsv(dir.join("data.tsv"))?;
        self.truth_signal.write_tsv(dir.join("truth.tsv"))?;
        self.truth_mask.write_tsv(dir.join("mask.tsv"))?;
        let meta = dir.join("meta.txt");
        std::fs::write(&meta, self.meta()).map_err(|e| Error::io(&meta, e))
    }
}
