//! Precision / recall / F1 scoring of detection masks and the simulation
//! benchmark harness.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numerics::{format_value, BoolMatrix};
use crate::simgen::{generate, PatternSpec, SimulatedInstance};
use crate::solver::{decompose, DecomposeOptions, Decomposition};

/// Confusion counts and derived metrics. A metric whose denominator is zero
/// is reported as 0 and flagged through `precision_defined` /
/// `recall_defined`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionReport {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub precision_defined: bool,
    pub recall_defined: bool,
}

impl DetectionReport {
    pub fn from_counts(tp: usize, fp: usize, fn_: usize, tn: usize) -> Self {
        let ratio = |num: usize, den: usize| if den > 0 { num as f64 / den as f64 } else { 0.0 };
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        DetectionReport {
            tp,
            fp,
            fn_,
            tn,
            precision,
            recall,
            f1,
            precision_defined: tp + fp > 0,
            recall_defined: tp + fn_ > 0,
        }
    }

    pub fn is_degenerate(&self) -> bool {
        !(self.precision_defined && self.recall_defined)
    }

    pub const TSV_HEADER: &'static str = "tp\tfp\tfn\ttn\tprecision\trecall\tf1\tdegenerate";

    pub fn tsv_row(&self) -> String {
        format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            self.tp,
            self.fp,
            self.fn_,
            self.tn,
            format_value(self.precision),
            format_value(self.recall),
            format_value(self.f1),
            u8::from(self.is_degenerate())
        )
    }

    pub fn to_tsv(&self) -> String {
        format!("{}\n{}\n", Self::TSV_HEADER, self.tsv_row())
    }
}

pub fn score(predicted: &BoolMatrix, truth: &BoolMatrix) -> Result<DetectionReport> {
    if predicted.shape() != truth.shape() {
        return Err(Error::ShapeMismatch {
            expected: truth.shape(),
            found: predicted.shape(),
        });
    }
    let (mut tp, mut fp, mut fn_, mut tn) = (0, 0, 0, 0);
    for (&p, &t) in predicted.as_slice().iter().zip(truth.as_slice()) {
        match (p, t) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => tn += 1,
        }
    }
    Ok(DetectionReport::from_counts(tp, fp, fn_, tn))
}

/// Decomposes a simulated instance and scores its detections.
pub fn run_instance(
    instance: &SimulatedInstance,
    options: &DecomposeOptions,
) -> Result<(Decomposition, DetectionReport)> {
    let dec = decompose(&instance.data, options)?;
    let report = score(&dec.mask, &instance.truth_mask)?;
    Ok((dec, report))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    /// Mean and sample standard deviation (0 for a single value).
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        MeanStd { mean, std }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkRow {
    pub pattern: u8,
    pub divisor: f64,
    pub seeds: Vec<u64>,
    pub snr_mean: f64,
    pub precision: MeanStd,
    pub recall: MeanStd,
    pub f1: MeanStd,
    pub reports: Vec<DetectionReport>,
}

/// The 4 patterns × divisors {1, 1.2, 1.5} grid of the simulation study.
pub fn standard_grid(base_seed: u64) -> Vec<PatternSpec> {
    let mut specs = Vec::new();
    for pattern in 1..=4 {
        for divisor in [1.0, 1.2, 1.5] {
            specs.push(PatternSpec::new(pattern, divisor, base_seed));
        }
    }
    specs
}

/// Runs every spec with seeds `spec.seed, spec.seed + 1, …` and summarizes
/// across seeds. Seeds are evaluated in parallel and reduced in seed order.
pub fn benchmark(
    patterns: &[PatternSpec],
    seeds: usize,
    options: &DecomposeOptions,
) -> Result<Vec<BenchmarkRow>> {
    if seeds == 0 {
        return Err(Error::InvalidParameter("benchmark needs at least one seed".into()));
    }
    patterns
        .iter()
        .map(|spec| {
            let seed_list: Vec<u64> = (0..seeds as u64).map(|k| spec.seed + k).collect();
            let runs: Vec<(f64, DetectionReport)> = seed_list
                .par_iter()
                .map(|&seed| {
                    let instance = generate(&PatternSpec { seed, ..spec.clone() })?;
                    let (_, report) = run_instance(&instance, options)?;
                    Ok((instance.snr, report))
                })
                .collect::<Result<_>>()?;
            let pick = |f: fn(&DetectionReport) -> f64| -> Vec<f64> { runs.iter().map(|(_, r)| f(r)).collect() };
            Ok(BenchmarkRow {
                pattern: spec.pattern,
                divisor: spec.signal_divisor,
                snr_mean: runs.iter().map(|(s, _)| s).sum::<f64>() / runs.len() as f64,
                precision: MeanStd::of(&pick(|r| r.precision)),
                recall: MeanStd::of(&pick(|r| r.recall)),
                f1: MeanStd::of(&pick(|r| r.f1)),
                reports: runs.into_iter().map(|(_, r)| r).collect(),
                seeds: seed_list,
            })
        })
        .collect()
}

pub const BENCHMARK_HEADER: &str =
    "pattern\tdivisor\tsnr_mean\tprecision_mean\tprecision_std\trecall_mean\trecall_std\tf1_mean\tf1_std";

pub fn benchmark_tsv(rows: &[BenchmarkRow]) -> String {
    let mut out = format!("{BENCHMARK_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{}\t{}\t{:.4}\t{:.4}\t{:.4}\t{:.4}\t{:.4}\t{:.4}\t{:.4}",
            r.pattern,
            format_value(r.divisor),
            r.snr_mean,
            r.precision.mean,
            r.precision.std,
            r.recall.mean,
            r.recall.std,
            r.f1.mean,
            r.f1.std
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mask(bits: &[bool], cols: usize) -> BoolMatrix {
        BoolMatrix::from_fn(bits.len() / cols, cols, |i, j| bits[i * cols + j])
    }

    #[test]
    fn perfect_prediction() {
        let t = mask(&[true, false, true, false], 2);
        let r = score(&t, &t).unwrap();
        assert_eq!((r.precision, r.recall, r.f1), (1.0, 1.0, 1.0));
        assert!(!r.is_degenerate());
    }

    #[test]
    fn counts_example() {
        let r = DetectionReport::from_counts(95, 5, 5, 895);
        assert!((r.precision - 0.95).abs() < 1e-15);
        assert!((r.recall - 0.95).abs() < 1e-15);
        assert!((r.f1 - 0.95).abs() < 1e-15);
    }

    #[test]
    fn empty_prediction_is_flagged() {
        let truth = mask(&[true, false], 2);
        let none = mask(&[false, false], 2);
        let r = score(&none, &truth).unwrap();
        assert_eq!((r.precision, r.f1), (0.0, 0.0));
        assert!(!r.precision_defined && r.recall_defined && r.is_degenerate());
    }

    #[test]
    fn empty_truth_is_flagged() {
        let truth = mask(&[false, false], 2);
        let some = mask(&[true, false], 2);
        let r = score(&some, &truth).unwrap();
        assert_eq!(r.recall, 0.0);
        assert!(!r.recall_defined && r.precision_defined);
    }

    #[test]
    fn shape_mismatch() {
        let a = BoolMatrix::new(2, 2);
        let b = BoolMatrix::new(2, 3);
        assert!(matches!(score(&a, &b), Err(Error::ShapeMismatch { .. })));
    }

    #[test]
    fn zero_seeds_rejected() {
        let r = benchmark(&[PatternSpec::new(1, 1.0, 0)], 0, &DecomposeOptions::default());
        assert!(matches!(r, Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn benchmark_is_deterministic() {
        let specs = [PatternSpec::new(2, 1.2, 10)];
        let a = benchmark(&specs, 3, &DecomposeOptions::default()).unwrap();
        let b = benchmark(&specs, 3, &DecomposeOptions::default()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a[0].seeds, vec![10, 11, 12]);
        assert!(benchmark_tsv(&a).starts_with(BENCHMARK_HEADER));
    }

    #[test]
    fn mean_std() {
        let m = MeanStd::of(&[1.0, 2.0, 3.0]);
        assert_eq!(m.mean, 2.0);
        assert!((m.std - 1.0).abs() < 1e-15);
        assert_eq!(MeanStd::of(&[4.0]).std, 0.0);
    }

    proptest! {
        #[test]
        fn f1_between_precision_and_recall(pairs in prop::collection::vec((any::<bool>(), any::<bool>()), 1..200)) {
            let n = pairs.len();
            let p = mask(&pairs.iter().map(|x| x.0).collect::<Vec<_>>(), n);
            let t = mask(&pairs.iter().map(|x| x.1).collect::<Vec<_>>(), n);
            let r = score(&p, &t).unwrap();
            prop_assert_eq!(r.tp + r.fp + r.fn_ + r.tn, n);
            if !r.is_degenerate() && r.f1 > 0.0 {
                prop_assert!(r.f1 >= r.precision.min(r.recall) - 1e-12);
                prop_assert!(r.f1 <= r.precision.max(r.recall) + 1e-12);
            }
        }

        #[test]
        fn score_is_order_invariant(pairs in prop::collection::vec((any::<bool>(), any::<bool>()), 2..100)) {
            let n = pairs.len();
            let fwd = score(
                &mask(&pairs.iter().map(|x| x.0).collect::<Vec<_>>(), n),
                &mask(&pairs.iter().map(|x| x.1).collect::<Vec<_>>(), n),
            ).unwrap();
            let rev: Vec<_> = pairs.iter().rev().collect();
            let bwd = score(
                &mask(&rev.iter().map(|x| x.0).collect::<Vec<_>>(), n),
                &mask(&rev.iter().map(|x| x.1).collect::<Vec<_>>(), n),
            ).unwrap();
            prop_assert_eq!(fwd, bwd);
        }
    }
}
