//! Acceptance suite. Runs every criterion at its stated tolerance and prints
//! one PASS/FAIL line per criterion; exits nonzero if any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use lrsparse::analysis::{embed_studies, single_linkage};
use lrsparse::evaluate::{benchmark, standard_grid, BenchmarkRow};
use lrsparse::simgen::{generate, PatternSpec};
use lrsparse::solver::{
    decompose, detect, estimate_sigma, objective, optimality_residual, resolve_params, soft_threshold, solve,
    solve_from, svt, DecomposeOptions, ParamRequest,
};
use lrsparse::sumstats::{align, StudySummary};
use lrsparse::{BoolMatrix, DenseMatrix, SolverConfig};
use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

const BENCH_SEEDS: usize = 20;
const BENCH_SEED_BASE: u64 = 1;
const F1_BAND: f64 = 0.08;

/// Reference F1 per pattern at divisors 1, 1.2, 1.5. Only F1 is gated;
/// the pattern-1 precision and recall references are printed alongside.
const REFERENCE_F1: [[f64; 3]; 4] = [
    [0.83, 0.78, 0.70],
    [0.85, 0.80, 0.71],
    [0.85, 0.79, 0.76],
    [0.82, 0.77, 0.71],
];
const PATTERN1_PRECISION: [f64; 3] = [0.84, 0.75, 0.61];
const PATTERN1_RECALL: [f64; 3] = [0.82, 0.82, 0.82];

const SNR_TARGET: [f64; 4] = [2.5, 3.3, 2.6, 2.9];
const SNR_BAND: [f64; 4] = [0.15, 0.25, 0.15, 0.15];

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn gaussian(n: usize, p: usize, sigma: f64, rng: &mut ChaCha8Rng) -> DenseMatrix {
    let normal = Normal::new(0.0, sigma).unwrap();
    DenseMatrix::from_fn(n, p, |_, _| normal.sample(rng)).unwrap()
}

fn pattern_scores(rows: &[BenchmarkRow], pattern: u8) -> Outcome {
    let idx = usize::from(pattern - 1);
    let mut passed = true;
    let mut parts = Vec::new();
    for (k, row) in rows.iter().filter(|r| r.pattern == pattern).enumerate() {
        let target = REFERENCE_F1[idx][k];
        let ok = (row.f1.mean - target).abs() <= F1_BAND;
        passed &= ok;
        let mut part = format!(
            "div {}: F1 {:.3}±{:.3} (target {target:.2}{}) P {:.3} R {:.3}",
            row.divisor,
            row.f1.mean,
            row.f1.std,
            if ok { "" } else { ", OUT OF BAND" },
            row.precision.mean,
            row.recall.mean
        );
        if pattern == 1 {
            part.push_str(&format!(" [reference P {:.2} R {:.2}]", PATTERN1_PRECISION[k], PATTERN1_RECALL[k]));
        }
        parts.push(part);
    }
    outcome(passed && parts.len() == 3, parts.join("; "))
}

fn criterion_snr() -> Outcome {
    let mut passed = true;
    let mut parts = Vec::new();
    for pattern in 1..=4u8 {
        let idx = usize::from(pattern - 1);
        let snrs: Vec<f64> = (0..BENCH_SEEDS as u64)
            .map(|k| generate(&PatternSpec::new(pattern, 1.0, BENCH_SEED_BASE + k)).unwrap().snr)
            .collect();
        let mean = snrs.iter().sum::<f64>() / snrs.len() as f64;
        let ok = (mean - SNR_TARGET[idx]).abs() <= SNR_BAND[idx];
        passed &= ok;
        parts.push(format!(
            "pattern {pattern}: {mean:.3} (target {} ± {})",
            SNR_TARGET[idx], SNR_BAND[idx]
        ));
    }
    outcome(passed, parts.join("; "))
}

/// argmin over a grid of ½(x − m)² + β|x|, refined once around the best point.
fn grid_soft(m: f64, beta: f64) -> f64 {
    let f = |x: f64| 0.5 * (x - m).powi(2) + beta * x.abs();
    let search = |lo: f64, hi: f64, steps: usize| {
        let h = (hi - lo) / steps as f64;
        (0..=steps)
            .map(|k| lo + h * k as f64)
            .min_by(|a, b| f(*a).total_cmp(&f(*b)))
            .unwrap()
    };
    let coarse = search(m.min(0.0) - 0.5, m.max(0.0) + 0.5, 20_000);
    search(coarse - 1e-3, coarse + 1e-3, 2_000)
}

fn criterion_prox() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst_soft: f64 = 0.0;
    for _ in 0..100 {
        let m = gaussian(5, 5, 2.0, &mut rng);
        let beta = rng.random_range(0.1..2.0);
        let s = soft_threshold(&m, beta).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                worst_soft = worst_soft.max((s.get(i, j) - grid_soft(m.get(i, j), beta)).abs());
            }
        }
    }

    let trials = 10;
    let mut beaten = 0;
    let mut min_gap = f64::INFINITY;
    for _ in 0..trials {
        let m = gaussian(8, 6, 1.0, &mut rng);
        let lambda = rng.random_range(0.5..2.0);
        let x = svt(&m, lambda).unwrap();
        let f = |x: &DMatrix<f64>| {
            let nuclear = x.clone().svd(false, false).singular_values.sum();
            0.5 * (x - m.as_matrix()).norm_squared() + lambda * nuclear
        };
        let base = f(x.as_matrix());
        let mut all = true;
        for _ in 0..1000 {
            let dir = DMatrix::from_fn(8, 6, |_, _| rng.sample::<f64, _>(StandardNormal));
            let perturbed = x.as_matrix() + dir.scale(1e-3 / dir.norm());
            let gap = f(&perturbed) - base;
            min_gap = min_gap.min(gap);
            all &= gap >= 0.0;
        }
        beaten += usize::from(all);
    }
    outcome(
        worst_soft < 1e-4 && beaten == trials,
        format!(
            "soft max |Δ| vs grid {worst_soft:.2e} (< 1e-4); SVT optimal in {beaten}/{trials} trials of 1000 perturbations, min gap {min_gap:.2e}"
        ),
    )
}

fn descent_input(rng: &mut ChaCha8Rng) -> DenseMatrix {
    let u = gaussian(30, 2, 1.0, rng);
    let v = gaussian(20, 2, 1.0, rng);
    let low = u.as_matrix() * v.as_matrix().transpose() * 2.0;
    let noise = gaussian(30, 20, 1.0, rng);
    DenseMatrix::from_fn(30, 20, |i, j| {
        let spike = if rng.random_bool(0.05) { 5.0 * if rng.random_bool(0.5) { 1.0 } else { -1.0 } } else { 0.0 };
        low[(i, j)] + noise.get(i, j) + spike
    })
    .unwrap()
}

fn criterion_descent() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut monotone, mut optimal, mut unique) = (0, 0, 0);
    let mut worst_ratio: f64 = 0.0;
    let mut worst_gap: f64 = 0.0;
    let trials = 50;
    for _ in 0..trials {
        let d = descent_input(&mut rng);
        let p = resolve_params(&d, &ParamRequest::default()).unwrap();
        let config = SolverConfig::new(p.alpha, p.beta).unwrap();
        let cold = solve(&d, &config).unwrap();
        let t = &cold.objective_trace;
        monotone += usize::from(t.windows(2).all(|w| w[1] <= w[0] + 1e-10 * w[0].abs().max(1.0)));

        let res = optimality_residual(&d, &cold.x_hat, &cold.e_hat, p.alpha, p.beta).unwrap();
        let ratio = res / (p.alpha + p.beta);
        worst_ratio = worst_ratio.max(ratio);
        optimal += usize::from(cold.converged && ratio < 1e-4);

        let zero = DenseMatrix::zeros(30, 20);
        let f_cold = objective(&d, &cold.x_hat, &cold.e_hat, p.alpha, p.beta).unwrap();
        let mut agree = true;
        for start in [(&d, &zero), (&zero, &d)] {
            let warm = solve_from(&d, &config, Some(start)).unwrap();
            let f_warm = objective(&d, &warm.x_hat, &warm.e_hat, p.alpha, p.beta).unwrap();
            let gap = (f_warm - f_cold).abs() / f_cold.abs().max(1.0);
            worst_gap = worst_gap.max(gap);
            agree &= gap < 1e-6;
        }
        unique += usize::from(agree);
    }
    outcome(
        monotone == trials && optimal == trials && unique == trials,
        format!(
            "non-increasing {monotone}/{trials}; residual < 1e-4(α+β) {optimal}/{trials} (worst {worst_ratio:.2e}); warm starts agree {unique}/{trials} (worst rel gap {worst_gap:.2e})"
        ),
    )
}

fn criterion_sigma() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut passed = true;
    let mut parts = Vec::new();
    for sigma in [0.5, 1.0, 2.0] {
        let within = (0..20)
            .filter(|_| {
                let s = estimate_sigma(&gaussian(200, 200, sigma, &mut rng)).unwrap();
                (s - sigma).abs() <= 0.1 * sigma
            })
            .count();
        passed &= within >= 18;
        parts.push(format!("σ={sigma}: {within}/20 within 10%"));
    }
    outcome(passed, parts.join("; "))
}

/// 20×10 noiseless rank-1 block plus 5 spikes outside the block's rows and
/// columns, with its true support.
fn noiseless_probe(seed: u64) -> (DenseMatrix, BoolMatrix) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut unit = |len: usize| {
        let v: Vec<f64> = (0..len).map(|_| rng.random_range(0.5..1.0)).collect();
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        v.into_iter().map(|a| a / norm).collect::<Vec<f64>>()
    };
    let (u, v) = (unit(8), unit(5));
    let mut d = DMatrix::zeros(20, 10);
    for i in 0..8 {
        for j in 0..5 {
            d[(i, j)] = 50.0 * u[i] * v[j];
        }
    }
    let mut cells: Vec<(usize, usize)> = (8..20).flat_map(|i| (5..10).map(move |j| (i, j))).collect();
    cells.shuffle(&mut rng);
    for &(i, j) in &cells[..5] {
        d[(i, j)] = if rng.random_bool(0.5) { 10.0 } else { -10.0 };
    }
    let d = DenseMatrix::from_matrix(d).unwrap();
    let truth = BoolMatrix::support_of(&d);
    (d, truth)
}

fn criterion_noiseless() -> Outcome {
    let mut exact = 0;
    for seed in 0..10 {
        let (d, truth) = noiseless_probe(seed);
        let mut config = SolverConfig::new(3.0, 1.0).unwrap();
        config.max_iterations = 10_000;
        let result = solve(&d, &config).unwrap();
        exact += usize::from(detect(&result, 1.0) == truth);
    }
    outcome(exact == 10, format!("exact support at T=1 in {exact}/10 seeds (α=3, β=1)"))
}

/// SNP × study z-matrix with half-normal null entries, a three-group shared
/// signal on 2% of SNPs and sparse study-specific spikes.
fn synthetic_z(n: usize, p: usize, seed: u64) -> DenseMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let group: Vec<usize> = (0..p).map(|j| j % 3).collect();
    let mut z = DMatrix::zeros(n, p);
    for i in 0..n {
        let shared = rng.random_bool(0.02);
        let (g, strength) = (rng.random_range(0..3), rng.random_range(3.0..6.0));
        for j in 0..p {
            let mut v = rng.sample::<f64, _>(StandardNormal).abs();
            if shared && group[j] == g {
                v += strength;
            }
            if rng.random_bool(0.001) {
                v += 6.0;
            }
            z[(i, j)] = v;
        }
    }
    DenseMatrix::from_matrix(z).unwrap()
}

fn criterion_scale() -> Outcome {
    let (n, p) = (466_423, 32);
    let z = synthetic_z(n, p, 10);
    let started = Instant::now();
    let dec = decompose(&z, &DecomposeOptions::default()).unwrap();
    let secs = started.elapsed().as_secs_f64();
    let r = &dec.result;
    outcome(
        r.converged && secs < 600.0,
        format!(
            "{n}×{p}: converged={} in {} iterations, {secs:.1}s (limit 600s; reference 152.1s), rank {}, nnz(E) {}",
            r.converged, r.iterations_used, r.rank_of_x, r.nnz_of_e
        ),
    )
}

fn criterion_real_data_substitutes() -> Outcome {
    // planted three-cluster embedding
    let group = [0, 1, 2, 0, 1, 2, 0, 1, 2, 0, 1, 2];
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let x = DenseMatrix::from_fn(300, group.len(), |i, j| {
        let on = i % 3 == group[j];
        if on {
            4.0 + (i / 3) as f64 / 50.0 + 0.01 * rng.random_range(-1.0..1.0)
        } else {
            0.0
        }
    })
    .unwrap();
    let labels = single_linkage(&embed_studies(&x, 3).unwrap(), 1.0).unwrap();
    let recovered = (0..group.len()).all(|a| (0..group.len()).all(|b| (labels[a] == labels[b]) == (group[a] == group[b])));

    // ingestion round trip: re-exported observed records realign identically
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let studies: Vec<StudySummary> = (0..6)
        .map(|s| StudySummary {
            study_name: format!("study{s}"),
            records: (0..500)
                .filter_map(|i| {
                    let p = 10f64.powf(rng.random_range(-12.0..0.0));
                    rng.random_bool(0.8).then(|| (format!("rs{i}"), p))
                })
                .collect(),
            skipped_rows: 0,
        })
        .collect();
    let panel = align(&studies, 4).unwrap();
    let again = align(&panel.to_studies(), 4).unwrap();
    let z_text = panel.z_matrix.to_tsv_string("snp");
    let reparsed = DenseMatrix::parse_tsv(&z_text, "z.tsv").unwrap();
    let round_trip = again == panel && reparsed.as_matrix() == panel.z_matrix.as_matrix();
    outcome(
        recovered && round_trip,
        format!(
            "real datasets not bundled; planted 3-cluster embedding recovered={recovered}; ingestion round trip exact={round_trip} ({} SNPs)",
            panel.snp_ids.len()
        ),
    )
}

type Check<'a> = Box<dyn FnOnce() -> Outcome + 'a>;

fn main() -> ExitCode {
    let started = Instant::now();
    let bench = benchmark(&standard_grid(BENCH_SEED_BASE), BENCH_SEEDS, &DecomposeOptions::default()).unwrap();
    let bench_secs = started.elapsed().as_secs_f64();

    let mut criteria: Vec<(u32, &str, Check<'_>)> = Vec::new();
    for pattern in 1..=4u8 {
        let bench = &bench;
        criteria.push((
            u32::from(pattern),
            ["pattern 1 detection", "pattern 2 detection", "pattern 3 detection", "pattern 4 detection"][usize::from(pattern - 1)],
            Box::new(move || {
                let mut o = pattern_scores(bench, pattern);
                if pattern == 1 {
                    o.detail.push_str(&format!("; full 12-condition benchmark {bench_secs:.1}s"));
                }
                o
            }),
        ));
    }
    criteria.push((5, "SNR fidelity", Box::new(criterion_snr)));
    criteria.push((6, "prox oracles", Box::new(criterion_prox)));
    criteria.push((7, "descent and optimality", Box::new(criterion_descent)));
    criteria.push((8, "noise scale accuracy", Box::new(criterion_sigma)));
    criteria.push((9, "noiseless support recovery", Box::new(criterion_noiseless)));
    criteria.push((10, "scale probe", Box::new(criterion_scale)));
    criteria.push((11, "real-data substitutes", Box::new(criterion_real_data_substitutes)));

    let mut failed = 0;
    for (id, name, check) in criteria {
        let t = Instant::now();
        let o = check();
        failed += usize::from(!o.passed);
        println!(
            "criterion {id:>2} {:<28} {} ({:.1}s) {}",
            name,
            if o.passed { "PASS" } else { "FAIL" },
            t.elapsed().as_secs_f64(),
            o.detail
        );
    }
    println!("acceptance: {} of 11 criteria passed", 11 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
