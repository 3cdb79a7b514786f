//! Command-line front end. Each subcommand writes its outputs plus a
//! `manifest.txt` of flat `key=value` lines recording every resolved
//! parameter and the rule that produced it.

use std::ffi::OsString;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::analysis::{embed_studies, extract_snps, numerical_rank, single_linkage, StudyEmbedding};
use crate::error::{Error, Result};
use crate::evaluate::{benchmark, benchmark_tsv, score, standard_grid, DetectionReport};
use crate::numerics::{BoolMatrix, DenseMatrix};
use crate::simgen::{generate, PatternSpec};
use crate::solver::{
    decompose, detect_components, estimate_sigma, DecomposeOptions, Decomposition, ParamRequest, Threshold,
    DEFAULT_BETA_FACTOR, DEFAULT_MAX_ITERATIONS, DEFAULT_REL_TOLERANCE, DEFAULT_THRESHOLD_FACTOR,
};
use crate::sumstats::{align_with, load_studies, read_manifest, AlignOptions, Imputation, ZConvention};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NOT_CONVERGED: i32 = 3;

pub const MANIFEST_FILE: &str = "manifest.txt";

#[derive(Debug, Parser)]
#[command(name = "lrsparse", version, about = "Low-rank plus sparse decomposition of multi-study association matrices")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a simulated instance (data, truth and support mask).
    Simulate(SimulateArgs),
    /// Decompose a matrix into low-rank and sparse parts.
    Decompose(DecomposeArgs),
    /// Score detections against a truth mask, or run the simulation benchmark.
    Evaluate(EvaluateArgs),
    /// Run the summary-statistics pipeline: align, convert, decompose, report.
    Analyze(AnalyzeArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=4))]
    pub pattern: u8,
    /// Signal divisor; larger values weaken the signal.
    #[arg(long, default_value_t = 1.0)]
    pub divisor: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "simulation")]
    pub out: PathBuf,
}

/// Solver flags shared by `decompose` and `analyze`.
#[derive(Debug, Args)]
pub struct SolverArgs {
    /// Nuclear-norm weight (default: derived from the noise estimate).
    #[arg(long)]
    pub alpha: Option<f64>,
    /// ℓ1 weight (default: beta-factor · alpha / sqrt(max(n, p))).
    #[arg(long)]
    pub beta: Option<f64>,
    /// Detection threshold: `auto` or a non-negative number.
    #[arg(long, default_value = "auto", value_parser = parse_threshold)]
    pub threshold: Threshold,
    #[arg(long, default_value_t = DEFAULT_BETA_FACTOR)]
    pub beta_factor: f64,
    #[arg(long, default_value_t = DEFAULT_THRESHOLD_FACTOR)]
    pub threshold_factor: f64,
    /// Relative objective decrease below which iteration stops.
    #[arg(long, default_value_t = DEFAULT_REL_TOLERANCE)]
    pub tol: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_ITERATIONS)]
    pub max_iter: usize,
}

impl SolverArgs {
    fn options(&self) -> DecomposeOptions {
        DecomposeOptions {
            params: ParamRequest {
                alpha: self.alpha,
                beta: self.beta,
                threshold: self.threshold,
                beta_factor: self.beta_factor,
                threshold_factor: self.threshold_factor,
            },
            max_iterations: self.max_iter,
            rel_tolerance: self.tol,
        }
    }
}

#[derive(Debug, Args)]
pub struct DecomposeArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long, default_value = "decomposition")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Low-rank component written by `decompose`.
    #[arg(long, requires = "e", conflicts_with_all = ["mask", "benchmark"])]
    pub x: Option<PathBuf>,
    /// Sparse component written by `decompose`.
    #[arg(long, requires = "x")]
    pub e: Option<PathBuf>,
    /// Predicted support mask (0/1 TSV).
    #[arg(long, conflicts_with = "benchmark")]
    pub mask: Option<PathBuf>,
    /// True support (nonzero entries count as true).
    #[arg(long, required_unless_present = "benchmark")]
    pub truth: Option<PathBuf>,
    /// Detection threshold for --x/--e: `auto` or a number.
    #[arg(long, default_value = "auto", value_parser = parse_threshold)]
    pub threshold: Threshold,
    #[arg(long, default_value_t = DEFAULT_THRESHOLD_FACTOR)]
    pub threshold_factor: f64,
    /// Input matrix used to estimate the noise level when no decomposition
    /// manifest sits next to --x.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Run the 4-pattern × 3-divisor simulation benchmark.
    #[arg(long)]
    pub benchmark: bool,
    #[arg(long, default_value_t = 20)]
    pub seeds: usize,
    /// First seed of the benchmark.
    #[arg(long, default_value_t = 1)]
    pub seed_base: u64,
    /// Restrict the benchmark to these patterns.
    #[arg(long, value_delimiter = ',', value_parser = clap::value_parser!(u8).range(1..=4))]
    pub patterns: Vec<u8>,
    #[arg(long, default_value = "evaluation")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ImputationArg {
    Null,
    Median,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ConventionArg {
    TwoSided,
    OneSided,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Study list: `name<TAB>path` per line.
    #[arg(long)]
    pub manifest: PathBuf,
    /// Keep SNPs reported by at least this many studies.
    #[arg(long)]
    pub min_coverage: usize,
    #[arg(long, default_value_t = 3)]
    pub embed_rank: usize,
    #[arg(long, value_enum, default_value = "null")]
    pub imputation: ImputationArg,
    #[arg(long, value_enum, default_value = "two-sided")]
    pub z_convention: ConventionArg,
    /// Group studies closer than this radius in the embedding.
    #[arg(long)]
    pub cluster_radius: Option<f64>,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long, default_value = "analysis")]
    pub out: PathBuf,
}

fn parse_threshold(s: &str) -> std::result::Result<Threshold, String> {
    if s.eq_ignore_ascii_case("auto") {
        return Ok(Threshold::Auto);
    }
    match s.parse::<f64>() {
        Ok(t) if t >= 0.0 && t.is_finite() => Ok(Threshold::Fixed(t)),
        _ => Err(format!("expected `auto` or a non-negative number, got {s:?}")),
    }
}

/// Ordered `key=value` record of a run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunManifest {
    entries: Vec<(String, String)>,
}

impl RunManifest {
    pub fn new(subcommand: &str, command_line: &[OsString]) -> Self {
        let mut m = RunManifest::default();
        m.set("tool", "lrsparse");
        m.set("version", env!("CARGO_PKG_VERSION"));
        m.set("subcommand", subcommand);
        let args: Vec<String> = command_line.iter().map(|a| a.to_string_lossy().into_owned()).collect();
        m.set("command", args.join(" "));
        m
    }

    pub fn set(&mut self, key: &str, value: impl Display) {
        let value = value.to_string().replace('\n', " ");
        match self.entries.iter_mut().find(|(k, _)| k == key) {
            Some(entry) => entry.1 = value,
            None => self.entries.push((key.to_string(), value)),
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn to_text(&self) -> String {
        self.entries.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }

    pub fn parse(text: &str) -> Self {
        let entries = text
            .lines()
            .filter_map(|l| l.split_once('='))
            .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
            .collect();
        RunManifest { entries }
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::parse(&text))
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    fn record_solver(&mut self, args: &SolverArgs, dec: &Decomposition) {
        let p = &dec.params;
        let r = &dec.result;
        self.set("sigma_hat", p.sigma_hat);
        self.set("alpha", p.alpha);
        self.set("alpha_rule", &p.alpha_rule);
        self.set("beta", p.beta);
        self.set("beta_rule", &p.beta_rule);
        self.set("threshold", p.threshold);
        self.set("threshold_rule", &p.threshold_rule);
        self.set("beta_factor", args.beta_factor);
        self.set("threshold_factor", args.threshold_factor);
        self.set("rel_tolerance", args.tol);
        self.set("max_iterations", args.max_iter);
        self.set("iterations_used", r.iterations_used);
        self.set("converged", r.converged);
        self.set("final_objective", r.final_objective());
        self.set("rank_of_x", r.rank_of_x);
        self.set("nnz_of_e", r.nnz_of_e);
        self.set("detected", dec.mask.count_true());
    }
}

/// Outcome of a subcommand that ran to completion.
enum Outcome {
    Done,
    NotConverged,
}

/// Parses `args` (program name first), runs the subcommand and returns the
/// process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    let started = Instant::now();
    let outcome = match &cli.command {
        Command::Simulate(a) => cmd_simulate(a, &args),
        Command::Decompose(a) => cmd_decompose(a, &args, started),
        Command::Evaluate(a) => cmd_evaluate(a, &args, started),
        Command::Analyze(a) => cmd_analyze(a, &args, started),
    };
    match outcome {
        Ok(Outcome::Done) => EXIT_OK,
        Ok(Outcome::NotConverged) => {
            eprintln!("warning: iteration cap reached before convergence; outputs were written");
            EXIT_NOT_CONVERGED
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_INPUT
        }
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn outcome_of(dec: &Decomposition) -> Outcome {
    if dec.result.converged {
        Outcome::Done
    } else {
        Outcome::NotConverged
    }
}

fn cmd_simulate(a: &SimulateArgs, argv: &[OsString]) -> Result<Outcome> {
    let spec = PatternSpec::new(a.pattern, a.divisor, a.seed);
    let instance = generate(&spec)?;
    instance.write_dir(&a.out)?;
    let mut m = RunManifest::new("simulate", argv);
    m.set("pattern", a.pattern);
    m.set("divisor", a.divisor);
    m.set("seed", a.seed);
    m.set("snr", instance.snr);
    m.set("output", a.out.display());
    m.write(a.out.join(MANIFEST_FILE))?;
    println!("snr={:.4}", instance.snr);
    Ok(Outcome::Done)
}

fn write_decomposition(dir: &Path, dec: &Decomposition, corner: &str) -> Result<()> {
    dec.result.x_hat.write_tsv_with_corner(dir.join("X.tsv"), corner)?;
    dec.result.e_hat.write_tsv_with_corner(dir.join("E.tsv"), corner)?;
    dec.result.write_trace_tsv(dir.join("trace.tsv"))
}

fn cmd_decompose(a: &DecomposeArgs, argv: &[OsString], started: Instant) -> Result<Outcome> {
    let d = DenseMatrix::read_tsv(&a.input)?;
    let dec = decompose(&d, &a.solver.options())?;
    create_dir(&a.out)?;
    write_decomposition(&a.out, &dec, "id")?;
    dec.mask.write_tsv(a.out.join("mask.tsv"))?;

    let mut m = RunManifest::new("decompose", argv);
    m.set("input", a.input.display());
    m.set("output", a.out.display());
    m.set("n_rows", d.n_rows());
    m.set("n_cols", d.n_cols());
    m.record_solver(&a.solver, &dec);
    m.set("duration_secs", started.elapsed().as_secs_f64());
    m.write(a.out.join(MANIFEST_FILE))?;

    let r = &dec.result;
    println!(
        "iterations={} converged={} rank={} nnz_e={} detected={}",
        r.iterations_used,
        r.converged,
        r.rank_of_x,
        r.nnz_of_e,
        dec.mask.count_true()
    );
    Ok(outcome_of(&dec))
}

/// Threshold for `--x/--e` evaluation: explicit, else the decomposition
/// manifest next to `--x`, else derived from `--data`.
fn evaluation_threshold(a: &EvaluateArgs, x_path: &Path) -> Result<(f64, String)> {
    if let Threshold::Fixed(t) = a.threshold {
        return Ok((t, "user".into()));
    }
    let sibling = x_path.parent().unwrap_or(Path::new("")).join(MANIFEST_FILE);
    if sibling.is_file() {
        let m = RunManifest::read(&sibling)?;
        if let Some(v) = m.get("threshold") {
            let t = v
                .parse()
                .map_err(|_| Error::parse(&sibling, 0, format!("threshold value {v:?} is not a number")))?;
            return Ok((t, format!("manifest {}", sibling.display())));
        }
    }
    match &a.data {
        Some(data) => {
            let sigma = estimate_sigma(&DenseMatrix::read_tsv(data)?)?;
            Ok((a.threshold_factor * sigma, format!("{}*sigma_hat", a.threshold_factor)))
        }
        None => Err(Error::InvalidParameter(
            "automatic threshold needs a decomposition manifest next to --x, or --data".into(),
        )),
    }
}

fn cmd_evaluate(a: &EvaluateArgs, argv: &[OsString], started: Instant) -> Result<Outcome> {
    let mut m = RunManifest::new("evaluate", argv);
    create_dir(&a.out)?;
    if a.benchmark {
        let mut grid = standard_grid(a.seed_base);
        if !a.patterns.is_empty() {
            grid.retain(|s| a.patterns.contains(&s.pattern));
        }
        let options = DecomposeOptions {
            params: ParamRequest {
                threshold_factor: a.threshold_factor,
                ..ParamRequest::default()
            },
            ..DecomposeOptions::default()
        };
        let rows = benchmark(&grid, a.seeds, &options)?;
        let table = benchmark_tsv(&rows);
        write_text(&a.out.join("benchmark.tsv"), &table)?;
        print!("{table}");
        m.set("mode", "benchmark");
        m.set("seeds", a.seeds);
        m.set("seed_base", a.seed_base);
        let mut patterns: Vec<String> = grid.iter().map(|s| s.pattern.to_string()).collect();
        patterns.dedup();
        m.set("patterns", patterns.join(","));
        m.set("threshold_rule", format!("{}*sigma_hat", a.threshold_factor));
    } else {
        let truth_path = a.truth.as_ref().expect("clap enforces --truth outside benchmark mode");
        let truth = BoolMatrix::read_tsv(truth_path)?;
        let predicted = match (&a.mask, &a.x, &a.e) {
            (Some(mask), _, _) => {
                m.set("mask", mask.display());
                BoolMatrix::read_tsv(mask)?
            }
            (None, Some(x_path), Some(e_path)) => {
                let x = DenseMatrix::read_tsv(x_path)?;
                let e = DenseMatrix::read_tsv(e_path)?;
                let (t, rule) = evaluation_threshold(a, x_path)?;
                m.set("x", x_path.display());
                m.set("e", e_path.display());
                m.set("threshold", t);
                m.set("threshold_rule", rule);
                detect_components(&x, &e, t)?
            }
            _ => return Err(Error::InvalidParameter("provide --mask, or both --x and --e".into())),
        };
        let report: DetectionReport = score(&predicted, &truth)?;
        let text = report.to_tsv();
        write_text(&a.out.join("report.tsv"), &text)?;
        print!("{text}");
        m.set("mode", "single");
        m.set("truth", truth_path.display());
    }
    m.set("output", a.out.display());
    m.set("duration_secs", started.elapsed().as_secs_f64());
    m.write(a.out.join(MANIFEST_FILE))?;
    Ok(Outcome::Done)
}

fn cmd_analyze(a: &AnalyzeArgs, argv: &[OsString], started: Instant) -> Result<Outcome> {
    let mut m = RunManifest::new("analyze", argv);
    let entries = read_manifest(&a.manifest)?;
    let studies = load_studies(&a.manifest)?;
    for s in &studies {
        if s.skipped_rows > 0 {
            eprintln!("warning: study {} skipped {} malformed or missing rows", s.study_name, s.skipped_rows);
        }
    }
    let options = AlignOptions {
        min_coverage: a.min_coverage,
        imputation: match a.imputation {
            ImputationArg::Null => Imputation::NullP,
            ImputationArg::Median => Imputation::StudyMedian,
        },
        convention: match a.z_convention {
            ConventionArg::TwoSided => ZConvention::TwoSided,
            ConventionArg::OneSided => ZConvention::OneSided,
        },
    };
    let panel = align_with(&studies, &options)?;
    if panel.clamped > 0 {
        eprintln!("warning: {} p-values below 1e-300 were clamped", panel.clamped);
    }
    create_dir(&a.out)?;
    panel.write_z_tsv(a.out.join("z.tsv"))?;
    panel.write_imputed_tsv(a.out.join("imputed.tsv"))?;

    let solve_started = Instant::now();
    let dec = decompose(&panel.z_matrix, &a.solver.options())?;
    let solve_secs = solve_started.elapsed().as_secs_f64();
    write_decomposition(&a.out, &dec, "snp")?;

    let rank = numerical_rank(&dec.result.x_hat);
    let r = a.embed_rank.min(rank);
    if r < a.embed_rank {
        eprintln!("warning: embedding rank reduced from {} to the attainable rank {r}", a.embed_rank);
    }
    let embedding = if r > 0 {
        embed_studies(&dec.result.x_hat, r)?
    } else {
        StudyEmbedding {
            study_names: panel.study_names.clone(),
            coordinates: nalgebra::DMatrix::zeros(panel.study_names.len(), 0),
            singular_values: Vec::new(),
        }
    };
    embedding.write_tsv(a.out.join("embedding.tsv"))?;
    if let Some(radius) = a.cluster_radius {
        let labels = single_linkage(&embedding, radius)?;
        let mut text = String::from("study\tcluster\n");
        for (name, label) in embedding.study_names.iter().zip(&labels) {
            text.push_str(&format!("{name}\t{label}\n"));
        }
        write_text(&a.out.join("clusters.tsv"), &text)?;
        m.set("cluster_radius", radius);
    }
    let report = extract_snps(&dec.result, &panel.snp_ids, &panel.study_names, dec.params.threshold)?;
    report.write_dir(&a.out)?;

    m.set("study_manifest", a.manifest.display());
    for ((name, path), s) in entries.iter().zip(&studies) {
        m.set(&format!("study.{name}"), path.display());
        m.set(&format!("study.{name}.skipped_rows"), s.skipped_rows);
    }
    m.set("output", a.out.display());
    m.set("min_coverage", a.min_coverage);
    m.set("imputation", format!("{:?}", options.imputation));
    m.set("z_convention", format!("{:?}", options.convention));
    m.set("n_snps", panel.snp_ids.len());
    m.set("n_studies", panel.study_names.len());
    m.set("imputed_entries", panel.imputed_mask.count_true());
    m.set("clamped_p_values", panel.clamped);
    m.record_solver(&a.solver, &dec);
    m.set("embed_rank_requested", a.embed_rank);
    m.set("embed_rank", r);
    m.set("shared_snps", report.shared.len());
    m.set("specific_entries", report.specific.len());
    m.set("decompose_secs", solve_secs);
    m.set("duration_secs", started.elapsed().as_secs_f64());
    m.write(a.out.join(MANIFEST_FILE))?;

    println!(
        "snps={} studies={} iterations={} rank={} shared={} specific={}",
        panel.snp_ids.len(),
        panel.study_names.len(),
        dec.result.iterations_used,
        dec.result.rank_of_x,
        report.shared.len(),
        report.specific.len()
    );
    Ok(outcome_of(&dec))
}
