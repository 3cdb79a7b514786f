//! Per-study summary statistics: parsing, alignment across studies,
//! imputation of missing entries and p-value to z-score conversion.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numerics::{inverse_normal_cdf, median_in_place, BoolMatrix, DenseMatrix};

/// p-values below this are clamped before conversion (|z| ≈ 37).
pub const MIN_P: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq)]
pub struct StudySummary {
    pub study_name: String,
    pub records: HashMap<String, f64>,
    /// Rows skipped for missing fields or `NA` p-values.
    pub skipped_rows: usize,
}

fn check_p(p: f64) -> bool {
    p > 0.0 && p <= 1.0
}

fn is_missing(field: &str) -> bool {
    matches!(field.to_ascii_lowercase().as_str(), "" | "na" | "nan" | ".")
}

/// Reads a tab-separated study file whose header names `snp` and `p`
/// columns (case-insensitive); other columns are ignored.
pub fn parse_study(path: impl AsRef<Path>, study_name: &str) -> Result<StudySummary> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_study_str(&text, path, study_name)
}

pub fn parse_study_str(text: &str, origin: &Path, study_name: &str) -> Result<StudySummary> {
    let mut lines = text.lines().enumerate();
    let Some((_, header)) = lines.next() else {
        return Err(Error::parse(origin, 1, "empty study file"));
    };
    let columns: Vec<String> = header.trim_end_matches('\r').split('\t').map(|c| c.trim().to_ascii_lowercase()).collect();
    let find = |name: &str| {
        columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::parse(origin, 1, format!("header lacks a '{name}' column")))
    };
    let (snp_col, p_col) = (find("snp")?, find("p")?);

    let mut records = HashMap::new();
    let mut skipped_rows = 0;
    for (idx, line) in lines {
        let line_no = idx + 1;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let (Some(snp), Some(p_field)) = (fields.get(snp_col), fields.get(p_col)) else {
            skipped_rows += 1;
            continue;
        };
        let (snp, p_field) = (snp.trim(), p_field.trim());
        if snp.is_empty() || is_missing(p_field) {
            skipped_rows += 1;
            continue;
        }
        let p: f64 = p_field
            .parse()
            .map_err(|_| Error::parse(origin, line_no, format!("cannot parse p-value {p_field:?}")))?;
        if !check_p(p) {
            return Err(Error::parse(origin, line_no, format!("p-value {p_field} outside (0, 1]")));
        }
        if records.insert(snp.to_string(), p).is_some() {
            return Err(Error::parse(origin, line_no, format!("duplicate SNP id {snp}")));
        }
    }
    Ok(StudySummary {
        study_name: study_name.to_string(),
        records,
        skipped_rows,
    })
}

/// Reads `name<TAB>path` lines; relative paths resolve against the
/// manifest's directory. Blank lines and `#` comments are ignored.
pub fn read_manifest(path: impl AsRef<Path>) -> Result<Vec<(String, PathBuf)>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new(""));
    let mut entries = Vec::new();
    let mut seen = HashSet::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((name, file)) = line.split_once('\t') else {
            return Err(Error::parse(path, idx + 1, "expected study name and path separated by a tab"));
        };
        let (name, file) = (name.trim(), file.trim());
        if !seen.insert(name.to_string()) {
            return Err(Error::parse(path, idx + 1, format!("duplicate study name {name}")));
        }
        entries.push((name.to_string(), base.join(file)));
    }
    if entries.is_empty() {
        return Err(Error::parse(path, 1, "manifest lists no studies"));
    }
    Ok(entries)
}

/// Parses every study in a manifest, in manifest order.
pub fn load_studies(manifest: impl AsRef<Path>) -> Result<Vec<StudySummary>> {
    read_manifest(manifest)?
        .par_iter()
        .map(|(name, file)| parse_study(file, name))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Imputation {
    /// The p-value that converts to z = 0 under the active convention.
    #[default]
    NullP,
    /// The median of the study's own reported p-values.
    StudyMedian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ZConvention {
    /// z = Φ⁻¹(1 − p/2) ≥ 0.
    #[default]
    TwoSided,
    /// z = Φ⁻¹(1 − p).
    OneSided,
}

/// Two-sided z magnitude `Φ⁻¹(1 − p/2)`.
impl ZConvention {
    /// p-value whose z-score is exactly 0.
    pub fn null_p(self) -> f64 {
        match self {
            ZConvention::TwoSided => 1.0,
            ZConvention::OneSided => 0.5,
        }
    }
}

pub fn p_to_z(p: f64) -> Result<f64> {
    p_to_z_with(p, ZConvention::TwoSided)
}

pub fn p_to_z_with(p: f64, convention: ZConvention) -> Result<f64> {
    if !check_p(p) {
        return Err(Error::Domain(format!("p-value must lie in (0, 1], got {p}")));
    }
    let p = p.max(MIN_P);
    // Upper-tail quantiles are taken as −Φ⁻¹(tail) so that tiny p keep
    // full precision; adding 0.0 turns −0 into +0.
    let z = match convention {
        ZConvention::TwoSided => -inverse_normal_cdf(p / 2.0)?,
        ZConvention::OneSided => -inverse_normal_cdf(p.min(1.0 - f64::EPSILON / 2.0))?,
    };
    Ok(z + 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AlignOptions {
    pub min_coverage: usize,
    pub imputation: Imputation,
    pub convention: ZConvention,
}

impl AlignOptions {
    pub fn new(min_coverage: usize) -> Self {
        AlignOptions {
            min_coverage,
            imputation: Imputation::default(),
            convention: ZConvention::default(),
        }
    }
}

/// SNP × study panel of p-values and z-scores.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedPanel {
    pub snp_ids: Vec<String>,
    pub study_names: Vec<String>,
    pub p_values: DenseMatrix,
    pub z_matrix: DenseMatrix,
    pub imputed_mask: BoolMatrix,
    pub options: AlignOptions,
    /// Entries whose p-value was below [`MIN_P`].
    pub clamped: usize,
}

pub fn align(studies: &[StudySummary], min_coverage: usize) -> Result<AlignedPanel> {
    align_with(studies, &AlignOptions::new(min_coverage))
}

/// Keeps SNPs reported by at least `min_coverage` studies, in lexicographic
/// order, and fills the gaps according to the imputation rule.
pub fn align_with(studies: &[StudySummary], options: &AlignOptions) -> Result<AlignedPanel> {
    let k = options.min_coverage;
    if k == 0 || k > studies.len() {
        return Err(Error::InvalidParameter(format!(
            "minimum coverage must lie in 1..={}, got {k}",
            studies.len()
        )));
    }
    let mut names = HashSet::new();
    for s in studies {
        if !names.insert(s.study_name.as_str()) {
            return Err(Error::InvalidParameter(format!("duplicate study name {}", s.study_name)));
        }
    }

    let mut coverage: BTreeMap<&str, usize> = BTreeMap::new();
    for s in studies {
        for snp in s.records.keys() {
            *coverage.entry(snp.as_str()).or_default() += 1;
        }
    }
    let snp_ids: Vec<String> = coverage
        .iter()
        .filter(|(_, &c)| c >= k)
        .map(|(snp, _)| snp.to_string())
        .collect();
    if snp_ids.is_empty() {
        let best = coverage.values().copied().max().unwrap_or(0);
        return Err(Error::Degenerate(format!(
            "no SNP is reported by at least {k} studies; the maximum coverage is {best}"
        )));
    }

    let fill: Vec<f64> = studies
        .iter()
        .map(|s| match options.imputation {
            Imputation::NullP => Ok(options.convention.null_p()),
            Imputation::StudyMedian => {
                let mut ps: Vec<f64> = s.records.values().copied().collect();
                median_in_place(&mut ps)
            }
        })
        .collect::<Result<_>>()?;

    let (n, p) = (snp_ids.len(), studies.len());
    let mut p_values = DMatrix::zeros(n, p);
    let mut z = DMatrix::zeros(n, p);
    let mut imputed = BoolMatrix::new(n, p);
    let mut clamped = 0;
    for (j, study) in studies.iter().enumerate() {
        let fill_z = p_to_z_with(fill[j], options.convention)?;
        for (i, snp) in snp_ids.iter().enumerate() {
            match study.records.get(snp) {
                Some(&pv) => {
                    clamped += usize::from(pv < MIN_P);
                    p_values[(i, j)] = pv;
                    z[(i, j)] = p_to_z_with(pv, options.convention)?;
                }
                None => {
                    imputed.set(i, j, true);
                    p_values[(i, j)] = fill[j];
                    z[(i, j)] = fill_z;
                }
            }
        }
    }

    let study_names: Vec<String> = studies.iter().map(|s| s.study_name.clone()).collect();
    let label = |m: DMatrix<f64>| -> Result<DenseMatrix> {
        DenseMatrix::from_matrix(m)?
            .with_row_labels(snp_ids.clone())?
            .with_col_labels(study_names.clone())
    };
    Ok(AlignedPanel {
        p_values: label(p_values)?,
        z_matrix: label(z)?,
        snp_ids: snp_ids.clone(),
        study_names: study_names.clone(),
        imputed_mask: imputed,
        options: *options,
        clamped,
    })
}

impl AlignedPanel {
    /// The observed (non-imputed) records of each study.
    pub fn to_studies(&self) -> Vec<StudySummary> {
        self.study_names
            .iter()
            .enumerate()
            .map(|(j, name)| StudySummary {
                study_name: name.clone(),
                records: self
                    .snp_ids
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| !self.imputed_mask.get(*i, j))
                    .map(|(i, snp)| (snp.clone(), self.p_values.get(i, j)))
                    .collect(),
                skipped_rows: 0,
            })
            .collect()
    }

    pub fn write_z_tsv(&self, path: impl AsRef<Path>) -> Result<()> {
        self.z_matrix.write_tsv_with_corner(path, "snp")
    }

    pub fn write_imputed_tsv(&self, path: impl AsRef<Path>) -> Result<()> {
        self.imputed_mask
            .to_dense()
            .with_row_labels(self.snp_ids.clone())?
            .with_col_labels(self.study_names.clone())?
            .write_tsv_with_corner(path, "snp")
    }
}
