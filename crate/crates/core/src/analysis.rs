//! Reporting on a fitted SNP × study decomposition: study coordinates from
//! the low-rank part and lists of shared and study-specific SNPs.

use std::cmp::Ordering;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::numerics::{format_value, svd, DenseMatrix};
use crate::solver::{SolverResult, RANK_REL_TOL};

/// Study coordinates: column k is the k-th study-side singular vector of X̂
/// scaled by its singular value.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyEmbedding {
    pub study_names: Vec<String>,
    /// studies × r
    pub coordinates: DMatrix<f64>,
    pub singular_values: Vec<f64>,
}

fn default_names(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}{i}")).collect()
}

/// Numerical rank of X̂, using the solver's relative tolerance.
pub fn numerical_rank(x_hat: &DenseMatrix) -> usize {
    svd(x_hat).rank(RANK_REL_TOL)
}

pub fn embed_studies(x_hat: &DenseMatrix, r: usize) -> Result<StudyEmbedding> {
    let factors = svd(x_hat);
    let rank = factors.rank(RANK_REL_TOL);
    if rank == 0 {
        return Err(Error::Degenerate("cannot embed studies: the low-rank component is zero (rank 0)".into()));
    }
    if r == 0 || r > rank {
        return Err(Error::InvalidParameter(format!(
            "embedding rank {r} is not attainable; the low-rank component has rank {rank}"
        )));
    }
    let mut coordinates = DMatrix::zeros(x_hat.n_cols(), r);
    for k in 0..r {
        let mut col = factors.v.column(k) * factors.singular_values[k];
        // the largest-magnitude coordinate (first on ties) is made positive
        let lead = col
            .iter()
            .enumerate()
            .fold((0, 0.0f64), |best, (i, v)| if v.abs() > best.1 { (i, v.abs()) } else { best })
            .0;
        if col[lead] < 0.0 {
            col.neg_mut();
        }
        coordinates.set_column(k, &col);
    }
    let study_names = x_hat
        .col_labels()
        .map(<[String]>::to_vec)
        .unwrap_or_else(|| default_names("study", x_hat.n_cols()));
    Ok(StudyEmbedding {
        study_names,
        coordinates,
        singular_values: factors.singular_values[..r].to_vec(),
    })
}

impl StudyEmbedding {
    pub fn rank(&self) -> usize {
        self.coordinates.ncols()
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("study");
        for k in 1..=self.rank() {
            out.push_str(&format!("\tc{k}"));
        }
        out.push('\n');
        for (i, name) in self.study_names.iter().enumerate() {
            out.push_str(name);
            for k in 0..self.rank() {
                out.push('\t');
                out.push_str(&format_value(self.coordinates[(i, k)]));
            }
            out.push('\n');
        }
        out
    }

    pub fn write_tsv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_tsv()).map_err(|e| Error::io(path, e))
    }
}

/// Single-linkage grouping: studies closer than `radius` (Euclidean) share a
/// cluster. Cluster ids are numbered by first appearance.
pub fn single_linkage(embedding: &StudyEmbedding, radius: f64) -> Result<Vec<usize>> {
    if !(radius >= 0.0 && radius.is_finite()) {
        return Err(Error::InvalidParameter(format!("cluster radius must be finite and ≥ 0, got {radius}")));
    }
    let m = embedding.coordinates.nrows();
    let mut parent: Vec<usize> = (0..m).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for a in 0..m {
        for b in a + 1..m {
            let dist = (embedding.coordinates.row(a) - embedding.coordinates.row(b)).norm();
            if dist < radius {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                parent[ra.max(rb)] = ra.min(rb);
            }
        }
    }
    let mut ids = vec![usize::MAX; m];
    let mut labels = Vec::with_capacity(m);
    let mut next = 0;
    for i in 0..m {
        let root = find(&mut parent, i);
        if ids[root] == usize::MAX {
            ids[root] = next;
            next += 1;
        }
        labels.push(ids[root]);
    }
    Ok(labels)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SharedSnp {
    pub snp: String,
    pub max_abs: f64,
    /// (study, X̂ value) for every study with |X̂| above the threshold,
    /// by descending magnitude.
    pub studies: Vec<(String, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpecificSnp {
    pub snp: String,
    pub study: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SnpReport {
    pub shared: Vec<SharedSnp>,
    pub specific: Vec<SpecificSnp>,
    pub threshold: f64,
}

fn by_magnitude(a: f64, b: f64) -> Ordering {
    b.abs().total_cmp(&a.abs())
}

/// Shared SNPs come from rows of X̂ and specific SNPs from entries of Ê,
/// each exceeding `threshold` in absolute value.
pub fn extract_snps(
    result: &SolverResult,
    snp_labels: &[String],
    study_labels: &[String],
    threshold: f64,
) -> Result<SnpReport> {
    let (x, e) = (&result.x_hat, &result.e_hat);
    x.ensure_same_shape(e)?;
    if snp_labels.len() != x.n_rows() || study_labels.len() != x.n_cols() {
        return Err(Error::ShapeMismatch {
            expected: x.shape(),
            found: (snp_labels.len(), study_labels.len()),
        });
    }
    if !(threshold >= 0.0 && threshold.is_finite()) {
        return Err(Error::InvalidParameter(format!("threshold must be finite and ≥ 0, got {threshold}")));
    }

    let mut shared = Vec::new();
    let mut specific = Vec::new();
    for (i, snp) in snp_labels.iter().enumerate() {
        let mut studies: Vec<(String, f64)> = (0..x.n_cols())
            .filter(|&j| x.get(i, j).abs() > threshold)
            .map(|j| (study_labels[j].clone(), x.get(i, j)))
            .collect();
        if !studies.is_empty() {
            studies.sort_by(|a, b| by_magnitude(a.1, b.1).then_with(|| a.0.cmp(&b.0)));
            shared.push(SharedSnp {
                snp: snp.clone(),
                max_abs: studies[0].1.abs(),
                studies,
            });
        }
        for (j, study) in study_labels.iter().enumerate() {
            let value = e.get(i, j);
            if value.abs() > threshold {
                specific.push(SpecificSnp {
                    snp: snp.clone(),
                    study: study.clone(),
                    value,
                });
            }
        }
    }
    shared.sort_by(|a, b| by_magnitude(a.max_abs, b.max_abs).then_with(|| a.snp.cmp(&b.snp)));
    specific.sort_by(|a, b| {
        by_magnitude(a.value, b.value)
            .then_with(|| a.snp.cmp(&b.snp))
            .then_with(|| a.study.cmp(&b.study))
    });
    Ok(SnpReport {
        shared,
        specific,
        threshold,
    })
}

impl SnpReport {
    pub fn shared_tsv(&self) -> String {
        let mut out = String::from("snp\tmax_abs\tn_studies\tstudies\tvalues\n");
        for s in &self.shared {
            let names: Vec<&str> = s.studies.iter().map(|(n, _)| n.as_str()).collect();
            let values: Vec<String> = s.studies.iter().map(|(_, v)| format_value(*v)).collect();
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\n",
                s.snp,
                format_value(s.max_abs),
                s.studies.len(),
                names.join(","),
                values.join(",")
            ));
        }
        out
    }

    pub fn specific_tsv(&self) -> String {
        let mut out = String::from("snp\tstudy\tvalue\n");
        for s in &self.specific {
            out.push_str(&format!("{}\t{}\t{}\n", s.snp, s.study, format_value(s.value)));
        }
        out
    }

    /// Writes `shared.tsv` and `specific.tsv` into `dir`.
    pub fn write_dir(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        for (name, text) in [("shared.tsv", self.shared_tsv()), ("specific.tsv", self.specific_tsv())] {
            let path = dir.join(name);
            std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }
}
