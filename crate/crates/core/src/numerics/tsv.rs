use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;

use super::DenseMatrix;
use crate::error::{Error, Result};

/// Shortest round-trip representation, switching to scientific notation for
/// very large or very small magnitudes.
pub(crate) fn format_value(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 {
        "0".to_string()
    } else if (1e-4..1e15).contains(&a) {
        format!("{}", v)
    } else {
        format!("{:e}", v)
    }
}

fn is_numeric(field: &str) -> bool {
    field.trim().parse::<f64>().is_ok()
}

pub(super) fn parse_matrix(text: &str, origin: &Path) -> Result<DenseMatrix> {
    let lines: Vec<(usize, Vec<&str>)> = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r').split('\t').collect()))
        .collect();
    let Some((_, first)) = lines.first() else {
        return Err(Error::parse(origin, 1, "empty matrix file"));
    };

    let has_header = first.iter().skip(1).any(|f| !is_numeric(f))
        || (first.len() == 1 && !is_numeric(first[0]));
    let body = if has_header { &lines[1..] } else { &lines[..] };
    let has_row_labels = body.first().is_some_and(|(_, f)| !is_numeric(f[0]));

    let width = body.first().map_or(0, |(_, f)| f.len());
    let n_cols = width - usize::from(has_row_labels);
    let mut values = Vec::with_capacity(body.len() * n_cols);
    let mut row_labels = Vec::new();
    for (line_no, fields) in body {
        if fields.len() != width {
            return Err(Error::parse(
                origin,
                *line_no,
                format!("expected {} fields, found {}", width, fields.len()),
            ));
        }
        let mut it = fields.iter();
        if has_row_labels {
            row_labels.push(it.next().unwrap().trim().to_string());
        }
        for field in it {
            let v: f64 = field.trim().parse().map_err(|_| {
                Error::parse(origin, *line_no, format!("cannot parse {:?} as a number", field))
            })?;
            if !v.is_finite() {
                return Err(Error::parse(origin, *line_no, format!("non-finite value {:?}", field)));
            }
            values.push(v);
        }
    }

    let n_rows = body.len();
    let mut m = DenseMatrix::from_matrix(DMatrix::from_row_slice(n_rows, n_cols, &values))?;
    if has_header {
        let (line_no, header) = &lines[0];
        let labels: Vec<String> = if header.len() == n_cols {
            header.iter().map(|s| s.trim().to_string()).collect()
        } else if has_row_labels && header.len() == n_cols + 1 {
            header[1..].iter().map(|s| s.trim().to_string()).collect()
        } else {
            return Err(Error::parse(
                origin,
                *line_no,
                format!("header has {} fields for {} data columns", header.len(), n_cols),
            ));
        };
        m = m.with_col_labels(labels)?;
    }
    if has_row_labels {
        m = m.with_row_labels(row_labels)?;
    }
    Ok(m)
}

pub(super) fn render_matrix(m: &DenseMatrix, corner: &str) -> String {
    let mut out = String::with_capacity(m.len() * 12);
    let rows = m.row_labels();
    if let Some(cols) = m.col_labels() {
        if rows.is_some() {
            out.push_str(corner);
            out.push('\t');
        }
        out.push_str(&cols.join("\t"));
        out.push('\n');
    }
    for i in 0..m.n_rows() {
        if let Some(labels) = rows {
            out.push_str(&labels[i]);
            out.push('\t');
        }
        for j in 0..m.n_cols() {
            if j > 0 {
                out.push('\t');
            }
            let _ = write!(out, "{}", format_value(m.get(i, j)));
        }
        out.push('\n');
    }
    out
}
