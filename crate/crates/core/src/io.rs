//! Matrix Market reading and writing, CSV lists of points, and JSON reports.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{ComplexMatrix, C64};
use crate::pencil::ProjectivePoint;
use crate::reduce::DeflationKind;
use crate::rqz::SchurResult;

/// Largest dimension accepted when densifying a file.
pub const DEFAULT_DENSE_CAP: usize = 4096;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    Array,
    Coordinate,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Field {
    Real,
    Complex,
    Integer,
    Pattern,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Symmetry {
    General,
    Symmetric,
    Hermitian,
    Skew,
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

fn parse_header(line: &str) -> Result<(Format, Field, Symmetry)> {
    let words: Vec<String> = line.split_whitespace().map(|w| w.to_ascii_lowercase()).collect();
    if words.len() != 5 || words[0] != "%%matrixmarket" || words[1] != "matrix" {
        return Err(parse_err(1, "expected '%%MatrixMarket matrix <format> <field> <symmetry>'"));
    }
    let format = match words[2].as_str() {
        "array" => Format::Array,
        "coordinate" => Format::Coordinate,
        f => return Err(parse_err(1, format!("unknown format '{f}'"))),
    };
    let field = match words[3].as_str() {
        "real" | "double" => Field::Real,
        "complex" => Field::Complex,
        "integer" => Field::Integer,
        "pattern" => Field::Pattern,
        f => return Err(parse_err(1, format!("unknown field '{f}'"))),
    };
    let symmetry = match words[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        "hermitian" => Symmetry::Hermitian,
        "skew-symmetric" => Symmetry::Skew,
        s => return Err(parse_err(1, format!("unknown symmetry '{s}'"))),
    };
    if format == Format::Array && field == Field::Pattern {
        return Err(parse_err(1, "pattern field needs coordinate format"));
    }
    if symmetry == Symmetry::Hermitian && field != Field::Complex {
        return Err(parse_err(1, "hermitian symmetry needs a complex field"));
    }
    Ok((format, field, symmetry))
}

fn number(tok: Option<&str>, line: usize) -> Result<f64> {
    let tok = tok.ok_or_else(|| parse_err(line, "missing value"))?;
    tok.parse::<f64>().map_err(|_| parse_err(line, format!("invalid number '{tok}'")))
}

fn index(tok: Option<&str>, line: usize, dim: usize) -> Result<usize> {
    let tok = tok.ok_or_else(|| parse_err(line, "missing index"))?;
    let i: usize = tok.parse().map_err(|_| parse_err(line, format!("invalid index '{tok}'")))?;
    if i == 0 || i > dim {
        return Err(parse_err(line, format!("index {i} outside 1..={dim}")));
    }
    Ok(i - 1)
}

fn value<'a>(toks: &mut impl Iterator<Item = &'a str>, field: Field, line: usize) -> Result<C64> {
    Ok(match field {
        Field::Pattern => C64::new(1.0, 0.0),
        Field::Real | Field::Integer => C64::new(number(toks.next(), line)?, 0.0),
        Field::Complex => {
            let re = number(toks.next(), line)?;
            C64::new(re, number(toks.next(), line)?)
        }
    })
}

fn mirror(m: &mut ComplexMatrix, i: usize, j: usize, v: C64, symmetry: Symmetry) {
    m[(i, j)] = v;
    if i != j {
        m[(j, i)] = match symmetry {
            Symmetry::General => return,
            Symmetry::Symmetric => v,
            Symmetry::Hermitian => v.conj(),
            Symmetry::Skew => -v,
        };
    }
}

/// Parses Matrix Market text into a dense matrix of dimension at most `cap`.
pub fn parse_matrix_market(text: &str, cap: usize) -> Result<ComplexMatrix> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    let (format, field, symmetry) = parse_header(header)?;
    let mut body = lines.filter(|(_, l)| {
        let t = l.trim();
        !t.is_empty() && !t.starts_with('%')
    });
    let (size_line, size) = body.next().ok_or_else(|| parse_err(1, "missing size line"))?;
    let dims: Vec<usize> = size
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| parse_err(size_line, format!("invalid size '{t}'"))))
        .collect::<Result<_>>()?;
    let (rows, cols) = match (format, dims.as_slice()) {
        (Format::Array, [r, c]) | (Format::Coordinate, [r, c, _]) => (*r, *c),
        _ => return Err(parse_err(size_line, "malformed size line")),
    };
    if rows > cap || cols > cap {
        return Err(Error::TooLarge { rows, cols, cap });
    }
    if symmetry != Symmetry::General && rows != cols {
        return Err(parse_err(size_line, "symmetric storage needs a square matrix"));
    }
    let mut m = ComplexMatrix::zeros(rows, cols);
    match format {
        Format::Coordinate => {
            let nnz = dims[2];
            let mut seen = 0;
            for (ln, l) in body {
                if seen == nnz {
                    return Err(parse_err(ln, "more entries than declared"));
                }
                let mut toks = l.split_whitespace();
                let i = index(toks.next(), ln, rows)?;
                let j = index(toks.next(), ln, cols)?;
                let v = value(&mut toks, field, ln)?;
                if toks.next().is_some() {
                    return Err(parse_err(ln, "trailing tokens"));
                }
                if symmetry != Symmetry::General && i < j {
                    return Err(parse_err(ln, "symmetric storage lists the lower triangle only"));
                }
                mirror(&mut m, i, j, v, symmetry);
                seen += 1;
            }
            if seen != nnz {
                return Err(parse_err(size_line, format!("declared {nnz} entries, found {seen}")));
            }
        }
        Format::Array => {
            // column-major, lower triangle only for symmetric storage
            let mut slots = Vec::new();
            for j in 0..cols {
                let first = match symmetry {
                    Symmetry::General => 0,
                    Symmetry::Skew => j + 1,
                    _ => j,
                };
                for i in first..rows {
                    slots.push((i, j));
                }
            }
            let mut it = slots.into_iter();
            let mut last_line = size_line;
            for (ln, l) in body {
                last_line = ln;
                let mut toks = l.split_whitespace();
                let v = value(&mut toks, field, ln)?;
                if toks.next().is_some() {
                    return Err(parse_err(ln, "one entry per line expected"));
                }
                let (i, j) = it.next().ok_or_else(|| parse_err(ln, "more entries than the size allows"))?;
                mirror(&mut m, i, j, v, symmetry);
            }
            if it.next().is_some() {
                return Err(parse_err(last_line, "too few entries"));
            }
        }
    }
    Ok(m)
}

pub fn read_matrix_market(path: impl AsRef<Path>) -> Result<ComplexMatrix> {
    read_matrix_market_with_cap(path, DEFAULT_DENSE_CAP)
}

pub fn read_matrix_market_with_cap(path: impl AsRef<Path>, cap: usize) -> Result<ComplexMatrix> {
    parse_matrix_market(&fs::read_to_string(path)?, cap)
}

/// Complex general array format; values print in shortest round-trip form.
pub fn format_matrix_market(m: &ComplexMatrix) -> String {
    let mut out = String::from("%%MatrixMarket matrix array complex general\n");
    out.push_str(&format!("{} {}\n", m.rows(), m.cols()));
    for v in m.as_slice() {
        out.push_str(&format!("{:e} {:e}\n", v.re, v.im));
    }
    out
}

pub fn write_matrix_market(path: impl AsRef<Path>, m: &ComplexMatrix) -> Result<()> {
    fs::write(path, format_matrix_market(m))?;
    Ok(())
}

/// One point per line as `re,im` (or `re`), or the literal `inf`; `#` starts a comment.
pub fn parse_points_csv(text: &str) -> Result<Vec<ProjectivePoint>> {
    let mut out = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if line.eq_ignore_ascii_case("inf") || line.eq_ignore_ascii_case("infinity") {
            out.push(ProjectivePoint::INFINITY);
            continue;
        }
        let mut parts = line.split(',').map(str::trim);
        let re = number(parts.next(), k + 1)?;
        let im = match parts.next() {
            Some(t) => number(Some(t), k + 1)?,
            None => 0.0,
        };
        if parts.next().is_some() {
            return Err(parse_err(k + 1, "expected 're,im'"));
        }
        out.push(ProjectivePoint::finite(C64::new(re, im)));
    }
    Ok(out)
}

pub fn read_points_csv(path: impl AsRef<Path>) -> Result<Vec<ProjectivePoint>> {
    parse_points_csv(&fs::read_to_string(path)?)
}

pub fn format_points_csv(points: &[ProjectivePoint]) -> String {
    let mut out = String::new();
    for p in points {
        match p.to_complex() {
            Some(z) => out.push_str(&format!("{:e},{:e}\n", z.re, z.im)),
            None => out.push_str("inf\n"),
        }
    }
    out
}

/// A projective eigenvalue; infinity has `beta_re = beta_im = 0` exactly.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenvalueRecord {
    pub alpha_re: f64,
    pub alpha_im: f64,
    pub beta_re: f64,
    pub beta_im: f64,
}

impl From<&ProjectivePoint> for EigenvalueRecord {
    fn from(p: &ProjectivePoint) -> Self {
        let (a, b) = (p.alpha(), p.beta());
        EigenvalueRecord { alpha_re: a.re, alpha_im: a.im, beta_re: b.re, beta_im: b.im }
    }
}

impl EigenvalueRecord {
    pub fn to_point(&self) -> Result<ProjectivePoint> {
        ProjectivePoint::new(C64::new(self.alpha_re, self.alpha_im), C64::new(self.beta_re, self.beta_im))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeflationRecord {
    pub position: usize,
    pub kind: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatsRecord {
    pub iterations: usize,
    pub swaps: usize,
    pub it_per_n: f64,
    pub swaps_per_n2: f64,
    pub deflations: Vec<DeflationRecord>,
}

pub fn deflation_kind_name(kind: DeflationKind) -> &'static str {
    match kind {
        DeflationKind::Infinite => "infinite",
        DeflationKind::Interior => "interior",
        DeflationKind::ExteriorTop => "exterior_top",
        DeflationKind::ExteriorBottom => "exterior_bottom",
    }
}

/// The versioned JSON report of a solve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub schema_version: u32,
    pub problem: serde_json::Value,
    pub options: serde_json::Value,
    pub eigenvalues: Vec<EigenvalueRecord>,
    #[serde(rename = "backward_error_A")]
    pub backward_error_a: f64,
    #[serde(rename = "backward_error_B")]
    pub backward_error_b: f64,
    pub stats: StatsRecord,
}

impl SolveReport {
    pub fn new(
        problem: serde_json::Value,
        options: serde_json::Value,
        result: &SchurResult,
        a0: &ComplexMatrix,
        b0: &ComplexMatrix,
    ) -> Self {
        let (ea, eb) = result.backward_errors(a0, b0);
        let st = &result.stats;
        SolveReport {
            schema_version: SCHEMA_VERSION,
            problem,
            options,
            eigenvalues: result.eigenvalues.iter().map(EigenvalueRecord::from).collect(),
            backward_error_a: ea,
            backward_error_b: eb,
            stats: StatsRecord {
                iterations: st.iterations,
                swaps: st.swaps,
                it_per_n: st.iterations_per_eigenvalue,
                swaps_per_n2: st.swaps_per_n2,
                deflations: st
                    .deflations
                    .iter()
                    .map(|&(position, kind)| DeflationRecord { position, kind: deflation_kind_name(kind).into() })
                    .collect(),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::ZERO;

    #[test]
    fn coordinate_complex_diagonal() {
        let text = "%%MatrixMarket matrix coordinate complex general\n% comment\n2 2 2\n1 1 1.0 0.0\n2 2 2.0 0.0\n";
        let m = parse_matrix_market(text, DEFAULT_DENSE_CAP).unwrap();
        assert_eq!(m, ComplexMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0, 2.0]]));
    }

    #[test]
    fn symmetric_entries_are_mirrored() {
        let text = "%%MatrixMarket matrix coordinate real symmetric\n3 3 2\n1 1 4\n3 1 -2.5\n";
        let m = parse_matrix_market(text, DEFAULT_DENSE_CAP).unwrap();
        assert_eq!(m[(2, 0)], C64::new(-2.5, 0.0));
        assert_eq!(m[(0, 2)], C64::new(-2.5, 0.0));
        let text = "%%MatrixMarket matrix coordinate complex hermitian\n2 2 1\n2 1 1 3\n";
        let m = parse_matrix_market(text, DEFAULT_DENSE_CAP).unwrap();
        assert_eq!(m[(0, 1)], C64::new(1.0, -3.0));
        let text = "%%MatrixMarket matrix coordinate integer skew-symmetric\n2 2 1\n2 1 5\n";
        let m = parse_matrix_market(text, DEFAULT_DENSE_CAP).unwrap();
        assert_eq!(m[(0, 1)], C64::new(-5.0, 0.0));
    }

    #[test]
    fn pattern_entries_are_one() {
        let text = "%%MatrixMarket matrix coordinate pattern general\n2 3 2\n1 3\n2 1\n";
        let m = parse_matrix_market(text, DEFAULT_DENSE_CAP).unwrap();
        assert_eq!((m.rows(), m.cols()), (2, 3));
        assert_eq!(m[(0, 2)], C64::new(1.0, 0.0));
        assert_eq!(m[(1, 0)], C64::new(1.0, 0.0));
        assert_eq!(m[(0, 0)], ZERO);
    }

    #[test]
    fn array_round_trip_is_exact() {
        let m = ComplexMatrix::from_fn(3, 2, |i, j| C64::new(0.1 * i as f64 - 1.0 / 3.0, (j as f64).exp() * 1e-300));
        let back = parse_matrix_market(&format_matrix_market(&m), DEFAULT_DENSE_CAP).unwrap();
        assert_eq!(back, m);
        let text = "%%MatrixMarket matrix array real symmetric\n2 2\n1\n2\n3\n";
        let s = parse_matrix_market(text, DEFAULT_DENSE_CAP).unwrap();
        assert_eq!(s, ComplexMatrix::from_real_rows(&[&[1.0, 2.0], &[2.0, 3.0]]));
    }

    #[test]
    fn malformed_input_reports_line() {
        let cases = [
            ("%%MatrixMarket matrix coordinate real\n", 1),
            ("%%MatrixMarket matrix coordinate real general\n2 2 1\n1 3 1.0\n", 3),
            ("%%MatrixMarket matrix coordinate real general\n2 2 1\n1 1 x\n", 3),
            ("%%MatrixMarket matrix array real general\n2 2\n1\n2\n3\n", 5),
            ("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1\n", 2),
        ];
        for (text, line) in cases {
            match parse_matrix_market(text, DEFAULT_DENSE_CAP) {
                Err(Error::Parse { line: l, .. }) => assert_eq!(l, line, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn dense_cap_enforced() {
        let text = "%%MatrixMarket matrix coordinate real general\n5000 5000 0\n";
        assert!(matches!(parse_matrix_market(text, DEFAULT_DENSE_CAP), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn points_csv() {
        let pts = parse_points_csv("1.5,-2\ninf\n# note\n3\n").unwrap();
        assert_eq!(pts.len(), 3);
        assert!(pts[1].is_infinite());
        assert!((pts[2].to_complex().unwrap() - C64::new(3.0, 0.0)).norm() <= 1e-15);
        let back = parse_points_csv(&format_points_csv(&pts)).unwrap();
        for (p, q) in back.iter().zip(&pts) {
            assert!(p.chordal_distance(q) <= 1e-15);
        }
        assert!(matches!(parse_points_csv("1,2,3\n"), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn infinite_eigenvalue_record() {
        let r = EigenvalueRecord::from(&ProjectivePoint::INFINITY);
        assert_eq!((r.beta_re, r.beta_im), (0.0, 0.0));
        assert!(r.to_point().unwrap().is_infinite());
    }
}
