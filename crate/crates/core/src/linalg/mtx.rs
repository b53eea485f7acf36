//! Matrix Market coordinate files.
//!
//! Header and comment lines are kept verbatim so a read/write cycle
//! reproduces them exactly. Values are written with 17 significant digits,
//! which round-trips every `f64`.

use std::fmt::Write as _;
use std::path::Path;

use super::{CsrMatrix, Scalar};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MtxField {
    Real,
    Integer,
    Complex,
    Pattern,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MtxSymmetry {
    General,
    Symmetric,
    Hermitian,
    SkewSymmetric,
}

#[derive(Clone, Debug)]
pub struct MtxFile<T: Scalar = f64> {
    /// The `%%MatrixMarket` banner followed by any `%` comment lines, as read.
    pub header: Vec<String>,
    pub field: MtxField,
    pub symmetry: MtxSymmetry,
    /// Fully expanded matrix (both triangles for symmetric storage).
    pub matrix: CsrMatrix<T>,
}

impl<T: Scalar> MtxFile<T> {
    /// Wraps a matrix with a freshly generated banner.
    pub fn new(matrix: CsrMatrix<T>, symmetry: MtxSymmetry) -> Self {
        let field = if T::IS_COMPLEX { MtxField::Complex } else { MtxField::Real };
        let banner = format!("%%MatrixMarket matrix coordinate {} {}", field_name(field), symmetry_name(symmetry));
        Self { header: vec![banner], field, symmetry, matrix }
    }

    pub fn with_comment(mut self, comment: &str) -> Self {
        for line in comment.lines() {
            self.header.push(format!("%{line}"));
        }
        self
    }
}

fn field_name(f: MtxField) -> &'static str {
    match f {
        MtxField::Real => "real",
        MtxField::Integer => "integer",
        MtxField::Complex => "complex",
        MtxField::Pattern => "pattern",
    }
}

fn symmetry_name(s: MtxSymmetry) -> &'static str {
    match s {
        MtxSymmetry::General => "general",
        MtxSymmetry::Symmetric => "symmetric",
        MtxSymmetry::Hermitian => "hermitian",
        MtxSymmetry::SkewSymmetric => "skew-symmetric",
    }
}

pub fn read_matrix_market<T: Scalar>(path: impl AsRef<Path>) -> Result<MtxFile<T>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_matrix_market(&text, &path.display().to_string())
}

/// Parses Matrix Market text; `label` names the source in error messages.
pub fn parse_matrix_market<T: Scalar>(text: &str, label: &str) -> Result<MtxFile<T>> {
    let err = |line: usize, message: String| Error::MatrixMarket { path: label.to_string(), line, message };
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, banner) = lines.next().ok_or_else(|| err(1, "empty file".into()))?;
    let tokens: Vec<String> = banner.split_whitespace().map(|t| t.to_ascii_lowercase()).collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err(err(1, format!("not a Matrix Market matrix banner: {banner:?}")));
    }
    let dense = match tokens[2].as_str() {
        "coordinate" => false,
        "array" => true,
        other => return Err(err(1, format!("unsupported format {other:?}"))),
    };
    let field = match tokens[3].as_str() {
        "real" | "double" => MtxField::Real,
        "integer" => MtxField::Integer,
        "complex" => MtxField::Complex,
        "pattern" if !dense => MtxField::Pattern,
        other => return Err(err(1, format!("unsupported field {other:?}"))),
    };
    let symmetry = match tokens[4].as_str() {
        "general" => MtxSymmetry::General,
        "symmetric" => MtxSymmetry::Symmetric,
        "hermitian" => MtxSymmetry::Hermitian,
        "skew-symmetric" => MtxSymmetry::SkewSymmetric,
        other => return Err(err(1, format!("unsupported symmetry {other:?}"))),
    };
    if field == MtxField::Complex && !T::IS_COMPLEX {
        return Err(err(1, "complex file read into a real matrix".into()));
    }

    let mut header = vec![banner.to_string()];
    let mut size_line = None;
    for (no, line) in lines.by_ref() {
        if line.starts_with('%') {
            header.push(line.to_string());
        } else if line.trim().is_empty() {
            continue;
        } else {
            size_line = Some((no, line));
            break;
        }
    }
    let (size_no, size_text) = size_line.ok_or_else(|| err(header.len() + 1, "missing size line".into()))?;
    let sizes: Vec<usize> = size_text
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| err(size_no, format!("bad size line: {e}")))?;
    let expected_sizes = if dense { 2 } else { 3 };
    if sizes.len() != expected_sizes {
        return Err(err(size_no, format!("size line needs {expected_sizes} integers")));
    }
    let (nrows, ncols) = (sizes[0], sizes[1]);
    if symmetry != MtxSymmetry::General && nrows != ncols {
        return Err(err(size_no, "symmetric storage requires a square matrix".into()));
    }
    let nvalues = if dense {
        match symmetry {
            MtxSymmetry::General => nrows * ncols,
            MtxSymmetry::SkewSymmetric => nrows * nrows.saturating_sub(1) / 2,
            _ => nrows * (nrows + 1) / 2,
        }
    } else {
        sizes[2]
    };

    let per_entry_values = match field {
        MtxField::Complex => 2,
        MtxField::Pattern => 0,
        _ => 1,
    };
    let mut triplets: Vec<(usize, usize, T)> = Vec::with_capacity(nvalues * 2);
    let mut count = 0usize;
    // Position cursor for array format (column-major, lower triangle when symmetric).
    let (mut ai, mut aj) = (0usize, 0usize);
    if dense && symmetry == MtxSymmetry::SkewSymmetric {
        ai = 1;
    }
    for (no, line) in lines {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        if count == nvalues {
            return Err(err(no, format!("more than the declared {nvalues} entries")));
        }
        let toks: Vec<&str> = trimmed.split_whitespace().collect();
        let index_toks = if dense { 0 } else { 2 };
        if toks.len() != index_toks + per_entry_values {
            return Err(err(no, format!("expected {} fields, found {}", index_toks + per_entry_values, toks.len())));
        }
        let (i, j) = if dense {
            let pos = (ai, aj);
            ai += 1;
            if ai == nrows {
                aj += 1;
                ai = match symmetry {
                    MtxSymmetry::General => 0,
                    MtxSymmetry::SkewSymmetric => aj + 1,
                    _ => aj,
                };
            }
            pos
        } else {
            let parse_idx = |t: &str, bound: usize| -> Result<usize> {
                let v: usize = t.parse().map_err(|e| err(no, format!("bad index {t:?}: {e}")))?;
                if v == 0 || v > bound {
                    return Err(err(no, format!("index {v} outside 1..={bound}")));
                }
                Ok(v - 1)
            };
            (parse_idx(toks[0], nrows)?, parse_idx(toks[1], ncols)?)
        };
        let parse_val =
            |t: &str| -> Result<f64> { t.parse::<f64>().map_err(|e| err(no, format!("bad value {t:?}: {e}"))) };
        let value = match field {
            MtxField::Pattern => T::one(),
            MtxField::Complex => T::from_parts(parse_val(toks[index_toks])?, parse_val(toks[index_toks + 1])?),
            _ => T::from_parts(parse_val(toks[index_toks])?, 0.0),
        };
        if symmetry != MtxSymmetry::General && i < j {
            return Err(err(no, "symmetric storage lists the lower triangle only".into()));
        }
        triplets.push((i, j, value));
        if i != j {
            match symmetry {
                MtxSymmetry::General => {}
                MtxSymmetry::Symmetric => triplets.push((j, i, value)),
                MtxSymmetry::Hermitian => triplets.push((j, i, value.conjugate())),
                MtxSymmetry::SkewSymmetric => triplets.push((j, i, -value)),
            }
        }
        count += 1;
    }
    if count != nvalues {
        return Err(err(size_no, format!("declared {nvalues} entries, found {count}")));
    }
    let matrix = CsrMatrix::from_triplets(nrows, ncols, triplets)?;
    Ok(MtxFile { header, field, symmetry, matrix })
}

/// Coordinate-format text. Symmetric storage writes the lower triangle.
pub fn format_matrix_market<T: Scalar>(file: &MtxFile<T>) -> String {
    let m = &file.matrix;
    let entries: Vec<(usize, usize, T)> = m
        .triplets()
        .filter(|(i, j, _)| match file.symmetry {
            MtxSymmetry::General => true,
            MtxSymmetry::SkewSymmetric => i > j,
            _ => i >= j,
        })
        .collect();
    let mut out = String::new();
    for line in &file.header {
        out.push_str(line);
        out.push('\n');
    }
    let _ = writeln!(out, "{} {} {}", m.nrows(), m.ncols(), entries.len());
    for (i, j, v) in entries {
        match file.field {
            MtxField::Pattern => {
                let _ = writeln!(out, "{} {}", i + 1, j + 1);
            }
            MtxField::Complex => {
                let _ = writeln!(out, "{} {} {:.16e} {:.16e}", i + 1, j + 1, v.real(), v.imaginary());
            }
            MtxField::Integer => {
                let _ = writeln!(out, "{} {} {}", i + 1, j + 1, v.real().round() as i64);
            }
            MtxField::Real => {
                let _ = writeln!(out, "{} {} {:.16e}", i + 1, j + 1, v.real());
            }
        }
    }
    out
}

pub fn write_matrix_market<T: Scalar>(path: impl AsRef<Path>, file: &MtxFile<T>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, format_matrix_market(file)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    const SAMPLE: &str = "%%MatrixMarket matrix coordinate real symmetric\n% generated by hand\n%  spacing kept\n3 3 4\n1 1 2.0\n2 1 -1\n2 2 2\n3 3 0.1\n";

    #[test]
    fn reads_symmetric_and_expands() {
        let f: MtxFile = parse_matrix_market(SAMPLE, "sample").unwrap();
        assert_eq!(f.header.len(), 3);
        assert_eq!(f.matrix.get(0, 1), -1.0);
        assert_eq!(f.matrix.get(1, 0), -1.0);
        assert_eq!(f.matrix.nnz(), 5);
    }

    #[test]
    fn round_trip_is_exact() {
        let f: MtxFile = parse_matrix_market(SAMPLE, "sample").unwrap();
        let text = format_matrix_market(&f);
        assert!(text.starts_with(
            "%%MatrixMarket matrix coordinate real symmetric\n% generated by hand\n%  spacing kept\n3 3 4\n"
        ));
        let g: MtxFile = parse_matrix_market(&text, "again").unwrap();
        assert_eq!(format_matrix_market(&g), text);
        assert_eq!(g.matrix.to_dense(), f.matrix.to_dense());
    }

    #[test]
    fn seventeen_digits_round_trip_every_bit() {
        let vals = [0.1, 1.0 / 3.0, std::f64::consts::PI, -1e-300, 6.02214076e23, f64::MIN_POSITIVE];
        let trip: Vec<_> = vals.iter().enumerate().map(|(i, v)| (i, i, *v)).collect();
        let m = CsrMatrix::from_triplets(vals.len(), vals.len(), trip).unwrap();
        let f = MtxFile::new(m, MtxSymmetry::Symmetric);
        let g: MtxFile = parse_matrix_market(&format_matrix_market(&f), "x").unwrap();
        for (i, v) in vals.iter().enumerate() {
            assert_eq!(g.matrix.get(i, i).to_bits(), v.to_bits());
        }
    }

    #[test]
    fn hermitian_complex() {
        let text = "%%MatrixMarket matrix coordinate complex hermitian\n2 2 2\n1 1 1 0\n2 1 0 1\n";
        let f: MtxFile<Complex64> = parse_matrix_market(text, "h").unwrap();
        assert_eq!(f.matrix.get(1, 0), Complex64::new(0.0, 1.0));
        assert_eq!(f.matrix.get(0, 1), Complex64::new(0.0, -1.0));
        assert!(parse_matrix_market::<f64>(text, "h").is_err());
    }

    #[test]
    fn array_format() {
        let text = "%%MatrixMarket matrix array real general\n2 2\n1\n3\n2\n4\n";
        let f: MtxFile = parse_matrix_market(text, "a").unwrap();
        assert_eq!(f.matrix.get(1, 0), 3.0);
        assert_eq!(f.matrix.get(0, 1), 2.0);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let text = "%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1.0\n";
        match parse_matrix_market::<f64>(text, "bad") {
            Err(Error::MatrixMarket { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        let short = "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.0\n";
        assert!(parse_matrix_market::<f64>(short, "short").is_err());
        assert!(parse_matrix_market::<f64>("hello\n", "junk").is_err());
    }
}
