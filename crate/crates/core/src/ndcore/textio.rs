//! Plain-text matrix and vector files.
//!
//! Matrix: a line `m n`, then `m` lines of `n` space-separated reals.
//! Vector: a line `n`, then `n` lines with one real each.
//! Lines starting with `#` are comments and may precede the data. Reals are
//! written with Rust's shortest round-trip formatting, so a write/read cycle
//! is lossless.

use std::fmt::Write as _;

use super::{DenseMatrix, LinalgError, Vector};

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn parse_err(line: usize, message: impl Into<String>) -> LinalgError {
    LinalgError::Parse {
        line,
        message: message.into(),
    }
}

fn parse_real(line: usize, tok: &str) -> Result<f64, LinalgError> {
    let v: f64 = tok
        .parse()
        .map_err(|_| parse_err(line, format!("invalid real `{tok}`")))?;
    if !v.is_finite() {
        return Err(parse_err(line, format!("non-finite value `{tok}`")));
    }
    Ok(v)
}

fn parse_count(line: usize, tok: &str) -> Result<usize, LinalgError> {
    tok.parse()
        .map_err(|_| parse_err(line, format!("invalid count `{tok}`")))
}

pub fn parse_matrix(text: &str) -> Result<DenseMatrix, LinalgError> {
    let mut lines = data_lines(text);
    let (hl, header) = lines.next().ok_or_else(|| parse_err(0, "empty matrix file"))?;
    let dims: Vec<&str> = header.split_whitespace().collect();
    if dims.len() != 2 {
        return Err(parse_err(hl, "expected `rows cols`"));
    }
    let rows = parse_count(hl, dims[0])?;
    let cols = parse_count(hl, dims[1])?;
    let mut row_major = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        let (ln, line) = lines
            .next()
            .ok_or_else(|| parse_err(hl, format!("expected {rows} rows, found {r}")))?;
        let before = row_major.len();
        for tok in line.split_whitespace() {
            row_major.push(parse_real(ln, tok)?);
        }
        if row_major.len() - before != cols {
            return Err(parse_err(
                ln,
                format!("expected {cols} entries, found {}", row_major.len() - before),
            ));
        }
    }
    if let Some((ln, _)) = lines.next() {
        return Err(parse_err(ln, "trailing data after matrix"));
    }
    DenseMatrix::from_row_major(rows, cols, &row_major)
}

pub fn parse_vector(text: &str) -> Result<Vector, LinalgError> {
    let mut lines = data_lines(text);
    let (hl, header) = lines.next().ok_or_else(|| parse_err(0, "empty vector file"))?;
    let n = parse_count(hl, header)?;
    let mut data = Vec::with_capacity(n);
    for i in 0..n {
        let (ln, line) = lines
            .next()
            .ok_or_else(|| parse_err(hl, format!("expected {n} entries, found {i}")))?;
        data.push(parse_real(ln, line)?);
    }
    if let Some((ln, _)) = lines.next() {
        return Err(parse_err(ln, "trailing data after vector"));
    }
    Vector::new(data)
}

/// Formats `header` lines as `# ...` comments.
pub fn format_header(header: &[String]) -> String {
    let mut out = String::new();
    for h in header {
        let _ = writeln!(out, "# {h}");
    }
    out
}

pub fn format_matrix(a: &DenseMatrix, header: &[String]) -> String {
    let mut out = format_header(header);
    let _ = writeln!(out, "{} {}", a.rows(), a.cols());
    for i in 0..a.rows() {
        for j in 0..a.cols() {
            if j > 0 {
                out.push(' ');
            }
            let _ = write!(out, "{}", a.get(i, j));
        }
        out.push('\n');
    }
    out
}

pub fn format_vector(x: &[f64], header: &[String]) -> String {
    let mut out = format_header(header);
    let _ = writeln!(out, "{}", x.len());
    for v in x {
        let _ = writeln!(out, "{v}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_with_comments() {
        let text = "# nncs 0.1.0\n# seed=1\n2 3\n1 2 3\n4.5 -6 7e-3\n";
        let a = parse_matrix(text).unwrap();
        assert_eq!(a.rows(), 2);
        assert_eq!(a.get(1, 2), 7e-3);
        let v = parse_vector("# c\n2\n1.5\n-2\n").unwrap();
        assert_eq!(v.as_slice(), &[1.5, -2.0]);
    }

    #[test]
    fn rejects_malformed_input() {
        assert!(parse_matrix("2 2\n1 2\n3\n").is_err());
        assert!(parse_matrix("1 2\n1 x\n").is_err());
        assert!(parse_matrix("1 1\nNaN\n").is_err());
        assert!(parse_vector("3\n1\n2\n").is_err());
        assert!(parse_vector("1\n1\n2\n").is_err());
    }

    proptest! {
        #[test]
        fn matrix_text_round_trip(entries in prop::collection::vec(-1e6f64..1e6, 6), tiny in 1e-300f64..1e-200) {
            let mut entries = entries;
            entries[0] = tiny;
            let a = DenseMatrix::new(2, 3, entries).unwrap();
            let text = format_matrix(&a, &["hello".to_string()]);
            let b = parse_matrix(&text).unwrap();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn vector_text_round_trip(entries in prop::collection::vec(any::<f64>().prop_filter("finite", |v| v.is_finite()), 0..8)) {
            let text = format_vector(&entries, &[]);
            let back = parse_vector(&text).unwrap();
            prop_assert_eq!(back.as_slice(), entries.as_slice());
        }
    }
}
