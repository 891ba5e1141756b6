//! Text formats: CSV matrices, point lists and command-line literals.
//!
//! Matrices are written one row per line with 17 significant digits so that
//! a write/read cycle is lossless.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::matlin::SquareMatrix;

fn parse_number(tok: &str) -> Result<f64> {
    let t = tok.trim();
    t.parse::<f64>()
        .map_err(|_| Error::Parse(format!("not a number: {t:?}")))
        .and_then(|v| {
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::Parse(format!("non-finite value: {t:?}")))
            }
        })
}

/// Parses comma-separated rows, one per line; blank lines and `#` comments
/// are skipped.
pub fn parse_rows(text: &str) -> Result<Vec<Vec<f64>>> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| l.split(',').map(parse_number).collect())
        .collect()
}

pub fn format_number(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn format_rows(rows: &[Vec<f64>]) -> String {
    let mut out = String::new();
    for r in rows {
        let line: Vec<String> = r.iter().map(|&x| format_number(x)).collect();
        let _ = writeln!(out, "{}", line.join(","));
    }
    out
}

pub fn matrix_from_csv(text: &str) -> Result<SquareMatrix> {
    SquareMatrix::from_rows(&parse_rows(text)?)
}

pub fn matrix_to_csv(m: &SquareMatrix) -> String {
    format_rows(&m.rows())
}

/// Parses the literal syntax `"a,b;c,d"` (rows separated by `;`).
pub fn matrix_from_literal(lit: &str) -> Result<SquareMatrix> {
    let rows = lit
        .split(';')
        .map(|r| r.split(',').map(parse_number).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    SquareMatrix::from_rows(&rows)
}

/// Parses `"a,b,c"` into a vector.
pub fn vector_from_literal(lit: &str) -> Result<Vec<f64>> {
    lit.split(',').map(parse_number).collect()
}

/// Points of a common dimension, one per line.
pub fn points_from_csv(text: &str) -> Result<Vec<Vec<f64>>> {
    let rows = parse_rows(text)?;
    if let Some(first) = rows.first() {
        let m = first.len();
        if rows.iter().any(|r| r.len() != m) {
            return Err(Error::Parse("points have inconsistent dimensions".into()));
        }
    }
    Ok(rows)
}

/// Points in the literal syntax `"x1,y1;x2,y2"`.
pub fn points_from_literal(lit: &str) -> Result<Vec<Vec<f64>>> {
    points_from_csv(&lit.replace(';', "\n"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn literal_and_csv_agree() {
        let a = matrix_from_literal("1,5;0,2").unwrap();
        let b = matrix_from_csv("# H\n1, 5\n0, 2\n\n").unwrap();
        assert_eq!(a, b);
        assert_eq!(vector_from_literal("3,4").unwrap(), vec![3.0, 4.0]);
    }

    #[test]
    fn malformed_input() {
        assert!(matches!(
            matrix_from_literal("1,2;3"),
            Err(Error::Validation(_))
        ));
        assert!(matches!(
            matrix_from_literal("1,x;3,4"),
            Err(Error::Parse(_))
        ));
        assert!(matches!(vector_from_literal("1,inf"), Err(Error::Parse(_))));
        assert!(points_from_csv("1,2\n3\n").is_err());
    }

    proptest! {
        #[test]
        fn csv_round_trip_is_lossless(entries in proptest::collection::vec(-1e6f64..1e6, 9)) {
            let m = SquareMatrix::from_row_slice(3, &entries).unwrap();
            let back = matrix_from_csv(&matrix_to_csv(&m)).unwrap();
            prop_assert_eq!(m, back);
        }
    }
}
