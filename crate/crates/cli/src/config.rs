//! Merging of command-line flags over a JSON config file.
//!
//! Keys in the config file are the long flag names (`"gamma"`, `"tol"`,
//! `"E"`, ...). A flag given on the command line always wins.

use std::fmt;
use std::path::Path;

use serde_json::{Map, Value};

use ossfield::covariance::square_grid;
use ossfield::io::{
    matrix_from_csv, matrix_from_literal, points_from_csv, points_from_literal, vector_from_literal,
};
use ossfield::SquareMatrix;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Lib(ossfield::Error),
    Io(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Lib(e) => write!(f, "{e}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<ossfield::Error> for CliError {
    fn from(e: ossfield::Error) -> Self {
        CliError::Lib(e)
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub fn read_file(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn write_file(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

#[derive(Debug, Default)]
pub struct Ctx {
    cfg: Map<String, Value>,
}

impl Ctx {
    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        let Some(path) = path else {
            return Ok(Ctx::default());
        };
        let text = read_file(path)?;
        match serde_json::from_str::<Value>(&text) {
            Ok(Value::Object(cfg)) => Ok(Ctx { cfg }),
            Ok(_) => Err(CliError::Usage(format!(
                "config {} must hold a JSON object",
                path.display()
            ))),
            Err(e) => Err(CliError::Usage(format!("config {}: {e}", path.display()))),
        }
    }

    fn value(&self, key: &str) -> Option<&Value> {
        self.cfg.get(key)
    }

    pub fn f64_opt(&self, flag: Option<f64>, key: &str) -> CliResult<Option<f64>> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.value(key) {
            None => Ok(None),
            Some(v) => v
                .as_f64()
                .map(Some)
                .ok_or_else(|| CliError::Usage(format!("config key {key:?} must be a number"))),
        }
    }

    pub fn f64(&self, flag: Option<f64>, key: &str, default: f64) -> CliResult<f64> {
        Ok(self.f64_opt(flag, key)?.unwrap_or(default))
    }

    /// A tolerance: must be positive.
    pub fn tol(&self, flag: Option<f64>, key: &str, default: f64) -> CliResult<f64> {
        let t = self.f64(flag, key, default)?;
        if t > 0.0 && t.is_finite() {
            Ok(t)
        } else {
            Err(CliError::Usage(format!(
                "{key} must be a positive number, got {t}"
            )))
        }
    }

    pub fn u64(&self, flag: Option<u64>, key: &str, default: u64) -> CliResult<u64> {
        if let Some(v) = flag {
            return Ok(v);
        }
        match self.value(key) {
            None => Ok(default),
            Some(v) => v.as_u64().ok_or_else(|| {
                CliError::Usage(format!("config key {key:?} must be a non-negative integer"))
            }),
        }
    }

    pub fn usize(&self, flag: Option<usize>, key: &str, default: usize) -> CliResult<usize> {
        Ok(self.u64(flag.map(|v| v as u64), key, default as u64)? as usize)
    }

    pub fn string_opt(&self, flag: Option<String>, key: &str) -> CliResult<Option<String>> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.value(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.clone())),
            Some(other) => Ok(Some(other.to_string())),
        }
    }

    pub fn string(&self, flag: Option<String>, key: &str, default: &str) -> CliResult<String> {
        Ok(self
            .string_opt(flag, key)?
            .unwrap_or_else(|| default.to_string()))
    }

    pub fn required(&self, flag: Option<String>, key: &str) -> CliResult<String> {
        self.string_opt(flag, key)?
            .ok_or_else(|| CliError::Usage(format!("missing --{key}")))
    }

    /// A matrix given as a literal `"a,b;c,d"`, a CSV path, or (in the
    /// config file) a JSON array of rows.
    pub fn matrix(&self, flag: Option<String>, key: &str) -> CliResult<SquareMatrix> {
        if flag.is_none() {
            if let Some(Value::Array(rows)) = self.value(key) {
                let rows = json_rows(rows, key)?;
                return Ok(SquareMatrix::from_rows(&rows)?);
            }
        }
        let text = self.required(flag, key)?;
        parse_matrix(&text)
    }

    pub fn matrix_opt(&self, flag: Option<String>, key: &str) -> CliResult<Option<SquareMatrix>> {
        if flag.is_none() && self.value(key).is_none() {
            return Ok(None);
        }
        self.matrix(flag, key).map(Some)
    }

    pub fn vector(&self, flag: Option<String>, key: &str) -> CliResult<Vec<f64>> {
        if flag.is_none() {
            if let Some(Value::Array(v)) = self.value(key) {
                return v
                    .iter()
                    .map(|x| {
                        x.as_f64()
                            .ok_or_else(|| CliError::Usage(format!("{key} must hold numbers")))
                    })
                    .collect();
            }
        }
        let text = self.required(flag, key)?;
        Ok(vector_from_literal(&text)?)
    }

    /// Grid from `--grid` (literal or CSV path), else a `k x k` square grid.
    pub fn grid(
        &self,
        flag: Option<String>,
        size: Option<usize>,
        lo: Option<f64>,
        hi: Option<f64>,
        default_size: usize,
    ) -> CliResult<Vec<Vec<f64>>> {
        if flag.is_none() {
            if let Some(Value::Array(rows)) = self.value("grid") {
                return json_rows(rows, "grid");
            }
        }
        if let Some(text) = self.string_opt(flag, "grid")? {
            let path = Path::new(&text);
            return Ok(if path.is_file() {
                points_from_csv(&read_file(path)?)?
            } else {
                points_from_literal(&text)?
            });
        }
        let k = self.usize(size, "grid-size", default_size)?;
        let lo = self.f64(lo, "grid-lo", -1.0)?;
        let hi = self.f64(hi, "grid-hi", 1.0)?;
        if k == 0 || !lo.is_finite() || !hi.is_finite() || hi < lo {
            return Err(CliError::Usage(
                "grid needs grid-size >= 1 and finite grid-lo <= grid-hi".into(),
            ));
        }
        Ok(square_grid(k, lo, hi))
    }
}

fn json_rows(rows: &[Value], key: &str) -> CliResult<Vec<Vec<f64>>> {
    rows.iter()
        .map(|r| {
            r.as_array()
                .and_then(|r| r.iter().map(Value::as_f64).collect::<Option<Vec<f64>>>())
                .ok_or_else(|| CliError::Usage(format!("{key} must be an array of numeric rows")))
        })
        .collect()
}

/// Literal `"a,b;c,d"` or a path to a CSV file.
pub fn parse_matrix(text: &str) -> CliResult<SquareMatrix> {
    let path = Path::new(text);
    if path.is_file() {
        return Ok(matrix_from_csv(&read_file(path)?)?);
    }
    let looks_like_path = text.ends_with(".csv") || text.contains('/');
    match matrix_from_literal(text) {
        Ok(m) => Ok(m),
        Err(_) if looks_like_path => Err(CliError::Io(format!("{text}: file not found"))),
        Err(e) => Err(e.into()),
    }
}
