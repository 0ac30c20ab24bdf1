//! Matrix Market coordinate format.
//!
//! Supported banners are `%%MatrixMarket matrix coordinate <field> <symmetry>`
//! with field in {real, integer, pattern} and symmetry in {general,
//! symmetric}. Pattern entries get value 1.0 and symmetric files expand each
//! off-diagonal entry into both triangles.

use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;

use thiserror::Error;

use super::CooMatrix;

#[derive(Debug, Error)]
pub enum MatrixMarketError {
    #[error("malformed banner: {0:?}")]
    MalformedBanner(String),
    #[error("unsupported storage format {0:?}; only coordinate is supported")]
    UnsupportedFormat(String),
    #[error("unsupported field {0:?}")]
    UnsupportedField(String),
    #[error("unsupported symmetry {0:?}")]
    UnsupportedSymmetry(String),
    #[error("malformed size line {line}: {text:?}")]
    MalformedHeader { line: usize, text: String },
    #[error("malformed entry on line {line}: {text:?}")]
    MalformedEntry { line: usize, text: String },
    #[error("header declares {expected} entries but {found} were found")]
    EntryCountMismatch { expected: usize, found: usize },
    #[error("entry ({row}, {col}) on line {line} is outside the declared {rows} x {cols} bounds")]
    IndexOutOfBounds {
        line: usize,
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
    },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Field {
    Real,
    Integer,
    Pattern,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Symmetry {
    General,
    Symmetric,
}

fn parse_banner(line: &str) -> Result<(Field, Symmetry), MatrixMarketError> {
    let tokens: Vec<String> = line
        .split_whitespace()
        .map(str::to_ascii_lowercase)
        .collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err(MatrixMarketError::MalformedBanner(line.to_string()));
    }
    if tokens[2] != "coordinate" {
        return Err(MatrixMarketError::UnsupportedFormat(tokens[2].clone()));
    }
    let field = match tokens[3].as_str() {
        "real" | "double" => Field::Real,
        "integer" => Field::Integer,
        "pattern" => Field::Pattern,
        other => return Err(MatrixMarketError::UnsupportedField(other.to_string())),
    };
    let symmetry = match tokens[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        other => return Err(MatrixMarketError::UnsupportedSymmetry(other.to_string())),
    };
    Ok((field, symmetry))
}

/// Parses a Matrix Market coordinate stream into 0-based COO.
pub fn parse_matrix_market<R: BufRead>(reader: R) -> Result<CooMatrix, MatrixMarketError> {
    let mut lines = reader.lines().enumerate();

    let banner = match lines.next() {
        Some((_, line)) => line?,
        None => return Err(MatrixMarketError::MalformedBanner(String::new())),
    };
    let (field, symmetry) = parse_banner(banner.trim())?;

    let mut header = None;
    for (idx, line) in lines.by_ref() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        let malformed = || MatrixMarketError::MalformedHeader {
            line: idx + 1,
            text: line.clone(),
        };
        let nums: Vec<usize> = t
            .split_whitespace()
            .map(|s| s.parse().map_err(|_| malformed()))
            .collect::<Result<_, _>>()?;
        if nums.len() != 3 {
            return Err(malformed());
        }
        header = Some((nums[0], nums[1], nums[2]));
        break;
    }
    let Some((rows, cols, declared)) = header else {
        return Err(MatrixMarketError::MalformedHeader {
            line: 0,
            text: "missing size line".into(),
        });
    };

    let capacity = match symmetry {
        Symmetry::General => declared,
        Symmetry::Symmetric => declared.saturating_mul(2),
    };
    let mut coo = CooMatrix::with_capacity(rows, cols, capacity.min(1 << 24));
    let mut found = 0usize;

    for (idx, line) in lines {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        let lineno = idx + 1;
        let malformed = || MatrixMarketError::MalformedEntry {
            line: lineno,
            text: line.clone(),
        };
        let mut tok = t.split_whitespace();
        let mut index = || -> Result<usize, MatrixMarketError> {
            tok.next()
                .and_then(|s| s.parse::<usize>().ok())
                .ok_or_else(malformed)
        };
        let (row, col) = (index()?, index()?);
        let value = match field {
            Field::Pattern => 1.0,
            Field::Real => tok
                .next()
                .and_then(|s| s.parse::<f64>().ok())
                .ok_or_else(malformed)?,
            Field::Integer => tok
                .next()
                .and_then(|s| s.parse::<i64>().ok())
                .ok_or_else(malformed)? as f64,
        };

        found += 1;
        if found > declared {
            continue;
        }
        if row == 0 || col == 0 || row > rows || col > cols {
            return Err(MatrixMarketError::IndexOutOfBounds {
                line: lineno,
                row,
                col,
                rows,
                cols,
            });
        }
        let (r, c) = (row - 1, col - 1);
        coo.entries.push((r, c, value));
        if symmetry == Symmetry::Symmetric && r != c {
            coo.entries.push((c, r, value));
        }
    }

    if found != declared {
        return Err(MatrixMarketError::EntryCountMismatch {
            expected: declared,
            found,
        });
    }
    Ok(coo)
}

/// Opens and parses a `.mtx` file.
pub fn read_matrix_market(path: impl AsRef<Path>) -> Result<CooMatrix, MatrixMarketError> {
    parse_matrix_market(BufReader::new(File::open(path)?))
}

/// Writes `coo` as `coordinate real general` with 1-based indices.
pub fn write_matrix_market<W: Write>(coo: &CooMatrix, mut w: W) -> io::Result<()> {
    writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(w, "{} {} {}", coo.rows(), coo.cols(), coo.len())?;
    for &(r, c, v) in coo.entries() {
        writeln!(w, "{} {} {}", r + 1, c + 1, v)?;
    }
    Ok(())
}
