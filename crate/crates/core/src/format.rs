//! Plain-text matrix format shared by every tool in the workspace.
//!
//! ```text
//! p d
//! a11 a12 ... a1d
//! ...
//! ap1 ap2 ... apd
//! ```
//!
//! Values are written in scientific notation with 17 significant digits, so
//! a write/read cycle is exact. The reader accepts any whitespace layout but
//! rejects NaN and infinities.

use std::fmt::Write as _;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub fn write_matrix(m: &DMatrix<f64>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{} {}", m.nrows(), m.ncols());
    for r in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|c| format!("{:.16e}", m[(r, c)])).collect();
        let _ = writeln!(out, "{}", row.join(" "));
    }
    out
}

pub fn parse_matrix(text: &str) -> Result<DMatrix<f64>> {
    let mut tokens = text
        .lines()
        .enumerate()
        .flat_map(|(ln, line)| line.split_whitespace().map(move |t| (ln + 1, t)));

    let mut header = |what: &str| -> Result<usize> {
        let (line, tok) = tokens.next().ok_or(Error::Parse {
            line: 1,
            message: format!("missing {what} in header"),
        })?;
        tok.parse::<usize>().map_err(|_| Error::Parse {
            line,
            message: format!("bad {what} '{tok}'"),
        })
    };
    let rows = header("row count")?;
    let cols = header("column count")?;

    let mut data = Vec::with_capacity(rows * cols);
    for (line, tok) in tokens {
        let v: f64 = tok.parse().map_err(|_| Error::Parse {
            line,
            message: format!("bad number '{tok}'"),
        })?;
        if !v.is_finite() {
            return Err(Error::Parse {
                line,
                message: format!("non-finite value '{tok}'"),
            });
        }
        data.push(v);
    }
    if data.len() != rows * cols {
        return Err(Error::Parse {
            line: 1,
            message: format!(
                "header declares {rows}x{cols} = {} values, found {}",
                rows * cols,
                data.len()
            ),
        });
    }
    Ok(DMatrix::from_row_slice(rows, cols, &data))
}
