//! Plain-text matrix files.
//!
//! Format: the first line is `rows cols`; each of the next `rows` lines
//! holds exactly `cols` whitespace-separated values. Blank lines after the
//! data are ignored, anything else is an error. Floating point values are
//! written with Rust's shortest-round-trip formatting, so write → read is
//! lossless for `f64` (and exact for integers); that is the round-trip
//! guarantee the CLI relies on.
//!
//! The reader is meant to take hostile input (it is a fuzz target), so it
//! never sizes an allocation from the header — it only grows buffers as
//! actual data arrives, and checks the totals at the end.

use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

pub fn write_matrix<T: Display>(m: &Matrix<T>) -> String {
    let mut out = String::new();
    out.push_str(&format!("{} {}\n", m.rows(), m.cols()));
    for r in 1..=m.rows() {
        let mut line = String::new();
        for c in 1..=m.cols() {
            if c > 1 {
                line.push(' ');
            }
            line.push_str(&format!("{}", m.at(r, c)));
        }
        line.push('\n');
        out.push_str(&line);
    }
    out
}

pub fn read_matrix<T>(text: &str) -> Result<Matrix<T>>
where
    T: FromStr + Clone,
    T::Err: Display,
{
    let mut lines = text.lines().enumerate();

    let (header_no, header) = lines
        .next()
        .ok_or_else(|| parse_err(1, "empty input, expected a `rows cols` header"))?;
    let mut parts = header.split_whitespace();
    let rows = parse_dim(parts.next(), header_no + 1, "rows")?;
    let cols = parse_dim(parts.next(), header_no + 1, "cols")?;
    if parts.next().is_some() {
        return Err(parse_err(
            header_no + 1,
            "header must be exactly two numbers: `rows cols`",
        ));
    }
    let expected = rows
        .checked_mul(cols)
        .ok_or_else(|| parse_err(header_no + 1, "rows * cols overflows"))?;

    let mut data: Vec<T> = Vec::new();
    let mut rows_seen = 0usize;
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            // allow trailing blank lines, reject blanks between data rows
            if rows_seen < rows {
                return Err(parse_err(
                    line_no,
                    &format!("blank line inside data, expected {rows} data rows"),
                ));
            }
            continue;
        }
        if rows_seen == rows {
            return Err(parse_err(
                line_no,
                &format!("unexpected extra line after {rows} data rows"),
            ));
        }
        let mut count = 0usize;
        for tok in line.split_whitespace() {
            let v: T = tok
                .parse()
                .map_err(|e| parse_err(line_no, &format!("bad value {tok:?}: {e}")))?;
            count += 1;
            if count > cols {
                break;
            }
            data.push(v);
        }
        if count != cols {
            return Err(parse_err(
                line_no,
                &format!("expected {cols} values in this row, found {count}"),
            ));
        }
        rows_seen += 1;
    }
    if rows_seen != rows {
        return Err(parse_err(
            text.lines().count(),
            &format!("expected {rows} data rows, found {rows_seen}"),
        ));
    }
    debug_assert_eq!(data.len(), expected);
    Matrix::from_vec(rows, cols, data)
}

pub fn write_matrix_file<T: Display>(path: &Path, m: &Matrix<T>) -> Result<()> {
    std::fs::write(path, write_matrix(m))?;
    Ok(())
}

pub fn read_matrix_file<T>(path: &Path) -> Result<Matrix<T>>
where
    T: FromStr + Clone,
    T::Err: Display,
{
    let text = std::fs::read_to_string(path)?;
    read_matrix(&text)
}

fn parse_dim(tok: Option<&str>, line: usize, what: &str) -> Result<usize> {
    let tok = tok.ok_or_else(|| parse_err(line, &format!("missing {what} in header")))?;
    tok.parse()
        .map_err(|_| parse_err(line, &format!("bad {what} {tok:?}, expected a nonnegative integer")))
}

fn parse_err(line: usize, msg: &str) -> Error {
    Error::Parse {
        line,
        msg: msg.to_string(),
    }
}
