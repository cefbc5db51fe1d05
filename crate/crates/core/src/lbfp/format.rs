//! Line-oriented text format for [`HistogramGrid`].
//!
//! ```text
//! LBFP1 <d> <h>
//! axis <i> <origin> <count>      (one line per axis, i = 0..d-1)
//! total_weight <w>               (optional, defaults to 1)
//! heights
//! <row-major heights, whitespace separated>
//! ```
//!
//! Reals are written with 17 significant digits so a round trip is exact.
//! Lines starting with `#` are ignored on input.

use std::fmt::Write as _;

use super::grid::HistogramGrid;
use crate::error::{Error, Result};

pub const MAGIC: &str = "LBFP1";

fn real(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn serialize_grid(grid: &HistogramGrid) -> String {
    let mut out = String::new();
    writeln!(out, "{MAGIC} {} {}", grid.dim(), real(grid.bin_width())).unwrap();
    for (i, (&o, &n)) in grid.origin().iter().zip(grid.counts()).enumerate() {
        writeln!(out, "axis {i} {} {n}", real(o)).unwrap();
    }
    writeln!(out, "total_weight {}", real(grid.total_weight())).unwrap();
    out.push_str("heights\n");
    let row = *grid.counts().last().unwrap();
    for chunk in grid.heights().chunks(row) {
        let line: Vec<String> = chunk.iter().map(|&v| real(v)).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn parse_num<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| parse_err(line, format!("missing {what}")))?;
    tok.parse()
        .map_err(|_| parse_err(line, format!("invalid {what} `{tok}`")))
}

pub fn deserialize_grid(text: &str) -> Result<HistogramGrid> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (ln, header) = lines.next().ok_or_else(|| parse_err(1, "empty input"))?;
    let mut tok = header.split_whitespace();
    if tok.next() != Some(MAGIC) {
        return Err(parse_err(ln, format!("expected `{MAGIC}` header")));
    }
    let dim: usize = parse_num(tok.next(), ln, "dimension")?;
    let h: f64 = parse_num(tok.next(), ln, "bin width")?;
    if tok.next().is_some() {
        return Err(parse_err(ln, "trailing tokens in header"));
    }
    if dim == 0 {
        return Err(parse_err(ln, "dimension must be positive"));
    }

    let mut origin = Vec::with_capacity(dim);
    let mut counts = Vec::with_capacity(dim);
    for i in 0..dim {
        let (ln, l) = lines
            .next()
            .ok_or_else(|| parse_err(ln, format!("missing axis {i}")))?;
        let mut tok = l.split_whitespace();
        if tok.next() != Some("axis") {
            return Err(parse_err(ln, format!("expected `axis {i}`")));
        }
        let idx: usize = parse_num(tok.next(), ln, "axis index")?;
        if idx != i {
            return Err(parse_err(ln, format!("axis {idx} out of order, expected {i}")));
        }
        origin.push(parse_num::<f64>(tok.next(), ln, "origin")?);
        counts.push(parse_num::<usize>(tok.next(), ln, "bin count")?);
        if tok.next().is_some() {
            return Err(parse_err(ln, "trailing tokens in axis line"));
        }
    }

    let mut total_weight = 1.0;
    let (mut ln, mut l) = lines
        .next()
        .ok_or_else(|| parse_err(ln, "missing `heights`"))?;
    if let Some(rest) = l.strip_prefix("total_weight") {
        total_weight = parse_num(rest.split_whitespace().next(), ln, "total weight")?;
        (ln, l) = lines
            .next()
            .ok_or_else(|| parse_err(ln, "missing `heights`"))?;
    }
    if l != "heights" {
        return Err(parse_err(ln, "expected `heights`"));
    }

    let expected: usize = counts.iter().product();
    let mut heights = Vec::with_capacity(expected);
    let mut last_line = ln;
    for (ln, l) in lines {
        last_line = ln;
        for t in l.split_whitespace() {
            heights.push(parse_num::<f64>(Some(t), ln, "height")?);
        }
    }
    if heights.len() != expected {
        return Err(parse_err(
            last_line,
            format!("{} heights, expected {expected}", heights.len()),
        ));
    }
    HistogramGrid::from_parts(origin, h, counts, heights, total_weight).map_err(|e| match e {
        Error::InvalidArgument(m) => parse_err(last_line, m),
        other => other,
    })
}
