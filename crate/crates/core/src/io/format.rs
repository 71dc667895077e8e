//! The `BLOCKLP v1` text format.
//!
//! ```text
//! BLOCKLP v1 N <N>
//! OFFSET <value>
//! LINKING <eq> <ineq>
//! RHS <n>            linking equality right-hand sides
//! LHS <n>            linking inequality sides
//! BLOCK <i>
//! DIMS <eq rows> <ineq rows> <cols>
//! A <nnz>            followed by <nnz> lines `<row> <col> <value>`; likewise B C D F G
//! RHS <n>            one equality right-hand side per line
//! LHS <n>            one `<lhs> <rhs>` pair per inequality row
//! BOUNDS <n>         one `<lower> <upper>` pair per column
//! OBJ <n>            one objective coefficient per column
//! END
//! ```
//!
//! Block 0 has no `B` or `D` section. Numbers use the shortest decimal that reads back to
//! the same `f64`, so equal problems give byte-identical files.

use std::fmt::Write as _;
use std::path::Path;

use super::{fmt_f64, ParseError};
use crate::blocklp::{Block, BlockLp, LinkingSides, SparseRowMatrix};

fn write_matrix(out: &mut String, tag: &str, m: &SparseRowMatrix) {
    writeln!(out, "{tag} {}", m.nnz()).unwrap();
    for (r, c, v) in m.triplets() {
        writeln!(out, "{r} {c} {}", fmt_f64(v)).unwrap();
    }
}

fn write_pairs(out: &mut String, tag: &str, a: &[f64], b: &[f64]) {
    writeln!(out, "{tag} {}", a.len()).unwrap();
    for (x, y) in a.iter().zip(b) {
        writeln!(out, "{} {}", fmt_f64(*x), fmt_f64(*y)).unwrap();
    }
}

fn write_values(out: &mut String, tag: &str, a: &[f64]) {
    writeln!(out, "{tag} {}", a.len()).unwrap();
    for x in a {
        writeln!(out, "{}", fmt_f64(*x)).unwrap();
    }
}

/// Canonical text of `lp`.
pub fn to_string(lp: &BlockLp) -> String {
    let mut out = String::new();
    writeln!(out, "BLOCKLP v1 N {}", lp.n_blocks()).unwrap();
    writeln!(out, "OFFSET {}", fmt_f64(lp.objective_offset)).unwrap();
    writeln!(out, "LINKING {} {}", lp.n_linking_eq(), lp.n_linking_ineq()).unwrap();
    write_values(&mut out, "RHS", &lp.linking.rhs_eq);
    write_pairs(&mut out, "LHS", &lp.linking.lhs_ineq, &lp.linking.rhs_ineq);
    for (i, blk) in lp.blocks.iter().enumerate() {
        writeln!(out, "BLOCK {i}").unwrap();
        writeln!(out, "DIMS {} {} {}", blk.n_eq(), blk.n_ineq(), blk.n_cols()).unwrap();
        write_matrix(&mut out, "A", &blk.a);
        if i > 0 {
            write_matrix(&mut out, "B", &blk.b);
        }
        write_matrix(&mut out, "C", &blk.c);
        if i > 0 {
            write_matrix(&mut out, "D", &blk.d);
        }
        write_matrix(&mut out, "F", &blk.f);
        write_matrix(&mut out, "G", &blk.g);
        write_values(&mut out, "RHS", &blk.rhs_eq);
        write_pairs(&mut out, "LHS", &blk.lhs_ineq, &blk.rhs_ineq);
        write_pairs(&mut out, "BOUNDS", &blk.lower, &blk.upper);
        write_values(&mut out, "OBJ", &blk.obj);
    }
    out.push_str("END\n");
    out
}

pub fn write(lp: &BlockLp, path: &Path) -> std::io::Result<()> {
    std::fs::write(path, to_string(lp))
}

pub fn read(path: &Path) -> Result<BlockLp, ParseError> {
    let text = std::fs::read_to_string(path).map_err(|e| ParseError::io(path, e))?;
    from_str(&text)
}

struct Lines<'a> {
    iter: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn next_tokens(&mut self) -> Result<Vec<&'a str>, ParseError> {
        for (i, l) in self.iter.by_ref() {
            self.line = i + 1;
            let t: Vec<&str> = l.split_whitespace().collect();
            if !t.is_empty() && !t[0].starts_with('#') {
                return Ok(t);
            }
        }
        Err(ParseError::at(self.line + 1, "unexpected end of file"))
    }

    fn err(&self, msg: impl Into<String>) -> ParseError {
        ParseError::at(self.line, msg)
    }

    fn header(&mut self, tag: &str, n_args: usize) -> Result<Vec<usize>, ParseError> {
        let t = self.next_tokens()?;
        if t[0] != tag {
            return Err(self.err(format!("unknown section {} (expected {tag})", t[0])));
        }
        if t.len() != n_args + 1 {
            return Err(self.err(format!("section {tag} takes {n_args} numbers")));
        }
        t[1..].iter().map(|s| self.count(s)).collect()
    }

    fn count(&self, s: &str) -> Result<usize, ParseError> {
        s.parse().map_err(|_| self.err(format!("invalid count {s:?}")))
    }

    fn number(&self, s: &str) -> Result<f64, ParseError> {
        let v: f64 = s.parse().map_err(|_| self.err(format!("invalid number {s:?}")))?;
        if v.is_nan() {
            return Err(self.err("NaN is not allowed"));
        }
        Ok(v)
    }

    fn finite(&self, s: &str, what: &str) -> Result<f64, ParseError> {
        let v = self.number(s)?;
        if !v.is_finite() {
            return Err(self.err(format!("non-finite {what} {s}")));
        }
        Ok(v)
    }

    fn matrix(&mut self, tag: &str, n_rows: usize, n_cols: usize) -> Result<SparseRowMatrix, ParseError> {
        let nnz = self.header(tag, 1)?[0];
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n_rows];
        let mut lines: Vec<Vec<usize>> = vec![Vec::new(); n_rows];
        for _ in 0..nnz {
            let t = self.next_tokens()?;
            if t.len() != 3 {
                return Err(self.err(format!("expected `<row> <col> <value>` in section {tag}")));
            }
            let (r, c) = (self.count(t[0])?, self.count(t[1])?);
            if r >= n_rows {
                return Err(self.err(format!("row index {r} out of range ({n_rows} rows) in section {tag}")));
            }
            if c >= n_cols {
                return Err(self.err(format!("column index {c} out of range ({n_cols} columns) in section {tag}")));
            }
            let v = self.finite(t[2], "value")?;
            if v == 0.0 {
                return Err(self.err(format!("explicit zero in section {tag}")));
            }
            rows[r].push((c, v));
            lines[r].push(self.line);
        }
        for (r, row) in rows.iter_mut().enumerate() {
            let mut order: Vec<usize> = (0..row.len()).collect();
            order.sort_by_key(|&i| (row[i].0, lines[r][i]));
            for w in order.windows(2) {
                if row[w[0]].0 == row[w[1]].0 {
                    return Err(ParseError::at(
                        lines[r][w[1]],
                        format!("duplicate triplet ({r}, {}) in section {tag}", row[w[0]].0),
                    ));
                }
            }
            *row = order.iter().map(|&i| row[i]).collect();
        }
        SparseRowMatrix::from_rows(n_cols, rows).map_err(|e| self.err(e.to_string()))
    }

    fn values(&mut self, tag: &str, n: usize, finite: bool) -> Result<Vec<f64>, ParseError> {
        let got = self.header(tag, 1)?[0];
        if got != n {
            return Err(self.err(format!("section {tag} has {got} values, expected {n}")));
        }
        (0..n)
            .map(|_| {
                let t = self.next_tokens()?;
                if t.len() != 1 {
                    return Err(self.err(format!("expected one value in section {tag}")));
                }
                if finite {
                    self.finite(t[0], "value")
                } else {
                    self.number(t[0])
                }
            })
            .collect()
    }

    fn pairs(&mut self, tag: &str, n: usize) -> Result<(Vec<f64>, Vec<f64>), ParseError> {
        let got = self.header(tag, 1)?[0];
        if got != n {
            return Err(self.err(format!("section {tag} has {got} entries, expected {n}")));
        }
        let mut a = Vec::with_capacity(n);
        let mut b = Vec::with_capacity(n);
        for _ in 0..n {
            let t = self.next_tokens()?;
            if t.len() != 2 {
                return Err(self.err(format!("expected two values in section {tag}")));
            }
            let (x, y) = (self.number(t[0])?, self.number(t[1])?);
            if x == f64::INFINITY || y == f64::NEG_INFINITY {
                return Err(self.err(format!("lower side +inf or upper side -inf in section {tag}")));
            }
            a.push(x);
            b.push(y);
        }
        Ok((a, b))
    }
}

pub fn from_str(text: &str) -> Result<BlockLp, ParseError> {
    let mut p = Lines { iter: text.lines().enumerate(), line: 0 };
    let t = p.next_tokens()?;
    if t.len() != 4 || t[0] != "BLOCKLP" || t[2] != "N" {
        return Err(p.err("expected header `BLOCKLP v1 N <N>`"));
    }
    if t[1] != "v1" {
        return Err(p.err(format!("unsupported version {}", t[1])));
    }
    let n = p.count(t[3])?;
    if n == 0 {
        return Err(p.err("at least one block required"));
    }
    let t = p.next_tokens()?;
    if t.len() != 2 || t[0] != "OFFSET" {
        return Err(p.err("expected `OFFSET <value>`"));
    }
    let offset = p.finite(t[1], "offset")?;
    let d = p.header("LINKING", 2)?;
    let (n_leq, n_lineq) = (d[0], d[1]);
    let link_rhs = p.values("RHS", n_leq, true)?;
    let (link_lhs, link_rhs_ineq) = p.pairs("LHS", n_lineq)?;

    let mut blocks: Vec<Block> = Vec::with_capacity(n + 1);
    let mut n0 = 0;
    for i in 0..=n {
        let idx = p.header("BLOCK", 1)?[0];
        if idx != i {
            return Err(p.err(format!("expected block {i}, found {idx}")));
        }
        let d = p.header("DIMS", 3)?;
        let (n_eq, n_ineq, n_cols) = (d[0], d[1], d[2]);
        if i == 0 {
            n0 = n_cols;
        }
        let a = p.matrix("A", n_eq, n0)?;
        let b = if i > 0 { p.matrix("B", n_eq, n_cols)? } else { SparseRowMatrix::zeros(n_eq, 0) };
        let c = p.matrix("C", n_ineq, n0)?;
        let dm = if i > 0 { p.matrix("D", n_ineq, n_cols)? } else { SparseRowMatrix::zeros(n_ineq, 0) };
        let f = p.matrix("F", n_leq, n_cols)?;
        let g = p.matrix("G", n_lineq, n_cols)?;
        let rhs_eq = p.values("RHS", n_eq, true)?;
        let (lhs_ineq, rhs_ineq) = p.pairs("LHS", n_ineq)?;
        let (lower, upper) = p.pairs("BOUNDS", n_cols)?;
        let obj = p.values("OBJ", n_cols, true)?;
        blocks.push(Block { a, b, c, d: dm, f, g, rhs_eq, lhs_ineq, rhs_ineq, lower, upper, obj });
    }
    let t = p.next_tokens()?;
    if t != ["END"] {
        return Err(p.err(format!("unknown section {}", t[0])));
    }
    if let Ok(t) = p.next_tokens() {
        return Err(p.err(format!("unknown section {} after END", t[0])));
    }
    let lp = BlockLp { blocks, linking: LinkingSides { rhs_eq: link_rhs, lhs_ineq: link_lhs, rhs_ineq: link_rhs_ineq }, objective_offset: offset };
    if let Some(v) = lp.validate().first() {
        return Err(ParseError::at(0, format!("invalid model: {v}")));
    }
    Ok(lp)
}
