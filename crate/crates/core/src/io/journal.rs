//! Text form of a [`ReductionJournal`].
//!
//! ```text
//! JOURNAL v1
//! DIMS <blocks incl. 0> <linking eq> <linking ineq>
//! BLOCKDIMS <eq> <ineq> <cols>          one line per block, block 0 first
//! ENTRIES <n>
//! <round> <step> <kernel> <block> <seq> <op> <args...>
//! MAP <cols|eq|ineq> <L|block> <n> <indices...>
//! END
//! ```
//!
//! Rows are written `<block>:<eq|ineq>:<index>` (block `L` for linking rows), columns
//! `L:<index>` or `<block>:<index>`.

use std::fmt::Write as _;
use std::path::Path;

use super::{fmt_f64, ParseError};
use crate::blocklp::{ColRef, RowKind, RowOwner, RowRef};
use crate::kernels::Kernel;
use crate::postsolve::{JournalEntry, JournalOp, OriginalDims, ReductionJournal};
use crate::work::{BlockMapping, IndexMapping};

fn row_str(r: &RowRef) -> String {
    match r.owner {
        RowOwner::Block(b) => format!("{b}:{}:{}", r.kind.as_str(), r.index),
        RowOwner::Linking => format!("L:{}:{}", r.kind.as_str(), r.index),
    }
}

fn col_str(c: &ColRef) -> String {
    match *c {
        ColRef::Linking(j) => format!("L:{j}"),
        ColRef::Local { block, index } => format!("{block}:{index}"),
    }
}

fn list<T>(out: &mut String, items: &[(T, f64)], f: impl Fn(&T) -> String) {
    write!(out, " {}", items.len()).unwrap();
    for (x, v) in items {
        write!(out, " {} {}", f(x), fmt_f64(*v)).unwrap();
    }
}

fn op_str(op: &JournalOp) -> String {
    let mut s = String::new();
    match op {
        JournalOp::DeleteRow { row, entries, lhs, rhs } => {
            write!(s, "delete-row {} {} {}", row_str(row), fmt_f64(*lhs), fmt_f64(*rhs)).unwrap();
            list(&mut s, entries, col_str);
        }
        JournalOp::ClearSlice { block, row, entries } => {
            write!(s, "clear-slice {block} {}", row_str(row)).unwrap();
            list(&mut s, entries, col_str);
        }
        JournalOp::DeleteEntry { row, col, value } => {
            write!(s, "delete-entry {} {} {}", row_str(row), col_str(col), fmt_f64(*value)).unwrap();
        }
        JournalOp::SetBounds { col, lower, upper, prev_lower, prev_upper } => {
            write!(
                s,
                "set-bounds {} {} {} {} {}",
                col_str(col),
                fmt_f64(*lower),
                fmt_f64(*upper),
                fmt_f64(*prev_lower),
                fmt_f64(*prev_upper)
            )
            .unwrap();
        }
        JournalOp::SetSides { row, lhs, rhs } => {
            write!(s, "set-sides {} {} {}", row_str(row), fmt_f64(*lhs), fmt_f64(*rhs)).unwrap();
        }
        JournalOp::FixVariable { col, value, entries } => {
            write!(s, "fix {} {}", col_str(col), fmt_f64(*value)).unwrap();
            list(&mut s, entries, row_str);
        }
        JournalOp::DropColumn { block, col, entries } => {
            write!(s, "drop-column {block} {}", col_str(col)).unwrap();
            list(&mut s, entries, row_str);
        }
        JournalOp::Offset { block, value } => write!(s, "offset {block} {}", fmt_f64(*value)).unwrap(),
    }
    s
}

fn write_map(out: &mut String, what: &str, owner: &str, v: &[usize]) {
    write!(out, "MAP {what} {owner} {}", v.len()).unwrap();
    for x in v {
        write!(out, " {x}").unwrap();
    }
    out.push('\n');
}

pub fn to_string(j: &ReductionJournal) -> String {
    let mut out = String::from("JOURNAL v1\n");
    writeln!(out, "DIMS {} {} {}", j.dims.blocks.len(), j.dims.linking_eq, j.dims.linking_ineq).unwrap();
    for &(e, i, c) in &j.dims.blocks {
        writeln!(out, "BLOCKDIMS {e} {i} {c}").unwrap();
    }
    writeln!(out, "ENTRIES {}", j.entries.len()).unwrap();
    for e in &j.entries {
        writeln!(out, "{} {} {} {} {} {}", e.round, e.step, e.kernel, e.block, e.seq, op_str(&e.op)).unwrap();
    }
    let m = &j.mapping;
    write_map(&mut out, "cols", "L", &m.linking_cols);
    write_map(&mut out, "eq", "L", &m.linking_eq);
    write_map(&mut out, "ineq", "L", &m.linking_ineq);
    for (b, bm) in m.blocks.iter().enumerate() {
        let owner = b.to_string();
        write_map(&mut out, "eq", &owner, &bm.eq);
        write_map(&mut out, "ineq", &owner, &bm.ineq);
        write_map(&mut out, "cols", &owner, &bm.cols);
    }
    out.push_str("END\n");
    out
}

pub fn write(j: &ReductionJournal, path: &Path) -> std::io::Result<()> {
    std::fs::write(path, to_string(j))
}

pub fn read(path: &Path) -> Result<ReductionJournal, ParseError> {
    let text = std::fs::read_to_string(path).map_err(|e| ParseError::io(path, e))?;
    from_str(&text)
}

struct Tokens<'a> {
    t: Vec<&'a str>,
    pos: usize,
    line: usize,
}

impl<'a> Tokens<'a> {
    fn err(&self, msg: impl Into<String>) -> ParseError {
        ParseError::at(self.line, msg)
    }

    fn next(&mut self) -> Result<&'a str, ParseError> {
        let s = self.t.get(self.pos).copied().ok_or_else(|| self.err("missing field"))?;
        self.pos += 1;
        Ok(s)
    }

    fn count(&mut self) -> Result<usize, ParseError> {
        let s = self.next()?;
        s.parse().map_err(|_| self.err(format!("invalid count {s:?}")))
    }

    fn num(&mut self) -> Result<f64, ParseError> {
        let s = self.next()?;
        match s.parse::<f64>() {
            Ok(v) if !v.is_nan() => Ok(v),
            _ => Err(self.err(format!("invalid number {s:?}"))),
        }
    }

    fn row(&mut self) -> Result<RowRef, ParseError> {
        let s = self.next()?;
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || ParseError::at(self.line, format!("invalid row {s:?}"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let kind = match parts[1] {
            "eq" => RowKind::Eq,
            "ineq" => RowKind::Ineq,
            _ => return Err(bad()),
        };
        let index = parts[2].parse().map_err(|_| bad())?;
        let owner = match parts[0] {
            "L" => RowOwner::Linking,
            b => RowOwner::Block(b.parse().map_err(|_| bad())?),
        };
        Ok(RowRef { owner, kind, index })
    }

    fn col(&mut self) -> Result<ColRef, ParseError> {
        let s = self.next()?;
        let bad = || ParseError::at(self.line, format!("invalid column {s:?}"));
        let (owner, index) = s.split_once(':').ok_or_else(bad)?;
        let index = index.parse().map_err(|_| bad())?;
        Ok(match owner {
            "L" => ColRef::Linking(index),
            b => ColRef::Local { block: b.parse().map_err(|_| bad())?, index },
        })
    }

    fn list<T>(&mut self, f: impl Fn(&mut Self) -> Result<T, ParseError>) -> Result<Vec<(T, f64)>, ParseError> {
        let n = self.count()?;
        (0..n).map(|_| Ok((f(self)?, self.num()?))).collect()
    }

    fn done(&self) -> Result<(), ParseError> {
        if self.pos != self.t.len() {
            return Err(self.err(format!("unexpected field {:?}", self.t[self.pos])));
        }
        Ok(())
    }
}

fn parse_op(t: &mut Tokens<'_>) -> Result<JournalOp, ParseError> {
    let name = t.next()?;
    Ok(match name {
        "delete-row" => {
            let row = t.row()?;
            let (lhs, rhs) = (t.num()?, t.num()?);
            JournalOp::DeleteRow { row, lhs, rhs, entries: t.list(Tokens::col)? }
        }
        "clear-slice" => {
            let block = t.count()?;
            let row = t.row()?;
            JournalOp::ClearSlice { block, row, entries: t.list(Tokens::col)? }
        }
        "delete-entry" => JournalOp::DeleteEntry { row: t.row()?, col: t.col()?, value: t.num()? },
        "set-bounds" => JournalOp::SetBounds {
            col: t.col()?,
            lower: t.num()?,
            upper: t.num()?,
            prev_lower: t.num()?,
            prev_upper: t.num()?,
        },
        "set-sides" => JournalOp::SetSides { row: t.row()?, lhs: t.num()?, rhs: t.num()? },
        "fix" => {
            let col = t.col()?;
            let value = t.num()?;
            JournalOp::FixVariable { col, value, entries: t.list(Tokens::row)? }
        }
        "drop-column" => {
            let block = t.count()?;
            let col = t.col()?;
            JournalOp::DropColumn { block, col, entries: t.list(Tokens::row)? }
        }
        "offset" => JournalOp::Offset { block: t.count()?, value: t.num()? },
        other => return Err(t.err(format!("unknown operation {other:?}"))),
    })
}

pub fn from_str(text: &str) -> Result<ReductionJournal, ParseError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l)).filter(|(_, l)| !l.trim().is_empty());
    let mut next = |what: &str| -> Result<Tokens<'_>, ParseError> {
        let (line, l) = lines.next().ok_or_else(|| ParseError::at(0, format!("unexpected end of file, expected {what}")))?;
        Ok(Tokens { t: l.split_whitespace().collect(), pos: 0, line })
    };
    let t = next("header")?;
    if t.t != ["JOURNAL", "v1"] {
        return Err(t.err("expected header `JOURNAL v1`"));
    }
    let mut t = next("DIMS")?;
    if t.next()? != "DIMS" {
        return Err(t.err("expected DIMS"));
    }
    let (n, leq, lineq) = (t.count()?, t.count()?, t.count()?);
    t.done()?;
    let mut dims = OriginalDims { blocks: Vec::with_capacity(n), linking_eq: leq, linking_ineq: lineq };
    for _ in 0..n {
        let mut t = next("BLOCKDIMS")?;
        if t.next()? != "BLOCKDIMS" {
            return Err(t.err("expected BLOCKDIMS"));
        }
        dims.blocks.push((t.count()?, t.count()?, t.count()?));
        t.done()?;
    }
    let mut t = next("ENTRIES")?;
    if t.next()? != "ENTRIES" {
        return Err(t.err("expected ENTRIES"));
    }
    let count = t.count()?;
    let mut entries = Vec::with_capacity(count);
    for _ in 0..count {
        let mut t = next("entry")?;
        let round = t.count()? as u32;
        let step = t.count()? as u32;
        let kname = t.next()?;
        let kernel = Kernel::from_name(kname).ok_or_else(|| t.err(format!("unknown kernel {kname:?}")))?;
        let block = t.count()? as u32;
        let seq = t.count()? as u32;
        let op = parse_op(&mut t)?;
        t.done()?;
        entries.push(JournalEntry { round, step, kernel, block, seq, op });
    }
    let mut mapping = IndexMapping { blocks: vec![BlockMapping::default(); n], ..Default::default() };
    loop {
        let mut t = next("MAP or END")?;
        match t.next()? {
            "END" => break,
            "MAP" => {
                let what = t.next()?;
                let owner = t.next()?;
                let len = t.count()?;
                let v = (0..len).map(|_| t.count()).collect::<Result<Vec<_>, _>>()?;
                t.done()?;
                let slot = if owner == "L" {
                    match what {
                        "cols" => &mut mapping.linking_cols,
                        "eq" => &mut mapping.linking_eq,
                        "ineq" => &mut mapping.linking_ineq,
                        _ => return Err(t.err(format!("unknown map {what:?}"))),
                    }
                } else {
                    let b: usize = owner.parse().map_err(|_| t.err(format!("invalid block {owner:?}")))?;
                    let bm = mapping.blocks.get_mut(b).ok_or_else(|| t.err(format!("block {b} out of range")))?;
                    match what {
                        "cols" => &mut bm.cols,
                        "eq" => &mut bm.eq,
                        "ineq" => &mut bm.ineq,
                        _ => return Err(t.err(format!("unknown map {what:?}"))),
                    }
                };
                *slot = v;
            }
            other => return Err(t.err(format!("unknown section {other:?}"))),
        }
    }
    Ok(ReductionJournal { entries, dims, mapping })
}
