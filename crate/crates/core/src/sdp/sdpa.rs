//! SDPA sparse text format.
//!
//! SDPA solves `max ⟨F0, Y⟩ s.t. ⟨F_i, Y⟩ = c_i, Y ⪰ 0`, so a problem in
//! this crate's primal form is written with `F0 = −C`, `F_i = A_i`,
//! `c = b`. An SDPA solver therefore reports the negated optimum.

use super::problem::{Constraint, SdpProblem};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::RealScalar;
use std::fmt::Write;
use std::str::FromStr;

fn fmt_value<T: RealScalar>(v: T) -> String {
    let a = v.abs();
    if a != T::zero() && (a < T::lit(1e-4) || a >= T::lit(1e15)) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

fn write_entries<T: RealScalar>(out: &mut String, matno: usize, block: usize, m: &Matrix<T>, negate: bool) {
    for i in 0..m.rows() {
        for j in i..m.cols() {
            let v = m[(i, j)];
            if v != T::zero() {
                let v = if negate { -v } else { v };
                let _ = writeln!(out, "{matno} {} {} {} {}", block + 1, i + 1, j + 1, fmt_value(v));
            }
        }
    }
}

/// Serializes `p` with values in shortest round-trip form.
pub fn export_sdpa<T: RealScalar>(p: &SdpProblem<T>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{}", p.constraints.len());
    let _ = writeln!(out, "{}", p.blocks.len());
    let sizes: Vec<String> = p.blocks.iter().map(usize::to_string).collect();
    let _ = writeln!(out, "{}", sizes.join(" "));
    let rhs: Vec<String> = p.constraints.iter().map(|c| fmt_value(c.rhs)).collect();
    let _ = writeln!(out, "{}", rhs.join(" "));
    for (k, c) in p.objective.iter().enumerate() {
        write_entries(&mut out, 0, k, c, true);
    }
    for (i, c) in p.constraints.iter().enumerate() {
        let mut terms: Vec<&(usize, Matrix<T>)> = c.terms.iter().collect();
        terms.sort_by_key(|(k, _)| *k);
        for (k, m) in terms {
            write_entries(&mut out, i + 1, *k, m, false);
        }
    }
    out
}

fn data_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Data(msg.into()))
}

/// Parses SDPA sparse text. Comment lines start with `*` or `"`.
pub fn import_sdpa<T: RealScalar + FromStr>(text: &str) -> Result<SdpProblem<T>> {
    let cleaned: Vec<String> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('*') && !l.starts_with('"'))
        .map(|l| l.replace([',', '{', '}', '(', ')'], " "))
        .collect();
    let mut tokens = cleaned.iter().flat_map(|l| l.split_whitespace());
    let mut next = |what: &str| tokens.next().map(str::to_owned).ok_or_else(|| Error::Data(format!("SDPA input ends before {what}")));
    let parse_usize = |s: String, what: &str| s.parse::<usize>().map_err(|_| Error::Data(format!("bad {what}: {s}")));
    let parse_t = |s: &str| T::from_str(s).map_err(|_| Error::Data(format!("bad number: {s}")));

    let m = parse_usize(next("constraint count")?, "constraint count")?;
    let nblocks = parse_usize(next("block count")?, "block count")?;
    let mut blocks = Vec::with_capacity(nblocks);
    for _ in 0..nblocks {
        let s = next("block sizes")?;
        let v = s.parse::<i64>().map_err(|_| Error::Data(format!("bad block size: {s}")))?;
        if v == 0 {
            return data_err("block of size zero");
        }
        blocks.push(v.unsigned_abs() as usize);
    }
    let mut rhs = Vec::with_capacity(m);
    for _ in 0..m {
        rhs.push(parse_t(&next("objective vector")?)?);
    }
    let mut mats: Vec<Vec<Option<Matrix<T>>>> = vec![vec![None; nblocks]; m + 1];
    loop {
        let Ok(first) = next("entry") else { break };
        let matno = parse_usize(first, "matrix number")?;
        let blk = parse_usize(next("block number")?, "block number")?;
        let i = parse_usize(next("row")?, "row")?;
        let j = parse_usize(next("column")?, "column")?;
        let v = parse_t(&next("value")?)?;
        if matno > m || blk == 0 || blk > nblocks {
            return data_err(format!("entry refers to matrix {matno} block {blk}"));
        }
        let n = blocks[blk - 1];
        if i == 0 || j == 0 || i > n || j > n {
            return data_err(format!("entry ({i},{j}) outside block {blk} of size {n}"));
        }
        let mat = mats[matno][blk - 1].get_or_insert_with(|| Matrix::zeros(n, n));
        mat[(i - 1, j - 1)] = v;
        mat[(j - 1, i - 1)] = v;
    }
    let mut p = SdpProblem::new("sdpa", blocks.clone());
    for (k, slot) in mats[0].iter_mut().enumerate() {
        if let Some(f0) = slot.take() {
            p.objective[k] = f0.map(|v: T| -v);
        }
    }
    for (i, row) in mats.into_iter().enumerate().skip(1) {
        let terms = row.into_iter().enumerate().filter_map(|(k, m)| m.map(|m| (k, m))).collect();
        p.constraints.push(Constraint { terms, rhs: rhs[i - 1], label: format!("row{i}") });
    }
    p.validate()?;
    Ok(p)
}
