//! Linear programs in the form
//!
//! ```text
//! minimize    cᵀz
//! subject to  E z = e
//!             G z ≤ g
//!             z ≥ lb        (lb may be -inf)
//! ```

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use super::sparse::CsrMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct StandardFormProgram {
    pub c: Vec<f64>,
    pub eq: CsrMatrix,
    pub eq_rhs: Vec<f64>,
    pub ineq: CsrMatrix,
    pub ineq_rhs: Vec<f64>,
    pub lower: Vec<f64>,
}

impl StandardFormProgram {
    /// Program with `nvars` free variables, zero cost and no rows.
    pub fn empty(nvars: usize) -> Self {
        Self {
            c: vec![0.0; nvars],
            eq: CsrMatrix::zeros(0, nvars),
            eq_rhs: Vec::new(),
            ineq: CsrMatrix::zeros(0, nvars),
            ineq_rhs: Vec::new(),
            lower: vec![f64::NEG_INFINITY; nvars],
        }
    }

    pub fn nvars(&self) -> usize {
        self.c.len()
    }

    pub fn n_eq(&self) -> usize {
        self.eq.nrows()
    }

    pub fn n_ineq(&self) -> usize {
        self.ineq.nrows()
    }

    /// Indices of variables with a finite lower bound.
    pub fn bounded(&self) -> Vec<usize> {
        (0..self.nvars()).filter(|&i| self.lower[i].is_finite()).collect()
    }

    /// Dimension and finiteness checks.
    pub fn check(&self) -> Result<()> {
        let n = self.nvars();
        let fail = |msg: String| Err(Error::Structural(msg));
        if self.eq.ncols() != n || self.ineq.ncols() != n {
            return fail(format!(
                "constraint matrices have {} and {} columns, expected {n}",
                self.eq.ncols(),
                self.ineq.ncols()
            ));
        }
        if self.eq_rhs.len() != self.eq.nrows() || self.ineq_rhs.len() != self.ineq.nrows() {
            return fail("right-hand side length does not match row count".into());
        }
        if self.lower.len() != n {
            return fail(format!("lower bounds have length {}, expected {n}", self.lower.len()));
        }
        let finite = self
            .c
            .iter()
            .chain(&self.eq_rhs)
            .chain(&self.ineq_rhs)
            .chain(self.eq.values())
            .chain(self.ineq.values())
            .all(|v| v.is_finite());
        if !finite {
            return fail("non-finite coefficient".into());
        }
        if self.lower.iter().any(|v| v.is_nan() || *v == f64::INFINITY) {
            return fail("lower bounds must be finite or -inf".into());
        }
        Ok(())
    }

    /// Write the plain-text dump.
    ///
    /// ```text
    /// lp <nvars> <n_eq> <n_ineq>
    /// c <col> <value>          one line per nonzero cost
    /// lb <col> <value>         one line per finite lower bound
    /// E <row> <col> <value>    triplets of E
    /// e <row> <value>          nonzero entries of e
    /// G <row> <col> <value>
    /// g <row> <value>
    /// end
    /// ```
    ///
    /// Values use Rust's shortest round-trip formatting, so reading a dump
    /// reproduces the program exactly.
    pub fn write_dump<W: Write>(&self, mut out: W) -> Result<()> {
        let mut s = String::new();
        let _ = writeln!(s, "lp {} {} {}", self.nvars(), self.n_eq(), self.n_ineq());
        for (i, v) in self.c.iter().enumerate().filter(|(_, v)| **v != 0.0) {
            let _ = writeln!(s, "c {i} {v:?}");
        }
        for (i, v) in self.lower.iter().enumerate().filter(|(_, v)| v.is_finite()) {
            let _ = writeln!(s, "lb {i} {v:?}");
        }
        for (r, c, v) in self.eq.triplets() {
            let _ = writeln!(s, "E {r} {c} {v:?}");
        }
        for (i, v) in self.eq_rhs.iter().enumerate().filter(|(_, v)| **v != 0.0) {
            let _ = writeln!(s, "e {i} {v:?}");
        }
        for (r, c, v) in self.ineq.triplets() {
            let _ = writeln!(s, "G {r} {c} {v:?}");
        }
        for (i, v) in self.ineq_rhs.iter().enumerate().filter(|(_, v)| **v != 0.0) {
            let _ = writeln!(s, "g {i} {v:?}");
        }
        s.push_str("end\n");
        out.write_all(s.as_bytes())?;
        Ok(())
    }

    pub fn read_dump<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty dump".into()))??;
        let dims: Vec<usize> = header
            .split_whitespace()
            .skip(1)
            .map(|t| t.parse().map_err(|_| Error::Parse(format!("bad header `{header}`"))))
            .collect::<Result<_>>()?;
        if !header.starts_with("lp ") || dims.len() != 3 {
            return Err(Error::Parse(format!("bad header `{header}`")));
        }
        let (n, ne, ni) = (dims[0], dims[1], dims[2]);
        let mut p = Self::empty(n);
        p.eq_rhs = vec![0.0; ne];
        p.ineq_rhs = vec![0.0; ni];
        let mut et = Vec::new();
        let mut gt = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let line = line?;
            let tok: Vec<&str> = line.split_whitespace().collect();
            let bad = || Error::Parse(format!("line {}: `{line}`", lineno + 2));
            let idx = |k: usize, bound: usize| -> Result<usize> {
                let v: usize = tok.get(k).ok_or_else(bad)?.parse().map_err(|_| bad())?;
                if v >= bound {
                    return Err(bad());
                }
                Ok(v)
            };
            let val = |k: usize| -> Result<f64> { tok.get(k).ok_or_else(bad)?.parse().map_err(|_| bad()) };
            match tok.first().copied() {
                Some("c") => p.c[idx(1, n)?] = val(2)?,
                Some("lb") => p.lower[idx(1, n)?] = val(2)?,
                Some("E") => et.push((idx(1, ne)?, idx(2, n)?, val(3)?)),
                Some("e") => p.eq_rhs[idx(1, ne)?] = val(2)?,
                Some("G") => gt.push((idx(1, ni)?, idx(2, n)?, val(3)?)),
                Some("g") => p.ineq_rhs[idx(1, ni)?] = val(2)?,
                Some("end") => break,
                None => continue,
                _ => return Err(bad()),
            }
        }
        p.eq = CsrMatrix::from_triplets(ne, n, &et);
        p.ineq = CsrMatrix::from_triplets(ni, n, &gt);
        p.check()?;
        Ok(p)
    }
}
