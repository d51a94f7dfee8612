//! Binary N×T state matrices.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Node states stored node-major so that one node's trajectory is contiguous.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeSeries {
    n: usize,
    t: usize,
    data: Vec<u8>,
}

impl TimeSeries {
    pub fn zeros(n: usize, t: usize) -> Self {
        TimeSeries { n, t, data: vec![0; n * t] }
    }

    /// Builds from per-node rows (`rows[i][t]`).
    pub fn from_rows(rows: &[Vec<u8>]) -> Result<Self> {
        let n = rows.len();
        let t = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(n * t);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != t {
                return Err(Error::DimensionMismatch(format!("row {i} has length {} instead of {t}", r.len())));
            }
            if r.iter().any(|&v| v > 1) {
                return Err(Error::DimensionMismatch(format!("row {i} contains a non-binary entry")));
            }
            data.extend_from_slice(r);
        }
        Ok(TimeSeries { n, t, data })
    }

    pub fn n_nodes(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.t
    }

    pub fn is_empty(&self) -> bool {
        self.t == 0
    }

    #[inline]
    pub fn get(&self, i: usize, t: usize) -> u8 {
        self.data[i * self.t + t]
    }

    #[inline]
    pub fn set(&mut self, i: usize, t: usize, v: u8) {
        debug_assert!(v <= 1);
        self.data[i * self.t + t] = v;
    }

    pub fn row(&self, i: usize) -> &[u8] {
        &self.data[i * self.t..(i + 1) * self.t]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [u8] {
        &mut self.data[i * self.t..(i + 1) * self.t]
    }

    /// State vector of all nodes at time `t`.
    pub fn column(&self, t: usize) -> Vec<u8> {
        (0..self.n).map(|i| self.get(i, t)).collect()
    }

    /// Columns `start..end` as a new series.
    pub fn slice_time(&self, start: usize, end: usize) -> TimeSeries {
        let rows: Vec<Vec<u8>> = (0..self.n).map(|i| self.row(i)[start..end].to_vec()).collect();
        TimeSeries { n: self.n, t: end - start, data: rows.concat() }
    }

    pub fn mean_activity(&self) -> f64 {
        if self.data.is_empty() {
            return 0.0;
        }
        self.data.iter().map(|&v| v as f64).sum::<f64>() / self.data.len() as f64
    }

    /// Text format: header `N T`, then T lines of N space-separated bits.
    pub fn write_text<W: Write>(&self, mut w: W) -> Result<()> {
        let mut s = String::with_capacity(self.n * self.t * 2 + 16);
        writeln!(s, "{} {}", self.n, self.t).unwrap();
        for t in 0..self.t {
            for i in 0..self.n {
                if i > 0 {
                    s.push(' ');
                }
                s.push(if self.get(i, t) == 1 { '1' } else { '0' });
            }
            s.push('\n');
        }
        w.write_all(s.as_bytes())?;
        Ok(())
    }

    pub fn read_text<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines().enumerate().filter(|(_, l)| l.as_ref().map(|s| !s.trim().is_empty()).unwrap_or(true));
        let (hl, header) = lines.next().ok_or(Error::Parse { line: 1, msg: "missing header".into() })?;
        let header = header?;
        let h: Vec<&str> = header.split_whitespace().collect();
        let bad = |line: usize, msg: &str| Error::Parse { line: line + 1, msg: msg.to_string() };
        if h.len() != 2 {
            return Err(bad(hl, "header must be `N T`"));
        }
        let n: usize = h[0].parse().map_err(|_| bad(hl, "bad node count"))?;
        let t: usize = h[1].parse().map_err(|_| bad(hl, "bad step count"))?;
        let mut x = TimeSeries::zeros(n, t);
        let mut step = 0;
        for (ln, line) in lines {
            let line = line?;
            if step >= t {
                return Err(bad(ln, "more rows than declared"));
            }
            let bits: Vec<&str> = line.split_whitespace().collect();
            if bits.len() != n {
                return Err(bad(ln, "wrong number of columns"));
            }
            for (i, b) in bits.iter().enumerate() {
                match *b {
                    "0" => {}
                    "1" => x.set(i, step, 1),
                    _ => return Err(bad(ln, "entries must be 0 or 1")),
                }
            }
            step += 1;
        }
        if step != t {
            return Err(Error::Parse { line: step + 2, msg: format!("expected {t} rows, found {step}") });
        }
        Ok(x)
    }
}
