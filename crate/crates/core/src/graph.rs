//! Undirected loopy multigraphs with constant-time edge queries.
//!
//! Self-loops follow the doubled convention: one loop on node `i` stores
//! `a_ii = 2`, adds 2 to the degree of `i` and 1 to the edge total.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GraphMode {
    Simple,
    Multi,
}

impl std::fmt::Display for GraphMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GraphMode::Simple => f.write_str("simple"),
            GraphMode::Multi => f.write_str("multi"),
        }
    }
}

#[inline]
fn ordered(i: usize, j: usize) -> (usize, usize) {
    if i <= j {
        (i, j)
    } else {
        (j, i)
    }
}

#[derive(Clone, Debug)]
pub struct Graph {
    n: usize,
    mode: GraphMode,
    /// `rows[i][j] = a_ij`, with `a_ii` stored doubled.
    rows: Vec<HashMap<usize, u32>>,
    degrees: Vec<u64>,
    edge_total: u64,
    /// One entry per edge instance, used for uniform edge selection.
    edge_list: Vec<(usize, usize)>,
    positions: HashMap<(usize, usize), Vec<usize>>,
}

impl PartialEq for Graph {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.mode == other.mode && self.rows == other.rows
    }
}

impl Eq for Graph {}

impl Graph {
    pub fn empty(n: usize, mode: GraphMode) -> Self {
        Graph {
            n,
            mode,
            rows: vec![HashMap::new(); n],
            degrees: vec![0; n],
            edge_total: 0,
            edge_list: Vec::new(),
            positions: HashMap::new(),
        }
    }

    /// Builds a graph from `(i, j)` pairs, one entry per edge (repeat a pair
    /// for multi-edges, `(i, i)` for a loop).
    pub fn from_edges(n: usize, mode: GraphMode, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = Graph::empty(n, mode);
        for &(i, j) in edges {
            g.add_edge(i, j)?;
        }
        Ok(g)
    }

    pub fn n_nodes(&self) -> usize {
        self.n
    }

    pub fn mode(&self) -> GraphMode {
        self.mode
    }

    pub fn edge_count(&self) -> u64 {
        self.edge_total
    }

    pub fn degrees(&self) -> &[u64] {
        &self.degrees
    }

    pub fn degree(&self, i: usize) -> u64 {
        self.degrees[i]
    }

    /// Adjacency entry `a_ij` (doubled on the diagonal).
    pub fn multiplicity(&self, i: usize, j: usize) -> u32 {
        self.rows[i].get(&j).copied().unwrap_or(0)
    }

    /// Number of edge instances between `i` and `j` (loops counted once each).
    pub fn edge_instances(&self, i: usize, j: usize) -> u32 {
        let a = self.multiplicity(i, j);
        if i == j {
            a / 2
        } else {
            a
        }
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = (usize, u32)> + '_ {
        self.rows[i].iter().map(|(&j, &a)| (j, a))
    }

    /// Distinct connected pairs `(i, j)` with `i <= j` and their edge-instance count.
    pub fn pairs(&self) -> Vec<(usize, usize, u32)> {
        let mut out: Vec<(usize, usize, u32)> = self
            .positions
            .iter()
            .map(|(&(i, j), p)| (i, j, p.len() as u32))
            .collect();
        out.sort_unstable();
        out
    }

    /// The `k`-th edge instance; indices are stable only until the next mutation.
    pub fn edge_at(&self, k: usize) -> (usize, usize) {
        self.edge_list[k]
    }

    fn check_node(&self, i: usize) -> Result<()> {
        if i >= self.n {
            Err(Error::NodeOutOfRange { node: i, n: self.n })
        } else {
            Ok(())
        }
    }

    /// Would adding one edge between `i` and `j` keep the graph in its mode?
    pub fn can_add(&self, i: usize, j: usize) -> bool {
        match self.mode {
            GraphMode::Multi => true,
            GraphMode::Simple => i != j && self.multiplicity(i, j) == 0,
        }
    }

    pub fn add_edge(&mut self, i: usize, j: usize) -> Result<()> {
        self.toggle_edge(i, j, 1)
    }

    pub fn remove_edge(&mut self, i: usize, j: usize) -> Result<()> {
        self.toggle_edge(i, j, -1)
    }

    /// Adds (`delta = +1`) or removes (`delta = -1`) one edge instance.
    pub fn toggle_edge(&mut self, i: usize, j: usize, delta: i32) -> Result<()> {
        self.check_node(i)?;
        self.check_node(j)?;
        assert!(delta == 1 || delta == -1, "delta must be ±1");
        let key = ordered(i, j);
        let step: u32 = if i == j { 2 } else { 1 };
        let current = self.multiplicity(i, j);
        if delta > 0 {
            if self.mode == GraphMode::Simple && (i == j || current >= 1) {
                return Err(Error::SimpleGraphViolation(i, j, current + step));
            }
            let next = current + step;
            self.rows[i].insert(j, next);
            if i != j {
                self.rows[j].insert(i, next);
            }
            self.degrees[i] += 1;
            self.degrees[j] += 1;
            self.edge_total += 1;
            self.positions.entry(key).or_default().push(self.edge_list.len());
            self.edge_list.push(key);
        } else {
            if current == 0 {
                return Err(Error::EdgeUnderflow(i, j));
            }
            let next = current - step;
            if next == 0 {
                self.rows[i].remove(&j);
                if i != j {
                    self.rows[j].remove(&i);
                }
            } else {
                self.rows[i].insert(j, next);
                if i != j {
                    self.rows[j].insert(i, next);
                }
            }
            self.degrees[i] -= 1;
            self.degrees[j] -= 1;
            self.edge_total -= 1;
            let slot = {
                let p = self.positions.get_mut(&key).expect("edge index out of sync");
                let slot = p.pop().expect("edge index out of sync");
                if p.is_empty() {
                    self.positions.remove(&key);
                }
                slot
            };
            let last = self.edge_list.len() - 1;
            if slot != last {
                let moved = self.edge_list[last];
                self.edge_list.swap(slot, last);
                let p = self.positions.get_mut(&moved).expect("edge index out of sync");
                let idx = p.iter().position(|&s| s == last).expect("edge index out of sync");
                p[idx] = slot;
            }
            self.edge_list.pop();
        }
        Ok(())
    }

    /// Applies a batch of removals then additions, rolling back on failure.
    pub fn apply(&mut self, diff: &EdgeDiff) -> Result<()> {
        let mut done: Vec<(usize, usize, i32)> = Vec::with_capacity(4);
        let mut result = Ok(());
        for &(i, j) in &diff.removed {
            match self.remove_edge(i, j) {
                Ok(()) => done.push((i, j, -1)),
                Err(e) => {
                    result = Err(e);
                    break;
                }
            }
        }
        if result.is_ok() {
            for &(i, j) in &diff.added {
                match self.add_edge(i, j) {
                    Ok(()) => done.push((i, j, 1)),
                    Err(e) => {
                        result = Err(e);
                        break;
                    }
                }
            }
        }
        if result.is_err() {
            for &(i, j, d) in done.iter().rev() {
                self.toggle_edge(i, j, -d).expect("rollback cannot fail");
            }
        }
        result
    }

    pub fn revert(&mut self, diff: &EdgeDiff) -> Result<()> {
        self.apply(&diff.inverse())
    }

    /// Full consistency audit of the cached structures.
    pub fn audit(&self) -> std::result::Result<(), String> {
        let mut degrees = vec![0u64; self.n];
        let mut twice_edges = 0u64;
        for i in 0..self.n {
            for (&j, &a) in &self.rows[i] {
                if a == 0 {
                    return Err(format!("zero entry stored at ({i},{j})"));
                }
                if self.rows[j].get(&i) != Some(&a) {
                    return Err(format!("asymmetric entry at ({i},{j})"));
                }
                if i == j && a % 2 != 0 {
                    return Err(format!("odd diagonal at {i}"));
                }
                if self.mode == GraphMode::Simple && (i == j || a > 1) {
                    return Err(format!("simple-mode violation at ({i},{j})"));
                }
                degrees[i] += a as u64;
                twice_edges += a as u64;
            }
        }
        if degrees != self.degrees {
            return Err("degree cache out of sync".into());
        }
        if twice_edges != 2 * self.edge_total {
            return Err("edge total out of sync".into());
        }
        if self.edge_list.len() as u64 != self.edge_total {
            return Err("edge list length out of sync".into());
        }
        for (&(i, j), p) in &self.positions {
            if p.len() as u32 != self.edge_instances(i, j) {
                return Err(format!("edge index out of sync at ({i},{j})"));
            }
            for &s in p {
                if self.edge_list[s] != (i, j) {
                    return Err(format!("edge list slot {s} out of sync"));
                }
            }
        }
        Ok(())
    }

    /// Canonical, hashable key: sorted `(i, j, instances)` triples.
    pub fn key(&self) -> Vec<(usize, usize, u32)> {
        self.pairs()
    }

    pub fn from_key(n: usize, mode: GraphMode, key: &[(usize, usize, u32)]) -> Result<Self> {
        let mut g = Graph::empty(n, mode);
        for &(i, j, m) in key {
            for _ in 0..m {
                g.add_edge(i, j)?;
            }
        }
        Ok(g)
    }

    /// Edge-list text format: header `N E mode`, then `i j multiplicity`
    /// per connected pair (loops give their loop count).
    pub fn write_edge_list<W: Write>(&self, mut w: W) -> Result<()> {
        let mut s = String::new();
        writeln!(s, "{} {} {}", self.n, self.edge_total, self.mode).unwrap();
        for (i, j, m) in self.pairs() {
            writeln!(s, "{i} {j} {m}").unwrap();
        }
        w.write_all(s.as_bytes())?;
        Ok(())
    }

    pub fn read_edge_list<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r
            .lines()
            .enumerate()
            .filter(|(_, l)| l.as_ref().map(|s| !s.trim().is_empty()).unwrap_or(true));
        let (hl, header) = lines.next().ok_or(Error::Parse { line: 1, msg: "missing header".into() })?;
        let header = header?;
        let parts: Vec<&str> = header.split_whitespace().collect();
        if parts.len() != 3 {
            return Err(Error::Parse { line: hl + 1, msg: "header must be `N E mode`".into() });
        }
        let perr = |line: usize, what: &str| Error::Parse { line: line + 1, msg: format!("bad {what}") };
        let n: usize = parts[0].parse().map_err(|_| perr(hl, "node count"))?;
        let e: u64 = parts[1].parse().map_err(|_| perr(hl, "edge count"))?;
        let mode = match parts[2] {
            "simple" => GraphMode::Simple,
            "multi" => GraphMode::Multi,
            _ => return Err(perr(hl, "mode")),
        };
        let mut g = Graph::empty(n, mode);
        for (ln, line) in lines {
            let line = line?;
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 3 {
                return Err(perr(ln, "edge line"));
            }
            let i: usize = f[0].parse().map_err(|_| perr(ln, "node"))?;
            let j: usize = f[1].parse().map_err(|_| perr(ln, "node"))?;
            let m: u32 = f[2].parse().map_err(|_| perr(ln, "multiplicity"))?;
            for _ in 0..m {
                g.add_edge(i, j)?;
            }
        }
        if g.edge_count() != e {
            return Err(Error::EdgeCountMismatch { expected: e, actual: g.edge_count() });
        }
        Ok(g)
    }
}

/// A batch of edge-instance removals followed by additions.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EdgeDiff {
    pub removed: Vec<(usize, usize)>,
    pub added: Vec<(usize, usize)>,
}

impl EdgeDiff {
    pub fn new(removed: Vec<(usize, usize)>, added: Vec<(usize, usize)>) -> Self {
        EdgeDiff { removed, added }
    }

    pub fn inverse(&self) -> EdgeDiff {
        EdgeDiff { removed: self.added.clone(), added: self.removed.clone() }
    }

    pub fn is_empty(&self) -> bool {
        self.removed.is_empty() && self.added.is_empty()
    }

    /// Nodes whose adjacency rows change (deduplicated).
    pub fn touched_nodes(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self
            .removed
            .iter()
            .chain(self.added.iter())
            .flat_map(|&(i, j)| [i, j])
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Net per-pair change in edge instances, keyed by ordered pair.
    pub fn net_changes(&self) -> Vec<((usize, usize), i32)> {
        let mut m: HashMap<(usize, usize), i32> = HashMap::new();
        for &(i, j) in &self.removed {
            *m.entry(ordered(i, j)).or_default() -= 1;
        }
        for &(i, j) in &self.added {
            *m.entry(ordered(i, j)).or_default() += 1;
        }
        let mut v: Vec<_> = m.into_iter().filter(|&(_, d)| d != 0).collect();
        v.sort_unstable();
        v
    }
}

/// Dense indexing of unordered node pairs.
#[derive(Clone, Copy, Debug)]
pub struct PairIndex {
    n: usize,
    with_loops: bool,
}

impl PairIndex {
    pub fn new(n: usize, with_loops: bool) -> Self {
        PairIndex { n, with_loops }
    }

    pub fn for_mode(n: usize, mode: GraphMode) -> Self {
        PairIndex::new(n, mode == GraphMode::Multi)
    }

    pub fn len(&self) -> usize {
        if self.with_loops {
            self.n * (self.n + 1) / 2
        } else {
            self.n * self.n.saturating_sub(1) / 2
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        let (i, j) = ordered(i, j);
        if self.with_loops {
            // rows of length n, n-1, ...
            i * self.n - i * (i.saturating_sub(1)) / 2 + (j - i)
        } else {
            debug_assert!(i != j);
            i * (2 * self.n - i - 1) / 2 + (j - i - 1)
        }
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.n;
        let loops = self.with_loops;
        (0..n).flat_map(move |i| {
            let start = if loops { i } else { i + 1 };
            (start..n).map(move |j| (i, j))
        })
    }
}
