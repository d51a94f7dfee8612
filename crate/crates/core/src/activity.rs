//! Per-node, per-time counts of active and inactive neighbours.

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::series::TimeSeries;

/// `m[i][t]` active and `n[i][t]` inactive neighbours, multiplicities included.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NeighborActivity {
    nodes: usize,
    steps: usize,
    active: Vec<i64>,
    inactive: Vec<i64>,
}

impl NeighborActivity {
    pub fn compute(g: &Graph, x: &TimeSeries) -> Result<Self> {
        if g.n_nodes() != x.n_nodes() {
            return Err(Error::DimensionMismatch(format!(
                "graph has {} nodes, series has {}",
                g.n_nodes(),
                x.n_nodes()
            )));
        }
        let (nodes, steps) = (x.n_nodes(), x.len());
        let mut active = vec![0i64; nodes * steps];
        let mut inactive = vec![0i64; nodes * steps];
        for i in 0..nodes {
            let a = &mut active[i * steps..(i + 1) * steps];
            let b = &mut inactive[i * steps..(i + 1) * steps];
            for (j, mult) in g.neighbors(i) {
                let w = mult as i64;
                for (t, &s) in x.row(j).iter().enumerate() {
                    if s == 1 {
                        a[t] += w;
                    } else {
                        b[t] += w;
                    }
                }
            }
        }
        Ok(NeighborActivity { nodes, steps, active, inactive })
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes
    }

    pub fn len(&self) -> usize {
        self.steps
    }

    pub fn is_empty(&self) -> bool {
        self.steps == 0
    }

    #[inline]
    pub fn active(&self, i: usize, t: usize) -> i64 {
        self.active[i * self.steps + t]
    }

    #[inline]
    pub fn inactive(&self, i: usize, t: usize) -> i64 {
        self.inactive[i * self.steps + t]
    }

    pub fn active_row(&self, i: usize) -> &[i64] {
        &self.active[i * self.steps..(i + 1) * self.steps]
    }

    pub fn inactive_row(&self, i: usize) -> &[i64] {
        &self.inactive[i * self.steps..(i + 1) * self.steps]
    }

    /// Mirrors a `toggle_edge(i, j, delta)` already applied to the graph.
    pub fn update(&mut self, i: usize, j: usize, delta: i32, x: &TimeSeries) {
        if i == j {
            self.bump(i, i, 2 * delta as i64, x);
        } else {
            self.bump(i, j, delta as i64, x);
            self.bump(j, i, delta as i64, x);
        }
    }

    fn bump(&mut self, target: usize, source: usize, w: i64, x: &TimeSeries) {
        let s = self.steps;
        let a = &mut self.active[target * s..(target + 1) * s];
        let b = &mut self.inactive[target * s..(target + 1) * s];
        for (t, &v) in x.row(source).iter().enumerate() {
            if v == 1 {
                a[t] += w;
            } else {
                b[t] += w;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::GraphMode;
    use proptest::prelude::*;

    #[test]
    fn triangle_all_active() {
        let g = Graph::from_edges(3, GraphMode::Simple, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        let x = TimeSeries::from_rows(&[vec![1], vec![1], vec![1]]).unwrap();
        let a = NeighborActivity::compute(&g, &x).unwrap();
        for i in 0..3 {
            assert_eq!(a.active(i, 0), 2);
            assert_eq!(a.inactive(i, 0), 0);
        }
    }

    #[test]
    fn path_counts() {
        let g = Graph::from_edges(3, GraphMode::Simple, &[(0, 1), (1, 2)]).unwrap();
        let x = TimeSeries::from_rows(&[vec![1], vec![0], vec![0]]).unwrap();
        let a = NeighborActivity::compute(&g, &x).unwrap();
        assert_eq!((a.active(0, 0), a.active(1, 0), a.active(2, 0)), (0, 1, 0));
    }

    #[test]
    fn multiplicity_counts_twice() {
        let g = Graph::from_edges(2, GraphMode::Multi, &[(0, 1), (0, 1)]).unwrap();
        let x = TimeSeries::from_rows(&[vec![0], vec![1]]).unwrap();
        let a = NeighborActivity::compute(&g, &x).unwrap();
        assert_eq!(a.active(0, 0), 2);
    }

    #[test]
    fn inactive_endpoint_only_changes_inactive_counts() {
        let mut g = Graph::empty(3, GraphMode::Simple);
        let x = TimeSeries::from_rows(&[vec![1, 0, 1], vec![0, 0, 0], vec![1, 1, 1]]).unwrap();
        let mut a = NeighborActivity::compute(&g, &x).unwrap();
        g.add_edge(0, 1).unwrap();
        a.update(0, 1, 1, &x);
        assert_eq!(a.active_row(0), &[0, 0, 0]);
        assert_eq!(a.inactive_row(0), &[1, 1, 1]);
        a.update(0, 1, -1, &x);
        g.remove_edge(0, 1).unwrap();
        assert_eq!(a, NeighborActivity::compute(&g, &x).unwrap());
    }

    #[test]
    fn dimension_mismatch() {
        let g = Graph::empty(3, GraphMode::Simple);
        let x = TimeSeries::zeros(2, 4);
        assert!(NeighborActivity::compute(&g, &x).is_err());
    }

    proptest! {
        #[test]
        fn incremental_matches_recompute(
            n in 2usize..10,
            t in 1usize..50,
            bits in proptest::collection::vec(0u8..2, 500),
            ops in proptest::collection::vec((0usize..10, 0usize..10, any::<bool>()), 1..60),
        ) {
            let rows: Vec<Vec<u8>> = (0..n).map(|i| (0..t).map(|s| bits[(i * t + s) % bits.len()]).collect()).collect();
            let x = TimeSeries::from_rows(&rows).unwrap();
            let mut g = Graph::empty(n, GraphMode::Multi);
            let mut table = NeighborActivity::compute(&g, &x).unwrap();
            for (i, j, add) in ops {
                let (i, j) = (i % n, j % n);
                let delta = if add || g.multiplicity(i, j) == 0 { 1 } else { -1 };
                g.toggle_edge(i, j, delta).unwrap();
                table.update(i, j, delta, &x);
                prop_assert_eq!(&table, &NeighborActivity::compute(&g, &x).unwrap());
                for node in 0..n {
                    for s in 0..t {
                        prop_assert_eq!(table.active(node, s) + table.inactive(node, s), g.degree(node) as i64);
                    }
                }
            }
        }
    }
}
