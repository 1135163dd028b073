//! k-regular interconnection graphs.
//!
//! A [`Graph`] is stored in flat adjacency form: vertex `v` owns the slice
//! `adj[v*k .. (v+1)*k]`, kept sorted ascending. Every constructor funnels
//! through [`Graph::new`], which enforces regularity, symmetry and
//! simplicity, so downstream code never re-checks them.

mod generators;
mod girth;
mod io;
mod lps;
mod spectral;

use std::collections::VecDeque;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

pub use generators::{build_cycle, build_random_regular, build_torus, RANDOM_REGULAR_MAX_ATTEMPTS};
pub use girth::girth;
pub use io::{read_edge_list, write_edge_list, parse_edge_list, format_edge_list};
pub use lps::{build_lps, legendre, lps_order};
pub use spectral::{spectral_lambda, spectral_lambda_with, SpectralOptions};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    k: usize,
    adj: Vec<usize>,
}

impl Graph {
    /// Builds a graph from per-vertex neighbor lists, validating every
    /// structural invariant. Neighbor lists are sorted on the way in.
    pub fn from_neighbor_lists(lists: Vec<Vec<usize>>) -> Result<Self> {
        let n = lists.len();
        if n == 0 {
            return Err(Error::InvalidParameter("graph must have at least one vertex".into()));
        }
        let k = lists[0].len();
        let mut adj = Vec::with_capacity(n * k);
        for (v, row) in lists.into_iter().enumerate() {
            if row.len() != k {
                return Err(Error::InvalidParameter(format!(
                    "vertex {v} has degree {} but vertex 0 has degree {k}",
                    row.len()
                )));
            }
            adj.extend(row);
        }
        Self::new(n, k, adj)
    }

    /// Builds a graph from a flat adjacency array of length `n*k`.
    pub fn new(n: usize, k: usize, mut adj: Vec<usize>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("graph must have at least one vertex".into()));
        }
        if k < 2 {
            return Err(Error::InvalidParameter(format!("degree must be at least 2, got {k}")));
        }
        if adj.len() != n * k {
            return Err(Error::InvalidParameter(format!(
                "adjacency length {} does not equal n*k = {}",
                adj.len(),
                n * k
            )));
        }
        for row in adj.chunks_mut(k) {
            row.sort_unstable();
        }
        let g = Graph { n, k, adj };
        g.check_invariants()?;
        Ok(g)
    }

    fn check_invariants(&self) -> Result<()> {
        for u in 0..self.n {
            let row = self.neighbors(u);
            for (i, &v) in row.iter().enumerate() {
                if v >= self.n {
                    return Err(Error::InvalidParameter(format!(
                        "vertex {u} lists out-of-range neighbor {v}"
                    )));
                }
                if v == u {
                    return Err(Error::InvalidParameter(format!("self-loop at vertex {u}")));
                }
                if i > 0 && row[i - 1] == v {
                    return Err(Error::InvalidParameter(format!(
                        "parallel edge between {u} and {v}"
                    )));
                }
                if self.neighbors(v).binary_search(&u).is_err() {
                    return Err(Error::InvalidParameter(format!(
                        "asymmetric adjacency: {v} in adj({u}) but {u} not in adj({v})"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v * self.k..(v + 1) * self.k]
    }

    /// Slot of `u` within `adj(v)`, if adjacent.
    #[inline]
    pub fn slot_of(&self, v: usize, u: usize) -> Option<usize> {
        self.neighbors(v).binary_search(&u).ok()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.slot_of(u, v).is_some()
    }

    pub fn edge_count(&self) -> usize {
        self.n * self.k / 2
    }

    /// Undirected edges as `(u, v)` with `u < v`, in ascending order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |u| {
            self.neighbors(u).iter().copied().filter(move |&v| u < v).map(move |v| (u, v))
        })
    }

    /// y = A x for the adjacency matrix A.
    pub fn adjacency_matvec(&self, x: &[f64], y: &mut [f64]) {
        for (u, yu) in y.iter_mut().enumerate() {
            *yu = self.neighbors(u).iter().map(|&v| x[v]).sum();
        }
    }

    pub fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = queue.pop_front() {
            for &v in self.neighbors(u) {
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    queue.push_back(v);
                }
            }
        }
        count == self.n
    }

    /// Two-colors every component; false as soon as an odd cycle is found.
    pub fn is_bipartite(&self) -> bool {
        let mut color = vec![u8::MAX; self.n];
        for root in 0..self.n {
            if color[root] != u8::MAX {
                continue;
            }
            color[root] = 0;
            let mut queue = VecDeque::from([root]);
            while let Some(u) = queue.pop_front() {
                for &v in self.neighbors(u) {
                    if color[v] == u8::MAX {
                        color[v] = 1 - color[u];
                        queue.push_back(v);
                    } else if color[v] == color[u] {
                        return false;
                    }
                }
            }
        }
        true
    }
}

/// Shortest cycle length; `Acyclic` for forests (never for a valid k≥2 regular graph,
/// but kept so the report type is total).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Girth {
    Cycle(usize),
    Acyclic,
}

impl Girth {
    pub fn length(self) -> Option<usize> {
        match self {
            Girth::Cycle(g) => Some(g),
            Girth::Acyclic => None,
        }
    }
}

impl Serialize for Girth {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Girth::Cycle(g) => s.serialize_u64(*g as u64),
            Girth::Acyclic => s.serialize_str("acyclic"),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GraphReport {
    pub n: usize,
    pub degree: usize,
    pub connected: bool,
    pub bipartite: bool,
    pub girth: Girth,
    pub spectral_lambda: f64,
    /// False when power iteration hit its budget; `spectral_lambda` is then the best estimate.
    pub spectral_converged: bool,
    /// girth / (2 log_{k-1} n); absent for k = 2.
    pub girth_ratio: Option<f64>,
    pub has_triangles: bool,
}

pub fn validate(g: &Graph) -> GraphReport {
    let connected = g.is_connected();
    let bipartite = g.is_bipartite();
    let girth = girth(g);
    let (spectral_lambda, spectral_converged) = match spectral_lambda(g, SpectralOptions::default().tol) {
        Ok(l) => (l, true),
        Err(Error::NumericalFailure { best_estimate, .. }) => (best_estimate, false),
        Err(_) => (f64::NAN, false),
    };
    let girth_ratio = match (girth, g.k()) {
        (Girth::Cycle(len), k) if k > 2 && g.n() > 1 => {
            let log = (g.n() as f64).ln() / ((k - 1) as f64).ln();
            Some(len as f64 / (2.0 * log))
        }
        _ => None,
    };
    GraphReport {
        n: g.n(),
        degree: g.k(),
        connected,
        bipartite,
        girth,
        spectral_lambda,
        spectral_converged,
        girth_ratio,
        has_triangles: girth == Girth::Cycle(3),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn k4() -> Graph {
        Graph::from_neighbor_lists(vec![vec![1, 2, 3], vec![0, 2, 3], vec![0, 1, 3], vec![0, 1, 2]])
            .unwrap()
    }

    #[test]
    fn rejects_asymmetric() {
        let err = Graph::from_neighbor_lists(vec![vec![1, 2], vec![0, 2], vec![1, 3], vec![0, 2]]);
        assert!(err.is_err());
    }

    #[test]
    fn rejects_self_loop_and_parallel() {
        assert!(Graph::new(2, 2, vec![0, 1, 0, 1]).is_err());
        assert!(Graph::new(2, 2, vec![1, 1, 0, 0]).is_err());
    }

    #[test]
    fn rejects_degree_mismatch() {
        assert!(Graph::from_neighbor_lists(vec![vec![1, 2], vec![0], vec![0]]).is_err());
    }

    #[test]
    fn k4_report() {
        let r = validate(&k4());
        assert!(r.connected);
        assert!(!r.bipartite);
        assert_eq!(r.girth, Girth::Cycle(3));
        assert!(r.has_triangles);
        assert!((r.spectral_lambda - 1.0).abs() < 1e-6);
    }

    #[test]
    fn even_cycle_is_bipartite() {
        let r = validate(&build_cycle(8).unwrap());
        assert!(r.bipartite);
        assert!(r.connected);
        assert!(r.girth_ratio.is_none());
    }

    #[test]
    fn edges_are_ascending_pairs() {
        let g = build_cycle(3).unwrap();
        let e: Vec<_> = g.edges().collect();
        assert_eq!(e, vec![(0, 1), (0, 2), (1, 2)]);
    }

    #[test]
    fn girth_serializes_as_number() {
        assert_eq!(serde_json::to_string(&Girth::Cycle(4)).unwrap(), "4");
        assert_eq!(serde_json::to_string(&Girth::Acyclic).unwrap(), "\"acyclic\"");
    }
}
