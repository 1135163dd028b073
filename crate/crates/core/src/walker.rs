//! Non-backtracking random walkers and exact NBRW distributions.
//!
//! A walker's state is a directed edge `(prev, curr)`. Directed edges are
//! numbered `u*k + slot` where `slot` indexes `curr` inside `adj(u)`.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::graph::Graph;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WalkerState {
    pub prev: usize,
    pub curr: usize,
}

impl WalkerState {
    pub fn new(g: &Graph, prev: usize, curr: usize) -> Result<Self> {
        if prev >= g.n() || !g.has_edge(prev, curr) {
            return Err(invalid(format!("({prev}, {curr}) is not a directed edge")));
        }
        Ok(Self { prev, curr })
    }

    fn from_edge_id(g: &Graph, e: usize) -> Self {
        let prev = e / g.k();
        Self { prev, curr: g.neighbors(prev)[e % g.k()] }
    }

    fn edge_id(&self, g: &Graph) -> usize {
        self.prev * g.k() + g.slot_of(self.prev, self.curr).expect("walker sits on an edge")
    }

    /// One non-backtracking move: uniform over `adj(curr) \ {prev}`.
    /// Draws nothing from `rng` when k = 2.
    #[inline]
    pub fn step<R: Rng + ?Sized>(&mut self, g: &Graph, rng: &mut R) {
        let nb = g.neighbors(self.curr);
        let back = g.slot_of(self.curr, self.prev).expect("walker sits on an edge");
        let next = if nb.len() == 2 {
            nb[1 - back]
        } else {
            let r = rng.gen_range(0..nb.len() - 1);
            nb[if r >= back { r + 1 } else { r }]
        };
        self.prev = self.curr;
        self.curr = next;
    }
}

/// d mutually independent walkers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WalkerEnsemble {
    walkers: Vec<WalkerState>,
}

impl WalkerEnsemble {
    pub fn new(walkers: Vec<WalkerState>) -> Result<Self> {
        if walkers.is_empty() {
            return Err(invalid("walker ensemble needs d >= 1"));
        }
        Ok(Self { walkers })
    }

    /// Each walker on an independent uniform directed edge, which is the
    /// stationary law of the NBRW on a regular graph.
    pub fn init_uniform<R: Rng + ?Sized>(g: &Graph, d: usize, rng: &mut R) -> Result<Self> {
        if d == 0 {
            return Err(invalid("walker ensemble needs d >= 1"));
        }
        let m = g.n() * g.k();
        let walkers = (0..d).map(|_| WalkerState::from_edge_id(g, rng.gen_range(0..m))).collect();
        Ok(Self { walkers })
    }

    pub fn d(&self) -> usize {
        self.walkers.len()
    }

    pub fn walkers(&self) -> &[WalkerState] {
        &self.walkers
    }

    pub fn positions(&self) -> impl Iterator<Item = usize> + '_ {
        self.walkers.iter().map(|w| w.curr)
    }

    pub fn step<R: Rng + ?Sized>(&mut self, g: &Graph, rng: &mut R) {
        for w in &mut self.walkers {
            w.step(g, rng);
        }
    }
}

/// Reverse-edge table for pushing mass over directed-edge states.
struct DirectedEdges<'a> {
    g: &'a Graph,
    /// `head[e]` is the vertex edge `e` points to.
    head: Vec<usize>,
    rev: Vec<usize>,
}

impl<'a> DirectedEdges<'a> {
    fn new(g: &'a Graph) -> Self {
        let k = g.k();
        let rev = (0..g.n() * k)
            .map(|e| {
                let (u, v) = (e / k, g.neighbors(e / k)[e % k]);
                v * k + g.slot_of(v, u).expect("symmetric adjacency")
            })
            .collect();
        let head = (0..g.n() * k).map(|e| g.neighbors(e / k)[e % k]).collect();
        Self { g, head, rev }
    }

    /// One NBRW transition of an edge distribution.
    ///
    /// Mass arriving on `v → w` is everything that entered `v`, minus what
    /// came in over the reverse edge `w → v`, split k−1 ways.
    fn push(&self, from: &[f64], to: &mut [f64], inflow: &mut [f64]) {
        let k = self.g.k();
        let share = 1.0 / (k - 1) as f64;
        self.vertex_marginal(from, inflow);
        for (e, slot) in to.iter_mut().enumerate() {
            *slot = (share * (inflow[e / k] - from[self.rev[e]])).max(0.0);
        }
    }

    fn vertex_marginal(&self, edge_dist: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|x| *x = 0.0);
        for (&v, &mass) in self.head.iter().zip(edge_dist) {
            out[v] += mass;
        }
    }

    /// `max_v |P(curr = v) − 1/n|` at each requested step count, from one start edge.
    fn deviations(&self, start: usize, ts: &[usize]) -> Vec<f64> {
        let n = self.g.n();
        let m = n * self.g.k();
        let horizon = ts.iter().copied().max().unwrap_or(0);
        let mut cur = vec![0.0; m];
        let mut next = vec![0.0; m];
        let mut marginal = vec![0.0; n];
        cur[start] = 1.0;
        let mut out = vec![0.0; ts.len()];
        let uniform = 1.0 / n as f64;
        for t in 0..=horizon {
            if t > 0 {
                self.push(&cur, &mut next, &mut marginal);
                std::mem::swap(&mut cur, &mut next);
            }
            for (slot, _) in ts.iter().enumerate().filter(|(_, &tt)| tt == t) {
                self.vertex_marginal(&cur, &mut marginal);
                out[slot] = marginal.iter().map(|p| (p - uniform).abs()).fold(0.0, f64::max);
            }
        }
        out
    }
}

/// Exact law of `curr` after `t` NBRW steps from `start`.
pub fn nbrw_vertex_distribution(g: &Graph, start: WalkerState, t: usize) -> Result<Vec<f64>> {
    let edges = DirectedEdges::new(g);
    let m = g.n() * g.k();
    let mut cur = vec![0.0; m];
    let mut next = vec![0.0; m];
    cur[start.edge_id(g)] = 1.0;
    let mut marginal = vec![0.0; g.n()];
    for _ in 0..t {
        edges.push(&cur, &mut next, &mut marginal);
        std::mem::swap(&mut cur, &mut next);
    }
    edges.vertex_marginal(&cur, &mut marginal);
    Ok(marginal)
}

#[derive(Debug, Clone)]
pub struct MixingOptions {
    /// Enumerate every start edge when n*k is at most this.
    pub exact_bound: usize,
    /// Start edges used above the exact bound.
    pub sample_size: usize,
    pub sample_seed: u64,
    /// Overrides both exact enumeration and sampling.
    pub start_edges: Option<Vec<WalkerState>>,
}

impl Default for MixingOptions {
    fn default() -> Self {
        Self { exact_bound: 10_000, sample_size: 64, sample_seed: 0, start_edges: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixingPoint {
    pub t: usize,
    pub deviation: f64,
}

#[derive(Debug, Clone)]
pub struct MixingReport {
    pub points: Vec<MixingPoint>,
    /// True when every start edge was evaluated; otherwise each deviation
    /// is a lower bound on the true maximum.
    pub exact: bool,
    pub start_edges: usize,
}

/// `max over start edges, max_v |P(curr_t = v) − 1/n|` for each `t`.
pub fn mixing_profile(g: &Graph, ts: &[usize], opts: &MixingOptions) -> Result<MixingReport> {
    if g.is_bipartite() {
        return Err(Error::Domain(
            "NBRW on a bipartite graph is periodic; its vertex law never approaches uniform".into(),
        ));
    }
    let edges = DirectedEdges::new(g);
    let m = g.n() * g.k();
    let (starts, exact): (Vec<usize>, bool) = match &opts.start_edges {
        Some(list) => (list.iter().map(|s| s.edge_id(g)).collect(), false),
        None if m <= opts.exact_bound => ((0..m).collect(), true),
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.sample_seed);
            let all: Vec<usize> = (0..m).collect();
            (all.choose_multiple(&mut rng, opts.sample_size.min(m)).copied().collect(), false)
        }
    };
    let worst = starts
        .par_iter()
        .map(|&s| edges.deviations(s, ts))
        .reduce(
            || vec![0.0; ts.len()],
            |a, b| a.iter().zip(&b).map(|(x, y)| x.max(*y)).collect(),
        );
    Ok(MixingReport {
        points: ts.iter().zip(worst).map(|(&t, deviation)| MixingPoint { t, deviation }).collect(),
        exact,
        start_edges: starts.len(),
    })
}

pub fn mixing_deviation(g: &Graph, t: usize, opts: &MixingOptions) -> Result<f64> {
    Ok(mixing_profile(g, &[t], opts)?.points[0].deviation)
}
