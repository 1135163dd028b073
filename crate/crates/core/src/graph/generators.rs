use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::Graph;
use crate::error::{invalid, Error, Result};

/// Configuration-model restarts allowed before giving up.
pub const RANDOM_REGULAR_MAX_ATTEMPTS: u64 = 1_000_000;

/// The n-cycle 0–1–…–(n−1)–0.
pub fn build_cycle(n: usize) -> Result<Graph> {
    if n < 3 {
        return Err(invalid(format!("cycle needs n >= 3, got {n}")));
    }
    let adj = (0..n).flat_map(|v| [(v + n - 1) % n, (v + 1) % n]).collect();
    Graph::new(n, 2, adj)
}

/// Nearest-neighbor torus Z_{d1} × … × Z_{dm}, degree 2m.
///
/// A side of length 3 is accepted and produces triangles; sides of length
/// 1 or 2 would need self-loops or parallel edges and are rejected.
pub fn build_torus(dims: &[usize]) -> Result<Graph> {
    if dims.is_empty() {
        return Err(invalid("torus needs at least one dimension"));
    }
    if let Some(&d) = dims.iter().find(|&&d| d <= 2) {
        return Err(invalid(format!("torus dimension {d} <= 2 would create parallel edges")));
    }
    let n: usize = dims.iter().product();
    let k = 2 * dims.len();
    let mut strides = vec![1usize; dims.len()];
    for j in 1..dims.len() {
        strides[j] = strides[j - 1] * dims[j - 1];
    }
    let mut adj = Vec::with_capacity(n * k);
    for v in 0..n {
        for (&d, &s) in dims.iter().zip(&strides) {
            let coord = (v / s) % d;
            let base = v - coord * s;
            adj.push(base + ((coord + 1) % d) * s);
            adj.push(base + ((coord + d - 1) % d) * s);
        }
    }
    Graph::new(n, k, adj)
}

/// Simple k-regular graph from the configuration model.
///
/// Stubs are paired one pair at a time with uniform partners; the whole
/// pairing is discarded as soon as a self-loop or repeated edge appears.
/// Deterministic in `(n, k, seed)`.
pub fn build_random_regular(n: usize, k: usize, seed: u64) -> Result<Graph> {
    if k < 2 {
        return Err(invalid(format!("degree must be at least 2, got {k}")));
    }
    if k >= n {
        return Err(invalid(format!("degree {k} must be below n = {n}")));
    }
    if (n * k) % 2 == 1 {
        return Err(invalid(format!("n*k = {} is odd", n * k)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stubs: Vec<usize> = Vec::with_capacity(n * k);
    let mut lists: Vec<Vec<usize>> = vec![Vec::with_capacity(k); n];
    'attempt: for _ in 0..RANDOM_REGULAR_MAX_ATTEMPTS {
        stubs.clear();
        stubs.extend((0..n).flat_map(|v| std::iter::repeat(v).take(k)));
        lists.iter_mut().for_each(Vec::clear);
        let len = stubs.len();
        for pos in (0..len).step_by(2) {
            let i = rng.gen_range(pos..len);
            stubs.swap(pos, i);
            let j = rng.gen_range(pos + 1..len);
            stubs.swap(pos + 1, j);
            let (u, v) = (stubs[pos], stubs[pos + 1]);
            if u == v || lists[u].contains(&v) {
                continue 'attempt;
            }
            lists[u].push(v);
            lists[v].push(u);
        }
        return Graph::from_neighbor_lists(lists);
    }
    Err(Error::GenerationFailure { attempts: RANDOM_REGULAR_MAX_ATTEMPTS })
}
