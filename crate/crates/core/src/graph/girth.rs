use std::collections::VecDeque;

use super::{Girth, Graph};

/// Exact girth by breadth-first search from every vertex.
///
/// A visited vertex reached over a non-tree edge from depth `d1` to depth
/// `d2` closes a closed walk of length `d1 + d2 + 1`; the minimum over all
/// roots is the shortest cycle. Each search stops once its frontier is too
/// deep to beat the best cycle found so far.
pub fn girth(g: &Graph) -> Girth {
    let n = g.n();
    let mut best = usize::MAX;
    let mut dist = vec![0usize; n];
    let mut parent = vec![usize::MAX; n];
    let mut stamp = vec![usize::MAX; n];
    let mut queue = VecDeque::new();

    for root in 0..n {
        queue.clear();
        stamp[root] = root;
        dist[root] = 0;
        parent[root] = usize::MAX;
        queue.push_back(root);
        while let Some(u) = queue.pop_front() {
            let du = dist[u];
            if 2 * du >= best {
                break;
            }
            for &w in g.neighbors(u) {
                if w == parent[u] {
                    continue;
                }
                if stamp[w] == root {
                    best = best.min(du + dist[w] + 1);
                } else {
                    stamp[w] = root;
                    dist[w] = du + 1;
                    parent[w] = u;
                    queue.push_back(w);
                }
            }
        }
        if best == 3 {
            break;
        }
    }

    if best == usize::MAX {
        Girth::Acyclic
    } else {
        Girth::Cycle(best)
    }
}
