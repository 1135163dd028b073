//! Lubotzky–Phillips–Sarnak Ramanujan graphs X^{p,q}.
//!
//! Vertices are elements of PGL(2, q), stored as 2×2 matrices over Z/q
//! scaled so that the first non-zero entry (row-major) is 1. The p+1
//! generators come from the quaternion solutions of a²+b²+c²+d² = p with
//! a > 0 odd and b, c, d even, mapped through a pair (x, y) with
//! x² + y² + 1 ≡ 0 (mod q) to
//!
//! ```text
//! [ a + xb + yd    xd − yb + c ]
//! [ xd − yb − c    a − xb − yd ]
//! ```
//!
//! For q ≡ 1 (mod 4) the search finds y = 0 and x = √−1, giving the
//! familiar `[[a+ib, c+id], [−c+id, a−ib]]`. When p is a square mod q the generators
//! have square determinant and generate the index-2 subgroup PSL(2, q);
//! otherwise they generate all of PGL(2, q) and the graph is bipartite.

use std::collections::{HashMap, VecDeque};

use super::Graph;
use crate::error::{invalid, Error, Result};

type Mat = [u64; 4];

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * base % m;
        }
        base = base * base % m;
        exp >>= 1;
    }
    acc
}

fn inv_mod(a: u64, q: u64) -> u64 {
    pow_mod(a, q - 2, q)
}

/// Legendre symbol (a | q) for an odd prime q: 1, -1, or 0.
pub fn legendre(a: u64, q: u64) -> i32 {
    match pow_mod(a % q, (q - 1) / 2, q) {
        0 => 0,
        1 => 1,
        _ => -1,
    }
}

/// Vertex count of X^{p,q}: q(q²−1)/2 when (p|q) = 1, else q(q²−1).
pub fn lps_order(p: u64, q: u64) -> usize {
    let full = (q * (q * q - 1)) as usize;
    if legendre(p, q) == 1 {
        full / 2
    } else {
        full
    }
}

/// Smallest (x, y) with x² + y² + 1 ≡ 0 (mod q); exists for every odd prime.
fn sum_of_two_squares_minus_one(q: u64) -> (u64, u64) {
    for y in 0..q {
        for x in 0..q {
            if (x * x + y * y + 1) % q == 0 {
                return (x, y);
            }
        }
    }
    unreachable!("x² + y² = −1 is solvable over every finite field")
}

fn mul(a: &Mat, b: &Mat, q: u64) -> Mat {
    [
        (a[0] * b[0] + a[1] * b[2]) % q,
        (a[0] * b[1] + a[1] * b[3]) % q,
        (a[2] * b[0] + a[3] * b[2]) % q,
        (a[2] * b[1] + a[3] * b[3]) % q,
    ]
}

fn canonical(m: Mat, q: u64) -> Mat {
    let lead = m.iter().copied().find(|&x| x != 0).expect("singular matrix has no canonical form");
    let s = inv_mod(lead, q);
    m.map(|x| x * s % q)
}

fn encode(m: &Mat, q: u64) -> u64 {
    ((m[0] * q + m[1]) * q + m[2]) * q + m[3]
}

/// Integer solutions of a²+b²+c²+d² = p with a > 0 odd and b, c, d even.
fn quaternion_generators(p: u64) -> Vec<[i64; 4]> {
    let p = p as i64;
    let r = (p as f64).sqrt() as i64 + 1;
    let mut out = Vec::new();
    for a in (1..=r).step_by(2) {
        for b in (-r..=r).filter(|b| b % 2 == 0) {
            for c in (-r..=r).filter(|c| c % 2 == 0) {
                for d in (-r..=r).filter(|d| d % 2 == 0) {
                    if a * a + b * b + c * c + d * d == p {
                        out.push([a, b, c, d]);
                    }
                }
            }
        }
    }
    out
}

pub fn build_lps(p: u64, q: u64) -> Result<Graph> {
    if !is_prime(p) || !is_prime(q) {
        return Err(invalid(format!("LPS parameters must be primes, got p={p}, q={q}")));
    }
    if p == q {
        return Err(invalid("LPS parameters p and q must be distinct"));
    }
    if p % 4 != 1 {
        return Err(invalid(format!("LPS parameter p must be 1 mod 4, got p={p}")));
    }
    if q == 2 {
        return Err(invalid("LPS parameter q must be odd"));
    }
    if q * q <= 4 * p {
        return Err(invalid(format!("LPS requires q > 2*sqrt(p), got p={p}, q={q}")));
    }

    let (x, y) = sum_of_two_squares_minus_one(q);
    let m = |x: i64| x.rem_euclid(q as i64) as u64;
    let quats = quaternion_generators(p);
    if quats.len() != (p + 1) as usize {
        return Err(Error::InternalConsistency(format!(
            "found {} generators for p={p}, expected {}",
            quats.len(),
            p + 1
        )));
    }
    let gens: Vec<Mat> = quats
        .iter()
        .map(|&[a, b, c, d]| {
            let (a, b, c, d) = (m(a), m(b), m(c), m(d));
            let u = (x * b + y * d) % q;
            let w = (x * d + q - y * b % q) % q;
            let raw = [(a + u) % q, (w + c) % q, (w + q - c) % q, (a + q - u) % q];
            canonical(raw, q)
        })
        .collect();

    let expected = lps_order(p, q);
    let identity: Mat = [1, 0, 0, 1];
    let mut index: HashMap<u64, usize> = HashMap::with_capacity(expected);
    let mut elems: Vec<Mat> = Vec::with_capacity(expected);
    index.insert(encode(&identity, q), 0);
    elems.push(identity);
    let mut queue = VecDeque::from([0usize]);
    let k = gens.len();
    let mut adj = Vec::with_capacity(expected * k);
    // BFS visits vertices in index order, so adjacency rows are appended in order.
    while let Some(v) = queue.pop_front() {
        let g = elems[v];
        for s in &gens {
            let h = canonical(mul(&g, s, q), q);
            let code = encode(&h, q);
            let next = *index.entry(code).or_insert_with(|| {
                elems.push(h);
                queue.push_back(elems.len() - 1);
                elems.len() - 1
            });
            adj.push(next);
        }
    }
    if elems.len() != expected {
        return Err(Error::InternalConsistency(format!(
            "generated group has {} elements, expected {expected}",
            elems.len()
        )));
    }
    Graph::new(expected, k, adj).map_err(|e| Error::InternalConsistency(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_symbols() {
        assert_eq!(legendre(5, 11), 1);
        assert_eq!(legendre(5, 29), 1);
        assert_eq!(legendre(5, 13), -1);
        // quadratic residues mod 11 are {1,3,4,5,9}
        let qr: Vec<u64> = (1..11).filter(|&a| legendre(a, 11) == 1).collect();
        assert_eq!(qr, vec![1, 3, 4, 5, 9]);
    }

    #[test]
    fn six_generators_for_p5() {
        let gens = quaternion_generators(5);
        assert_eq!(gens.len(), 6);
        assert!(gens.iter().all(|g| g[0] == 1));
    }

    #[test]
    fn lps_5_11() {
        let g = build_lps(5, 11).unwrap();
        assert_eq!((g.n(), g.k()), (660, 6));
        assert!(g.is_connected());
        assert!(!g.is_bipartite());
    }

    #[test]
    fn unit_pair_for_one_mod_four_is_sqrt_minus_one() {
        let (x, y) = sum_of_two_squares_minus_one(29);
        assert_eq!(y, 0);
        assert_eq!(x * x % 29, 28);
        let (x, y) = sum_of_two_squares_minus_one(11);
        assert_eq!((x * x + y * y + 1) % 11, 0);
    }

    #[test]
    fn generator_set_closed_under_inverse() {
        let g = build_lps(5, 11).unwrap();
        // Cayley graph of an inverse-closed set: identity's neighbors each
        // list the identity back, which Graph::new already enforces.
        assert!(g.neighbors(0).iter().all(|&v| g.has_edge(v, 0)));
    }

    #[test]
    fn lps_5_13_is_bipartite() {
        let g = build_lps(5, 13).unwrap();
        assert_eq!(g.n(), 13 * 168);
        assert!(g.is_bipartite());
    }

    #[test]
    fn lps_5_29_matches_experiment_size() {
        let g = build_lps(5, 29).unwrap();
        assert_eq!((g.n(), g.k()), (12180, 6));
        assert!(g.is_connected());
        assert!(!g.is_bipartite());
    }

    #[test]
    fn rejects_bad_parameters() {
        for (p, q) in [(4, 11), (5, 15), (3, 11), (5, 3), (13, 5), (5, 5), (5, 2)] {
            assert!(matches!(build_lps(p, q), Err(Error::InvalidParameter(_))), "({p},{q})");
        }
    }
}
