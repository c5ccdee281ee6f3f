#![allow(dead_code)]

use graphmix::graph::Graph;
use graphmix::partitions::Rational;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn graph(spec: &str) -> Graph {
    graphmix::graph::generate_graph(&spec.parse().unwrap()).unwrap()
}

/// All-pairs distances by Floyd-Warshall; `u32::MAX` when unreachable.
pub fn floyd_warshall(g: &Graph) -> Vec<Vec<u32>> {
    let n = g.order();
    let inf = u32::MAX / 2;
    let mut d = vec![vec![inf; n]; n];
    for (v, row) in d.iter_mut().enumerate() {
        row[v] = 0;
    }
    for (u, v) in g.edges() {
        d[u][v] = 1;
        d[v][u] = 1;
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[i][k] + d[k][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    for row in &mut d {
        for x in row.iter_mut() {
            if *x >= inf {
                *x = u32::MAX;
            }
        }
    }
    d
}

/// Maximal d-stable sets by scanning every vertex subset.
pub fn brute_maximal_stable_sets(g: &Graph, d: u32) -> Vec<u32> {
    let n = g.order();
    assert!(n <= 16);
    let dist = floyd_warshall(g);
    let stable = |mask: u32| {
        (0..n).all(|u| {
            mask >> u & 1 == 0 || (u + 1..n).all(|v| mask >> v & 1 == 0 || dist[u][v] >= d)
        })
    };
    let all: Vec<u32> = (1u32..1 << n).filter(|&m| stable(m)).collect();
    all.iter()
        .copied()
        .filter(|&m| (0..n).all(|v| m >> v & 1 == 1 || !stable(m | 1 << v)))
        .collect()
}

/// Minimizes `c.x` subject to `A x = b`, `x >= 0`, `b >= 0` with a two-phase
/// dense tableau and Bland's rule. Returns the optimal value.
pub fn two_phase_simplex(a: &[Vec<Rational>], b: &[Rational], c: &[Rational]) -> Rational {
    let rows = a.len();
    let cols = c.len();
    // columns: original, then one artificial per row, then rhs
    let width = cols + rows + 1;
    let mut t: Vec<Vec<Rational>> = (0..rows)
        .map(|i| {
            let mut r = vec![Rational::zero(); width];
            r[..cols].clone_from_slice(&a[i]);
            r[cols + i] = Rational::one();
            r[width - 1] = b[i].clone();
            r
        })
        .collect();
    let mut basis: Vec<usize> = (cols..cols + rows).collect();

    let pivot = |t: &mut Vec<Vec<Rational>>, obj: &mut Vec<Rational>, r: usize, col: usize| {
        let p = t[r][col].clone();
        for x in t[r].iter_mut() {
            *x = &*x / &p;
        }
        let prow = t[r].clone();
        for (i, row) in t.iter_mut().enumerate() {
            if i != r && !row[col].is_zero() {
                let f = row[col].clone();
                for (x, y) in row.iter_mut().zip(&prow) {
                    *x = &*x - &f * y;
                }
            }
        }
        if !obj[col].is_zero() {
            let f = obj[col].clone();
            for (x, y) in obj.iter_mut().zip(&prow) {
                *x = &*x - &f * y;
            }
        }
    };

    let run = |t: &mut Vec<Vec<Rational>>, obj: &mut Vec<Rational>, basis: &mut Vec<usize>, allowed: usize| loop {
        let Some(col) = (0..allowed).find(|&j| obj[j].is_negative()) else {
            return;
        };
        let mut best: Option<(Rational, usize)> = None;
        for (i, row) in t.iter().enumerate() {
            if row[col].is_positive() {
                let ratio = &row[width - 1] / &row[col];
                let better = match &best {
                    None => true,
                    Some((r, bi)) => ratio < *r || (ratio == *r && basis[i] < basis[*bi]),
                };
                if better {
                    best = Some((ratio, i));
                }
            }
        }
        let (_, r) = best.expect("bounded LP");
        pivot(t, obj, r, col);
        basis[r] = col;
    };

    // phase one: minimize the artificial sum (reduced costs)
    let mut obj = vec![Rational::zero(); width];
    for x in &mut obj[cols..cols + rows] {
        *x = Rational::one();
    }
    for row in &t {
        for (x, y) in obj.iter_mut().zip(row) {
            *x = &*x - y;
        }
    }
    run(&mut t, &mut obj, &mut basis, cols + rows);
    assert!(obj[width - 1].is_zero(), "infeasible LP");
    // drive remaining artificials out of the basis
    for r in 0..rows {
        if basis[r] >= cols {
            if let Some(col) = (0..cols).find(|&j| !t[r][j].is_zero()) {
                let mut dummy = vec![Rational::zero(); width];
                pivot(&mut t, &mut dummy, r, col);
                basis[r] = col;
            }
        }
    }

    // phase two on the original objective
    let mut obj = vec![Rational::zero(); width];
    obj[..cols].clone_from_slice(c);
    for (r, &bv) in basis.iter().enumerate() {
        if bv < cols && !obj[bv].is_zero() {
            let f = obj[bv].clone();
            for (x, y) in obj.iter_mut().zip(&t[r]) {
                *x = &*x - &f * y;
            }
        }
    }
    run(&mut t, &mut obj, &mut basis, cols);
    -obj[width - 1].clone()
}

/// Fractional chromatic number of the (d-1)-th power, via the covering LP
/// `min sum x_S` s.t. every vertex is covered at least once.
pub fn oracle_fractional_chromatic(g: &Graph, d: u32) -> Rational {
    let n = g.order();
    let sets = brute_maximal_stable_sets(g, d);
    let m = sets.len();
    // A x - s = 1 with surplus columns
    let a: Vec<Vec<Rational>> = (0..n)
        .map(|v| {
            let mut row: Vec<Rational> = sets
                .iter()
                .map(|&s| if s >> v & 1 == 1 { Rational::one() } else { Rational::zero() })
                .collect();
            row.extend((0..n).map(|i| if i == v { -Rational::one() } else { Rational::zero() }));
            row
        })
        .collect();
    let b = vec![Rational::one(); n];
    let mut c = vec![Rational::one(); m];
    c.extend(std::iter::repeat_n(Rational::zero(), n));
    two_phase_simplex(&a, &b, &c)
}

/// Fifty seeded random graphs on at most ten vertices.
pub fn random_corpus() -> Vec<Graph> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_c0de);
    (0..50)
        .map(|_| {
            let n = rng.random_range(1..=10usize);
            let p = rng.random_range(0.15..0.7);
            let mut edges = Vec::new();
            for u in 0..n {
                for v in u + 1..n {
                    if rng.random_bool(p) {
                        edges.push((u, v));
                    }
                }
            }
            Graph::from_edges(n, edges).unwrap()
        })
        .collect()
}
