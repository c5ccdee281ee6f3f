//! Exact fractional d-chromatic number for small graphs.
//!
//! The covering LP `min Σ x_S  s.t.  Σ_{S∋v} x_S >= 1, x >= 0` over the
//! maximal stable sets of the `(d-1)`-th power graph is solved through its
//! dual `max Σ y_v  s.t.  Σ_{v∈S} y_v <= 1, y >= 0` with a rational
//! tableau simplex. The origin is feasible for the dual, so no phase one is
//! needed, and the covering weights are read off the slack columns of the
//! final objective row.

use super::{cover_to_partition, rational, Rational, WeightedStableFamily};
use crate::error::{Error, Result};
use crate::graph::{power_graph, Graph};
use num_traits::{One, Signed, Zero};

pub const DEFAULT_MAX_VERTICES: usize = 16;
pub const MAX_STABLE_SETS: usize = 200;

/// Maximal stable sets of `h` as sorted vertex lists, ordered by bitmask.
/// Requires `h.order() <= 32`.
pub fn maximal_stable_sets(h: &Graph, limit: usize) -> Result<Vec<Vec<usize>>> {
    let n = h.order();
    if n > 32 {
        return Err(Error::SizeGuard {
            what: "graph order for stable-set enumeration",
            actual: n,
            limit: 32,
        });
    }
    let all: u64 = if n == 0 { 0 } else { (1u64 << n) - 1 };
    // neighbors in the complement graph
    let compl: Vec<u64> = (0..n)
        .map(|v| {
            let adj = h.neighbors(v).iter().fold(0u64, |m, &u| m | 1 << u);
            all & !adj & !(1 << v)
        })
        .collect();
    let mut found = Vec::new();
    bron_kerbosch(&compl, 0, all, 0, &mut found, limit)?;
    found.sort_unstable();
    Ok(found
        .into_iter()
        .map(|mask| (0..n).filter(|&v| mask >> v & 1 == 1).collect())
        .collect())
}

fn bron_kerbosch(compl: &[u64], r: u64, mut p: u64, mut x: u64, out: &mut Vec<u64>, limit: usize) -> Result<()> {
    if p == 0 && x == 0 {
        if out.len() == limit {
            return Err(Error::SizeGuard {
                what: "number of maximal stable sets",
                actual: limit + 1,
                limit,
            });
        }
        out.push(r);
        return Ok(());
    }
    let pivot = bits(p | x)
        .max_by_key(|&u| ((p & compl[u]).count_ones(), std::cmp::Reverse(u)))
        .expect("p|x non-empty");
    for v in bits(p & !compl[pivot]) {
        bron_kerbosch(compl, r | 1 << v, p & compl[v], x & compl[v], out, limit)?;
        p &= !(1 << v);
        x |= 1 << v;
    }
    Ok(())
}

fn bits(mask: u64) -> impl Iterator<Item = usize> {
    (0..64).filter(move |&i| mask >> i & 1 == 1)
}

/// Optimal value and optimal weights of `max c·y s.t. A y <= 1, y >= 0`
/// (all `c_j = 1`), plus the dual weights on the rows.
struct PackingSolution {
    value: Rational,
    row_duals: Vec<Rational>,
}

/// Rational tableau simplex with Bland's rule on `max Σ y s.t. A y <= 1`.
fn solve_packing(rows: &[Vec<usize>], n: usize) -> PackingSolution {
    let m = rows.len();
    let width = n + m;
    // tableau[i] = [coefficients (width), rhs]
    let mut tableau: Vec<Vec<Rational>> = rows
        .iter()
        .enumerate()
        .map(|(i, set)| {
            let mut row = vec![Rational::zero(); width + 1];
            for &v in set {
                row[v] = Rational::one();
            }
            row[n + i] = Rational::one();
            row[width] = Rational::one();
            row
        })
        .collect();
    let mut objective = vec![Rational::zero(); width + 1];
    for c in objective.iter_mut().take(n) {
        *c = -Rational::one();
    }
    let mut basis: Vec<usize> = (n..n + m).collect();

    while let Some(enter) = (0..width).find(|&j| objective[j].is_negative()) {
        let mut leave: Option<(usize, Rational)> = None;
        for (i, row) in tableau.iter().enumerate() {
            if !row[enter].is_positive() {
                continue;
            }
            let ratio = &row[width] / &row[enter];
            let better = match &leave {
                None => true,
                Some((li, best)) => ratio < *best || (ratio == *best && basis[i] < basis[*li]),
            };
            if better {
                leave = Some((i, ratio));
            }
        }
        // the packing polytope is bounded (every vertex lies in some row)
        let (pivot_row, _) = leave.expect("bounded LP");
        let pivot = tableau[pivot_row][enter].clone();
        for entry in tableau[pivot_row].iter_mut() {
            if !entry.is_zero() {
                *entry /= &pivot;
            }
        }
        let pivot_values = tableau[pivot_row].clone();
        let nonzero: Vec<usize> = (0..=width).filter(|&j| !pivot_values[j].is_zero()).collect();
        for (i, row) in tableau.iter_mut().enumerate() {
            if i == pivot_row || row[enter].is_zero() {
                continue;
            }
            let factor = row[enter].clone();
            for &j in &nonzero {
                let delta = &factor * &pivot_values[j];
                row[j] -= delta;
            }
        }
        let factor = objective[enter].clone();
        for &j in &nonzero {
            let delta = &factor * &pivot_values[j];
            objective[j] -= delta;
        }
        basis[pivot_row] = enter;
    }

    PackingSolution {
        value: objective[width].clone(),
        row_duals: (0..m).map(|i| objective[n + i].clone()).collect(),
    }
}

/// Exact fractional d-chromatic number with an optimal d-stable fractional
/// partition as witness. Refuses graphs above `max_vertices` vertices or
/// with more than [`MAX_STABLE_SETS`] maximal stable sets in the power graph.
pub fn exact_fractional_chromatic(
    g: &Graph,
    d: u32,
    max_vertices: usize,
) -> Result<(Rational, WeightedStableFamily)> {
    if d == 0 {
        return Err(Error::param("d must be at least 1"));
    }
    let n = g.order();
    if n > max_vertices {
        return Err(Error::SizeGuard {
            what: "graph order for the exact fractional LP",
            actual: n,
            limit: max_vertices,
        });
    }
    if d == 1 {
        return Ok((rational(1), WeightedStableFamily::from_classes(1, n, vec![(0..n).collect()])?));
    }
    let h = power_graph(g, d - 1)?;
    let sets = maximal_stable_sets(&h, MAX_STABLE_SETS)?;
    let solution = solve_packing(&sets, n);
    let cover: Vec<(Vec<usize>, Rational)> = sets.into_iter().zip(solution.row_duals).collect();
    let total: Rational = cover.iter().fold(Rational::zero(), |a, (_, w)| a + w);
    debug_assert_eq!(total, solution.value, "strong duality");
    let family = cover_to_partition(d, n, cover)?;
    Ok((solution.value, family))
}
