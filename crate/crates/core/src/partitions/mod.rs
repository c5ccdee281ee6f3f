//! d-stable fractional partitions.
//!
//! A family `{(w_k, S_k)}` is a d-stable fractional partition when every
//! `S_k` has pairwise distances at least `d` and every vertex is covered with
//! total weight exactly one. Weights are exact rationals throughout; the
//! total weight is the quantity the concentration and regret bounds consume.

mod lp;

pub use lp::{exact_fractional_chromatic, maximal_stable_sets, DEFAULT_MAX_VERTICES, MAX_STABLE_SETS};

use crate::error::{Error, Result};
use crate::graph::{power_graph, Bfs, GeneratorSpec, Graph};
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

pub type Rational = BigRational;

pub fn rational(n: i64) -> Rational {
    Rational::from_integer(n.into())
}

pub fn rational_to_f64(r: &Rational) -> f64 {
    use num_traits::ToPrimitive;
    r.to_f64().unwrap_or(f64::NAN)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "FamilyJson", into = "FamilyJson")]
pub struct WeightedStableFamily {
    d: u32,
    graph_n: usize,
    subsets: Vec<Vec<usize>>,
    weights: Vec<Rational>,
}

impl WeightedStableFamily {
    /// Normalizes members (sorted, deduplicated) and drops zero-weight
    /// subsets. Stability and coverage are not checked here; see
    /// [`validate_partition`].
    pub fn new(d: u32, graph_n: usize, subsets: Vec<Vec<usize>>, weights: Vec<Rational>) -> Result<Self> {
        if d == 0 {
            return Err(Error::param("d must be at least 1"));
        }
        if subsets.len() != weights.len() {
            return Err(Error::param(format!(
                "{} subsets but {} weights",
                subsets.len(),
                weights.len()
            )));
        }
        let mut kept_subsets = Vec::with_capacity(subsets.len());
        let mut kept_weights = Vec::with_capacity(weights.len());
        for (mut s, w) in subsets.into_iter().zip(weights) {
            if w.is_negative() {
                return Err(Error::param(format!("negative weight {w}")));
            }
            if w.is_zero() {
                continue;
            }
            s.sort_unstable();
            s.dedup();
            if let Some(&v) = s.iter().find(|&&v| v >= graph_n) {
                return Err(Error::param(format!("vertex {v} out of range for n={graph_n}")));
            }
            kept_subsets.push(s);
            kept_weights.push(w);
        }
        Ok(WeightedStableFamily {
            d,
            graph_n,
            subsets: kept_subsets,
            weights: kept_weights,
        })
    }

    /// Unit-weight family from disjoint classes.
    pub fn from_classes(d: u32, graph_n: usize, classes: Vec<Vec<usize>>) -> Result<Self> {
        let weights = vec![Rational::one(); classes.len()];
        Self::new(d, graph_n, classes, weights)
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    pub fn graph_n(&self) -> usize {
        self.graph_n
    }

    pub fn subsets(&self) -> &[Vec<usize>] {
        &self.subsets
    }

    pub fn weights(&self) -> &[Rational] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.subsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subsets.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Rational, &[usize])> {
        self.weights.iter().zip(self.subsets.iter().map(Vec::as_slice))
    }

    /// Indices of the subsets containing each vertex.
    pub fn memberships(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.graph_n];
        for (k, s) in self.subsets.iter().enumerate() {
            for &v in s {
                out[v].push(k);
            }
        }
        out
    }

    /// `Σ_k w_k |S_k|`; equals the graph order for every valid partition.
    pub fn size_weighted_sum(&self) -> Rational {
        self.iter()
            .map(|(w, s)| w * rational(s.len() as i64))
            .fold(Rational::zero(), |a, b| a + b)
    }
}

pub fn weight_sum(fam: &WeightedStableFamily) -> Rational {
    fam.weights.iter().fold(Rational::zero(), |acc, w| acc + w)
}

#[derive(Serialize, Deserialize)]
struct FamilyJson {
    d: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    n: Option<usize>,
    subsets: Vec<Vec<usize>>,
    weights: Vec<String>,
}

impl TryFrom<FamilyJson> for WeightedStableFamily {
    type Error = Error;

    fn try_from(j: FamilyJson) -> Result<Self> {
        let weights = j
            .weights
            .iter()
            .map(|w| Rational::from_str(w.trim()).map_err(|_| Error::param(format!("bad rational weight {w:?}"))))
            .collect::<Result<Vec<_>>>()?;
        // without an explicit order, a covering family spans 0..=max id
        let n = j
            .n
            .unwrap_or_else(|| j.subsets.iter().flatten().max().map_or(0, |&m| m + 1));
        WeightedStableFamily::new(j.d, n, j.subsets, weights)
    }
}

impl From<WeightedStableFamily> for FamilyJson {
    fn from(f: WeightedStableFamily) -> Self {
        FamilyJson {
            d: f.d,
            n: Some(f.graph_n),
            subsets: f.subsets,
            weights: f.weights.iter().map(ToString::to_string).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    /// Two members of one subset closer than `d`.
    NotStable {
        subset: usize,
        u: usize,
        v: usize,
        distance: u32,
    },
    /// BFS and power-graph stability checks disagree on a subset.
    PowerGraphDisagreement { subset: usize },
    /// Vertex covered with total weight other than one.
    Coverage { vertex: usize, coverage: String },
    /// `Σ w_k |S_k| != n` despite exact coverage.
    SumIdentity { expected: usize, actual: String },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub valid: bool,
    pub violations: Vec<Violation>,
    #[serde(with = "rational_string")]
    pub weight_sum: Rational,
    #[serde(with = "rational_string")]
    pub worst_coverage_deviation: Rational,
}

pub(crate) mod rational_string {
    use super::Rational;
    use serde::{Deserialize, Deserializer, Serializer};
    use std::str::FromStr;

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&r.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        Rational::from_str(&s).map_err(serde::de::Error::custom)
    }
}

/// Checks d-stability (by BFS, cross-checked against stability in the
/// `(d-1)`-th power graph), exact coverage, and the size-weighted sum
/// identity.
pub fn validate_partition(g: &Graph, fam: &WeightedStableFamily) -> Result<ValidationReport> {
    if fam.graph_n != g.order() {
        return Err(Error::param(format!(
            "family refers to {} vertices, graph has {}",
            fam.graph_n,
            g.order()
        )));
    }
    let d = fam.d;
    let mut violations = Vec::new();

    if d >= 2 {
        let power = power_graph(g, d - 1)?;
        let mut bfs = Bfs::new(g.order());
        let mut owner = vec![usize::MAX; g.order()];
        for (k, s) in fam.subsets.iter().enumerate() {
            for &v in s {
                owner[v] = k;
            }
            let mut by_bfs = BTreeSet::new();
            for &v in s {
                for (u, dist) in bfs.ball(g, v, d - 1) {
                    if u > v && owner[u] == k {
                        by_bfs.insert((v, u, dist));
                    }
                }
            }
            let by_power: BTreeSet<(usize, usize)> = s
                .iter()
                .flat_map(|&v| {
                    power
                        .neighbors(v)
                        .iter()
                        .filter(move |&&u| u > v)
                        .map(move |&u| (v, u))
                })
                .filter(|&(_, u)| owner[u] == k)
                .collect();
            if by_power != by_bfs.iter().map(|&(v, u, _)| (v, u)).collect() {
                violations.push(Violation::PowerGraphDisagreement { subset: k });
            }
            violations.extend(by_bfs.into_iter().map(|(u, v, distance)| Violation::NotStable {
                subset: k,
                u,
                v,
                distance,
            }));
            for &v in s {
                owner[v] = usize::MAX;
            }
        }
    }

    let mut coverage = vec![Rational::zero(); g.order()];
    for (w, s) in fam.iter() {
        for &v in s {
            coverage[v] += w;
        }
    }
    let one = Rational::one();
    let mut worst = Rational::zero();
    let mut covered_exactly = true;
    for (v, c) in coverage.iter().enumerate() {
        let dev = (c - &one).abs();
        if !dev.is_zero() {
            covered_exactly = false;
            violations.push(Violation::Coverage {
                vertex: v,
                coverage: c.to_string(),
            });
        }
        if dev > worst {
            worst = dev;
        }
    }

    if covered_exactly {
        let total = fam.size_weighted_sum();
        if total != rational(g.order() as i64) {
            violations.push(Violation::SumIdentity {
                expected: g.order(),
                actual: total.to_string(),
            });
        }
    }

    Ok(ValidationReport {
        valid: violations.is_empty(),
        violations,
        weight_sum: weight_sum(fam),
        worst_coverage_deviation: worst,
    })
}

/// Residue-class partitions for paths, cycles, grids and tori: vertex `i`
/// goes to class `i mod d` (grids: `(row mod d, col mod d)`).
pub fn residue_partition(spec: &GeneratorSpec, d: u32) -> Result<WeightedStableFamily> {
    if d == 0 {
        return Err(Error::param("d must be at least 1"));
    }
    let du = d as usize;
    let fallback = |why: String| {
        Error::param(format!("{why}; use greedy_power_coloring for this graph"))
    };
    let classes: Vec<Vec<usize>> = match spec {
        GeneratorSpec::Path { n } | GeneratorSpec::Cycle { n } => {
            if *n == 0 {
                return Err(Error::param("n must be at least 1"));
            }
            if matches!(spec, GeneratorSpec::Cycle { .. }) && n % du != 0 {
                return Err(fallback(format!("residues mod {d} are not {d}-stable on cycle:{n} ({d} does not divide {n})")));
            }
            (0..du.min(*n)).map(|r| (r..*n).step_by(du).collect()).collect()
        }
        GeneratorSpec::Grid { rows, cols, wrap } => {
            if *rows == 0 || *cols == 0 {
                return Err(Error::param("grid sides must be at least 1"));
            }
            if *wrap && (rows % du != 0 || cols % du != 0) {
                return Err(fallback(format!(
                    "residues mod {d} are not {d}-stable on torus:{rows}x{cols} ({d} must divide both sides)"
                )));
            }
            let mut classes = Vec::new();
            for ri in 0..du.min(*rows) {
                for rj in 0..du.min(*cols) {
                    let class = (ri..*rows)
                        .step_by(du)
                        .flat_map(|i| (rj..*cols).step_by(du).map(move |j| i * cols + j))
                        .collect();
                    classes.push(class);
                }
            }
            classes
        }
        other => {
            return Err(fallback(format!("no residue construction for {other}")));
        }
    };
    WeightedStableFamily::from_classes(d, spec.order(), classes)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColoringStrategy {
    #[default]
    Dsatur,
    LargestFirst,
}

impl FromStr for ColoringStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dsatur" => Ok(ColoringStrategy::Dsatur),
            "largest_first" | "largest-first" => Ok(ColoringStrategy::LargestFirst),
            _ => Err(Error::param(format!("unknown coloring strategy {s:?}"))),
        }
    }
}

impl fmt::Display for ColoringStrategy {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str(match self {
            ColoringStrategy::Dsatur => "dsatur",
            ColoringStrategy::LargestFirst => "largest_first",
        })
    }
}

/// Proper coloring of the `(d-1)`-th power graph; color classes become a
/// unit-weight d-stable partition.
pub fn greedy_power_coloring(g: &Graph, d: u32, strategy: ColoringStrategy) -> Result<WeightedStableFamily> {
    if d == 0 {
        return Err(Error::param("d must be at least 1"));
    }
    let n = g.order();
    if d == 1 {
        return WeightedStableFamily::from_classes(1, n, vec![(0..n).collect()]);
    }
    let h = power_graph(g, d - 1)?;
    let colors = match strategy {
        ColoringStrategy::Dsatur => dsatur(&h),
        ColoringStrategy::LargestFirst => largest_first(&h),
    };
    let count = colors.iter().max().map_or(0, |&c| c + 1);
    let mut classes = vec![Vec::new(); count];
    for (v, &c) in colors.iter().enumerate() {
        classes[c].push(v);
    }
    WeightedStableFamily::from_classes(d, n, classes)
}

fn smallest_free(used: &BTreeSet<usize>) -> usize {
    (0..).find(|c| !used.contains(c)).expect("unbounded range")
}

fn dsatur(h: &Graph) -> Vec<usize> {
    let n = h.order();
    let mut colors = vec![usize::MAX; n];
    let mut seen: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    // (saturation, degree, reversed id): the maximum is the next vertex
    let key = |v: usize, sat: usize| (sat, h.degree(v), usize::MAX - v);
    let mut queue: BTreeSet<(usize, usize, usize)> = (0..n).map(|v| key(v, 0)).collect();
    while let Some((_, _, rev)) = queue.pop_last() {
        let v = usize::MAX - rev;
        let c = smallest_free(&seen[v]);
        colors[v] = c;
        for &u in h.neighbors(v) {
            if colors[u] == usize::MAX && !seen[u].contains(&c) {
                queue.remove(&key(u, seen[u].len()));
                seen[u].insert(c);
                queue.insert(key(u, seen[u].len()));
            }
        }
    }
    colors
}

fn largest_first(h: &Graph) -> Vec<usize> {
    let n = h.order();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&v| (std::cmp::Reverse(h.degree(v)), v));
    let mut colors = vec![usize::MAX; n];
    for v in order {
        let used: BTreeSet<usize> = h
            .neighbors(v)
            .iter()
            .map(|&u| colors[u])
            .filter(|&c| c != usize::MAX)
            .collect();
        colors[v] = smallest_free(&used);
    }
    colors
}

/// Turns a fractional cover (coverage >= 1) into a partition by removing
/// over-covered vertices from the lowest-weight subsets first, splitting a
/// subset when only part of its weight is surplus. Total weight never grows.
pub(crate) fn cover_to_partition(
    d: u32,
    n: usize,
    cover: Vec<(Vec<usize>, Rational)>,
) -> Result<WeightedStableFamily> {
    let mut sets: Vec<(BTreeSet<usize>, Rational)> = cover
        .into_iter()
        .filter(|(_, w)| w.is_positive())
        .map(|(s, w)| (s.into_iter().collect(), w))
        .collect();
    let one = Rational::one();
    for v in 0..n {
        let coverage = sets
            .iter()
            .filter(|(s, _)| s.contains(&v))
            .fold(Rational::zero(), |a, (_, w)| a + w);
        if coverage < one {
            return Err(Error::param(format!("vertex {v} is under-covered ({coverage})")));
        }
        let mut excess = coverage - &one;
        if excess.is_zero() {
            continue;
        }
        let mut holders: Vec<usize> = (0..sets.len()).filter(|&k| sets[k].0.contains(&v)).collect();
        holders.sort_by(|&a, &b| sets[a].1.cmp(&sets[b].1).then(a.cmp(&b)));
        for k in holders {
            if excess.is_zero() {
                break;
            }
            if sets[k].1 <= excess {
                excess -= &sets[k].1;
                sets[k].0.remove(&v);
            } else {
                let mut reduced = sets[k].0.clone();
                reduced.remove(&v);
                sets[k].1 -= &excess;
                sets.push((reduced, excess.clone()));
                excess = Rational::zero();
            }
        }
    }
    let mut merged: BTreeMap<Vec<usize>, Rational> = BTreeMap::new();
    for (s, w) in sets {
        if s.is_empty() {
            continue;
        }
        *merged.entry(s.into_iter().collect()).or_insert_with(Rational::zero) += w;
    }
    let (subsets, weights) = merged.into_iter().unzip();
    WeightedStableFamily::new(d, n, subsets, weights)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::generate_graph;

    fn r(p: i64, q: i64) -> Rational {
        Rational::new(p.into(), q.into())
    }

    fn graph(s: &str) -> Graph {
        generate_graph(&s.parse().unwrap()).unwrap()
    }

    fn mod3_family(d: u32) -> WeightedStableFamily {
        WeightedStableFamily::from_classes(d, 10, vec![vec![0, 3, 6, 9], vec![1, 4, 7], vec![2, 5, 8]]).unwrap()
    }

    #[test]
    fn chain_residue_family_is_valid() {
        let report = validate_partition(&graph("path:10"), &mod3_family(3)).unwrap();
        assert!(report.valid, "{:?}", report.violations);
        assert_eq!(report.weight_sum, rational(3));
        assert!(report.worst_coverage_deviation.is_zero());
    }

    #[test]
    fn same_family_fails_at_d4() {
        let report = validate_partition(&graph("path:10"), &mod3_family(4)).unwrap();
        assert!(!report.valid);
        assert!(report.violations.contains(&Violation::NotStable {
            subset: 0,
            u: 0,
            v: 3,
            distance: 3
        }));
        assert!(!report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::PowerGraphDisagreement { .. })));
    }

    #[test]
    fn c5_half_weights() {
        let subsets = vec![vec![0, 2], vec![1, 3], vec![2, 4], vec![3, 0], vec![4, 1]];
        let fam = WeightedStableFamily::new(2, 5, subsets, vec![r(1, 2); 5]).unwrap();
        let report = validate_partition(&graph("cycle:5"), &fam).unwrap();
        assert!(report.valid);
        assert_eq!(report.weight_sum, r(5, 2));
        assert_eq!(weight_sum(&fam), r(5, 2));
    }

    #[test]
    fn coverage_violation_reported_exactly() {
        let fam = WeightedStableFamily::new(2, 3, vec![vec![0, 2], vec![1]], vec![r(1, 2), rational(1)]).unwrap();
        let report = validate_partition(&graph("path:3"), &fam).unwrap();
        assert!(!report.valid);
        assert_eq!(report.worst_coverage_deviation, r(1, 2));
        assert_eq!(
            report.violations,
            vec![
                Violation::Coverage { vertex: 0, coverage: "1/2".into() },
                Violation::Coverage { vertex: 2, coverage: "1/2".into() },
            ]
        );
    }

    #[test]
    fn mismatched_order_is_an_error() {
        assert!(validate_partition(&graph("path:9"), &mod3_family(3)).is_err());
    }

    #[test]
    fn zero_weights_dropped_and_negative_rejected() {
        let fam = WeightedStableFamily::new(1, 2, vec![vec![0, 1], vec![0]], vec![rational(1), rational(0)]).unwrap();
        assert_eq!(fam.len(), 1);
        assert!(WeightedStableFamily::new(1, 2, vec![vec![0, 1]], vec![rational(-1)]).is_err());
        assert!(WeightedStableFamily::new(1, 2, vec![vec![0, 5]], vec![rational(1)]).is_err());
    }

    #[test]
    fn residue_examples() {
        let fam = residue_partition(&"path:10".parse().unwrap(), 3).unwrap();
        let mut sizes: Vec<usize> = fam.subsets().iter().map(Vec::len).collect();
        sizes.sort_unstable();
        assert_eq!(sizes, vec![3, 3, 4]);
        assert_eq!(weight_sum(&fam), rational(3));

        let torus = residue_partition(&"torus:6x6".parse().unwrap(), 3).unwrap();
        assert_eq!(torus.len(), 9);
        assert_eq!(weight_sum(&torus), rational(9));
        assert!(validate_partition(&graph("torus:6x6"), &torus).unwrap().valid);

        let err = residue_partition(&"cycle:10".parse().unwrap(), 4).unwrap_err();
        assert!(err.to_string().contains("greedy_power_coloring"));
        assert!(residue_partition(&"torus:6x6".parse().unwrap(), 4).is_err());
        assert!(residue_partition(&"complete:4".parse().unwrap(), 2).is_err());
    }

    #[test]
    fn residue_on_open_grid_any_d() {
        for d in 1..=6 {
            let spec: GeneratorSpec = "grid:5x7".parse().unwrap();
            let fam = residue_partition(&spec, d).unwrap();
            let report = validate_partition(&generate_graph(&spec).unwrap(), &fam).unwrap();
            assert!(report.valid);
            let dd = d as i64;
            assert_eq!(report.weight_sum, rational(dd.min(5) * dd.min(7)));
        }
    }

    #[test]
    fn greedy_examples() {
        let fam = greedy_power_coloring(&graph("path:10"), 3, ColoringStrategy::Dsatur).unwrap();
        assert_eq!(weight_sum(&fam), rational(3));
        assert!(validate_partition(&graph("path:10"), &fam).unwrap().valid);

        let k5 = greedy_power_coloring(&graph("complete:5"), 2, ColoringStrategy::Dsatur).unwrap();
        assert_eq!(k5.len(), 5);
        assert!(k5.subsets().iter().all(|s| s.len() == 1));

        for d in 1..=4 {
            for strategy in [ColoringStrategy::Dsatur, ColoringStrategy::LargestFirst] {
                let fam = greedy_power_coloring(&graph("edgeless:10"), d, strategy).unwrap();
                assert_eq!(weight_sum(&fam), rational(1));
            }
        }
    }

    #[test]
    fn greedy_d1_is_whole_vertex_set() {
        let fam = greedy_power_coloring(&graph("complete:4"), 1, ColoringStrategy::Dsatur).unwrap();
        assert_eq!(fam.subsets(), &[vec![0, 1, 2, 3]]);
        assert!(validate_partition(&graph("complete:4"), &fam).unwrap().valid);
    }

    #[test]
    fn largest_first_valid_on_grid() {
        let g = graph("grid:6x6");
        for d in 2..=4 {
            let fam = greedy_power_coloring(&g, d, ColoringStrategy::LargestFirst).unwrap();
            assert!(validate_partition(&g, &fam).unwrap().valid);
        }
    }

    #[test]
    fn cover_shrinks_to_partition() {
        // C5 with the five maximal stable pairs at weight 1/2 plus a redundant {0}
        let mut cover: Vec<(Vec<usize>, Rational)> =
            vec![vec![0, 2], vec![1, 3], vec![2, 4], vec![0, 3], vec![1, 4]].into_iter().map(|s| (s, r(1, 2))).collect();
        cover.push((vec![0], r(1, 3)));
        let fam = cover_to_partition(2, 5, cover).unwrap();
        let report = validate_partition(&graph("cycle:5"), &fam).unwrap();
        assert!(report.valid, "{:?}", report.violations);
        assert!(report.weight_sum <= r(5, 2) + r(1, 3));
    }

    #[test]
    fn family_json_shape() {
        let fam = WeightedStableFamily::new(2, 5, vec![vec![0, 2], vec![1, 3]], vec![r(1, 2), rational(1)]).unwrap();
        let json = serde_json::to_string(&fam).unwrap();
        assert_eq!(json, r#"{"d":2,"n":5,"subsets":[[0,2],[1,3]],"weights":["1/2","1"]}"#);
        let back: WeightedStableFamily = serde_json::from_str(&json).unwrap();
        assert_eq!(back, fam);
        let inferred: WeightedStableFamily =
            serde_json::from_str(r#"{"d":3,"subsets":[[0,3],[1],[2]],"weights":["1","1","1"]}"#).unwrap();
        assert_eq!(inferred.graph_n(), 4);
    }
}
