//! Undirected loopless graphs, generators, BFS distances and power graphs.

use crate::error::{Error, Result};
use crate::rng::CounterStream;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

/// Largest order for which a full distance matrix is materialized.
pub const MAX_ALL_PAIRS: usize = 20_000;

/// Shortest-path length. Unreachable pairs carry a dedicated sentinel that
/// compares greater than every finite distance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Distance(u32);

impl Distance {
    pub const UNREACHABLE: Distance = Distance(u32::MAX);

    pub fn finite(d: u32) -> Self {
        assert!(d != u32::MAX, "distance overflow");
        Distance(d)
    }

    pub fn is_reachable(self) -> bool {
        self != Self::UNREACHABLE
    }

    pub fn value(self) -> Option<u32> {
        self.is_reachable().then_some(self.0)
    }

    /// `dist >= d`; always true for unreachable pairs.
    pub fn at_least(self, d: u32) -> bool {
        !self.is_reachable() || self.0 >= d
    }
}

impl fmt::Display for Distance {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        match self.value() {
            Some(d) => write!(f, "{d}"),
            None => f.write_str("inf"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DistanceRow {
    pub source: usize,
    pub dist: Vec<Distance>,
}

impl DistanceRow {
    pub fn get(&self, v: usize) -> Distance {
        self.dist[v]
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    adjacency: Vec<Vec<usize>>,
    pub label: Option<String>,
}

impl Graph {
    /// Builds a graph from an edge list. Duplicates are dropped; self-loops
    /// and out-of-range endpoints are rejected.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut adjacency = vec![Vec::new(); n];
        for (u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::param(format!("edge {u}-{v} out of range for n={n}")));
            }
            if u == v {
                return Err(Error::param(format!("self-loop at vertex {u}")));
            }
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        for list in &mut adjacency {
            list.sort_unstable();
            list.dedup();
        }
        Ok(Graph {
            n,
            adjacency,
            label: None,
        })
    }

    pub fn edgeless(n: usize) -> Self {
        Graph {
            n,
            adjacency: vec![Vec::new(); n],
            label: None,
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adjacency.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adjacency[u].binary_search(&v).is_ok()
    }

    /// Edges as `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(u, list)| list.iter().filter(move |&&v| v > u).map(move |&v| (u, v)))
    }

    /// Number of connected components.
    pub fn component_count(&self) -> usize {
        let mut seen = vec![false; self.n];
        let mut count = 0;
        let mut stack = Vec::new();
        for s in 0..self.n {
            if seen[s] {
                continue;
            }
            count += 1;
            seen[s] = true;
            stack.push(s);
            while let Some(u) = stack.pop() {
                for &w in &self.adjacency[u] {
                    if !seen[w] {
                        seen[w] = true;
                        stack.push(w);
                    }
                }
            }
        }
        count
    }

    /// Edge-list text: header `n m`, then one `u v` line per edge.
    pub fn to_edge_list(&self) -> String {
        let mut out = format!("{} {}\n", self.n, self.edge_count());
        for (u, v) in self.edges() {
            out.push_str(&format!("{u} {v}\n"));
        }
        out
    }

    fn check_vertex(&self, v: usize) -> Result<()> {
        if v >= self.n {
            return Err(Error::param(format!("vertex {v} out of range for n={}", self.n)));
        }
        Ok(())
    }
}

/// Parses the edge-list format: first line `n m`, then `m` lines `u v`.
pub fn load_graph(text: &str) -> Result<Graph> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());

    let (header_line, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        message: "missing header \"n m\"".into(),
    })?;
    let [n, m] = parse_pair(header_line, header)?;
    if n == 0 {
        return Err(Error::Parse {
            line: header_line,
            message: "graph must have at least one vertex".into(),
        });
    }

    let mut edges = Vec::with_capacity(m);
    for (line, text) in lines {
        let [u, v] = parse_pair(line, text)?;
        if u >= n || v >= n {
            return Err(Error::Parse {
                line,
                message: format!("vertex index out of range for n={n}"),
            });
        }
        if u == v {
            return Err(Error::Parse {
                line,
                message: format!("self-loop at vertex {u}"),
            });
        }
        edges.push((u, v));
    }
    if edges.len() != m {
        return Err(Error::Parse {
            line: header_line,
            message: format!("header declares {m} edges, found {}", edges.len()),
        });
    }
    Graph::from_edges(n, edges)
}

fn parse_pair(line: usize, text: &str) -> Result<[usize; 2]> {
    let fields: Vec<&str> = text.split_whitespace().collect();
    if fields.len() != 2 {
        return Err(Error::Parse {
            line,
            message: format!("expected two integers, got {:?}", text),
        });
    }
    let mut out = [0; 2];
    for (slot, field) in out.iter_mut().zip(&fields) {
        *slot = field.parse().map_err(|_| Error::Parse {
            line,
            message: format!("not a non-negative integer: {field:?}"),
        })?;
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeneratorSpec {
    Path {
        n: usize,
    },
    Cycle {
        n: usize,
    },
    Grid {
        rows: usize,
        cols: usize,
        #[serde(default)]
        wrap: bool,
    },
    CliqueUnion {
        sizes: Vec<usize>,
    },
    ErdosRenyi {
        n: usize,
        p: f64,
        #[serde(default)]
        seed: u64,
    },
}

impl GeneratorSpec {
    pub fn order(&self) -> usize {
        match self {
            GeneratorSpec::Path { n } | GeneratorSpec::Cycle { n } => *n,
            GeneratorSpec::ErdosRenyi { n, .. } => *n,
            GeneratorSpec::Grid { rows, cols, .. } => rows * cols,
            GeneratorSpec::CliqueUnion { sizes } => sizes.iter().sum(),
        }
    }

    /// Whether every vertex looks the same (identical local neighborhoods).
    pub fn is_vertex_transitive(&self) -> bool {
        match self {
            GeneratorSpec::Cycle { .. } => true,
            GeneratorSpec::Path { n } => *n <= 2,
            GeneratorSpec::Grid { rows, cols, wrap } => *wrap || (*rows == 1 && *cols <= 2) || (*cols == 1 && *rows <= 2),
            GeneratorSpec::CliqueUnion { sizes } => sizes.windows(2).all(|w| w[0] == w[1]),
            GeneratorSpec::ErdosRenyi { p, .. } => *p == 0.0 || *p == 1.0,
        }
    }
}

impl fmt::Display for GeneratorSpec {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        match self {
            GeneratorSpec::Path { n } => write!(f, "path:{n}"),
            GeneratorSpec::Cycle { n } => write!(f, "cycle:{n}"),
            GeneratorSpec::Grid { rows, cols, wrap: false } => write!(f, "grid:{rows}x{cols}"),
            GeneratorSpec::Grid { rows, cols, wrap: true } => write!(f, "torus:{rows}x{cols}"),
            GeneratorSpec::CliqueUnion { sizes } => {
                let parts: Vec<String> = sizes.iter().map(ToString::to_string).collect();
                write!(f, "cliques:{}", parts.join(","))
            }
            GeneratorSpec::ErdosRenyi { n, p, seed } => write!(f, "er:{n}:{p}:{seed}"),
        }
    }
}

impl FromStr for GeneratorSpec {
    type Err = Error;

    /// Command-line shorthand: `path:10`, `cycle:6`, `grid:3x4`,
    /// `torus:20x20`, `cliques:2,2`, `complete:5`, `edgeless:10`,
    /// `er:10:0.3:7`. A JSON object is also accepted.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.starts_with('{') {
            return Ok(serde_json::from_str(s)?);
        }
        let bad = || Error::param(format!("unrecognized graph spec {s:?}"));
        let (kind, rest) = s.split_once(':').ok_or_else(bad)?;
        let int = |t: &str| t.trim().parse::<usize>().map_err(|_| bad());
        let dims = |t: &str| -> Result<(usize, usize)> {
            let (r, c) = t.split_once(['x', 'X']).ok_or_else(bad)?;
            Ok((int(r)?, int(c)?))
        };
        Ok(match kind {
            "path" => GeneratorSpec::Path { n: int(rest)? },
            "cycle" => GeneratorSpec::Cycle { n: int(rest)? },
            "grid" => {
                let (rows, cols) = dims(rest)?;
                GeneratorSpec::Grid { rows, cols, wrap: false }
            }
            "torus" => {
                let (rows, cols) = dims(rest)?;
                GeneratorSpec::Grid { rows, cols, wrap: true }
            }
            "cliques" | "clique_union" => GeneratorSpec::CliqueUnion {
                sizes: rest.split(',').map(int).collect::<Result<_>>()?,
            },
            "complete" => GeneratorSpec::CliqueUnion { sizes: vec![int(rest)?] },
            "edgeless" => GeneratorSpec::ErdosRenyi {
                n: int(rest)?,
                p: 0.0,
                seed: 0,
            },
            "er" | "erdos_renyi" => {
                let parts: Vec<&str> = rest.split(':').collect();
                if parts.len() < 2 || parts.len() > 3 {
                    return Err(bad());
                }
                GeneratorSpec::ErdosRenyi {
                    n: int(parts[0])?,
                    p: parts[1].trim().parse().map_err(|_| bad())?,
                    seed: parts.get(2).map(|t| t.trim().parse()).transpose().map_err(|_| bad())?.unwrap_or(0),
                }
            }
            _ => return Err(bad()),
        })
    }
}

pub fn generate_graph(spec: &GeneratorSpec) -> Result<Graph> {
    let positive = |name: &str, v: usize| {
        if v == 0 {
            Err(Error::param(format!("{name} must be at least 1")))
        } else {
            Ok(())
        }
    };
    let graph = match spec {
        GeneratorSpec::Path { n } => {
            positive("n", *n)?;
            Graph::from_edges(*n, (1..*n).map(|v| (v - 1, v)))?
        }
        GeneratorSpec::Cycle { n } => {
            positive("n", *n)?;
            let n = *n;
            let mut edges: Vec<_> = (1..n).map(|v| (v - 1, v)).collect();
            if n > 2 {
                edges.push((n - 1, 0));
            }
            Graph::from_edges(n, edges)?
        }
        GeneratorSpec::Grid { rows, cols, wrap } => {
            positive("rows", *rows)?;
            positive("cols", *cols)?;
            let (rows, cols) = (*rows, *cols);
            let id = |i: usize, j: usize| i * cols + j;
            let mut edges = Vec::new();
            for i in 0..rows {
                for j in 0..cols {
                    if j + 1 < cols {
                        edges.push((id(i, j), id(i, j + 1)));
                    } else if *wrap && cols > 2 {
                        edges.push((id(i, j), id(i, 0)));
                    }
                    if i + 1 < rows {
                        edges.push((id(i, j), id(i + 1, j)));
                    } else if *wrap && rows > 2 {
                        edges.push((id(i, j), id(0, j)));
                    }
                }
            }
            Graph::from_edges(rows * cols, edges)?
        }
        GeneratorSpec::CliqueUnion { sizes } => {
            if sizes.is_empty() {
                return Err(Error::param("clique_union needs at least one clique"));
            }
            let mut edges = Vec::new();
            let mut offset = 0;
            for &size in sizes {
                positive("clique size", size)?;
                for a in 0..size {
                    for b in a + 1..size {
                        edges.push((offset + a, offset + b));
                    }
                }
                offset += size;
            }
            Graph::from_edges(offset, edges)?
        }
        GeneratorSpec::ErdosRenyi { n, p, seed } => {
            positive("n", *n)?;
            if !(0.0..=1.0).contains(p) {
                return Err(Error::param(format!("edge probability {p} outside [0,1]")));
            }
            let n = *n;
            let mut edges = Vec::new();
            // one coin per unordered pair, keyed by (seed, u, v)
            for u in 0..n {
                let mut coins = CounterStream::new(*seed, u as u64);
                coins.seek(u as u64 + 1);
                for v in u + 1..n {
                    if coins.next_unit() < *p {
                        edges.push((u, v));
                    }
                }
            }
            Graph::from_edges(n, edges)?
        }
    };
    Ok(graph.with_label(spec.to_string()))
}

/// Reusable breadth-first search buffers.
#[derive(Debug)]
pub struct Bfs {
    stamp: Vec<u32>,
    depth: Vec<u32>,
    epoch: u32,
    queue: VecDeque<usize>,
}

impl Bfs {
    pub fn new(n: usize) -> Self {
        Bfs {
            stamp: vec![0; n],
            depth: vec![0; n],
            epoch: 0,
            queue: VecDeque::new(),
        }
    }

    /// Vertices within `radius` of `source`, with their distances, in BFS
    /// order (source first).
    pub fn ball(&mut self, g: &Graph, source: usize, radius: u32) -> Vec<(usize, u32)> {
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.stamp.iter_mut().for_each(|s| *s = 0);
            self.epoch = 1;
        }
        let epoch = self.epoch;
        let mut out = vec![(source, 0)];
        self.stamp[source] = epoch;
        self.depth[source] = 0;
        self.queue.clear();
        self.queue.push_back(source);
        while let Some(u) = self.queue.pop_front() {
            let du = self.depth[u];
            if du >= radius {
                continue;
            }
            for &w in g.neighbors(u) {
                if self.stamp[w] != epoch {
                    self.stamp[w] = epoch;
                    self.depth[w] = du + 1;
                    out.push((w, du + 1));
                    self.queue.push_back(w);
                }
            }
        }
        out
    }
}

pub fn distances_from(g: &Graph, v: usize) -> Result<DistanceRow> {
    g.check_vertex(v)?;
    let mut dist = vec![Distance::UNREACHABLE; g.order()];
    let mut bfs = Bfs::new(g.order());
    for (u, d) in bfs.ball(g, v, u32::MAX - 1) {
        dist[u] = Distance::finite(d);
    }
    Ok(DistanceRow { source: v, dist })
}

/// Lazily filled per-source BFS rows, safe to share across threads.
#[derive(Debug)]
pub struct DistanceCache<'g> {
    graph: &'g Graph,
    rows: Vec<OnceLock<DistanceRow>>,
}

impl<'g> DistanceCache<'g> {
    pub fn new(graph: &'g Graph) -> Self {
        DistanceCache {
            graph,
            rows: (0..graph.order()).map(|_| OnceLock::new()).collect(),
        }
    }

    pub fn row(&self, v: usize) -> Result<&DistanceRow> {
        self.graph.check_vertex(v)?;
        Ok(self.rows[v].get_or_init(|| distances_from(self.graph, v).expect("vertex checked")))
    }

    pub fn distance(&self, u: usize, v: usize) -> Result<Distance> {
        Ok(self.row(u)?.get(v))
    }
}

/// Full distance matrix; refused above [`MAX_ALL_PAIRS`] vertices.
pub fn all_pairs_distances(g: &Graph) -> Result<Vec<DistanceRow>> {
    if g.order() > MAX_ALL_PAIRS {
        return Err(Error::SizeGuard {
            what: "graph order for all-pairs distances",
            actual: g.order(),
            limit: MAX_ALL_PAIRS,
        });
    }
    (0..g.order()).map(|v| distances_from(g, v)).collect()
}

/// The `p`-th power: same vertices, an edge for every pair at distance
/// `1..=p`.
pub fn power_graph(g: &Graph, p: u32) -> Result<Graph> {
    if p == 0 {
        return Err(Error::param("power must be at least 1"));
    }
    if p == 1 {
        return Ok(g.clone());
    }
    let mut bfs = Bfs::new(g.order());
    let adjacency = (0..g.order())
        .map(|v| {
            let mut list: Vec<usize> = bfs.ball(g, v, p).into_iter().skip(1).map(|(u, _)| u).collect();
            list.sort_unstable();
            list
        })
        .collect();
    Ok(Graph {
        n: g.order(),
        adjacency,
        label: g.label.as_ref().map(|l| format!("{l}^{p}")),
    })
}
