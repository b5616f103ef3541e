//! Finite undirected simple graphs with dense vertex ids `0..n`.
//!
//! The graph is immutable after construction. Every operator in this crate
//! takes a `&Graph` and treats vertex ids as indices into dense vectors.

use std::collections::{BTreeSet, VecDeque};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An undirected graph without self-loops or multi-edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    adjacency: Vec<Vec<usize>>,
    labels: Option<Vec<String>>,
}

/// A sorted, duplicate-free set of vertex ids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VertexSet(Vec<usize>);

impl VertexSet {
    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, v: usize) -> bool {
        self.0.binary_search(&v).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = &usize> {
        self.0.iter()
    }
}

impl Graph {
    /// Builds a graph on `n` vertices; duplicate edges collapse, self-loops and
    /// out-of-range endpoints are rejected.
    pub fn from_edge_list(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyGraph);
        }
        let mut sets = vec![BTreeSet::new(); n];
        for &(a, b) in edges {
            for v in [a, b] {
                if v >= n {
                    return Err(Error::VertexOutOfRange { vertex: v, n });
                }
            }
            if a == b {
                return Err(Error::SelfLoop(a));
            }
            sets[a].insert(b);
            sets[b].insert(a);
        }
        Ok(Graph {
            adjacency: sets.into_iter().map(|s| s.into_iter().collect()).collect(),
            labels: None,
        })
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.vertex_count() {
            return Err(Error::LengthMismatch {
                expected: self.vertex_count(),
                got: labels.len(),
            });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn vertex_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn vertices(&self) -> std::ops::Range<usize> {
        0..self.vertex_count()
    }

    /// Sorted neighbors of `v`. Panics if `v` is out of range.
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    pub fn check_vertex(&self, v: usize) -> Result<()> {
        if v < self.vertex_count() {
            Ok(())
        } else {
            Err(Error::VertexOutOfRange {
                vertex: v,
                n: self.vertex_count(),
            })
        }
    }

    pub fn is_adjacent(&self, v: usize, w: usize) -> bool {
        self.adjacency[v].binary_search(&w).is_ok()
    }

    /// Canonical edge list: pairs `(i, j)` with `i < j`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.edge_count());
        for (v, nb) in self.adjacency.iter().enumerate() {
            for &w in nb {
                if v < w {
                    out.push((v, w));
                }
            }
        }
        out
    }

    /// Breadth-first distances from `source`; `None` marks unreachable vertices.
    pub fn distances_from(&self, source: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.vertex_count()];
        dist[source] = Some(0);
        let mut queue = VecDeque::from([source]);
        while let Some(v) = queue.pop_front() {
            let dv = dist[v].unwrap();
            for &w in &self.adjacency[v] {
                if dist[w].is_none() {
                    dist[w] = Some(dv + 1);
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    /// Path distance; `None` stands for infinity (no path).
    pub fn distance(&self, x: usize, y: usize) -> Option<usize> {
        self.distances_from(x)[y]
    }

    pub fn distance_matrix(&self) -> Vec<Vec<Option<usize>>> {
        self.vertices().map(|v| self.distances_from(v)).collect()
    }

    pub fn is_connected(&self) -> bool {
        self.distances_from(0).iter().all(Option::is_some)
    }

    pub fn diameter(&self) -> Option<usize> {
        let mut best = 0;
        for v in self.vertices() {
            for d in self.distances_from(v) {
                best = best.max(d?);
            }
        }
        Some(best)
    }

    /// All vertices within distance `r` of `v`.
    pub fn ball(&self, v: usize, r: usize) -> VertexSet {
        let ids = self
            .distances_from(v)
            .into_iter()
            .enumerate()
            .filter_map(|(w, d)| d.filter(|&d| d <= r).map(|_| w))
            .collect();
        VertexSet(ids)
    }

    /// `{v} ∪ neighbors(v)`, with `v` first and neighbors in ascending order.
    pub fn closed_neighborhood(&self, v: usize) -> Vec<usize> {
        std::iter::once(v)
            .chain(self.adjacency[v].iter().copied())
            .collect()
    }

    pub fn is_regular(&self) -> Option<usize> {
        let d = self.degree(0);
        self.vertices().all(|v| self.degree(v) == d).then_some(d)
    }
}

// ---------------------------------------------------------------------------
// Named families
// ---------------------------------------------------------------------------

impl Graph {
    pub fn cycle(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidParameter(format!("cycle needs n >= 3, got {n}")));
        }
        Graph::from_edge_list(n, &(0..n).map(|i| (i, (i + 1) % n)).collect::<Vec<_>>())
    }

    pub fn path(n: usize) -> Result<Self> {
        let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        Graph::from_edge_list(n, &edges)
    }

    /// Star with one center (vertex 0) and `leaves` leaves.
    pub fn star(leaves: usize) -> Result<Self> {
        let edges: Vec<_> = (1..=leaves).map(|i| (0, i)).collect();
        Graph::from_edge_list(leaves + 1, &edges)
    }

    pub fn complete(n: usize) -> Result<Self> {
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                edges.push((i, j));
            }
        }
        Graph::from_edge_list(n, &edges)
    }

    /// Erdős–Rényi `G(n, p)`; with `connected` it resamples until connected.
    pub fn random_gnp<R: rand::Rng>(n: usize, p: f64, connected: bool, rng: &mut R) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) || (connected && n > 1 && p == 0.0) {
            return Err(Error::InvalidParameter(format!("edge probability {p} unusable")));
        }
        loop {
            let mut edges = Vec::new();
            for i in 0..n {
                for j in i + 1..n {
                    if rng.random::<f64>() < p {
                        edges.push((i, j));
                    }
                }
            }
            let g = Graph::from_edge_list(n, &edges)?;
            if !connected || g.is_connected() {
                return Ok(g);
            }
        }
    }

    /// Discrete torus `Z_a × Z_b` with the four axis generators.
    pub fn torus(a: usize, b: usize) -> Result<Self> {
        cayley_abelian(&[a, b], &[vec![1, 0], vec![0, 1]])
    }

    /// Hypercube `Q_k` as the Cayley graph of `Z_2^k`.
    pub fn hypercube(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter("hypercube dimension must be >= 1".into()));
        }
        let gens: Vec<Vec<i64>> = (0..k)
            .map(|i| (0..k).map(|j| i64::from(i == j)).collect())
            .collect();
        cayley_abelian(&vec![2; k], &gens)
    }

    /// Parses built-in names: `cycleN`, `pathN`, `starN` (N leaves), `completeN`,
    /// `torusAxB`, `hypercubeK`, and `k2` as an alias for `complete2`.
    pub fn named(name: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("unknown built-in graph `{name}`"));
        let num = |s: &str| s.parse::<usize>().map_err(|_| bad());
        if name.eq_ignore_ascii_case("k2") {
            return Graph::complete(2);
        }
        if let Some(rest) = name.strip_prefix("cycle") {
            Graph::cycle(num(rest)?)
        } else if let Some(rest) = name.strip_prefix("path") {
            Graph::path(num(rest)?)
        } else if let Some(rest) = name.strip_prefix("star") {
            Graph::star(num(rest)?)
        } else if let Some(rest) = name.strip_prefix("complete") {
            Graph::complete(num(rest)?)
        } else if let Some(rest) = name.strip_prefix("hypercube") {
            Graph::hypercube(num(rest)?)
        } else if let Some(rest) = name.strip_prefix("torus") {
            let (a, b) = rest.split_once('x').ok_or_else(bad)?;
            Graph::torus(num(a)?, num(b)?)
        } else {
            Err(bad())
        }
    }
}

/// Cayley graph of `Z_{orders[0]} × Z_{orders[1]} × …` with the symmetrized
/// generator set `S ∪ -S`.
///
/// Vertices are numbered in mixed radix with the first coordinate varying
/// slowest.
pub fn cayley_abelian(orders: &[usize], generators: &[Vec<i64>]) -> Result<Graph> {
    if orders.is_empty() || orders.contains(&0) {
        return Err(Error::InvalidParameter("group orders must be positive".into()));
    }
    let n: usize = orders.iter().product();
    let reduce = |g: &[i64]| -> Vec<usize> {
        g.iter()
            .zip(orders)
            .map(|(&c, &m)| c.rem_euclid(m as i64) as usize)
            .collect()
    };

    let mut gens = BTreeSet::new();
    for (index, g) in generators.iter().enumerate() {
        if g.len() != orders.len() {
            return Err(Error::GeneratorArity {
                index,
                expected: orders.len(),
                got: g.len(),
            });
        }
        let r = reduce(g);
        if r.iter().all(|&c| c == 0) {
            return Err(Error::ZeroGenerator);
        }
        let neg: Vec<i64> = g.iter().map(|c| -c).collect();
        gens.insert(r);
        gens.insert(reduce(&neg));
    }

    let decode = |mut id: usize| -> Vec<usize> {
        let mut c = vec![0; orders.len()];
        for k in (0..orders.len()).rev() {
            c[k] = id % orders[k];
            id /= orders[k];
        }
        c
    };
    let encode = |c: &[usize]| c.iter().zip(orders).fold(0, |acc, (&x, &m)| acc * m + x);

    let mut edges = Vec::new();
    for v in 0..n {
        let cv = decode(v);
        for g in &gens {
            let w: Vec<usize> = cv
                .iter()
                .zip(g)
                .zip(orders)
                .map(|((&a, &b), &m)| (a + b) % m)
                .collect();
            edges.push((v, encode(&w)));
        }
    }
    Graph::from_edge_list(n, &edges)
}

// ---------------------------------------------------------------------------
// File formats
// ---------------------------------------------------------------------------

/// Structured graph document: `{"n": 4, "edges": [[0,1],...], "labels": [...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphDocument {
    pub n: usize,
    pub edges: Vec<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}

impl Graph {
    /// Plain edge list: one `i j` pair per line, 0-based, `#` starts a comment.
    /// The vertex count is one more than the largest id seen, unless a
    /// `# n = N` header raises it.
    pub fn parse_edge_list(text: &str) -> Result<Self> {
        let mut edges = Vec::new();
        let mut n = 0usize;
        for (lineno, raw) in text.lines().enumerate() {
            if let Some(comment) = raw.trim().strip_prefix('#') {
                if let Some(v) = comment.trim().strip_prefix("n =") {
                    let declared = v.trim().parse::<usize>().map_err(|_| {
                        Error::Parse(format!("line {}: bad vertex-count header", lineno + 1))
                    })?;
                    n = n.max(declared);
                }
                continue;
            }
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 2 {
                return Err(Error::Parse(format!(
                    "line {}: expected `i j`, got `{line}`",
                    lineno + 1
                )));
            }
            let parse = |s: &str| {
                s.parse::<usize>()
                    .map_err(|_| Error::Parse(format!("line {}: bad vertex id `{s}`", lineno + 1)))
            };
            let (a, b) = (parse(parts[0])?, parse(parts[1])?);
            n = n.max(a + 1).max(b + 1);
            edges.push((a, b));
        }
        Graph::from_edge_list(n, &edges)
    }

    /// Inverse of [`Graph::parse_edge_list`] in canonical edge order.
    pub fn to_edge_list(&self) -> String {
        let mut s = format!("# n = {}\n", self.vertex_count());
        for (a, b) in self.edges() {
            writeln!(s, "{a} {b}").unwrap();
        }
        s
    }

    pub fn from_document(doc: &GraphDocument) -> Result<Self> {
        let edges: Vec<_> = doc.edges.iter().map(|e| (e[0], e[1])).collect();
        let g = Graph::from_edge_list(doc.n, &edges)?;
        match &doc.labels {
            Some(l) => g.with_labels(l.clone()),
            None => Ok(g),
        }
    }

    pub fn to_document(&self) -> GraphDocument {
        GraphDocument {
            n: self.vertex_count(),
            edges: self.edges().into_iter().map(|(a, b)| [a, b]).collect(),
            labels: self.labels.clone(),
        }
    }

    pub fn parse_json(text: &str) -> Result<Self> {
        let doc: GraphDocument =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        Graph::from_document(&doc)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_document()).expect("graph document serializes")
    }

    /// Parses either format, sniffing for a leading `{`.
    pub fn parse_any(text: &str) -> Result<Self> {
        if text.trim_start().starts_with('{') {
            Graph::parse_json(text)
        } else {
            Graph::parse_edge_list(text)
        }
    }
}
