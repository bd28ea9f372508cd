//! Immutable simple undirected graphs on vertices `0..n`.

use std::fmt;

use fixedbitset::FixedBitSet;

use crate::error::Error;

/// Default cap on the number of maximal stable sets enumerated.
pub const DEFAULT_STABLE_SET_CAP: usize = 10_000;

/// A subset of `0..n` for some fixed universe size `n`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct VertexSet(FixedBitSet);

impl VertexSet {
    pub fn new(n: usize) -> Self {
        VertexSet(FixedBitSet::with_capacity(n))
    }

    pub fn full(n: usize) -> Self {
        let mut s = FixedBitSet::with_capacity(n);
        s.insert_range(..);
        VertexSet(s)
    }

    /// Builds a set from members; panics if a member is `>= n`.
    pub fn from_members<I: IntoIterator<Item = usize>>(n: usize, members: I) -> Self {
        let mut s = VertexSet::new(n);
        for v in members {
            s.insert(v);
        }
        s
    }

    /// Universe size.
    pub fn universe(&self) -> usize {
        self.0.len()
    }

    pub fn len(&self) -> usize {
        self.0.count_ones(..)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_clear()
    }

    pub fn contains(&self, v: usize) -> bool {
        self.0.contains(v)
    }

    pub fn insert(&mut self, v: usize) {
        self.0.insert(v)
    }

    pub fn remove(&mut self, v: usize) {
        self.0.remove(v)
    }

    pub fn min(&self) -> Option<usize> {
        self.0.minimum()
    }

    pub fn max(&self) -> Option<usize> {
        self.0.maximum()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.ones()
    }

    pub fn to_vec(&self) -> Vec<usize> {
        self.iter().collect()
    }

    pub fn intersect_with(&mut self, other: &VertexSet) {
        self.0.intersect_with(&other.0)
    }

    pub fn union_with(&mut self, other: &VertexSet) {
        self.0.union_with(&other.0)
    }

    pub fn difference_with(&mut self, other: &VertexSet) {
        self.0.difference_with(&other.0)
    }

    pub fn is_subset(&self, other: &VertexSet) -> bool {
        self.0.is_subset(&other.0)
    }

    pub fn intersection_count(&self, other: &VertexSet) -> usize {
        self.0.intersection_count(&other.0)
    }

    /// Raw block view, least significant bit first.
    pub fn blocks(&self) -> &[usize] {
        self.0.as_slice()
    }
}

impl fmt::Debug for VertexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

impl fmt::Display for VertexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, v) in self.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{v}")?;
        }
        f.write_str("}")
    }
}

/// Simple undirected graph. Edges are stored sorted as `(u, v)` with `u < v`
/// alongside one neighbourhood bitset per vertex.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    adj: Vec<VertexSet>,
}

/// Result of [`Graph::induced_subgraph`]: the relabelled graph and the map
/// from new labels back to the original vertices.
#[derive(Clone, Debug)]
pub struct Induced {
    pub graph: Graph,
    pub labels: Vec<usize>,
}

/// Result of [`Graph::maximal_stable_sets`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StableSets {
    pub sets: Vec<VertexSet>,
    /// More maximal stable sets exist beyond the cap.
    pub truncated: bool,
}

impl Graph {
    /// Builds a graph, rejecting self-loops, duplicates and out-of-range
    /// endpoints. Edge orientation is irrelevant.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Graph, Error> {
        let mut adj = vec![VertexSet::new(n); n];
        let mut list = Vec::new();
        for (a, b) in edges {
            for v in [a, b] {
                if v >= n {
                    return Err(Error::VertexOutOfRange { v, n });
                }
            }
            if a == b {
                return Err(Error::SelfLoop(a));
            }
            let (u, v) = (a.min(b), a.max(b));
            if adj[u].contains(v) {
                return Err(Error::DuplicateEdge(u, v));
            }
            adj[u].insert(v);
            adj[v].insert(u);
            list.push((u, v));
        }
        list.sort_unstable();
        Ok(Graph { n, edges: list, adj })
    }

    pub fn complete(n: usize) -> Graph {
        let edges = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v)));
        Graph::new(n, edges).expect("complete graph edges are valid")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    /// Sorted edge list, each edge as `(u, v)` with `u < v`.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Panics if either vertex is out of range.
    pub fn adjacent(&self, u: usize, v: usize) -> bool {
        self.adj[u].contains(v)
    }

    /// Open neighbourhood `N(v)`. Panics if `v` is out of range.
    pub fn neighbors(&self, v: usize) -> &VertexSet {
        &self.adj[v]
    }

    /// `d(v)`. Panics if `v` is out of range; see [`Graph::checked_degree`].
    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn checked_degree(&self, v: usize) -> Result<usize, Error> {
        self.check_vertex(v)?;
        Ok(self.degree(v))
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.n).map(|v| self.degree(v)).collect()
    }

    pub fn min_degree(&self) -> Option<usize> {
        (0..self.n).map(|v| self.degree(v)).min()
    }

    pub fn is_complete(&self) -> bool {
        self.n < 2 || self.m() == self.n * (self.n - 1) / 2
    }

    pub fn is_connected(&self) -> bool {
        if self.n == 0 {
            return true;
        }
        let mut seen = VertexSet::new(self.n);
        let mut stack = vec![0];
        seen.insert(0);
        while let Some(u) = stack.pop() {
            for w in self.adj[u].iter() {
                if !seen.contains(w) {
                    seen.insert(w);
                    stack.push(w);
                }
            }
        }
        seen.len() == self.n
    }

    /// Vertices with `lo <= d(v) <= hi`.
    pub fn degree_class(&self, lo: usize, hi: usize) -> VertexSet {
        VertexSet::from_members(
            self.n,
            (0..self.n).filter(|&v| (lo..=hi).contains(&self.degree(v))),
        )
    }

    /// Subgraph induced by `s`, relabelled in ascending vertex order.
    pub fn induced_subgraph(&self, s: &VertexSet) -> Induced {
        let labels: Vec<usize> = s.iter().filter(|&v| v < self.n).collect();
        let mut index = vec![usize::MAX; self.n];
        for (i, &v) in labels.iter().enumerate() {
            index[v] = i;
        }
        let edges = self
            .edges
            .iter()
            .filter(|&&(u, v)| index[u] != usize::MAX && index[v] != usize::MAX)
            .map(|&(u, v)| (index[u], index[v]));
        let graph = Graph::new(labels.len(), edges).expect("induced edges are valid");
        Induced { graph, labels }
    }

    /// `δ^miss_S(v)`: members of `s` other than `v` that are not adjacent to `v`.
    pub fn missing_degree(&self, s: &VertexSet, v: usize) -> Result<usize, Error> {
        self.check_vertex(v)?;
        if !s.contains(v) {
            return Err(Error::NotInSet(v));
        }
        Ok(s.len() - 1 - s.intersection_count(&self.adj[v]))
    }

    /// Maximum of [`Graph::missing_degree`] over `s`; 0 for the empty set.
    pub fn max_missing_degree(&self, s: &VertexSet) -> usize {
        s.iter()
            .filter(|&v| v < self.n)
            .map(|v| s.len() - 1 - s.intersection_count(&self.adj[v]))
            .max()
            .unwrap_or(0)
    }

    pub fn is_clique(&self, s: &VertexSet) -> bool {
        let members = s.to_vec();
        members
            .iter()
            .enumerate()
            .all(|(i, &u)| members[i + 1..].iter().all(|&v| self.adjacent(u, v)))
    }

    pub fn is_stable(&self, s: &VertexSet) -> bool {
        s.iter().all(|v| s.intersection_count(&self.adj[v]) == 0)
    }

    /// Maximal independent sets via pivoting Bron–Kerbosch on the complement.
    /// Stops after `cap` sets; the enumeration order depends only on the graph.
    pub fn maximal_stable_sets(&self, cap: usize) -> StableSets {
        assert!(cap >= 1, "stable set cap must be positive");
        let n = self.n;
        let comp: Vec<VertexSet> = (0..n)
            .map(|v| {
                let mut c = VertexSet::full(n);
                c.difference_with(&self.adj[v]);
                c.remove(v);
                c
            })
            .collect();
        let mut out = StableSets { sets: Vec::new(), truncated: false };
        if n > 0 {
            let mut r = VertexSet::new(n);
            bron_kerbosch(&comp, &mut r, VertexSet::full(n), VertexSet::new(n), cap, &mut out);
        }
        out
    }

    fn check_vertex(&self, v: usize) -> Result<(), Error> {
        if v >= self.n {
            Err(Error::VertexOutOfRange { v, n: self.n })
        } else {
            Ok(())
        }
    }
}

// Returns false once the cap is exceeded.
fn bron_kerbosch(
    comp: &[VertexSet],
    r: &mut VertexSet,
    mut p: VertexSet,
    mut x: VertexSet,
    cap: usize,
    out: &mut StableSets,
) -> bool {
    if p.is_empty() && x.is_empty() {
        if out.sets.len() == cap {
            out.truncated = true;
            return false;
        }
        out.sets.push(r.clone());
        return true;
    }
    let pivot = p
        .iter()
        .chain(x.iter())
        .max_by_key(|&u| (p.intersection_count(&comp[u]), std::cmp::Reverse(u)))
        .expect("p or x is nonempty");
    let mut branch = p.clone();
    branch.difference_with(&comp[pivot]);
    for v in branch.iter() {
        let mut np = p.clone();
        np.intersect_with(&comp[v]);
        let mut nx = x.clone();
        nx.intersect_with(&comp[v]);
        r.insert(v);
        let go_on = bron_kerbosch(comp, r, np, nx, cap, out);
        r.remove(v);
        if !go_on {
            return false;
        }
        p.remove(v);
        x.insert(v);
    }
    true
}
