//! Ground truth: order verification and brute-force enumeration.

use num_rational::Ratio;

use crate::error::Error;
use crate::graph::Graph;

/// Enumeration above this many vertices is flagged as oversized.
pub const ENUMERATION_WARN_N: usize = 10;

/// A graph together with the dimension `K`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    pub graph: Graph,
    pub k: usize,
}

impl Instance {
    pub fn new(graph: Graph, k: usize) -> Result<Instance, Error> {
        if k == 0 {
            return Err(Error::InvalidArgument("dimension K must be at least 1".into()));
        }
        if graph.n() == 0 {
            return Err(Error::InvalidArgument("instance needs at least one vertex".into()));
        }
        Ok(Instance { graph, k })
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }
}

/// A vertex order: `ranks[r]` is the vertex at position `r`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DmdgpOrder {
    ranks: Vec<usize>,
}

impl DmdgpOrder {
    /// Accepts only permutations of `0..len`.
    pub fn new(ranks: Vec<usize>) -> Result<DmdgpOrder, Error> {
        let n = ranks.len();
        let mut seen = vec![false; n];
        for &v in &ranks {
            if v >= n || std::mem::replace(&mut seen[v], true) {
                return Err(Error::NotPermutation(n));
            }
        }
        Ok(DmdgpOrder { ranks })
    }

    pub fn len(&self) -> usize {
        self.ranks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranks.is_empty()
    }

    /// Vertices by position.
    pub fn vertices(&self) -> &[usize] {
        &self.ranks
    }

    /// `r_v` for every vertex.
    pub fn rank_of(&self) -> Vec<usize> {
        let mut r = vec![0; self.ranks.len()];
        for (pos, &v) in self.ranks.iter().enumerate() {
            r[v] = pos;
        }
        r
    }

    pub fn reversed(&self) -> DmdgpOrder {
        DmdgpOrder { ranks: self.ranks.iter().rev().copied().collect() }
    }
}

/// Window test: every pair of positions at most `K` apart holds adjacent vertices.
pub fn verify_order(inst: &Instance, order: &DmdgpOrder) -> Result<bool, Error> {
    if order.len() != inst.n() {
        return Err(Error::NotPermutation(inst.n()));
    }
    let o = order.vertices();
    let g = &inst.graph;
    Ok((0..o.len()).all(|i| (i + 1..o.len().min(i + inst.k + 1)).all(|j| g.adjacent(o[i], o[j]))))
}

/// The two-part definition read literally: the first `K` vertices form a
/// clique, and every later vertex is adjacent to its `K` immediate
/// predecessors. Kept as a second route to [`verify_order`].
pub fn verify_order_literal(inst: &Instance, order: &DmdgpOrder) -> Result<bool, Error> {
    if order.len() != inst.n() {
        return Err(Error::NotPermutation(inst.n()));
    }
    let o = order.vertices();
    let g = &inst.graph;
    let head = inst.k.min(o.len());
    let initial = crate::graph::VertexSet::from_members(inst.n(), o[..head].iter().copied());
    if !g.is_clique(&initial) {
        return Ok(false);
    }
    for r in inst.k..o.len() {
        if !(r - inst.k..r).all(|p| g.adjacent(o[p], o[r])) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Output of [`enumerate_orders`].
#[derive(Clone, Debug)]
pub struct Enumeration {
    /// The first `limit` orders in lexicographic order.
    pub orders: Vec<DmdgpOrder>,
    /// Exact number of orders.
    pub count: u64,
    /// `count` exceeds the number of stored orders.
    pub truncated: bool,
    /// `n` exceeds [`ENUMERATION_WARN_N`].
    pub oversized: bool,
}

/// All DMDGP orders in lexicographic order, storing at most `limit` of them.
/// Prefixes violating the window condition are pruned.
pub fn enumerate_orders(inst: &Instance, limit: usize) -> Enumeration {
    let n = inst.n();
    let mut out = Enumeration {
        orders: Vec::new(),
        count: 0,
        truncated: false,
        oversized: n > ENUMERATION_WARN_N,
    };
    let mut prefix = Vec::with_capacity(n);
    let mut used = vec![false; n];
    extend(inst, &mut prefix, &mut used, &mut |o| {
        out.count += 1;
        if out.orders.len() < limit {
            out.orders.push(DmdgpOrder { ranks: o.to_vec() });
        } else {
            out.truncated = true;
        }
        true
    });
    out
}

/// First order in lexicographic order, if any.
pub fn first_order(inst: &Instance) -> Option<DmdgpOrder> {
    let n = inst.n();
    let mut found = None;
    extend(inst, &mut Vec::with_capacity(n), &mut vec![false; n], &mut |o| {
        found = Some(DmdgpOrder { ranks: o.to_vec() });
        false
    });
    found
}

// The visitor returns false to stop the search; so does this function.
fn extend(
    inst: &Instance,
    prefix: &mut Vec<usize>,
    used: &mut [bool],
    visit: &mut dyn FnMut(&[usize]) -> bool,
) -> bool {
    let n = inst.n();
    if prefix.len() == n {
        return visit(prefix);
    }
    let lo = prefix.len().saturating_sub(inst.k);
    for v in 0..n {
        if used[v] || !prefix[lo..].iter().all(|&u| inst.graph.adjacent(u, v)) {
            continue;
        }
        used[v] = true;
        prefix.push(v);
        let go_on = extend(inst, prefix, used, visit);
        prefix.pop();
        used[v] = false;
        if !go_on {
            return false;
        }
    }
    true
}

/// Lower bound `(n - 1/2) K - K^2 / 2` on the edge count of a graph with a
/// DMDGP order.
pub fn min_edges_bound(n: usize, k: usize) -> Ratio<i64> {
    let (n, k) = (n as i64, k as i64);
    Ratio::new((2 * n - 1) * k - k * k, 2)
}

/// Lowest degree a vertex at position `r` can have in an order of `n` vertices.
pub fn required_degree(r: usize, n: usize, k: usize) -> usize {
    r.min(k) + (n - 1 - r).min(k)
}
