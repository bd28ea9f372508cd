//! Infeasibility checks, rank-domain reduction, symmetry breaking and
//! stable-set valid inequalities, all computed before search.
//!
//! Several rules are stated here through the required degree of a rank,
//! `req(r) = min(r, K) + min(n-1-r, K)`: in any DMDGP order the vertex at
//! rank `r` is adjacent to at least `req(r)` vertices. For `n >= 2K + 1` the
//! resulting sets coincide with the closed forms `[d-K] ∪ [n-1-(d-K), n-1]`
//! and `2(δ+1)+1`; for smaller `n` the closed forms would cut off valid
//! orders, so only the `req` form is used.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};

use num_rational::Ratio;

use crate::error::Error;
use crate::graph::{Graph, StableSets, VertexSet, DEFAULT_STABLE_SET_CAP};
use crate::oracle::{self, required_degree, Instance};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CheckId {
    MinDegree,
    MinEdges,
    SmallDegreeUb,
    LargeDegreeLb,
    MaxStableSet,
    /// A reduced rank domain came out empty.
    EmptyDomain,
}

impl CheckId {
    pub fn label(self) -> &'static str {
        match self {
            CheckId::MinDegree => "check1",
            CheckId::MinEdges => "check2",
            CheckId::SmallDegreeUb => "check3",
            CheckId::LargeDegreeLb => "check4",
            CheckId::MaxStableSet => "check5",
            CheckId::EmptyDomain => "domain",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Witness {
    /// `degree < required`.
    Vertex { v: usize, degree: usize, required: usize },
    EdgeCount { m: usize, bound: Ratio<i64> },
    /// `count = |V^{d[K, K+delta]}| >= threshold`.
    SmallDegree { delta: usize, count: usize, threshold: usize },
    /// `count = |V^{d[2K, n-1]}| <= limit`.
    LargeDegree { count: usize, limit: usize },
    StableSet { set: VertexSet, threshold: Ratio<i64> },
    EmptyDomain { v: usize },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Unknown,
    Infeasible { check: CheckId, witness: Witness },
}

impl Verdict {
    pub fn is_infeasible(&self) -> bool {
        matches!(self, Verdict::Infeasible { .. })
    }

    pub fn check(&self) -> Option<CheckId> {
        match self {
            Verdict::Infeasible { check, .. } => Some(*check),
            Verdict::Unknown => None,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let Verdict::Infeasible { check, witness } = self else {
            return f.write_str("unknown");
        };
        write!(f, "infeasible by {}: ", check.label())?;
        match witness {
            Witness::Vertex { v, degree, required } => {
                write!(f, "d({v}) = {degree} < {required}")
            }
            Witness::EdgeCount { m, bound } => write!(f, "m = {m} < bound {bound}"),
            Witness::SmallDegree { delta, count, threshold } => {
                write!(f, "delta = {delta}, {count} small-degree vertices >= threshold {threshold}")
            }
            Witness::LargeDegree { count, limit } => {
                write!(f, "{count} large-degree vertices <= {limit}")
            }
            Witness::StableSet { set, threshold } => {
                write!(f, "stable set {set} of size {} > {threshold}", set.len())
            }
            Witness::EmptyDomain { v } => write!(f, "rank domain of {v} is empty"),
        }
    }
}

/// Check 1: some vertex has degree below `min(K, n-1)`.
pub fn check_min_degree(inst: &Instance) -> Verdict {
    let g = &inst.graph;
    let required = inst.k.min(g.n() - 1);
    match (0..g.n()).find(|&v| g.degree(v) < required) {
        Some(v) => Verdict::Infeasible {
            check: CheckId::MinDegree,
            witness: Witness::Vertex { v, degree: g.degree(v), required },
        },
        None => Verdict::Unknown,
    }
}

/// Check 2: fewer edges than [`oracle::min_edges_bound`].
pub fn check_min_edges(inst: &Instance) -> Verdict {
    let bound = oracle::min_edges_bound(inst.n(), inst.k);
    let m = inst.graph.m();
    if Ratio::from_integer(m as i64) < bound {
        Verdict::Infeasible { check: CheckId::MinEdges, witness: Witness::EdgeCount { m, bound } }
    } else {
        Verdict::Unknown
    }
}

/// Number of ranks whose required degree is at most `d`.
fn slots(n: usize, k: usize, d: usize) -> usize {
    (0..n).filter(|&r| required_degree(r, n, k) <= d).count()
}

/// Threshold of Check 3 at `delta`: one more than the number of ranks able
/// to hold a vertex of degree `K + delta`.
pub fn small_degree_threshold(n: usize, k: usize, delta: usize) -> usize {
    slots(n, k, k + delta) + 1
}

/// Check 3: for the smallest `delta` in `0..K` with
/// `|V^{d[K, K+delta]}| >= small_degree_threshold`.
pub fn check_small_degree_ub(inst: &Instance) -> Verdict {
    let (g, k, n) = (&inst.graph, inst.k, inst.n());
    for delta in 0..k {
        let count = g.degree_class(k, k + delta).len();
        let threshold = small_degree_threshold(n, k, delta);
        if count >= threshold {
            return Verdict::Infeasible {
                check: CheckId::SmallDegreeUb,
                witness: Witness::SmallDegree { delta, count, threshold },
            };
        }
    }
    Verdict::Unknown
}

/// Check 4, only for `n >= 2K + 1`: `|V^{d[2K, n-1]}| <= n - (2K + 1)`.
pub fn check_large_degree_lb(inst: &Instance) -> Verdict {
    let (n, k) = (inst.n(), inst.k);
    if n < 2 * k + 1 {
        return Verdict::Unknown;
    }
    let count = inst.graph.degree_class(2 * k, n - 1).len();
    let limit = n - (2 * k + 1);
    if count <= limit {
        Verdict::Infeasible { check: CheckId::LargeDegreeLb, witness: Witness::LargeDegree { count, limit } }
    } else {
        Verdict::Unknown
    }
}

/// `n / (K + 1) + 1`.
pub fn stable_set_threshold(n: usize, k: usize) -> Ratio<i64> {
    Ratio::new(n as i64, k as i64 + 1) + 1
}

/// Check 5 with the default enumeration cap.
pub fn check_max_stable_set(inst: &Instance) -> Verdict {
    check_max_stable_set_in(inst, &inst.graph.maximal_stable_sets(DEFAULT_STABLE_SET_CAP))
}

/// Check 5 over already enumerated stable sets: a set larger than
/// [`stable_set_threshold`]. The first largest set is the witness.
pub fn check_max_stable_set_in(inst: &Instance, sets: &StableSets) -> Verdict {
    let threshold = stable_set_threshold(inst.n(), inst.k);
    let best = sets.sets.iter().rev().max_by_key(|s| s.len());
    match best {
        Some(s) if Ratio::from_integer(s.len() as i64) > threshold => Verdict::Infeasible {
            check: CheckId::MaxStableSet,
            witness: Witness::StableSet { set: s.clone(), threshold },
        },
        _ => Verdict::Unknown,
    }
}

/// Rule 1 domain of a vertex of degree `d`: ranks whose required degree is
/// at most `d`.
pub fn degree_domain(n: usize, k: usize, d: usize) -> VertexSet {
    VertexSet::from_members(n, (0..n).filter(|&r| required_degree(r, n, k) <= d))
}

/// Rule 2 set for the neighbours of `v_star`, if the rule applies: every
/// rank `r` that `v_star` can take with no spare degree confines its
/// neighbours to `[r-K, r+K]`. Any admissible rank with spare degree leaves
/// the neighbours unconstrained.
fn neighbourhood_domain(g: &Graph, k: usize, v_star: usize) -> Option<VertexSet> {
    let n = g.n();
    let d = g.degree(v_star);
    if n < 2 * k + 1 || d < k || d >= 2 * k {
        return None;
    }
    let mut out = VertexSet::new(n);
    for r in degree_domain(n, k, d).iter() {
        if d > required_degree(r, n, k) {
            return None;
        }
        (r.saturating_sub(k)..=(r + k).min(n - 1)).for_each(|x| out.insert(x));
    }
    Some(out)
}

fn rank_domains(inst: &Instance) -> Vec<VertexSet> {
    let (g, n, k) = (&inst.graph, inst.n(), inst.k);
    let mut doms: Vec<VertexSet> = (0..n)
        .map(|v| {
            let d = g.degree(v);
            if d >= 2 * k {
                VertexSet::full(n)
            } else {
                degree_domain(n, k, d)
            }
        })
        .collect();
    for v_star in 0..n {
        if let Some(allowed) = neighbourhood_domain(g, k, v_star) {
            if allowed.len() < n {
                for u in g.neighbors(v_star).iter() {
                    doms[u].intersect_with(&allowed);
                }
            }
        }
    }
    doms
}

/// Rules 1 and 2, intersected. Fails when some vertex has degree below
/// `min(K, n-1)`; empty domains are returned as is.
pub fn reduce_domains(inst: &Instance) -> Result<Vec<VertexSet>, Error> {
    if let Verdict::Infeasible { witness: Witness::Vertex { v, .. }, .. } = check_min_degree(inst) {
        return Err(Error::InvalidArgument(format!(
            "vertex {v} has degree below K; domain reduction needs the minimum degree check to pass"
        )));
    }
    Ok(rank_domains(inst))
}

/// Additional constraint on any DMDGP order, used to break symmetry.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SymConstraint {
    FixRank { v: usize, rank: usize },
    /// `r_before < r_after`.
    Precede { before: usize, after: usize },
    /// `|r_v - r_w| >= K + 1  =>  r_v < r_u`.
    ConditionalPrecede { v: usize, w: usize, u: usize },
}

impl SymConstraint {
    /// Whether an order, given as ranks by vertex, satisfies the constraint.
    pub fn holds(&self, rank: &[usize], k: usize) -> bool {
        match *self {
            SymConstraint::FixRank { v, rank: r } => rank[v] == r,
            SymConstraint::Precede { before, after } => rank[before] < rank[after],
            SymConstraint::ConditionalPrecede { v, w, u } => {
                rank[v].abs_diff(rank[w]) < k + 1 || rank[v] < rank[u]
            }
        }
    }
}

impl fmt::Display for SymConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SymConstraint::FixRank { v, rank } => write!(f, "r[{v}] = {rank}"),
            SymConstraint::Precede { before, after } => write!(f, "r[{before}] < r[{after}]"),
            SymConstraint::ConditionalPrecede { v, w, u } => {
                write!(f, "|r[{v}] - r[{w}]| > K -> r[{v}] < r[{u}]")
            }
        }
    }
}

/// Precedences accepted so far; a new one is refused if it closes a cycle.
struct Priority {
    succ: Vec<Vec<usize>>,
}

impl Priority {
    fn reaches(&self, from: usize, to: usize) -> bool {
        let mut seen = vec![false; self.succ.len()];
        let mut stack = vec![from];
        while let Some(x) = stack.pop() {
            if x == to {
                return true;
            }
            if !std::mem::replace(&mut seen[x], true) {
                stack.extend(&self.succ[x]);
            }
        }
        false
    }

    fn try_add(&mut self, before: usize, after: usize) -> bool {
        if before == after || self.reaches(after, before) {
            return false;
        }
        self.succ[before].push(after);
        true
    }
}

/// Classes of at least two vertices sharing a key, each ascending, ordered
/// by first member.
fn twin_classes(n: usize, key: impl Fn(usize) -> VertexSet) -> Vec<Vec<usize>> {
    let mut by_key: BTreeMap<VertexSet, Vec<usize>> = BTreeMap::new();
    for v in 0..n {
        by_key.entry(key(v)).or_default().push(v);
    }
    let mut classes: Vec<Vec<usize>> = by_key.into_values().filter(|c| c.len() >= 2).collect();
    classes.sort();
    classes
}

/// Conditions 1 to 6, in application order 2, 3, 4, 5, 1, then 6 as a fallback.
///
/// Conditions 4 and 5 are only sound together with the rest if extra guards
/// hold, so a candidate `(v, w, u)` is kept only when
/// - swapping `u` and `v` maps orders with `|r_v - r_w| >= K + 1` to orders,
///   i.e. with `N'(x) = N(x) \ {u, v}`, `N'(u) ⊆ N'(v)` and
///   `N'(v) \ N'(u) = {w}`,
/// - neither `u` nor `v` is fixed by Condition 1,
/// - the new precedence `v` before `u` keeps the precedence graph of all
///   emitted constraints acyclic.
///
/// With these guards the lexicographically least order under a topological
/// order of the precedence graph satisfies every emitted constraint.
pub fn detect_symmetry_breaking(inst: &Instance) -> Vec<SymConstraint> {
    let (g, n, k) = (&inst.graph, inst.n(), inst.k);
    let closed = |v: usize| {
        let mut c = g.neighbors(v).clone();
        c.insert(v);
        c
    };

    // Condition 1 is decided first so its vertices can be kept out of the rest.
    let mut fixed = Vec::new();
    let degree_k = g.degree_class(k, k).to_vec();
    let end_only = (0..n).all(|r| required_degree(r, n, k) > k || r == 0 || r == n - 1);
    if !degree_k.is_empty() && end_only {
        fixed.push(SymConstraint::FixRank { v: degree_k[0], rank: 0 });
        if let Some(&second) = degree_k.get(1) {
            fixed.push(SymConstraint::FixRank { v: second, rank: n - 1 });
        }
    }
    let is_fixed = |x: usize| fixed.iter().any(|c| matches!(c, SymConstraint::FixRank { v, .. } if *v == x));

    let mut out: Vec<SymConstraint> = Vec::new();
    let mut prio = Priority { succ: vec![Vec::new(); n] };

    let stable_classes = twin_classes(n, |v| g.neighbors(v).clone());
    let clique_classes: Vec<Vec<usize>> = twin_classes(n, closed)
        .into_iter()
        .map(|mut c| {
            c.truncate(3);
            c
        })
        .collect();
    for class in stable_classes.iter().chain(&clique_classes) {
        let free: Vec<usize> = class.iter().copied().filter(|&x| !is_fixed(x)).collect();
        for pair in free.windows(2) {
            if prio.try_add(pair[0], pair[1]) {
                out.push(SymConstraint::Precede { before: pair[0], after: pair[1] });
            }
        }
    }

    let swap_ok = |v: usize, u: usize, w: usize| {
        let strip = |x: usize| {
            let mut s = g.neighbors(x).clone();
            s.remove(u);
            s.remove(v);
            s
        };
        let (nu, nv) = (strip(u), strip(v));
        let mut extra = nv.clone();
        extra.difference_with(&nu);
        nu.is_subset(&nv) && extra.len() == 1 && extra.contains(w)
    };
    let emit = |v: usize, w: usize, u: usize, prio: &mut Priority, out: &mut Vec<SymConstraint>| {
        let c = SymConstraint::ConditionalPrecede { v, w, u };
        if is_fixed(v) || is_fixed(u) || !swap_ok(v, u, w) || out.contains(&c) {
            return;
        }
        if prio.try_add(v, u) {
            out.push(c);
        }
    };
    let outside = |base: &[usize]| {
        let set = VertexSet::from_members(n, base.iter().copied());
        let mut nb = VertexSet::new(n);
        for &x in base {
            nb.union_with(g.neighbors(x));
        }
        nb.difference_with(&set);
        (set, nb)
    };

    // Condition 4: bases are Condition 2 classes and the vertices outside them.
    let in_stable: BTreeSet<usize> = stable_classes.iter().flatten().copied().collect();
    let bases: Vec<Vec<usize>> = stable_classes
        .iter()
        .cloned()
        .chain((0..n).filter(|v| !in_stable.contains(v)).map(|v| vec![v]))
        .collect();
    for base in &bases {
        let (set, nb) = outside(base);
        for v in (0..n).filter(|&v| !set.contains(v) && !nb.contains(v)) {
            let mut diff = g.neighbors(v).clone();
            diff.difference_with(&nb);
            if diff.len() == 1 {
                emit(v, VertexSet::min(&diff).unwrap(), base[0], &mut prio, &mut out);
            }
        }
    }

    // Condition 5: bases are Condition 3 classes and the vertices outside them.
    let in_clique: BTreeSet<usize> = clique_classes.iter().flatten().copied().collect();
    let bases: Vec<Vec<usize>> = clique_classes
        .iter()
        .cloned()
        .chain((0..n).filter(|v| !in_clique.contains(v)).map(|v| vec![v]))
        .collect();
    for base in &bases {
        let (set, nb) = outside(base);
        let mut covered = nb.clone();
        covered.union_with(&set);
        for v in nb.iter() {
            let mut diff = closed(v);
            diff.difference_with(&covered);
            if diff.len() == 1 {
                emit(v, VertexSet::min(&diff).unwrap(), base[0], &mut prio, &mut out);
            }
        }
    }

    out.extend(fixed);
    if out.is_empty() && n >= 2 {
        out.push(SymConstraint::Precede { before: 0, after: 1 });
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ViForm {
    /// `max - min >= rhs` over the member ranks.
    Span,
    /// Every two member ranks at least `K + 1` apart.
    Pairwise,
}

/// Which right-hand side to use for a set.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ViRhs {
    /// `max(|S|, δ^miss_S + K)`, for any set.
    General,
    /// `(|SS| - 1)(K + 1)`, for stable sets only.
    StableSet,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SeparationConstraint {
    pub members: VertexSet,
    pub min_span: usize,
    pub pairwise: bool,
}

impl SeparationConstraint {
    /// Whether an order, given as ranks by vertex, satisfies the constraint.
    pub fn holds(&self, rank: &[usize], k: usize) -> bool {
        let r: Vec<usize> = self.members.iter().map(|v| rank[v]).collect();
        let span = r.iter().max().unwrap() - r.iter().min().unwrap();
        if self.pairwise {
            r.iter().enumerate().all(|(i, &a)| r[i + 1..].iter().all(|&b| a.abs_diff(b) > k))
        } else {
            span >= self.min_span
        }
    }
}

impl fmt::Display for SeparationConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.pairwise {
            write!(f, "pairwise {} apart >= K+1 (span {})", self.members, self.min_span)
        } else {
            write!(f, "span {} >= {}", self.members, self.min_span)
        }
    }
}

/// General right-hand side for `s`. The `|S|` term needs `G[S]` to have no
/// DMDGP order, which is settled with the oracle; the `δ^miss_S + K` term
/// needs `δ^miss_S >= 1`. Without either, only `|S| - 1` remains.
pub fn general_rhs(inst: &Instance, s: &VertexSet) -> usize {
    let sub = inst.graph.induced_subgraph(s).graph;
    let no_order = Instance::new(sub, inst.k).is_ok_and(|i| oracle::first_order(&i).is_none());
    let size_term = if no_order { s.len() } else { s.len().saturating_sub(1) };
    let delta = inst.graph.max_missing_degree(s);
    let miss_term = if delta >= 1 { delta + inst.k } else { 0 };
    size_term.max(miss_term)
}

pub fn stable_rhs(k: usize, size: usize) -> usize {
    size.saturating_sub(1) * (k + 1)
}

/// One constraint per set with at least two members. The pairwise form and
/// the stable-set right-hand side both require stable sets.
pub fn generate_valid_inequalities(
    inst: &Instance,
    sets: &[VertexSet],
    form: ViForm,
    rhs: ViRhs,
) -> Result<Vec<SeparationConstraint>, Error> {
    let mut out = Vec::new();
    for s in sets {
        if let Some(v) = s.iter().find(|&v| v >= inst.n()) {
            return Err(Error::VertexOutOfRange { v, n: inst.n() });
        }
        if s.len() < 2 {
            continue;
        }
        let stable = inst.graph.is_stable(s);
        if !stable && (rhs == ViRhs::StableSet || form == ViForm::Pairwise) {
            return Err(Error::InvalidArgument(format!("{s} is not a stable set")));
        }
        let min_span = match rhs {
            ViRhs::General => general_rhs(inst, s),
            ViRhs::StableSet => stable_rhs(inst.k, s.len()),
        };
        out.push(SeparationConstraint {
            members: VertexSet::from_members(inst.n(), s.iter()),
            min_span,
            pairwise: form == ViForm::Pairwise,
        });
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct PreprocessOptions {
    pub checks: bool,
    pub domain_reduction: bool,
    pub symmetry: bool,
    /// `None` disables valid inequalities.
    pub valid_inequalities: Option<ViForm>,
    pub stable_set_cap: usize,
}

impl Default for PreprocessOptions {
    fn default() -> Self {
        PreprocessOptions {
            checks: true,
            domain_reduction: true,
            symmetry: true,
            valid_inequalities: None,
            stable_set_cap: DEFAULT_STABLE_SET_CAP,
        }
    }
}

impl PreprocessOptions {
    pub fn none() -> Self {
        PreprocessOptions {
            checks: false,
            domain_reduction: false,
            symmetry: false,
            valid_inequalities: None,
            stable_set_cap: DEFAULT_STABLE_SET_CAP,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PreprocessReport {
    pub verdict: Verdict,
    pub rank_domains: Vec<VertexSet>,
    pub symmetry_constraints: Vec<SymConstraint>,
    pub valid_inequalities: Vec<SeparationConstraint>,
    /// Stable-set enumeration hit its cap.
    pub stable_sets_truncated: bool,
}

impl PreprocessReport {
    /// Full domains and no constraints.
    pub fn empty(n: usize) -> Self {
        PreprocessReport {
            verdict: Verdict::Unknown,
            rank_domains: vec![VertexSet::full(n); n],
            symmetry_constraints: Vec::new(),
            valid_inequalities: Vec::new(),
            stable_sets_truncated: false,
        }
    }

    /// Stable text rendering.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "verdict {}", self.verdict).unwrap();
        for (v, d) in self.rank_domains.iter().enumerate() {
            writeln!(s, "domain {v} {d}").unwrap();
        }
        for c in &self.symmetry_constraints {
            writeln!(s, "symmetry {c}").unwrap();
        }
        for c in &self.valid_inequalities {
            writeln!(s, "inequality {c}").unwrap();
        }
        if self.stable_sets_truncated {
            writeln!(s, "stable sets truncated").unwrap();
        }
        s
    }
}

/// Runs the enabled stages. Checks run in the order 1 to 5 and the first
/// hit wins; an empty reduced domain is also reported as infeasible.
pub fn preprocess(inst: &Instance, opts: &PreprocessOptions) -> PreprocessReport {
    let mut report = PreprocessReport::empty(inst.n());
    let mut stable: Option<StableSets> = None;
    let mut stable_sets = |inst: &Instance| -> StableSets {
        stable.get_or_insert_with(|| inst.graph.maximal_stable_sets(opts.stable_set_cap)).clone()
    };
    if opts.checks {
        let cheap = [check_min_degree, check_min_edges, check_small_degree_ub, check_large_degree_lb];
        report.verdict = cheap.iter().map(|c| c(inst)).find(Verdict::is_infeasible).unwrap_or(Verdict::Unknown);
        if !report.verdict.is_infeasible() {
            let sets = stable_sets(inst);
            report.stable_sets_truncated = sets.truncated;
            report.verdict = check_max_stable_set_in(inst, &sets);
        }
        if report.verdict.is_infeasible() {
            return report;
        }
    }
    if opts.domain_reduction {
        report.rank_domains = rank_domains(inst);
        if let Some(v) = report.rank_domains.iter().position(VertexSet::is_empty) {
            report.verdict = Verdict::Infeasible { check: CheckId::EmptyDomain, witness: Witness::EmptyDomain { v } };
            return report;
        }
    }
    if opts.symmetry {
        report.symmetry_constraints = detect_symmetry_breaking(inst);
    }
    if let Some(form) = opts.valid_inequalities {
        let sets = stable_sets(inst);
        report.stable_sets_truncated |= sets.truncated;
        let big: Vec<VertexSet> = sets.sets.into_iter().filter(|s| s.len() >= 2).collect();
        report.valid_inequalities =
            generate_valid_inequalities(inst, &big, form, ViRhs::StableSet).expect("enumerated sets are stable");
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance_io::{fixture, gen_random, gen_wheel};
    use crate::oracle::enumerate_orders;

    fn inst(name: &str, k: usize) -> Instance {
        Instance::new(fixture(name), k).unwrap()
    }

    fn set(n: usize, m: &[usize]) -> VertexSet {
        VertexSet::from_members(n, m.iter().copied())
    }

    // Closed forms read literally, kept only to show where they break.
    fn rule1_literal(n: usize, k: usize, d: usize) -> VertexSet {
        if d >= 2 * k {
            return VertexSet::full(n);
        }
        let lo = 0..=d - k;
        let hi = n - 1 - (d - k)..n;
        VertexSet::from_members(n, lo.chain(hi).filter(|&r| r < n))
    }

    fn rule2_literal(n: usize, d_star: usize) -> VertexSet {
        VertexSet::from_members(n, (0..=d_star).chain(n - 1 - d_star..n).filter(|&r| r < n))
    }

    fn check3_literal(g: &Graph, k: usize) -> bool {
        (0..k).any(|delta| g.degree_class(k, k + delta).len() >= 2 * (delta + 1) + 1)
    }

    #[test]
    fn check1() {
        assert_eq!(
            check_min_degree(&inst("fig4", 3)),
            Verdict::Infeasible { check: CheckId::MinDegree, witness: Witness::Vertex { v: 0, degree: 2, required: 3 } }
        );
        assert_eq!(check_min_degree(&inst("fig4", 2)), Verdict::Unknown);
        let k5 = Instance::new(Graph::complete(5), 4).unwrap();
        assert_eq!(check_min_degree(&k5), Verdict::Unknown);
    }

    #[test]
    fn check2() {
        assert_eq!(
            check_min_edges(&inst("fig4", 2)),
            Verdict::Infeasible {
                check: CheckId::MinEdges,
                witness: Witness::EdgeCount { m: 8, bound: Ratio::from_integer(9) }
            }
        );
        assert_eq!(check_min_edges(&Instance::new(Graph::complete(4), 3).unwrap()), Verdict::Unknown);
        assert_eq!(check_min_degree(&inst("fig5b", 2)), Verdict::Unknown);
        assert_eq!(check_min_edges(&inst("fig5b", 2)), Verdict::Unknown);
    }

    #[test]
    fn check3() {
        // Four degree-3 vertices but only the two end ranks take degree 3.
        assert_eq!(
            check_small_degree_ub(&inst("fig5a", 3)),
            Verdict::Infeasible {
                check: CheckId::SmallDegreeUb,
                witness: Witness::SmallDegree { delta: 0, count: 4, threshold: 3 }
            }
        );
        let g = fixture("fig5a");
        assert_eq!(g.degree_class(3, 4).len(), 5);
        assert_eq!(2 * (1 + 1) + 1, 5);
        let k9 = Instance::new(Graph::complete(9), 3).unwrap();
        assert_eq!(check_small_degree_ub(&k9), Verdict::Unknown);
        for n in 2 * 3..12 {
            for delta in 0..3 {
                assert_eq!(small_degree_threshold(n, 3, delta), 2 * (delta + 1) + 1);
            }
        }
    }

    #[test]
    fn check3_fires_at_delta_zero_on_random_graph() {
        let mut found = false;
        for seed in 0..500 {
            let g = gen_random(7, 15 + seed as usize % 3, seed).unwrap();
            let i = Instance::new(g, 3).unwrap();
            if check_min_degree(&i).is_infeasible() || check_min_edges(&i).is_infeasible() {
                continue;
            }
            if let Verdict::Infeasible { witness: Witness::SmallDegree { delta: 0, .. }, .. } = check_small_degree_ub(&i) {
                assert_eq!(enumerate_orders(&i, 0).count, 0);
                found = true;
                break;
            }
        }
        assert!(found);
    }

    #[test]
    fn closed_forms_fail_below_two_k_plus_one() {
        // K5 minus an edge has 12 orders at K = 3.
        let g = Graph::new(5, (0..5).flat_map(|u| (u + 1..5).map(move |v| (u, v))).filter(|&e| e != (0, 1))).unwrap();
        let i = Instance::new(g.clone(), 3).unwrap();
        assert_eq!(enumerate_orders(&i, 0).count, 12);
        assert!(check3_literal(&g, 3));
        assert_eq!(check_small_degree_ub(&i), Verdict::Unknown);
        let orders = enumerate_orders(&i, usize::MAX).orders;
        let escapes_literal = orders.iter().any(|o| {
            let r = o.rank_of();
            (0..5).any(|v| !rule1_literal(5, 3, g.degree(v)).contains(r[v]))
        });
        assert!(escapes_literal);
        let doms = reduce_domains(&i).unwrap();
        for o in &orders {
            let r = o.rank_of();
            assert!((0..5).all(|v| doms[v].contains(r[v])));
        }
    }

    #[test]
    fn literal_rule2_fails_with_spare_degree() {
        // Square of the path 0..9 plus the chord {0, 4}: vertex 0 has degree 3
        // at rank 0 in the identity order, with its spare neighbour at rank 4.
        let band = (0..9usize).flat_map(|u| (u + 1..(u + 3).min(9)).map(move |v| (u, v)));
        let g = Graph::new(9, band.chain([(0, 4)])).unwrap();
        let i = Instance::new(g.clone(), 2).unwrap();
        let identity = crate::oracle::DmdgpOrder::new((0..9).collect()).unwrap();
        assert!(crate::oracle::verify_order(&i, &identity).unwrap());
        assert_eq!(g.degree(0), 3);
        assert!(!rule2_literal(9, 3).contains(4));
        assert_eq!(neighbourhood_domain(&g, 2, 0), None);
        assert!(reduce_domains(&i).unwrap()[4].contains(4));
    }

    #[test]
    fn check4() {
        assert_eq!(
            check_large_degree_lb(&inst("fig5b", 2)),
            Verdict::Infeasible { check: CheckId::LargeDegreeLb, witness: Witness::LargeDegree { count: 0, limit: 0 } }
        );
        let small = Instance::new(gen_random(6, 12, 0).unwrap(), 3).unwrap();
        assert_eq!(check_large_degree_lb(&small), Verdict::Unknown);
        let k7 = Instance::new(Graph::complete(7), 3).unwrap();
        assert_eq!(check_large_degree_lb(&k7), Verdict::Unknown);
    }

    #[test]
    fn check5() {
        let w7 = Instance::new(gen_wheel(7).unwrap(), 3).unwrap();
        let v = check_max_stable_set(&w7);
        let Verdict::Infeasible { check: CheckId::MaxStableSet, witness: Witness::StableSet { set, threshold } } = v else {
            panic!("expected check 5, got {v:?}");
        };
        assert_eq!(threshold, Ratio::new(11, 4));
        assert_eq!(set.len(), 3);
        assert!(w7.graph.is_stable(&set));
        assert_eq!(check_max_stable_set(&Instance::new(Graph::complete(6), 2).unwrap()), Verdict::Unknown);
    }

    #[test]
    fn domains_on_figures() {
        let d = reduce_domains(&inst("fig6", 2)).unwrap();
        assert_eq!(d[0].to_vec(), vec![0, 1, 4, 5]);
        assert_eq!(d[4].to_vec(), vec![0, 5]);
        let d = reduce_domains(&inst("fig7", 2)).unwrap();
        assert_eq!(d[4].to_vec(), vec![0, 1, 2, 5, 6, 7]);
        assert_eq!(d[5].to_vec(), vec![0, 1, 2, 5, 6, 7]);
        assert_eq!(neighbourhood_domain(&fixture("fig7"), 2, 7), Some(rule2_literal(8, 2)));
        let k9 = Instance::new(Graph::complete(9), 3).unwrap();
        assert!(reduce_domains(&k9).unwrap().iter().all(|d| d.len() == 9));
        assert!(reduce_domains(&inst("fig4", 3)).is_err());
    }

    #[test]
    fn rule1_matches_closed_form_for_large_n() {
        for k in 1..5 {
            for n in 2 * k + 1..14 {
                for d in k..2 * k {
                    assert_eq!(degree_domain(n, k, d), rule1_literal(n, k, d), "n={n} k={k} d={d}");
                }
            }
        }
    }

    #[test]
    fn fig9_symmetry_constraints() {
        let i = inst("fig9", 2);
        let cons = detect_symmetry_breaking(&i);
        for c in [
            SymConstraint::FixRank { v: 4, rank: 0 },
            SymConstraint::Precede { before: 1, after: 5 },
            SymConstraint::ConditionalPrecede { v: 2, w: 4, u: 1 },
            SymConstraint::ConditionalPrecede { v: 5, w: 3, u: 0 },
            SymConstraint::ConditionalPrecede { v: 2, w: 0, u: 3 },
        ] {
            assert!(cons.contains(&c), "missing {c}");
        }
        let survivors: Vec<_> = enumerate_orders(&i, usize::MAX)
            .orders
            .into_iter()
            .filter(|o| cons.iter().all(|c| c.holds(&o.rank_of(), 2)))
            .collect();
        assert_eq!(survivors.len(), 1);
        assert_eq!(survivors[0].vertices(), &[4, 2, 3, 1, 5, 0]);
    }

    #[test]
    fn two_degree_k_vertices_fix_both_ends() {
        // A 3-path of triangles at K = 2: the two ends have degree 2.
        let g = Graph::new(6, [(0, 1), (0, 2), (1, 2), (1, 3), (2, 3), (2, 4), (3, 4), (3, 5), (4, 5)]).unwrap();
        let cons = detect_symmetry_breaking(&Instance::new(g, 2).unwrap());
        assert!(cons.contains(&SymConstraint::FixRank { v: 0, rank: 0 }));
        assert!(cons.contains(&SymConstraint::FixRank { v: 5, rank: 5 }));
    }

    #[test]
    fn fallback_is_arbitrary_precedence() {
        // Cycle C7 at K = 1: no twins, no degree-1 vertex, no one-vertex differences.
        let g = Graph::new(7, (0..7).map(|i| (i, (i + 1) % 7))).unwrap();
        let cons = detect_symmetry_breaking(&Instance::new(g, 1).unwrap());
        assert_eq!(cons, vec![SymConstraint::Precede { before: 0, after: 1 }]);
    }

    #[test]
    fn inequality_values() {
        let i = inst("fig8", 3);
        let s = set(6, &[0, 3, 4, 5]);
        let v = generate_valid_inequalities(&i, &[s], ViForm::Span, ViRhs::General).unwrap();
        assert_eq!(v[0].min_span, 5);
        assert!(!v[0].pairwise);
        let ss = set(6, &[0, 5]);
        let v = generate_valid_inequalities(&i, &[ss.clone()], ViForm::Span, ViRhs::StableSet).unwrap();
        assert_eq!(v[0].min_span, 4);
        let v = generate_valid_inequalities(&i, &[ss], ViForm::Pairwise, ViRhs::StableSet).unwrap();
        assert!(v[0].pairwise);
        let g1 = inst("fig12a", 3);
        let all = VertexSet::full(5);
        assert_eq!(general_rhs(&g1, &all), 6);
        let best_stable = g1.graph.maximal_stable_sets(100).sets.iter().map(|s| s.len()).max().unwrap();
        assert_eq!(stable_rhs(3, best_stable), 4);
        let g2 = inst("fig12b", 3);
        let ss2 = set(5, &[0, 2, 4]);
        assert_eq!(stable_rhs(3, ss2.len()), 8);
        assert_eq!(general_rhs(&g2, &ss2), 5);
    }

    #[test]
    fn inequality_errors_and_singletons() {
        let i = inst("fig8", 3);
        let adjacent = set(6, &[0, 1]);
        assert!(generate_valid_inequalities(&i, &[adjacent.clone()], ViForm::Span, ViRhs::StableSet).is_err());
        assert!(generate_valid_inequalities(&i, &[adjacent.clone()], ViForm::Pairwise, ViRhs::General).is_err());
        assert_eq!(generate_valid_inequalities(&i, &[adjacent], ViForm::Span, ViRhs::General).unwrap()[0].min_span, 1);
        assert!(generate_valid_inequalities(&i, &[set(6, &[3])], ViForm::Span, ViRhs::StableSet).unwrap().is_empty());
    }

    #[test]
    fn pipeline_order_and_determinism() {
        let r = preprocess(&inst("fig4", 2), &PreprocessOptions::default());
        assert_eq!(r.verdict.check(), Some(CheckId::MinEdges));
        let r = preprocess(&inst("fig4", 3), &PreprocessOptions::default());
        assert_eq!(r.verdict.check(), Some(CheckId::MinDegree));
        // Check 3 already fires at delta = 1 before Check 4 is reached.
        let r = preprocess(&inst("fig5b", 2), &PreprocessOptions::default());
        assert_eq!(r.verdict.check(), Some(CheckId::SmallDegreeUb));
        // 12 edges are below the edge bound of 15.
        let r = preprocess(&Instance::new(gen_wheel(7).unwrap(), 3).unwrap(), &PreprocessOptions::default());
        assert_eq!(r.verdict.check(), Some(CheckId::MinEdges));
        let opts = PreprocessOptions { valid_inequalities: Some(ViForm::Span), ..Default::default() };
        for name in crate::instance_io::fixture_names() {
            for k in 2..=3 {
                let a = preprocess(&inst(name, k), &opts);
                let b = preprocess(&inst(name, k), &opts);
                assert_eq!(a.to_text(), b.to_text());
            }
        }
    }

    #[test]
    fn soundness_on_random_graphs() {
        let mut feasible = 0;
        for seed in 0..300u64 {
            let n = 4 + (seed % 5) as usize;
            let k = 1 + (seed % 3) as usize;
            let total = n * (n - 1) / 2;
            let m = total / 2 + (seed as usize * 7) % (total / 2 + 1);
            let i = Instance::new(gen_random(n, m, seed).unwrap(), k).unwrap();
            let e = enumerate_orders(&i, usize::MAX);
            let opts = PreprocessOptions { valid_inequalities: Some(ViForm::Pairwise), ..Default::default() };
            let r = preprocess(&i, &opts);
            if r.verdict.is_infeasible() {
                assert_eq!(e.count, 0, "seed {seed}: {}", r.verdict);
                continue;
            }
            if e.count == 0 {
                continue;
            }
            feasible += 1;
            let mut kept = 0;
            for o in &e.orders {
                let rank = o.rank_of();
                assert!((0..n).all(|v| r.rank_domains[v].contains(rank[v])), "seed {seed}");
                assert!(r.valid_inequalities.iter().all(|c| c.holds(&rank, k)), "seed {seed}");
                if r.symmetry_constraints.iter().all(|c| c.holds(&rank, k)) {
                    kept += 1;
                }
            }
            assert!(kept >= 1, "seed {seed}: symmetry removed every order");
        }
        assert!(feasible > 20);
    }
}
