//! Backtracking search with propagation over three views of an order:
//! rank variables `r_v`, position variables `v_j`, or both, channelled.
//!
//! Every domain is a bitset over `0..n` stored in one flat word vector, and
//! each search node copies that vector. Only six constraint classes exist:
//! all-different, non-edge separation, position windows, channelling, the
//! symmetry-breaking precedences and the stable-set separations.

use std::time::{Duration, Instant};

use crate::error::Error;
use crate::oracle::{verify_order, DmdgpOrder, Instance};
use crate::preprocess::{self, PreprocessOptions, PreprocessReport, SymConstraint, Verdict, ViForm};

const WB: usize = usize::BITS as usize;
/// Nodes between two clock reads.
const CLOCK_EVERY: u64 = 1024;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ModelKind {
    Rank,
    Vertex,
    Combined,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::Rank, ModelKind::Vertex, ModelKind::Combined];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Rank => "rank",
            ModelKind::Vertex => "vertex",
            ModelKind::Combined => "combined",
        }
    }

    pub fn default_branching(self) -> Branching {
        match self {
            ModelKind::Rank => Branching::MinDomain,
            ModelKind::Vertex | ModelKind::Combined => Branching::PositionSequential,
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        ModelKind::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown model `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Branching {
    /// Lowest undecided position, candidate vertices ascending.
    PositionSequential,
    /// Smallest domain of the model's main variables, ties by index, values ascending.
    MinDomain,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    FindOne,
    /// Stop after this many solutions.
    EnumerateAll(usize),
    Count,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveConfig {
    pub model: ModelKind,
    pub use_checks: bool,
    pub use_domain_reduction: bool,
    pub use_symmetry: bool,
    pub use_valid_inequalities: bool,
    pub vi_form: ViForm,
    pub time_limit: Duration,
    pub mode: Mode,
    /// `None` picks the model's default.
    pub branching: Option<Branching>,
    /// Hall-interval tightening on the all-different constraints.
    pub hall_intervals: bool,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            model: ModelKind::Combined,
            use_checks: true,
            use_domain_reduction: true,
            use_symmetry: true,
            use_valid_inequalities: false,
            vi_form: ViForm::Span,
            time_limit: Duration::from_secs(60),
            mode: Mode::FindOne,
            branching: None,
            hall_intervals: false,
        }
    }
}

impl SolveConfig {
    /// No preprocessing at all.
    pub fn plain(model: ModelKind) -> Self {
        SolveConfig {
            model,
            use_checks: false,
            use_domain_reduction: false,
            use_symmetry: false,
            ..SolveConfig::default()
        }
    }

    pub fn validate(&self) -> Result<(), Error> {
        if self.time_limit.is_zero() {
            return Err(Error::InvalidArgument("time limit must be positive".into()));
        }
        if self.mode == Mode::EnumerateAll(0) {
            return Err(Error::InvalidArgument("enumeration limit must be at least 1".into()));
        }
        Ok(())
    }

    pub fn preprocess_options(&self) -> PreprocessOptions {
        PreprocessOptions {
            checks: self.use_checks,
            domain_reduction: self.use_domain_reduction,
            symmetry: self.use_symmetry,
            valid_inequalities: self.use_valid_inequalities.then_some(self.vi_form),
            ..PreprocessOptions::default()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Status {
    Feasible,
    Infeasible,
    Timeout,
}

impl Status {
    pub fn name(self) -> &'static str {
        match self {
            Status::Feasible => "feasible",
            Status::Infeasible => "infeasible",
            Status::Timeout => "timeout",
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SolveStats {
    pub choice_points: u64,
    pub fails: u64,
    /// Propagator runs that shrank a domain.
    pub propagations: u64,
    pub nodes: u64,
    pub wall_time: Duration,
}

#[derive(Clone, Debug)]
pub struct SolveOutcome {
    pub status: Status,
    /// Solutions in discovery order (none in `Count` mode).
    pub orders: Vec<DmdgpOrder>,
    pub count: u64,
    /// The search space was exhausted.
    pub complete: bool,
    pub stats: SolveStats,
    pub preprocess: Verdict,
}

pub fn solve(inst: &Instance, cfg: &SolveConfig) -> Result<SolveOutcome, Error> {
    cfg.validate()?;
    let start = Instant::now();
    let report = preprocess::preprocess(inst, &cfg.preprocess_options());
    if report.verdict.is_infeasible() {
        return Ok(SolveOutcome {
            status: Status::Infeasible,
            orders: Vec::new(),
            count: 0,
            complete: true,
            stats: SolveStats { wall_time: start.elapsed(), ..SolveStats::default() },
            preprocess: report.verdict,
        });
    }
    let mut net = build_model(inst, &report, cfg.model);
    net.hall_intervals = cfg.hall_intervals;
    let branching = cfg.branching.unwrap_or(cfg.model.default_branching());
    let mut run = Run {
        inst,
        mode: cfg.mode,
        branching,
        deadline: start + cfg.time_limit,
        orders: Vec::new(),
        count: 0,
        timed_out: false,
        stopped: false,
        stats: SolveStats::default(),
    };
    let root = net.root_state();
    net.dfs(root, &mut run);
    run.stats.wall_time = start.elapsed();
    let status = if run.count > 0 {
        Status::Feasible
    } else if run.timed_out {
        Status::Timeout
    } else {
        Status::Infeasible
    };
    Ok(SolveOutcome {
        status,
        orders: run.orders,
        count: run.count,
        complete: !run.timed_out && !run.stopped,
        stats: run.stats,
        preprocess: report.verdict,
    })
}

/// Propagation failed: some domain became empty.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Conflict;

type Prop = Result<bool, Conflict>;

/// Domains of every variable of a [`Network`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct State {
    words: Vec<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Decision {
    Position { j: usize, v: usize },
    Rank { v: usize, r: usize },
}

#[derive(Clone, Debug)]
struct Span {
    members: Vec<usize>,
    min_span: usize,
    pairwise: bool,
}

/// Compiled constraint network for one instance and model.
#[derive(Clone, Debug)]
pub struct Network {
    n: usize,
    k: usize,
    kind: ModelKind,
    w: usize,
    rank: Option<usize>,
    pos: Option<usize>,
    nbr: Vec<Vec<usize>>,
    non_nbr: Vec<Vec<usize>>,
    windows: Vec<(usize, usize)>,
    sym: Vec<SymConstraint>,
    spans: Vec<Span>,
    root: State,
    pub hall_intervals: bool,
}

struct Run<'a> {
    inst: &'a Instance,
    mode: Mode,
    branching: Branching,
    deadline: Instant,
    orders: Vec<DmdgpOrder>,
    count: u64,
    timed_out: bool,
    stopped: bool,
    stats: SolveStats,
}

/// Builds the variables and constraints of `kind`, with the report's domains,
/// symmetry constraints and separation constraints stated on the rank view.
pub fn build_model(inst: &Instance, report: &PreprocessReport, kind: ModelKind) -> Network {
    let (n, k) = (inst.n(), inst.k);
    let w = n.div_ceil(WB).max(1);
    let (rank, pos) = match kind {
        ModelKind::Rank => (Some(0), None),
        ModelKind::Vertex => (None, Some(0)),
        ModelKind::Combined => (Some(0), Some(n)),
    };
    let nvars = n * (rank.is_some() as usize + pos.is_some() as usize);
    let to_words = |bits: &[usize]| {
        let mut v = bits.to_vec();
        v.resize(w, 0);
        v
    };
    let nbr: Vec<Vec<usize>> = (0..n).map(|v| to_words(inst.graph.neighbors(v).blocks())).collect();
    let non_nbr = if rank.is_some() {
        (0..n).map(|v| (0..n).filter(|&u| u != v && !inst.graph.adjacent(u, v)).collect()).collect()
    } else {
        vec![Vec::new(); n]
    };
    let windows = if pos.is_some() {
        (0..n).flat_map(|i| (i + 1..n.min(i + k + 1)).map(move |j| (i, j))).collect()
    } else {
        Vec::new()
    };
    let spans = report
        .valid_inequalities
        .iter()
        .map(|c| Span { members: c.members.to_vec(), min_span: c.min_span, pairwise: c.pairwise })
        .collect();
    let mut net = Network {
        n,
        k,
        kind,
        w,
        rank,
        pos,
        nbr,
        non_nbr,
        windows,
        sym: report.symmetry_constraints.clone(),
        spans,
        root: State { words: vec![0; nvars * w] },
        hall_intervals: false,
    };
    let mut st = State { words: vec![0; nvars * w] };
    let full = full_mask(n, w);
    for x in 0..nvars {
        st.words[x * w..(x + 1) * w].copy_from_slice(&full);
    }
    // Unary restrictions; an empty result surfaces at the first propagation.
    for (v, dom) in report.rank_domains.iter().enumerate().take(n) {
        for r in (0..n).filter(|&r| !dom.contains(r)) {
            let _ = net.r_remove_range(&mut st, v, r, r);
        }
    }
    for c in &net.sym {
        if let SymConstraint::FixRank { v, rank } = *c {
            let _ = net.r_keep_range(&mut st, v, rank, rank);
        }
    }
    net.root = st;
    net
}

fn full_mask(n: usize, w: usize) -> Vec<usize> {
    (0..w)
        .map(|i| {
            let bits = n.saturating_sub(i * WB).min(WB);
            if bits == WB {
                usize::MAX
            } else {
                (1usize << bits) - 1
            }
        })
        .collect()
}

fn count(s: &[usize]) -> usize {
    s.iter().map(|x| x.count_ones() as usize).sum()
}

fn first(s: &[usize]) -> Option<usize> {
    s.iter().enumerate().find(|(_, &x)| x != 0).map(|(i, x)| i * WB + x.trailing_zeros() as usize)
}

fn last(s: &[usize]) -> Option<usize> {
    s.iter()
        .enumerate()
        .rev()
        .find(|(_, &x)| x != 0)
        .map(|(i, x)| i * WB + WB - 1 - x.leading_zeros() as usize)
}

fn has(s: &[usize], i: usize) -> bool {
    s[i / WB] >> (i % WB) & 1 == 1
}

fn ones(s: &[usize]) -> impl Iterator<Item = usize> + '_ {
    s.iter().enumerate().flat_map(|(i, &x)| {
        let mut x = x;
        std::iter::from_fn(move || {
            if x == 0 {
                return None;
            }
            let b = x.trailing_zeros() as usize;
            x &= x - 1;
            Some(i * WB + b)
        })
    })
}

/// Bits `lo..=hi` of word `i`.
fn range_word(i: usize, lo: usize, hi: usize) -> usize {
    let (a, b) = (i * WB, i * WB + WB - 1);
    if hi < a || lo > b {
        return 0;
    }
    let from = lo.max(a) - a;
    let to = hi.min(b) - a;
    let upper = if to == WB - 1 { usize::MAX } else { (1usize << (to + 1)) - 1 };
    upper & !((1usize << from) - 1)
}

impl Network {
    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn num_rank_vars(&self) -> usize {
        if self.rank.is_some() {
            self.n
        } else {
            0
        }
    }

    pub fn num_position_vars(&self) -> usize {
        if self.pos.is_some() {
            self.n
        } else {
            0
        }
    }

    /// One per non-adjacent vertex pair, on the rank view.
    pub fn num_separations(&self) -> usize {
        self.non_nbr.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// One per position pair at distance at most `K`, on the position view.
    pub fn num_windows(&self) -> usize {
        self.windows.len()
    }

    pub fn num_all_different(&self) -> usize {
        self.rank.is_some() as usize + self.pos.is_some() as usize
    }

    pub fn has_channel(&self) -> bool {
        self.rank.is_some() && self.pos.is_some()
    }

    pub fn root_state(&self) -> State {
        self.root.clone()
    }

    fn var<'s>(&self, st: &'s State, x: usize) -> &'s [usize] {
        &st.words[x * self.w..(x + 1) * self.w]
    }

    fn var_mut<'s>(&self, st: &'s mut State, x: usize) -> &'s mut [usize] {
        &mut st.words[x * self.w..(x + 1) * self.w]
    }

    fn and_var(&self, st: &mut State, x: usize, mask: &[usize]) -> Prop {
        let d = self.var_mut(st, x);
        let mut changed = false;
        let mut any = 0;
        for (a, &m) in d.iter_mut().zip(mask) {
            let b = *a & m;
            changed |= b != *a;
            *a = b;
            any |= b;
        }
        if any == 0 {
            Err(Conflict)
        } else {
            Ok(changed)
        }
    }

    fn remove_var_range(&self, st: &mut State, x: usize, lo: usize, hi: usize) -> Prop {
        if lo > hi {
            return Ok(false);
        }
        let mask: Vec<usize> = (0..self.w).map(|i| !range_word(i, lo, hi)).collect();
        self.and_var(st, x, &mask)
    }

    fn remove_val(&self, st: &mut State, x: usize, a: usize) -> Prop {
        if !has(self.var(st, x), a) {
            return Ok(false);
        }
        let d = self.var_mut(st, x);
        d[a / WB] &= !(1usize << (a % WB));
        if d.iter().all(|&b| b == 0) {
            Err(Conflict)
        } else {
            Ok(true)
        }
    }

    fn set_single(&self, st: &mut State, x: usize, a: usize) -> Prop {
        if !has(self.var(st, x), a) {
            return Err(Conflict);
        }
        let d = self.var_mut(st, x);
        let changed = count(d) > 1;
        d.iter_mut().for_each(|b| *b = 0);
        d[a / WB] |= 1usize << (a % WB);
        Ok(changed)
    }

    /// Smallest rank `v` can still take.
    fn rmin(&self, st: &State, v: usize) -> Option<usize> {
        match (self.rank, self.pos) {
            (Some(b), _) => first(self.var(st, b + v)),
            (None, Some(p)) => (0..self.n).find(|&j| has(self.var(st, p + j), v)),
            (None, None) => None,
        }
    }

    fn rmax(&self, st: &State, v: usize) -> Option<usize> {
        match (self.rank, self.pos) {
            (Some(b), _) => last(self.var(st, b + v)),
            (None, Some(p)) => (0..self.n).rev().find(|&j| has(self.var(st, p + j), v)),
            (None, None) => None,
        }
    }

    fn rbounds(&self, st: &State, v: usize) -> Result<(usize, usize), Conflict> {
        match (self.rmin(st, v), self.rmax(st, v)) {
            (Some(a), Some(b)) => Ok((a, b)),
            _ => Err(Conflict),
        }
    }

    /// Removes ranks `lo..=hi` of `v`, on whichever view holds ranks.
    fn r_remove_range(&self, st: &mut State, v: usize, lo: usize, hi: usize) -> Prop {
        let hi = hi.min(self.n - 1);
        if lo > hi {
            return Ok(false);
        }
        if let Some(b) = self.rank {
            return self.remove_var_range(st, b + v, lo, hi);
        }
        let p = self.pos.expect("a model has at least one view");
        let mut changed = false;
        for j in lo..=hi {
            changed |= self.remove_val(st, p + j, v)?;
        }
        if self.rmin(st, v).is_none() {
            return Err(Conflict);
        }
        Ok(changed)
    }

    fn r_keep_range(&self, st: &mut State, v: usize, lo: usize, hi: usize) -> Prop {
        if lo > hi || lo >= self.n {
            return Err(Conflict);
        }
        let a = if lo > 0 { self.r_remove_range(st, v, 0, lo - 1)? } else { false };
        let b = self.r_remove_range(st, v, hi + 1, self.n - 1)?;
        Ok(a || b)
    }

    /// Narrows `st` to the decision.
    pub fn apply(&self, st: &mut State, d: Decision) -> Result<(), Conflict> {
        match d {
            Decision::Position { j, v } => {
                if let Some(p) = self.pos {
                    self.set_single(st, p + j, v)?;
                }
                if let Some(b) = self.rank {
                    self.set_single(st, b + v, j)?;
                }
            }
            Decision::Rank { v, r } => {
                if let Some(b) = self.rank {
                    self.set_single(st, b + v, r)?;
                }
                if let Some(p) = self.pos {
                    self.set_single(st, p + r, v)?;
                }
            }
        }
        Ok(())
    }

    /// Vertices still possible at position `j`.
    pub fn position_domain(&self, st: &State, j: usize) -> Vec<usize> {
        match (self.pos, self.rank) {
            (Some(p), _) => ones(self.var(st, p + j)).collect(),
            (None, Some(b)) => (0..self.n).filter(|&v| has(self.var(st, b + v), j)).collect(),
            (None, None) => Vec::new(),
        }
    }

    /// Ranks still possible for vertex `v`.
    pub fn rank_domain(&self, st: &State, v: usize) -> Vec<usize> {
        match (self.rank, self.pos) {
            (Some(b), _) => ones(self.var(st, b + v)).collect(),
            (None, Some(p)) => (0..self.n).filter(|&j| has(self.var(st, p + j), v)).collect(),
            (None, None) => Vec::new(),
        }
    }

    /// Runs every propagator until none shrinks a domain.
    pub fn propagate(&self, st: &mut State, stats: &mut SolveStats) -> Result<(), Conflict> {
        loop {
            let mut changed = false;
            let mut note = |c: bool| {
                if c {
                    stats.propagations += 1;
                    changed = true;
                }
            };
            if let Some(b) = self.rank {
                note(self.all_different(st, b)?);
                note(self.separations(st)?);
            }
            if let Some(p) = self.pos {
                note(self.all_different(st, p)?);
                note(self.windows(st)?);
            }
            if self.has_channel() {
                note(self.channel(st)?);
            }
            note(self.symmetry(st)?);
            note(self.stable_separations(st)?);
            if !changed {
                return Ok(());
            }
        }
    }

    fn all_different(&self, st: &mut State, base: usize) -> Prop {
        let (n, w) = (self.n, self.w);
        let mut changed = false;
        for x in 0..n {
            let d = self.var(st, base + x);
            if count(d) != 1 {
                continue;
            }
            let a = first(d).unwrap();
            for y in (0..n).filter(|&y| y != x) {
                changed |= self.remove_val(st, base + y, a)?;
            }
        }
        let mut once = vec![0usize; w];
        let mut twice = vec![0usize; w];
        for x in 0..n {
            for (i, &b) in self.var(st, base + x).iter().enumerate() {
                twice[i] |= once[i] & b;
                once[i] |= b;
            }
        }
        if once != full_mask(n, w) {
            return Err(Conflict);
        }
        let unique: Vec<usize> = once.iter().zip(&twice).map(|(a, b)| a & !b).collect();
        for a in ones(&unique) {
            // An earlier assignment in this loop may have taken the only holder.
            let x = (0..n).find(|&x| has(self.var(st, base + x), a)).ok_or(Conflict)?;
            changed |= self.set_single(st, base + x, a)?;
        }
        if self.hall_intervals {
            changed |= self.hall(st, base)?;
        }
        Ok(changed)
    }

    fn hall(&self, st: &mut State, base: usize) -> Prop {
        let n = self.n;
        let mut changed = false;
        for lo in 0..n {
            for hi in lo..n {
                let bounds: Vec<(usize, usize)> = (0..n)
                    .map(|x| {
                        let d = self.var(st, base + x);
                        (first(d).unwrap_or(0), last(d).unwrap_or(0))
                    })
                    .collect();
                let inside = bounds.iter().filter(|&&(a, b)| a >= lo && b <= hi).count();
                let room = hi - lo + 1;
                if inside > room {
                    return Err(Conflict);
                }
                if inside == room {
                    for (x, &(a, b)) in bounds.iter().enumerate() {
                        if a < lo || b > hi {
                            changed |= self.remove_var_range(st, base + x, lo, hi)?;
                        }
                    }
                }
            }
        }
        Ok(changed)
    }

    fn separations(&self, st: &mut State) -> Prop {
        let k = self.k;
        let mut changed = false;
        for v in 0..self.n {
            for &u in &self.non_nbr[v] {
                let (mn, mx) = self.rbounds(st, u)?;
                if mx <= mn + 2 * k {
                    changed |= self.r_remove_range(st, v, mx.saturating_sub(k), mn + k)?;
                }
            }
        }
        Ok(changed)
    }

    fn windows(&self, st: &mut State) -> Prop {
        let (n, w) = (self.n, self.w);
        let p = self.pos.unwrap();
        let support = |st: &State, j: usize| {
            let mut s = vec![0usize; w];
            for x in ones(self.var(st, p + j)) {
                for (a, b) in s.iter_mut().zip(&self.nbr[x]) {
                    *a |= b;
                }
            }
            s
        };
        let mut sup: Vec<Vec<usize>> = (0..n).map(|j| support(st, j)).collect();
        let mut changed = false;
        for &(i, j) in &self.windows {
            if self.and_var(st, p + i, &sup[j])? {
                changed = true;
                sup[i] = support(st, i);
            }
            if self.and_var(st, p + j, &sup[i])? {
                changed = true;
                sup[j] = support(st, j);
            }
        }
        Ok(changed)
    }

    fn channel(&self, st: &mut State) -> Prop {
        let (b, p) = (self.rank.unwrap(), self.pos.unwrap());
        let mut changed = false;
        for v in 0..self.n {
            let gone: Vec<usize> = ones(self.var(st, b + v)).filter(|&j| !has(self.var(st, p + j), v)).collect();
            for j in gone {
                changed |= self.remove_val(st, b + v, j)?;
            }
        }
        for j in 0..self.n {
            let gone: Vec<usize> = ones(self.var(st, p + j)).filter(|&v| !has(self.var(st, b + v), j)).collect();
            for v in gone {
                changed |= self.remove_val(st, p + j, v)?;
            }
        }
        Ok(changed)
    }

    fn precede(&self, st: &mut State, a: usize, b: usize) -> Prop {
        let (_, max_b) = self.rbounds(st, b)?;
        if max_b == 0 {
            return Err(Conflict);
        }
        let mut changed = self.r_remove_range(st, a, max_b, self.n - 1)?;
        let (min_a, _) = self.rbounds(st, a)?;
        changed |= self.r_remove_range(st, b, 0, min_a)?;
        Ok(changed)
    }

    fn symmetry(&self, st: &mut State) -> Prop {
        let k = self.k;
        let mut changed = false;
        for c in &self.sym {
            match *c {
                SymConstraint::FixRank { v, rank } => changed |= self.r_keep_range(st, v, rank, rank)?,
                SymConstraint::Precede { before, after } => changed |= self.precede(st, before, after)?,
                SymConstraint::ConditionalPrecede { v, w, u } => {
                    let (v_lo, v_hi) = self.rbounds(st, v)?;
                    let (w_lo, w_hi) = self.rbounds(st, w)?;
                    if v_lo > w_hi + k || w_lo > v_hi + k {
                        changed |= self.precede(st, v, u)?;
                    }
                }
            }
        }
        Ok(changed)
    }

    fn stable_separations(&self, st: &mut State) -> Prop {
        let k = self.k;
        let mut changed = false;
        for s in &self.spans {
            if s.pairwise {
                for &v in &s.members {
                    for &u in s.members.iter().filter(|&&u| u != v) {
                        let (mn, mx) = self.rbounds(st, u)?;
                        if mx <= mn + 2 * k {
                            changed |= self.r_remove_range(st, v, mx.saturating_sub(k), mn + k)?;
                        }
                    }
                }
                continue;
            }
            for &x in &s.members {
                let mut lo = usize::MAX;
                let mut hi = 0;
                for &y in s.members.iter().filter(|&&y| y != x) {
                    let (a, b) = self.rbounds(st, y)?;
                    lo = lo.min(a);
                    hi = hi.max(b);
                }
                if hi < lo + s.min_span {
                    // Ranks strictly between hi - span and lo + span cannot reach the span.
                    let from = (hi + 1).saturating_sub(s.min_span);
                    let to = lo + s.min_span - 1;
                    changed |= self.r_remove_range(st, x, from, to)?;
                }
            }
        }
        Ok(changed)
    }

    fn all_assigned(&self, st: &State) -> bool {
        let base = self.rank.or(self.pos).unwrap();
        (0..self.n).all(|x| count(self.var(st, base + x)) == 1)
    }

    /// Next decision at a propagated state, or `None` once every variable is fixed.
    pub fn next_decisions(&self, st: &State, branching: Branching) -> Option<Vec<Decision>> {
        if self.all_assigned(st) {
            return None;
        }
        match branching {
            Branching::PositionSequential => (0..self.n).find_map(|j| {
                let cands = self.position_domain(st, j);
                (cands.len() > 1).then(|| cands.into_iter().map(|v| Decision::Position { j, v }).collect())
            }),
            Branching::MinDomain => {
                let best = |base: usize| {
                    (0..self.n)
                        .map(|x| (count(self.var(st, base + x)), x))
                        .filter(|&(c, _)| c > 1)
                        .min()
                        .map(|(_, x)| x)
                };
                if let Some(b) = self.rank {
                    let v = best(b)?;
                    Some(ones(self.var(st, b + v)).map(|r| Decision::Rank { v, r }).collect())
                } else {
                    let p = self.pos.unwrap();
                    let j = best(p)?;
                    Some(ones(self.var(st, p + j)).map(|v| Decision::Position { j, v }).collect())
                }
            }
        }
    }

    fn extract(&self, st: &State) -> Vec<usize> {
        (0..self.n).map(|j| self.position_domain(st, j)[0]).collect()
    }

    // Returns false to stop the whole search.
    fn dfs(&self, mut st: State, run: &mut Run) -> bool {
        run.stats.nodes += 1;
        if run.stats.nodes.is_multiple_of(CLOCK_EVERY) && Instant::now() >= run.deadline {
            run.timed_out = true;
            return false;
        }
        if self.propagate(&mut st, &mut run.stats).is_err() {
            run.stats.fails += 1;
            return true;
        }
        let Some(decisions) = self.next_decisions(&st, run.branching) else {
            let order = DmdgpOrder::new(self.extract(&st)).expect("solution is a permutation");
            assert!(verify_order(run.inst, &order).unwrap(), "solver produced an invalid order {order:?}");
            run.count += 1;
            match run.mode {
                Mode::FindOne => {
                    run.orders.push(order);
                    run.stopped = true;
                    return false;
                }
                Mode::EnumerateAll(limit) => {
                    run.orders.push(order);
                    if run.orders.len() >= limit {
                        run.stopped = true;
                        return false;
                    }
                }
                Mode::Count => {}
            }
            return true;
        };
        for d in decisions {
            run.stats.choice_points += 1;
            let mut child = st.clone();
            if self.apply(&mut child, d).is_err() {
                run.stats.fails += 1;
                continue;
            }
            if !self.dfs(child, run) {
                return false;
            }
        }
        true
    }
}
