//! Exhaustive backtracking over table cells with constraint propagation and
//! lex-leader symmetry breaking, followed by canonical-form deduplication.
//!
//! Every cell holds a bitmask domain. Propagation covers:
//!
//! * row all-different, including hidden singles;
//! * diagonal all-different (skew mode; elsewhere the diagonal is fixed);
//! * the ternary law of the structure: once the inner cells of an instance
//!   are decided, its two outer cells are tied by an equality link, and
//!   linked cells keep intersecting their domains;
//! * for skew cycle sets, `i·(j▷k) = (i·j)▷(i·k)` forces cells directly.
//!
//! Symmetry breaking keeps, for every `g` in the symmetry set, the first
//! position where `M` and `M^g` are not yet known to agree, and enforces
//! `M[pos] ≤ M^g[pos]` by bounds on the two cells involved.
//!
//! Branching goes row by row, except for diagonals with a small centralizer,
//! which grow leading squares instead.

use std::fmt;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering as AtomicOrdering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use thiserror::Error;

use crate::canon::{canonical_form, canonical_form_skew, rack_automorphisms, LabeledOrbitKey};
use crate::perm::{partitions, support_filter, Centralizer, CycleType, Permutation, DEFAULT_SUPPORT};
use crate::tables::{is_quandle, CycleSetTable, Matrix, RackTable, SkewCycleSet};
use crate::yb::{cycle_set_to_solution, skew_cycle_set_to_solution, SolutionMap};

/// Largest size the search engine accepts (domains are `u32` masks and
/// cell indices `u16`).
pub const MAX_SEARCH_SIZE: usize = 16;

/// Centralizers up to this order are used whole in [`SymmetryMode::Auto`].
pub const AUTO_FULL_LIMIT: u128 = 10_000;

/// Diagonals whose centralizer is at most this large branch in square order.
const SQUARE_ORDER_LIMIT: u128 = 1_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    CycleSet,
    Rack,
    SkewOverRack,
}

/// Which subset `S` of the symmetry group feeds the lex-leader constraints.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymmetryMode {
    /// Full group when its order is at most [`AUTO_FULL_LIMIT`], otherwise
    /// `Support`.
    Auto,
    /// The whole centralizer (or automorphism group): outputs need no dedup.
    Full,
    /// A generating set only.
    Generators,
    /// Elements moving at most `support_k` points, plus generators.
    Support,
    /// No lex-leader pruning; canonical dedup does all the work.
    None,
}

#[derive(Debug, Default)]
pub struct Progress {
    pub nodes: AtomicU64,
    pub found: AtomicU64,
    pub tasks_total: AtomicU64,
    pub tasks_done: AtomicU64,
}

#[derive(Debug, Clone)]
pub struct SearchConfig {
    pub n: usize,
    pub kind: Kind,
    pub symmetry: SymmetryMode,
    pub support_k: usize,
    /// Restrict to these diagonal classes (cycle-set and rack searches).
    pub diagonal_filter: Option<Vec<CycleType>>,
    /// Worker threads; 0 uses rayon's default.
    pub jobs: usize,
    pub node_budget: Option<u64>,
    pub time_budget: Option<Duration>,
    pub progress: Option<Arc<Progress>>,
}

impl SearchConfig {
    pub fn new(n: usize, kind: Kind) -> Self {
        SearchConfig {
            n,
            kind,
            symmetry: SymmetryMode::Auto,
            support_k: DEFAULT_SUPPORT,
            diagonal_filter: None,
            jobs: 0,
            node_budget: None,
            time_budget: None,
            progress: None,
        }
    }

    pub fn symmetry(mut self, mode: SymmetryMode) -> Self {
        self.symmetry = mode;
        self
    }

    pub fn diagonal(mut self, classes: Vec<CycleType>) -> Self {
        self.diagonal_filter = Some(classes);
        self
    }

    pub fn jobs(mut self, jobs: usize) -> Self {
        self.jobs = jobs;
        self
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SearchStats {
    pub nodes: u64,
    pub constraint_prunes: u64,
    pub symmetry_prunes: u64,
    pub raw_outputs: u64,
    pub outputs: u64,
    pub wall_time: Duration,
}

impl SearchStats {
    fn absorb(&mut self, other: &SearchStats) {
        self.nodes += other.nodes;
        self.constraint_prunes += other.constraint_prunes;
        self.symmetry_prunes += other.symmetry_prunes;
        self.raw_outputs += other.raw_outputs;
    }
}

impl fmt::Display for SearchStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "nodes={} constraint_prunes={} symmetry_prunes={} raw={} classes={} time={:.3}s",
            self.nodes,
            self.constraint_prunes,
            self.symmetry_prunes,
            self.raw_outputs,
            self.outputs,
            self.wall_time.as_secs_f64()
        )
    }
}

/// Isomorphism-class representatives, sorted, with the run's statistics.
#[derive(Debug, Clone)]
pub struct Enumeration<T> {
    pub items: Vec<T>,
    pub stats: SearchStats,
}

#[derive(Debug, Error)]
pub enum EnumError<T: fmt::Debug> {
    #[error("invalid search configuration: {0}")]
    Config(String),
    /// The node or time budget ran out; `partial` holds what was found.
    #[error("search budget exceeded after {} nodes", .0.stats.nodes)]
    BudgetExceeded(Enumeration<T>),
}

impl<T: fmt::Debug> EnumError<T> {
    fn map<U: fmt::Debug>(self, f: impl FnOnce(Enumeration<T>) -> Enumeration<U>) -> EnumError<U> {
        match self {
            EnumError::Config(s) => EnumError::Config(s),
            EnumError::BudgetExceeded(e) => EnumError::BudgetExceeded(f(e)),
        }
    }
}

// ---------------------------------------------------------------------------
// problem description

#[derive(Debug)]
enum Rules {
    CycleSet,
    Rack,
    /// `r[i*n+j] = i▷j`, `rinv[i*n+v] = j` with `i▷j = v`.
    Skew { r: Vec<u8>, rinv: Vec<u8> },
}

/// One independent search: a constraint family, an optional fixed diagonal
/// and the symmetry set used for lex-leader pruning.
#[derive(Debug)]
struct Problem {
    n: usize,
    rules: Rules,
    fixed_diagonal: Option<Vec<u8>>,
    diag_alldiff: bool,
    /// `sym[g*n..(g+1)*n]` are the images of the g-th symmetry.
    sym: Vec<u8>,
    sym_inv: Vec<u8>,
    /// Branching order over cells.
    order: Vec<u16>,
    /// The symmetries are the whole centralizer of the fixed diagonal, so
    /// every output is already its own canonical form.
    complete: bool,
}

impl Problem {
    fn new(n: usize, rules: Rules, fixed_diagonal: Option<Vec<u8>>, symmetries: &[Permutation]) -> Self {
        let mut sym = Vec::with_capacity(symmetries.len() * n);
        let mut sym_inv = Vec::with_capacity(symmetries.len() * n);
        for g in symmetries.iter().filter(|g| !g.is_identity()) {
            sym.extend_from_slice(g.images());
            sym_inv.extend_from_slice(g.inverse().images());
        }
        let diag_alldiff = fixed_diagonal.is_none();
        Problem {
            n,
            rules,
            fixed_diagonal,
            diag_alldiff,
            sym,
            sym_inv,
            order: (0..(n * n) as u16).collect(),
            complete: false,
        }
    }

    /// Branch over growing leading squares instead of row by row. Cells
    /// `(i,j)` and `(j,i)` are then decided close together, which wakes the
    /// diagonal instances of the laws early. Row-major order is better when
    /// the lex-leader constraints carry many symmetries.
    fn with_square_order(mut self) -> Self {
        let n = self.n;
        self.order.clear();
        for k in 0..n {
            for i in 0..=k {
                self.order.push((i * n + k) as u16);
                if i != k {
                    self.order.push((k * n + i) as u16);
                }
            }
        }
        self
    }

    fn sym_count(&self) -> usize {
        self.sym.len().checked_div(self.n).unwrap_or(0)
    }
}

fn skew_rules(rack: &RackTable) -> Rules {
    let m = rack.matrix();
    let n = m.n();
    let r = m.cells().to_vec();
    let mut rinv = vec![0u8; n * n];
    for i in 0..n {
        for j in 0..n {
            rinv[i * n + m.get(i, j)] = j as u8;
        }
    }
    Rules::Skew { r, rinv }
}

fn centralizer_symmetries(t: &Permutation, mode: SymmetryMode, k: usize) -> Vec<Permutation> {
    let group = Centralizer::new(t);
    match mode {
        SymmetryMode::Full => group.iter().collect(),
        SymmetryMode::Generators => group.generators(),
        SymmetryMode::Support => support_filter(&group, k),
        SymmetryMode::None => Vec::new(),
        SymmetryMode::Auto => {
            if group.order() <= AUTO_FULL_LIMIT {
                group.iter().collect()
            } else {
                support_filter(&group, k)
            }
        }
    }
}

fn automorphism_symmetries(rack: &RackTable, mode: SymmetryMode, k: usize) -> Vec<Permutation> {
    let auts = rack_automorphisms(rack);
    let full = match mode {
        SymmetryMode::None => return Vec::new(),
        SymmetryMode::Full => true,
        SymmetryMode::Auto => auts.len() as u128 <= AUTO_FULL_LIMIT,
        SymmetryMode::Generators | SymmetryMode::Support => false,
    };
    if full {
        auts
    } else {
        auts.into_iter().filter(|g| g.support_len() <= k).collect()
    }
}

// ---------------------------------------------------------------------------
// the propagation engine

const NONE: u8 = u8::MAX;

#[derive(Clone, Copy)]
enum Undo {
    Dom(u16, u32),
    Val(u16),
    Link(u16),
}

type Active = Vec<(u32, u16)>;

enum LexStep {
    Drop,
    Prune,
    Keep(u16, bool),
}

/// Shared stop conditions for a run.
struct Control {
    nodes: AtomicU64,
    abort: AtomicBool,
    start: Instant,
    node_budget: Option<u64>,
    time_budget: Option<Duration>,
    progress: Option<Arc<Progress>>,
}

impl Control {
    fn new(cfg: &SearchConfig) -> Self {
        Control {
            nodes: AtomicU64::new(0),
            abort: AtomicBool::new(false),
            start: Instant::now(),
            node_budget: cfg.node_budget,
            time_budget: cfg.time_budget,
            progress: cfg.progress.clone(),
        }
    }

    fn report_nodes(&self, delta: u64) {
        let total = self.nodes.fetch_add(delta, AtomicOrdering::Relaxed) + delta;
        if let Some(p) = &self.progress {
            p.nodes.fetch_add(delta, AtomicOrdering::Relaxed);
        }
        let over_nodes = self.node_budget.is_some_and(|b| total > b);
        let over_time = self.time_budget.is_some_and(|t| self.start.elapsed() > t);
        if over_nodes || over_time {
            self.abort.store(true, AtomicOrdering::Relaxed);
        }
    }

    fn aborted(&self) -> bool {
        self.abort.load(AtomicOrdering::Relaxed)
    }
}

struct Engine<'p> {
    n: usize,
    prob: &'p Problem,
    dom: Vec<u32>,
    val: Vec<u8>,
    links: Vec<Vec<u16>>,
    trail: Vec<Undo>,
    queue: Vec<u16>,
    full: u32,
    pool: Vec<Active>,
    stats: SearchStats,
    unreported: u64,
}

#[inline]
fn single(d: u32) -> bool {
    d & (d.wrapping_sub(1)) == 0
}

impl<'p> Engine<'p> {
    fn new(prob: &'p Problem) -> Self {
        let n = prob.n;
        let full = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };
        Engine {
            n,
            prob,
            dom: vec![full; n * n],
            val: vec![NONE; n * n],
            links: vec![Vec::new(); n * n],
            trail: Vec::new(),
            queue: Vec::new(),
            full,
            pool: Vec::new(),
            stats: SearchStats::default(),
            unreported: 0,
        }
    }

    fn undo_to(&mut self, mark: usize) {
        while self.trail.len() > mark {
            match self.trail.pop().unwrap() {
                Undo::Dom(c, old) => self.dom[c as usize] = old,
                Undo::Val(c) => self.val[c as usize] = NONE,
                Undo::Link(c) => {
                    self.links[c as usize].pop();
                }
            }
        }
        self.queue.clear();
    }

    /// Intersects the domain of `c` with `mask`; false on wipe-out.
    #[inline]
    fn restrict(&mut self, c: usize, mask: u32) -> bool {
        let old = self.dom[c];
        let new = old & mask;
        if new == old {
            return true;
        }
        if new == 0 {
            return false;
        }
        self.trail.push(Undo::Dom(c as u16, old));
        self.dom[c] = new;
        self.queue.push(c as u16);
        true
    }

    fn link(&mut self, x: usize, y: usize) -> bool {
        if x == y {
            return true;
        }
        if self.links[x].contains(&(y as u16)) {
            return true;
        }
        self.links[x].push(y as u16);
        self.links[y].push(x as u16);
        self.trail.push(Undo::Link(x as u16));
        self.trail.push(Undo::Link(y as u16));
        let (dx, dy) = (self.dom[x], self.dom[y]);
        self.restrict(x, dy) && self.restrict(y, dx)
    }

    /// Every value must still fit somewhere in the row; a value with a
    /// single place is forced there.
    fn row_check(&mut self, row: usize) -> bool {
        let n = self.n;
        let base = row * n;
        let (mut once, mut twice) = (0u32, 0u32);
        for j in 0..n {
            let d = self.dom[base + j];
            twice |= once & d;
            once |= d;
        }
        if once != self.full {
            return false;
        }
        let mut singles = once & !twice;
        while singles != 0 {
            let bit = singles & singles.wrapping_neg();
            singles &= singles - 1;
            for j in 0..n {
                let c = base + j;
                if self.dom[c] & bit != 0 {
                    if !self.restrict(c, bit) {
                        return false;
                    }
                    break;
                }
            }
        }
        true
    }

    fn diag_check(&mut self) -> bool {
        let n = self.n;
        let (mut once, mut twice) = (0u32, 0u32);
        for i in 0..n {
            let d = self.dom[i * n + i];
            twice |= once & d;
            once |= d;
        }
        if once != self.full {
            return false;
        }
        let mut singles = once & !twice;
        while singles != 0 {
            let bit = singles & singles.wrapping_neg();
            singles &= singles - 1;
            for i in 0..n {
                let c = i * n + i;
                if self.dom[c] & bit != 0 {
                    if !self.restrict(c, bit) {
                        return false;
                    }
                    break;
                }
            }
        }
        true
    }

    fn propagate(&mut self) -> bool {
        let n = self.n;
        while let Some(c) = self.queue.pop() {
            let c = c as usize;
            let d = self.dom[c];
            for t in 0..self.links[c].len() {
                let y = self.links[c][t] as usize;
                if !self.restrict(y, d) {
                    self.queue.clear();
                    return false;
                }
            }
            let (p, q) = (c / n, c % n);
            if !self.row_check(p) || (self.prob.diag_alldiff && p == q && !self.diag_check()) {
                self.queue.clear();
                return false;
            }
            if single(d) && self.val[c] == NONE && !self.assign(c, d.trailing_zeros() as u8) {
                self.queue.clear();
                return false;
            }
        }
        true
    }

    fn assign(&mut self, c: usize, v: u8) -> bool {
        let n = self.n;
        self.val[c] = v;
        self.trail.push(Undo::Val(c as u16));
        let (p, q) = (c / n, c % n);
        let keep = !(1u32 << v);
        for j in 0..n {
            if j != q && !self.restrict(p * n + j, keep) {
                return false;
            }
        }
        if self.prob.diag_alldiff && p == q {
            for i in 0..n {
                if i != p && !self.restrict(i * n + i, keep) {
                    return false;
                }
            }
        }
        let prob = self.prob;
        match &prob.rules {
            Rules::CycleSet => self.cycle_set_triggers(p, q, v as usize),
            Rules::Rack => self.rack_triggers(p, q, v as usize),
            Rules::Skew { r, rinv } => self.skew_triggers(p, q, v as usize, r, rinv),
        }
    }

    #[inline]
    fn known(&self, i: usize, j: usize) -> Option<usize> {
        let v = self.val[i * self.n + j];
        (v != NONE).then_some(v as usize)
    }

    /// `(i·j)·(i·k) = (j·i)·(j·k)`, symmetric in `i, j`. The new cell
    /// `(p,q)` is either `(i,j)` of instance `(p,q,k)` or `(i,k)` of
    /// instance `(p,j,q)`; the remaining roles are the same instances.
    fn cycle_set_triggers(&mut self, p: usize, q: usize, v: usize) -> bool {
        let n = self.n;
        if p != q {
            if let Some(c) = self.known(q, p) {
                for k in 0..n {
                    if let (Some(b), Some(d)) = (self.known(p, k), self.known(q, k)) {
                        if !self.link(v * n + b, c * n + d) {
                            return false;
                        }
                    }
                }
            }
        }
        for j in 0..n {
            if j == p {
                continue;
            }
            if let (Some(a), Some(c), Some(d)) = (self.known(p, j), self.known(j, p), self.known(j, q)) {
                if !self.link(a * n + v, c * n + d) {
                    return false;
                }
            }
        }
        true
    }

    /// `i▷(j▷k) = (i▷j)▷(i▷k)`; inner cells `(j,k)`, `(i,j)`, `(i,k)`.
    fn rack_triggers(&mut self, p: usize, q: usize, v: usize) -> bool {
        let n = self.n;
        // (p,q) as (j,k)
        for i in 0..n {
            if let (Some(a), Some(b)) = (self.known(i, p), self.known(i, q)) {
                if !self.link(i * n + v, a * n + b) {
                    return false;
                }
            }
        }
        // (p,q) as (i,j)
        for k in 0..n {
            if let (Some(x), Some(b)) = (self.known(q, k), self.known(p, k)) {
                if !self.link(p * n + x, v * n + b) {
                    return false;
                }
            }
        }
        // (p,q) as (i,k)
        for j in 0..n {
            if let (Some(x), Some(a)) = (self.known(j, q), self.known(p, j)) {
                if !self.link(p * n + x, a * n + v) {
                    return false;
                }
            }
        }
        true
    }

    /// Law `(i·(i▷j))·(i·k) = (j·i)·(j·k)` with inner cells
    /// `A=(i,i▷j) B=(i,k) C=(j,i) D=(j,k)`, and the homomorphism law
    /// `i·(j▷k) = (i·j)▷(i·k)`.
    fn skew_triggers(&mut self, p: usize, q: usize, v: usize, r: &[u8], rinv: &[u8]) -> bool {
        let n = self.n;
        let rk = |i: usize, j: usize| r[i * n + j] as usize;
        let rki = |i: usize, w: usize| rinv[i * n + w] as usize;

        // (p,q) as A: i = p, j with p▷j = q
        {
            let j = rki(p, q);
            if let Some(c) = self.known(j, p) {
                for k in 0..n {
                    if let (Some(b), Some(d)) = (self.known(p, k), self.known(j, k)) {
                        if !self.link(v * n + b, c * n + d) {
                            return false;
                        }
                    }
                }
            }
        }
        // (p,q) as B: i = p, k = q
        for j in 0..n {
            if let (Some(a), Some(c), Some(d)) = (self.known(p, rk(p, j)), self.known(j, p), self.known(j, q)) {
                if !self.link(a * n + v, c * n + d) {
                    return false;
                }
            }
        }
        // (p,q) as C: j = p, i = q
        if let Some(a) = self.known(q, rk(q, p)) {
            for k in 0..n {
                if let (Some(b), Some(d)) = (self.known(q, k), self.known(p, k)) {
                    if !self.link(a * n + b, v * n + d) {
                        return false;
                    }
                }
            }
        }
        // (p,q) as D: j = p, k = q
        for i in 0..n {
            if let (Some(a), Some(b), Some(c)) = (self.known(i, rk(i, p)), self.known(i, q), self.known(p, i)) {
                if !self.link(a * n + b, c * n + v) {
                    return false;
                }
            }
        }

        // homomorphism law, (p,q) as (i,j)
        for k in 0..n {
            let target = p * n + rk(q, k);
            if let Some(b) = self.known(p, k) {
                if !self.restrict(target, 1 << rk(v, b)) {
                    return false;
                }
            } else if let Some(w) = self.known(p, rk(q, k)) {
                if !self.restrict(p * n + k, 1 << rki(v, w)) {
                    return false;
                }
            }
        }
        // (p,q) as (i,k)
        for j in 0..n {
            if let Some(a) = self.known(p, j) {
                if !self.restrict(p * n + rk(j, q), 1 << rk(a, v)) {
                    return false;
                }
            }
        }
        // (p,q) as the product cell (i, j▷k)
        for j in 0..n {
            let k = rki(j, q);
            if let Some(a) = self.known(p, j) {
                if !self.restrict(p * n + k, 1 << rki(a, v)) {
                    return false;
                }
            }
        }
        true
    }

    /// Advances one symmetry's lex comparison as far as the current
    /// domains decide it, tightening bounds at the first open position.
    fn lex_step(&mut self, gi: usize, mut pos: usize) -> LexStep {
        let n = self.n;
        let prob = self.prob;
        let g = &prob.sym[gi * n..(gi + 1) * n];
        let ginv = &prob.sym_inv[gi * n..(gi + 1) * n];
        while pos < n * n {
            let (i, j) = (pos / n, pos % n);
            let a = pos;
            let b = g[i] as usize * n + g[j] as usize;
            let da = self.dom[a];
            let db = self.dom[b];
            let amin = da.trailing_zeros();
            let amax = 31 - da.leading_zeros();
            let (bmin, bmax) = if single(db) {
                let x = ginv[db.trailing_zeros() as usize] as u32;
                (x, x)
            } else {
                let (mut lo, mut hi) = (u32::MAX, 0u32);
                let mut bits = db;
                while bits != 0 {
                    let x = ginv[bits.trailing_zeros() as usize] as u32;
                    bits &= bits - 1;
                    lo = lo.min(x);
                    hi = hi.max(x);
                }
                (lo, hi)
            };
            if amax < bmin {
                return LexStep::Drop;
            }
            if amin > bmax {
                return LexStep::Prune;
            }
            if amin == amax && bmin == bmax {
                pos += 1;
                continue;
            }
            let mut changed = false;
            if amax > bmax {
                let mask = (1u32 << (bmax + 1)) - 1;
                changed |= self.dom[a] & mask != self.dom[a];
                if !self.restrict(a, mask) {
                    return LexStep::Prune;
                }
            }
            if bmin < amin {
                let mut mask = 0u32;
                let mut bits = self.dom[b];
                while bits != 0 {
                    let x = bits.trailing_zeros();
                    bits &= bits - 1;
                    if ginv[x as usize] as u32 >= amin {
                        mask |= 1 << x;
                    }
                }
                changed |= self.dom[b] & mask != self.dom[b];
                if !self.restrict(b, mask) {
                    return LexStep::Prune;
                }
            }
            return LexStep::Keep(pos as u16, changed);
        }
        LexStep::Drop
    }

    /// Runs propagation and lex-leader filtering to a common fixpoint,
    /// leaving the still-open symmetries in `out`.
    fn settle(&mut self, active: &[(u32, u16)], out: &mut Active) -> Result<(), bool> {
        if !self.propagate() {
            return Err(false);
        }
        out.clear();
        out.extend_from_slice(active);
        loop {
            let mut changed = false;
            let mut w = 0;
            for r in 0..out.len() {
                let (gi, pos) = out[r];
                match self.lex_step(gi as usize, pos as usize) {
                    LexStep::Drop => {}
                    LexStep::Prune => {
                        self.queue.clear();
                        return Err(true);
                    }
                    LexStep::Keep(p, ch) => {
                        out[w] = (gi, p);
                        w += 1;
                        changed |= ch;
                    }
                }
            }
            out.truncate(w);
            if !changed {
                return Ok(());
            }
            if !self.propagate() {
                return Err(false);
            }
        }
    }

    /// Fixes the diagonal (if any) and settles; returns the open symmetries.
    fn root(&mut self) -> Option<Active> {
        let n = self.n;
        // singleton domains (n = 1) are never narrowed, so queue everything
        self.queue.extend(0..(n * n) as u16);
        if let Some(diag) = &self.prob.fixed_diagonal {
            for (i, &t) in diag.iter().enumerate() {
                if !self.restrict(i * n + i, 1 << t) {
                    return None;
                }
            }
        }
        let all: Active = (0..self.prob.sym_count() as u32).map(|g| (g, 0)).collect();
        let mut out = Vec::new();
        self.settle(&all, &mut out).ok()?;
        Some(out)
    }

    fn decide(&mut self, cell: usize, v: u32, active: &[(u32, u16)], out: &mut Active) -> bool {
        if !self.restrict(cell, 1 << v) {
            self.stats.constraint_prunes += 1;
            return false;
        }
        match self.settle(active, out) {
            Ok(()) => true,
            Err(by_symmetry) => {
                if by_symmetry {
                    self.stats.symmetry_prunes += 1;
                } else {
                    self.stats.constraint_prunes += 1;
                }
                false
            }
        }
    }

    fn next_cell(&self) -> Option<usize> {
        self.prob.order.iter().map(|&c| c as usize).find(|&c| self.val[c] == NONE)
    }

    fn snapshot(&self) -> Matrix {
        Matrix::from_cells_unchecked(self.n, self.val.clone())
    }

    fn count_node(&mut self, ctl: &Control) {
        self.stats.nodes += 1;
        self.unreported += 1;
        if self.unreported >= 1024 {
            ctl.report_nodes(self.unreported);
            self.unreported = 0;
        }
    }

    fn flush(&mut self, ctl: &Control) {
        ctl.report_nodes(self.unreported);
        self.unreported = 0;
    }

    fn search(&mut self, active: &[(u32, u16)], out: &mut Vec<Matrix>, ctl: &Control) {
        self.count_node(ctl);
        if ctl.aborted() {
            return;
        }
        let Some(cell) = self.next_cell() else {
            out.push(self.snapshot());
            self.stats.raw_outputs += 1;
            if let Some(p) = &ctl.progress {
                p.found.fetch_add(1, AtomicOrdering::Relaxed);
            }
            return;
        };
        let mut child = self.pool.pop().unwrap_or_default();
        let mut bits = self.dom[cell];
        while bits != 0 {
            let v = bits.trailing_zeros();
            bits &= bits - 1;
            let mark = self.trail.len();
            if self.decide(cell, v, active, &mut child) {
                self.search(&child, out, ctl);
            }
            self.undo_to(mark);
        }
        self.pool.push(child);
    }

    /// Replays a decision path from the root state; `None` if it fails.
    fn replay(&mut self, root: &[(u32, u16)], path: &[(u16, u8)]) -> Option<Active> {
        let mut cur: Active = root.to_vec();
        let mut next = Vec::new();
        for &(cell, v) in path {
            if !self.decide(cell as usize, v as u32, &cur, &mut next) {
                return None;
            }
            std::mem::swap(&mut cur, &mut next);
        }
        Some(cur)
    }
}

// ---------------------------------------------------------------------------
// driver

struct Task {
    problem: usize,
    path: Vec<(u16, u8)>,
}

/// Raw outputs of a run, tagged with their problem index.
struct RawRun {
    found: Vec<(usize, Matrix)>,
    stats: SearchStats,
    aborted: bool,
}

fn frontier_target(jobs: usize) -> usize {
    16 * jobs.max(1)
}

fn run_problems(problems: &[Problem], cfg: &SearchConfig) -> RawRun {
    let ctl = Control::new(cfg);
    let jobs = if cfg.jobs == 0 {
        rayon::current_num_threads()
    } else {
        cfg.jobs
    };
    let target = frontier_target(jobs);

    // Split each problem into subtrees by expanding its first decisions.
    let mut tasks = Vec::new();
    let mut found = Vec::new();
    let mut stats = SearchStats::default();
    for (pi, prob) in problems.iter().enumerate() {
        let mut eng = Engine::new(prob);
        let Some(root) = eng.root() else {
            continue;
        };
        let root_mark = eng.trail.len();
        let mut frontier: Vec<Vec<(u16, u8)>> = vec![Vec::new()];
        let mut depth = 0;
        while frontier.len() < target && depth < 6 && !frontier.is_empty() {
            let mut next = Vec::new();
            for path in &frontier {
                eng.count_node(&ctl);
                let Some(active) = eng.replay(&root, path) else {
                    eng.undo_to(root_mark);
                    continue;
                };
                match eng.next_cell() {
                    None => {
                        found.push((pi, eng.snapshot()));
                        eng.stats.raw_outputs += 1;
                    }
                    Some(cell) => {
                        let mut bits = eng.dom[cell];
                        let mut scratch = Vec::new();
                        while bits != 0 {
                            let v = bits.trailing_zeros();
                            bits &= bits - 1;
                            let mark = eng.trail.len();
                            if eng.decide(cell, v, &active, &mut scratch) {
                                let mut child = path.clone();
                                child.push((cell as u16, v as u8));
                                next.push(child);
                            }
                            eng.undo_to(mark);
                        }
                    }
                }
                eng.undo_to(root_mark);
            }
            frontier = next;
            depth += 1;
        }
        eng.flush(&ctl);
        stats.absorb(&eng.stats);
        tasks.extend(frontier.into_iter().map(|path| Task { problem: pi, path }));
    }
    if let Some(p) = &cfg.progress {
        p.tasks_total.fetch_add(tasks.len() as u64, AtomicOrdering::Relaxed);
    }

    let work = || {
        tasks
            .par_iter()
            .map(|task| {
                let prob = &problems[task.problem];
                let mut eng = Engine::new(prob);
                let mut out = Vec::new();
                if let Some(root) = eng.root() {
                    if let Some(active) = eng.replay(&root, &task.path) {
                        eng.search(&active, &mut out, &ctl);
                    }
                }
                eng.flush(&ctl);
                if let Some(p) = &ctl.progress {
                    p.tasks_done.fetch_add(1, AtomicOrdering::Relaxed);
                }
                (task.problem, out, eng.stats)
            })
            .collect::<Vec<_>>()
    };
    let results = if cfg.jobs == 0 {
        work()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.jobs)
            .build()
            .map(|pool| pool.install(work))
            .unwrap_or_else(|_| work())
    };
    for (pi, out, s) in results {
        stats.absorb(&s);
        found.extend(out.into_iter().map(|m| (pi, m)));
    }
    stats.wall_time = ctl.start.elapsed();
    RawRun {
        found,
        stats,
        aborted: ctl.aborted(),
    }
}

fn validate(cfg: &SearchConfig, kind: Kind) -> Result<(), String> {
    if cfg.kind != kind {
        return Err(format!("expected kind {kind:?}, got {:?}", cfg.kind));
    }
    if cfg.n == 0 || cfg.n > MAX_SEARCH_SIZE {
        return Err(format!("size {} outside 1..={MAX_SEARCH_SIZE}", cfg.n));
    }
    if let Some(filter) = &cfg.diagonal_filter {
        if let Some(bad) = filter.iter().find(|ct| ct.degree() != cfg.n) {
            return Err(format!("diagonal class {bad} is not a partition of {}", cfg.n));
        }
    }
    Ok(())
}

fn diagonal_classes(cfg: &SearchConfig) -> Vec<CycleType> {
    partitions(cfg.n)
        .into_iter()
        .filter(|ct| cfg.diagonal_filter.as_ref().is_none_or(|f| f.contains(ct)))
        .collect()
}

/// Problems with the diagonal fixed to each class representative.
fn diagonal_problems(cfg: &SearchConfig, rules: impl Fn() -> Rules) -> Vec<Problem> {
    diagonal_classes(cfg)
        .into_iter()
        .map(|ct| {
            let t = ct.representative();
            let sym = centralizer_symmetries(&t, cfg.symmetry, cfg.support_k);
            let mut p = Problem::new(cfg.n, rules(), Some(t.images().to_vec()), &sym);
            p.complete = p.sym_count() as u128 + 1 == ct.centralizer_order();
            if ct.centralizer_order() <= SQUARE_ORDER_LIMIT {
                p.with_square_order()
            } else {
                p
            }
        })
        .collect()
}

/// Canonical dedup of single-table outputs; returns sorted canonical forms.
fn dedup_single(problems: &[Problem], found: Vec<(usize, Matrix)>) -> Vec<Matrix> {
    let mut keys: Vec<LabeledOrbitKey> = found
        .into_par_iter()
        .map(|(p, m)| {
            if problems[p].complete {
                let diag_class = m.diagonal_permutation().expect("fixed diagonal").cycle_type();
                let key = LabeledOrbitKey { diag_class, canon: vec![m] };
                debug_assert_eq!(Ok(&key), canonical_form(&key.canon[0]).as_ref());
                key
            } else {
                canonical_form(&m).expect("enumerated tables have bijective diagonals")
            }
        })
        .collect();
    keys.par_sort_unstable();
    keys.dedup();
    keys.into_iter().map(|k| k.canon.into_iter().next().unwrap()).collect()
}

fn finish<T: fmt::Debug>(items: Vec<T>, mut stats: SearchStats, aborted: bool) -> Result<Enumeration<T>, EnumError<T>> {
    stats.outputs = items.len() as u64;
    let e = Enumeration { items, stats };
    if aborted {
        Err(EnumError::BudgetExceeded(e))
    } else {
        Ok(e)
    }
}

/// All cycle sets of size `cfg.n` up to isomorphism, as canonical forms in
/// ascending key order.
pub fn enumerate_cycle_sets(cfg: &SearchConfig) -> Result<Enumeration<CycleSetTable>, EnumError<CycleSetTable>> {
    validate(cfg, Kind::CycleSet).map_err(EnumError::Config)?;
    let problems = diagonal_problems(cfg, || Rules::CycleSet);
    let raw = run_problems(&problems, cfg);
    let items = dedup_single(&problems, raw.found)
        .into_iter()
        .map(CycleSetTable::new_unchecked)
        .collect();
    finish(items, raw.stats, raw.aborted)
}

/// All racks of size `cfg.n` up to isomorphism.
pub fn enumerate_racks(cfg: &SearchConfig) -> Result<Enumeration<RackTable>, EnumError<RackTable>> {
    validate(cfg, Kind::Rack).map_err(EnumError::Config)?;
    let problems = diagonal_problems(cfg, || Rules::Rack);
    let raw = run_problems(&problems, cfg);
    let items = dedup_single(&problems, raw.found)
        .into_iter()
        .map(RackTable::new_unchecked)
        .collect();
    finish(items, raw.stats, raw.aborted)
}

/// Skew cycle sets over the given pairwise non-isomorphic racks, one per
/// isomorphism class of pairs, sorted by rack position then `·` table.
pub fn enumerate_skew_over_racks(
    racks: &[RackTable],
    cfg: &SearchConfig,
) -> Result<Enumeration<SkewCycleSet>, EnumError<SkewCycleSet>> {
    validate(cfg, Kind::SkewOverRack).map_err(EnumError::Config)?;
    if let Some(bad) = racks.iter().find(|r| r.n() != cfg.n) {
        return Err(EnumError::Config(format!("rack of size {} in a size-{} search", bad.n(), cfg.n)));
    }
    let problems: Vec<Problem> = racks
        .par_iter()
        .map(|rack| {
            let sym = automorphism_symmetries(rack, cfg.symmetry, cfg.support_k);
            Problem::new(cfg.n, skew_rules(rack), None, &sym)
        })
        .collect();
    let raw = run_problems(&problems, cfg);

    let mut keyed: Vec<(LabeledOrbitKey, usize, Matrix)> = raw
        .found
        .into_par_iter()
        .map(|(pi, m)| {
            let key = canonical_form_skew(racks[pi].matrix(), &m).expect("rack and skew diagonals are bijective");
            (key, pi, m)
        })
        .collect();
    keyed.par_sort_unstable_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    keyed.dedup_by(|later, earlier| later.0 == earlier.0);
    let mut pairs: Vec<(usize, Matrix)> = keyed.into_iter().map(|(_, pi, m)| (pi, m)).collect();
    pairs.sort();
    let items = pairs
        .into_iter()
        .map(|(pi, m)| SkewCycleSet::new_unchecked(m, racks[pi].matrix().clone()))
        .collect();
    finish(items, raw.stats, raw.aborted)
}

/// Skew cycle sets over a single rack.
pub fn enumerate_skew_cycle_sets(
    rack: &RackTable,
    cfg: &SearchConfig,
) -> Result<Enumeration<SkewCycleSet>, EnumError<SkewCycleSet>> {
    enumerate_skew_over_racks(std::slice::from_ref(rack), cfg)
}

/// Which solutions [`enumerate_solutions`] produces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Involutive,
    NonInvolutive,
    /// Non-involutive solutions whose derived rack is a quandle.
    NonInvolutiveBiquandle,
    All,
}

fn with_kind(cfg: &SearchConfig, kind: Kind) -> SearchConfig {
    let mut c = cfg.clone();
    c.kind = kind;
    c
}

/// Non-involutive skew cycle sets of size `n`: pairs over every
/// non-trivial rack (quandles only when `quandles_only`).
pub fn enumerate_non_involutive(
    cfg: &SearchConfig,
    quandles_only: bool,
) -> Result<Enumeration<SkewCycleSet>, EnumError<SkewCycleSet>> {
    let mut rack_cfg = with_kind(cfg, Kind::Rack);
    rack_cfg.diagonal_filter = None;
    let racks = enumerate_racks(&rack_cfg).map_err(|e| {
        e.map(|partial| Enumeration {
            items: Vec::new(),
            stats: partial.stats,
        })
    })?;
    let chosen: Vec<RackTable> = racks
        .items
        .into_iter()
        .filter(|r| !r.is_trivial() && (!quandles_only || is_quandle(r)))
        .collect();
    let mut result = enumerate_skew_over_racks(&chosen, &with_kind(cfg, Kind::SkewOverRack));
    let add = |e: &mut Enumeration<SkewCycleSet>| {
        e.stats.absorb(&racks.stats);
        e.stats.wall_time += racks.stats.wall_time;
    };
    match &mut result {
        Ok(e) => add(e),
        Err(EnumError::BudgetExceeded(e)) => add(e),
        Err(EnumError::Config(_)) => {}
    }
    result
}

/// Explicit solutions of size `cfg.n` in the requested family, one per
/// isomorphism class.
pub fn enumerate_solutions(
    cfg: &SearchConfig,
    family: Family,
) -> Result<Enumeration<SolutionMap>, EnumError<SolutionMap>> {
    let involutive = |cfg: &SearchConfig| {
        enumerate_cycle_sets(&with_kind(cfg, Kind::CycleSet)).map(|e| Enumeration {
            items: e.items.iter().map(cycle_set_to_solution).collect::<Vec<_>>(),
            stats: e.stats,
        })
    };
    let skew = |cfg: &SearchConfig, quandles: bool| {
        enumerate_non_involutive(cfg, quandles).map(|e| Enumeration {
            items: e.items.iter().map(skew_cycle_set_to_solution).collect::<Vec<_>>(),
            stats: e.stats,
        })
    };
    let convert_cs = |e: Enumeration<CycleSetTable>| Enumeration {
        items: e.items.iter().map(cycle_set_to_solution).collect(),
        stats: e.stats,
    };
    let convert_sk = |e: Enumeration<SkewCycleSet>| Enumeration {
        items: e.items.iter().map(skew_cycle_set_to_solution).collect(),
        stats: e.stats,
    };
    match family {
        Family::Involutive => involutive(cfg).map_err(|e| e.map(convert_cs)),
        Family::NonInvolutive => skew(cfg, false).map_err(|e| e.map(convert_sk)),
        Family::NonInvolutiveBiquandle => skew(cfg, true).map_err(|e| e.map(convert_sk)),
        Family::All => {
            let mut a = involutive(cfg).map_err(|e| e.map(convert_cs))?;
            let b = skew(cfg, false).map_err(|e| e.map(convert_sk))?;
            a.items.extend(b.items);
            a.stats.absorb(&b.stats);
            a.stats.wall_time += b.stats.wall_time;
            a.stats.outputs = a.items.len() as u64;
            Ok(a)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tables::{check_cycle_set, check_rack, check_skew_cycle_set};

    fn count_cycle_sets(n: usize, mode: SymmetryMode) -> usize {
        let cfg = SearchConfig::new(n, Kind::CycleSet).symmetry(mode);
        enumerate_cycle_sets(&cfg).unwrap().items.len()
    }

    #[test]
    fn small_cycle_set_counts() {
        let expected = [1, 2, 5, 23, 88];
        for (n, &want) in (1..=5).zip(expected.iter()) {
            assert_eq!(count_cycle_sets(n, SymmetryMode::Auto), want, "n={n}");
        }
    }

    #[test]
    fn symmetry_modes_agree() {
        for n in 2..=5 {
            let full = count_cycle_sets(n, SymmetryMode::Full);
            assert_eq!(count_cycle_sets(n, SymmetryMode::Generators), full);
            assert_eq!(count_cycle_sets(n, SymmetryMode::Support), full);
        }
    }

    #[test]
    fn full_symmetry_needs_no_dedup() {
        let cfg = SearchConfig::new(5, Kind::CycleSet).symmetry(SymmetryMode::Full);
        let e = enumerate_cycle_sets(&cfg).unwrap();
        assert_eq!(e.stats.raw_outputs, e.stats.outputs);
    }

    #[test]
    fn small_rack_counts() {
        let expected = [1, 2, 6, 19, 74];
        for (n, &want) in (1..=5).zip(expected.iter()) {
            let e = enumerate_racks(&SearchConfig::new(n, Kind::Rack)).unwrap();
            assert_eq!(e.items.len(), want, "n={n}");
            assert!(e.items.iter().all(|r| check_rack(r.matrix()).is_ok()));
        }
    }

    #[test]
    fn outputs_are_valid_and_canonical() {
        let e = enumerate_cycle_sets(&SearchConfig::new(4, Kind::CycleSet)).unwrap();
        for m in &e.items {
            assert!(check_cycle_set(m.matrix()).is_ok());
            assert_eq!(canonical_form(m.matrix()).unwrap().matrix(), m.matrix());
            let t = m.t_map();
            assert_eq!(t, t.cycle_type().representative());
        }
    }

    #[test]
    fn skew_over_trivial_rack_gives_cycle_sets() {
        for n in 1..=4 {
            let cfg = SearchConfig::new(n, Kind::SkewOverRack);
            let e = enumerate_skew_cycle_sets(&RackTable::trivial(n), &cfg).unwrap();
            assert_eq!(e.items.len(), count_cycle_sets(n, SymmetryMode::Auto));
            for sc in &e.items {
                assert!(check_skew_cycle_set(sc.m(), sc.rack().matrix()).is_ok());
            }
        }
    }

    #[test]
    fn non_involutive_small_counts() {
        let counts: Vec<usize> = (2..=4)
            .map(|n| {
                enumerate_non_involutive(&SearchConfig::new(n, Kind::SkewOverRack), false)
                    .unwrap()
                    .items
                    .len()
            })
            .collect();
        // 230 non-involutive classes at n = 4; with the 23 involutive ones, 253
        assert_eq!(counts, vec![2, 21, 230]);
    }

    #[test]
    fn diagonal_filter_restricts_classes() {
        let cfg = SearchConfig::new(4, Kind::CycleSet).diagonal(vec![CycleType::new(vec![1, 1, 1, 1])]);
        let e = enumerate_cycle_sets(&cfg).unwrap();
        assert_eq!(e.items.len(), 5); // square-free cycle sets of size 4
        assert!(e.items.iter().all(|m| m.t_map().is_identity()));
    }

    #[test]
    fn node_budget_reports_partial() {
        let mut cfg = SearchConfig::new(6, Kind::CycleSet);
        cfg.node_budget = Some(10);
        match enumerate_cycle_sets(&cfg) {
            Err(EnumError::BudgetExceeded(partial)) => assert!(partial.items.len() < 595),
            other => panic!("expected budget error, got {:?}", other.map(|e| e.items.len())),
        }
    }

    #[test]
    fn bad_configs_are_rejected() {
        assert!(matches!(
            enumerate_cycle_sets(&SearchConfig::new(0, Kind::CycleSet)),
            Err(EnumError::Config(_))
        ));
        assert!(matches!(
            enumerate_cycle_sets(&SearchConfig::new(3, Kind::Rack)),
            Err(EnumError::Config(_))
        ));
        let cfg = SearchConfig::new(3, Kind::CycleSet).diagonal(vec![CycleType::new(vec![2])]);
        assert!(matches!(enumerate_cycle_sets(&cfg), Err(EnumError::Config(_))));
    }
}
