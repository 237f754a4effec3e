//! The featureless m-ary case.
//!
//! With no features, a leave-one-out predictor only sees the composition
//! (count vector) of the N−1 training labels, and the regret of a sequence
//! with composition `v` collapses to
//!
//! ```text
//! R(v) = Σ_j (v_j/N) · log( (v_j/N) / q(j | v − î_j) )
//! ```
//!
//! The min-max optimal assignment equalizes this quantity across all
//! compositions. [`solve_equalizer`] finds it by sweeping pairwise
//! equalization moves along the appearance graph; [`regret_extrema`] sweeps
//! all compositions exactly; [`epsilon_recursion`] iterates the divergent
//! recursion that drives the (m−1)/N lower-bound argument.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::loo::{Alphabet, Dataset, Predictor, ReferenceClass, Regret};

/// Count vector of symbol appearances. Total N for sequence compositions,
/// N−1 for training compositions.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Composition {
    counts: Vec<u32>,
}

impl Composition {
    pub fn new(counts: Vec<u32>) -> Self {
        Composition { counts }
    }

    pub fn from_labels(m: usize, labels: &[u8]) -> Self {
        let mut counts = vec![0u32; m];
        for &y in labels {
            counts[y as usize] += 1;
        }
        Composition { counts }
    }

    pub fn m(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u32 {
        self.counts.iter().sum()
    }

    pub fn count(&self, j: usize) -> u32 {
        self.counts[j]
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    /// `self + î_j`
    pub fn bumped(&self, j: usize) -> Composition {
        let mut c = self.clone();
        c.counts[j] += 1;
        c
    }

    /// `self − î_j`, if the count allows it.
    pub fn dropped(&self, j: usize) -> Option<Composition> {
        if self.counts[j] == 0 {
            return None;
        }
        let mut c = self.clone();
        c.counts[j] -= 1;
        Some(c)
    }
}

impl std::fmt::Display for Composition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.counts.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// Number of compositions of `total` into `m` parts: C(total+m−1, m−1).
pub fn composition_count(total: u32, m: usize) -> Option<u64> {
    let mut acc: u128 = 1;
    for i in 1..m as u128 {
        acc = acc.checked_mul(total as u128 + i)?;
        acc /= i;
        if acc > u64::MAX as u128 {
            return None;
        }
    }
    Some(acc as u64)
}

/// Visit every composition of `total` into `m` parts in lexicographic order.
pub fn for_each_composition(total: u32, m: usize, mut f: impl FnMut(&[u32])) {
    assert!(m >= 1);
    let mut buf = vec![0u32; m];
    fn rec(buf: &mut [u32], pos: usize, rem: u32, f: &mut impl FnMut(&[u32])) {
        if pos == buf.len() - 1 {
            buf[pos] = rem;
            f(buf);
            return;
        }
        for v in 0..=rem {
            buf[pos] = v;
            rec(buf, pos + 1, rem - v, f);
        }
    }
    rec(&mut buf, 0, total, &mut f);
}

/// All compositions of `total` into `m` parts, lexicographically sorted.
pub fn compositions(total: u32, m: usize) -> Vec<Composition> {
    let mut out = Vec::new();
    for_each_composition(total, m, |c| out.push(Composition::new(c.to_vec())));
    out
}

/// A probability assignment over symbols for every training composition.
pub trait MultinomialAssignment {
    /// Alphabet size m.
    fn alphabet_size(&self) -> usize;

    /// Sequence length N (training compositions have total N−1).
    fn sequence_len(&self) -> u32;

    /// `q(symbol | train)`.
    fn prob(&self, train: &Composition, symbol: usize) -> f64;

    fn probs(&self, train: &Composition) -> Vec<f64> {
        (0..self.alphabet_size()).map(|j| self.prob(train, j)).collect()
    }

    /// When `q(j|e)` depends on `e` only through the count `e(j)`, the rule
    /// is summarized by the vector `ln q` indexed by that count. Enables the
    /// table-free exhaustive sweep in [`regret_extrema`].
    fn ln_prob_by_count(&self) -> Option<Vec<f64>> {
        None
    }
}

/// The add-β family: `q(j|e) = (e(j)+β) / (N−1+mβ)`.
#[derive(Debug, Clone)]
pub struct AddConstant {
    m: usize,
    n: u32,
    beta: f64,
}

impl AddConstant {
    pub fn new(m: usize, n: u32, beta: f64) -> Result<Self> {
        if m < 2 || n < 2 {
            return Err(Error::InvalidInput(format!("need m >= 2 and N >= 2, got m={m}, N={n}")));
        }
        if !(beta > 0.0) {
            return Err(Error::InvalidInput(format!("beta must be positive, got {beta}")));
        }
        Ok(AddConstant { m, n, beta })
    }
}

impl MultinomialAssignment for AddConstant {
    fn alphabet_size(&self) -> usize {
        self.m
    }

    fn sequence_len(&self) -> u32 {
        self.n
    }

    fn prob(&self, train: &Composition, symbol: usize) -> f64 {
        (train.count(symbol) as f64 + self.beta)
            / (self.n as f64 - 1.0 + self.m as f64 * self.beta)
    }

    fn ln_prob_by_count(&self) -> Option<Vec<f64>> {
        let denom = self.n as f64 - 1.0 + self.m as f64 * self.beta;
        Some((0..self.n).map(|c| ((c as f64 + self.beta) / denom).ln()).collect())
    }
}

/// The shifted-empirical rule `q(j|e) = θ̂_j + (1 − m·θ̂_j)/(N−1)` with
/// `θ̂_j = e(j)/(N−1)`, an equalizer of the second-order regret term.
#[derive(Debug, Clone)]
pub struct ShiftedEmpirical {
    m: usize,
    n: u32,
}

impl ShiftedEmpirical {
    pub fn new(m: usize, n: u32) -> Result<Self> {
        if m < 2 {
            return Err(Error::InvalidInput(format!("need m >= 2, got {m}")));
        }
        // positivity of every assigned probability needs N−1 > m
        if n as usize <= m + 1 {
            return Err(Error::InvalidInput(format!(
                "shifted-empirical rule needs N-1 > m, got N={n}, m={m}"
            )));
        }
        Ok(ShiftedEmpirical { m, n })
    }

    fn q_for_count(&self, count: u32) -> f64 {
        let nm1 = self.n as f64 - 1.0;
        let theta = count as f64 / nm1;
        theta + (1.0 - self.m as f64 * theta) / nm1
    }
}

impl MultinomialAssignment for ShiftedEmpirical {
    fn alphabet_size(&self) -> usize {
        self.m
    }

    fn sequence_len(&self) -> u32 {
        self.n
    }

    fn prob(&self, train: &Composition, symbol: usize) -> f64 {
        self.q_for_count(train.count(symbol))
    }

    fn ln_prob_by_count(&self) -> Option<Vec<f64>> {
        Some((0..self.n).map(|c| self.q_for_count(c).ln()).collect())
    }
}

/// Explicit table over every training composition, the representation the
/// equalizer solver edits in place. Deterministically ordered.
#[derive(Debug, Clone)]
pub struct TableAssignment {
    m: usize,
    n: u32,
    table: BTreeMap<Composition, Vec<f64>>,
}

impl TableAssignment {
    /// Materialize any rule into a table (domain: all training compositions).
    pub fn from_rule(rule: &impl MultinomialAssignment) -> Result<Self> {
        let m = rule.alphabet_size();
        let n = rule.sequence_len();
        let count = composition_count(n - 1, m)
            .ok_or_else(|| Error::CapacityExceeded("training composition count overflows".into()))?;
        if count > 100_000 {
            return Err(Error::CapacityExceeded(format!(
                "{count} training compositions exceed the table guard"
            )));
        }
        let mut table = BTreeMap::new();
        for e in compositions(n - 1, m) {
            let q = rule.probs(&e);
            table.insert(e, q);
        }
        Ok(TableAssignment { m, n, table })
    }

    pub fn training_compositions(&self) -> impl Iterator<Item = &Composition> {
        self.table.keys()
    }

    fn probs_mut(&mut self, e: &Composition) -> &mut Vec<f64> {
        self.table.get_mut(e).expect("training composition in table domain")
    }

    /// CSV rows `e_0,..,e_{m−1},q_0,..,q_{m−1}`, one per training composition.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for j in 0..self.m {
            out.push_str(&format!("e_{j},"));
        }
        for j in 0..self.m {
            out.push_str(&format!("q_{j}"));
            out.push(if j + 1 == self.m { '\n' } else { ',' });
        }
        for (e, q) in &self.table {
            for c in e.counts() {
                out.push_str(&format!("{c},"));
            }
            for (j, p) in q.iter().enumerate() {
                out.push_str(&crate::format_sig(*p, 9));
                out.push(if j + 1 == self.m { '\n' } else { ',' });
            }
        }
        out
    }
}

impl MultinomialAssignment for TableAssignment {
    fn alphabet_size(&self) -> usize {
        self.m
    }

    fn sequence_len(&self) -> u32 {
        self.n
    }

    fn prob(&self, train: &Composition, symbol: usize) -> f64 {
        self.table[train][symbol]
    }

    fn probs(&self, train: &Composition) -> Vec<f64> {
        self.table[train].clone()
    }
}

/// Leave-one-out regret of the sequence composition `v` under `q`, in nats.
///
/// Terms with `v(j) = 0` contribute nothing; a zero probability on a symbol
/// that does appear yields `+inf`.
pub fn regret_of_composition(v: &Composition, q: &impl MultinomialAssignment) -> Regret {
    let n = q.sequence_len();
    debug_assert_eq!(v.total(), n, "sequence composition must have total N");
    let nf = n as f64;
    let mut r = 0.0f64;
    for j in 0..v.m() {
        let vj = v.count(j);
        if vj == 0 {
            continue;
        }
        let e = v.dropped(j).expect("count positive");
        let qj = q.prob(&e, j);
        if qj <= 0.0 {
            return Regret::INFINITE;
        }
        let p = vj as f64 / nf;
        r += p * (p / qj).ln();
    }
    Regret::from_nats(r)
}

/// Exact extrema of the regret over all sequence compositions.
#[derive(Debug, Clone)]
pub struct RegretExtrema {
    pub max: Regret,
    pub argmax: Composition,
    pub min: Regret,
    pub argmin: Composition,
}

impl RegretExtrema {
    pub fn spread(&self) -> f64 {
        self.max.nats() - self.min.nats()
    }
}

/// Sweep every sequence composition and report max/min regret (ties broken
/// toward the lexicographically smallest composition).
pub fn regret_extrema(q: &impl MultinomialAssignment) -> Result<RegretExtrema> {
    let m = q.alphabet_size();
    let n = q.sequence_len();
    let total = composition_count(n, m)
        .ok_or_else(|| Error::CapacityExceeded("composition count overflows".into()))?;
    if total > 100_000_000 {
        return Err(Error::CapacityExceeded(format!(
            "{total} sequence compositions exceed the sweep guard"
        )));
    }

    let nf = n as f64;
    let mut max = f64::NEG_INFINITY;
    let mut min = f64::INFINITY;
    let mut argmax: Vec<u32> = Vec::new();
    let mut argmin: Vec<u32> = Vec::new();

    if let Some(lnq) = q.ln_prob_by_count() {
        // q(j|e) depends only on e(j) = v(j)−1: precompute the per-count
        // regret contribution and turn the sweep into table lookups.
        let mut term = vec![0.0f64; n as usize + 1];
        for v in 1..=n {
            let p = v as f64 / nf;
            term[v as usize] = p * (p.ln() - lnq[(v - 1) as usize]);
        }
        for_each_composition(n, m, |c| {
            let mut r = 0.0;
            for &v in c {
                r += term[v as usize];
            }
            if r > max {
                max = r;
                argmax = c.to_vec();
            }
            if r < min {
                min = r;
                argmin = c.to_vec();
            }
        });
    } else {
        for_each_composition(n, m, |c| {
            let v = Composition::new(c.to_vec());
            let r = regret_of_composition(&v, q).nats();
            if r > max {
                max = r;
                argmax = c.to_vec();
            }
            if r < min {
                min = r;
                argmin = c.to_vec();
            }
        });
    }

    Ok(RegretExtrema {
        max: Regret::from_nats(max),
        argmax: Composition::new(argmax),
        min: Regret::from_nats(min),
        argmin: Composition::new(argmin),
    })
}

/// An edge of the appearance graph: sequence compositions `hi = e + î_k` and
/// `lo = e + î_l` share the training composition `e` and differ by
/// `î_k − î_l`.
#[derive(Debug, Clone)]
pub struct AppearanceEdge {
    pub train: Composition,
    pub k: usize,
    pub l: usize,
}

impl AppearanceEdge {
    pub fn hi(&self) -> Composition {
        self.train.bumped(self.k)
    }

    pub fn lo(&self) -> Composition {
        self.train.bumped(self.l)
    }
}

/// Graph over sequence compositions; two nodes are adjacent iff they differ
/// by `î_k − î_l` for some symbol pair. Always connected.
#[derive(Debug, Clone)]
pub struct AppearanceGraph {
    pub m: usize,
    pub n: u32,
    pub nodes: Vec<Composition>,
    pub edges: Vec<AppearanceEdge>,
}

pub fn appearance_graph(m: usize, n: u32) -> AppearanceGraph {
    let nodes = compositions(n, m);
    let mut edges = Vec::new();
    for e in compositions(n - 1, m) {
        for k in 0..m {
            for l in (k + 1)..m {
                edges.push(AppearanceEdge { train: e.clone(), k, l });
            }
        }
    }
    AppearanceGraph { m, n, nodes, edges }
}

fn regret_without_symbol(v: &Composition, q: &TableAssignment, skip: usize) -> f64 {
    let nf = q.sequence_len() as f64;
    let mut r = 0.0;
    for j in 0..v.m() {
        if j == skip {
            continue;
        }
        let vj = v.count(j);
        if vj == 0 {
            continue;
        }
        let e = v.dropped(j).expect("count positive");
        let qj = q.prob(&e, j);
        let p = vj as f64 / nf;
        r += p * (p / qj).ln();
    }
    r
}

const BISECTION_ITERS: usize = 200;

/// Equalize the regrets of the adjacent compositions `v = e + î_k` and
/// `v' = e + î_l` by moving probability mass between symbols `k` and `l` at
/// their shared training composition `e`. All other entries of the
/// assignment are untouched. No-op when the regrets already agree.
pub fn equalize_pair(
    q: &mut TableAssignment,
    v: &Composition,
    v_prime: &Composition,
    k: usize,
    l: usize,
) -> Result<()> {
    let n = q.sequence_len();
    if v.total() != n || v_prime.total() != n {
        return Err(Error::InvalidInput("compositions must have total N".into()));
    }
    let e = match (v.dropped(k), v_prime.dropped(l)) {
        (Some(a), Some(b)) if a == b => a,
        _ => {
            return Err(Error::InvalidInput(
                "compositions are not k,l-connected (v − v' must equal î_k − î_l)".into(),
            ))
        }
    };

    let nf = n as f64;
    let beta = q.prob(&e, k) + q.prob(&e, l);
    // regret pieces that do not involve q(k|e) / q(l|e)
    let const_hi = regret_without_symbol(v, q, k);
    let const_lo = regret_without_symbol(v_prime, q, l);
    let p_hi = v.count(k) as f64 / nf;
    let p_lo = v_prime.count(l) as f64 / nf;
    let diff = |alpha: f64| -> f64 {
        let r_hi = const_hi + p_hi * (p_hi / alpha).ln();
        let r_lo = const_lo + p_lo * (p_lo / (beta - alpha)).ln();
        r_hi - r_lo
    };

    let current = q.prob(&e, k);
    if diff(current).abs() == 0.0 {
        return Ok(());
    }

    // diff is strictly decreasing, +inf at 0 and −inf at beta, so bisection on
    // a bracket pulled inside the open interval always lands the root.
    let mut lo = 1e-15f64;
    let mut hi = beta - 1e-15;
    if !(diff(lo) > 0.0 && diff(hi) < 0.0) {
        return Err(Error::Numerical("equalize_pair: no sign change inside the bracket".into()));
    }
    for _ in 0..BISECTION_ITERS {
        let mid = 0.5 * (lo + hi);
        if diff(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * beta {
            break;
        }
    }
    let alpha = 0.5 * (lo + hi);
    let probs = q.probs_mut(&e);
    probs[k] = alpha;
    probs[l] = beta - alpha;
    Ok(())
}

const EQUALIZER_SWEEP_CAP: usize = 1_000_000;

/// Equalizer found by [`solve_equalizer`]: the assignment plus the common
/// regret and the residual spread.
#[derive(Debug, Clone)]
pub struct EqualizerSolution {
    pub assignment: TableAssignment,
    pub regret: Regret,
    pub spread: f64,
    pub sweeps: usize,
}

/// Min-max solve by pairwise equalization sweeps along the appearance graph,
/// starting from the add-1 assignment, until the regret spread is within
/// `tol`.
pub fn solve_equalizer(m: usize, n: u32, tol: f64) -> Result<EqualizerSolution> {
    let init = TableAssignment::from_rule(&AddConstant::new(m, n, 1.0)?)?;
    solve_equalizer_from(init, tol)
}

/// Same sweep loop from an arbitrary starting table. Note that for m ≥ 3 the
/// equalizer reached can depend on the starting point; the add-1 start of
/// [`solve_equalizer`] is the one whose value the brute-force oracle
/// confirms as min-max optimal.
pub fn solve_equalizer_from(mut q: TableAssignment, tol: f64) -> Result<EqualizerSolution> {
    let m = q.alphabet_size();
    let n = q.sequence_len();
    let graph = appearance_graph(m, n);
    for sweep in 1..=EQUALIZER_SWEEP_CAP {
        for edge in &graph.edges {
            equalize_pair(&mut q, &edge.hi(), &edge.lo(), edge.k, edge.l)?;
        }
        let mut max = f64::NEG_INFINITY;
        let mut min = f64::INFINITY;
        for v in &graph.nodes {
            let r = regret_of_composition(v, &q).nats();
            max = max.max(r);
            min = min.min(r);
        }
        if max - min <= tol {
            return Ok(EqualizerSolution {
                assignment: q,
                regret: Regret::from_nats(max),
                spread: max - min,
                sweeps: sweep,
            });
        }
    }
    Err(Error::Convergence(format!(
        "equalizer spread did not reach {tol} within {EQUALIZER_SWEEP_CAP} sweeps"
    )))
}

const EPSILON_RECURSION_CAP: usize = 1_000_000;

/// Iterate `ε_k = ε_0 + k · (ε_{k−1} − ε_0 + ε²_{k−1}/2) / (m+k−1)` and
/// return the first index with `ε_k ≥ 1`. The sequence provably diverges, so
/// hitting the iteration cap signals a bug rather than an expected outcome.
pub fn epsilon_recursion(eps0: f64, m: usize) -> Result<usize> {
    if !(eps0 > 0.0) || !eps0.is_finite() {
        return Err(Error::InvalidInput(format!("eps0 must be in (0, inf), got {eps0}")));
    }
    if m < 2 {
        return Err(Error::InvalidInput(format!("need m >= 2, got {m}")));
    }
    if eps0 >= 1.0 {
        return Ok(0);
    }
    let mut eps = eps0;
    for k in 1..=EPSILON_RECURSION_CAP {
        eps = eps0 + k as f64 * (eps - eps0 + eps * eps / 2.0) / (m as f64 + k as f64 - 1.0);
        if eps >= 1.0 {
            return Ok(k);
        }
    }
    Err(Error::Convergence("epsilon recursion failed to reach 1 (this is a bug)".into()))
}

/// The multinomial simplex as a reference class: the best hypothesis for a
/// sequence is its empirical distribution.
#[derive(Debug, Clone)]
pub struct MultinomialClass {
    m: usize,
}

impl MultinomialClass {
    pub fn new(m: usize) -> Self {
        MultinomialClass { m }
    }
}

impl ReferenceClass for MultinomialClass {
    fn alphabet(&self) -> Alphabet {
        Alphabet::new(self.m).expect("valid alphabet")
    }

    fn best_fit_log_score(&self, data: &Dataset) -> f64 {
        let n = data.len() as f64;
        let v = Composition::from_labels(self.m, data.labels());
        let mut s = 0.0;
        for j in 0..self.m {
            let c = v.count(j);
            if c > 0 {
                let p = c as f64 / n;
                s += p * p.ln();
            }
        }
        s
    }
}

/// Adapter exposing a multinomial assignment as a leave-one-out
/// [`Predictor`]: the prediction context is the training composition.
pub struct AssignmentPredictor<'a, A: MultinomialAssignment> {
    assignment: &'a A,
}

impl<'a, A: MultinomialAssignment> AssignmentPredictor<'a, A> {
    pub fn new(assignment: &'a A) -> Self {
        AssignmentPredictor { assignment }
    }
}

impl<A: MultinomialAssignment> Predictor for AssignmentPredictor<'_, A> {
    fn alphabet(&self) -> Alphabet {
        Alphabet::new(self.assignment.alphabet_size()).expect("valid alphabet")
    }

    fn predict(&self, _features: &[f64], _held_out: usize, train_labels: &[u8]) -> Vec<f64> {
        let e = Composition::from_labels(self.assignment.alphabet_size(), train_labels);
        self.assignment.probs(&e)
    }
}
