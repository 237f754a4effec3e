//! One-inclusion graphs for binary deterministic classes.
//!
//! Nodes are the realizable label sequences on a fixed feature sequence;
//! edges join sequences differing at exactly one position. An edge at
//! position t carries the probability the learner assigns to the held-out
//! outcome there, so a probability assignment on edges *is* a leave-one-out
//! learner, and the regret of a node is the average of `−log(probability of
//! its own symbol)` over its incident edges (positions with no incident
//! edge are forced and cost nothing).
//!
//! Peeling a graph of degeneracy k ([`peel_assign`]) realizes the
//! `(k·lnN + k·ln2 + 2)/N` upper bound; the flat 1/2 assignment
//! ([`half_assign`]) realizes `maxdeg·ln2/N`; [`solve_equalizer_graph`]
//! equalizes node regrets exactly, and [`certify_star_lower_bound`]
//! certifies lower bounds on the star family by propagating the exact
//! probability chain.

use std::collections::HashMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::loo::{Alphabet, Dataset, Predictor, ReferenceClass, Regret};

pub type LabelSeq = Vec<u8>;

/// Generator for a binary deterministic hypothesis class on fixed features.
#[derive(Debug, Clone)]
pub enum ClassKind {
    /// `y = 1` iff `x > θ`: on sorted distinct features the realizable
    /// sequences are the N+1 step labelings (a path graph).
    Threshold,
    /// `y = 1` iff `x ∈ [a, b]`: the ones form a contiguous run in sorted
    /// feature order, or no run at all.
    Interval,
    /// `y = 1` on at most `d` arbitrary feature values.
    UniqueValues(usize),
    /// Explicit list of realizable sequences (duplicate-free).
    Explicit(Vec<LabelSeq>),
}

#[derive(Debug, Clone)]
pub struct DeterministicClass {
    kind: ClassKind,
    features: Vec<f64>,
    /// permutation sorting the features ascending
    order: Vec<usize>,
}

impl DeterministicClass {
    pub fn new(kind: ClassKind, features: Vec<f64>) -> Result<Self> {
        if features.len() < 2 {
            return Err(Error::InvalidInput("need at least 2 features".into()));
        }
        let mut order: Vec<usize> = (0..features.len()).collect();
        order.sort_by(|&a, &b| features[a].total_cmp(&features[b]));
        for w in order.windows(2) {
            if features[w[0]] == features[w[1]] {
                return Err(Error::InvalidInput("features must be pairwise distinct".into()));
            }
        }
        if let ClassKind::Explicit(seqs) = &kind {
            if seqs.is_empty() {
                return Err(Error::InvalidInput("explicit class must be non-empty".into()));
            }
            let mut seen = std::collections::HashSet::new();
            for s in seqs {
                if s.len() != features.len() {
                    return Err(Error::LengthMismatch { features: features.len(), labels: s.len() });
                }
                if s.iter().any(|&y| y > 1) {
                    return Err(Error::InvalidInput("explicit sequences must be binary".into()));
                }
                if !seen.insert(s.clone()) {
                    return Err(Error::InvalidInput("explicit sequence list contains duplicates".into()));
                }
            }
        }
        if let ClassKind::UniqueValues(d) = kind {
            if d == 0 || d >= features.len() {
                return Err(Error::InvalidInput(format!(
                    "unique-values parameter must satisfy 1 <= d < N, got d={d}"
                )));
            }
        }
        Ok(DeterministicClass { kind, features, order })
    }

    /// Evenly spaced distinct features `0, 1, .., n-1`.
    pub fn on_grid(kind: ClassKind, n: usize) -> Result<Self> {
        DeterministicClass::new(kind, (0..n).map(|i| i as f64).collect())
    }

    pub fn n(&self) -> usize {
        self.features.len()
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    /// Realizability test without enumerating the class.
    pub fn is_realizable(&self, labels: &[u8]) -> bool {
        if labels.len() != self.n() || labels.iter().any(|&y| y > 1) {
            return false;
        }
        match &self.kind {
            ClassKind::Threshold => {
                // non-decreasing in sorted feature order
                let sorted: Vec<u8> = self.order.iter().map(|&i| labels[i]).collect();
                sorted.windows(2).all(|w| w[0] <= w[1])
            }
            ClassKind::Interval => {
                let sorted: Vec<u8> = self.order.iter().map(|&i| labels[i]).collect();
                let first = sorted.iter().position(|&y| y == 1);
                match first {
                    None => true,
                    Some(i) => {
                        let last = sorted.iter().rposition(|&y| y == 1).unwrap();
                        sorted[i..=last].iter().all(|&y| y == 1)
                    }
                }
            }
            ClassKind::UniqueValues(d) => labels.iter().filter(|&&y| y == 1).count() <= *d,
            ClassKind::Explicit(seqs) => seqs.iter().any(|s| s == labels),
        }
    }

    /// Every realizable sequence, lexicographically sorted.
    pub fn realizable(&self) -> Vec<LabelSeq> {
        let n = self.n();
        let mut out: Vec<LabelSeq> = match &self.kind {
            ClassKind::Threshold => (0..=n)
                .map(|cut| {
                    let mut y = vec![0u8; n];
                    for &i in &self.order[cut..] {
                        y[i] = 1;
                    }
                    y
                })
                .collect(),
            ClassKind::Interval => {
                let mut seqs = vec![vec![0u8; n]];
                for lo in 0..n {
                    for hi in lo..n {
                        let mut y = vec![0u8; n];
                        for &i in &self.order[lo..=hi] {
                            y[i] = 1;
                        }
                        seqs.push(y);
                    }
                }
                seqs
            }
            ClassKind::UniqueValues(d) => {
                let mut seqs = Vec::new();
                // all subsets of positions of size <= d
                let mut stack: Vec<(usize, Vec<usize>)> = vec![(0, Vec::new())];
                while let Some((next, chosen)) = stack.pop() {
                    let mut y = vec![0u8; n];
                    for &i in &chosen {
                        y[i] = 1;
                    }
                    seqs.push(y);
                    if chosen.len() < *d {
                        for i in next..n {
                            let mut c = chosen.clone();
                            c.push(i);
                            stack.push((i + 1, c));
                        }
                    }
                }
                seqs
            }
            ClassKind::Explicit(seqs) => seqs.clone(),
        };
        out.sort();
        out.dedup();
        out
    }
}

impl ReferenceClass for DeterministicClass {
    fn alphabet(&self) -> Alphabet {
        Alphabet::binary()
    }

    fn best_fit_log_score(&self, data: &Dataset) -> f64 {
        if self.is_realizable(data.labels()) {
            0.0
        } else {
            f64::NEG_INFINITY
        }
    }

    fn realizable_sequences(&self, _features: &[f64]) -> Option<Vec<Vec<u8>>> {
        Some(self.realizable())
    }
}

/// An edge of the one-inclusion graph. Endpoints are node indices with
/// `a < b`; they differ exactly at `position`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GraphEdge {
    pub a: usize,
    pub b: usize,
    pub position: usize,
}

#[derive(Debug, Clone)]
pub struct InclusionGraph {
    n: usize,
    nodes: Vec<LabelSeq>,
    edges: Vec<GraphEdge>,
    adjacency: Vec<Vec<usize>>,
    index: HashMap<LabelSeq, usize>,
}

const GRAPH_NODE_GUARD: usize = 100_000;

/// Build the one-inclusion graph of a deterministic class.
pub fn build_graph(class: &DeterministicClass) -> Result<InclusionGraph> {
    let nodes = class.realizable();
    if nodes.len() > GRAPH_NODE_GUARD {
        return Err(Error::CapacityExceeded(format!(
            "{} realizable sequences exceed the graph guard",
            nodes.len()
        )));
    }
    InclusionGraph::from_nodes(class.n(), nodes)
}

impl InclusionGraph {
    /// Assemble the graph from an explicit sorted node set.
    pub fn from_nodes(n: usize, mut nodes: Vec<LabelSeq>) -> Result<InclusionGraph> {
        nodes.sort();
        nodes.dedup();
        let index: HashMap<LabelSeq, usize> =
            nodes.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        let mut edges = Vec::new();
        let mut adjacency = vec![Vec::new(); nodes.len()];
        for (a, seq) in nodes.iter().enumerate() {
            let mut flipped = seq.clone();
            for t in 0..n {
                flipped[t] ^= 1;
                if let Some(&b) = index.get(&flipped) {
                    if a < b {
                        let e = edges.len();
                        edges.push(GraphEdge { a, b, position: t });
                        adjacency[a].push(e);
                        adjacency[b].push(e);
                    }
                }
                flipped[t] ^= 1;
            }
        }
        Ok(InclusionGraph { n, nodes, edges, adjacency, index })
    }

    /// Sequence length N.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn nodes(&self) -> &[LabelSeq] {
        &self.nodes
    }

    pub fn edges(&self) -> &[GraphEdge] {
        &self.edges
    }

    pub fn incident_edges(&self, node: usize) -> &[usize] {
        &self.adjacency[node]
    }

    pub fn degree(&self, node: usize) -> usize {
        self.adjacency[node].len()
    }

    pub fn max_degree(&self) -> usize {
        (0..self.node_count()).map(|v| self.degree(v)).max().unwrap_or(0)
    }

    pub fn node_id(&self, seq: &[u8]) -> Option<usize> {
        self.index.get(seq).copied()
    }

    /// Connected components as sorted node-index lists.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.node_count()];
        let mut comps = Vec::new();
        for start in 0..self.node_count() {
            if seen[start] {
                continue;
            }
            let mut comp = vec![start];
            seen[start] = true;
            let mut stack = vec![start];
            while let Some(v) = stack.pop() {
                for &e in &self.adjacency[v] {
                    let GraphEdge { a, b, .. } = self.edges[e];
                    let w = if a == v { b } else { a };
                    if !seen[w] {
                        seen[w] = true;
                        comp.push(w);
                        stack.push(w);
                    }
                }
            }
            comp.sort_unstable();
            comps.push(comp);
        }
        comps
    }

    /// GraphViz DOT rendering (nodes labeled by their 0/1 string).
    pub fn to_dot(&self) -> String {
        let mut out = String::from("graph one_inclusion {\n");
        for seq in &self.nodes {
            let label: String = seq.iter().map(|&y| char::from(b'0' + y)).collect();
            out.push_str(&format!("  \"{label}\";\n"));
        }
        for e in &self.edges {
            let a: String = self.nodes[e.a].iter().map(|&y| char::from(b'0' + y)).collect();
            let b: String = self.nodes[e.b].iter().map(|&y| char::from(b'0' + y)).collect();
            out.push_str(&format!("  \"{a}\" -- \"{b}\" [label=\"{}\"];\n", e.position));
        }
        out.push_str("}\n");
        out
    }

    /// JSON document: nodes as 0/1 strings, edges as index pairs plus flip
    /// position (and the edge probabilities when an assignment is given).
    pub fn to_json(&self, assignment: Option<&EdgeAssignment>) -> serde_json::Value {
        #[derive(Serialize)]
        struct EdgeOut {
            a: usize,
            b: usize,
            position: usize,
            #[serde(skip_serializing_if = "Option::is_none")]
            p_a: Option<f64>,
        }
        let nodes: Vec<String> = self
            .nodes
            .iter()
            .map(|s| s.iter().map(|&y| char::from(b'0' + y)).collect())
            .collect();
        let edges: Vec<EdgeOut> = self
            .edges
            .iter()
            .enumerate()
            .map(|(i, e)| EdgeOut {
                a: e.a,
                b: e.b,
                position: e.position,
                p_a: assignment.map(|q| q.p(i)),
            })
            .collect();
        serde_json::json!({ "n": self.n, "nodes": nodes, "edges": edges })
    }
}

/// Parse an explicit class from text: one 0/1 label sequence per line.
pub fn parse_explicit(text: &str) -> Result<Vec<LabelSeq>> {
    let mut seqs = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut seq = Vec::with_capacity(line.len());
        for ch in line.chars() {
            match ch {
                '0' => seq.push(0u8),
                '1' => seq.push(1u8),
                _ => {
                    return Err(Error::InvalidInput(format!(
                        "line {}: expected a 0/1 string, found {line:?}",
                        lineno + 1
                    )))
                }
            }
        }
        seqs.push(seq);
    }
    if seqs.is_empty() {
        return Err(Error::InvalidInput("no label sequences in input".into()));
    }
    Ok(seqs)
}

/// Edge probabilities: `p(e)` is the probability of endpoint `a`'s symbol at
/// the edge position; endpoint `b` receives `1 − p(e)`.
#[derive(Debug, Clone)]
pub struct EdgeAssignment {
    p: Vec<f64>,
}

impl EdgeAssignment {
    pub fn p(&self, edge: usize) -> f64 {
        self.p[edge]
    }

    /// Probability of `node`'s own symbol on `edge`.
    pub fn prob_for(&self, g: &InclusionGraph, edge: usize, node: usize) -> f64 {
        let e = g.edges[edge];
        if e.a == node {
            self.p[edge]
        } else {
            debug_assert_eq!(e.b, node);
            1.0 - self.p[edge]
        }
    }
}

/// Graph degeneracy: the maximum over peeling stages of the current minimum
/// degree; equivalently the smallest k whose iterated removal of degree-≤k
/// nodes empties the graph.
pub fn degeneracy(g: &InclusionGraph) -> usize {
    let mut deg: Vec<usize> = (0..g.node_count()).map(|v| g.degree(v)).collect();
    let mut alive = vec![true; g.node_count()];
    let mut remaining = g.node_count();
    let mut k = 0usize;
    while remaining > 0 {
        let current_min = (0..g.node_count()).filter(|&v| alive[v]).map(|v| deg[v]).min().unwrap();
        k = k.max(current_min);
        // cascade removals at threshold k
        let mut queue: Vec<usize> =
            (0..g.node_count()).filter(|&v| alive[v] && deg[v] <= k).collect();
        while let Some(v) = queue.pop() {
            if !alive[v] {
                continue;
            }
            alive[v] = false;
            remaining -= 1;
            for &e in g.incident_edges(v) {
                let GraphEdge { a, b, .. } = g.edges[e];
                let w = if a == v { b } else { a };
                if alive[w] {
                    deg[w] -= 1;
                    if deg[w] <= k {
                        queue.push(w);
                    }
                }
            }
        }
    }
    k
}

/// Layered peeling assignment. Each round removes every current node of
/// degree ≤ k simultaneously; edges inside the outer layer get 1/2 per side,
/// edges from the outer layer inward give 1/N to the outer node and 1 − 1/N
/// to the inner one.
pub fn peel_assign(g: &InclusionGraph, k: usize) -> Result<EdgeAssignment> {
    let n = g.n() as f64;
    let mut deg: Vec<usize> = (0..g.node_count()).map(|v| g.degree(v)).collect();
    let mut alive = vec![true; g.node_count()];
    let mut p = vec![f64::NAN; g.edge_count()];
    let mut remaining = g.node_count();
    while remaining > 0 {
        let outer: Vec<usize> =
            (0..g.node_count()).filter(|&v| alive[v] && deg[v] <= k).collect();
        if outer.is_empty() {
            return Err(Error::InvalidInput(format!(
                "peeling stalled: no node of degree <= {k} remains (k below the degeneracy)"
            )));
        }
        let in_outer: Vec<bool> = {
            let mut f = vec![false; g.node_count()];
            for &v in &outer {
                f[v] = true;
            }
            f
        };
        for (ei, e) in g.edges.iter().enumerate() {
            if !p[ei].is_nan() || !alive[e.a] || !alive[e.b] {
                continue;
            }
            match (in_outer[e.a], in_outer[e.b]) {
                (true, true) => p[ei] = 0.5,
                (true, false) => p[ei] = 1.0 / n,
                (false, true) => p[ei] = 1.0 - 1.0 / n,
                (false, false) => {}
            }
        }
        for &v in &outer {
            alive[v] = false;
            remaining -= 1;
            for &e in g.incident_edges(v) {
                let GraphEdge { a, b, .. } = g.edges[e];
                let w = if a == v { b } else { a };
                if alive[w] {
                    deg[w] -= 1;
                }
            }
        }
    }
    debug_assert!(p.iter().all(|x| !x.is_nan()), "every edge assigned exactly once");
    Ok(EdgeAssignment { p })
}

/// Probability 1/2 on every edge.
pub fn half_assign(g: &InclusionGraph) -> EdgeAssignment {
    EdgeAssignment { p: vec![0.5; g.edge_count()] }
}

/// Regret of one node under an assignment: the average over incident edges
/// of `−log` of the probability given to the node's own symbol. Forced
/// positions (no incident edge) carry probability 1 and cost nothing.
pub fn node_regret(g: &InclusionGraph, assignment: &EdgeAssignment, node: usize) -> Regret {
    let mut sum = 0.0f64;
    for &e in g.incident_edges(node) {
        let p = assignment.prob_for(g, e, node);
        if p <= 0.0 {
            return Regret::INFINITE;
        }
        sum -= p.ln();
    }
    Regret::from_nats(sum / g.n() as f64)
}

pub fn node_regrets(g: &InclusionGraph, assignment: &EdgeAssignment) -> Vec<Regret> {
    (0..g.node_count()).map(|v| node_regret(g, assignment, v)).collect()
}

pub fn max_node_regret(g: &InclusionGraph, assignment: &EdgeAssignment) -> Regret {
    node_regrets(g, assignment).into_iter().max().unwrap_or(Regret::ZERO)
}

const GRAPH_EQUALIZER_NODE_GUARD: usize = 10_000;
const GRAPH_EQUALIZER_SWEEP_CAP: usize = 1_000_000;

#[derive(Debug, Clone)]
pub struct GraphEqualizerSolution {
    pub assignment: EdgeAssignment,
    /// Max over connected components of the component's common regret.
    pub regret: Regret,
    pub spread: f64,
    pub sweeps: usize,
}

/// Equalize node regrets by sweeping edges: each visit sets the edge
/// probability so its two endpoints agree, which has the closed form
/// `p = 1 / (1 + exp(N (C_b − C_a)))` in terms of the endpoints' regret from
/// their other edges. Disconnected graphs are equalized per component and
/// the maximum component value is reported.
pub fn solve_equalizer_graph(g: &InclusionGraph, tol: f64) -> Result<GraphEqualizerSolution> {
    if g.node_count() > GRAPH_EQUALIZER_NODE_GUARD {
        return Err(Error::CapacityExceeded(format!(
            "{} nodes exceed the equalizer guard",
            g.node_count()
        )));
    }
    let n = g.n() as f64;
    let mut p = vec![0.5f64; g.edge_count()];
    if g.edge_count() == 0 {
        return Ok(GraphEqualizerSolution {
            assignment: EdgeAssignment { p },
            regret: Regret::ZERO,
            spread: 0.0,
            sweeps: 0,
        });
    }
    let components = g.components();

    let partial_regret = |p: &[f64], node: usize, skip: usize| -> f64 {
        let mut sum = 0.0;
        for &e in g.incident_edges(node) {
            if e == skip {
                continue;
            }
            let pr = if g.edges[e].a == node { p[e] } else { 1.0 - p[e] };
            sum -= pr.ln();
        }
        sum / n
    };

    for sweep in 1..=GRAPH_EQUALIZER_SWEEP_CAP {
        for (ei, e) in g.edges.iter().enumerate() {
            let c_a = partial_regret(&p, e.a, ei);
            let c_b = partial_regret(&p, e.b, ei);
            let z = n * (c_b - c_a);
            // p solving C_a − ln(p)/N = C_b − ln(1−p)/N, clamped inside (0,1)
            let pe = 1.0 / (1.0 + z.exp());
            p[ei] = pe.clamp(1e-12, 1.0 - 1e-12);
        }
        let assignment = EdgeAssignment { p: p.clone() };
        let mut worst_spread = 0.0f64;
        let mut value = f64::NEG_INFINITY;
        for comp in &components {
            let rs: Vec<f64> =
                comp.iter().map(|&v| node_regret(g, &assignment, v).nats()).collect();
            let max = rs.iter().cloned().fold(f64::MIN, f64::max);
            let min = rs.iter().cloned().fold(f64::MAX, f64::min);
            worst_spread = worst_spread.max(max - min);
            value = value.max(max);
        }
        if worst_spread <= tol {
            return Ok(GraphEqualizerSolution {
                assignment,
                regret: Regret::from_nats(value),
                spread: worst_spread,
                sweeps: sweep,
            });
        }
    }
    Err(Error::Convergence(format!(
        "graph equalizer spread did not reach {tol} within {GRAPH_EQUALIZER_SWEEP_CAP} sweeps"
    )))
}

/// Outcome of the star lower-bound chain at level `a` (target regret
/// `a·lnN/N`).
#[derive(Debug, Clone)]
pub struct StarCertificate {
    /// True when assuming `R* ≤ a·lnN/N` is contradictory, i.e. the bound
    /// `R* > a·lnN/N` is certified.
    pub certified: bool,
    pub target: f64,
    /// The regret forced on the d-ones sequence by the chain (`+inf` when
    /// the chain already forces some q ≤ 0).
    pub implied: f64,
    /// Upper bounds q_0, .., q_{d−1} propagated by the chain.
    pub chain: Vec<f64>,
}

/// Certify `R* > a·lnN/N` for the d-unique-values class on N distinct
/// features by propagating the exact chain of probability bounds: assuming
/// the contrary, `q_0 ≤ 1 − e^{−R}` and
/// `1 − q_i ≥ exp(−(R + (i/N)·ln q_{i−1}) · N/(N−i))`, which must leave the
/// d-ones regret `−(d/N)·ln q_{d−1}` within the target.
pub fn certify_star_lower_bound(d: usize, n: usize, a: f64) -> Result<StarCertificate> {
    if d == 0 || d >= n {
        return Err(Error::InvalidInput(format!("need 1 <= d < N, got d={d}, N={n}")));
    }
    if !(a > 0.0) {
        return Err(Error::InvalidInput(format!("level a must be positive, got {a}")));
    }
    let nf = n as f64;
    let target = a * nf.ln() / nf;
    let mut chain = Vec::with_capacity(d);
    let mut q_prev = 1.0 - (-target).exp();
    chain.push(q_prev);
    for i in 1..d {
        // q_prev <= 0 means the assumed target already contradicts itself
        if q_prev <= 0.0 {
            return Ok(StarCertificate { certified: true, target, implied: f64::INFINITY, chain });
        }
        let exponent = -(target + (i as f64 / nf) * q_prev.ln()) * nf / (nf - i as f64);
        let q_i = 1.0 - exponent.exp();
        chain.push(q_i);
        q_prev = q_i;
    }
    if q_prev <= 0.0 {
        return Ok(StarCertificate { certified: true, target, implied: f64::INFINITY, chain });
    }
    let implied = -(d as f64 / nf) * q_prev.ln();
    Ok(StarCertificate { certified: implied > target, target, implied, chain })
}

/// Exact rational density |E(S)|/|S| of a node subset.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SubgraphDensity {
    pub edges: u32,
    pub nodes: u32,
}

impl SubgraphDensity {
    pub fn value(self) -> f64 {
        self.edges as f64 / self.nodes as f64
    }
}

impl PartialOrd for SubgraphDensity {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for SubgraphDensity {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // a/b vs c/d by cross multiplication; denominators are positive
        let lhs = self.edges as u64 * other.nodes as u64;
        let rhs = other.edges as u64 * self.nodes as u64;
        lhs.cmp(&rhs)
    }
}

const DENSEST_NODE_GUARD: usize = 16;

/// Maximum of |E(S)|/|S| over nonempty node subsets, by exhaustive subset
/// enumeration (guarded to ≤ 16 nodes).
pub fn densest_subgraph_bruteforce(g: &InclusionGraph) -> Result<SubgraphDensity> {
    let v = g.node_count();
    if v == 0 {
        return Err(Error::InvalidInput("empty graph".into()));
    }
    if v > DENSEST_NODE_GUARD {
        return Err(Error::CapacityExceeded(format!(
            "{v} nodes exceed the brute-force density guard of {DENSEST_NODE_GUARD}"
        )));
    }
    let mut best = SubgraphDensity { edges: 0, nodes: 1 };
    for mask in 1u32..(1u32 << v) {
        let nodes = mask.count_ones();
        let mut edges = 0u32;
        for e in g.edges() {
            if mask & (1 << e.a) != 0 && mask & (1 << e.b) != 0 {
                edges += 1;
            }
        }
        let cand = SubgraphDensity { edges, nodes };
        if cand > best {
            best = cand;
        }
    }
    Ok(best)
}

/// Expose an edge assignment as a leave-one-out [`Predictor`]: at a held-out
/// position the two candidate completions are looked up in the graph; if
/// both are realizable the incident edge's probabilities answer, otherwise
/// the single realizable completion is forced with probability 1.
pub struct EdgePredictor<'a> {
    graph: &'a InclusionGraph,
    assignment: &'a EdgeAssignment,
}

impl<'a> EdgePredictor<'a> {
    pub fn new(graph: &'a InclusionGraph, assignment: &'a EdgeAssignment) -> Self {
        EdgePredictor { graph, assignment }
    }
}

impl Predictor for EdgePredictor<'_> {
    fn alphabet(&self) -> Alphabet {
        Alphabet::binary()
    }

    fn predict(&self, features: &[f64], held_out: usize, train_labels: &[u8]) -> Vec<f64> {
        debug_assert_eq!(features.len(), self.graph.n());
        let mut completed = Vec::with_capacity(features.len());
        completed.extend_from_slice(&train_labels[..held_out]);
        completed.push(0u8);
        completed.extend_from_slice(&train_labels[held_out..]);
        let zero = self.graph.node_id(&completed);
        completed[held_out] = 1;
        let one = self.graph.node_id(&completed);
        match (zero, one) {
            (Some(a), Some(b)) => {
                let (lo, hi) = if a < b { (a, b) } else { (b, a) };
                let edge = self
                    .graph
                    .incident_edges(lo)
                    .iter()
                    .copied()
                    .find(|&e| {
                        let ge = self.graph.edges[e];
                        ge.position == held_out && ge.a == lo && ge.b == hi
                    })
                    .expect("adjacent realizable completions share an edge");
                // probability of symbol 0 = probability of the node holding 0
                let p0 = self.assignment.prob_for(self.graph, edge, a);
                vec![p0, 1.0 - p0]
            }
            (Some(_), None) => vec![1.0, 0.0],
            (None, Some(_)) => vec![0.0, 1.0],
            // unreachable for realizable data; hedge rather than panic
            (None, None) => vec![0.5, 0.5],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loo::loo_regret;
    use proptest::prelude::*;
    use std::f64::consts::LN_2;

    fn star(n: usize) -> InclusionGraph {
        build_graph(&DeterministicClass::on_grid(ClassKind::UniqueValues(1), n).unwrap()).unwrap()
    }

    fn path(n: usize) -> InclusionGraph {
        build_graph(&DeterministicClass::on_grid(ClassKind::Threshold, n).unwrap()).unwrap()
    }

    #[test]
    fn threshold_graph_is_a_path() {
        let g = path(4);
        assert_eq!(g.node_count(), 5);
        assert_eq!(g.edge_count(), 4);
        assert_eq!(g.max_degree(), 2);
        assert_eq!(g.components().len(), 1);
    }

    #[test]
    fn two_unique_values_graph_shape() {
        let class = DeterministicClass::on_grid(ClassKind::UniqueValues(2), 5).unwrap();
        let g = build_graph(&class).unwrap();
        assert_eq!(g.node_count(), 1 + 5 + 10);
        // all-zeros node has degree 5; each two-ones node degree 2
        let zeros = g.node_id(&vec![0, 0, 0, 0, 0]).unwrap();
        assert_eq!(g.degree(zeros), 5);
    }

    #[test]
    fn explicit_single_node_graph() {
        let class =
            DeterministicClass::on_grid(ClassKind::Explicit(vec![vec![0, 0, 0]]), 3).unwrap();
        let g = build_graph(&class).unwrap();
        assert_eq!((g.node_count(), g.edge_count()), (1, 0));
        assert_eq!(degeneracy(&g), 0);
        assert_eq!(node_regret(&g, &half_assign(&g), 0), Regret::ZERO);
    }

    #[test]
    fn degeneracy_values() {
        assert_eq!(degeneracy(&path(4)), 1);
        assert_eq!(degeneracy(&star(5)), 1);
        let class = DeterministicClass::on_grid(ClassKind::UniqueValues(2), 5).unwrap();
        assert_eq!(degeneracy(&build_graph(&class).unwrap()), 2);
    }

    #[test]
    fn peel_star_exact_values() {
        let g = star(5);
        let assign = peel_assign(&g, 1).unwrap();
        let zeros = g.node_id(&vec![0; 5]).unwrap();
        let center = node_regret(&g, &assign, zeros).nats();
        assert!((center - (-(0.8f64).ln())).abs() < 1e-12, "center {center}");
        let leaf = g.node_id(&vec![1, 0, 0, 0, 0]).unwrap();
        let leaf_r = node_regret(&g, &assign, leaf).nats();
        assert!((leaf_r - 5f64.ln() / 5.0).abs() < 1e-12, "leaf {leaf_r}");
        let max = max_node_regret(&g, &assign).nats();
        assert!((max - 5f64.ln() / 5.0).abs() < 1e-15);
    }

    #[test]
    fn peel_requires_k_at_least_degeneracy() {
        let class = DeterministicClass::on_grid(ClassKind::UniqueValues(2), 5).unwrap();
        let g = build_graph(&class).unwrap();
        assert!(peel_assign(&g, 1).is_err());
        assert!(peel_assign(&g, 2).is_ok());
    }

    #[test]
    fn peel_covers_every_edge_once() {
        let g = path(4);
        let assign = peel_assign(&g, 1).unwrap();
        for e in 0..g.edge_count() {
            let p = assign.p(e);
            assert!(p.is_finite() && (0.0..=1.0).contains(&p));
        }
    }

    #[test]
    fn half_assignment_values() {
        let g = path(4);
        let assign = half_assign(&g);
        // interior node has two incident edges
        let interior = g.node_id(&vec![0, 0, 1, 1]).unwrap();
        let r = node_regret(&g, &assign, interior).nats();
        assert!((r - 2.0 * LN_2 / 4.0).abs() < 1e-12);
        let max = max_node_regret(&g, &assign).nats();
        assert!((max - g.max_degree() as f64 * LN_2 / 4.0).abs() < 1e-12);
    }

    #[test]
    fn equalizer_on_single_edge_graph() {
        let class = DeterministicClass::on_grid(
            ClassKind::Explicit(vec![vec![0, 0, 0], vec![1, 0, 0]]),
            3,
        )
        .unwrap();
        let g = build_graph(&class).unwrap();
        let sol = solve_equalizer_graph(&g, 1e-12).unwrap();
        assert!((sol.assignment.p(0) - 0.5).abs() < 1e-9);
        assert!((sol.regret.nats() - LN_2 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn equalizer_star_matches_root_find() {
        let g = star(5);
        let sol = solve_equalizer_graph(&g, 1e-11).unwrap();
        // independent 1-D oracle: ln q = N ln(1 − q)
        let mut lo = 1e-9f64;
        let mut hi = 0.5f64;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid.ln() - 5.0 * (1.0 - mid).ln() < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let q = 0.5 * (lo + hi);
        assert!((q - 0.24510).abs() < 5e-5, "q {q}");
        let expected = -q.ln() / 5.0;
        assert!((sol.regret.nats() - expected).abs() < 1e-8);
        assert!((sol.regret.nats() - 0.28117).abs() < 1e-4);
    }

    #[test]
    fn equalizer_handles_disconnected_components() {
        // two disjoint edges on four positions with different forced padding
        let seqs = vec![
            vec![0, 0, 0, 0],
            vec![1, 0, 0, 0],
            vec![1, 1, 1, 1],
            vec![1, 1, 0, 1],
        ];
        let class = DeterministicClass::on_grid(ClassKind::Explicit(seqs), 4).unwrap();
        let g = build_graph(&class).unwrap();
        assert_eq!(g.components().len(), 2);
        let sol = solve_equalizer_graph(&g, 1e-12).unwrap();
        assert!((sol.regret.nats() - LN_2 / 4.0).abs() < 1e-9);
    }

    #[test]
    fn star_certificates_bracket_the_exact_value() {
        let cert = certify_star_lower_bound(1, 5, 0.8).unwrap();
        assert!(cert.certified);
        assert!((cert.chain[0] - 0.22703).abs() < 1e-4);
        assert!((cert.implied - 0.29653).abs() < 1e-4);
        assert!((cert.target - 0.25751).abs() < 1e-4);

        let no = certify_star_lower_bound(1, 5, 0.9).unwrap();
        assert!(!no.certified);
        assert!((no.chain[0] - 0.25152).abs() < 1e-4);
        assert!((no.implied - 0.27605).abs() < 1e-4);

        // at a = R* N / ln N the chain is a relaxation and must not certify
        let g = star(5);
        let rstar = solve_equalizer_graph(&g, 1e-11).unwrap().regret.nats();
        let a = rstar * 5.0 / 5f64.ln();
        assert!(!certify_star_lower_bound(1, 5, a).unwrap().certified);
    }

    #[test]
    fn densest_subgraph_small_cases() {
        let d = densest_subgraph_bruteforce(&path(4)).unwrap();
        assert_eq!((d.edges, d.nodes), (4, 5));
        let d = densest_subgraph_bruteforce(&star(5)).unwrap();
        assert_eq!((d.edges, d.nodes), (5, 6));
        let class = DeterministicClass::on_grid(ClassKind::UniqueValues(2), 4).unwrap();
        let d = densest_subgraph_bruteforce(&build_graph(&class).unwrap()).unwrap();
        assert!(d.value() <= 2.0);
    }

    #[test]
    fn degeneracy_density_sandwich() {
        for g in [path(4), path(7), star(5), star(9)] {
            let k = degeneracy(&g) as f64;
            if g.node_count() <= 16 {
                let d = densest_subgraph_bruteforce(&g).unwrap().value();
                assert!(k >= d && d >= k / 2.0, "k={k} density={d}");
            }
        }
    }

    #[test]
    fn edge_predictor_agrees_with_node_regret() {
        let class = DeterministicClass::on_grid(ClassKind::UniqueValues(1), 5).unwrap();
        let g = build_graph(&class).unwrap();
        let assign = peel_assign(&g, 1).unwrap();
        let predictor = EdgePredictor::new(&g, &assign);
        for (i, seq) in g.nodes().iter().enumerate() {
            let data =
                Dataset::new(Alphabet::binary(), class.features().to_vec(), seq.clone()).unwrap();
            let via_loo = loo_regret(&predictor, &class, &data).unwrap();
            let via_graph = node_regret(&g, &assign, i);
            assert!((via_loo.nats() - via_graph.nats()).abs() < 1e-12);
        }
    }

    #[test]
    fn interval_class_counts() {
        let class = DeterministicClass::on_grid(ClassKind::Interval, 4).unwrap();
        assert_eq!(class.realizable().len(), 1 + 4 * 5 / 2);
    }

    #[test]
    fn parse_explicit_rejects_junk() {
        assert!(parse_explicit("0101\nx1\n").is_err());
        assert_eq!(parse_explicit("# comment\n0101\n\n1111\n").unwrap().len(), 2);
    }

    #[test]
    fn dot_and_json_exports_mention_every_node() {
        let g = path(3);
        let dot = g.to_dot();
        assert!(dot.contains("\"0111\"") && dot.contains("--"));
        let json = g.to_json(Some(&half_assign(&g)));
        assert_eq!(json["nodes"].as_array().unwrap().len(), 4);
        assert_eq!(json["edges"][0]["p_a"].as_f64().unwrap(), 0.5);
    }

    proptest! {
        #[test]
        fn random_explicit_classes_build_sound_graphs(seed_bits in 1u32..(1 << 10), n in 3usize..6) {
            // random nonempty subset of {0,1}^n derived from seed bits
            let mut seqs = Vec::new();
            let count = 1usize << n;
            for i in 0..count {
                if (seed_bits.wrapping_mul(2654435761).rotate_left(i as u32) >> 13) & 1 == 1 {
                    seqs.push((0..n).map(|t| ((i >> t) & 1) as u8).collect::<Vec<u8>>());
                }
            }
            if seqs.is_empty() {
                seqs.push(vec![0u8; n]);
            }
            let class = DeterministicClass::on_grid(ClassKind::Explicit(seqs.clone()), n).unwrap();
            let g = build_graph(&class).unwrap();
            prop_assert_eq!(g.node_count(), seqs.len());
            for e in g.edges() {
                let a = &g.nodes()[e.a];
                let b = &g.nodes()[e.b];
                let diff: Vec<usize> = (0..n).filter(|&t| a[t] != b[t]).collect();
                prop_assert_eq!(diff.len(), 1);
                prop_assert_eq!(diff[0], e.position);
                prop_assert!(e.a < e.b);
            }
            // peel with k = degeneracy covers all edges with valid probabilities
            let k = degeneracy(&g);
            let assign = peel_assign(&g, k).unwrap();
            for ei in 0..g.edge_count() {
                prop_assert!((0.0..=1.0).contains(&assign.p(ei)));
            }
            // degeneracy / density sandwich
            if g.node_count() <= 16 {
                let d = densest_subgraph_bruteforce(&g).unwrap().value();
                prop_assert!(k as f64 >= d && d >= k as f64 / 2.0);
            }
        }
    }
}
