//! One-inclusion hypergraphs for multiclass deterministic classes.
//!
//! For alphabet size m > 2, fixing a position t and the labels everywhere
//! else leaves up to m realizable completions; the hyperedge at (t, off-t
//! labeling) is the set of those completions whenever at least two exist.
//! With m = 2 this is exactly the one-inclusion graph. A learner assigns
//! each hyperedge member a probability (summing to 1 per hyperedge), and a
//! node pays the average of `−log` of its own probabilities.
//!
//! [`peel_assign_multiclass`] generalizes layered peeling: an outer-layer
//! node receives `1/((m−1)·N)` from every hyperedge still reaching inner
//! layers, and hyperedges whose surviving members all leave in the same
//! round split the remaining budget equally ("closing" the edge).

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::LabelSeq;

/// Generator for a deterministic multiclass hypothesis class.
#[derive(Debug, Clone)]
pub enum MulticlassKind {
    /// The m constant label sequences.
    Constants,
    /// All-zeros plus, for each position, every single nonzero mark there
    /// (the m-ary star: a 1-unique-value class with m−1 possible marks).
    UniqueValueMarks,
    /// Explicit duplicate-free list.
    Explicit(Vec<LabelSeq>),
}

#[derive(Debug, Clone)]
pub struct MulticlassClass {
    kind: MulticlassKind,
    n: usize,
    m: usize,
}

impl MulticlassClass {
    pub fn new(kind: MulticlassKind, n: usize, m: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidInput("need at least 2 positions".into()));
        }
        if m < 2 || m > 256 {
            return Err(Error::InvalidInput(format!("alphabet size must be in [2,256], got {m}")));
        }
        if let MulticlassKind::Explicit(seqs) = &kind {
            if seqs.is_empty() {
                return Err(Error::InvalidInput("explicit class must be non-empty".into()));
            }
            let mut seen = std::collections::HashSet::new();
            for s in seqs {
                if s.len() != n {
                    return Err(Error::LengthMismatch { features: n, labels: s.len() });
                }
                if s.iter().any(|&y| y as usize >= m) {
                    return Err(Error::InvalidInput("label outside alphabet".into()));
                }
                if !seen.insert(s.clone()) {
                    return Err(Error::InvalidInput("explicit sequence list contains duplicates".into()));
                }
            }
        }
        Ok(MulticlassClass { kind, n, m })
    }

    pub fn realizable(&self) -> Vec<LabelSeq> {
        let mut out: Vec<LabelSeq> = match &self.kind {
            MulticlassKind::Constants => {
                (0..self.m).map(|c| vec![c as u8; self.n]).collect()
            }
            MulticlassKind::UniqueValueMarks => {
                let mut seqs = vec![vec![0u8; self.n]];
                for t in 0..self.n {
                    for mark in 1..self.m {
                        let mut y = vec![0u8; self.n];
                        y[t] = mark as u8;
                        seqs.push(y);
                    }
                }
                seqs
            }
            MulticlassKind::Explicit(seqs) => seqs.clone(),
        };
        out.sort();
        out.dedup();
        out
    }
}

/// A hyperedge: the realizable completions at one position that share the
/// off-position labeling. Always 2..=m members.
#[derive(Debug, Clone)]
pub struct HyperEdge {
    pub position: usize,
    /// Node indices, ascending.
    pub members: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct InclusionHypergraph {
    n: usize,
    m: usize,
    nodes: Vec<LabelSeq>,
    edges: Vec<HyperEdge>,
    incident: Vec<Vec<usize>>,
}

const HYPERGRAPH_NODE_GUARD: usize = 100_000;

pub fn build_hypergraph(class: &MulticlassClass) -> Result<InclusionHypergraph> {
    let nodes = class.realizable();
    if nodes.len() > HYPERGRAPH_NODE_GUARD {
        return Err(Error::CapacityExceeded(format!(
            "{} realizable sequences exceed the hypergraph guard",
            nodes.len()
        )));
    }
    InclusionHypergraph::from_nodes(class.n, class.m, nodes)
}

impl InclusionHypergraph {
    pub fn from_nodes(n: usize, m: usize, mut nodes: Vec<LabelSeq>) -> Result<Self> {
        nodes.sort();
        nodes.dedup();
        let mut edges = Vec::new();
        let mut incident = vec![Vec::new(); nodes.len()];
        // group nodes by (position, off-position labeling)
        let mut buckets: std::collections::BTreeMap<(usize, LabelSeq), Vec<usize>> =
            std::collections::BTreeMap::new();
        for (i, seq) in nodes.iter().enumerate() {
            for t in 0..n {
                let mut key = seq.clone();
                key.remove(t);
                buckets.entry((t, key)).or_default().push(i);
            }
        }
        for ((position, _), members) in buckets {
            if members.len() >= 2 {
                debug_assert!(members.len() <= m);
                let e = edges.len();
                for &v in &members {
                    incident[v].push(e);
                }
                edges.push(HyperEdge { position, members });
            }
        }
        Ok(InclusionHypergraph { n, m, nodes, edges, incident })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn alphabet_size(&self) -> usize {
        self.m
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

    pub fn edges(&self) -> &[HyperEdge] {
        &self.edges
    }

    pub fn incident_edges(&self, node: usize) -> &[usize] {
        &self.incident[node]
    }

    /// JSON export: hyperedges as (position, member node indices, member
    /// probabilities when an assignment is given).
    pub fn to_json(&self, assignment: Option<&HyperAssignment>) -> serde_json::Value {
        #[derive(Serialize)]
        struct EdgeOut<'a> {
            position: usize,
            members: &'a [usize],
            #[serde(skip_serializing_if = "Option::is_none")]
            probs: Option<&'a [f64]>,
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
                position: e.position,
                members: &e.members,
                probs: assignment.map(|a| a.member_probs(i)),
            })
            .collect();
        serde_json::json!({ "n": self.n, "m": self.m, "nodes": nodes, "hyperedges": edges })
    }
}

/// Per-hyperedge member probabilities, parallel to the hyperedge list.
#[derive(Debug, Clone)]
pub struct HyperAssignment {
    probs: Vec<Vec<f64>>,
}

impl HyperAssignment {
    pub fn member_probs(&self, edge: usize) -> &[f64] {
        &self.probs[edge]
    }

    /// Probability assigned to `node` inside `edge`.
    pub fn prob_for(&self, h: &InclusionHypergraph, edge: usize, node: usize) -> f64 {
        let pos = h.edges[edge]
            .members
            .iter()
            .position(|&v| v == node)
            .expect("node is a member of the edge");
        self.probs[edge][pos]
    }
}

/// Layered multiclass peeling with degree threshold `mu`.
///
/// A hyperedge is alive while at least two of its members remain; a node's
/// degree counts its alive hyperedges. Each round removes every node of
/// degree ≤ mu. A removed node collects `1/((m−1)·N)` from each hyperedge
/// that still has inner members, while hyperedges whose surviving members
/// are all outer split their remaining budget equally.
pub fn peel_assign_multiclass(h: &InclusionHypergraph, mu: f64) -> Result<HyperAssignment> {
    let n = h.n() as f64;
    let m = h.alphabet_size() as f64;
    let flip_prob = 1.0 / ((m - 1.0) * n);
    let mut alive = vec![true; h.node_count()];
    let mut remaining = h.node_count();
    let mut probs: Vec<Vec<f64>> = h.edges.iter().map(|e| vec![f64::NAN; e.members.len()]).collect();
    let mut assigned_mass: Vec<f64> = vec![0.0; h.edge_count()];

    let alive_degree = |alive: &[bool], v: usize| -> usize {
        h.incident[v]
            .iter()
            .filter(|&&e| h.edges[e].members.iter().filter(|&&w| alive[w]).count() >= 2)
            .count()
    };

    while remaining > 0 {
        let outer: Vec<usize> = (0..h.node_count())
            .filter(|&v| alive[v] && (alive_degree(&alive, v) as f64) <= mu)
            .collect();
        if outer.is_empty() {
            return Err(Error::InvalidInput(format!(
                "multiclass peeling stalled: no node of degree <= {mu} remains"
            )));
        }
        let mut in_outer = vec![false; h.node_count()];
        for &v in &outer {
            in_outer[v] = true;
        }
        for (ei, e) in h.edges.iter().enumerate() {
            let alive_members: Vec<usize> =
                e.members.iter().copied().filter(|&v| alive[v]).collect();
            if alive_members.is_empty() || !alive_members.iter().any(|&v| in_outer[v]) {
                continue;
            }
            if alive_members.iter().all(|&v| in_outer[v]) {
                // close the edge: split what is left equally
                let share = (1.0 - assigned_mass[ei]) / alive_members.len() as f64;
                for &v in &alive_members {
                    let slot = e.members.iter().position(|&w| w == v).unwrap();
                    probs[ei][slot] = share;
                }
                assigned_mass[ei] = 1.0;
            } else {
                for &v in &alive_members {
                    if in_outer[v] {
                        let slot = e.members.iter().position(|&w| w == v).unwrap();
                        probs[ei][slot] = flip_prob;
                        assigned_mass[ei] += flip_prob;
                    }
                }
            }
        }
        for &v in &outer {
            alive[v] = false;
            remaining -= 1;
        }
    }
    debug_assert!(probs.iter().flatten().all(|p| !p.is_nan()));
    Ok(HyperAssignment { probs })
}

/// Node regret: average over incident hyperedges of `−log` of the node's own
/// probability; positions with no hyperedge are forced and cost nothing.
pub fn hyper_node_regret(
    h: &InclusionHypergraph,
    assignment: &HyperAssignment,
    node: usize,
) -> crate::loo::Regret {
    let mut sum = 0.0;
    for &e in h.incident_edges(node) {
        let p = assignment.prob_for(h, e, node);
        if p <= 0.0 {
            return crate::loo::Regret::INFINITE;
        }
        sum -= p.ln();
    }
    crate::loo::Regret::from_nats(sum / h.n() as f64)
}

pub fn max_hyper_node_regret(h: &InclusionHypergraph, assignment: &HyperAssignment) -> crate::loo::Regret {
    (0..h.node_count())
        .map(|v| hyper_node_regret(h, assignment, v))
        .max()
        .unwrap_or(crate::loo::Regret::ZERO)
}

/// Upper bound on the maximum average degree of any sub-hypergraph.
#[derive(Debug, Clone, Copy)]
pub struct DegreeBound {
    pub value: f64,
    /// True when the value is the exact brute-force maximum, false when it
    /// is the peeling estimate (twice the hypergraph degeneracy).
    pub exact: bool,
}

const DEGREE_BRUTE_FORCE_GUARD: usize = 16;

/// Maximum over node subsets S of the average induced degree
/// `Σ_{v∈S} deg_S(v) / |S|`, where `deg_S` counts the hyperedges fully
/// contained in S (partially-present edges carry no induced probability
/// constraint, so they do not count here; peeling-round selection uses the
/// looser alive-edge notion, and for m = 2 the two coincide). Exact for ≤ 16
/// nodes, otherwise a peeling upper estimate flagged `exact: false`.
pub fn max_avg_subgraph_degree(h: &InclusionHypergraph) -> DegreeBound {
    let v = h.node_count();
    if v == 0 {
        return DegreeBound { value: 0.0, exact: true };
    }
    if v <= DEGREE_BRUTE_FORCE_GUARD {
        let mut best_num = 0u64;
        let mut best_den = 1u64;
        for mask in 1u32..(1u32 << v) {
            let mut degree_sum = 0u64;
            for e in &h.edges {
                let inside = e.members.iter().filter(|&&w| mask & (1 << w) != 0).count() as u64;
                if inside == e.members.len() as u64 {
                    degree_sum += inside;
                }
            }
            let den = mask.count_ones() as u64;
            if degree_sum * best_den > best_num * den {
                best_num = degree_sum;
                best_den = den;
            }
        }
        return DegreeBound { value: best_num as f64 / best_den as f64, exact: true };
    }
    // peeling estimate: any subgraph has a node of degree <= hyperdegeneracy,
    // and the average degree of a sub-hypergraph is at most twice that.
    let mut alive = vec![true; v];
    let mut remaining = v;
    let mut k = 0usize;
    let alive_degree = |alive: &[bool], w: usize| -> usize {
        h.incident[w]
            .iter()
            .filter(|&&e| h.edges[e].members.iter().filter(|&&u| alive[u]).count() >= 2)
            .count()
    };
    while remaining > 0 {
        let (vmin, dmin) = (0..v)
            .filter(|&w| alive[w])
            .map(|w| (w, alive_degree(&alive, w)))
            .min_by_key(|&(_, d)| d)
            .unwrap();
        k = k.max(dmin);
        alive[vmin] = false;
        remaining -= 1;
    }
    DegreeBound { value: 2.0 * k as f64, exact: false }
}
