//! Brute-force min-max oracle.
//!
//! Any of the crate's min-max instances compiles to a canonical form: decide
//! a point in a product of probability simplices (one per prediction
//! context) to minimize the maximum of finitely many regret functions, each
//! a constant plus a nonnegative combination of `−log` of selected
//! coordinates. That objective is convex, so a projected subgradient method
//! solves it without knowing anything about equalizers or peeling — which is
//! the point: the oracle validates those solvers from the outside.
//!
//! The step rule is Polyak's with an adaptive target level: plain
//! `c/sqrt(k)` diminishing steps stall between 1e-1 and 1e-4 depending on
//! the instance and no single c works across the suite, while the adaptive
//! target reaches ~1e-6 or better on every instance in a few thousand
//! iterations (the max-of-logs objective is sharp at an equalizer optimum,
//! where Polyak steps converge linearly).

use crate::error::{Error, Result};
use crate::graph::InclusionGraph;
use crate::multinomial::{compositions, Composition};

/// One `coeff · (−ln x[var][coord])` term.
#[derive(Debug, Clone, Copy)]
pub struct LogTerm {
    pub var: usize,
    pub coord: usize,
    pub coeff: f64,
}

/// A regret function: constant plus nonnegative log terms.
#[derive(Debug, Clone)]
pub struct RegretFn {
    pub constant: f64,
    pub terms: Vec<LogTerm>,
}

/// Min-max problem over a product of probability simplices.
#[derive(Debug, Clone)]
pub struct MinMaxProblem {
    pub simplex_sizes: Vec<usize>,
    pub regrets: Vec<RegretFn>,
}

const VARIABLE_GUARD: usize = 1_000;

impl MinMaxProblem {
    fn validate(&self) -> Result<()> {
        let total: usize = self.simplex_sizes.iter().sum();
        if total > VARIABLE_GUARD {
            return Err(Error::CapacityExceeded(format!(
                "{total} variables exceed the oracle guard of {VARIABLE_GUARD}"
            )));
        }
        let mut used = vec![false; self.simplex_sizes.len()];
        for r in &self.regrets {
            if !r.constant.is_finite() {
                return Err(Error::InvalidInput("regret constants must be finite".into()));
            }
            for t in &r.terms {
                if t.var >= self.simplex_sizes.len() || t.coord >= self.simplex_sizes[t.var] {
                    return Err(Error::InvalidInput("log term indexes outside the simplices".into()));
                }
                if t.coeff < 0.0 {
                    return Err(Error::InvalidInput("log term coefficients must be >= 0".into()));
                }
                used[t.var] = true;
            }
        }
        if used.iter().any(|&u| !u) {
            return Err(Error::InvalidInput("every simplex must appear in some regret".into()));
        }
        Ok(())
    }

    /// Evaluate every regret function at a feasible point.
    pub fn eval(&self, x: &[Vec<f64>]) -> Vec<f64> {
        self.regrets
            .iter()
            .map(|r| {
                r.constant
                    + r.terms
                        .iter()
                        .map(|t| -t.coeff * x[t.var][t.coord].ln())
                        .sum::<f64>()
            })
            .collect()
    }

    pub fn objective(&self, x: &[Vec<f64>]) -> f64 {
        self.eval(x).into_iter().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Compile the featureless m-ary min-max instance: one simplex per training
/// composition, one regret function per sequence composition. Returns the
/// contexts so callers can map simplices back to training compositions.
pub fn compile_multinomial(m: usize, n: u32) -> Result<(MinMaxProblem, Vec<Composition>)> {
    let contexts = compositions(n - 1, m);
    let index: std::collections::HashMap<&Composition, usize> =
        contexts.iter().enumerate().map(|(i, c)| (c, i)).collect();
    let nf = n as f64;
    let mut regrets = Vec::new();
    for v in compositions(n, m) {
        let mut constant = 0.0;
        let mut terms = Vec::new();
        for j in 0..m {
            let vj = v.count(j);
            if vj == 0 {
                continue;
            }
            let p = vj as f64 / nf;
            constant += p * p.ln();
            let e = v.dropped(j).expect("count positive");
            terms.push(LogTerm { var: index[&e], coord: j, coeff: p });
        }
        regrets.push(RegretFn { constant, terms });
    }
    let problem =
        MinMaxProblem { simplex_sizes: vec![m; contexts.len()], regrets };
    problem.validate()?;
    Ok((problem, contexts))
}

/// Compile a one-inclusion graph: one binary simplex per edge (coordinate 0
/// is endpoint a's symbol), one regret function per node.
pub fn compile_graph(g: &InclusionGraph) -> Result<MinMaxProblem> {
    let nf = g.n() as f64;
    let regrets = (0..g.node_count())
        .map(|v| {
            let terms = g
                .incident_edges(v)
                .iter()
                .map(|&e| {
                    let edge = g.edges()[e];
                    LogTerm { var: e, coord: if edge.a == v { 0 } else { 1 }, coeff: 1.0 / nf }
                })
                .collect();
            RegretFn { constant: 0.0, terms }
        })
        .collect();
    let problem = MinMaxProblem { simplex_sizes: vec![2; g.edge_count()], regrets };
    problem.validate()?;
    Ok(problem)
}

/// Solver configuration. `tol` is the convergence threshold on best-value
/// improvement over a `stall_window` of iterations.
#[derive(Debug, Clone, Copy)]
pub struct SolverConfig {
    pub max_iters: usize,
    pub tol: f64,
    pub stall_window: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { max_iters: 200_000, tol: 1e-9, stall_window: 1_000 }
    }
}

#[derive(Debug, Clone)]
pub struct MinMaxSolution {
    pub point: Vec<Vec<f64>>,
    pub value: f64,
    /// max − min over regret functions at the returned point; an equalizer
    /// optimum drives this toward zero, so it doubles as a diagnostic.
    pub spread: f64,
    pub iterations: usize,
}

/// Euclidean projection onto the probability simplex (sorting form), with
/// entries floored at 1e−12 to keep the logs finite.
fn project_simplex(v: &mut [f64]) {
    let mut u: Vec<f64> = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut css = 0.0;
    let mut theta = 0.0;
    for (i, &ui) in u.iter().enumerate() {
        css += ui;
        let cand = (css - 1.0) / (i as f64 + 1.0);
        if ui - cand > 0.0 {
            theta = cand;
        }
    }
    let mut sum = 0.0;
    for x in v.iter_mut() {
        *x = (*x - theta).max(1e-12);
        sum += *x;
    }
    for x in v.iter_mut() {
        *x /= sum;
    }
}

/// Minimize the max of the regret functions by projected subgradient
/// descent with Polyak's adaptive target step.
pub fn solve_minmax(problem: &MinMaxProblem, config: SolverConfig) -> Result<MinMaxSolution> {
    problem.validate()?;
    if problem.regrets.is_empty() {
        return Err(Error::InvalidInput("no regret functions".into()));
    }
    let mut x: Vec<Vec<f64>> =
        problem.simplex_sizes.iter().map(|&s| vec![1.0 / s as f64; s]).collect();
    let mut best_value = f64::INFINITY;
    let mut best_point = x.clone();
    let mut window_anchor = f64::INFINITY;
    let mut delta = 0.1f64;
    let mut since_improvement = 0usize;
    let mut iterations = 0usize;

    for k in 1..=config.max_iters {
        iterations = k;
        let vals = problem.eval(&x);
        // deterministic: the lexicographically smallest maximizer
        let mut argmax = 0usize;
        for (i, &v) in vals.iter().enumerate() {
            if v > vals[argmax] {
                argmax = i;
            }
        }
        let f = vals[argmax];
        if f < best_value - 1e-15 {
            best_value = f;
            best_point = x.clone();
            since_improvement = 0;
        } else {
            since_improvement += 1;
            if since_improvement > 100 {
                // tighten the target level when progress stalls
                delta *= 0.5;
                since_improvement = 0;
            }
        }

        // Polyak step toward target = max(best − delta, 0); the regrets of
        // these instances are nonnegative at the optimum, so 0 is a valid
        // lower level.
        let target = (best_value - delta).max(0.0);
        let mut grad: Vec<Vec<f64>> =
            problem.simplex_sizes.iter().map(|&s| vec![0.0; s]).collect();
        for t in &problem.regrets[argmax].terms {
            grad[t.var][t.coord] -= t.coeff / x[t.var][t.coord];
        }
        let norm2: f64 = grad.iter().flatten().map(|g| g * g).sum();
        if norm2 <= 0.0 {
            break; // constant active function; nothing to move
        }
        let step = (f - target) / norm2;
        for (xi, gi) in x.iter_mut().zip(&grad) {
            for (xv, gv) in xi.iter_mut().zip(gi) {
                *xv -= step * gv;
            }
            project_simplex(xi);
        }

        if k % config.stall_window == 0 {
            if window_anchor - best_value < config.tol {
                break;
            }
            window_anchor = best_value;
        }
    }

    let vals = problem.eval(&best_point);
    let max = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(MinMaxSolution { point: best_point, value: max, spread: max - min, iterations })
}
