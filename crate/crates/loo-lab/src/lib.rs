//! loo-lab: a laboratory for batch learning with log-loss on individual
//! sequences, scored by leave-one-out regret.
//!
//! The crate provides, per hypothesis-class family:
//!
//! - [`loo`] — shared domain types, the leave-one-out regret functional and
//!   its exact maximization over outcome sequences;
//! - [`multinomial`] — the featureless m-ary case: add-constant and
//!   shifted-empirical learners, the pairwise-equalization min-max solver
//!   over the appearance graph, and the divergent ε-recursion;
//! - [`graph`] — binary deterministic classes via the one-inclusion graph:
//!   class generators, degeneracy, peeling and half assignments, the edge
//!   equalizer, a star lower-bound certifier and brute-force subgraph
//!   density;
//! - [`hypergraph`] — the multiclass generalization with layered peeling on
//!   the one-inclusion hypergraph;
//! - [`experts`] — two-group partition classes reduced to prediction with
//!   expert advice (Laplace experts under exponential weighting);
//! - [`baselines`] — pNML and pNML-2 learners and the star-class demo where
//!   they stay at ln 2 while the equalizer learner converges;
//! - [`oracle`] — an independent projected-subgradient min-max solver used
//!   to validate the equalizer solutions on small instances.
//!
//! All regrets are carried in nats internally; conversion to bits happens at
//! reporting time only.

pub mod baselines;
pub mod error;
pub mod experts;
pub mod graph;
pub mod hypergraph;
pub mod loo;
pub mod multinomial;
pub mod oracle;

pub use error::{Error, Result};
pub use loo::{loo_regret, max_regret, Alphabet, Dataset, Predictor, ReferenceClass, Regret};

/// Format a float with the given number of significant digits, in plain
/// decimal notation (reports and CSV bodies use 9).
pub fn format_sig(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (digits as i32 - 1 - magnitude).clamp(0, 17) as usize;
    format!("{:.*}", decimals, x)
}
