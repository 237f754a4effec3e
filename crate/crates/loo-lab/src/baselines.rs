//! pNML and pNML-2 baseline learners.
//!
//! Both normalize a genie that re-fits the class after seeing the candidate
//! test label: pNML normalizes the genie's test-conditional probability,
//! pNML-2 the maximized full-sequence likelihood. For the multinomial class
//! pNML coincides with the add-1 rule; for deterministic classes both
//! collapse to the uniform distribution over realizable completions — which
//! is exactly why they stall at ln 2 forever on the star class while the
//! equalizer learner's regret vanishes ([`pnml_star_demo`]).

use crate::error::{Error, Result};
use crate::graph::{build_graph, solve_equalizer_graph, ClassKind, DeterministicClass};
use crate::loo::{Alphabet, Predictor, Regret};
use crate::multinomial::Composition;

/// pNML prediction for the multinomial class given the training composition:
/// `q(y) ∝ p_θ̂(z^N)(y)` with the maximum-likelihood `θ̂ = v/N`, which
/// normalizes to the add-1 rule.
pub fn pnml_multinomial(train: &Composition) -> Vec<f64> {
    let n = train.total() + 1;
    let genie: Vec<f64> =
        (0..train.m()).map(|j| (train.count(j) as f64 + 1.0) / n as f64).collect();
    let total: f64 = genie.iter().sum();
    genie.into_iter().map(|g| g / total).collect()
}

/// pNML-2 prediction for the multinomial class: `q(y) ∝ max_θ p_θ(y^N)` with
/// the candidate appended, i.e. the maximized Bernoulli/multinomial
/// likelihood `Π_j (v_j/N)^{v_j}` of each completed composition.
pub fn pnml2_multinomial(train: &Composition) -> Vec<f64> {
    let n = (train.total() + 1) as f64;
    let m = train.m();
    let log_num: Vec<f64> = (0..m)
        .map(|y| {
            let v = train.bumped(y);
            (0..m)
                .map(|j| {
                    let c = v.count(j) as f64;
                    if c > 0.0 {
                        c * (c / n).ln()
                    } else {
                        0.0
                    }
                })
                .sum()
        })
        .collect();
    let max = log_num.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let unnorm: Vec<f64> = log_num.iter().map(|&l| (l - max).exp()).collect();
    let total: f64 = unnorm.iter().sum();
    unnorm.into_iter().map(|u| u / total).collect()
}

/// Genie indicator for a deterministic class: 1 for each candidate label
/// that keeps the completed sequence realizable. Both pNML and pNML-2
/// normalize this same indicator, because the maximized likelihood of a
/// deterministic class is 0 or 1.
fn deterministic_genie(
    class: &DeterministicClass,
    train_labels: &[u8],
    held_out: usize,
) -> Result<Vec<f64>> {
    let mut completed = Vec::with_capacity(train_labels.len() + 1);
    completed.extend_from_slice(&train_labels[..held_out]);
    completed.push(0u8);
    completed.extend_from_slice(&train_labels[held_out..]);
    let mut genie = vec![0.0f64; 2];
    for y in 0..2u8 {
        completed[held_out] = y;
        if class.is_realizable(&completed) {
            genie[y as usize] = 1.0;
        }
    }
    let total: f64 = genie.iter().sum();
    if total == 0.0 {
        return Err(Error::UndefinedGenie);
    }
    Ok(genie.into_iter().map(|g| g / total).collect())
}

/// pNML for a binary deterministic class.
pub fn pnml_deterministic(
    class: &DeterministicClass,
    train_labels: &[u8],
    held_out: usize,
) -> Result<Vec<f64>> {
    deterministic_genie(class, train_labels, held_out)
}

/// pNML-2 for a binary deterministic class (the indicator genie again).
pub fn pnml2_deterministic(
    class: &DeterministicClass,
    train_labels: &[u8],
    held_out: usize,
) -> Result<Vec<f64>> {
    deterministic_genie(class, train_labels, held_out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineKind {
    Pnml,
    Pnml2,
}

/// pNML / pNML-2 over a deterministic class as a leave-one-out predictor.
pub struct DeterministicBaseline<'a> {
    class: &'a DeterministicClass,
    kind: BaselineKind,
}

impl<'a> DeterministicBaseline<'a> {
    pub fn new(class: &'a DeterministicClass, kind: BaselineKind) -> Self {
        DeterministicBaseline { class, kind }
    }
}

impl Predictor for DeterministicBaseline<'_> {
    fn alphabet(&self) -> Alphabet {
        Alphabet::binary()
    }

    fn predict(&self, _features: &[f64], held_out: usize, train_labels: &[u8]) -> Vec<f64> {
        let q = match self.kind {
            BaselineKind::Pnml => pnml_deterministic(self.class, train_labels, held_out),
            BaselineKind::Pnml2 => pnml2_deterministic(self.class, train_labels, held_out),
        };
        q.expect("genie defined on realizable data")
    }
}

/// The multinomial pNML as a leave-one-out predictor.
pub struct MultinomialPnml {
    m: usize,
    kind: BaselineKind,
}

impl MultinomialPnml {
    pub fn new(m: usize, kind: BaselineKind) -> Self {
        MultinomialPnml { m, kind }
    }
}

impl Predictor for MultinomialPnml {
    fn alphabet(&self) -> Alphabet {
        Alphabet::new(self.m).expect("valid alphabet")
    }

    fn predict(&self, _features: &[f64], _held_out: usize, train_labels: &[u8]) -> Vec<f64> {
        let e = Composition::from_labels(self.m, train_labels);
        match self.kind {
            BaselineKind::Pnml => pnml_multinomial(&e),
            BaselineKind::Pnml2 => pnml2_multinomial(&e),
        }
    }
}

/// Side-by-side regrets on the all-zeros star instance: both pNML variants
/// are stuck at ln 2 for every N, the graph equalizer is not.
#[derive(Debug, Clone)]
pub struct StarDemo {
    pub n: usize,
    pub pnml: Regret,
    pub pnml2: Regret,
    pub equalizer: Regret,
}

/// Run the star separation at sequence length `n`: leave-one-out regrets of
/// pNML, pNML-2 and the equalized edge assignment on `y^N = 0^N` over the
/// 1-unique-value class with distinct features.
pub fn pnml_star_demo(n: usize) -> Result<StarDemo> {
    let class = DeterministicClass::on_grid(ClassKind::UniqueValues(1), n)?;
    let data = crate::loo::Dataset::new(
        Alphabet::binary(),
        class.features().to_vec(),
        vec![0u8; n],
    )?;
    let pnml = crate::loo::loo_regret(
        &DeterministicBaseline::new(&class, BaselineKind::Pnml),
        &class,
        &data,
    )?;
    let pnml2 = crate::loo::loo_regret(
        &DeterministicBaseline::new(&class, BaselineKind::Pnml2),
        &class,
        &data,
    )?;
    let graph = build_graph(&class)?;
    let equalizer = solve_equalizer_graph(&graph, 1e-10)?.regret;
    Ok(StarDemo { n, pnml, pnml2, equalizer })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loo::{loo_regret, Dataset};
    use crate::multinomial::{compositions, AddConstant, MultinomialAssignment};
    use std::f64::consts::LN_2;

    #[test]
    fn multinomial_pnml_equals_add_one() {
        for m in 2..=3usize {
            for n in 2..=6u32 {
                let add1 = AddConstant::new(m, n, 1.0).unwrap();
                for e in compositions(n - 1, m) {
                    let q = pnml_multinomial(&e);
                    for j in 0..m {
                        assert!(
                            (q[j] - add1.prob(&e, j)).abs() < 1e-12,
                            "m={m} N={n} e={e} j={j}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn pnml_small_case() {
        let q = pnml_multinomial(&Composition::new(vec![1, 0]));
        assert!((q[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((q[1] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn pnml2_bernoulli_case() {
        // training (2,0), N=3: numerators 1 vs (2/3)^2 (1/3) = 4/27
        let q = pnml2_multinomial(&Composition::new(vec![2, 0]));
        assert!((q[0] - 27.0 / 31.0).abs() < 1e-12, "{q:?}");
        assert!((q[1] - 4.0 / 31.0).abs() < 1e-12);
    }

    #[test]
    fn deterministic_baselines_are_uniform_over_realizable() {
        let class = DeterministicClass::on_grid(ClassKind::UniqueValues(1), 5).unwrap();
        // all-zero training: both completions realizable
        let q = pnml_deterministic(&class, &[0, 0, 0, 0], 2).unwrap();
        assert_eq!(q, vec![0.5, 0.5]);
        let q2 = pnml2_deterministic(&class, &[0, 0, 0, 0], 2).unwrap();
        assert_eq!(q2, vec![0.5, 0.5]);
        // a one already present: the held-out position is forced to zero
        let q = pnml_deterministic(&class, &[1, 0, 0, 0], 2).unwrap();
        assert_eq!(q, vec![1.0, 0.0]);
    }

    #[test]
    fn single_hypothesis_class_is_deterministic_prediction() {
        let class = DeterministicClass::on_grid(
            ClassKind::Explicit(vec![vec![0, 1, 0]]),
            3,
        )
        .unwrap();
        let q = pnml_deterministic(&class, &[0, 0], 1).unwrap();
        assert_eq!(q, vec![0.0, 1.0]);
    }

    #[test]
    fn undefined_genie_when_nothing_realizable() {
        let class = DeterministicClass::on_grid(
            ClassKind::Explicit(vec![vec![1, 1, 1]]),
            3,
        )
        .unwrap();
        assert!(matches!(
            pnml_deterministic(&class, &[0, 0], 0),
            Err(Error::UndefinedGenie)
        ));
    }

    #[test]
    fn star_demo_values() {
        let demo = pnml_star_demo(5).unwrap();
        assert!((demo.pnml.nats() - LN_2).abs() < 1e-12);
        assert!((demo.pnml2.nats() - LN_2).abs() < 1e-12);
        assert!((demo.equalizer.nats() - 0.28117).abs() < 1e-4);

        let demo = pnml_star_demo(20).unwrap();
        assert!((demo.pnml.nats() - LN_2).abs() < 1e-12);
        assert!(demo.equalizer.nats() < 0.17);

        let demo = pnml_star_demo(2).unwrap();
        assert!((demo.pnml.nats() - LN_2).abs() < 1e-12);
    }

    #[test]
    fn baselines_are_proper_distributions() {
        for m in 2..=4usize {
            for e in compositions(5, m) {
                for q in [pnml_multinomial(&e), pnml2_multinomial(&e)] {
                    let sum: f64 = q.iter().sum();
                    assert!((sum - 1.0).abs() < 1e-12);
                    assert!(q.iter().all(|&p| (0.0..=1.0).contains(&p)));
                }
            }
        }
    }

    #[test]
    fn pnml_regret_via_generic_functional() {
        // every position of the all-zeros sequence is ambiguous, so the
        // generic functional sees the full ln 2 through the predictor adapter
        let class = DeterministicClass::on_grid(ClassKind::UniqueValues(1), 4).unwrap();
        let data = Dataset::new(
            Alphabet::binary(),
            class.features().to_vec(),
            vec![0, 0, 0, 0],
        )
        .unwrap();
        let r = loo_regret(
            &DeterministicBaseline::new(&class, BaselineKind::Pnml),
            &class,
            &data,
        )
        .unwrap();
        assert!((r.nats() - LN_2).abs() < 1e-12);
    }
}
