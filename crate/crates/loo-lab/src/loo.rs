//! Leave-one-out regret: domain types and the generic regret functional.
//!
//! The regret of a predictor `q` against a reference class on a labeled
//! sequence `z^N = (x, y)^N` is the leave-one-out average
//!
//! ```text
//! R_loo = max_θ (1/N) Σ_t log( p_θ(y_t|x_t) / q(y_t | x_t, z^{N∖t}) )
//! ```
//!
//! in nats. The predictor sees every example except the one it is being
//! tested on, for which only the feature is revealed. [`max_regret`] takes
//! the exact maximum of this quantity over outcome sequences, which is the
//! inner maximization of the min-max problem the solver modules attack.

use crate::error::{Error, Result};

/// Outcome alphabet `{0, .., m-1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Alphabet(usize);

impl Alphabet {
    pub fn new(m: usize) -> Result<Self> {
        if m < 2 {
            return Err(Error::InvalidInput(format!("alphabet size must be >= 2, got {m}")));
        }
        if m > 256 {
            return Err(Error::InvalidInput(format!("alphabet size must be <= 256, got {m}")));
        }
        Ok(Alphabet(m))
    }

    /// Number of symbols `m`.
    pub fn size(self) -> usize {
        self.0
    }

    pub fn binary() -> Self {
        Alphabet(2)
    }
}

/// A labeled sequence: features `x^N` paired with labels `y^N`.
///
/// Features are arbitrary orderable reals; distinctness is not required here
/// (modules that need it, such as the experts module, enforce it themselves).
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    alphabet: Alphabet,
    features: Vec<f64>,
    labels: Vec<u8>,
}

impl Dataset {
    pub fn new(alphabet: Alphabet, features: Vec<f64>, labels: Vec<u8>) -> Result<Self> {
        if features.len() != labels.len() {
            return Err(Error::LengthMismatch { features: features.len(), labels: labels.len() });
        }
        if features.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "need at least 2 examples, got {}",
                features.len()
            )));
        }
        if features.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("features must be finite".into()));
        }
        if let Some(&bad) = labels.iter().find(|&&y| (y as usize) >= alphabet.size()) {
            return Err(Error::InvalidInput(format!(
                "label {bad} outside alphabet of size {}",
                alphabet.size()
            )));
        }
        Ok(Dataset { alphabet, features, labels })
    }

    /// Convenience for featureless problems: features are `0.0, 1.0, ..`.
    pub fn featureless(alphabet: Alphabet, labels: Vec<u8>) -> Result<Self> {
        let features = (0..labels.len()).map(|i| i as f64).collect();
        Dataset::new(alphabet, features, labels)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }
}

/// Regret value in nats, extended with `+inf` for assignments that put zero
/// probability on a required outcome.
///
/// Ordering is total (`total_cmp`), so `max` over collections is well defined
/// and `+inf` compares greater than every finite value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Regret(f64);

impl Regret {
    pub const ZERO: Regret = Regret(0.0);
    pub const INFINITE: Regret = Regret(f64::INFINITY);

    pub fn from_nats(v: f64) -> Self {
        debug_assert!(!v.is_nan(), "regret must not be NaN");
        Regret(v)
    }

    pub fn nats(self) -> f64 {
        self.0
    }

    pub fn bits(self) -> f64 {
        self.0 / std::f64::consts::LN_2
    }

    pub fn is_infinite(self) -> bool {
        self.0.is_infinite()
    }
}

impl Eq for Regret {}

impl PartialOrd for Regret {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Regret {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl std::fmt::Display for Regret {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A leave-one-out predictor: given the features, a held-out index and the
/// remaining labels (in order, with the held-out one removed), produce a
/// distribution over the alphabet for the held-out outcome.
pub trait Predictor {
    fn alphabet(&self) -> Alphabet;

    /// `train_labels.len() == features.len() - 1`; entry `i` is the label of
    /// the `i`-th example after removing index `held_out`.
    fn predict(&self, features: &[f64], held_out: usize, train_labels: &[u8]) -> Vec<f64>;
}

/// A reference hypothesis class.
pub trait ReferenceClass {
    fn alphabet(&self) -> Alphabet;

    /// `sup_θ (1/N) Σ_t log p_θ(y_t|x_t)` on the given data, in nats.
    ///
    /// Always `<= 0`; deterministic classes return exactly `0.0` on
    /// realizable sequences and `-inf` otherwise.
    fn best_fit_log_score(&self, data: &Dataset) -> f64;

    /// For deterministic classes: every realizable label sequence on the
    /// given features. `None` for classes with continuous likelihoods.
    fn realizable_sequences(&self, _features: &[f64]) -> Option<Vec<Vec<u8>>> {
        None
    }
}

fn check_distribution(q: &[f64], m: usize) -> Result<()> {
    if q.len() != m {
        return Err(Error::Numerical(format!(
            "predictor returned {} probabilities for alphabet of size {m}",
            q.len()
        )));
    }
    let sum: f64 = q.iter().sum();
    if !(sum - 1.0).abs().le(&1e-12) || q.iter().any(|&p| !(-1e-15..=1.0 + 1e-12).contains(&p)) {
        return Err(Error::Numerical(format!("predictor output is not a distribution (sum {sum})")));
    }
    Ok(())
}

/// Leave-one-out regret of `predictor` against `class` on `data`, in nats.
///
/// Returns `+inf` when the predictor assigns probability zero to an outcome
/// the reference still scores, and an error when the data itself is outside
/// the class (deterministic class, unrealizable labels).
pub fn loo_regret(
    predictor: &(impl Predictor + ?Sized),
    class: &(impl ReferenceClass + ?Sized),
    data: &Dataset,
) -> Result<Regret> {
    let m = data.alphabet().size();
    if predictor.alphabet().size() != m || class.alphabet().size() != m {
        return Err(Error::InvalidInput("alphabet mismatch between data, predictor and class".into()));
    }
    let n = data.len();
    let reference = class.best_fit_log_score(data);
    debug_assert!(reference <= 1e-12, "reference log score must be <= 0, got {reference}");
    if reference == f64::NEG_INFINITY {
        return Err(Error::UnrealizableSequence);
    }

    let mut train = Vec::with_capacity(n - 1);
    let mut learner_avg = 0.0f64;
    let mut starved = false;
    for t in 0..n {
        train.clear();
        train.extend_from_slice(&data.labels()[..t]);
        train.extend_from_slice(&data.labels()[t + 1..]);
        let q = predictor.predict(data.features(), t, &train);
        check_distribution(&q, m)?;
        let p = q[data.labels()[t] as usize];
        if p <= 0.0 {
            starved = true;
        } else {
            learner_avg += p.ln();
        }
    }
    if starved {
        return Ok(Regret::INFINITE);
    }
    learner_avg /= n as f64;
    Ok(Regret::from_nats(reference - learner_avg))
}

/// Maximum m^N admissible for exhaustive enumeration of outcome sequences.
const ENUMERATION_GUARD: f64 = 1e7;

/// Regrets differing by less than this (absolute plus relative) count as a
/// tie: analytically equal sequences land a few ulps apart after float
/// summation, and the tie-break must not depend on such noise.
const TIE_EPS: f64 = 1e-12;

/// Exact maximum of [`loo_regret`] over outcome sequences, with the argmax.
///
/// For deterministic classes only realizable sequences are admissible; all
/// other classes are swept over the full `m^N` cube (guarded). Ties (up to
/// float rounding) are broken toward the lexicographically smallest
/// sequence.
pub fn max_regret(
    predictor: &(impl Predictor + ?Sized),
    class: &(impl ReferenceClass + ?Sized),
    features: &[f64],
) -> Result<(Regret, Vec<u8>)> {
    let m = class.alphabet().size();
    let n = features.len();
    let mut best: Option<(Regret, Vec<u8>)> = None;
    let mut consider = |labels: &[u8]| -> Result<()> {
        let data = Dataset::new(class.alphabet(), features.to_vec(), labels.to_vec())?;
        let r = loo_regret(predictor, class, &data)?;
        match &best {
            Some((cur, _)) if r.nats() <= cur.nats() + TIE_EPS * (1.0 + cur.nats().abs()) => {}
            _ => best = Some((r, labels.to_vec())),
        }
        Ok(())
    };

    match class.realizable_sequences(features) {
        Some(mut seqs) => {
            seqs.sort();
            for y in &seqs {
                consider(y)?;
            }
        }
        None => {
            if (m as f64).powi(n as i32) > ENUMERATION_GUARD {
                return Err(Error::CapacityExceeded(format!(
                    "{m}^{n} outcome sequences exceed the enumeration guard"
                )));
            }
            let mut y = vec![0u8; n];
            loop {
                consider(&y)?;
                // lexicographic odometer
                let mut pos = n;
                while pos > 0 {
                    pos -= 1;
                    if (y[pos] as usize) + 1 < m {
                        y[pos] += 1;
                        y[pos + 1..].fill(0);
                        break;
                    }
                    if pos == 0 {
                        return Ok(best.expect("at least one sequence enumerated"));
                    }
                }
            }
        }
    }
    best.ok_or_else(|| Error::InvalidInput("class admits no realizable sequence".into()))
}
