//! Two-group partition classes as prediction with expert advice.
//!
//! Each hypothesis assigns every feature to group 0 or 1 and predicts with a
//! per-group distribution. Projected onto the (distinct) features, the
//! family collapses to a finite set of partitions; each partition becomes an
//! expert that predicts with Laplace's rule of succession inside its group.
//! The learner mixes the experts with exponential weights driven by their
//! sequential performance on a fixed index order (ascending feature value),
//! which buys the standard `ln K` mixture guarantee while the test-time
//! prediction itself is leave-one-out.

use crate::error::{Error, Result};
use crate::loo::{Alphabet, Dataset, Predictor, ReferenceClass, Regret};

/// Group membership per index: 0 or 1.
pub type Partition = Vec<u8>;

/// Partition family generator over distinct features.
#[derive(Debug, Clone)]
pub enum PartitionFamily {
    /// Group 1 = features above a threshold (N+1 distinct partitions).
    Thresholds,
    /// Explicit membership strings, deduplicated after projection.
    Explicit(Vec<Partition>),
}

fn sorted_order(features: &[f64]) -> Result<Vec<usize>> {
    let mut order: Vec<usize> = (0..features.len()).collect();
    order.sort_by(|&a, &b| features[a].total_cmp(&features[b]));
    for w in order.windows(2) {
        if features[w[0]] == features[w[1]] {
            return Err(Error::InvalidInput(
                "partition classes require pairwise distinct features".into(),
            ));
        }
    }
    Ok(order)
}

/// Distinct partitions the family induces on the given features.
pub fn enumerate_partitions(family: &PartitionFamily, features: &[f64]) -> Result<Vec<Partition>> {
    let order = sorted_order(features)?;
    let n = features.len();
    let mut parts: Vec<Partition> = match family {
        PartitionFamily::Thresholds => (0..=n)
            .map(|cut| {
                let mut p = vec![0u8; n];
                for &i in &order[cut..] {
                    p[i] = 1;
                }
                p
            })
            .collect(),
        PartitionFamily::Explicit(list) => {
            for p in list {
                if p.len() != n {
                    return Err(Error::LengthMismatch { features: n, labels: p.len() });
                }
                if p.iter().any(|&g| g > 1) {
                    return Err(Error::InvalidInput("partition entries must be 0 or 1".into()));
                }
            }
            list.clone()
        }
    };
    parts.sort();
    parts.dedup();
    Ok(parts)
}

/// Per-group symbol counts over some index subset.
#[derive(Debug, Clone)]
pub struct GroupCounts {
    counts: Vec<u64>,
    total: u64,
}

impl GroupCounts {
    pub fn empty(m: usize) -> Self {
        GroupCounts { counts: vec![0; m], total: 0 }
    }

    pub fn add(&mut self, symbol: u8) {
        self.counts[symbol as usize] += 1;
        self.total += 1;
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }
}

/// Laplace's rule of succession: `(n_j(i) + 1) / (N_j + m)`.
pub fn laplace_predict(group: &GroupCounts, m: usize) -> Vec<f64> {
    let denom = group.total as f64 + m as f64;
    (0..m).map(|i| (group.counts[i] as f64 + 1.0) / denom).collect()
}

/// An expert's two group states over a chosen index subset.
#[derive(Debug, Clone)]
pub struct ExpertState {
    pub groups: [GroupCounts; 2],
}

impl ExpertState {
    pub fn empty(m: usize) -> Self {
        ExpertState { groups: [GroupCounts::empty(m), GroupCounts::empty(m)] }
    }

    /// Counts over every index except `exclude`.
    pub fn leave_one_out(partition: &Partition, data: &Dataset, exclude: usize) -> Self {
        let m = data.alphabet().size();
        let mut state = ExpertState::empty(m);
        for (i, &y) in data.labels().iter().enumerate() {
            if i != exclude {
                state.groups[partition[i] as usize].add(y);
            }
        }
        state
    }
}

/// Per-step sequential log-losses `−ln p_ℓ(y_s | prefix)` of one expert, in
/// the given index order: the prediction for the s-th index uses Laplace
/// counts from the indices strictly before it.
pub fn sequential_log_losses(partition: &Partition, data: &Dataset, order: &[usize]) -> Vec<f64> {
    let m = data.alphabet().size();
    let mut state = ExpertState::empty(m);
    let mut losses = Vec::with_capacity(order.len());
    for &idx in order {
        let group = partition[idx] as usize;
        let y = data.labels()[idx];
        let p = laplace_predict(&state.groups[group], m)[y as usize];
        losses.push(-p.ln());
        state.groups[group].add(y);
    }
    losses
}

/// The partition class with its projected experts, prepared for prediction
/// on one dataset's features.
#[derive(Debug, Clone)]
pub struct ExpertsProblem {
    partitions: Vec<Partition>,
    /// Fixed global index order: ascending feature value.
    order: Vec<usize>,
    /// rank[i] = position of index i in `order`
    rank: Vec<usize>,
}

impl ExpertsProblem {
    pub fn new(family: &PartitionFamily, features: &[f64]) -> Result<Self> {
        let partitions = enumerate_partitions(family, features)?;
        let order = sorted_order(features)?;
        let mut rank = vec![0usize; order.len()];
        for (r, &i) in order.iter().enumerate() {
            rank[i] = r;
        }
        Ok(ExpertsProblem { partitions, order, rank })
    }

    pub fn expert_count(&self) -> usize {
        self.partitions.len()
    }

    pub fn partitions(&self) -> &[Partition] {
        &self.partitions
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// Mixture weights at test index `t`: exponential in each expert's
    /// cumulative sequential log-loss over the indices ordered before `t`.
    /// Computed by log-sum-exp, so they are invariant to any constant shift
    /// of the cumulative losses.
    pub fn weights(&self, data: &Dataset, t: usize) -> Vec<f64> {
        let prefix_len = self.rank[t];
        let mut log_w: Vec<f64> = self
            .partitions
            .iter()
            .map(|p| {
                let losses = sequential_log_losses(p, data, &self.order[..prefix_len]);
                -losses.iter().sum::<f64>()
            })
            .collect();
        let max = log_w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for w in log_w.iter_mut() {
            *w = (*w - max).exp();
            sum += *w;
        }
        for w in log_w.iter_mut() {
            *w /= sum;
        }
        log_w
    }

    /// Mixture prediction for the held-out index `t`: weights from
    /// sequential prefixes, expert predictions from leave-one-out Laplace
    /// counts.
    pub fn mixture_predict(&self, data: &Dataset, t: usize) -> Vec<f64> {
        let m = data.alphabet().size();
        let weights = self.weights(data, t);
        let mut q = vec![0.0f64; m];
        for (w, partition) in weights.iter().zip(&self.partitions) {
            let state = ExpertState::leave_one_out(partition, data, t);
            let p = laplace_predict(&state.groups[partition[t] as usize], m);
            for i in 0..m {
                q[i] += w * p[i];
            }
        }
        q
    }

    /// Cumulative sequential log-loss of the weighted mixture and of every
    /// expert, in the fixed order. The mixture total telescopes to
    /// `−ln((1/K) Σ_ℓ exp(−L_ℓ))`, hence it exceeds no expert's total by
    /// more than `ln K`.
    pub fn sequential_mixture_log_loss(&self, data: &Dataset) -> (f64, Vec<f64>) {
        let k = self.partitions.len();
        let per_expert: Vec<Vec<f64>> = self
            .partitions
            .iter()
            .map(|p| sequential_log_losses(p, data, &self.order))
            .collect();
        let mut mixture_total = 0.0;
        let mut cum: Vec<f64> = vec![0.0; k];
        for step in 0..self.order.len() {
            // weights from losses before this step
            let max = cum.iter().cloned().fold(f64::NEG_INFINITY, |a, b| a.max(-b));
            let weights: Vec<f64> = cum.iter().map(|&c| (-c - max).exp()).collect();
            let wsum: f64 = weights.iter().sum();
            // mixture probability of the realized symbol, reconstructed from
            // each expert's per-step loss
            let mut q_realized = 0.0f64;
            for (li, w) in weights.iter().enumerate() {
                q_realized += w / wsum * (-per_expert[li][step]).exp();
            }
            mixture_total -= q_realized.ln();
            for (li, c) in cum.iter_mut().enumerate() {
                *c += per_expert[li][step];
            }
        }
        (mixture_total, per_expert.iter().map(|l| l.iter().sum()).collect())
    }

    /// Best in-class average log-score on the full sequence: per partition
    /// the optimal group distributions are the empirical ones, so the
    /// reference is a closed-form maximum over partitions.
    pub fn reference_log_score(&self, data: &Dataset) -> f64 {
        let m = data.alphabet().size();
        let n = data.len() as f64;
        let mut best = f64::NEG_INFINITY;
        for partition in &self.partitions {
            let mut state = ExpertState::empty(m);
            for (i, &y) in data.labels().iter().enumerate() {
                state.groups[partition[i] as usize].add(y);
            }
            let mut score = 0.0;
            for group in &state.groups {
                if group.total == 0 {
                    continue;
                }
                for &c in group.counts() {
                    if c > 0 {
                        score += (c as f64 / n) * (c as f64 / group.total as f64).ln();
                    }
                }
            }
            best = best.max(score);
        }
        best
    }
}

/// Leave-one-out regret of the exponential-weights mixture against the
/// partition class itself.
pub fn class_loo_regret(family: &PartitionFamily, data: &Dataset) -> Result<Regret> {
    let problem = ExpertsProblem::new(family, data.features())?;
    let n = data.len() as f64;
    let reference = problem.reference_log_score(data);
    let mut learner = 0.0;
    for t in 0..data.len() {
        let q = problem.mixture_predict(data, t);
        let p = q[data.labels()[t] as usize];
        if p <= 0.0 {
            return Ok(Regret::INFINITE);
        }
        learner += p.ln();
    }
    Ok(Regret::from_nats(reference - learner / n))
}

/// The partition class as a [`ReferenceClass`] and the mixture as a
/// [`Predictor`], for cross-checking against the generic regret functional.
pub struct PartitionClass {
    problem: ExpertsProblem,
    m: usize,
}

impl PartitionClass {
    pub fn new(family: &PartitionFamily, features: &[f64], m: usize) -> Result<Self> {
        Ok(PartitionClass { problem: ExpertsProblem::new(family, features)?, m })
    }

    pub fn problem(&self) -> &ExpertsProblem {
        &self.problem
    }
}

impl ReferenceClass for PartitionClass {
    fn alphabet(&self) -> Alphabet {
        Alphabet::new(self.m).expect("valid alphabet")
    }

    fn best_fit_log_score(&self, data: &Dataset) -> f64 {
        self.problem.reference_log_score(data)
    }
}

pub struct MixturePredictor<'a> {
    class: &'a PartitionClass,
}

impl<'a> MixturePredictor<'a> {
    pub fn new(class: &'a PartitionClass) -> Self {
        MixturePredictor { class }
    }
}

impl Predictor for MixturePredictor<'_> {
    fn alphabet(&self) -> Alphabet {
        Alphabet::new(self.class.m).expect("valid alphabet")
    }

    fn predict(&self, features: &[f64], held_out: usize, train_labels: &[u8]) -> Vec<f64> {
        let mut labels = Vec::with_capacity(features.len());
        labels.extend_from_slice(&train_labels[..held_out]);
        labels.push(0); // placeholder; the mixture never reads y_t
        labels.extend_from_slice(&train_labels[held_out..]);
        let data = Dataset::new(self.alphabet(), features.to_vec(), labels)
            .expect("features/labels consistent");
        self.class.problem.mixture_predict(&data, held_out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loo::loo_regret;

    fn grid(n: usize) -> Vec<f64> {
        (0..n).map(|i| i as f64).collect()
    }

    #[test]
    fn threshold_partition_count() {
        let parts = enumerate_partitions(&PartitionFamily::Thresholds, &grid(5)).unwrap();
        assert_eq!(parts.len(), 6);
        // Sauer–Shelah-style cap for a VC-dimension-1 family
        assert!(parts.len() as f64 <= std::f64::consts::E * 5.0);
    }

    #[test]
    fn explicit_partitions_deduplicate() {
        let fam = PartitionFamily::Explicit(vec![vec![0, 1, 0], vec![0, 1, 0]]);
        assert_eq!(enumerate_partitions(&fam, &grid(3)).unwrap().len(), 1);
    }

    #[test]
    fn duplicate_features_rejected() {
        let err = enumerate_partitions(&PartitionFamily::Thresholds, &[0.0, 1.0, 1.0]);
        assert!(err.is_err());
    }

    #[test]
    fn laplace_values() {
        let mut g = GroupCounts::empty(2);
        for y in [0, 0, 1, 1] {
            g.add(y);
        }
        assert_eq!(laplace_predict(&g, 2), vec![0.5, 0.5]);

        let empty = GroupCounts::empty(3);
        let q = laplace_predict(&empty, 3);
        assert!(q.iter().all(|&p| (p - 1.0 / 3.0).abs() < 1e-15));

        let mut g2 = GroupCounts::empty(2);
        for y in [0, 0, 1] {
            g2.add(y);
        }
        assert_eq!(laplace_predict(&g2, 2), vec![0.6, 0.4]);
    }

    #[test]
    fn first_in_order_gets_uniform_weights() {
        let data = Dataset::new(
            Alphabet::binary(),
            vec![3.0, 0.0, 1.0, 2.0],
            vec![1, 0, 0, 1],
        )
        .unwrap();
        let problem = ExpertsProblem::new(&PartitionFamily::Thresholds, data.features()).unwrap();
        // index 1 carries the smallest feature, so it is first in order
        let w = problem.weights(&data, 1);
        assert!(w.iter().all(|&x| (x - 1.0 / w.len() as f64).abs() < 1e-12));
        let sum: f64 = problem.weights(&data, 3).iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_expert_mixture_is_that_expert() {
        let fam = PartitionFamily::Explicit(vec![vec![0, 0, 1, 1]]);
        let data =
            Dataset::new(Alphabet::binary(), grid(4), vec![0, 0, 1, 0]).unwrap();
        let problem = ExpertsProblem::new(&fam, data.features()).unwrap();
        for t in 0..4 {
            let q = problem.mixture_predict(&data, t);
            let partition = &problem.partitions()[0];
            let state = ExpertState::leave_one_out(partition, &data, t);
            let expert = laplace_predict(&state.groups[partition[t] as usize], 2);
            for i in 0..2 {
                assert!((q[i] - expert[i]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn mixture_telescoping_bound_holds_exactly() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let n = 8;
            let labels: Vec<u8> = (0..n).map(|_| rng.gen_range(0..2u8)).collect();
            let data = Dataset::new(Alphabet::binary(), grid(n), labels).unwrap();
            let problem =
                ExpertsProblem::new(&PartitionFamily::Thresholds, data.features()).unwrap();
            let (mixture, experts) = problem.sequential_mixture_log_loss(&data);
            let ln_k = (problem.expert_count() as f64).ln();
            for loss in experts {
                assert!(
                    mixture <= loss + ln_k + 1e-9,
                    "mixture {mixture} expert {loss} lnK {ln_k}"
                );
            }
        }
    }

    #[test]
    fn reference_zero_when_groups_are_pure() {
        let fam = PartitionFamily::Explicit(vec![vec![0, 0, 1, 1]]);
        let data = Dataset::new(Alphabet::binary(), grid(4), vec![0, 0, 1, 1]).unwrap();
        let problem = ExpertsProblem::new(&fam, data.features()).unwrap();
        assert!(problem.reference_log_score(&data).abs() < 1e-15);
        // regret is then exactly the mixture's average log-loss
        let r = class_loo_regret(&fam, &data).unwrap();
        assert!(r.nats() > 0.0);
    }

    #[test]
    fn constant_sequence_has_zero_reference() {
        let data = Dataset::new(Alphabet::binary(), grid(6), vec![0; 6]).unwrap();
        let problem = ExpertsProblem::new(&PartitionFamily::Thresholds, data.features()).unwrap();
        assert!(problem.reference_log_score(&data).abs() < 1e-15);
    }

    #[test]
    fn class_regret_agrees_with_generic_functional() {
        let data =
            Dataset::new(Alphabet::binary(), grid(6), vec![0, 1, 1, 0, 1, 0]).unwrap();
        let fam = PartitionFamily::Thresholds;
        let direct = class_loo_regret(&fam, &data).unwrap();
        let class = PartitionClass::new(&fam, data.features(), 2).unwrap();
        let predictor = MixturePredictor::new(&class);
        let generic = loo_regret(&predictor, &class, &data).unwrap();
        assert!((direct.nats() - generic.nats()).abs() < 1e-12);
    }

    #[test]
    fn weights_shift_invariance() {
        // scaling all expert likelihoods by a common factor leaves the
        // normalized weights untouched; log-sum-exp realizes that exactly,
        // which we probe by comparing against a naive normalization.
        let data =
            Dataset::new(Alphabet::binary(), grid(5), vec![0, 1, 0, 1, 1]).unwrap();
        let problem = ExpertsProblem::new(&PartitionFamily::Thresholds, data.features()).unwrap();
        let w = problem.weights(&data, 4);
        let naive: Vec<f64> = problem
            .partitions()
            .iter()
            .map(|p| {
                let losses = sequential_log_losses(p, &data, &problem.order()[..4]);
                (-losses.iter().sum::<f64>()).exp()
            })
            .collect();
        let sum: f64 = naive.iter().sum();
        for (a, b) in w.iter().zip(naive.iter().map(|x| x / sum)) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn exhaustive_max_regret_within_rate_bound() {
        // small-N sweep; the acceptance suite runs the larger sizes
        let n = 8usize;
        let features = grid(n);
        let fam = PartitionFamily::Thresholds;
        let mut max = f64::NEG_INFINITY;
        for bits in 0u32..(1 << n) {
            let labels: Vec<u8> = (0..n).map(|i| ((bits >> i) & 1) as u8).collect();
            let data = Dataset::new(Alphabet::binary(), features.clone(), labels).unwrap();
            max = max.max(class_loo_regret(&fam, &data).unwrap().nats());
        }
        // Sauer–Shelah expert cap (eN/d)^d with d = 1
        let k_cap = std::f64::consts::E * n as f64;
        assert!(max <= (k_cap.ln() + 2.0) / n as f64, "max {max}");
        // fitted constant in R ≤ (d lnN + C)/N stays small
        assert!(max * n as f64 - (n as f64).ln() <= 4.0);
    }
}
