//! Online learners: full-information multiplicative weights (action
//! coordination) and EXP3-IX with implicit exploration (neighbor selection).
//!
//! Both store log-weights; probabilities are computed with max-subtraction so
//! long horizons cannot overflow. Learning rates use the natural logarithm
//! and a fixed, known horizon.

use rand::Rng;

use crate::error::{Error, Result};

/// Softmax of log-weights.
fn normalize(log_weights: &[f64]) -> Vec<f64> {
    let max = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut p: Vec<f64> = log_weights.iter().map(|w| (w - max).exp()).collect();
    let sum: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= sum);
    p
}

/// Inverse-CDF draw; falls back to the last arm with positive mass when
/// rounding leaves the cumulative sum just below `u`.
fn draw<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

fn check_reward(arm: usize, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::RewardOutOfRange { arm, value })
    }
}

/// Multiplicative-weights learner with rate `η₁ = √(8 ln K / T)`.
#[derive(Clone, Debug, PartialEq)]
pub struct MwuLearner {
    log_weights: Vec<f64>,
    eta: f64,
    horizon: usize,
}

impl MwuLearner {
    pub fn new(arm_count: usize, horizon: usize) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::config("horizon must be at least 1"));
        }
        let eta = (8.0 * (arm_count as f64).ln() / horizon as f64).sqrt();
        let mut learner = Self::with_rate(arm_count, eta)?;
        learner.horizon = horizon;
        Ok(learner)
    }

    /// Learner with an explicit rate; the horizon is reported as 0.
    pub fn with_rate(arm_count: usize, eta: f64) -> Result<Self> {
        if arm_count == 0 {
            return Err(Error::config("a learner needs at least one arm"));
        }
        if !(eta >= 0.0 && eta.is_finite()) {
            return Err(Error::config(format!("invalid learning rate {eta}")));
        }
        Ok(Self {
            log_weights: vec![0.0; arm_count],
            eta,
            horizon: 0,
        })
    }

    pub fn arm_count(&self) -> usize {
        self.log_weights.len()
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    /// Raw (unnormalized) weights. May overflow for extreme histories;
    /// prefer [`Self::distribution`].
    pub fn weights(&self) -> Vec<f64> {
        self.log_weights.iter().map(|w| w.exp()).collect()
    }

    pub fn distribution(&self) -> Vec<f64> {
        normalize(&self.log_weights)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        if self.arm_count() == 1 {
            return 0;
        }
        draw(&self.distribution(), rng)
    }

    /// Full-information update: `w_a ← w_a · exp(η r_a)` for every arm.
    pub fn update(&mut self, rewards: &[f64]) -> Result<()> {
        if rewards.len() != self.arm_count() {
            return Err(Error::RewardLength {
                expected: self.arm_count(),
                got: rewards.len(),
            });
        }
        for (arm, &r) in rewards.iter().enumerate() {
            check_reward(arm, r)?;
        }
        for (w, r) in self.log_weights.iter_mut().zip(rewards) {
            *w += self.eta * r;
        }
        Ok(())
    }
}

/// EXP3-IX learner with `η₂ = √(2 ln K / (K T))` and `γ = η₂ / 2`.
#[derive(Clone, Debug, PartialEq)]
pub struct Exp3IxLearner {
    log_weights: Vec<f64>,
    eta: f64,
    gamma: f64,
}

impl Exp3IxLearner {
    pub fn new(arm_count: usize, horizon: usize) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::config("horizon must be at least 1"));
        }
        let k = arm_count as f64;
        let eta = (2.0 * k.ln() / (k * horizon as f64)).sqrt();
        Self::with_rates(arm_count, eta, eta / 2.0)
    }

    pub fn with_rates(arm_count: usize, eta: f64, gamma: f64) -> Result<Self> {
        if arm_count == 0 {
            return Err(Error::config("a learner needs at least one arm"));
        }
        if !(eta >= 0.0 && eta.is_finite() && gamma >= 0.0 && gamma.is_finite()) {
            return Err(Error::config(format!("invalid rates eta={eta} gamma={gamma}")));
        }
        Ok(Self {
            log_weights: vec![0.0; arm_count],
            eta,
            gamma,
        })
    }

    pub fn arm_count(&self) -> usize {
        self.log_weights.len()
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    pub fn weights(&self) -> Vec<f64> {
        self.log_weights.iter().map(|w| w.exp()).collect()
    }

    pub fn distribution(&self) -> Vec<f64> {
        normalize(&self.log_weights)
    }

    /// Samples an arm and returns it with the probability it had.
    pub fn step<R: Rng + ?Sized>(&self, rng: &mut R) -> (usize, f64) {
        let q = self.distribution();
        let arm = if q.len() == 1 { 0 } else { draw(&q, rng) };
        (arm, q[arm])
    }

    /// Implicit-exploration estimate for `arm` after `chosen` was played with
    /// probability `q_chosen` and earned `reward`.
    pub fn estimated_reward(&self, arm: usize, chosen: usize, q_chosen: f64, reward: f64) -> f64 {
        if arm == chosen {
            1.0 - (1.0 - reward) / (q_chosen + self.gamma)
        } else {
            1.0
        }
    }

    pub fn update(&mut self, chosen: usize, q_chosen: f64, reward: f64) -> Result<()> {
        if chosen >= self.arm_count() {
            return Err(Error::ArmOutOfRange {
                arm: chosen,
                count: self.arm_count(),
            });
        }
        check_reward(chosen, reward)?;
        if !(q_chosen > 0.0 && q_chosen <= 1.0) {
            return Err(Error::InvalidProbability(q_chosen));
        }
        for j in 0..self.arm_count() {
            let est = self.estimated_reward(j, chosen, q_chosen, reward);
            self.log_weights[j] += self.eta * est;
        }
        Ok(())
    }
}

/// One EXP3-IX learner per neighbor slot (`α` slots).
#[derive(Clone, Debug, PartialEq)]
pub struct Exp3IxBank {
    learners: Vec<Exp3IxLearner>,
}

impl Exp3IxBank {
    pub fn new(slots: usize, arm_count: usize, horizon: usize) -> Result<Self> {
        let learners = (0..slots)
            .map(|_| Exp3IxLearner::new(arm_count, horizon))
            .collect::<Result<_>>()?;
        Ok(Self { learners })
    }

    pub fn len(&self) -> usize {
        self.learners.len()
    }

    pub fn is_empty(&self) -> bool {
        self.learners.is_empty()
    }

    pub fn learners(&self) -> &[Exp3IxLearner] {
        &self.learners
    }

    pub fn learner_mut(&mut self, slot: usize) -> &mut Exp3IxLearner {
        &mut self.learners[slot]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Role};
    use proptest::prelude::*;

    fn sum(v: &[f64]) -> f64 {
        v.iter().sum()
    }

    #[test]
    fn mwu_rate_and_uniform_start() {
        let l = MwuLearner::new(4, 100).unwrap();
        assert!((l.eta() - (8.0 * 4f64.ln() / 100.0).sqrt()).abs() < 1e-15);
        assert_eq!(l.distribution(), vec![0.25; 4]);
        assert_eq!(l.weights(), vec![1.0; 4]);
    }

    #[test]
    fn mwu_two_arm_distribution_matches_definition() {
        let mut l = MwuLearner::new(2, 50).unwrap();
        l.update(&[0.0, 1.0]).unwrap();
        let e = l.eta().exp();
        let p = l.distribution();
        assert!((p[0] - 1.0 / (1.0 + e)).abs() < 1e-15);
        assert!((p[1] - e / (1.0 + e)).abs() < 1e-15);
    }

    #[test]
    fn mwu_update_examples() {
        let mut l = MwuLearner::with_rate(2, 0.5).unwrap();
        l.update(&[1.0, 0.0]).unwrap();
        assert_eq!(l.weights(), vec![0.5f64.exp(), 1.0]);

        let mut z = MwuLearner::new(3, 10).unwrap();
        z.update(&[0.0; 3]).unwrap();
        assert_eq!(z.weights(), vec![1.0; 3]);

        let mut o = MwuLearner::new(3, 10).unwrap();
        o.update(&[0.3, 0.9, 0.1]).unwrap();
        let before = o.distribution();
        let w_before = o.weights();
        o.update(&[1.0; 3]).unwrap();
        for (a, b) in before.iter().zip(o.distribution()) {
            assert!((a - b).abs() < 1e-15);
        }
        for (a, b) in w_before.iter().zip(o.weights()) {
            assert!((b / a - o.eta().exp()).abs() < 1e-12);
        }
    }

    #[test]
    fn mwu_distribution_matches_scripted_recursion() {
        let rewards = [0.2, 0.7, 0.4, 1.0, 0.0];
        let mut l = MwuLearner::new(5, 40).unwrap();
        for _ in 0..10 {
            l.update(&rewards).unwrap();
        }
        // Oracle: w_a = exp(10 η r_a), normalized directly.
        let eta = (8.0 * 5f64.ln() / 40.0).sqrt();
        let w: Vec<f64> = rewards.iter().map(|r| (10.0 * eta * r).exp()).collect();
        let total: f64 = w.iter().sum();
        for (p, wi) in l.distribution().iter().zip(&w) {
            assert!((p - wi / total).abs() < 1e-12);
        }
    }

    #[test]
    fn mwu_rejects_bad_rewards() {
        let mut l = MwuLearner::new(3, 10).unwrap();
        assert!(matches!(
            l.update(&[0.0, 1.5, 0.0]),
            Err(Error::RewardOutOfRange { arm: 1, .. })
        ));
        assert!(matches!(
            l.update(&[0.0, f64::NAN, 0.0]),
            Err(Error::RewardOutOfRange { arm: 1, .. })
        ));
        assert!(matches!(
            l.update(&[0.0]),
            Err(Error::RewardLength { expected: 3, got: 1 })
        ));
        assert!(MwuLearner::new(0, 10).is_err());
        assert!(MwuLearner::new(3, 0).is_err());
    }

    #[test]
    fn single_arm_always_zero() {
        let l = MwuLearner::new(1, 10).unwrap();
        assert_eq!(l.eta(), 0.0);
        let mut rng = stream(1, 0, Role::Action, 0);
        assert!((0..100).all(|_| l.sample(&mut rng) == 0));
    }

    #[test]
    fn mwu_concentrates_after_extreme_rewards() {
        let mut l = MwuLearner::with_rate(2, 1.0).unwrap();
        for _ in 0..60 {
            l.update(&[1.0, 0.0]).unwrap();
        }
        let mut rng = stream(3, 0, Role::Action, 0);
        let zeros = (0..10_000).filter(|_| l.sample(&mut rng) == 0).count();
        assert_eq!(zeros, 10_000);
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let mut l = MwuLearner::new(6, 100).unwrap();
        l.update(&[0.1, 0.5, 0.2, 0.9, 0.3, 0.4]).unwrap();
        let run = |seed| {
            let mut rng = stream(seed, 2, Role::Action, 0);
            (0..50).map(|_| l.sample(&mut rng)).collect::<Vec<_>>()
        };
        assert_eq!(run(9), run(9));
        assert_ne!(run(9), run(10));
    }

    #[test]
    fn exp3ix_rates() {
        let l = Exp3IxLearner::new(5, 200).unwrap();
        let eta = (2.0 * 5f64.ln() / (5.0 * 200.0)).sqrt();
        assert!((l.eta() - eta).abs() < 1e-15);
        assert_eq!(l.gamma(), l.eta() / 2.0);
        let (_, q) = l.step(&mut stream(0, 0, Role::Neighbor, 0));
        assert_eq!(q, 0.2);
    }

    #[test]
    fn exp3ix_estimator_examples() {
        let l = Exp3IxLearner::with_rates(3, 0.2, 0.1).unwrap();
        assert!((l.estimated_reward(1, 1, 0.5, 0.8) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(l.estimated_reward(0, 1, 0.5, 0.8), 1.0);
        assert_eq!(l.estimated_reward(1, 1, 0.01, 1.0), 1.0);
    }

    #[test]
    fn exp3ix_full_reward_keeps_distribution() {
        let mut l = Exp3IxLearner::new(4, 100).unwrap();
        l.update(2, 0.25, 0.3).unwrap();
        let before = l.distribution();
        l.update(1, before[1], 1.0).unwrap();
        for (a, b) in before.iter().zip(l.distribution()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn exp3ix_rejects_bad_inputs() {
        let mut l = Exp3IxLearner::new(3, 10).unwrap();
        assert!(matches!(
            l.update(0, 0.5, -0.1),
            Err(Error::RewardOutOfRange { .. })
        ));
        assert!(matches!(l.update(0, 0.0, 0.5), Err(Error::InvalidProbability(_))));
        assert!(matches!(l.update(5, 0.5, 0.5), Err(Error::ArmOutOfRange { .. })));
    }

    #[test]
    fn exp3ix_frequencies_match_probabilities() {
        let mut l = Exp3IxLearner::with_rates(4, 0.5, 0.1).unwrap();
        l.update(0, 0.25, 0.0).unwrap();
        l.update(3, 0.2, 0.9).unwrap();
        let q = l.distribution();
        let n = 10_000;
        let mut counts = [0usize; 4];
        let mut rng = stream(5, 1, Role::Neighbor, 0);
        for _ in 0..n {
            counts[l.step(&mut rng).0] += 1;
        }
        for (c, p) in counts.iter().zip(&q) {
            let sigma = (n as f64 * p * (1.0 - p)).sqrt();
            assert!(
                (*c as f64 - n as f64 * p).abs() <= 3.0 * sigma,
                "{counts:?} vs {q:?}"
            );
        }
    }

    #[test]
    fn bank_has_independent_slots() {
        let mut bank = Exp3IxBank::new(3, 4, 100).unwrap();
        assert_eq!(bank.len(), 3);
        bank.learner_mut(1).update(0, 0.25, 0.0).unwrap();
        assert_eq!(bank.learners()[0].distribution(), vec![0.25; 4]);
        assert_ne!(bank.learners()[1].distribution(), vec![0.25; 4]);
        assert!(Exp3IxBank::new(0, 4, 10).unwrap().is_empty());
    }

    proptest! {
        #[test]
        fn distributions_stay_valid(
            rewards in prop::collection::vec(prop::collection::vec(0.0f64..=1.0, 5), 1..60),
            draws in prop::collection::vec((0usize..5, 0.0f64..=1.0), 1..60),
        ) {
            let mut m = MwuLearner::new(5, 60).unwrap();
            for r in &rewards {
                m.update(r).unwrap();
                let p = m.distribution();
                prop_assert!(p.iter().all(|x| *x >= 0.0));
                prop_assert!((sum(&p) - 1.0).abs() < 1e-12);
            }
            let mut x = Exp3IxLearner::new(5, 60).unwrap();
            for &(arm, r) in &draws {
                let q = x.distribution();
                prop_assert!(q[arm] > 0.0);
                x.update(arm, q[arm], r).unwrap();
                let q = x.distribution();
                prop_assert!(q.iter().all(|v| *v >= 0.0));
                prop_assert!((sum(&q) - 1.0).abs() < 1e-12);
                prop_assert!(x.log_weights().iter().all(|w| w.is_finite()));
            }
        }

        #[test]
        fn scaling_weights_leaves_probabilities(
            logs in prop::collection::vec(-5.0f64..5.0, 1..8),
            shift in -50.0f64..50.0,
        ) {
            let shifted: Vec<f64> = logs.iter().map(|l| l + shift).collect();
            let a = normalize(&logs);
            let b = normalize(&shifted);
            for (p, q) in a.iter().zip(&b) {
                prop_assert!((p - q).abs() < 1e-12);
            }
        }
    }
}
