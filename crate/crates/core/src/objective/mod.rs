//! Set-function objectives over the agents' joint action ground set.
//!
//! The ground set is the disjoint union of every agent's action set. An
//! objective assigns a value to *any* subset of it (so curvature and the
//! second-order audit can work over the full ground set), while the
//! coordination algorithms only ever evaluate [`JointActionSet`]s, which
//! hold at most one action per agent.

mod coverage;
mod table;

pub use coverage::{CoverageObjective, CoverageWorld};
pub use table::{ModularObjective, TableObjective};

use std::ops::Deref;
use std::sync::atomic::{AtomicU64, Ordering};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance used by the randomized property audits.
pub const AUDIT_TOLERANCE: f64 = 1e-9;

/// One element of the ground set: action `choice` of agent `agent`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ActionId {
    pub agent: usize,
    pub choice: usize,
}

impl ActionId {
    pub const fn new(agent: usize, choice: usize) -> Self {
        Self { agent, choice }
    }
}

/// A set of actions holding at most one action per agent, sorted by agent.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct JointActionSet(Vec<ActionId>);

impl JointActionSet {
    pub fn new() -> Self {
        Self(Vec::new())
    }

    pub fn from_actions(actions: impl IntoIterator<Item = ActionId>) -> Result<Self> {
        let mut set = Self::new();
        for a in actions {
            set.insert(a)?;
        }
        Ok(set)
    }

    pub fn insert(&mut self, action: ActionId) -> Result<()> {
        match self.0.binary_search_by_key(&action.agent, |a| a.agent) {
            Ok(_) => Err(Error::DuplicateAgent { agent: action.agent }),
            Err(pos) => {
                self.0.insert(pos, action);
                Ok(())
            }
        }
    }

    pub fn contains_agent(&self, agent: usize) -> bool {
        self.action_of(agent).is_some()
    }

    pub fn action_of(&self, agent: usize) -> Option<ActionId> {
        self.0
            .binary_search_by_key(&agent, |a| a.agent)
            .ok()
            .map(|i| self.0[i])
    }

    pub fn as_slice(&self) -> &[ActionId] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<ActionId> {
        self.0
    }
}

impl Deref for JointActionSet {
    type Target = [ActionId];

    fn deref(&self) -> &[ActionId] {
        &self.0
    }
}

/// A normalized, monotone, submodular set function over the joint ground set.
///
/// Implementations must be pure: `value` may be called concurrently.
pub trait SubmodularObjective {
    /// Size of each agent's action set; index = agent.
    fn action_counts(&self) -> &[usize];

    /// Value of an arbitrary subset of the ground set. Every element must be
    /// a valid ground element; duplicates count once. `value(&[]) == 0`.
    fn value(&self, actions: &[ActionId]) -> f64;

    fn agent_count(&self) -> usize {
        self.action_counts().len()
    }

    fn evaluate(&self, set: &JointActionSet) -> f64 {
        self.value(set.as_slice())
    }

    /// Every element of the ground set, ordered by agent then choice.
    fn ground(&self) -> Vec<ActionId> {
        self.action_counts()
            .iter()
            .enumerate()
            .flat_map(|(agent, &n)| (0..n).map(move |choice| ActionId::new(agent, choice)))
            .collect()
    }

    fn check_action(&self, action: ActionId) -> Result<()> {
        let counts = self.action_counts();
        let count = *counts.get(action.agent).ok_or(Error::AgentOutOfRange {
            agent: action.agent,
            count: counts.len(),
        })?;
        if action.choice >= count {
            return Err(Error::ActionOutOfRange {
                agent: action.agent,
                choice: action.choice,
                count,
            });
        }
        Ok(())
    }
}

impl<T: SubmodularObjective + ?Sized> SubmodularObjective for &T {
    fn action_counts(&self) -> &[usize] {
        (**self).action_counts()
    }

    fn value(&self, actions: &[ActionId]) -> f64 {
        (**self).value(actions)
    }
}

/// Wraps an objective and counts calls to `value`.
pub struct EvalCounter<'a, F: ?Sized> {
    inner: &'a F,
    count: AtomicU64,
}

impl<'a, F: SubmodularObjective + ?Sized> EvalCounter<'a, F> {
    pub fn new(inner: &'a F) -> Self {
        Self {
            inner,
            count: AtomicU64::new(0),
        }
    }

    pub fn count(&self) -> u64 {
        self.count.load(Ordering::Relaxed)
    }
}

impl<F: SubmodularObjective + ?Sized> SubmodularObjective for EvalCounter<'_, F> {
    fn action_counts(&self) -> &[usize] {
        self.inner.action_counts()
    }

    fn value(&self, actions: &[ActionId]) -> f64 {
        self.count.fetch_add(1, Ordering::Relaxed);
        self.inner.value(actions)
    }
}

/// `f(set ∪ {s}) - f(set)` without any one-action-per-agent check.
fn gain<F: SubmodularObjective + ?Sized>(f: &F, s: ActionId, set: &[ActionId]) -> f64 {
    let mut with = Vec::with_capacity(set.len() + 1);
    with.extend_from_slice(set);
    with.push(s);
    f.value(&with) - f.value(set)
}

/// Marginal gain `f(a | context)`; `a`'s agent must not act in `context`.
pub fn marginal_gain<F: SubmodularObjective + ?Sized>(
    f: &F,
    action: ActionId,
    context: &[ActionId],
) -> Result<f64> {
    if context.iter().any(|c| c.agent == action.agent) {
        return Err(Error::DuplicateAgent { agent: action.agent });
    }
    Ok(gain(f, action, context))
}

/// Utility overlap between an agent's action and its neighbors' actions:
/// `f({a}) - f(a | neighbors)`.
pub fn mutual_information<F: SubmodularObjective + ?Sized>(
    f: &F,
    action: ActionId,
    neighbor_actions: &[ActionId],
) -> Result<f64> {
    let marginal = marginal_gain(f, action, neighbor_actions)?;
    Ok(f.value(&[action]) - marginal)
}

/// Total curvature of an objective restricted to a ground set.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Curvature {
    pub kappa: f64,
}

impl Curvature {
    /// `1 / (1 + κ)`: the fully connected coordination factor.
    pub fn centralized_factor(&self) -> f64 {
        1.0 / (1.0 + self.kappa)
    }

    /// `(1 - κ) / (1 + κ - κ²)`: the fully disconnected coordination factor.
    pub fn decentralized_factor(&self) -> f64 {
        let k = self.kappa;
        (1.0 - k) / (1.0 + k - k * k)
    }

    /// `κ⁻¹(1 - e^{-κ})`, continuously extended to 1 at κ = 0.
    pub fn network_discount(&self) -> f64 {
        let k = self.kappa;
        if k < 1e-12 {
            1.0
        } else {
            (1.0 - (-k).exp()) / k
        }
    }
}

/// `κ = 1 - min_v [f(V) - f(V \ {v})] / f({v})` over `ground`.
pub fn curvature<F: SubmodularObjective + ?Sized>(f: &F, ground: &[ActionId]) -> Result<Curvature> {
    if ground.is_empty() {
        return Err(Error::EmptyGround);
    }
    let full = f.value(ground);
    let mut rest = Vec::with_capacity(ground.len());
    let mut min_ratio = f64::INFINITY;
    for (i, &v) in ground.iter().enumerate() {
        let single = f.value(&[v]);
        if single <= 0.0 {
            return Err(Error::UndefinedCurvature(v));
        }
        rest.clear();
        rest.extend(
            ground
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &a)| a),
        );
        min_ratio = min_ratio.min((full - f.value(&rest)) / single);
    }
    let mut kappa = 1.0 - min_ratio;
    if (-1e-12..0.0).contains(&kappa) {
        kappa = 0.0;
    }
    Ok(Curvature {
        kappa: kappa.min(1.0),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub trials: usize,
    pub violations: usize,
    /// Smallest observed slack; negative when some trial violated the inequality.
    pub worst_margin: f64,
}

impl AuditReport {
    fn new(trials: usize) -> Self {
        Self {
            trials,
            violations: 0,
            worst_margin: f64::INFINITY,
        }
    }

    fn record(&mut self, margin: f64) {
        if margin < -AUDIT_TOLERANCE {
            self.violations += 1;
        }
        self.worst_margin = self.worst_margin.min(margin);
    }

    fn finish(mut self) -> Self {
        if !self.worst_margin.is_finite() {
            self.worst_margin = 0.0;
        }
        self
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// Randomized check of second-order submodularity:
/// `f(s|C) - f(s|A∪C) >= f(s|B∪C) - f(s|A∪B∪C)` for disjoint `A, B, C` not
/// containing `s`, sampled over the whole ground set.
pub fn audit_second_order<F: SubmodularObjective + ?Sized>(f: &F, trials: usize, seed: u64) -> AuditReport {
    let ground = f.ground();
    let mut report = AuditReport::new(trials);
    if ground.is_empty() {
        return report.finish();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut a, mut b, mut c) = (Vec::new(), Vec::new(), Vec::new());
    for _ in 0..trials {
        let s_idx = rng.gen_range(0..ground.len());
        let s = ground[s_idx];
        a.clear();
        b.clear();
        c.clear();
        for (i, &v) in ground.iter().enumerate() {
            if i == s_idx {
                continue;
            }
            match rng.gen_range(0..4) {
                0 => a.push(v),
                1 => b.push(v),
                2 => c.push(v),
                _ => {}
            }
        }
        let ac: Vec<_> = a.iter().chain(&c).copied().collect();
        let bc: Vec<_> = b.iter().chain(&c).copied().collect();
        let abc: Vec<_> = a.iter().chain(&b).chain(&c).copied().collect();
        let lhs = gain(f, s, &c) - gain(f, s, &ac);
        let rhs = gain(f, s, &bc) - gain(f, s, &abc);
        report.record(lhs - rhs);
    }
    report.finish()
}

/// Outcome of the randomized audit of the agent–neighbor mutual information.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InformationAudit {
    /// `I(a; J1) <= I(a; J2)` for nested `J1 ⊆ J2`.
    pub monotonicity: AuditReport,
    /// `I(a; A | B1) >= I(a; A | B1 ∪ B2)` for disjoint `A, B1, B2`.
    pub submodularity: AuditReport,
}

impl InformationAudit {
    pub fn passed(&self) -> bool {
        self.monotonicity.passed() && self.submodularity.passed()
    }
}

/// Randomized audit of monotonicity and submodularity of `I(a; ·)` in the
/// neighbor argument. Every case draws an agent, one of its actions, and one
/// random action for every other agent, then splits the other agents into
/// random nested or disjoint neighbor groups.
pub fn audit_mutual_information<F: SubmodularObjective + ?Sized>(
    f: &F,
    cases: usize,
    seed: u64,
) -> Result<InformationAudit> {
    let counts = f.action_counts().to_vec();
    if counts.len() < 2 {
        return Err(Error::config(
            "mutual information audit needs at least two agents",
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mono = AuditReport::new(cases);
    let mut sub = AuditReport::new(cases);
    let info = |a: ActionId, j: &[ActionId]| mutual_information(f, a, j);
    for _ in 0..cases {
        let agent = rng.gen_range(0..counts.len());
        let a = ActionId::new(agent, rng.gen_range(0..counts[agent]));
        let mut others: Vec<ActionId> = (0..counts.len())
            .filter(|&j| j != agent)
            .map(|j| ActionId::new(j, rng.gen_range(0..counts[j])))
            .collect();
        others.shuffle(&mut rng);

        let k1 = rng.gen_range(0..=others.len());
        let k2 = rng.gen_range(k1..=others.len());
        mono.record(info(a, &others[..k2])? - info(a, &others[..k1])?);

        let (mut set_a, mut b1, mut b12) = (Vec::new(), Vec::new(), Vec::new());
        for &o in &others {
            match rng.gen_range(0..4) {
                0 => set_a.push(o),
                1 => {
                    b1.push(o);
                    b12.push(o);
                }
                2 => b12.push(o),
                _ => {}
            }
        }
        let a_b1: Vec<_> = set_a.iter().chain(&b1).copied().collect();
        let a_b12: Vec<_> = set_a.iter().chain(&b12).copied().collect();
        let cond_small = info(a, &a_b1)? - info(a, &b1)?;
        let cond_large = info(a, &a_b12)? - info(a, &b12)?;
        sub.record(cond_small - cond_large);
    }
    Ok(InformationAudit {
        monotonicity: mono.finish(),
        submodularity: sub.finish(),
    })
}

/// Exhaustive maximum of `f` over joint actions with exactly one action per
/// agent. Returns the maximizing set and its value.
pub fn exhaustive_optimum<F: SubmodularObjective + ?Sized>(
    f: &F,
    max_joint_actions: u64,
) -> Result<(JointActionSet, f64)> {
    let counts = f.action_counts();
    let total = counts
        .iter()
        .try_fold(1u64, |acc, &n| acc.checked_mul(n as u64))
        .filter(|&t| t <= max_joint_actions)
        .ok_or_else(|| {
            Error::UnsupportedSize(format!(
                "joint action space exceeds {max_joint_actions} combinations"
            ))
        })?;
    if counts.contains(&0) {
        return Err(Error::config("every agent needs at least one action"));
    }
    let mut digits = vec![0usize; counts.len()];
    let mut current: Vec<ActionId> = (0..counts.len()).map(|i| ActionId::new(i, 0)).collect();
    let mut best = (current.clone(), f.value(&current));
    for _ in 1..total {
        for (i, d) in digits.iter_mut().enumerate() {
            *d += 1;
            if *d < counts[i] {
                break;
            }
            *d = 0;
        }
        for (slot, &d) in current.iter_mut().zip(&digits) {
            slot.choice = d;
        }
        let v = f.value(&current);
        if v > best.1 {
            best = (current.clone(), v);
        }
    }
    Ok((JointActionSet(best.0), best.1))
}
