//! A single coordinating agent: one multiplicative-weights learner over its
//! own actions and a bank of `α` EXP3-IX learners over its neighbor
//! candidates.
//!
//! Per round the agent evaluates the objective exactly `|V| + 2α + 1` times:
//! one singleton value `f({a})` plus two values per neighbor draw
//! (`f(J_k)` and `f(J_k ∪ {a})`), then `|V|` values `f(J ∪ {a'})` for the
//! action update, which reuses the cached context `f(J)` from the last draw.
//! With `α = 0` the context `f(∅)` is evaluated instead of `f({a})`.

use serde::{Deserialize, Serialize};

use crate::bandit::{Exp3IxBank, MwuLearner};
use crate::error::{Error, Result};
use crate::objective::{ActionId, SubmodularObjective};
use crate::rng::{self, Role, StreamRng};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentConfig {
    pub id: usize,
    pub action_count: usize,
    /// Agents within communication reach (`M_i`); never contains `id`.
    pub candidates: Vec<usize>,
    /// Bandwidth cap; clamped to `candidates.len()`.
    pub alpha: usize,
    pub horizon: usize,
    /// Divisor mapping marginal gains into `[0, 1]`.
    pub reward_scale: f64,
}

impl AgentConfig {
    /// Sorts and deduplicates candidates, clamps `alpha`, and validates.
    pub fn normalized(mut self) -> Result<Self> {
        self.candidates.sort_unstable();
        self.candidates.dedup();
        if self.candidates.contains(&self.id) {
            return Err(Error::config(format!(
                "agent {} lists itself as a neighbor candidate",
                self.id
            )));
        }
        if self.action_count == 0 {
            return Err(Error::config(format!("agent {} has no actions", self.id)));
        }
        if self.horizon == 0 {
            return Err(Error::config("horizon must be at least 1"));
        }
        if !(self.reward_scale > 0.0 && self.reward_scale.is_finite()) {
            return Err(Error::config(format!(
                "agent {} has invalid reward scale {}",
                self.id, self.reward_scale
            )));
        }
        self.alpha = self.alpha.min(self.candidates.len());
        Ok(self)
    }
}

/// Largest singleton value among an agent's actions, or 1 if all are zero.
pub fn singleton_scale<F: SubmodularObjective + ?Sized>(f: &F, agent: usize) -> f64 {
    let best = (0..f.action_counts()[agent])
        .map(|c| f.value(&[ActionId::new(agent, c)]))
        .fold(0.0, f64::max);
    if best > 0.0 {
        best
    } else {
        1.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DrawRecord {
    pub slot: usize,
    pub candidate: usize,
    pub probability: f64,
    /// Increment of the mutual information, in objective units.
    pub raw_reward: f64,
    /// Normalized reward fed to the slot's learner.
    pub reward: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct NeighborSelection {
    /// Distinct drawn candidates, ascending.
    pub neighborhood: Vec<usize>,
    pub draws: Vec<DrawRecord>,
    /// The neighbors' actions, ascending by agent.
    pub neighbor_actions: Vec<ActionId>,
    /// `f(neighbor_actions)` when it was evaluated during the draws.
    pub context_value: Option<f64>,
    pub evals: u64,
}

#[derive(Clone, Debug)]
pub struct Agent {
    config: AgentConfig,
    actions: MwuLearner,
    neighbors: Exp3IxBank,
    action_rng: StreamRng,
    neighbor_rngs: Vec<StreamRng>,
    clamp_fires: u64,
}

impl Agent {
    pub fn new(config: AgentConfig, master_seed: u64) -> Result<Self> {
        let config = config.normalized()?;
        let actions = MwuLearner::new(config.action_count, config.horizon)?;
        let neighbors = Exp3IxBank::new(config.alpha, config.candidates.len(), config.horizon)?;
        let neighbor_rngs = (0..config.alpha)
            .map(|k| rng::stream(master_seed, config.id, Role::Neighbor, k))
            .collect();
        Ok(Self {
            action_rng: rng::stream(master_seed, config.id, Role::Action, 0),
            neighbor_rngs,
            actions,
            neighbors,
            config,
            clamp_fires: 0,
        })
    }

    /// Restarts learning from scratch, e.g. after the candidate set changed.
    pub fn reset(&mut self, config: AgentConfig, master_seed: u64) -> Result<()> {
        *self = Self::new(config, master_seed)?;
        Ok(())
    }

    pub fn id(&self) -> usize {
        self.config.id
    }

    pub fn config(&self) -> &AgentConfig {
        &self.config
    }

    pub fn action_learner(&self) -> &MwuLearner {
        &self.actions
    }

    pub fn neighbor_bank(&self) -> &Exp3IxBank {
        &self.neighbors
    }

    /// Number of rewards that fell outside `[0, 1]` before clamping.
    pub fn clamp_fires(&self) -> u64 {
        self.clamp_fires
    }

    /// Evaluations this agent performs every round.
    pub fn evals_per_round(&self) -> u64 {
        (self.config.action_count + 2 * self.config.alpha + 1) as u64
    }

    pub fn select_action(&mut self) -> ActionId {
        ActionId::new(self.config.id, self.actions.sample(&mut self.action_rng))
    }

    fn normalize(&mut self, raw: f64) -> f64 {
        let r = raw / self.config.reward_scale;
        if (0.0..=1.0).contains(&r) {
            r
        } else {
            self.clamp_fires += 1;
            r.clamp(0.0, 1.0)
        }
    }

    /// Draws `α` neighbors one slot at a time, rewarding slot `k` with the
    /// gain in mutual information its draw added, and updates each slot's
    /// learner. `lookup` delivers a candidate's action for this round.
    pub fn select_neighbors<F, L>(&mut self, own: ActionId, lookup: L, f: &F) -> Result<NeighborSelection>
    where
        F: SubmodularObjective + ?Sized,
        L: Fn(usize) -> Option<ActionId>,
    {
        let mut out = NeighborSelection::default();
        if self.config.alpha == 0 {
            return Ok(out);
        }
        let own_value = f.value(&[own]);
        out.evals = 1;
        let mut prev_info = 0.0;
        let mut with_own = Vec::with_capacity(self.config.alpha + 1);
        for slot in 0..self.config.alpha {
            let (arm, q) = self.neighbors.learners()[slot].step(&mut self.neighbor_rngs[slot]);
            let candidate = self.config.candidates[arm];
            let action =
                lookup(candidate)
                    .filter(|a| a.agent == candidate)
                    .ok_or(Error::MissingNeighborAction {
                        agent: self.config.id,
                        candidate,
                    })?;
            if let Err(pos) = out.neighbor_actions.binary_search_by_key(&candidate, |a| a.agent) {
                out.neighbor_actions.insert(pos, action);
                out.neighborhood.insert(pos, candidate);
            }

            let context = f.value(&out.neighbor_actions);
            with_own.clear();
            with_own.extend_from_slice(&out.neighbor_actions);
            with_own.push(own);
            let joint = f.value(&with_own);
            out.evals += 2;

            let info = own_value - (joint - context);
            let raw = info - prev_info;
            prev_info = info;
            let reward = self.normalize(raw);
            self.neighbors.learner_mut(slot).update(arm, q, reward)?;
            out.context_value = Some(context);
            out.draws.push(DrawRecord {
                slot,
                candidate,
                probability: q,
                raw_reward: raw,
                reward,
            });
        }
        Ok(out)
    }

    /// Full-information update of the action learner: every action is
    /// rewarded with its normalized marginal gain given the neighbors'
    /// actions. Returns the number of objective evaluations.
    pub fn update_action_learner<F: SubmodularObjective + ?Sized>(
        &mut self,
        neighbor_actions: &[ActionId],
        cached_context: Option<f64>,
        f: &F,
    ) -> Result<u64> {
        if neighbor_actions.iter().any(|a| a.agent == self.config.id) {
            return Err(Error::DuplicateAgent {
                agent: self.config.id,
            });
        }
        let mut evals = 0;
        let context = match cached_context {
            Some(v) => v,
            None => {
                evals += 1;
                f.value(neighbor_actions)
            }
        };
        let mut buf = Vec::with_capacity(neighbor_actions.len() + 1);
        let mut rewards = Vec::with_capacity(self.config.action_count);
        for choice in 0..self.config.action_count {
            buf.clear();
            buf.extend_from_slice(neighbor_actions);
            buf.push(ActionId::new(self.config.id, choice));
            let raw = f.value(&buf) - context;
            evals += 1;
            rewards.push(self.normalize(raw));
        }
        self.actions.update(&rewards)?;
        Ok(evals)
    }
}
