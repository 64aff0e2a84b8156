//! Round loop of the alternating coordination / network-design algorithm.
//!
//! Every round: all agents draw actions; every agent draws its neighbors and
//! receives their actions of this round in a single exchange phase; every
//! agent updates both learners; the simulated clock advances by the slowest
//! agent's evaluation count plus one communication round.

use serde::{Deserialize, Serialize};

use crate::agent::{Agent, AgentConfig};
use crate::clock::TimeModel;
use crate::error::{Error, Result};
use crate::objective::{curvature, ActionId, EvalCounter, JointActionSet, SubmodularObjective};

/// A point-to-point transmission of one action.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub from: usize,
    pub to: usize,
    pub payload: ActionId,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundSnapshot {
    /// 1-based round (or commitment) index.
    pub t: usize,
    pub sim_seconds: f64,
    pub actions: JointActionSet,
    pub neighborhoods: Vec<Vec<usize>>,
    /// Objective value of `actions`; instrumentation, not counted per agent.
    pub f_value: f64,
    pub comm_messages: usize,
    pub exchange_phases: usize,
    pub ledger: Vec<Message>,
    pub eval_counts: Vec<u64>,
}

impl RoundSnapshot {
    pub fn max_evals(&self) -> u64 {
        self.eval_counts.iter().copied().max().unwrap_or(0)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SimTrace {
    pub snapshots: Vec<RoundSnapshot>,
    pub sim_time: Vec<f64>,
    /// Connected components the baseline had to run separately (0 or 1 means connected).
    pub components: usize,
    /// Transfers that had no directed route and fell back to undirected hops.
    pub fallback_transfers: usize,
}

impl SimTrace {
    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn final_value(&self) -> f64 {
        self.snapshots.last().map_or(0.0, |s| s.f_value)
    }

    fn push(&mut self, snapshot: RoundSnapshot) {
        self.sim_time.push(snapshot.sim_seconds);
        self.snapshots.push(snapshot);
    }
}

/// Stepwise simulation over a shared objective.
pub struct Simulation<'a, F: ?Sized> {
    objective: &'a F,
    agents: Vec<Agent>,
    clock: TimeModel,
    horizon: usize,
    t: usize,
}

impl<'a, F: SubmodularObjective + ?Sized> Simulation<'a, F> {
    /// Builds the agents. Config `i` must describe agent `i`; every config's
    /// horizon is replaced by `horizon`.
    pub fn new(
        configs: &[AgentConfig],
        objective: &'a F,
        clock: TimeModel,
        horizon: usize,
        master_seed: u64,
    ) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::config("horizon must be at least 1"));
        }
        let counts = objective.action_counts();
        if configs.len() != counts.len() {
            return Err(Error::config(format!(
                "{} agent configs for an objective over {} agents",
                configs.len(),
                counts.len()
            )));
        }
        let agents = configs
            .iter()
            .enumerate()
            .map(|(i, c)| {
                if c.id != i {
                    return Err(Error::config(format!("config {i} has id {}", c.id)));
                }
                if c.action_count != counts[i] {
                    return Err(Error::config(format!(
                        "agent {i} declares {} actions, objective has {}",
                        c.action_count, counts[i]
                    )));
                }
                if let Some(&bad) = c.candidates.iter().find(|&&j| j >= counts.len()) {
                    return Err(Error::AgentOutOfRange {
                        agent: bad,
                        count: counts.len(),
                    });
                }
                Agent::new(AgentConfig { horizon, ..c.clone() }, master_seed)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            objective,
            agents,
            clock,
            horizon,
            t: 0,
        })
    }

    pub fn agents(&self) -> &[Agent] {
        &self.agents
    }

    pub fn clock(&self) -> &TimeModel {
        &self.clock
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn rounds_done(&self) -> usize {
        self.t
    }

    pub fn step(&mut self) -> Result<RoundSnapshot> {
        let n = self.agents.len();
        let drawn: Vec<ActionId> = self.agents.iter_mut().map(Agent::select_action).collect();

        let mut neighborhoods = Vec::with_capacity(n);
        let mut ledger = Vec::new();
        let mut eval_counts = Vec::with_capacity(n);
        let mut selections = Vec::with_capacity(n);
        for (i, agent) in self.agents.iter_mut().enumerate() {
            let counter = EvalCounter::new(self.objective);
            let sel = agent.select_neighbors(drawn[i], |j| drawn.get(j).copied(), &counter)?;
            // Each draw is one transmission of the drawn neighbor's own action.
            ledger.extend(sel.draws.iter().map(|d| Message {
                from: d.candidate,
                to: i,
                payload: drawn[d.candidate],
            }));
            selections.push((sel, counter.count()));
        }
        // Single exchange phase: every requested action has now been delivered.
        let exchange_phases = 1;

        for (i, (agent, (sel, evals))) in self.agents.iter_mut().zip(selections).enumerate() {
            let counter = EvalCounter::new(self.objective);
            agent.update_action_learner(&sel.neighbor_actions, sel.context_value, &counter)?;
            eval_counts.push(evals + counter.count());
            debug_assert!(!sel.neighborhood.contains(&i));
            neighborhoods.push(sel.neighborhood);
        }

        self.clock
            .charge_anaconda_round(&eval_counts, exchange_phases as u64);
        self.t += 1;
        let actions = JointActionSet::from_actions(drawn)?;
        Ok(RoundSnapshot {
            t: self.t,
            sim_seconds: self.clock.elapsed(),
            f_value: self.objective.evaluate(&actions),
            actions,
            neighborhoods,
            comm_messages: ledger.len(),
            exchange_phases,
            ledger,
            eval_counts,
        })
    }

    /// Runs the remaining rounds up to the horizon.
    pub fn run(mut self) -> Result<SimTrace> {
        let mut trace = SimTrace {
            components: 1,
            ..SimTrace::default()
        };
        while self.t < self.horizon {
            let snap = self.step()?;
            trace.push(snap);
        }
        Ok(trace)
    }
}

/// Runs `horizon` rounds from freshly initialized agents.
pub fn run<F: SubmodularObjective + ?Sized>(
    configs: &[AgentConfig],
    objective: &F,
    clock: TimeModel,
    horizon: usize,
    master_seed: u64,
) -> Result<SimTrace> {
    Simulation::new(configs, objective, clock, horizon, master_seed)?.run()
}

/// Largest candidate set the network-regret benchmark will enumerate.
pub const MAX_ENUMERATED_CANDIDATES: usize = 15;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentRegret {
    pub agent: usize,
    pub rounds: usize,
    /// Best fixed action in hindsight minus realized marginal gains,
    /// both against the realized neighbor actions.
    pub action_regret: f64,
    /// Discounted best fixed neighborhood minus realized mutual information.
    pub network_regret: f64,
}

fn subsets_up_to(items: &[usize], max_len: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for &item in items {
        let extended: Vec<Vec<usize>> = out
            .iter()
            .filter(|s| s.len() < max_len)
            .map(|s| {
                let mut s = s.clone();
                s.push(item);
                s
            })
            .collect();
        out.extend(extended);
    }
    out
}

/// Per-agent action and network-design regret over a complete trace.
pub fn regret_diagnostics<F: SubmodularObjective + ?Sized>(
    trace: &SimTrace,
    objective: &F,
    configs: &[AgentConfig],
) -> Result<Vec<AgentRegret>> {
    let configs = configs
        .iter()
        .cloned()
        .map(AgentConfig::normalized)
        .collect::<Result<Vec<_>>>()?;
    if let Some(c) = configs
        .iter()
        .find(|c| c.candidates.len() > MAX_ENUMERATED_CANDIDATES)
    {
        return Err(Error::UnsupportedSize(format!(
            "agent {} has {} candidates (limit {MAX_ENUMERATED_CANDIDATES})",
            c.id,
            c.candidates.len()
        )));
    }
    let discount = curvature(objective, &objective.ground())?.network_discount();
    let f = objective;

    let mut out = Vec::with_capacity(configs.len());
    let mut buf = Vec::new();
    let marginal = |buf: &mut Vec<ActionId>, ctx: &[ActionId], a: ActionId| {
        buf.clear();
        buf.extend_from_slice(ctx);
        buf.push(a);
        f.value(buf) - f.value(ctx)
    };
    for c in &configs {
        let i = c.id;
        let mut fixed = vec![0.0; c.action_count];
        let mut realized = 0.0;
        let mut realized_info = 0.0;
        let subsets = subsets_up_to(&c.candidates, c.alpha);
        let mut subset_info = vec![0.0; subsets.len()];
        let mut ctx = Vec::new();
        for snap in &trace.snapshots {
            let own = snap
                .actions
                .action_of(i)
                .ok_or_else(|| Error::config(format!("round {} lacks agent {i}", snap.t)))?;
            let lookup = |j: usize| {
                snap.actions
                    .action_of(j)
                    .ok_or_else(|| Error::config(format!("round {} lacks agent {j}", snap.t)))
            };
            ctx.clear();
            for &j in &snap.neighborhoods[i] {
                ctx.push(lookup(j)?);
            }
            for (choice, total) in fixed.iter_mut().enumerate() {
                *total += marginal(&mut buf, &ctx, ActionId::new(i, choice));
            }
            let own_value = f.value(&[own]);
            let own_gain = marginal(&mut buf, &ctx, own);
            realized += own_gain;
            realized_info += own_value - own_gain;
            for (subset, total) in subsets.iter().zip(subset_info.iter_mut()) {
                ctx.clear();
                for &j in subset {
                    ctx.push(lookup(j)?);
                }
                *total += own_value - marginal(&mut buf, &ctx, own);
            }
        }
        let best_action = fixed.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let best_network = subset_info.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        out.push(AgentRegret {
            agent: i,
            rounds: trace.len(),
            action_regret: best_action - realized,
            network_regret: discount * best_network - realized_info,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::singleton_scale;
    use crate::objective::{CoverageObjective, CoverageWorld};

    fn world(positions: Vec<[f64; 2]>, directions: usize) -> CoverageObjective {
        CoverageObjective::new(CoverageWorld::new(40.0, 40.0, 1.0, positions, 7.0, directions).unwrap())
            .unwrap()
    }

    fn configs(f: &CoverageObjective, alpha: usize, full: bool) -> Vec<AgentConfig> {
        let n = f.agent_count();
        (0..n)
            .map(|i| AgentConfig {
                id: i,
                action_count: f.action_counts()[i],
                candidates: if full {
                    (0..n).filter(|&j| j != i).collect()
                } else {
                    vec![]
                },
                alpha,
                horizon: 1,
                reward_scale: singleton_scale(f, i),
            })
            .collect()
    }

    #[test]
    fn single_round_single_agent() {
        let f = world(vec![[20.0, 20.0]], 8);
        let clock = TimeModel::new(0.01, 0.05).unwrap();
        let trace = run(&configs(&f, 0, false), &f, clock, 1, 3).unwrap();
        assert_eq!(trace.len(), 1);
        let s = &trace.snapshots[0];
        assert!(s.neighborhoods[0].is_empty());
        assert_eq!(s.f_value, f.evaluate(&s.actions));
        assert_eq!(s.comm_messages, 0);
        assert_eq!(s.eval_counts, vec![9]);
        assert!((trace.sim_time[0] - (0.01 * 9.0 + 0.05)).abs() < 1e-12);
    }

    #[test]
    fn two_mutual_candidates_exchange_two_messages() {
        let f = world(vec![[15.0, 20.0], [22.0, 20.0]], 8);
        let clock = TimeModel::new(0.01, 0.01).unwrap();
        let trace = run(&configs(&f, 1, true), &f, clock, 25, 4).unwrap();
        for s in &trace.snapshots {
            assert_eq!(s.comm_messages, 2);
            assert_eq!(s.exchange_phases, 1);
            assert_eq!(s.neighborhoods, vec![vec![1], vec![0]]);
            for m in &s.ledger {
                assert_eq!(m.payload, s.actions.action_of(m.from).unwrap());
            }
        }
    }

    #[test]
    fn traces_are_deterministic_and_time_increases() {
        let f = world(vec![[10.0, 10.0], [16.0, 12.0], [25.0, 20.0], [12.0, 25.0]], 4);
        let clock = TimeModel::new(0.01, 0.05).unwrap();
        let a = run(&configs(&f, 2, true), &f, clock.clone(), 200, 99).unwrap();
        let b = run(&configs(&f, 2, true), &f, clock.clone(), 200, 99).unwrap();
        let c = run(&configs(&f, 2, true), &f, clock, 200, 100).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.snapshots, c.snapshots);
        assert!(a.sim_time.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(a.len(), 200);
    }

    #[test]
    fn rejects_inconsistent_setup() {
        let f = world(vec![[10.0, 10.0], [16.0, 12.0]], 4);
        let clock = TimeModel::new(0.01, 0.05).unwrap();
        let mut cfgs = configs(&f, 1, true);
        assert!(run(&cfgs, &f, clock.clone(), 0, 1).is_err());
        cfgs[1].action_count = 3;
        assert!(run(&cfgs, &f, clock.clone(), 5, 1).is_err());
        let mut cfgs = configs(&f, 1, true);
        cfgs[0].candidates = vec![7];
        assert!(run(&cfgs, &f, clock.clone(), 5, 1).is_err());
        assert!(run(&cfgs[..1], &f, clock, 5, 1).is_err());
    }

    #[test]
    fn single_arm_agents_have_no_action_regret() {
        let f = world(vec![[10.0, 10.0], [14.0, 12.0], [20.0, 20.0]], 1);
        let clock = TimeModel::new(0.01, 0.05).unwrap();
        let cfgs = configs(&f, 2, true);
        let trace = run(&cfgs, &f, clock, 50, 1).unwrap();
        for r in regret_diagnostics(&trace, &f, &cfgs).unwrap() {
            assert_eq!(r.action_regret, 0.0);
        }
    }

    #[test]
    fn zero_bandwidth_has_no_network_regret() {
        let f = world(vec![[10.0, 10.0], [14.0, 12.0], [20.0, 20.0]], 4);
        let clock = TimeModel::new(0.01, 0.05).unwrap();
        let cfgs = configs(&f, 0, true);
        let trace = run(&cfgs, &f, clock, 50, 1).unwrap();
        for r in regret_diagnostics(&trace, &f, &cfgs).unwrap() {
            assert_eq!(r.network_regret, 0.0);
            assert!(r.action_regret >= -1e-9);
        }
    }

    #[test]
    fn regret_rejects_large_candidate_sets() {
        let positions: Vec<[f64; 2]> = (0..17).map(|i| [20.0 + 0.1 * i as f64, 20.0]).collect();
        let f = world(positions, 1);
        let cfgs = configs(&f, 1, true);
        let trace = SimTrace::default();
        assert!(matches!(
            regret_diagnostics(&trace, &f, &cfgs),
            Err(Error::UnsupportedSize(_))
        ));
    }

    #[test]
    fn subsets_enumeration() {
        let s = subsets_up_to(&[1, 2, 3], 2);
        assert_eq!(s.len(), 1 + 3 + 3);
        assert!(s.iter().all(|x| x.len() <= 2));
    }
}
