//! Depth-first sequential greedy (DFS-SG) over a directed communication graph.
//!
//! Agents commit one at a time in DFS order. Each agent receives every action
//! committed so far in its component, picks the action with the largest
//! marginal gain, and forwards the grown set to the next agent in the order
//! along a shortest path.

use std::collections::VecDeque;

use crate::clock::TimeModel;
use crate::error::{Error, Result};
use crate::objective::{ActionId, JointActionSet, SubmodularObjective};
use crate::orchestrator::{Message, RoundSnapshot, SimTrace};

/// Edge `j → i` means `i` can receive from `j`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DirectedCommGraph {
    in_adj: Vec<Vec<usize>>,
    out_adj: Vec<Vec<usize>>,
}

impl DirectedCommGraph {
    /// Builds a graph from `(from, to)` pairs. Self-loops are rejected and
    /// repeated edges collapse.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut in_adj = vec![Vec::new(); n];
        let mut out_adj = vec![Vec::new(); n];
        for (from, to) in edges {
            for v in [from, to] {
                if v >= n {
                    return Err(Error::AgentOutOfRange { agent: v, count: n });
                }
            }
            if from == to {
                return Err(Error::config(format!("self-loop on agent {from}")));
            }
            in_adj[to].push(from);
            out_adj[from].push(to);
        }
        for adj in in_adj.iter_mut().chain(out_adj.iter_mut()) {
            adj.sort_unstable();
            adj.dedup();
        }
        Ok(Self { in_adj, out_adj })
    }

    pub fn n(&self) -> usize {
        self.in_adj.len()
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.in_adj
            .get(to)
            .is_some_and(|adj| adj.binary_search(&from).is_ok())
    }

    pub fn edge_count(&self) -> usize {
        self.in_adj.iter().map(Vec::len).sum()
    }

    /// All `(from, to)` pairs, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out: Vec<_> = self
            .out_adj
            .iter()
            .enumerate()
            .flat_map(|(from, adj)| adj.iter().map(move |&to| (from, to)))
            .collect();
        out.sort_unstable();
        out
    }

    /// Agents `i` can receive from, ascending.
    pub fn candidates(&self, i: usize) -> &[usize] {
        &self.in_adj[i]
    }

    /// Agents that can receive from `j`, ascending.
    pub fn receivers(&self, j: usize) -> &[usize] {
        &self.out_adj[j]
    }

    fn undirected_neighbors(&self, v: usize) -> Vec<usize> {
        let mut adj: Vec<usize> = self.in_adj[v].iter().chain(&self.out_adj[v]).copied().collect();
        adj.sort_unstable();
        adj.dedup();
        adj
    }

    fn bfs(&self, from: usize, to: usize, directed: bool) -> Option<usize> {
        let mut dist = vec![usize::MAX; self.n()];
        dist[from] = 0;
        let mut queue = VecDeque::from([from]);
        while let Some(v) = queue.pop_front() {
            if v == to {
                return Some(dist[v]);
            }
            let next = if directed {
                self.out_adj[v].clone()
            } else {
                self.undirected_neighbors(v)
            };
            for w in next {
                if dist[w] == usize::MAX {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
            }
        }
        None
    }

    /// Hops along directed edges from `from` to `to`.
    pub fn directed_hops(&self, from: usize, to: usize) -> Option<usize> {
        self.bfs(from, to, true)
    }

    /// Hops ignoring edge direction.
    pub fn undirected_hops(&self, from: usize, to: usize) -> Option<usize> {
        self.bfs(from, to, false)
    }

    /// Weakly connected components, each sorted, ordered by lowest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.n()];
        let mut out = Vec::new();
        for root in 0..self.n() {
            if seen[root] {
                continue;
            }
            seen[root] = true;
            let mut comp = vec![root];
            let mut stack = vec![root];
            while let Some(v) = stack.pop() {
                for w in self.undirected_neighbors(v) {
                    if !seen[w] {
                        seen[w] = true;
                        comp.push(w);
                        stack.push(w);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }
}

/// Edge `j → i` iff `‖x_j − x_i‖ ≤ c_i` and `j ≠ i`.
pub fn build_graph(positions: &[[f64; 2]], ranges: &[f64]) -> Result<DirectedCommGraph> {
    if positions.len() != ranges.len() {
        return Err(Error::config(format!(
            "{} positions but {} ranges",
            positions.len(),
            ranges.len()
        )));
    }
    let n = positions.len();
    let mut edges = Vec::new();
    for (i, (xi, &ci)) in positions.iter().zip(ranges).enumerate() {
        for (j, xj) in positions.iter().enumerate() {
            if j != i && (xj[0] - xi[0]).hypot(xj[1] - xi[1]) <= ci {
                edges.push((j, i));
            }
        }
    }
    DirectedCommGraph::from_edges(n, edges)
}

/// DFS visitation order of one component and the transfer route lengths.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DfsPlan {
    pub order: Vec<usize>,
    /// `hop_distances[k]` is the hop count from `order[k]` to `order[k+1]`.
    pub hop_distances: Vec<usize>,
    /// Whether transfer `k` had no directed route and used undirected hops.
    pub fallback: Vec<bool>,
}

/// One plan per weakly connected component. The DFS starts from the
/// component's lowest index and explores neighbors in ascending order.
pub fn plan(graph: &DirectedCommGraph) -> Vec<DfsPlan> {
    let mut visited = vec![false; graph.n()];
    graph
        .components()
        .into_iter()
        .map(|comp| {
            let root = comp[0];
            let mut order = vec![root];
            visited[root] = true;
            let mut stack = vec![(root, graph.undirected_neighbors(root), 0usize)];
            while let Some((_, adj, next)) = stack.last_mut() {
                if let Some(&w) = adj.get(*next) {
                    *next += 1;
                    if !visited[w] {
                        visited[w] = true;
                        order.push(w);
                        stack.push((w, graph.undirected_neighbors(w), 0));
                    }
                } else {
                    stack.pop();
                }
            }
            let mut hop_distances = Vec::with_capacity(order.len().saturating_sub(1));
            let mut fallback = Vec::with_capacity(order.len().saturating_sub(1));
            for w in order.windows(2) {
                match graph.directed_hops(w[0], w[1]) {
                    Some(h) => {
                        hop_distances.push(h);
                        fallback.push(false);
                    }
                    None => {
                        let h = graph
                            .undirected_hops(w[0], w[1])
                            .expect("consecutive DFS agents share a component");
                        hop_distances.push(h);
                        fallback.push(true);
                    }
                }
            }
            DfsPlan {
                order,
                hop_distances,
                fallback,
            }
        })
        .collect()
}

struct Commit {
    seconds: f64,
    component: usize,
    action: ActionId,
    conditioned_on: Vec<usize>,
    from: Option<usize>,
    carried: Vec<ActionId>,
    transmissions: u64,
    evals: u64,
}

/// Runs sequential greedy along the DFS plan. Components run concurrently
/// on separate timelines; the trace interleaves their commitments by time
/// and records the value of everything committed so far.
pub fn run_dfssg<F: SubmodularObjective + ?Sized>(
    graph: &DirectedCommGraph,
    objective: &F,
    clock: &TimeModel,
) -> Result<SimTrace> {
    let counts = objective.action_counts();
    if graph.n() != counts.len() {
        return Err(Error::config(format!(
            "graph has {} agents, objective has {}",
            graph.n(),
            counts.len()
        )));
    }
    let plans = plan(graph);
    let mut commits = Vec::with_capacity(graph.n());
    let mut fallback_transfers = 0;
    let mut buf = Vec::new();
    for (c, p) in plans.iter().enumerate() {
        let mut tm = clock.restarted();
        let mut committed: Vec<ActionId> = Vec::with_capacity(p.order.len());
        for (k, &agent) in p.order.iter().enumerate() {
            let mut transmissions = 0;
            if k > 0 {
                let hops = p.hop_distances[k - 1] as u64;
                transmissions = committed.len() as u64 * hops;
                tm.charge_dfssg_step(0, committed.len() as u64, hops);
                fallback_transfers += usize::from(p.fallback[k - 1]);
            }
            let mut best = 0;
            let mut best_value = f64::NEG_INFINITY;
            for choice in 0..counts[agent] {
                buf.clear();
                buf.extend_from_slice(&committed);
                buf.push(ActionId::new(agent, choice));
                let v = objective.value(&buf);
                if v > best_value {
                    best = choice;
                    best_value = v;
                }
            }
            tm.charge_dfssg_step(counts[agent] as u64, 0, 0);
            let action = ActionId::new(agent, best);
            commits.push(Commit {
                seconds: tm.elapsed(),
                component: c,
                action,
                conditioned_on: committed.iter().map(|a| a.agent).collect(),
                from: (k > 0).then(|| p.order[k - 1]),
                carried: committed.clone(),
                transmissions,
                evals: counts[agent] as u64,
            });
            committed.push(action);
        }
    }
    // Stable: ties keep component order, and each component is already in
    // commit order.
    commits.sort_by(|a, b| {
        a.seconds
            .total_cmp(&b.seconds)
            .then(a.component.cmp(&b.component))
    });

    let n = graph.n();
    let mut trace = SimTrace {
        components: plans.len(),
        fallback_transfers,
        ..SimTrace::default()
    };
    let mut actions = JointActionSet::new();
    let mut neighborhoods = vec![Vec::new(); n];
    for (t, c) in commits.into_iter().enumerate() {
        actions.insert(c.action)?;
        let agent = c.action.agent;
        let mut conditioned = c.conditioned_on;
        conditioned.sort_unstable();
        neighborhoods[agent] = conditioned;
        let mut eval_counts = vec![0; n];
        eval_counts[agent] = c.evals;
        let ledger: Vec<Message> = c
            .from
            .map(|from| {
                c.carried
                    .iter()
                    .map(|&payload| Message {
                        from,
                        to: agent,
                        payload,
                    })
                    .collect()
            })
            .unwrap_or_default();
        let snapshot = RoundSnapshot {
            t: t + 1,
            sim_seconds: c.seconds,
            f_value: objective.evaluate(&actions),
            actions: actions.clone(),
            neighborhoods: neighborhoods.clone(),
            comm_messages: c.transmissions as usize,
            exchange_phases: usize::from(c.from.is_some()),
            ledger,
            eval_counts,
        };
        trace.sim_time.push(snapshot.sim_seconds);
        trace.snapshots.push(snapshot);
    }
    Ok(trace)
}
