//! Self-contained property suites with printable reports.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::agent::{singleton_scale, AgentConfig};
use crate::bandit::MwuLearner;
use crate::baseline::{build_graph, run_dfssg};
use crate::clock::{worst_case_time, TimeModel};
use crate::error::{Error, Result};
use crate::objective::{
    audit_mutual_information, audit_second_order, curvature, exhaustive_optimum, CoverageObjective,
    CoverageWorld, ModularObjective, SubmodularObjective,
};
use crate::orchestrator::{self, regret_diagnostics};
use crate::rng::derive_seed;

pub const SUITES: [&str; 6] = [
    "lemma1",
    "prop2",
    "prop3",
    "regret",
    "appendix2",
    "theorem1-small",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: String,
    pub passed: bool,
    pub lines: Vec<String>,
}

impl SuiteReport {
    fn new(suite: &str) -> Self {
        Self {
            suite: suite.into(),
            passed: true,
            lines: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, line: String) {
        self.passed &= ok;
        self.lines
            .push(format!("{} {line}", if ok { "PASS" } else { "FAIL" }));
    }
}

pub fn run_suite(name: &str, seed: u64) -> Result<SuiteReport> {
    match name {
        "lemma1" => lemma1(seed),
        "prop2" => prop2(seed),
        "prop3" => prop3(seed),
        "regret" => regret(seed),
        "appendix2" => appendix2(),
        "theorem1-small" => theorem1_small(seed),
        other => Err(Error::config(format!(
            "unknown suite `{other}` (expected one of {})",
            SUITES.join(", ")
        ))),
    }
}

/// Random world with `n` cameras packed into the middle of a `size`² map.
pub fn random_world(seed: u64, n: usize, size: f64, radius: f64, directions: usize) -> Result<CoverageWorld> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lo = size * 0.25;
    let hi = size * 0.75;
    let positions = (0..n)
        .map(|_| [rng.gen_range(lo..=hi), rng.gen_range(lo..=hi)])
        .collect();
    CoverageWorld::new(size, size, 1.0, positions, radius, directions)
}

fn fully_connected(f: &CoverageObjective, alpha: usize, horizon: usize) -> Vec<AgentConfig> {
    let n = f.agent_count();
    (0..n)
        .map(|i| AgentConfig {
            id: i,
            action_count: f.action_counts()[i],
            candidates: (0..n).filter(|&j| j != i).collect(),
            alpha,
            horizon,
            reward_scale: singleton_scale(f, i),
        })
        .collect()
}

/// Monotonicity and submodularity of the mutual information in the
/// neighbor set, plus the second-order audit of the coverage objective.
pub fn lemma1(seed: u64) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("lemma1");
    let (mut mono_v, mut sub_v, mut so_v) = (0, 0, 0);
    let (mut mono_m, mut sub_m, mut so_m) = (f64::INFINITY, f64::INFINITY, f64::INFINITY);
    let worlds = 10;
    let cases = 100;
    for w in 0..worlds {
        let s = derive_seed(seed, w);
        let f = CoverageObjective::new(random_world(s, 6, 40.0, 7.0, 8)?)?;
        let audit = audit_mutual_information(&f, cases, derive_seed(s, 1))?;
        mono_v += audit.monotonicity.violations;
        sub_v += audit.submodularity.violations;
        mono_m = mono_m.min(audit.monotonicity.worst_margin);
        sub_m = sub_m.min(audit.submodularity.worst_margin);
        let so = audit_second_order(&f, cases, derive_seed(s, 2));
        so_v += so.violations;
        so_m = so_m.min(so.worst_margin);
    }
    let total = worlds as usize * cases;
    report.check(
        mono_v == 0,
        format!("monotone in neighbors: {mono_v}/{total} violations, worst margin {mono_m:.3e}"),
    );
    report.check(
        sub_v == 0,
        format!("submodular in neighbors: {sub_v}/{total} violations, worst margin {sub_m:.3e}"),
    );
    report.check(
        so_v == 0,
        format!("second-order submodular: {so_v}/{total} violations, worst margin {so_m:.3e}"),
    );
    Ok(report)
}

/// Exactly `|V| + 2α + 1` evaluations per agent per round.
pub fn prop2(seed: u64) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("prop2");
    let f = CoverageObjective::new(random_world(seed, 10, 60.0, 7.0, 8)?)?;
    let rounds = 200;
    let configs = fully_connected(&f, 3, rounds);
    let clock = TimeModel::new(0.01, 0.05)?;
    let trace = orchestrator::run(&configs, &f, clock, rounds, seed)?;
    let bad = trace
        .snapshots
        .iter()
        .flat_map(|s| s.eval_counts.iter())
        .filter(|&&c| c != 15)
        .count();
    let (lo, hi) = trace
        .snapshots
        .iter()
        .flat_map(|s| s.eval_counts.iter().copied())
        .fold((u64::MAX, 0), |(lo, hi), c| (lo.min(c), hi.max(c)));
    report.check(
        bad == 0,
        format!("10 agents x {rounds} rounds, |V|=8, alpha=3: evaluations per agent-round in [{lo}, {hi}], expected 15"),
    );
    Ok(report)
}

/// One exchange phase per round in which each message carries the
/// sender's own action of that round.
pub fn prop3(seed: u64) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("prop3");
    let f = CoverageObjective::new(random_world(seed, 8, 60.0, 7.0, 8)?)?;
    let rounds = 200;
    let configs = fully_connected(&f, 2, rounds);
    let trace = orchestrator::run(&configs, &f, TimeModel::new(0.01, 0.05)?, rounds, seed)?;
    let phases_ok = trace.snapshots.iter().all(|s| s.exchange_phases == 1);
    let payload_ok = trace.snapshots.iter().all(|s| {
        s.ledger
            .iter()
            .all(|m| Some(m.payload) == s.actions.action_of(m.from) && m.payload.agent == m.from)
    });
    let count_ok = trace
        .snapshots
        .iter()
        .all(|s| s.comm_messages == s.ledger.len() && s.ledger.len() == 2 * configs.len());
    report.check(
        phases_ok,
        format!("{rounds} rounds with exactly one exchange phase each"),
    );
    report.check(
        payload_ok,
        "every message carries one action: the sender's own".into(),
    );
    report.check(
        count_ok,
        "messages per round equal the total number of neighbor draws".into(),
    );
    Ok(report)
}

/// Realized regret of the action learner against fixed random reward
/// matrices. Returns one regret per run.
pub fn mwu_regrets(seed: u64, runs: usize, arms: usize, horizon: usize) -> Result<Vec<f64>> {
    (0..runs)
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, r as u64));
            // Arm-specific means keep the best arm well separated.
            let means: Vec<f64> = (0..arms).map(|_| rng.gen_range(0.2..0.8)).collect();
            let rewards: Vec<Vec<f64>> = (0..horizon)
                .map(|_| {
                    means
                        .iter()
                        .map(|&m| (m + rng.gen_range(-0.2..0.2)).clamp(0.0, 1.0))
                        .collect()
                })
                .collect();
            let mut learner = MwuLearner::new(arms, horizon)?;
            let mut play_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 1000 + r as u64));
            let mut realized = 0.0;
            let mut totals = vec![0.0; arms];
            for row in &rewards {
                let arm = learner.sample(&mut play_rng);
                realized += row[arm];
                for (t, v) in totals.iter_mut().zip(row) {
                    *t += v;
                }
                learner.update(row)?;
            }
            Ok(totals.iter().copied().fold(f64::NEG_INFINITY, f64::max) - realized)
        })
        .collect()
}

/// Mean and sample standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 {
        xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var.sqrt())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegretTrend {
    pub horizons: Vec<usize>,
    /// Per horizon: (mean, std) across seeds of the agent-averaged A-Reg_T / T.
    pub action: Vec<(f64, f64)>,
    /// Per horizon: (mean, std) across seeds of the agent-averaged N-Reg_T / T.
    pub network: Vec<(f64, f64)>,
}

impl RegretTrend {
    pub fn action_strictly_decreasing(&self) -> bool {
        self.action.windows(2).all(|w| w[1].0 < w[0].0)
    }

    pub fn network_non_increasing_within_std(&self) -> bool {
        self.network.windows(2).all(|w| w[1].0 <= w[0].0 + w[0].1)
    }
}

/// 4 overlapping cameras with 4 headings; every agent may listen to one
/// of the other three.
pub fn regret_toy() -> Result<CoverageObjective> {
    CoverageObjective::new(CoverageWorld::new(
        40.0,
        40.0,
        1.0,
        vec![[16.0, 16.0], [24.0, 16.0], [16.0, 24.0], [24.0, 24.0]],
        7.0,
        4,
    )?)
}

pub fn regret_trend(seed: u64, horizons: &[usize], seeds: usize) -> Result<RegretTrend> {
    let f = regret_toy()?;
    let mut trend = RegretTrend {
        horizons: horizons.to_vec(),
        action: Vec::new(),
        network: Vec::new(),
    };
    for &t in horizons {
        let mut a = Vec::with_capacity(seeds);
        let mut n = Vec::with_capacity(seeds);
        for s in 0..seeds {
            let configs = fully_connected(&f, 1, t);
            let trace = orchestrator::run(
                &configs,
                &f,
                TimeModel::new(0.01, 0.01)?,
                t,
                derive_seed(seed, s as u64),
            )?;
            let regrets = regret_diagnostics(&trace, &f, &configs)?;
            let k = regrets.len() as f64;
            a.push(regrets.iter().map(|r| r.action_regret).sum::<f64>() / k / t as f64);
            n.push(regrets.iter().map(|r| r.network_regret).sum::<f64>() / k / t as f64);
        }
        trend.action.push(mean_std(&a));
        trend.network.push(mean_std(&n));
    }
    Ok(trend)
}

pub const MWU_BOUND_ARMS: usize = 8;
pub const MWU_BOUND_HORIZON: usize = 10_000;

pub fn mwu_regret_bound(arms: usize, horizon: usize) -> f64 {
    (horizon as f64 * (arms as f64).ln() / 2.0).sqrt()
}

pub fn regret(seed: u64) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("regret");
    let bound = mwu_regret_bound(MWU_BOUND_ARMS, MWU_BOUND_HORIZON);
    let regrets = mwu_regrets(seed, 5, MWU_BOUND_ARMS, MWU_BOUND_HORIZON)?;
    let worst = regrets.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    report.check(
        worst <= bound,
        format!("action learner regret over 5 reward matrices: max {worst:.2} <= bound {bound:.2}"),
    );
    let trend = regret_trend(seed, &[500, 2000, 8000], 8)?;
    let fmt = |v: &[(f64, f64)]| {
        v.iter()
            .map(|(m, s)| format!("{m:.4}±{s:.4}"))
            .collect::<Vec<_>>()
            .join(" -> ")
    };
    report.check(
        trend.action_strictly_decreasing(),
        format!("A-Reg/T at T={:?}: {}", trend.horizons, fmt(&trend.action)),
    );
    report.check(
        trend.network_non_increasing_within_std(),
        format!("N-Reg/T at T={:?}: {}", trend.horizons, fmt(&trend.network)),
    );
    Ok(report)
}

/// Communication time of sequential greedy on a path of `n` unit-action
/// agents, in units of `tau_c`.
pub fn path_comm_units(n: usize) -> Result<u64> {
    let positions: Vec<[f64; 2]> = (0..n).map(|i| [10.0 * i as f64, 0.0]).collect();
    let graph = build_graph(&positions, &vec![12.0; n])?;
    let f = ModularObjective::new(vec![vec![1.0]; n])?;
    let trace = run_dfssg(&graph, &f, &TimeModel::new(1.0, 1.0)?)?;
    Ok(trace.snapshots.iter().map(|s| s.comm_messages as u64).sum())
}

pub fn appendix2() -> Result<SuiteReport> {
    let mut report = SuiteReport::new("appendix2");
    for n in [4usize, 60] {
        let units = path_comm_units(n)?;
        let expected = worst_case_time(n, 1.0);
        report.check(
            units as f64 == expected,
            format!("path of {n}: {units} tau_c charged, closed form {expected}"),
        );
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BandCase {
    pub instance: usize,
    pub kappa: f64,
    pub optimum: f64,
    pub centralized_avg: f64,
    pub centralized_floor: f64,
    pub decentralized_avg: f64,
    pub decentralized_floor: f64,
}

impl BandCase {
    pub fn passed(&self) -> bool {
        self.centralized_avg >= self.centralized_floor && self.decentralized_avg >= self.decentralized_floor
    }
}

fn tail_average(values: &[f64]) -> f64 {
    let tail = &values[values.len() / 2..];
    tail.iter().sum::<f64>() / tail.len() as f64
}

/// Seeded 4-agent, 3-heading instances run fully connected (`α = 3`) and
/// fully disconnected (`α = 0`) against brute-force optimum and curvature.
pub fn theorem1_cases(seed: u64, instances: usize, horizon: usize) -> Result<Vec<BandCase>> {
    (0..instances)
        .map(|k| {
            let s = derive_seed(seed, k as u64);
            let f = CoverageObjective::new(random_world(s, 4, 120.0, 7.0, 3)?)?;
            let (_, optimum) = exhaustive_optimum(&f, 81)?;
            let kappa = curvature(&f, &f.ground())?;
            let clock = TimeModel::new(0.01, 0.01)?;
            let avg = |alpha: usize| -> Result<f64> {
                let configs = fully_connected(&f, alpha, horizon);
                let trace = orchestrator::run(&configs, &f, clock.clone(), horizon, derive_seed(s, 7))?;
                let values: Vec<f64> = trace.snapshots.iter().map(|s| s.f_value).collect();
                Ok(tail_average(&values))
            };
            Ok(BandCase {
                instance: k,
                kappa: kappa.kappa,
                optimum,
                centralized_avg: avg(3)?,
                centralized_floor: (kappa.centralized_factor() - 0.05) * optimum,
                decentralized_avg: avg(0)?,
                decentralized_floor: (kappa.decentralized_factor() - 0.05) * optimum,
            })
        })
        .collect()
}

pub fn theorem1_small(seed: u64) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("theorem1-small");
    for c in theorem1_cases(seed, 10, 10_000)? {
        report.check(
            c.passed(),
            format!(
                "instance {}: kappa {:.3}, opt {}, centralized {:.1} >= {:.1}, decentralized {:.1} >= {:.1}",
                c.instance,
                c.kappa,
                c.optimum,
                c.centralized_avg,
                c.centralized_floor,
                c.decentralized_avg,
                c.decentralized_floor
            ),
        );
    }
    Ok(report)
}
