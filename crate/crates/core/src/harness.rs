//! Monte-Carlo area-coverage experiments.
//!
//! Each trial samples one world (camera positions and communication ranges)
//! and runs every algorithm variant on it. Coverage traces are resampled onto
//! a uniform time grid by carrying the last observation forward, then
//! averaged across trials.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::agent::{singleton_scale, AgentConfig};
use crate::baseline::{build_graph, run_dfssg, DirectedCommGraph};
use crate::clock::TimeModel;
use crate::error::{Error, Result};
use crate::objective::{CoverageObjective, CoverageWorld, SubmodularObjective};
use crate::orchestrator::{self, SimTrace};
use crate::rng::{self, derive_seed, Role};
use crate::trace_io::{round_sig9, rows_from_trace, TraceRow};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapConfig {
    pub width: f64,
    pub height: f64,
    pub cell_size: f64,
}

fn default_time_budget() -> f64 {
    100.0
}

fn default_grid_step() -> f64 {
    0.1
}

fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub map: MapConfig,
    pub agent_count: usize,
    pub fov_radius: f64,
    pub directions: usize,
    pub range_low: f64,
    pub range_high: f64,
    pub trials: usize,
    /// Rounds per run. When absent, derived from `time_budget` and the
    /// per-round charge of each variant.
    #[serde(default)]
    pub horizon: Option<usize>,
    #[serde(default = "default_time_budget")]
    pub time_budget: f64,
    #[serde(default = "default_grid_step")]
    pub grid_step: f64,
    pub nmax_sweep: Vec<usize>,
    pub tau_pairs: Vec<[f64; 2]>,
    pub master_seed: u64,
    #[serde(default = "default_true")]
    pub include_dfssg: bool,
}

impl ExperimentConfig {
    /// 60 cameras on a 100×100 map, 30 trials, the three timing pairs.
    pub fn paper_default() -> Self {
        Self {
            map: MapConfig {
                width: 100.0,
                height: 100.0,
                cell_size: 1.0,
            },
            agent_count: 60,
            fov_radius: 7.0,
            directions: 8,
            range_low: 15.0,
            range_high: 20.0,
            trials: 30,
            horizon: None,
            time_budget: 100.0,
            grid_step: 0.1,
            nmax_sweep: vec![0, 1, 3, 5],
            tau_pairs: vec![[0.01, 0.05], [0.01, 0.01], [0.05, 0.01]],
            master_seed: 2024,
            include_dfssg: true,
        }
    }

    /// Parses JSON and validates. Unknown keys are rejected.
    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let field = |name: &str, msg: String| Err(Error::config(format!("field `{name}`: {msg}")));
        let positive = |x: f64| x > 0.0 && x.is_finite();
        if self.agent_count == 0 {
            return field("agent_count", "must be at least 1".into());
        }
        if self.trials == 0 {
            return field("trials", "must be at least 1".into());
        }
        if !(self.range_low >= 0.0 && self.range_low.is_finite()) {
            return field(
                "range_low",
                format!("must be non-negative, got {}", self.range_low),
            );
        }
        if !(self.range_high >= self.range_low && self.range_high.is_finite()) {
            return field(
                "range_high",
                format!(
                    "must be at least range_low ({}), got {}",
                    self.range_low, self.range_high
                ),
            );
        }
        if self.horizon == Some(0) {
            return field("horizon", "must be at least 1".into());
        }
        if !positive(self.time_budget) {
            return field(
                "time_budget",
                format!("must be positive, got {}", self.time_budget),
            );
        }
        if !positive(self.grid_step) {
            return field("grid_step", format!("must be positive, got {}", self.grid_step));
        }
        if self.nmax_sweep.is_empty() {
            return field("nmax_sweep", "must list at least one value".into());
        }
        if self.tau_pairs.is_empty() {
            return field("tau_pairs", "must list at least one pair".into());
        }
        for (k, &[tf, tc]) in self.tau_pairs.iter().enumerate() {
            if !positive(tf) || !positive(tc) {
                return field(
                    "tau_pairs",
                    format!("entry {k} must be positive, got [{tf}, {tc}]"),
                );
            }
        }
        CoverageWorld::new(
            self.map.width,
            self.map.height,
            self.map.cell_size,
            Vec::new(),
            self.fov_radius,
            self.directions,
        )
        .map_err(|e| Error::config(format!("map: {e}")))?;
        Ok(())
    }
}

/// One trial's world: camera placement plus communication ranges.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledWorld {
    pub world: CoverageWorld,
    pub ranges: Vec<f64>,
}

pub fn trial_seed(master_seed: u64, trial: usize) -> u64 {
    derive_seed(master_seed, trial as u64)
}

/// Positions uniform on the map, ranges uniform on `[range_low, range_high]`.
pub fn sample_world(config: &ExperimentConfig, trial_seed: u64) -> Result<SampledWorld> {
    let mut pos_rng = rng::stream(trial_seed, 0, Role::World, 0);
    let mut range_rng = rng::stream(trial_seed, 0, Role::World, 1);
    let positions = (0..config.agent_count)
        .map(|_| {
            [
                pos_rng.gen_range(0.0..=config.map.width),
                pos_rng.gen_range(0.0..=config.map.height),
            ]
        })
        .collect();
    let ranges = (0..config.agent_count)
        .map(|_| range_rng.gen_range(config.range_low..=config.range_high))
        .collect();
    let world = CoverageWorld::new(
        config.map.width,
        config.map.height,
        config.map.cell_size,
        positions,
        config.fov_radius,
        config.directions,
    )?;
    Ok(SampledWorld { world, ranges })
}

/// Agent configurations with `M_i` from the graph and `α_i = min(nmax, |M_i|)`.
pub fn anaconda_configs<F: SubmodularObjective + ?Sized>(
    objective: &F,
    graph: &DirectedCommGraph,
    nmax: usize,
    horizon: usize,
) -> Vec<AgentConfig> {
    (0..objective.agent_count())
        .map(|i| {
            let candidates = graph.candidates(i).to_vec();
            AgentConfig {
                id: i,
                action_count: objective.action_counts()[i],
                alpha: nmax.min(candidates.len()),
                candidates,
                horizon,
                reward_scale: singleton_scale(objective, i),
            }
        })
        .collect()
}

/// Rounds that fit in `budget` seconds when every round costs
/// `tau_f·max_evals + tau_c`; at least 1.
pub fn derived_horizon(budget: f64, tau_f: f64, tau_c: f64, max_evals: u64) -> usize {
    let per_round = tau_f * max_evals as f64 + tau_c;
    ((budget / per_round).ceil() as usize).max(1)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Anaconda,
    Dfssg,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariantKey {
    pub algorithm: Algorithm,
    /// Bandwidth cap; `None` for the baseline.
    pub nmax: Option<usize>,
    pub tau_f: f64,
    pub tau_c: f64,
}

impl VariantKey {
    /// File-name friendly label, e.g. `anaconda_nmax3_tf0.01_tc0.05`.
    pub fn label(&self) -> String {
        let timing = format!("tf{}_tc{}", self.tau_f, self.tau_c);
        match (self.algorithm, self.nmax) {
            (Algorithm::Anaconda, Some(n)) => format!("anaconda_nmax{n}_{timing}"),
            (Algorithm::Anaconda, None) => format!("anaconda_{timing}"),
            (Algorithm::Dfssg, _) => format!("dfssg_{timing}"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AggregateCurve {
    pub time_grid: Vec<f64>,
    pub mean_coverage: Vec<f64>,
    pub std_coverage: Vec<f64>,
}

impl AggregateCurve {
    pub fn len(&self) -> usize {
        self.time_grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.time_grid.is_empty()
    }

    pub fn final_mean(&self) -> f64 {
        self.mean_coverage.last().copied().unwrap_or(0.0)
    }

    /// Mean coverage at the last grid point not after `t`.
    pub fn mean_at(&self, t: f64) -> f64 {
        let k = self.time_grid.partition_point(|&g| g <= t + 1e-9);
        if k == 0 {
            0.0
        } else {
            self.mean_coverage[k - 1]
        }
    }

    /// First grid time at which the mean is within `margin` of its final value.
    pub fn settling_time(&self, margin: f64) -> Option<f64> {
        let target = self.final_mean() - margin;
        self.time_grid
            .iter()
            .zip(&self.mean_coverage)
            .find(|(_, &m)| m >= target)
            .map(|(&t, _)| t)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialTrace {
    pub trial: usize,
    pub horizon: usize,
    pub rows: Vec<TraceRow>,
    pub components: usize,
    pub fallback_transfers: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariantResult {
    pub key: VariantKey,
    pub curve: AggregateCurve,
    pub trials: Vec<TrialTrace>,
    /// Mean coverage fraction after the first round or commitment.
    pub first_coverage: f64,
    /// Mean coverage fraction at the end of each trace.
    pub final_coverage: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub variants: Vec<VariantResult>,
    /// Trials whose communication graph had more than one component.
    pub disconnected_trials: usize,
}

impl SweepResult {
    pub fn find(&self, algorithm: Algorithm, nmax: Option<usize>, tau: [f64; 2]) -> Option<&VariantResult> {
        self.variants.iter().find(|v| {
            v.key.algorithm == algorithm
                && v.key.nmax == nmax
                && v.key.tau_f == tau[0]
                && v.key.tau_c == tau[1]
        })
    }
}

fn variant_keys(config: &ExperimentConfig) -> Vec<VariantKey> {
    let mut keys = Vec::new();
    for &[tau_f, tau_c] in &config.tau_pairs {
        for &nmax in &config.nmax_sweep {
            keys.push(VariantKey {
                algorithm: Algorithm::Anaconda,
                nmax: Some(nmax),
                tau_f,
                tau_c,
            });
        }
        if config.include_dfssg {
            keys.push(VariantKey {
                algorithm: Algorithm::Dfssg,
                nmax: None,
                tau_f,
                tau_c,
            });
        }
    }
    keys
}

struct TrialOutput {
    traces: Vec<TrialTrace>,
    disconnected: bool,
}

fn run_trial(config: &ExperimentConfig, keys: &[VariantKey], trial: usize) -> Result<TrialOutput> {
    let seed = trial_seed(config.master_seed, trial);
    let sampled = sample_world(config, seed)?;
    let graph = build_graph(&sampled.world.camera_positions, &sampled.ranges)?;
    let objective = CoverageObjective::new(sampled.world)?;
    let area = objective.total_area();
    let mut traces = Vec::with_capacity(keys.len());
    for key in keys {
        let clock = TimeModel::new(key.tau_f, key.tau_c)?;
        let (trace, horizon): (SimTrace, usize) = match key.algorithm {
            Algorithm::Anaconda => {
                let nmax = key.nmax.unwrap_or(0);
                let probe = anaconda_configs(&objective, &graph, nmax, 1);
                let max_evals = probe
                    .iter()
                    .map(|c| (c.action_count + 2 * c.alpha + 1) as u64)
                    .max()
                    .unwrap_or(1);
                let horizon = config
                    .horizon
                    .unwrap_or_else(|| derived_horizon(config.time_budget, key.tau_f, key.tau_c, max_evals));
                let run_seed = derive_seed(
                    derive_seed(seed, nmax as u64 + 1),
                    key.tau_f.to_bits() ^ key.tau_c.to_bits().rotate_left(32),
                );
                let trace = orchestrator::run(&probe, &objective, clock, horizon, run_seed)?;
                (trace, horizon)
            }
            Algorithm::Dfssg => {
                let trace = run_dfssg(&graph, &objective, &clock)?;
                let n = trace.len();
                (trace, n)
            }
        };
        traces.push(TrialTrace {
            trial,
            horizon,
            rows: rows_from_trace(&trace, area),
            components: trace.components,
            fallback_transfers: trace.fallback_transfers,
        });
    }
    Ok(TrialOutput {
        traces,
        disconnected: graph.components().len() > 1,
    })
}

/// Step-function value of `rows` at time `t`: the last row not after `t`,
/// or 0 before the first row.
fn locf(rows: &[TraceRow], t: f64) -> f64 {
    let k = rows.partition_point(|r| r.sim_seconds <= t + 1e-9);
    if k == 0 {
        0.0
    } else {
        rows[k - 1].coverage_fraction
    }
}

/// Mean and sample standard deviation across trials on a grid
/// `0, step, 2·step, …` that reaches `end`.
pub fn aggregate(traces: &[&[TraceRow]], step: f64, end: f64) -> AggregateCurve {
    let points = (end / step - 1e-9).ceil().max(0.0) as usize + 1;
    let mut curve = AggregateCurve::default();
    let n = traces.len() as f64;
    for k in 0..points {
        let t = round_sig9(k as f64 * step);
        let values: Vec<f64> = traces.iter().map(|rows| locf(rows, t)).collect();
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        curve.time_grid.push(t);
        curve.mean_coverage.push(mean);
        curve.std_coverage.push(std);
    }
    curve
}

/// Runs every variant on every trial (trials in parallel) and aggregates.
/// All variants sharing a timing pair are resampled onto the same grid,
/// which ends at the latest event among them.
pub fn run_sweep(config: &ExperimentConfig) -> Result<SweepResult> {
    config.validate()?;
    let keys = variant_keys(config);
    let outputs = (0..config.trials)
        .into_par_iter()
        .map(|trial| run_trial(config, &keys, trial))
        .collect::<Result<Vec<_>>>()?;

    let disconnected_trials = outputs.iter().filter(|o| o.disconnected).count();
    let mut per_variant: Vec<Vec<TrialTrace>> = vec![Vec::with_capacity(config.trials); keys.len()];
    for out in outputs {
        for (slot, trace) in per_variant.iter_mut().zip(out.traces) {
            slot.push(trace);
        }
    }

    let end_time = |tau: (f64, f64)| {
        keys.iter()
            .zip(&per_variant)
            .filter(|(k, _)| (k.tau_f, k.tau_c) == tau)
            .flat_map(|(_, ts)| ts.iter().filter_map(|t| t.rows.last().map(|r| r.sim_seconds)))
            .fold(0.0, f64::max)
    };
    let ends: Vec<f64> = keys.iter().map(|k| end_time((k.tau_f, k.tau_c))).collect();
    let variants = keys
        .into_iter()
        .zip(per_variant)
        .zip(ends)
        .map(|((key, trials), end)| {
            let rows: Vec<&[TraceRow]> = trials.iter().map(|t| t.rows.as_slice()).collect();
            let curve = aggregate(&rows, config.grid_step, end);
            let mean_of = |pick: fn(&[TraceRow]) -> Option<&TraceRow>| {
                rows.iter()
                    .map(|r| pick(r).map_or(0.0, |row| row.coverage_fraction))
                    .sum::<f64>()
                    / rows.len() as f64
            };
            VariantResult {
                first_coverage: mean_of(<[TraceRow]>::first),
                final_coverage: mean_of(<[TraceRow]>::last),
                key,
                curve,
                trials,
            }
        })
        .collect();
    Ok(SweepResult {
        variants,
        disconnected_trials,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> ExperimentConfig {
        ExperimentConfig {
            map: MapConfig {
                width: 40.0,
                height: 40.0,
                cell_size: 1.0,
            },
            agent_count: 4,
            fov_radius: 6.0,
            directions: 4,
            range_low: 15.0,
            range_high: 20.0,
            trials: 2,
            horizon: Some(100),
            time_budget: 100.0,
            grid_step: 0.1,
            nmax_sweep: vec![0, 2],
            tau_pairs: vec![[0.01, 0.05]],
            master_seed: 5,
            include_dfssg: true,
        }
    }

    #[test]
    fn config_parsing_rejects_unknown_and_invalid_fields() {
        let mut v = serde_json::to_value(tiny()).unwrap();
        let ok = ExperimentConfig::from_json(&v.to_string()).unwrap();
        assert_eq!(ok, tiny());
        v["colour"] = serde_json::json!(1);
        let err = ExperimentConfig::from_json(&v.to_string())
            .unwrap_err()
            .to_string();
        assert!(err.contains("colour"), "{err}");

        let mut bad = tiny();
        bad.range_low = 30.0;
        assert!(bad.validate().unwrap_err().to_string().contains("range_high"));
        let mut bad = tiny();
        bad.trials = 0;
        assert!(bad.validate().unwrap_err().to_string().contains("trials"));
        assert!(ExperimentConfig::paper_default().validate().is_ok());
    }

    #[test]
    fn defaults_fill_optional_fields() {
        let mut v = serde_json::to_value(tiny()).unwrap();
        let obj = v.as_object_mut().unwrap();
        for key in ["horizon", "time_budget", "grid_step", "include_dfssg"] {
            obj.remove(key);
        }
        let c = ExperimentConfig::from_json(&v.to_string()).unwrap();
        assert_eq!(c.horizon, None);
        assert_eq!(c.time_budget, 100.0);
        assert_eq!(c.grid_step, 0.1);
        assert!(c.include_dfssg);
    }

    #[test]
    fn sampled_worlds_are_deterministic_and_in_bounds() {
        let c = tiny();
        let a = sample_world(&c, 11).unwrap();
        assert_eq!(a, sample_world(&c, 11).unwrap());
        assert_ne!(a, sample_world(&c, 12).unwrap());
        assert!(a.ranges.iter().all(|r| (15.0..=20.0).contains(r)));
        assert!(a
            .world
            .camera_positions
            .iter()
            .all(|p| (0.0..=40.0).contains(&p[0]) && (0.0..=40.0).contains(&p[1])));
    }

    #[test]
    fn horizon_from_budget() {
        assert_eq!(derived_horizon(100.0, 0.01, 0.05, 19), 417);
        assert_eq!(derived_horizon(100.0, 0.05, 0.01, 9), 218);
        assert_eq!(derived_horizon(1e-9, 1.0, 1.0, 1), 1);
    }

    #[test]
    fn locf_aggregation() {
        let row = |s: f64, c: f64| TraceRow {
            t: 0,
            sim_seconds: s,
            f_value: c,
            coverage_fraction: c,
            comm_messages: 0,
            max_evals: 0,
        };
        let a = vec![row(0.1, 0.2), row(0.25, 0.4)];
        let b = vec![row(0.2, 0.6)];
        let curve = aggregate(&[&a, &b], 0.1, 0.3);
        assert_eq!(curve.len(), 4);
        assert_eq!(curve.mean_coverage[0], 0.0);
        assert!((curve.mean_coverage[1] - 0.1).abs() < 1e-12);
        assert!((curve.mean_coverage[2] - 0.4).abs() < 1e-12);
        assert!((curve.mean_coverage[3] - 0.5).abs() < 1e-12);
        assert!((curve.std_coverage[2] - (0.08f64).sqrt()).abs() < 1e-12);
        assert_eq!(curve.settling_time(0.05), Some(0.3));
        assert_eq!(curve.mean_at(0.29), curve.mean_coverage[2]);
    }

    #[test]
    fn sweep_is_deterministic_and_shares_grids() {
        let c = tiny();
        let a = run_sweep(&c).unwrap();
        assert_eq!(a, run_sweep(&c).unwrap());
        assert_eq!(a.variants.len(), 3);
        let grid = &a.variants[0].curve.time_grid;
        for v in &a.variants {
            assert_eq!(&v.curve.time_grid, grid);
            assert!(v.curve.mean_coverage.iter().all(|m| (0.0..=1.0).contains(m)));
            assert_eq!(v.trials.len(), 2);
        }
        let ana = a.find(Algorithm::Anaconda, Some(2), [0.01, 0.05]).unwrap();
        assert!(ana.trials.iter().all(|t| t.rows.len() == 100));
        let dfs = a.find(Algorithm::Dfssg, None, [0.01, 0.05]).unwrap();
        assert!(dfs.trials.iter().all(|t| t.rows.len() == 4));
    }

    #[test]
    fn labels() {
        let k = VariantKey {
            algorithm: Algorithm::Anaconda,
            nmax: Some(3),
            tau_f: 0.01,
            tau_c: 0.05,
        };
        assert_eq!(k.label(), "anaconda_nmax3_tf0.01_tc0.05");
        let k = VariantKey {
            algorithm: Algorithm::Dfssg,
            nmax: None,
            tau_f: 0.05,
            tau_c: 0.01,
        };
        assert_eq!(k.label(), "dfssg_tf0.05_tc0.01");
    }
}
