//! WebAssembly bindings for the static demo page in `www/`.
//!
//! A `Demo` holds one sampled camera field. The page can run either
//! coordination scheme on it and draw the covered cells of the final joint
//! action next to the coverage-versus-time curve.

use anaconda_core::baseline::{build_graph, run_dfssg, DirectedCommGraph};
use anaconda_core::harness::{anaconda_configs, derived_horizon, sample_world, ExperimentConfig};
use anaconda_core::objective::{ActionId, CoverageObjective};
use anaconda_core::{orchestrator, Result, SimTrace, TimeModel};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Coverage curve plus the last joint action, as sent to the page.
#[derive(Debug, Serialize)]
pub struct RunSummary {
    pub seconds: Vec<f64>,
    pub coverage: Vec<f64>,
    /// Heading index per camera; `null` for cameras that never committed.
    pub choices: Vec<Option<usize>>,
    pub rounds: usize,
    pub components: usize,
}

#[wasm_bindgen]
pub struct Demo {
    objective: CoverageObjective,
    graph: DirectedCommGraph,
    ranges: Vec<f64>,
}

fn to_js(e: anaconda_core::Error) -> JsError {
    JsError::new(&e.to_string())
}

impl Demo {
    /// 100×100 map, radius 7, 8 headings; ranges uniform on the given bounds.
    pub fn try_new(seed: u32, agents: usize, range_low: f64, range_high: f64) -> Result<Demo> {
        let config = ExperimentConfig {
            agent_count: agents,
            range_low,
            range_high,
            trials: 1,
            ..ExperimentConfig::paper_default()
        };
        config.validate()?;
        let sampled = sample_world(&config, u64::from(seed))?;
        let graph = build_graph(&sampled.world.camera_positions, &sampled.ranges)?;
        Ok(Demo {
            objective: CoverageObjective::new(sampled.world)?,
            graph,
            ranges: sampled.ranges,
        })
    }

    fn summarize(&self, trace: &SimTrace, rounds: usize) -> RunSummary {
        let area = self.objective.total_area();
        let n = self.objective.world().camera_count();
        let last = trace.snapshots.last();
        RunSummary {
            seconds: trace.sim_time.clone(),
            coverage: trace.snapshots.iter().map(|s| s.f_value / area).collect(),
            choices: (0..n)
                .map(|i| last.and_then(|s| s.actions.action_of(i)).map(|a| a.choice))
                .collect(),
            rounds,
            components: trace.components,
        }
    }

    pub fn anaconda_summary(
        &self,
        nmax: usize,
        tau_f: f64,
        tau_c: f64,
        budget: f64,
        seed: u32,
    ) -> Result<RunSummary> {
        let probe = anaconda_configs(&self.objective, &self.graph, nmax, 1);
        let max_evals = probe
            .iter()
            .map(|c| (c.action_count + 2 * c.alpha + 1) as u64)
            .max()
            .unwrap_or(1);
        let horizon = derived_horizon(budget, tau_f, tau_c, max_evals);
        let clock = TimeModel::new(tau_f, tau_c)?;
        let trace = orchestrator::run(&probe, &self.objective, clock, horizon, u64::from(seed))?;
        Ok(self.summarize(&trace, horizon))
    }

    pub fn dfssg_summary(&self, tau_f: f64, tau_c: f64) -> Result<RunSummary> {
        let trace = run_dfssg(&self.graph, &self.objective, &TimeModel::new(tau_f, tau_c)?)?;
        Ok(self.summarize(&trace, trace.len()))
    }

    /// Row-major mask (1 = covered) for one heading per camera; headings
    /// out of range leave that camera out.
    pub fn mask(&self, choices: &[u32]) -> Vec<u8> {
        let actions: Vec<ActionId> = choices
            .iter()
            .enumerate()
            .filter(|&(i, &c)| {
                i < self.objective.world().camera_count() && (c as usize) < self.objective.world().directions
            })
            .map(|(i, &c)| ActionId::new(i, c as usize))
            .collect();
        self.objective
            .covered_mask(&actions)
            .into_iter()
            .map(u8::from)
            .collect()
    }
}

#[wasm_bindgen]
impl Demo {
    #[wasm_bindgen(constructor)]
    pub fn new(
        seed: u32,
        agents: usize,
        range_low: f64,
        range_high: f64,
    ) -> std::result::Result<Demo, JsError> {
        Demo::try_new(seed, agents, range_low, range_high).map_err(to_js)
    }

    pub fn grid_width(&self) -> usize {
        self.objective.world().grid_dims().0
    }

    pub fn grid_height(&self) -> usize {
        self.objective.world().grid_dims().1
    }

    /// Camera positions as `[x0, y0, x1, y1, …]`.
    pub fn positions(&self) -> Vec<f64> {
        self.objective
            .world()
            .camera_positions
            .iter()
            .flatten()
            .copied()
            .collect()
    }

    pub fn ranges(&self) -> Vec<f64> {
        self.ranges.clone()
    }

    /// Communication edges as `[from0, to0, from1, to1, …]`.
    pub fn edges(&self) -> Vec<u32> {
        self.graph
            .edges()
            .into_iter()
            .flat_map(|(a, b)| [a as u32, b as u32])
            .collect()
    }

    /// JSON run summary of the learning-based coordination.
    pub fn run_anaconda(
        &self,
        nmax: usize,
        tau_f: f64,
        tau_c: f64,
        budget: f64,
        seed: u32,
    ) -> std::result::Result<String, JsError> {
        let summary = self
            .anaconda_summary(nmax, tau_f, tau_c, budget, seed)
            .map_err(to_js)?;
        Ok(serde_json::to_string(&summary).expect("summary serializes"))
    }

    /// JSON run summary of depth-first sequential greedy.
    pub fn run_dfssg(&self, tau_f: f64, tau_c: f64) -> std::result::Result<String, JsError> {
        let summary = self.dfssg_summary(tau_f, tau_c).map_err(to_js)?;
        Ok(serde_json::to_string(&summary).expect("summary serializes"))
    }

    pub fn coverage_mask(&self, choices: Vec<u32>) -> Vec<u8> {
        self.mask(&choices)
    }
}
