//! Area coverage by downward-facing cameras with circular fields of view.
//!
//! The map is rasterized into square cells; a cell is covered when its center
//! lies within `fov_radius` of at least one selected FOV center. Camera `i`
//! pointing along heading `k` places its FOV center at
//! `x_i + r (cos θ_k, sin θ_k)` with `θ_k = 2πk / directions`. Disks may hang
//! over the map edge; only in-map cells count.

use std::cell::RefCell;
use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use super::{ActionId, JointActionSet, SubmodularObjective};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverageWorld {
    pub width: f64,
    pub height: f64,
    pub cell_size: f64,
    pub camera_positions: Vec<[f64; 2]>,
    pub fov_radius: f64,
    pub directions: usize,
}

impl CoverageWorld {
    pub fn new(
        width: f64,
        height: f64,
        cell_size: f64,
        camera_positions: Vec<[f64; 2]>,
        fov_radius: f64,
        directions: usize,
    ) -> Result<Self> {
        let world = Self {
            width,
            height,
            cell_size,
            camera_positions,
            fov_radius,
            directions,
        };
        world.validate()?;
        Ok(world)
    }

    pub fn validate(&self) -> Result<()> {
        if self.cell_size.is_nan() || self.cell_size <= 0.0 {
            return Err(Error::config("cell_size must be positive"));
        }
        if !(self.width >= self.cell_size && self.height >= self.cell_size) {
            return Err(Error::config("map must be at least one cell wide and high"));
        }
        if self.fov_radius.is_nan() || self.fov_radius < 0.0 {
            return Err(Error::config("fov_radius must be non-negative"));
        }
        if self.directions == 0 {
            return Err(Error::config("directions must be at least 1"));
        }
        for (i, p) in self.camera_positions.iter().enumerate() {
            let inside = (0.0..=self.width).contains(&p[0]) && (0.0..=self.height).contains(&p[1]);
            if !inside {
                return Err(Error::config(format!(
                    "camera {i} at ({}, {}) lies outside the map",
                    p[0], p[1]
                )));
            }
        }
        Ok(())
    }

    pub fn camera_count(&self) -> usize {
        self.camera_positions.len()
    }

    /// Grid dimensions as `(columns, rows)`.
    pub fn grid_dims(&self) -> (usize, usize) {
        (
            (self.width / self.cell_size).floor() as usize,
            (self.height / self.cell_size).floor() as usize,
        )
    }

    pub fn total_area(&self) -> f64 {
        let (cols, rows) = self.grid_dims();
        (cols * rows) as f64 * self.cell_size * self.cell_size
    }

    pub fn heading(&self, choice: usize) -> f64 {
        TAU * choice as f64 / self.directions as f64
    }

    pub fn fov_center(&self, action: ActionId) -> [f64; 2] {
        let [x, y] = self.camera_positions[action.agent];
        let theta = self.heading(action.choice);
        [
            x + self.fov_radius * theta.cos(),
            y + self.fov_radius * theta.sin(),
        ]
    }
}

/// Cells covered by one FOV, as a bitset window into the row-major grid.
#[derive(Clone, Debug)]
struct Footprint {
    first_word: usize,
    words: Vec<u64>,
    cells: u32,
}

impl Footprint {
    fn end_word(&self) -> usize {
        self.first_word + self.words.len()
    }
}

thread_local! {
    static SCRATCH: RefCell<Vec<u64>> = const { RefCell::new(Vec::new()) };
}

/// The rasterized coverage objective with precomputed FOV footprints.
#[derive(Clone, Debug)]
pub struct CoverageObjective {
    world: CoverageWorld,
    counts: Vec<usize>,
    footprints: Vec<Vec<Footprint>>,
    cell_area: f64,
    cols: usize,
    rows: usize,
}

impl CoverageObjective {
    pub fn new(world: CoverageWorld) -> Result<Self> {
        world.validate()?;
        let (cols, rows) = world.grid_dims();
        let footprints = (0..world.camera_count())
            .map(|agent| {
                (0..world.directions)
                    .map(|choice| {
                        rasterize(&world, world.fov_center(ActionId::new(agent, choice)), cols, rows)
                    })
                    .collect()
            })
            .collect();
        Ok(Self {
            counts: vec![world.directions; world.camera_count()],
            cell_area: world.cell_size * world.cell_size,
            world,
            footprints,
            cols,
            rows,
        })
    }

    pub fn world(&self) -> &CoverageWorld {
        &self.world
    }

    pub fn total_area(&self) -> f64 {
        (self.cols * self.rows) as f64 * self.cell_area
    }

    /// Validated coverage of a joint action set, in area units.
    pub fn coverage_value(&self, actions: &JointActionSet) -> Result<f64> {
        for &a in actions.iter() {
            self.check_action(a)?;
        }
        Ok(self.evaluate(actions))
    }

    pub fn coverage_fraction(&self, actions: &[ActionId]) -> f64 {
        self.value(actions) / self.total_area()
    }

    /// Number of grid cells covered by a single action.
    pub fn footprint_cells(&self, action: ActionId) -> u32 {
        self.footprints[action.agent][action.choice].cells
    }

    /// Row-major coverage mask of the whole grid (`true` = covered).
    pub fn covered_mask(&self, actions: &[ActionId]) -> Vec<bool> {
        let total = self.cols * self.rows;
        let mut words = vec![0u64; total.div_ceil(64)];
        for a in actions {
            let fp = &self.footprints[a.agent][a.choice];
            for (w, bits) in words[fp.first_word..fp.end_word()].iter_mut().zip(&fp.words) {
                *w |= bits;
            }
        }
        (0..total).map(|i| words[i / 64] >> (i % 64) & 1 == 1).collect()
    }
}

fn rasterize(world: &CoverageWorld, center: [f64; 2], cols: usize, rows: usize) -> Footprint {
    let cs = world.cell_size;
    let r = world.fov_radius;
    let r2 = r * r;
    let clamp = |v: f64, hi: usize| (v.max(0.0) as usize).min(hi);
    let col_lo = clamp((center[0] - r) / cs - 1.0, cols);
    let col_hi = clamp((center[0] + r) / cs + 1.0, cols.saturating_sub(1));
    let row_lo = clamp((center[1] - r) / cs - 1.0, rows);
    let row_hi = clamp((center[1] + r) / cs + 1.0, rows.saturating_sub(1));

    let mut cells = Vec::new();
    for row in row_lo..=row_hi.min(rows.saturating_sub(1)) {
        let dy = (row as f64 + 0.5) * cs - center[1];
        for col in col_lo..=col_hi.min(cols.saturating_sub(1)) {
            let dx = (col as f64 + 0.5) * cs - center[0];
            if dx * dx + dy * dy <= r2 {
                cells.push(row * cols + col);
            }
        }
    }
    let Some((&first, &last)) = cells.first().zip(cells.last()) else {
        return Footprint {
            first_word: 0,
            words: Vec::new(),
            cells: 0,
        };
    };
    let first_word = first / 64;
    let mut words = vec![0u64; last / 64 - first_word + 1];
    for &c in &cells {
        words[c / 64 - first_word] |= 1 << (c % 64);
    }
    Footprint {
        first_word,
        words,
        cells: cells.len() as u32,
    }
}

impl SubmodularObjective for CoverageObjective {
    fn action_counts(&self) -> &[usize] {
        &self.counts
    }

    fn value(&self, actions: &[ActionId]) -> f64 {
        let fp = |a: &ActionId| &self.footprints[a.agent][a.choice];
        match actions {
            [] => 0.0,
            [a] => fp(a).cells as f64 * self.cell_area,
            _ => {
                let lo = actions.iter().map(|a| fp(a).first_word).min().unwrap_or(0);
                let hi = actions.iter().map(|a| fp(a).end_word()).max().unwrap_or(0);
                if hi <= lo {
                    return 0.0;
                }
                let covered = SCRATCH.with(|scratch| {
                    let mut buf = scratch.borrow_mut();
                    buf.clear();
                    buf.resize(hi - lo, 0);
                    for a in actions {
                        let f = fp(a);
                        let start = f.first_word - lo;
                        for (w, bits) in buf[start..start + f.words.len()].iter_mut().zip(&f.words) {
                            *w |= bits;
                        }
                    }
                    buf.iter().map(|w| w.count_ones()).sum::<u32>()
                });
                covered as f64 * self.cell_area
            }
        }
    }
}
