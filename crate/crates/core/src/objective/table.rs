use super::{ActionId, SubmodularObjective};
use crate::error::{Error, Result};

/// Additive objective: the value of a set is the sum of its elements' weights.
#[derive(Clone, Debug)]
pub struct ModularObjective {
    counts: Vec<usize>,
    weights: Vec<Vec<f64>>,
}

impl ModularObjective {
    pub fn new(weights: Vec<Vec<f64>>) -> Result<Self> {
        if weights.iter().flatten().any(|w| w.is_nan() || *w < 0.0) {
            return Err(Error::config("modular weights must be non-negative"));
        }
        Ok(Self {
            counts: weights.iter().map(Vec::len).collect(),
            weights,
        })
    }
}

impl SubmodularObjective for ModularObjective {
    fn action_counts(&self) -> &[usize] {
        &self.counts
    }

    fn value(&self, actions: &[ActionId]) -> f64 {
        let mut seen: Vec<ActionId> = actions.to_vec();
        seen.sort_unstable();
        seen.dedup();
        seen.iter().map(|a| self.weights[a.agent][a.choice]).sum()
    }
}

/// Arbitrary set function over a small ground set (at most 24 elements),
/// tabulated by bitmask. Used for hand-built counterexamples.
#[derive(Clone, Debug)]
pub struct TableObjective {
    counts: Vec<usize>,
    offsets: Vec<usize>,
    table: Vec<f64>,
}

impl TableObjective {
    /// Builds the table by evaluating `value` on every bitmask over the
    /// ground set (bit index = position in agent-then-choice order).
    pub fn from_fn(counts: Vec<usize>, value: impl Fn(u32) -> f64) -> Result<Self> {
        let size: usize = counts.iter().sum();
        if size > 24 {
            return Err(Error::UnsupportedSize(format!(
                "table objective over {size} elements"
            )));
        }
        let table: Vec<f64> = (0..1u32 << size).map(&value).collect();
        if table[0] != 0.0 {
            return Err(Error::config("table objective must satisfy f(empty) = 0"));
        }
        let offsets = counts
            .iter()
            .scan(0, |acc, &n| {
                let start = *acc;
                *acc += n;
                Some(start)
            })
            .collect();
        Ok(Self {
            counts,
            offsets,
            table,
        })
    }
}

impl SubmodularObjective for TableObjective {
    fn action_counts(&self) -> &[usize] {
        &self.counts
    }

    fn value(&self, actions: &[ActionId]) -> f64 {
        let mask = actions
            .iter()
            .fold(0u32, |m, a| m | 1 << (self.offsets[a.agent] + a.choice));
        self.table[mask as usize]
    }
}
