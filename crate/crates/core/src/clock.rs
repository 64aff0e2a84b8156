//! Simulated decision time.
//!
//! `tau_f` seconds per objective evaluation and `tau_c` seconds per
//! single-action transmission over one hop. Charges accumulate as integer
//! evaluation and transmission units, so elapsed time is independent of the
//! order in which charges were applied.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeModel {
    tau_f: f64,
    tau_c: f64,
    eval_units: u64,
    comm_units: u64,
}

impl TimeModel {
    pub fn new(tau_f: f64, tau_c: f64) -> Result<Self> {
        if !(tau_f > 0.0 && tau_f.is_finite() && tau_c > 0.0 && tau_c.is_finite()) {
            return Err(Error::config(format!(
                "time constants must be positive, got tau_f={tau_f} tau_c={tau_c}"
            )));
        }
        Ok(Self {
            tau_f,
            tau_c,
            eval_units: 0,
            comm_units: 0,
        })
    }

    pub fn tau_f(&self) -> f64 {
        self.tau_f
    }

    pub fn tau_c(&self) -> f64 {
        self.tau_c
    }

    /// Evaluations on the critical path so far.
    pub fn eval_units(&self) -> u64 {
        self.eval_units
    }

    /// Single-action single-hop transmissions on the critical path so far.
    pub fn comm_units(&self) -> u64 {
        self.comm_units
    }

    pub fn compute_seconds(&self) -> f64 {
        self.tau_f * self.eval_units as f64
    }

    pub fn comm_seconds(&self) -> f64 {
        self.tau_c * self.comm_units as f64
    }

    pub fn elapsed(&self) -> f64 {
        self.compute_seconds() + self.comm_seconds()
    }

    /// A fresh clock with the same constants.
    pub fn restarted(&self) -> Self {
        Self {
            eval_units: 0,
            comm_units: 0,
            ..self.clone()
        }
    }

    /// Seconds one coordination round costs: agents compute in parallel, so
    /// the slowest agent sets the compute time; each communication round is
    /// one parallel multi-channel exchange.
    pub fn anaconda_round_cost(&self, per_agent_evals: &[u64], comm_rounds: u64) -> f64 {
        let max = per_agent_evals.iter().copied().max().unwrap_or(0);
        self.tau_f * max as f64 + self.tau_c * comm_rounds as f64
    }

    pub fn charge_anaconda_round(&mut self, per_agent_evals: &[u64], comm_rounds: u64) {
        self.eval_units += per_agent_evals.iter().copied().max().unwrap_or(0);
        self.comm_units += comm_rounds;
    }

    /// One sequential-greedy step: `evals` evaluations, then a message of
    /// `message_size` actions forwarded over `hops` hops.
    pub fn charge_dfssg_step(&mut self, evals: u64, message_size: u64, hops: u64) {
        self.eval_units += evals;
        self.comm_units += message_size * hops;
    }
}

/// Closed-form communication time of sequential greedy along a spanning
/// walk with unit hops: `tau_c · n(n-1)/2`.
pub fn worst_case_time(n: usize, tau_c: f64) -> f64 {
    let n = n as f64;
    tau_c * n * (n - 1.0) / 2.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn anaconda_round_charges_the_slowest_agent() {
        let mut tm = TimeModel::new(0.01, 0.05).unwrap();
        let evals = vec![8 + 2 * 3 + 1; 10];
        assert_eq!(evals[0], 15);
        tm.charge_anaconda_round(&evals, 1);
        assert!((tm.elapsed() - 0.20).abs() < 1e-12);
        assert!((tm.anaconda_round_cost(&[3, 15, 9], 1) - 0.20).abs() < 1e-12);

        let mut single = TimeModel::new(0.3, 0.7).unwrap();
        single.charge_anaconda_round(&[2], 1);
        assert!((single.elapsed() - (0.3 * 2.0 + 0.7)).abs() < 1e-12);
    }

    #[test]
    fn dfssg_step_examples() {
        let mut tm = TimeModel::new(0.02, 0.01).unwrap();
        tm.charge_dfssg_step(8, 0, 0);
        assert!((tm.elapsed() - 0.16).abs() < 1e-12);
        let before = tm.elapsed();
        tm.charge_dfssg_step(0, 3, 2);
        assert!((tm.elapsed() - before - 0.06).abs() < 1e-12);
    }

    #[test]
    fn path_of_four_charges_six_transfers() {
        let mut tm = TimeModel::new(1.0, 1.0).unwrap();
        tm.charge_dfssg_step(1, 0, 0);
        for carried in 1..4 {
            tm.charge_dfssg_step(1, carried, 1);
        }
        assert_eq!(tm.comm_units(), 6);
        assert_eq!(tm.comm_seconds(), worst_case_time(4, 1.0));
    }

    #[test]
    fn closed_form_values() {
        assert_eq!(worst_case_time(4, 1.0), 6.0);
        assert_eq!(worst_case_time(1, 0.3), 0.0);
        assert!((worst_case_time(60, 0.05) - 88.5).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_positive_constants() {
        assert!(TimeModel::new(0.0, 1.0).is_err());
        assert!(TimeModel::new(1.0, -1.0).is_err());
        assert!(TimeModel::new(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn equal_configs_accumulate_in_closed_form() {
        let mut tm = TimeModel::new(0.01, 0.05).unwrap();
        let t = 1000;
        for _ in 0..t {
            tm.charge_anaconda_round(&[15; 4], 1);
        }
        let expected = t as f64 * (0.01 * 15.0 + 0.05);
        assert!((tm.elapsed() - expected).abs() <= 1e-12 * expected);
    }

    proptest! {
        #[test]
        fn elapsed_is_order_independent(
            mut charges in prop::collection::vec((0u64..50, 0u64..20, 0u64..5), 0..40),
            seed in any::<u64>(),
        ) {
            let run = |cs: &[(u64, u64, u64)]| {
                let mut tm = TimeModel::new(0.013, 0.047).unwrap();
                for &(e, m, h) in cs {
                    tm.charge_dfssg_step(e, m, h);
                }
                tm.elapsed()
            };
            let forward = run(&charges);
            // Deterministic shuffle from the seed.
            let n = charges.len();
            let mut s = seed;
            for i in (1..n).rev() {
                s = crate::rng::derive_seed(s, i as u64);
                charges.swap(i, (s % (i as u64 + 1)) as usize);
            }
            prop_assert_eq!(forward, run(&charges));
        }
    }
}
