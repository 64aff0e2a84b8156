use anaconda_core::baseline::{build_graph, plan, run_dfssg};
use anaconda_core::harness::{sample_world, ExperimentConfig};
use anaconda_core::objective::{curvature, ActionId, CoverageObjective, CoverageWorld, SubmodularObjective};
use anaconda_core::TimeModel;
use proptest::prelude::*;

fn world(positions: Vec<[f64; 2]>) -> CoverageObjective {
    CoverageObjective::new(CoverageWorld::new(50.0, 50.0, 1.0, positions, 7.0, 8).unwrap()).unwrap()
}

fn positions(n: usize) -> impl Strategy<Value = Vec<[f64; 2]>> {
    prop::collection::vec((0.0..50.0f64, 0.0..50.0f64).prop_map(|(x, y)| [x, y]), n)
}

/// Random nested pair `S ⊆ T` of joint actions plus an outside action.
fn nested(n: usize) -> impl Strategy<Value = (Vec<ActionId>, Vec<ActionId>, ActionId)> {
    (
        prop::collection::vec((0usize..3, 0usize..8), n),
        0usize..n,
        0usize..8,
    )
        .prop_map(move |(membership, outside, choice)| {
            let mut s = Vec::new();
            let mut t = Vec::new();
            for (agent, &(m, c)) in membership.iter().enumerate() {
                if agent == outside {
                    continue;
                }
                let a = ActionId::new(agent, c);
                if m >= 1 {
                    t.push(a);
                }
                if m == 2 {
                    s.push(a);
                }
            }
            (s, t, ActionId::new(outside, choice))
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn coverage_is_monotone_and_submodular(pos in positions(6), (s, t, a) in nested(6)) {
        let f = world(pos);
        prop_assert!(f.value(&s) <= f.value(&t));
        let gain = |set: &[ActionId]| {
            let mut with = set.to_vec();
            with.push(a);
            f.value(&with) - f.value(set)
        };
        prop_assert!(gain(&s) >= gain(&t));
        prop_assert!(f.coverage_fraction(&t) <= 1.0);
        prop_assert_eq!(f.value(&[]), 0.0);
    }

    #[test]
    fn curvature_stays_in_unit_interval(pos in prop::collection::vec((10.0..40.0f64, 10.0..40.0f64).prop_map(|(x, y)| [x, y]), 1..5)) {
        let f = world(pos);
        let k = curvature(&f, &f.ground()).unwrap().kappa;
        prop_assert!((0.0..=1.0).contains(&k));
    }
}

#[test]
fn sampled_graph_matches_pairwise_distances() {
    let config = ExperimentConfig::paper_default();
    for seed in 0..5 {
        let w = sample_world(&config, seed).unwrap();
        let g = build_graph(&w.world.camera_positions, &w.ranges).unwrap();
        let p = &w.world.camera_positions;
        let mut expected = Vec::new();
        for i in 0..p.len() {
            for j in 0..p.len() {
                let d2 = (p[i][0] - p[j][0]).powi(2) + (p[i][1] - p[j][1]).powi(2);
                if i != j && d2 <= w.ranges[i] * w.ranges[i] {
                    expected.push((j, i));
                }
            }
        }
        expected.sort_unstable();
        assert_eq!(g.edges(), expected);
    }
}

#[test]
fn sequential_greedy_matches_an_independent_greedy() {
    let config = ExperimentConfig::paper_default();
    for seed in 0..3 {
        let w = sample_world(&config, seed).unwrap();
        let g = build_graph(&w.world.camera_positions, &w.ranges).unwrap();
        let f = CoverageObjective::new(w.world).unwrap();
        let trace = run_dfssg(&g, &f, &TimeModel::new(0.01, 0.05).unwrap()).unwrap();

        // Greedy per component over the same order, without the time model.
        let mut everything = Vec::new();
        for comp in plan(&g) {
            let mut chosen: Vec<ActionId> = Vec::new();
            for &i in &comp.order {
                let best = (0..8)
                    .map(|c| {
                        let mut s = chosen.clone();
                        s.push(ActionId::new(i, c));
                        (c, f.value(&s) - f.value(&chosen))
                    })
                    .fold((0, f64::NEG_INFINITY), |b, x| if x.1 > b.1 { x } else { b });
                chosen.push(ActionId::new(i, best.0));
            }
            everything.extend(chosen);
        }
        assert_eq!(trace.final_value(), f.value(&everything));
        assert!(trace.snapshots.windows(2).all(|w| w[0].f_value <= w[1].f_value));
    }
}

#[test]
fn sampled_positions_are_centered() {
    let mut config = ExperimentConfig::paper_default();
    config.agent_count = 10_000;
    let w = sample_world(&config, 99).unwrap();
    let n = w.world.camera_positions.len() as f64;
    // Uniform on [0, 100]: sigma of the mean is 100 / sqrt(12 n).
    let sigma = 100.0 / (12.0 * n).sqrt();
    for axis in 0..2 {
        let mean = w.world.camera_positions.iter().map(|p| p[axis]).sum::<f64>() / n;
        assert!((mean - 50.0).abs() < 3.0 * sigma, "axis {axis}: {mean}");
    }
    assert!(w.ranges.iter().all(|r| (15.0..=20.0).contains(r)));
}

#[test]
fn default_reward_scale_never_clamps() {
    use anaconda_core::harness::anaconda_configs;
    use anaconda_core::Simulation;
    let config = ExperimentConfig::paper_default();
    let w = sample_world(&config, 4).unwrap();
    let g = build_graph(&w.world.camera_positions, &w.ranges).unwrap();
    let f = CoverageObjective::new(w.world).unwrap();
    let configs = anaconda_configs(&f, &g, 5, 100);
    let mut sim = Simulation::new(&configs, &f, TimeModel::new(0.01, 0.05).unwrap(), 100, 1).unwrap();
    for _ in 0..100 {
        sim.step().unwrap();
    }
    assert!(sim.agents().iter().all(|a| a.clamp_fires() == 0));
}
