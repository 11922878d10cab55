//! End-to-end properties of the stochastic QAOA pipeline on the bundled
//! instances.

use std::path::Path;

use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use recourse_qaoa::cli::load_instance;
use recourse_qaoa::model::InstanceSpec;
use recourse_qaoa::qaoa::{
    optimize, EvalMode, InitStrategy, OptimizerKind, QaoaConfig, StochasticQaoa,
};

fn load(name: &str) -> InstanceSpec {
    load_instance(
        &Path::new(env!("CARGO_MANIFEST_DIR"))
            .join("../../instances")
            .join(name),
    )
    .unwrap()
}

fn random_angles(rng: &mut ChaCha8Rng, layers: usize) -> (Vec<f64>, Vec<f64>) {
    (
        (0..layers).map(|_| rng.random_range(-3.0..3.0)).collect(),
        (0..layers).map(|_| rng.random_range(-3.0..3.0)).collect(),
    )
}

#[test]
fn expectation_decomposes_over_scenario_branches() {
    let inst = load("reference-instance.toml");
    let q = StochasticQaoa::new(&inst, 1.0).unwrap();
    let layout = q.layout();
    let reg = layout.steps[0].p;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for layers in 1..=4 {
        let (g, b) = random_angles(&mut rng, layers);
        let state = q.final_state(&g, &b).unwrap();
        let total = q.expectation(&g, &b).unwrap();

        let mut decomposed = 0.0;
        for s in inst.joint_scenarios().unwrap() {
            let r = inst.steps[0].scenarios.register_index(s.values[0]).unwrap();
            // Conditional decision state of this branch, renormalized.
            let branch: Vec<(u64, Complex64)> = state
                .amplitudes()
                .iter()
                .enumerate()
                .filter(|(z, _)| reg.read(*z as u64) == r)
                .map(|(z, a)| (z as u64 & layout.decision_mask(), *a))
                .collect();
            let weight: f64 = branch.iter().map(|(_, a)| a.norm_sqr()).sum();
            assert!((weight - s.probability).abs() < 1e-10);
            let conditional: f64 = branch
                .iter()
                .map(|(x, a)| a.norm_sqr() / weight * q.qubo().energy(*x, &s.values))
                .sum();
            decomposed += s.probability * conditional;
        }
        assert!(
            (total - decomposed).abs() < 1e-10,
            "{total} vs {decomposed}"
        );
    }
}

#[test]
fn zero_angles_give_scenario_weighted_mean() {
    let inst = load("reference-instance.toml");
    let q = StochasticQaoa::new(&inst, 1.0).unwrap();
    // Mean over 64 decision strings of the penalty QUBO, per scenario, in
    // closed form: with uniform bits each register is uniform on 0..3.
    let mut want = 0.0;
    for (p, prob) in [(1i64, 0.2), (2, 0.5), (3, 0.3)] {
        let mut mean = 0.0;
        for j in 0..4i64 {
            for buy in 0..4i64 {
                for sell in 0..4i64 {
                    let v = (j - buy + sell - p) as f64;
                    mean += -0.25 * j as f64 + 0.4 * buy as f64 - 0.1 * sell as f64 + v * v;
                }
            }
        }
        want += prob * mean / 64.0;
    }
    for layers in [1, 2, 5] {
        let z = vec![0.0; layers];
        assert!((q.expectation(&z, &z).unwrap() - want).abs() < 1e-10);
    }
}

#[test]
fn sampled_objective_agrees_with_exact() {
    let inst = load("reference-instance.toml");
    let q = StochasticQaoa::new(&inst, 1.0).unwrap();
    let (g, b) = (vec![0.4, 0.9], vec![0.6, 0.2]);
    let exact = q.expectation(&g, &b).unwrap();
    let state = q.final_state(&g, &b).unwrap();
    let second: f64 =
        state.expectation_table(&q.cost_table().iter().map(|c| c * c).collect::<Vec<_>>());
    let shots = 1_000_000u64;
    let se = ((second - exact * exact) / shots as f64).sqrt();
    let (sampled, counts) = q.sampled_expectation(&g, &b, shots, 9).unwrap();
    assert_eq!(counts.shots, shots);
    assert!(
        (sampled - exact).abs() < 5.0 * se,
        "{sampled} vs {exact} (se {se})"
    );
}

#[test]
fn seed_determinism() {
    let inst = load("reference-instance.toml");
    for optimizer in [
        OptimizerKind::NelderMead,
        OptimizerKind::Spsa,
        OptimizerKind::CobylaStyle,
    ] {
        let cfg = QaoaConfig {
            layers: 2,
            init: InitStrategy::Random,
            optimizer,
            max_evaluations: 60,
            seed: 31,
            ..Default::default()
        };
        let a = optimize(&inst, &cfg).unwrap();
        let b = optimize(&inst, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
        let c = optimize(&inst, &QaoaConfig { seed: 32, ..cfg }).unwrap();
        assert_ne!(a.initial_params, c.initial_params);
    }
}

#[test]
fn sampled_runs_are_seeded_too() {
    let inst = load("reference-instance.toml");
    let cfg = QaoaConfig {
        eval_mode: EvalMode::Sampled { shots: 256 },
        max_evaluations: 15,
        seed: 5,
        ..Default::default()
    };
    let a = optimize(&inst, &cfg).unwrap();
    assert_eq!(a, optimize(&inst, &cfg).unwrap());
    let counts = a.shot_counts.as_ref().unwrap();
    assert_eq!(counts.counts.values().sum::<u64>(), 256);
    let total: f64 = a.decision_marginal.iter().map(|e| e.probability).sum();
    assert!((total - 1.0).abs() < 1e-9);
}

fn point_mass_minimum(q: &StochasticQaoa) -> f64 {
    (0..64u64)
        .map(|x| q.qubo().energy(x, &[2]))
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn point_mass_optimization_descends_above_the_minimum() {
    let inst = load("point-mass.toml");
    let q = StochasticQaoa::new(&inst, 1.0).unwrap();
    let minimum = point_mass_minimum(&q);
    let cfg = QaoaConfig {
        layers: 5,
        max_evaluations: 3000,
        ..Default::default()
    };
    let r = optimize(&inst, &cfg).unwrap();
    // Variational bound, and a real improvement over the uniform start.
    assert!(r.best_expectation >= minimum - 1e-9);
    assert!(
        r.best_expectation < r.cost_trace[0] - 1.0,
        "{} vs {}",
        r.best_expectation,
        r.cost_trace[0]
    );
}

/// Closing the gap to the QUBO minimum needs far more depth than the
/// penalty landscape allows here: 40 layers and 20000 evaluations still end
/// about 0.2 above it. Kept runnable for anyone tuning the optimizers.
#[test]
#[ignore = "not reached at tractable depth; see README"]
fn point_mass_optimum_is_reached() {
    let inst = load("point-mass.toml");
    let q = StochasticQaoa::new(&inst, 1.0).unwrap();
    let minimum = point_mass_minimum(&q);
    let cfg = QaoaConfig {
        layers: 40,
        max_evaluations: 20000,
        ..Default::default()
    };
    let best = optimize(&inst, &cfg).unwrap().best_expectation;
    assert!(best - minimum < 0.05, "best {best} vs minimum {minimum}");
}

#[test]
fn run_result_invariants() {
    let inst = load("reference-instance.toml");
    for optimizer in [
        OptimizerKind::NelderMead,
        OptimizerKind::Spsa,
        OptimizerKind::CobylaStyle,
    ] {
        let cfg = QaoaConfig {
            layers: 3,
            optimizer,
            max_evaluations: 150,
            ..Default::default()
        };
        let r = optimize(&inst, &cfg).unwrap();
        assert!(r.cost_trace.len() <= 150);
        assert_eq!(r.evaluations, r.cost_trace.len());
        assert!(r.best_expectation <= r.cost_trace[0]);
        assert_eq!(
            r.best_expectation,
            r.cost_trace.iter().copied().fold(f64::INFINITY, f64::min)
        );
        let total: f64 = r.decision_marginal.iter().map(|e| e.probability).sum();
        assert!((total - 1.0).abs() < 1e-9);

        // Branch weights reproduce the input distribution and each
        // conditional distribution is normalized.
        let weights: Vec<(i64, f64)> = r
            .feasibility_report
            .iter()
            .map(|b| (b.p[0], b.probability))
            .collect();
        for ((p, w), (v, want)) in weights.iter().zip([(1, 0.2), (2, 0.5), (3, 0.3)]) {
            assert_eq!(*p, v);
            assert!((w - want).abs() < 1e-10);
        }
        for b in &r.feasibility_report {
            let s: f64 = b.conditional_j.iter().map(|e| e.probability).sum();
            assert!((s - 1.0).abs() < 1e-9);
            assert_eq!(
                b.balanced,
                b.modal_j[0] - b.modal_buy[0] + b.modal_sell[0] == b.p[0]
            );
        }
        let modal = r
            .decision_marginal
            .iter()
            .max_by(|a, b| a.probability.total_cmp(&b.probability).then(b.j.cmp(&a.j)))
            .unwrap();
        assert_eq!(modal.j, r.modal_j);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn scenario_marginal_is_preserved(seed in any::<u64>(), layers in 1usize..4) {
        let inst = load("reference-instance.toml");
        let q = StochasticQaoa::new(&inst, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (g, b) = random_angles(&mut rng, layers);
        let state = q.final_state(&g, &b).unwrap();
        let reg = q.layout().steps[0].p;
        let mut m = [0.0; 4];
        for (z, p) in state.probabilities().into_iter().enumerate() {
            m[reg.read(z as u64) as usize] += p;
        }
        for (got, want) in m.iter().zip([0.0, 0.2, 0.5, 0.3]) {
            prop_assert!((got - want).abs() < 1e-10);
        }
    }

    #[test]
    fn point_mass_matches_fixed_scenario_energy(seed in any::<u64>()) {
        // With a single scenario the stochastic objective is the plain QAOA
        // energy for that scenario; compare against the cost table directly.
        let inst = load("point-mass.toml");
        let q = StochasticQaoa::new(&inst, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (g, b) = random_angles(&mut rng, 2);
        let state = q.final_state(&g, &b).unwrap();
        let direct: f64 = state
            .probabilities()
            .iter()
            .enumerate()
            .map(|(z, p)| p * q.qubo().energy(z as u64 & q.layout().decision_mask(), &[2]))
            .sum();
        prop_assert!((q.expectation(&g, &b).unwrap() - direct).abs() < 1e-10);
    }
}
