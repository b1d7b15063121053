use std::f64::consts::PI;

use tepai::dense::{self, DenseState};
use tepai::pai::{self, PaiConfig, PaiMode};
use tepai::pauli::{build_spin_ring, OmegaSpec, PauliString};
use tepai::rng::{self, Domain};
use tepai::runner::{run_plan, single_qubit_paulis, RunPlan, Schedule};
use tepai::trotter::build_trotter_circuit;
use tepai::verify::{mps_vs_dense, random_circuit};
use tepai::{domain_wall_state, Circuit, CostLedger, MpsState, TruncationPolicy};

fn mps_and_dense(n: usize, c: &dyn Circuit, policy: &TruncationPolicy) -> (MpsState, DenseState) {
    let init = domain_wall_state(n);
    let mut m = MpsState::product(&init).unwrap();
    m.run_circuit(c, policy, &mut CostLedger::default()).unwrap();
    let mut d = DenseState::product(&init).unwrap();
    d.apply_circuit(c).unwrap();
    (m, d)
}

fn worst_single_qubit(m: &MpsState, d: &DenseState) -> f64 {
    single_qubit_paulis(d.n_qubits())
        .iter()
        .map(|p| (m.expectation(p).unwrap() - d.expectation(p).unwrap()).abs())
        .fold(0.0, f64::max)
}

#[test]
fn fifty_random_circuits_at_ten_qubits() {
    let (worst, discarded) = mps_vs_dense(10, 50, 60, &TruncationPolicy::exact(10), 17);
    assert_eq!(discarded, 0.0);
    assert!(worst < 1e-10, "worst deviation {worst}");
}

#[test]
fn random_circuits_amplitudes_agree_across_sizes() {
    for n in 2..=9 {
        let c = random_circuit(&mut rng::stream(3, Domain::Test, n as u64), n, 30);
        let (m, d) = mps_and_dense(n, &c, &TruncationPolicy::exact(n));
        let err: f64 = m.to_amplitudes().iter().zip(d.amplitudes()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-10, "n={n}: {err}");
    }
}

#[test]
fn trotter_circuit_on_mps_matches_dense_and_exact() {
    let h = build_spin_ring(8, 0.7, &OmegaSpec::Seed(4)).unwrap();
    let c = build_trotter_circuit(&h, 1.0, 200).unwrap();
    let (m, d) = mps_and_dense(8, &c, &TruncationPolicy::exact(8));
    assert!(worst_single_qubit(&m, &d) < 1e-10);
    let mut exact = DenseState::product(&domain_wall_state(8)).unwrap();
    exact.exact_evolve(&h, 1.0).unwrap();
    // first-order splitting error at N = 200 is of order 1e-2
    let gap = single_qubit_paulis(8)
        .iter()
        .map(|p| (d.expectation(p).unwrap() - exact.expectation(p).unwrap()).abs())
        .fold(0.0, f64::max);
    assert!(gap < 2e-2, "{gap}");
}

#[test]
fn sampled_circuits_on_mps_match_dense() {
    let h = build_spin_ring(7, 1.0, &OmegaSpec::Seed(9)).unwrap();
    let cfg = PaiConfig {
        delta: PI / 16.0,
        n_steps: 100,
        total_time: 1.0,
        mode: PaiMode::Unbiased,
    };
    for i in 0..5 {
        let c = pai::sample_circuit(&h, &cfg, &mut rng::stream(5, Domain::Circuit, i)).unwrap();
        let (m, d) = mps_and_dense(7, &c, &TruncationPolicy::exact(7));
        assert!(worst_single_qubit(&m, &d) < 1e-10);
    }
}

#[test]
fn exact_evolution_composes() {
    let h = build_spin_ring(5, 0.3, &OmegaSpec::Seed(2)).unwrap();
    let mut a = DenseState::product(&domain_wall_state(5)).unwrap();
    a.exact_evolve(&h, 0.4).unwrap();
    a.exact_evolve(&h, 0.7).unwrap();
    let u = dense::exact_unitary(&h, 1.1).unwrap();
    let b = DenseState::product(&domain_wall_state(5)).unwrap();
    let v = nalgebra::DVector::from_column_slice(b.amplitudes());
    let want = u * v;
    let err: f64 = a.amplitudes().iter().zip(want.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
    assert!(err < 1e-10, "{err}");
}

#[test]
fn product_formula_plan_reproduces_dense_circuit() {
    let plan = RunPlan {
        times: vec![0.5, 1.0],
        steps_per_time: 100,
        schedule: Schedule::Trotter,
        observables: vec![PauliString::parse(6, "X0").unwrap(), PauliString::parse(6, "Z2Z3").unwrap()],
        truncation: TruncationPolicy::exact(6),
        ..RunPlan::spin_ring(6, 0.8, 21)
    };
    let out = run_plan(&plan).unwrap();
    let h = plan.hamiltonian.build().unwrap();
    for (p, &t) in plan.times.iter().enumerate() {
        let c = build_trotter_circuit(&h, t, (t * 100.0).round() as usize).unwrap();
        let mut d = DenseState::product(&plan.initial).unwrap();
        d.apply_circuit(&c).unwrap();
        for (k, o) in plan.observables.iter().enumerate() {
            let e = out.ensemble(p, k);
            assert_eq!(e.n_samples(), 1);
            assert!((e.mean - d.expectation(o).unwrap()).abs() < 1e-10);
        }
    }
}
