use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use proptest::prelude::*;
use tepai::circuit::{GateList, LocalState};
use tepai::dense::{pauli_sum_matrix_on, DenseState};
use tepai::estimator::{aggregate, EnsembleConfig, SampleRecord};
use tepai::pai::{self, PaiConfig, PaiMode};
use tepai::pauli::{build_spin_ring, OmegaSpec, Pauli, PauliString};
use tepai::rng::{self, Domain};
use tepai::{CostLedger, MpsState, TruncationPolicy};

fn pauli() -> impl Strategy<Value = Pauli> {
    prop_oneof![Just(Pauli::X), Just(Pauli::Y), Just(Pauli::Z)]
}

fn local_state() -> impl Strategy<Value = LocalState> {
    prop_oneof![Just(LocalState::Zero), Just(LocalState::One), Just(LocalState::Plus), Just(LocalState::Minus)]
}

/// A rotation on one site or on an arbitrary (possibly distant) pair.
fn rotation(n: usize) -> impl Strategy<Value = (PauliString, f64)> {
    (0..n, 0..n, pauli(), pauli(), any::<bool>(), -PI..PI).prop_map(move |(a, b, p, q, two, angle)| {
        let ps = if two && a != b {
            PauliString::pair(n, a, p, b, q).unwrap()
        } else {
            PauliString::single(n, a, p).unwrap()
        };
        (ps, angle)
    })
}

fn circuit(max_n: usize, max_len: usize) -> impl Strategy<Value = (Vec<LocalState>, GateList)> {
    (2..=max_n).prop_flat_map(move |n| {
        (proptest::collection::vec(local_state(), n), proptest::collection::vec(rotation(n), 0..max_len))
            .prop_map(move |(init, gates)| (init, GateList { n, gates }))
    })
}

fn full_matrix(p: &PauliString) -> nalgebra::DMatrix<C64> {
    let all: Vec<usize> = (0..p.n_qubits()).collect();
    pauli_sum_matrix_on(&[(C64::new(1.0, 0.0), p.clone())], &all)
}

fn pauli_string(n: usize) -> impl Strategy<Value = PauliString> {
    proptest::collection::vec(prop_oneof![Just(None), pauli().prop_map(Some)], n)
        .prop_map(move |ops| PauliString::new(n, ops.into_iter().enumerate().filter_map(|(i, p)| p.map(|p| (i, p)))).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pauli_product_matches_matrices(a in pauli_string(3), b in pauli_string(3)) {
        let (k, c) = a.mul(&b).unwrap();
        let phase = C64::i().powu(k as u32);
        let want = full_matrix(&a) * full_matrix(&b);
        let got = full_matrix(&c) * phase;
        prop_assert!((want - got).norm() < 1e-12);
        let ab = full_matrix(&a) * full_matrix(&b);
        let ba = full_matrix(&b) * full_matrix(&a);
        prop_assert_eq!(a.commutes_with(&b), (ab - ba).norm() < 1e-12);
        prop_assert_eq!(a.commutes_with(&b), b.commutes_with(&a));
    }

    #[test]
    fn pauli_text_round_trips(p in pauli_string(5)) {
        prop_assume!(!p.is_identity());
        let text: String = p.ops().iter().map(|(i, q)| format!("{}{i}", q.symbol())).collect();
        prop_assert_eq!(PauliString::parse(5, &text).unwrap(), p);
    }

    #[test]
    fn gamma_sums_to_one(delta in 1e-4..(PI - 1e-3), frac in -1.0f64..1.0) {
        let theta = frac * delta;
        let g = pai::gamma_coeffs(theta, delta).unwrap();
        prop_assert!((g.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let p = pai::variant_probabilities(theta, delta).unwrap();
        prop_assert!(p.iter().all(|&x| x >= 0.0));
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let norm = pai::single_gate_norm(theta, delta).unwrap();
        prop_assert!((norm - g.iter().map(|x| x.abs()).sum::<f64>()).abs() < 1e-12);
        let w = pai::no_pi_weights(theta, delta).unwrap();
        prop_assert!(w.iter().all(|&x| x >= 0.0) && (w[0] + w[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mps_matches_dense_without_truncation((init, c) in circuit(7, 24)) {
        let mut m = MpsState::product(&init).unwrap();
        let mut ledger = CostLedger::default();
        m.run_circuit(&c, &TruncationPolicy::exact(c.n), &mut ledger).unwrap();
        let mut d = DenseState::product(&init).unwrap();
        d.apply_circuit(&c).unwrap();
        let err: f64 = m.to_amplitudes().iter().zip(d.amplitudes()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        prop_assert!(err < 1e-10, "amplitude error {err}");
        prop_assert_eq!(m.discarded_weight(), 0.0);
    }

    #[test]
    fn truncation_keeps_norm_and_bond_cap((init, c) in circuit(8, 40), chi in 1usize..6) {
        let n = c.n;
        let mut m = MpsState::product(&init).unwrap();
        let mut ledger = CostLedger::default();
        m.run_circuit(&c, &TruncationPolicy::with_chi(chi), &mut ledger).unwrap();
        prop_assert!((m.norm_sqr() - 1.0).abs() < 1e-10);
        for (i, &d) in m.bond_dims().iter().enumerate() {
            let left = 1usize << (i + 1).min(20);
            let right = 1usize << (n - i - 1).min(20);
            prop_assert!(d <= left.min(right).min(chi), "bond {i} = {d}");
        }
        prop_assert!(ledger.within_bound());
        prop_assert!(ledger.chi_max <= 2 * chi.max(1));
    }

    #[test]
    fn gates_act_only_on_their_support((init, c) in circuit(6, 12), g in (0usize..6, 0usize..6, pauli(), pauli(), -PI..PI)) {
        let n = c.n;
        let (a, b) = (g.0 % n, g.1 % n);
        let gate = if a == b { PauliString::single(n, a, g.2).unwrap() } else { PauliString::pair(n, a, g.2, b, g.3).unwrap() };
        let mut m = MpsState::product(&init).unwrap();
        let policy = TruncationPolicy::exact(n);
        let mut ledger = CostLedger::default();
        m.run_circuit(&c, &policy, &mut ledger).unwrap();
        let outside: Vec<PauliString> = (0..n)
            .filter(|s| *s != a && *s != b)
            .flat_map(|s| [Pauli::X, Pauli::Y, Pauli::Z].map(|p| PauliString::single(n, s, p).unwrap()))
            .collect();
        let before: Vec<f64> = outside.iter().map(|p| m.expectation(p).unwrap()).collect();
        m.apply_pauli_rotation(&gate, g.4, &policy, &mut ledger).unwrap();
        for (p, x) in outside.iter().zip(before) {
            prop_assert!((m.expectation(p).unwrap() - x).abs() < 1e-10);
        }
    }

    #[test]
    fn aggregate_ignores_record_order(vals in proptest::collection::vec((-1.0f64..1.0, any::<bool>()), 2..40), seed in any::<u64>()) {
        let cfg = EnsembleConfig { delta: 0.1, n_steps: 10, total_time: 1.0, mode: Some(PaiMode::Unbiased) };
        let records: Vec<SampleRecord> = vals
            .iter()
            .enumerate()
            .map(|(i, &(x, neg))| SampleRecord::new(i as u64, cfg, if neg { -1 } else { 1 }, 1.3, x, 5, CostLedger::default()))
            .collect();
        let mut shuffled = records.clone();
        use rand::seq::SliceRandom;
        shuffled.shuffle(&mut rng::stream(seed, Domain::Test, 0));
        let (a, b) = (aggregate(records).unwrap(), aggregate(shuffled).unwrap());
        prop_assert_eq!(a.mean.to_bits(), b.mean.to_bits());
        prop_assert_eq!(a.var_o.to_bits(), b.var_o.to_bits());
        prop_assert_eq!(a.var_v.to_bits(), b.var_v.to_bits());
        prop_assert_eq!(a.records, b.records);
    }

    #[test]
    fn sampled_circuits_respect_mode(seed in any::<u64>(), k in 4i32..9) {
        let h = build_spin_ring(5, 0.4, &OmegaSpec::Seed(seed)).unwrap();
        let delta = PI / 2f64.powi(k);
        let unb = PaiConfig { delta, n_steps: 200, total_time: 0.5, mode: PaiMode::Unbiased };
        let nopi = PaiConfig { mode: PaiMode::NoPi, ..unb };
        let a = pai::sample_circuit(&h, &unb, &mut rng::stream(seed, Domain::Circuit, 0)).unwrap();
        let a2 = pai::sample_circuit(&h, &unb, &mut rng::stream(seed, Domain::Circuit, 0)).unwrap();
        prop_assert_eq!(a.to_record(0), a2.to_record(0));
        prop_assert!(a.weight_norm >= 1.0);
        prop_assert_eq!(a.weight_norm, pai::circuit_weight_norm(&h, &unb).unwrap());
        let b = pai::sample_circuit(&h, &nopi, &mut rng::stream(seed, Domain::Circuit, 0)).unwrap();
        prop_assert_eq!(b.weight_norm, 1.0);
        prop_assert_eq!(b.overall_sign, 1);
        prop_assert_eq!(b.pi_count(), 0);
        prop_assert!(b.gates.iter().all(|g| g.variant.angle(delta).abs() == delta));
    }

    #[test]
    fn snapshots_round_trip((init, c) in circuit(6, 16)) {
        let mut m = MpsState::product(&init).unwrap();
        m.run_circuit(&c, &TruncationPolicy::with_chi(3), &mut CostLedger::default()).unwrap();
        let mut buf = Vec::new();
        m.write_snapshot(&mut buf).unwrap();
        let back = MpsState::read_snapshot(buf.as_slice()).unwrap();
        prop_assert_eq!(back.to_amplitudes(), m.to_amplitudes());
        prop_assert_eq!(back.discarded_weight(), m.discarded_weight());
    }
}
