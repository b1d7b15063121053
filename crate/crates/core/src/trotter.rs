//! First-order product formula and the quadratic step-count baseline.

use std::sync::Arc;

use thiserror::Error;

use crate::circuit::{Circuit, Rotation};
use crate::dense::{self, DenseError};
use crate::pauli::{Hamiltonian, PauliString};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrotterError {
    #[error("number of Trotter steps must be at least 1")]
    ZeroSteps,
    #[error("time must be {0}")]
    Time(&'static str),
    #[error("invalid baseline policy")]
    Policy,
    #[error(transparent)]
    Dense(#[from] DenseError),
}

/// `N` repetitions of the `L`-term block, term `k` rotated by `2 c_k T / N`.
#[derive(Clone, Debug)]
pub struct TrotterCircuit {
    n: usize,
    paulis: Arc<[PauliString]>,
    angles: Vec<f64>,
    pub n_steps: usize,
    pub total_time: f64,
}

impl TrotterCircuit {
    pub fn gate_count(&self) -> usize {
        self.n_steps * self.angles.len()
    }

    pub fn step_angles(&self) -> &[f64] {
        &self.angles
    }

    /// Gate record in the sampled-circuit layout with continuous angles.
    pub fn to_record(&self) -> String {
        let mut out = format!("0 1 1 {}\n", self.gate_count());
        for j in 0..self.n_steps {
            for (k, a) in self.angles.iter().enumerate() {
                out.push_str(&format!("{k} {j} {a}\n"));
            }
        }
        out
    }

    /// A single step of the same formula.
    fn one_step(&self) -> TrotterCircuit {
        TrotterCircuit {
            n_steps: 1,
            total_time: self.total_time / self.n_steps as f64,
            ..self.clone()
        }
    }
}

impl Circuit for TrotterCircuit {
    fn n_qubits(&self) -> usize {
        self.n
    }

    fn rotations(&self) -> Box<dyn Iterator<Item = Rotation<'_>> + '_> {
        Box::new((0..self.n_steps).flat_map(move |_| self.paulis.iter().zip(&self.angles).map(|(p, &a)| Rotation { pauli: p, angle: a })))
    }
}

pub fn build_trotter_circuit(h: &Hamiltonian, t: f64, n_steps: usize) -> Result<TrotterCircuit, TrotterError> {
    if n_steps == 0 {
        return Err(TrotterError::ZeroSteps);
    }
    if !(t >= 0.0) || !t.is_finite() {
        return Err(TrotterError::Time("finite and non-negative"));
    }
    let angles = h.terms().iter().map(|term| 2.0 * term.coeff * t / n_steps as f64).collect();
    Ok(TrotterCircuit {
        n: h.n_qubits(),
        paulis: h.paulis().into(),
        angles,
        n_steps,
        total_time: t,
    })
}

/// Step count `N(T) = N_ref (T / dT)^2`, chosen once at a short reference
/// time and extrapolated to keep the accuracy fixed.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct BaselinePolicy {
    pub reference_time: f64,
    pub reference_steps: usize,
}

impl Default for BaselinePolicy {
    fn default() -> Self {
        BaselinePolicy {
            reference_time: 0.1,
            reference_steps: 20,
        }
    }
}

pub fn baseline_steps(policy: &BaselinePolicy, t: f64) -> Result<usize, TrotterError> {
    if !(policy.reference_time > 0.0) || policy.reference_steps == 0 {
        return Err(TrotterError::Policy);
    }
    if !(t > 0.0) || !t.is_finite() {
        return Err(TrotterError::Time("positive"));
    }
    let x = policy.reference_steps as f64 * (t / policy.reference_time).powi(2);
    // (0.2 / 0.1)^2 is not exactly 4 in binary
    let r = x.round();
    let x = if (x - r).abs() <= 1e-9 * r.max(1.0) { r } else { x };
    Ok(x.ceil() as usize)
}

/// Spectral-norm distance between one product-formula step and the exact
/// propagator over `T / N`.
pub fn single_step_error(h: &Hamiltonian, t: f64, n_steps: usize) -> Result<f64, TrotterError> {
    let step = build_trotter_circuit(h, t, n_steps)?.one_step();
    trotter_distance(&step, h)
}

/// Spectral-norm distance between a Trotter circuit and `exp(-i H T)`.
pub fn trotter_distance(circuit: &TrotterCircuit, h: &Hamiltonian) -> Result<f64, TrotterError> {
    let u = dense::circuit_unitary(circuit)?;
    let exact = dense::exact_unitary(h, circuit.total_time)?;
    Ok(dense::spectral_norm(&(u - exact)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::{build_spin_ring, OmegaSpec, Pauli};

    fn xz() -> Hamiltonian {
        Hamiltonian::new(
            1,
            [
                (1.0, PauliString::single(1, 0, Pauli::X).unwrap()),
                (1.0, PauliString::single(1, 0, Pauli::Z).unwrap()),
            ],
        )
        .unwrap()
    }

    #[test]
    fn gate_counts_and_angles() {
        let h = build_spin_ring(4, 1.0, &OmegaSpec::Values(vec![0.0; 4])).unwrap();
        let c = build_trotter_circuit(&h, 1.0, 10).unwrap();
        assert_eq!(c.gate_count(), 120);
        assert_eq!(c.rotations().count(), 120);
        assert!(c.step_angles().iter().all(|&a| (a - 0.2).abs() < 1e-15));
        let z = build_trotter_circuit(&h, 0.0, 3).unwrap();
        assert!(z.rotations().all(|r| r.angle == 0.0));
        assert_eq!(build_trotter_circuit(&h, 1.0, 0).unwrap_err(), TrotterError::ZeroSteps);
    }

    #[test]
    fn single_term_has_no_trotter_error() {
        let h = Hamiltonian::new(1, [(0.8, PauliString::single(1, 0, Pauli::Z).unwrap())]).unwrap();
        for n in [1, 3, 7] {
            let c = build_trotter_circuit(&h, 1.1, n).unwrap();
            assert!(trotter_distance(&c, &h).unwrap() < 1e-13);
        }
        assert!(single_step_error(&h, 1.0, 4).unwrap() < 1e-14);
    }

    #[test]
    fn baseline() {
        let p = BaselinePolicy::default();
        assert_eq!(baseline_steps(&p, 0.1).unwrap(), 20);
        assert_eq!(baseline_steps(&p, 0.2).unwrap(), 80);
        assert_eq!(baseline_steps(&p, 1.0).unwrap(), 2000);
        assert!(baseline_steps(&p, 0.0).is_err());
        assert!(baseline_steps(
            &BaselinePolicy {
                reference_time: 0.0,
                reference_steps: 1
            },
            1.0
        )
        .is_err());
    }

    #[test]
    fn single_step_error_respects_commutator_bound() {
        let h = xz();
        let err = single_step_error(&h, 1.0, 10).unwrap();
        let bound = 1.0 / 200.0 * h.commutator_error_norm().unwrap();
        assert!(err > 0.0 && err <= bound, "{err} vs {bound}");
        let zs = build_spin_ring(4, 0.0, &OmegaSpec::Seed(1)).unwrap();
        assert!(single_step_error(&zs, 2.0, 3).unwrap() < 1e-13);
    }

    #[test]
    fn record_layout() {
        let h = xz();
        let rec = build_trotter_circuit(&h, 1.0, 2).unwrap().to_record();
        let lines: Vec<&str> = rec.lines().collect();
        assert_eq!(lines[0], "0 1 1 4");
        assert_eq!(lines[3], "0 1 1");
    }
}
