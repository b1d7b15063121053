//! Exact statevector reference for small registers.
//!
//! Qubit `k` is bit `k` of the basis index. Everything here is exact up to
//! floating point and exists to check the tensor-network and sampling code.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::circuit::{Circuit, LocalState};
use crate::pauli::{Hamiltonian, Pauli, PauliString};

/// Largest register for statevector work.
pub const MAX_DENSE_QUBITS: usize = 12;
/// Largest register for full operator matrices.
pub const MAX_DENSE_OPERATOR_QUBITS: usize = 10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DenseError {
    #[error("dense simulation limited to {limit} qubits, got {n}")]
    Guard { n: usize, limit: usize },
    #[error("qubit count mismatch: state has {state}, operand has {operand}")]
    QubitMismatch { state: usize, operand: usize },
    #[error("empty product state")]
    Empty,
}

fn guard(n: usize, limit: usize) -> Result<(), DenseError> {
    if n > limit {
        Err(DenseError::Guard { n, limit })
    } else {
        Ok(())
    }
}

/// `P = i^ny X^x Z^z` as bit masks over the given qubit positions.
fn masks(p: &PauliString, position: impl Fn(usize) -> usize) -> (usize, usize, u8) {
    let (mut x, mut z, mut ny) = (0usize, 0usize, 0u8);
    for &(site, op) in p.ops() {
        let bit = 1usize << position(site);
        match op {
            Pauli::X => x |= bit,
            Pauli::Z => z |= bit,
            Pauli::Y => {
                x |= bit;
                z |= bit;
                ny += 1;
            }
            Pauli::I => {}
        }
    }
    (x, z, ny % 4)
}

fn i_pow(k: u8) -> C64 {
    match k % 4 {
        0 => C64::new(1.0, 0.0),
        1 => C64::new(0.0, 1.0),
        2 => C64::new(-1.0, 0.0),
        _ => C64::new(0.0, -1.0),
    }
}

/// Adds `coeff * P |amps>` into `out`.
fn accumulate_pauli(amps: &[C64], p: &PauliString, coeff: C64, out: &mut [C64], position: impl Fn(usize) -> usize) {
    let (x, z, ny) = masks(p, position);
    let c = coeff * i_pow(ny);
    for (b, &a) in amps.iter().enumerate() {
        let sign = if (b & z).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
        out[b ^ x] += c * sign * a;
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DenseState {
    n: usize,
    amps: Vec<C64>,
}

impl DenseState {
    pub fn product(spec: &[LocalState]) -> Result<Self, DenseError> {
        if spec.is_empty() {
            return Err(DenseError::Empty);
        }
        let n = spec.len();
        guard(n, MAX_DENSE_QUBITS)?;
        let amps = (0..1usize << n)
            .map(|b| spec.iter().enumerate().map(|(k, s)| s.amplitudes()[(b >> k) & 1]).product())
            .collect();
        Ok(DenseState { n, amps })
    }

    pub fn from_amplitudes(n: usize, amps: Vec<C64>) -> Result<Self, DenseError> {
        guard(n, MAX_DENSE_QUBITS)?;
        assert_eq!(amps.len(), 1 << n, "amplitude vector length");
        Ok(DenseState { n, amps })
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn inner(&self, other: &DenseState) -> C64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    fn check(&self, n: usize) -> Result<(), DenseError> {
        if n != self.n {
            Err(DenseError::QubitMismatch { state: self.n, operand: n })
        } else {
            Ok(())
        }
    }

    fn pauli_image(&self, p: &PauliString) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.amps.len()];
        accumulate_pauli(&self.amps, p, C64::new(1.0, 0.0), &mut out, |s| s);
        out
    }

    pub fn apply_pauli(&mut self, p: &PauliString) -> Result<(), DenseError> {
        self.check(p.n_qubits())?;
        self.amps = self.pauli_image(p);
        Ok(())
    }

    /// Applies `exp(-i angle/2 P)`.
    pub fn apply_rotation(&mut self, p: &PauliString, angle: f64) -> Result<(), DenseError> {
        self.check(p.n_qubits())?;
        let image = self.pauli_image(p);
        let (c, s) = ((angle / 2.0).cos(), (angle / 2.0).sin());
        let mis = C64::new(0.0, -s);
        for (a, pa) in self.amps.iter_mut().zip(image) {
            *a = *a * c + mis * pa;
        }
        Ok(())
    }

    pub fn apply_circuit(&mut self, circuit: &dyn Circuit) -> Result<(), DenseError> {
        self.check(circuit.n_qubits())?;
        for r in circuit.rotations() {
            self.apply_rotation(r.pauli, r.angle)?;
        }
        Ok(())
    }

    pub fn expectation(&self, p: &PauliString) -> Result<f64, DenseError> {
        self.check(p.n_qubits())?;
        let image = self.pauli_image(p);
        Ok(self.amps.iter().zip(image).map(|(a, b)| (a.conj() * b).re).sum())
    }

    fn apply_hamiltonian(&self, h: &Hamiltonian, v: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); v.len()];
        for t in h.terms() {
            accumulate_pauli(v, &t.pauli, C64::new(t.coeff, 0.0), &mut out, |s| s);
        }
        out
    }

    /// Applies `exp(-i H t)` by a Taylor series on time slices short enough
    /// that each series converges to machine precision.
    pub fn exact_evolve(&mut self, h: &Hamiltonian, t: f64) -> Result<(), DenseError> {
        self.check(h.n_qubits())?;
        if t == 0.0 || h.is_empty() {
            return Ok(());
        }
        let slices = (h.coeff_l1_norm() * t.abs() / 0.5).ceil().max(1.0) as usize;
        let tau = t / slices as f64;
        let minus_i_tau = C64::new(0.0, -tau);
        for _ in 0..slices {
            let mut term = self.amps.clone();
            let mut acc = self.amps.clone();
            for m in 1..64 {
                let next = self.apply_hamiltonian(h, &term);
                let scale = minus_i_tau / m as f64;
                term = next.into_iter().map(|x| x * scale).collect();
                let size: f64 = term.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
                for (a, x) in acc.iter_mut().zip(&term) {
                    *a += *x;
                }
                if size < 1e-18 {
                    break;
                }
            }
            self.amps = acc;
        }
        Ok(())
    }
}

/// Matrix of `sum_j c_j P_j` restricted to `qubits` (which must cover every
/// support); the operator is the identity elsewhere.
pub fn pauli_sum_matrix_on(parts: &[(C64, PauliString)], qubits: &[usize]) -> DMatrix<C64> {
    let dim = 1usize << qubits.len();
    let position = |site: usize| qubits.iter().position(|&q| q == site).expect("support outside qubit list");
    let mut m = DMatrix::<C64>::zeros(dim, dim);
    let mut basis = vec![C64::new(0.0, 0.0); dim];
    let mut col = vec![C64::new(0.0, 0.0); dim];
    for b in 0..dim {
        basis.iter_mut().for_each(|x| *x = C64::new(0.0, 0.0));
        col.iter_mut().for_each(|x| *x = C64::new(0.0, 0.0));
        basis[b] = C64::new(1.0, 0.0);
        for (c, p) in parts {
            accumulate_pauli(&basis, p, *c, &mut col, position);
        }
        m.set_column(b, &nalgebra::DVector::from_column_slice(&col));
    }
    m
}

pub fn hamiltonian_matrix(h: &Hamiltonian) -> Result<DMatrix<C64>, DenseError> {
    guard(h.n_qubits(), MAX_DENSE_OPERATOR_QUBITS)?;
    let parts: Vec<(C64, PauliString)> = h.terms().iter().map(|t| (C64::new(t.coeff, 0.0), t.pauli.clone())).collect();
    let qubits: Vec<usize> = (0..h.n_qubits()).collect();
    Ok(pauli_sum_matrix_on(&parts, &qubits))
}

/// `exp(-i H t)` through the Hermitian eigendecomposition of `H`.
pub fn exact_unitary(h: &Hamiltonian, t: f64) -> Result<DMatrix<C64>, DenseError> {
    let m = hamiltonian_matrix(h)?;
    let eig = SymmetricEigen::new(m);
    let v = &eig.eigenvectors;
    let phases = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| C64::new(0.0, -l * t).exp()));
    Ok(v * phases * v.adjoint())
}

/// Unitary of a circuit, column by column.
pub fn circuit_unitary(circuit: &dyn Circuit) -> Result<DMatrix<C64>, DenseError> {
    let n = circuit.n_qubits();
    guard(n, MAX_DENSE_OPERATOR_QUBITS)?;
    let dim = 1usize << n;
    let mut u = DMatrix::<C64>::zeros(dim, dim);
    for b in 0..dim {
        let mut amps = vec![C64::new(0.0, 0.0); dim];
        amps[b] = C64::new(1.0, 0.0);
        let mut s = DenseState { n, amps };
        s.apply_circuit(circuit)?;
        u.set_column(b, &nalgebra::DVector::from_column_slice(&s.amps));
    }
    Ok(u)
}

pub fn spectral_norm(m: &DMatrix<C64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    // nalgebra's complex SVD is unreliable on rank-deficient input
    faer::Mat::<C64>::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
        .singular_values()
        .expect("SVD converges")
        .into_iter()
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::GateList;
    use crate::pauli::{build_spin_ring, OmegaSpec};
    use std::f64::consts::PI;

    fn ps(n: usize, s: &str) -> PauliString {
        PauliString::parse(n, s).unwrap()
    }

    #[test]
    fn product_state_expectations() {
        let s = DenseState::product(&[LocalState::Zero, LocalState::Plus, LocalState::Minus]).unwrap();
        assert!((s.expectation(&ps(3, "Z0")).unwrap() - 1.0).abs() < 1e-14);
        assert!((s.expectation(&ps(3, "X1")).unwrap() - 1.0).abs() < 1e-14);
        assert!((s.expectation(&ps(3, "X2")).unwrap() + 1.0).abs() < 1e-14);
        assert!((s.expectation(&ps(3, "I")).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn y_phases() {
        let mut s = DenseState::product(&[LocalState::Zero]).unwrap();
        s.apply_pauli(&ps(1, "Y0")).unwrap();
        assert_eq!(s.amplitudes()[1], C64::new(0.0, 1.0));
    }

    #[test]
    fn z_rotation_on_plus() {
        let h = Hamiltonian::new(1, [(1.0, ps(1, "Z0"))]).unwrap();
        let mut s = DenseState::product(&[LocalState::Plus]).unwrap();
        s.exact_evolve(&h, PI / 4.0).unwrap();
        assert!(s.expectation(&ps(1, "X0")).unwrap().abs() < 1e-13);
        let mut s = DenseState::product(&[LocalState::Plus]).unwrap();
        s.exact_evolve(&h, 0.3).unwrap();
        assert!((s.expectation(&ps(1, "X0")).unwrap() - 0.6f64.cos()).abs() < 1e-13);
    }

    #[test]
    fn exact_evolve_zero_time_is_identity() {
        let h = build_spin_ring(4, 1.0, &OmegaSpec::Seed(1)).unwrap();
        let s0 = DenseState::product(&[LocalState::Plus, LocalState::Zero, LocalState::Minus, LocalState::One]).unwrap();
        let mut s = s0.clone();
        s.exact_evolve(&h, 0.0).unwrap();
        assert_eq!(s, s0);
    }

    #[test]
    fn exact_evolve_composes_and_is_unitary() {
        let h = build_spin_ring(5, 0.7, &OmegaSpec::Seed(4)).unwrap();
        let s0 = DenseState::product(&crate::circuit::domain_wall_state(5)).unwrap();
        let mut a = s0.clone();
        a.exact_evolve(&h, 0.9).unwrap();
        let mut b = s0.clone();
        b.exact_evolve(&h, 0.4).unwrap();
        b.exact_evolve(&h, 0.5).unwrap();
        let diff: f64 = a.amps.iter().zip(&b.amps).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt();
        assert!(diff < 1e-10, "{diff}");
        assert!((a.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn taylor_evolution_matches_eigendecomposition() {
        let h = build_spin_ring(4, 0.9, &OmegaSpec::Seed(8)).unwrap();
        let u = exact_unitary(&h, 1.3).unwrap();
        let s0 = DenseState::product(&crate::circuit::domain_wall_state(4)).unwrap();
        let mut s = s0.clone();
        s.exact_evolve(&h, 1.3).unwrap();
        let v = u * nalgebra::DVector::from_column_slice(&s0.amps);
        let diff: f64 = v.iter().zip(&s.amps).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt();
        assert!(diff < 1e-11, "{diff}");
    }

    #[test]
    fn commuting_hamiltonian_matches_any_product_formula() {
        let h = build_spin_ring(4, 0.0, &OmegaSpec::Seed(2)).unwrap();
        let gates = GateList {
            n: 4,
            gates: h.terms().iter().map(|t| (t.pauli.clone(), 2.0 * t.coeff * 0.8)).collect(),
        };
        let diff = spectral_norm(&(circuit_unitary(&gates).unwrap() - exact_unitary(&h, 0.8).unwrap()));
        assert!(diff < 1e-12);
    }

    #[test]
    fn guards() {
        let spec = vec![LocalState::Zero; 13];
        assert!(matches!(DenseState::product(&spec), Err(DenseError::Guard { .. })));
        assert_eq!(DenseState::product(&[]), Err(DenseError::Empty));
        let h = build_spin_ring(11, 1.0, &OmegaSpec::Seed(0)).unwrap();
        assert!(hamiltonian_matrix(&h).is_err());
    }
}
