//! Shared gate-stream vocabulary for the simulators.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64 as C64;

use crate::pauli::PauliString;

/// `exp(-i angle/2 * pauli)`.
#[derive(Copy, Clone, Debug)]
pub struct Rotation<'a> {
    pub pauli: &'a PauliString,
    pub angle: f64,
}

/// An ordered sequence of Pauli rotations on a fixed register.
pub trait Circuit {
    fn n_qubits(&self) -> usize;
    fn rotations(&self) -> Box<dyn Iterator<Item = Rotation<'_>> + '_>;
}

/// Single-qubit product-state factors.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum LocalState {
    Zero,
    One,
    Plus,
    Minus,
}

impl LocalState {
    pub fn amplitudes(self) -> [C64; 2] {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        match self {
            LocalState::Zero => [C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
            LocalState::One => [C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
            LocalState::Plus => [C64::new(h, 0.0), C64::new(h, 0.0)],
            LocalState::Minus => [C64::new(h, 0.0), C64::new(-h, 0.0)],
        }
    }

    pub fn symbol(self) -> char {
        match self {
            LocalState::Zero => '0',
            LocalState::One => '1',
            LocalState::Plus => '+',
            LocalState::Minus => '-',
        }
    }
}

/// `|+ ... + - + ... +>` with the flipped site at `n / 2`.
pub fn domain_wall_state(n: usize) -> Vec<LocalState> {
    (0..n).map(|k| if k == n / 2 { LocalState::Minus } else { LocalState::Plus }).collect()
}

/// Parses strings such as `++-+` or `0011`.
pub fn parse_product_state(s: &str) -> Result<Vec<LocalState>, String> {
    s.chars()
        .map(|c| match c {
            '0' => Ok(LocalState::Zero),
            '1' => Ok(LocalState::One),
            '+' => Ok(LocalState::Plus),
            '-' => Ok(LocalState::Minus),
            other => Err(format!("unknown local state `{other}`")),
        })
        .collect()
}

pub struct ProductState(pub Vec<LocalState>);

impl fmt::Display for ProductState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.iter().try_for_each(|s| write!(f, "{}", s.symbol()))
    }
}

impl FromStr for ProductState {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_product_state(s).map(ProductState)
    }
}

/// A plain list of rotations, mostly useful for tests and replay.
#[derive(Clone, Debug)]
pub struct GateList {
    pub n: usize,
    pub gates: Vec<(PauliString, f64)>,
}

impl Circuit for GateList {
    fn n_qubits(&self) -> usize {
        self.n
    }

    fn rotations(&self) -> Box<dyn Iterator<Item = Rotation<'_>> + '_> {
        Box::new(self.gates.iter().map(|(p, a)| Rotation { pauli: p, angle: *a }))
    }
}
