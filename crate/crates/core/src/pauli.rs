//! Pauli strings, weighted Pauli-sum Hamiltonians and the spin-ring model.
//!
//! A [`Hamiltonian`] is an ordered list of [`HamTerm`]s. The order is part of
//! its identity: it fixes the gate order inside every product-formula step.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::Rng;
use thiserror::Error;

use crate::dense;
use crate::rng::{stream, Domain};

/// Largest register for which dense commutator norms are evaluated.
pub const COMMUTATOR_DENSE_GUARD: usize = 10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PauliError {
    #[error("site {site} outside a {n}-qubit register")]
    SiteOutOfRange { site: usize, n: usize },
    #[error("site {0} appears twice in a Pauli string")]
    DuplicateSite(usize),
    #[error("malformed Pauli string `{0}`")]
    Malformed(String),
    #[error("qubit count mismatch: expected {expected}, found {found}")]
    QubitMismatch { expected: usize, found: usize },
    #[error("a spin ring needs at least 3 sites, got {0}")]
    RingTooSmall(usize),
    #[error("expected {expected} on-site fields, got {found}")]
    OmegaLength { expected: usize, found: usize },
    #[error("non-finite parameter `{0}`")]
    NonFinite(&'static str),
    #[error("dense evaluation limited to {limit} qubits, got {n}")]
    DenseGuard { n: usize, limit: usize },
    #[error("tolerance must be positive, got {0}")]
    Tolerance(f64),
    #[error("time must be non-negative, got {0}")]
    NegativeTime(f64),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// Single-qubit Pauli operator.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn symbol(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    pub fn from_symbol(c: char) -> Option<Self> {
        match c {
            'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }

    /// Row-major 2x2 matrix.
    pub fn matrix(self) -> [C64; 4] {
        let o = C64::new(0.0, 0.0);
        let l = C64::new(1.0, 0.0);
        let i = C64::new(0.0, 1.0);
        match self {
            Pauli::I => [l, o, o, l],
            Pauli::X => [o, l, l, o],
            Pauli::Y => [o, -i, i, o],
            Pauli::Z => [l, o, o, -l],
        }
    }

    /// `self * other = i^k * result`, returned as `(k mod 4, result)`.
    pub fn mul(self, other: Pauli) -> (u8, Pauli) {
        use Pauli::*;
        match (self, other) {
            (I, p) | (p, I) => (0, p),
            (a, b) if a == b => (0, I),
            (X, Y) => (1, Z),
            (Y, Z) => (1, X),
            (Z, X) => (1, Y),
            (Y, X) => (3, Z),
            (Z, Y) => (3, X),
            (X, Z) => (3, Y),
            _ => unreachable!(),
        }
    }
}

/// Tensor product of single-qubit Paulis on an `n`-qubit register, stored
/// sparsely as sorted `(site, op)` pairs with identities omitted.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PauliString {
    n: usize,
    ops: Vec<(usize, Pauli)>,
}

impl PauliString {
    pub fn new(n: usize, ops: impl IntoIterator<Item = (usize, Pauli)>) -> Result<Self, PauliError> {
        let mut v: Vec<(usize, Pauli)> = Vec::new();
        for (site, p) in ops {
            if site >= n {
                return Err(PauliError::SiteOutOfRange { site, n });
            }
            if p != Pauli::I {
                v.push((site, p));
            }
        }
        v.sort_by_key(|&(s, _)| s);
        if let Some(w) = v.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(PauliError::DuplicateSite(w[0].0));
        }
        Ok(PauliString { n, ops: v })
    }

    pub fn identity(n: usize) -> Self {
        PauliString { n, ops: Vec::new() }
    }

    pub fn single(n: usize, site: usize, p: Pauli) -> Result<Self, PauliError> {
        Self::new(n, [(site, p)])
    }

    pub fn pair(n: usize, a: usize, pa: Pauli, b: usize, pb: Pauli) -> Result<Self, PauliError> {
        Self::new(n, [(a, pa), (b, pb)])
    }

    /// Parses the compact form used in text files, e.g. `X2X3`, `Z0`, or `I`.
    pub fn parse(n: usize, s: &str) -> Result<Self, PauliError> {
        let s = s.trim();
        if s == "I" {
            return Ok(Self::identity(n));
        }
        let bad = || PauliError::Malformed(s.to_string());
        let mut ops = Vec::new();
        let mut chars = s.char_indices().peekable();
        while let Some((_, c)) = chars.next() {
            let p = Pauli::from_symbol(c).ok_or_else(bad)?;
            let mut digits = String::new();
            while let Some(&(_, d)) = chars.peek() {
                if d.is_ascii_digit() {
                    digits.push(d);
                    chars.next();
                } else {
                    break;
                }
            }
            let site: usize = digits.parse().map_err(|_| bad())?;
            ops.push((site, p));
        }
        if ops.is_empty() {
            return Err(bad());
        }
        Self::new(n, ops)
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn ops(&self) -> &[(usize, Pauli)] {
        &self.ops
    }

    pub fn weight(&self) -> usize {
        self.ops.len()
    }

    pub fn is_identity(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.ops.iter().map(|&(s, _)| s)
    }

    pub fn op_at(&self, site: usize) -> Pauli {
        self.ops.binary_search_by_key(&site, |&(s, _)| s).map(|i| self.ops[i].1).unwrap_or(Pauli::I)
    }

    pub fn commutes_with(&self, other: &PauliString) -> bool {
        let anti = self
            .ops
            .iter()
            .filter(|&&(s, p)| {
                let q = other.op_at(s);
                q != Pauli::I && q != p
            })
            .count();
        anti % 2 == 0
    }

    /// Operator product `self * other = i^k * P`, returned as `(k, P)`.
    pub fn mul(&self, other: &PauliString) -> Result<(u8, PauliString), PauliError> {
        if self.n != other.n {
            return Err(PauliError::QubitMismatch {
                expected: self.n,
                found: other.n,
            });
        }
        let mut phase = 0u8;
        let mut ops = Vec::new();
        let sites: std::collections::BTreeSet<usize> = self.support().chain(other.support()).collect();
        for s in sites {
            let (k, p) = self.op_at(s).mul(other.op_at(s));
            phase = (phase + k) % 4;
            if p != Pauli::I {
                ops.push((s, p));
            }
        }
        Ok((phase, PauliString { n: self.n, ops }))
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.ops.is_empty() {
            return write!(f, "I");
        }
        for &(s, p) in &self.ops {
            write!(f, "{}{}", p.symbol(), s)?;
        }
        Ok(())
    }
}

/// `coeff * pauli`; the coefficient is finite and nonzero.
#[derive(Clone, Debug, PartialEq)]
pub struct HamTerm {
    pub coeff: f64,
    pub pauli: PauliString,
}

/// Provenance of a spin-ring Hamiltonian, echoed in its text header.
#[derive(Clone, Debug, PartialEq)]
pub struct RingParams {
    pub coupling: f64,
    pub seed: Option<u64>,
}

/// How the on-site fields of the spin ring are chosen.
#[derive(Clone, Debug, PartialEq)]
pub enum OmegaSpec {
    Values(Vec<f64>),
    /// Uniform draws from [-1, 1] keyed by this seed.
    Seed(u64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Hamiltonian {
    n: usize,
    terms: Vec<HamTerm>,
    ring: Option<RingParams>,
}

impl Hamiltonian {
    /// Builds a Hamiltonian from `(coeff, pauli)` pairs, dropping zero
    /// coefficients and keeping the given order.
    pub fn new(n: usize, terms: impl IntoIterator<Item = (f64, PauliString)>) -> Result<Self, PauliError> {
        let mut kept = Vec::new();
        for (coeff, pauli) in terms {
            if !coeff.is_finite() {
                return Err(PauliError::NonFinite("coefficient"));
            }
            if pauli.n_qubits() != n {
                return Err(PauliError::QubitMismatch {
                    expected: n,
                    found: pauli.n_qubits(),
                });
            }
            if coeff != 0.0 {
                kept.push(HamTerm { coeff, pauli });
            }
        }
        Ok(Hamiltonian { n, terms: kept, ring: None })
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &[HamTerm] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn ring_params(&self) -> Option<&RingParams> {
        self.ring.as_ref()
    }

    pub fn paulis(&self) -> Vec<PauliString> {
        self.terms.iter().map(|t| t.pauli.clone()).collect()
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.iter().fold(0.0, |m, t| m.max(t.coeff.abs()))
    }

    /// Sum of absolute coefficients.
    pub fn coeff_l1_norm(&self) -> f64 {
        self.terms.iter().map(|t| t.coeff.abs()).sum()
    }

    pub fn scaled(&self, factor: f64) -> Result<Self, PauliError> {
        let mut h = Hamiltonian::new(self.n, self.terms.iter().map(|t| (t.coeff * factor, t.pauli.clone())))?;
        h.ring = self.ring.clone();
        Ok(h)
    }

    /// Trotterization error norm: the sum over terms `a` of the spectral norm
    /// of `sum_{b > a} [c_b h_b, c_a h_a]`.
    pub fn commutator_error_norm(&self) -> Result<f64, PauliError> {
        if self.n > COMMUTATOR_DENSE_GUARD {
            return Err(PauliError::DenseGuard {
                n: self.n,
                limit: COMMUTATOR_DENSE_GUARD,
            });
        }
        let mut total = 0.0;
        for (a, ta) in self.terms.iter().enumerate() {
            let mut parts: Vec<(C64, PauliString)> = Vec::new();
            for tb in &self.terms[a + 1..] {
                if tb.pauli.commutes_with(&ta.pauli) {
                    continue;
                }
                // [Pb, Pa] = 2 Pb Pa for anticommuting strings
                let (k, p) = tb.pauli.mul(&ta.pauli)?;
                let phase = C64::new(0.0, 1.0).powu(k as u32);
                parts.push((phase * 2.0 * tb.coeff * ta.coeff, p));
            }
            if parts.is_empty() {
                continue;
            }
            let mut qubits: Vec<usize> = parts.iter().flat_map(|(_, p)| p.support().collect::<Vec<_>>()).collect();
            qubits.sort_unstable();
            qubits.dedup();
            let m: DMatrix<C64> = dense::pauli_sum_matrix_on(&parts, &qubits);
            total += dense::spectral_norm(&m);
        }
        Ok(total)
    }

    /// Upper bound on the first-order Trotter gate count reaching precision
    /// `eps` at time `t`: `L t^2 ||c||_T^2 / (2 eps)`.
    pub fn trotter_gate_count_bound(&self, t: f64, eps: f64) -> Result<f64, PauliError> {
        if !(eps > 0.0) {
            return Err(PauliError::Tolerance(eps));
        }
        if !(t >= 0.0) {
            return Err(PauliError::NegativeTime(t));
        }
        if t == 0.0 {
            return Ok(0.0);
        }
        let norm = self.commutator_error_norm()?;
        Ok(0.5 * self.len() as f64 * t * t * norm / eps)
    }

    /// Serializes to the line format: header `n J seed`, then `coeff pauli`
    /// per term. Unknown header fields are written as `-`.
    pub fn to_text(&self) -> String {
        let (j, seed) = match &self.ring {
            Some(r) => (r.coupling.to_string(), r.seed.map_or("-".to_string(), |s| s.to_string())),
            None => ("-".to_string(), "-".to_string()),
        };
        let mut out = format!("{} {} {}\n", self.n, j, seed);
        for t in &self.terms {
            out.push_str(&format!("{} {}\n", t.coeff, t.pauli));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, PauliError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (hl, header) = lines.next().ok_or(PauliError::Parse {
            line: 1,
            msg: "missing header".into(),
        })?;
        let perr = |line: usize, msg: &str| PauliError::Parse { line, msg: msg.to_string() };
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(perr(hl, "header must be `n J seed`"));
        }
        let n: usize = fields[0].parse().map_err(|_| perr(hl, "bad qubit count"))?;
        let coupling = match fields[1] {
            "-" => None,
            s => Some(s.parse::<f64>().map_err(|_| perr(hl, "bad coupling"))?),
        };
        let seed = match fields[2] {
            "-" => None,
            s => Some(s.parse::<u64>().map_err(|_| perr(hl, "bad seed"))?),
        };
        let mut terms = Vec::new();
        for (ln, line) in lines {
            let mut it = line.split_whitespace();
            let (Some(c), Some(p), None) = (it.next(), it.next(), it.next()) else {
                return Err(perr(ln, "term must be `coeff pauli`"));
            };
            let coeff: f64 = c.parse().map_err(|_| perr(ln, "bad coefficient"))?;
            let pauli = PauliString::parse(n, p).map_err(|e| perr(ln, &e.to_string()))?;
            terms.push((coeff, pauli));
        }
        let mut h = Hamiltonian::new(n, terms)?;
        h.ring = coupling.map(|coupling| RingParams { coupling, seed });
        Ok(h)
    }
}

impl FromStr for Hamiltonian {
    type Err = PauliError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Hamiltonian::from_text(s)
    }
}

/// On-site fields drawn uniformly from [-1, 1] for a seeded ring.
pub fn sample_omega(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = stream(seed, Domain::Omega, 0);
    (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect()
}

/// Heisenberg ring `sum_k w_k Z_k + J (X_k X_{k+1} + Y_k Y_{k+1} + Z_k Z_{k+1})`
/// with periodic boundary. Term order: fields by site, then bonds by index,
/// each bond as X, Y, Z.
pub fn build_spin_ring(n: usize, coupling: f64, omega: &OmegaSpec) -> Result<Hamiltonian, PauliError> {
    if n < 3 {
        return Err(PauliError::RingTooSmall(n));
    }
    if !coupling.is_finite() {
        return Err(PauliError::NonFinite("coupling"));
    }
    let (fields, seed) = match omega {
        OmegaSpec::Values(v) => {
            if v.len() != n {
                return Err(PauliError::OmegaLength { expected: n, found: v.len() });
            }
            if v.iter().any(|w| !w.is_finite()) {
                return Err(PauliError::NonFinite("omega"));
            }
            (v.clone(), None)
        }
        OmegaSpec::Seed(s) => (sample_omega(n, *s), Some(*s)),
    };
    let mut terms = Vec::with_capacity(4 * n);
    for (k, &w) in fields.iter().enumerate() {
        terms.push((w, PauliString::single(n, k, Pauli::Z)?));
    }
    for k in 0..n {
        let next = (k + 1) % n;
        for p in [Pauli::X, Pauli::Y, Pauli::Z] {
            terms.push((coupling, PauliString::pair(n, k, p, next, p)?));
        }
    }
    let mut h = Hamiltonian::new(n, terms)?;
    h.ring = Some(RingParams { coupling, seed });
    Ok(h)
}
