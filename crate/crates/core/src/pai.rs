//! Probabilistic angle interpolation: quasiprobability coefficients for a
//! single Pauli rotation, random circuit variants of a product formula, and
//! the closed-form gate-count and overhead limits.
//!
//! Every rotation `R(theta) = exp(-i theta/2 P)` with `|theta| <= delta` is
//! replaced at random by one of three settings: the identity, a rotation by
//! `sign(theta) * delta`, or a rotation by `pi`. Weighting each outcome by
//! the coefficient norm and sign makes the ensemble average equal to the
//! original channel. The no-pi mode keeps only the first two settings with
//! linear interpolation weights, trading a small bias for unit overhead.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Geometric};
use thiserror::Error;

use crate::circuit::{Circuit, Rotation};
use crate::pauli::{Hamiltonian, PauliString};

/// Slack allowed when an angle computed as `2 c T / N` lands on `delta`.
const ANGLE_SLACK: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PaiError {
    #[error("delta must lie in (0, pi], got {0}")]
    DeltaRange(f64),
    #[error("rotation angle {theta} exceeds delta {delta}")]
    AngleExceedsDelta { theta: f64, delta: f64 },
    #[error("delta = pi admits no decomposition of angle {0}")]
    DegenerateDelta(f64),
    #[error("delta = pi puts the overhead limit on a tangent pole")]
    TangentPole,
    #[error("number of steps must be at least 1")]
    ZeroSteps,
    #[error("invalid {0}")]
    Invalid(&'static str),
    #[error("malformed circuit record: {0}")]
    Record(String),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum PaiMode {
    Unbiased,
    NoPi,
}

impl fmt::Display for PaiMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PaiMode::Unbiased => "unbiased",
            PaiMode::NoPi => "no_pi",
        })
    }
}

#[derive(Copy, Clone, Debug, PartialEq)]
pub struct PaiConfig {
    pub delta: f64,
    pub n_steps: usize,
    pub total_time: f64,
    pub mode: PaiMode,
}

impl PaiConfig {
    /// Rotation angle of each term within one step.
    pub fn angle(&self, coeff: f64) -> f64 {
        2.0 * coeff * self.total_time / self.n_steps as f64
    }

    pub fn validate(&self, h: &Hamiltonian) -> Result<(), PaiError> {
        check_delta(self.delta)?;
        if self.n_steps == 0 {
            return Err(PaiError::ZeroSteps);
        }
        if !(self.total_time >= 0.0) || !self.total_time.is_finite() {
            return Err(PaiError::Invalid("total time"));
        }
        let theta = self.angle(h.max_abs_coeff());
        if theta.abs() > self.delta * (1.0 + ANGLE_SLACK) {
            return Err(PaiError::AngleExceedsDelta { theta, delta: self.delta });
        }
        Ok(())
    }
}

fn check_delta(delta: f64) -> Result<(), PaiError> {
    if !(delta > 0.0 && delta <= PI) {
        return Err(PaiError::DeltaRange(delta));
    }
    Ok(())
}

/// Quasiprobability coefficients `(identity, delta, pi)` for a rotation by
/// `|theta|`. They sum to one; the first two are non-negative and the last
/// is non-positive.
pub fn gamma_coeffs(theta: f64, delta: f64) -> Result<[f64; 3], PaiError> {
    check_delta(delta)?;
    let t = theta.abs();
    if t > delta * (1.0 + ANGLE_SLACK) {
        return Err(PaiError::AngleExceedsDelta { theta, delta });
    }
    let t = t.min(delta);
    if delta == PI {
        // B and C coincide; only the endpoints decompose.
        return if t == 0.0 {
            Ok([1.0, 0.0, 0.0])
        } else if t == PI {
            Ok([0.0, 1.0, 0.0])
        } else {
            Err(PaiError::DegenerateDelta(theta))
        };
    }
    let (hd, ht) = (delta / 2.0, t / 2.0);
    let g1 = ht.cos() * (hd - ht).sin() / hd.sin();
    let g2 = t.sin() / delta.sin();
    let g3 = -ht.sin() * (hd - ht).sin() / hd.cos();
    Ok([g1, g2, g3])
}

/// `|gamma_l| / ||gamma||_1`.
pub fn variant_probabilities(theta: f64, delta: f64) -> Result<[f64; 3], PaiError> {
    let g = gamma_coeffs(theta, delta)?;
    let norm: f64 = g.iter().map(|x| x.abs()).sum();
    Ok([g[0].abs() / norm, g[1].abs() / norm, g[2].abs() / norm])
}

/// Single-gate quasiprobability norm `||gamma(|theta|)||_1`.
pub fn single_gate_norm(theta: f64, delta: f64) -> Result<f64, PaiError> {
    Ok(gamma_coeffs(theta, delta)?.iter().map(|x| x.abs()).sum())
}

/// Interpolation weights `(1 - lambda, lambda)` with `lambda = |theta| / delta`.
pub fn no_pi_weights(theta: f64, delta: f64) -> Result<[f64; 2], PaiError> {
    check_delta(delta)?;
    let t = theta.abs();
    if t > delta * (1.0 + ANGLE_SLACK) {
        return Err(PaiError::AngleExceedsDelta { theta, delta });
    }
    let lambda = (t / delta).min(1.0);
    Ok([1.0 - lambda, lambda])
}

fn slot_probabilities(theta: f64, cfg: &PaiConfig) -> Result<[f64; 3], PaiError> {
    match cfg.mode {
        PaiMode::Unbiased => variant_probabilities(theta, cfg.delta),
        PaiMode::NoPi => {
            let [a, b] = no_pi_weights(theta, cfg.delta)?;
            Ok([a, b, 0.0])
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum VariantKind {
    Identity,
    Delta,
    Pi,
}

/// Chosen setting for one slot. `sign` is the direction of the delta
/// rotation, i.e. the sign of the replaced angle.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub struct GateVariant {
    pub kind: VariantKind,
    pub sign: i8,
}

impl GateVariant {
    pub fn angle(&self, delta: f64) -> f64 {
        match self.kind {
            VariantKind::Identity => 0.0,
            VariantKind::Delta => self.sign as f64 * delta,
            VariantKind::Pi => PI,
        }
    }

    fn token(&self) -> &'static str {
        match (self.kind, self.sign) {
            (VariantKind::Identity, _) => "I",
            (VariantKind::Delta, s) if s < 0 => "-D",
            (VariantKind::Delta, _) => "+D",
            (VariantKind::Pi, _) => "P",
        }
    }

    fn from_token(tok: &str) -> Option<Self> {
        let (kind, sign) = match tok {
            "I" => (VariantKind::Identity, 1),
            "+D" => (VariantKind::Delta, 1),
            "-D" => (VariantKind::Delta, -1),
            "P" => (VariantKind::Pi, 1),
            _ => return None,
        };
        Some(GateVariant { kind, sign })
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct SampledGate {
    pub term: usize,
    pub step: usize,
    pub variant: GateVariant,
}

/// One random variant of the product formula. Identity slots are omitted.
#[derive(Clone, Debug)]
pub struct SampledCircuit {
    n: usize,
    paulis: Arc<[PauliString]>,
    delta: f64,
    pub gates: Vec<SampledGate>,
    pub overall_sign: i8,
    pub weight_norm: f64,
}

impl SampledCircuit {
    /// Number of non-identity gates.
    pub fn nu(&self) -> usize {
        self.gates.len()
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn pi_count(&self) -> usize {
        self.gates.iter().filter(|g| g.variant.kind == VariantKind::Pi).count()
    }

    /// Audit record: `sample_id sign weight_norm nu`, then one `k j variant`
    /// line per gate.
    pub fn to_record(&self, sample_id: u64) -> String {
        let mut out = format!("{} {} {} {}\n", sample_id, self.overall_sign, self.weight_norm, self.nu());
        for g in &self.gates {
            out.push_str(&format!("{} {} {}\n", g.term, g.step, g.variant.token()));
        }
        out
    }

    /// Rebuilds a circuit from [`SampledCircuit::to_record`] output.
    pub fn from_record(text: &str, paulis: Arc<[PauliString]>, n: usize, delta: f64) -> Result<(u64, Self), PaiError> {
        let err = |m: &str| PaiError::Record(m.to_string());
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header: Vec<&str> = lines.next().ok_or_else(|| err("empty"))?.split_whitespace().collect();
        if header.len() != 4 {
            return Err(err("header must be `sample_id sign weight_norm nu`"));
        }
        let sample_id: u64 = header[0].parse().map_err(|_| err("sample id"))?;
        let overall_sign: i8 = header[1].parse().map_err(|_| err("sign"))?;
        let weight_norm: f64 = header[2].parse().map_err(|_| err("weight norm"))?;
        let nu: usize = header[3].parse().map_err(|_| err("gate count"))?;
        let mut gates = Vec::with_capacity(nu);
        for line in lines {
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 3 {
                return Err(err("gate line must be `k j variant`"));
            }
            let term: usize = f[0].parse().map_err(|_| err("term index"))?;
            if term >= paulis.len() {
                return Err(err("term index out of range"));
            }
            let step: usize = f[1].parse().map_err(|_| err("step index"))?;
            let variant = GateVariant::from_token(f[2]).ok_or_else(|| err("variant"))?;
            gates.push(SampledGate { term, step, variant });
        }
        if gates.len() != nu {
            return Err(err("gate count does not match header"));
        }
        let c = SampledCircuit {
            n,
            paulis,
            delta,
            gates,
            overall_sign,
            weight_norm,
        };
        if c.overall_sign != if c.pi_count().is_multiple_of(2) { 1 } else { -1 } {
            return Err(err("sign inconsistent with pi count"));
        }
        Ok((sample_id, c))
    }
}

impl Circuit for SampledCircuit {
    fn n_qubits(&self) -> usize {
        self.n
    }

    fn rotations(&self) -> Box<dyn Iterator<Item = Rotation<'_>> + '_> {
        Box::new(self.gates.iter().map(|g| Rotation {
            pauli: &self.paulis[g.term],
            angle: g.variant.angle(self.delta),
        }))
    }
}

/// Finite-N circuit overhead `prod_{k,j} ||gamma(|theta_kj|)||_1`; exactly 1
/// in no-pi mode.
pub fn circuit_weight_norm(h: &Hamiltonian, cfg: &PaiConfig) -> Result<f64, PaiError> {
    cfg.validate(h)?;
    if cfg.mode == PaiMode::NoPi {
        return Ok(1.0);
    }
    let mut log_norm = 0.0;
    for t in h.terms() {
        let g = gamma_coeffs(cfg.angle(t.coeff), cfg.delta)?;
        // ||gamma||_1 = 1 - 2 gamma_3 because the coefficients sum to one
        log_norm += (-2.0 * g[2]).ln_1p();
    }
    Ok((log_norm * cfg.n_steps as f64).exp())
}

/// Exact finite-N mean of the sampled gate count.
pub fn expected_gate_count(h: &Hamiltonian, cfg: &PaiConfig) -> Result<f64, PaiError> {
    cfg.validate(h)?;
    let mut per_step = 0.0;
    for t in h.terms() {
        let p = slot_probabilities(cfg.angle(t.coeff), cfg)?;
        per_step += p[1] + p[2];
    }
    Ok(per_step * cfg.n_steps as f64)
}

fn signed(x: f64) -> i8 {
    if x < 0.0 {
        -1
    } else {
        1
    }
}

fn finish(h: &Hamiltonian, cfg: &PaiConfig, gates: Vec<SampledGate>) -> Result<SampledCircuit, PaiError> {
    let pis = gates.iter().filter(|g| g.variant.kind == VariantKind::Pi).count();
    Ok(SampledCircuit {
        n: h.n_qubits(),
        paulis: h.paulis().into(),
        delta: cfg.delta,
        gates,
        overall_sign: if pis.is_multiple_of(2) { 1 } else { -1 },
        weight_norm: circuit_weight_norm(h, cfg)?,
    })
}

/// Draws one circuit variant. Each of the `N * L` slots is independent; runs
/// of identity slots are skipped geometrically, which has the same law as
/// testing every slot (see [`sample_circuit_per_slot`]).
pub fn sample_circuit<R: Rng + ?Sized>(h: &Hamiltonian, cfg: &PaiConfig, rng: &mut R) -> Result<SampledCircuit, PaiError> {
    cfg.validate(h)?;
    let mut gates = Vec::new();
    for (k, t) in h.terms().iter().enumerate() {
        let theta = cfg.angle(t.coeff);
        let p = slot_probabilities(theta, cfg)?;
        let hit = p[1] + p[2];
        if hit <= 0.0 {
            continue;
        }
        let pi_given_hit = p[2] / hit;
        let skip = Geometric::new(hit.min(1.0)).map_err(|_| PaiError::Invalid("slot probability"))?;
        let mut j = 0u64;
        loop {
            j = j.saturating_add(skip.sample(rng));
            if j >= cfg.n_steps as u64 {
                break;
            }
            let kind = if pi_given_hit > 0.0 && rng.random::<f64>() < pi_given_hit {
                VariantKind::Pi
            } else {
                VariantKind::Delta
            };
            gates.push(SampledGate {
                term: k,
                step: j as usize,
                variant: GateVariant { kind, sign: signed(theta) },
            });
            j += 1;
        }
    }
    gates.sort_by_key(|g| (g.step, g.term));
    finish(h, cfg, gates)
}

/// Reference sampler testing every slot in circuit order.
pub fn sample_circuit_per_slot<R: Rng + ?Sized>(h: &Hamiltonian, cfg: &PaiConfig, rng: &mut R) -> Result<SampledCircuit, PaiError> {
    cfg.validate(h)?;
    let probs: Vec<[f64; 3]> = h
        .terms()
        .iter()
        .map(|t| slot_probabilities(cfg.angle(t.coeff), cfg))
        .collect::<Result<_, _>>()?;
    let mut gates = Vec::new();
    for j in 0..cfg.n_steps {
        for (k, (t, p)) in h.terms().iter().zip(&probs).enumerate() {
            let u: f64 = rng.random();
            let kind = if u < p[0] {
                continue;
            } else if u < p[0] + p[1] {
                VariantKind::Delta
            } else {
                VariantKind::Pi
            };
            gates.push(SampledGate {
                term: k,
                step: j,
                variant: GateVariant {
                    kind,
                    sign: signed(cfg.angle(t.coeff)),
                },
            });
        }
    }
    finish(h, cfg, gates)
}

/// `csc(delta) (3 - cos delta) ||c||_1 T`, the N -> infinity mean gate count.
pub fn expected_gate_count_inf(delta: f64, c_norm: f64, t: f64) -> Result<f64, PaiError> {
    check_delta(delta)?;
    if !(t >= 0.0) {
        return Err(PaiError::Invalid("time"));
    }
    if t == 0.0 || c_norm == 0.0 {
        return Ok(0.0);
    }
    if delta == PI {
        return Ok(f64::INFINITY);
    }
    Ok((3.0 - delta.cos()) / delta.sin() * c_norm * t)
}

/// `exp(2 tan(delta/2) ||c||_1 T)`, the N -> infinity overhead.
pub fn overhead_norm_inf(delta: f64, c_norm: f64, t: f64) -> Result<f64, PaiError> {
    check_delta(delta)?;
    if delta == PI {
        return Err(PaiError::TangentPole);
    }
    if !(t >= 0.0) {
        return Err(PaiError::Invalid("time"));
    }
    Ok((2.0 * (delta / 2.0).tan() * c_norm * t).exp())
}

/// Samples needed for precision `eps`: `ceil(overhead^2 Var[v] / eps^2)`.
pub fn sample_count_bound(overhead: f64, config_var: f64, eps: f64) -> Result<u64, PaiError> {
    if !(eps > 0.0) {
        return Err(PaiError::Invalid("precision"));
    }
    if !(0.0..=1.0).contains(&config_var) {
        return Err(PaiError::Invalid("configuration variance"));
    }
    if !(overhead >= 1.0) {
        return Err(PaiError::Invalid("overhead"));
    }
    let x = overhead * overhead * config_var / (eps * eps);
    let r = x.round();
    // 0.25 / 0.05^2 evaluates a hair below 100
    let x = if (x - r).abs() <= 1e-9 * r.max(1.0) { r } else { x };
    Ok(x.ceil() as u64)
}
