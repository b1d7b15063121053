//! Cross-checks of the simulators against the dense oracle.
//!
//! The coefficient function is injectable so a deliberately broken variant
//! can be shown to fail the enumeration check.

use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::circuit::{domain_wall_state, GateList};
use crate::dense::{self, DenseState};
use crate::mps::{CostLedger, MpsState, TruncationPolicy};
use crate::pai::{self, PaiError};
use crate::pauli::{build_spin_ring, OmegaSpec, Pauli, PauliString};
use crate::rng::{self, Domain, StreamRng};
use crate::trotter::{build_trotter_circuit, trotter_distance};

pub type GammaFn = fn(f64, f64) -> Result<[f64; 3], PaiError>;

#[derive(Clone, Debug, PartialEq)]
pub enum Status {
    Pass,
    Fail,
    /// The check could not be judged, for example because truncation made
    /// the comparison meaningless.
    Skipped(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct PropertyResult {
    pub name: &'static str,
    pub status: Status,
    pub detail: String,
}

impl fmt::Display for PropertyResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.status {
            Status::Pass => write!(f, "PASS {}: {}", self.name, self.detail),
            Status::Fail => write!(f, "FAIL {}: {}", self.name, self.detail),
            Status::Skipped(why) => write!(f, "SKIP {}: {} ({why})", self.name, self.detail),
        }
    }
}

#[derive(Clone, Debug)]
pub struct VerifyOptions {
    pub gamma: GammaFn,
    /// Bond cap for the MPS comparison; `None` means exact.
    pub chi_cut: Option<usize>,
    pub seed: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            gamma: pai::gamma_coeffs,
            chi_cut: None,
            seed: 0,
        }
    }
}

fn rotation_matrix(p: &DMatrix<C64>, angle: f64) -> DMatrix<C64> {
    let id = DMatrix::<C64>::identity(p.nrows(), p.ncols());
    id * C64::new((angle / 2.0).cos(), 0.0) + p * C64::new(0.0, -(angle / 2.0).sin())
}

fn random_density(rng: &mut StreamRng, dim: usize) -> DMatrix<C64> {
    let g = DMatrix::from_fn(dim, dim, |_, _| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)));
    let rho = &g * g.adjoint();
    let tr = rho.trace();
    rho / tr
}

fn random_pauli2(rng: &mut StreamRng) -> PauliString {
    let all = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];
    loop {
        let (a, b) = (all[rng.random_range(0..4)], all[rng.random_range(0..4)]);
        let p = PauliString::new(2, [(0, a), (1, b)].into_iter().filter(|(_, p)| *p != Pauli::I)).expect("valid sites");
        if !p.is_identity() {
            return p;
        }
    }
}

/// Largest deviations over random trials of
/// `sum_l gamma_l S_l(rho)` from `R(theta) rho R(theta)^dagger` and of
/// `sum_l gamma_l` from one.
pub fn gamma_reconstruction(gamma: GammaFn, trials: usize, seed: u64) -> Result<(f64, f64), PaiError> {
    let mut rng = rng::stream(seed, Domain::Test, 1);
    let (mut channel_err, mut sum_err) = (0.0f64, 0.0f64);
    for _ in 0..trials {
        let delta = rng.random_range(1e-3..std::f64::consts::PI * 0.999);
        let theta = rng.random_range(-delta..=delta);
        let p = dense::pauli_sum_matrix_on(&[(C64::new(1.0, 0.0), random_pauli2(&mut rng))], &[0, 1]);
        let rho = random_density(&mut rng, 4);
        let g = gamma(theta.abs(), delta)?;
        let apply = |u: &DMatrix<C64>| u * &rho * u.adjoint();
        let target = apply(&rotation_matrix(&p, theta));
        let settings = [
            rho.clone(),
            apply(&rotation_matrix(&p, theta.signum() * delta)),
            apply(&rotation_matrix(&p, std::f64::consts::PI)),
        ];
        let mix = settings
            .iter()
            .zip(g)
            .fold(DMatrix::<C64>::zeros(4, 4), |acc, (s, w)| acc + s * C64::new(w, 0.0));
        channel_err = channel_err.max((mix - target).iter().map(|z| z.norm()).fold(0.0, f64::max));
        sum_err = sum_err.max((g.iter().sum::<f64>() - 1.0).abs());
    }
    Ok((channel_err, sum_err))
}

/// Weighted sum over all `3^nu` gate settings of a short circuit, and the
/// expectation of the continuous-angle circuit it should reproduce.
pub fn enumerate_settings(gamma: GammaFn, circuit: &GateList, delta: f64, initial: &DenseState, observable: &PauliString) -> Result<(f64, f64), PaiError> {
    let nu = circuit.gates.len();
    let coeffs = circuit.gates.iter().map(|(_, th)| gamma(th.abs(), delta)).collect::<Result<Vec<_>, _>>()?;
    let mut total = 0.0;
    for code in 0..3usize.pow(nu as u32) {
        let mut weight = 1.0;
        let mut state = initial.clone();
        let mut c = code;
        for ((p, th), g) in circuit.gates.iter().zip(&coeffs) {
            let l = c % 3;
            c /= 3;
            weight *= g[l];
            let angle = [0.0, th.signum() * delta, std::f64::consts::PI][l];
            state.apply_rotation(p, angle).expect("qubit count matches");
        }
        total += weight * state.expectation(observable).expect("qubit count matches");
    }
    let mut exact = initial.clone();
    exact.apply_circuit(circuit).expect("qubit count matches");
    Ok((total, exact.expectation(observable).expect("qubit count matches")))
}

/// The fixed three-gate, two-qubit circuit used by the enumeration check.
pub fn enumeration_fixture() -> (GateList, f64, DenseState, PauliString) {
    let p = |s| PauliString::parse(2, s).expect("valid string");
    let gates = GateList {
        n: 2,
        gates: vec![(p("X0X1"), 0.3), (p("Z0"), -0.2), (p("Y0Y1"), 0.25)],
    };
    let init = DenseState::product(&domain_wall_state(2)).expect("two qubits");
    (gates, std::f64::consts::PI / 8.0, init, p("X1"))
}

/// Least-squares slope of `log y` against `log x`.
pub fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (lx, ly): (Vec<f64>, Vec<f64>) = points.iter().map(|(x, y)| (x.ln(), y.ln())).unzip();
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let cov: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    cov / var
}

/// Product-formula distances from the exact propagator for each `N`.
pub fn trotter_errors(n: usize, coupling: f64, t: f64, steps: &[usize], seed: u64) -> Vec<(f64, f64)> {
    let h = build_spin_ring(n, coupling, &OmegaSpec::Seed(seed)).expect("valid ring");
    steps
        .iter()
        .map(|&s| {
            let c = build_trotter_circuit(&h, t, s).expect("positive steps");
            (s as f64, trotter_distance(&c, &h).expect("within dense guard"))
        })
        .collect()
}

/// A random circuit of weight-one and neighbouring or ring-closing
/// weight-two rotations.
pub fn random_circuit(rng: &mut StreamRng, n: usize, len: usize) -> GateList {
    let paulis = [Pauli::X, Pauli::Y, Pauli::Z];
    let gates = (0..len)
        .map(|_| {
            let a = rng.random_range(0..n);
            let p = paulis[rng.random_range(0..3)];
            let angle = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
            let ps = if n > 1 && rng.random_bool(0.6) {
                let b = (a + 1) % n;
                PauliString::pair(n, a, p, b, paulis[rng.random_range(0..3)]).expect("distinct sites")
            } else {
                PauliString::single(n, a, p).expect("site in range")
            };
            (ps, angle)
        })
        .collect();
    GateList { n, gates }
}

/// Largest single-qubit observable deviation between MPS and dense over
/// `circuits` random circuits, plus the total discarded weight.
pub fn mps_vs_dense(n: usize, circuits: usize, len: usize, policy: &TruncationPolicy, seed: u64) -> (f64, f64) {
    let mut rng = rng::stream(seed, Domain::Test, 2);
    let (mut worst, mut discarded) = (0.0f64, 0.0);
    for _ in 0..circuits {
        let c = random_circuit(&mut rng, n, len);
        let mut m = MpsState::product(&domain_wall_state(n)).expect("non-empty");
        m.run_circuit(&c, policy, &mut CostLedger::default()).expect("weight at most two");
        let mut d = DenseState::product(&domain_wall_state(n)).expect("within guard");
        d.apply_circuit(&c).expect("qubit count matches");
        for k in 0..n {
            for p in [Pauli::X, Pauli::Y, Pauli::Z] {
                let o = PauliString::single(n, k, p).expect("site in range");
                worst = worst.max((m.expectation(&o).expect("same n") - d.expectation(&o).expect("same n")).abs());
            }
        }
        discarded += m.discarded_weight();
    }
    (worst, discarded)
}

fn judge(name: &'static str, ok: bool, detail: String) -> PropertyResult {
    PropertyResult {
        name,
        status: if ok { Status::Pass } else { Status::Fail },
        detail,
    }
}

/// Runs the whole battery.
pub fn run_battery(opts: &VerifyOptions) -> Vec<PropertyResult> {
    let mut out = Vec::new();

    out.push(match gamma_reconstruction(opts.gamma, 100, opts.seed) {
        Ok((ch, sum)) => judge(
            "gamma-reconstruction",
            ch <= 1e-12 && sum <= 1e-12,
            format!("channel error {ch:.2e}, sum error {sum:.2e}"),
        ),
        Err(e) => judge("gamma-reconstruction", false, e.to_string()),
    });

    let (circuit, delta, init, obs) = enumeration_fixture();
    out.push(match enumerate_settings(opts.gamma, &circuit, delta, &init, &obs) {
        Ok((sum, exact)) => judge(
            "setting-enumeration",
            (sum - exact).abs() <= 1e-12,
            format!("weighted sum {sum:.15}, exact {exact:.15}"),
        ),
        Err(e) => judge("setting-enumeration", false, e.to_string()),
    });

    let errs = trotter_errors(6, 1.0, 1.0, &[10, 20, 40, 80], opts.seed);
    let slope = log_log_slope(&errs);
    out.push(judge("trotter-convergence", (slope + 1.0).abs() <= 0.15, format!("log-log slope {slope:.3}")));

    let n = 6;
    let policy = match opts.chi_cut {
        Some(c) => TruncationPolicy::with_chi(c),
        None => TruncationPolicy::exact(n),
    };
    let (worst, discarded) = mps_vs_dense(n, 50, 40, &policy, opts.seed);
    let detail = format!("max deviation {worst:.2e} at chi_cut {}", policy.chi_cut);
    out.push(if discarded > 0.0 {
        PropertyResult {
            name: "mps-vs-dense",
            status: Status::Skipped(format!("truncation discarded weight {discarded:.2e}")),
            detail,
        }
    } else {
        judge("mps-vs-dense", worst <= 1e-8, detail)
    });
    out
}
