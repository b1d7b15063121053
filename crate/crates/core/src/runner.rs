//! Experiment schedules over a worker pool.
//!
//! A plan evolves one state with the product formula up to a switch step,
//! then fans it out to independent TE-PAI continuations, one circuit per
//! `(time point, sample)` task. Every task draws from its own random stream,
//! so results do not depend on the number of workers.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Deserialize;
use thiserror::Error;

use crate::circuit::{domain_wall_state, parse_product_state, LocalState};
use crate::estimator::{self, EnsembleConfig, EnsembleResult, EstimatorError, SampleRecord, SignedMixture};
use crate::mps::{CostLedger, MpsError, MpsState, TruncationPolicy};
use crate::pai::{self, PaiConfig, PaiError, PaiMode};
use crate::pauli::{build_spin_ring, Hamiltonian, OmegaSpec, Pauli, PauliError, PauliString};
use crate::rng::{self, Domain};
use crate::trotter::{build_trotter_circuit, TrotterError};

#[derive(Debug, Error)]
pub enum PlanError {
    #[error("invalid plan: {0}")]
    Invalid(String),
    #[error("config: {0}")]
    Config(#[from] toml::de::Error),
    #[error(transparent)]
    Pauli(#[from] PauliError),
    #[error(transparent)]
    Pai(#[from] PaiError),
    #[error(transparent)]
    Trotter(#[from] TrotterError),
    #[error(transparent)]
    Mps(#[from] MpsError),
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
    #[error("worker pool: {0}")]
    Pool(String),
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, PlanError> {
    Err(PlanError::Invalid(msg.into()))
}

#[derive(Clone, Debug, PartialEq)]
pub struct HamiltonianSpec {
    pub n: usize,
    pub coupling: f64,
    pub omega: OmegaSpec,
}

impl HamiltonianSpec {
    pub fn build(&self) -> Result<Hamiltonian, PauliError> {
        build_spin_ring(self.n, self.coupling, &self.omega)
    }
}

#[derive(Copy, Clone, Debug, PartialEq)]
pub enum SwitchRule {
    AtTime(f64),
    /// First step at which the largest bond reaches this value.
    BondThreshold(usize),
}

#[derive(Copy, Clone, Debug, PartialEq)]
pub enum Schedule {
    Trotter,
    TePai(PaiMode),
    Hybrid { switch: SwitchRule, mode: PaiMode },
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunPlan {
    pub hamiltonian: HamiltonianSpec,
    pub initial: Vec<LocalState>,
    pub observables: Vec<PauliString>,
    /// Increasing grid points, each a whole number of steps.
    pub times: Vec<f64>,
    /// Product-formula steps per unit time, shared by both segments.
    pub steps_per_time: usize,
    pub schedule: Schedule,
    pub delta: f64,
    pub truncation: TruncationPolicy,
    pub samples: usize,
    pub workers: usize,
    pub seed: u64,
    pub keep_snapshots: bool,
}

impl RunPlan {
    /// Domain-wall initial state, `X_0` observable, fields seeded by `seed`.
    pub fn spin_ring(n: usize, coupling: f64, seed: u64) -> Self {
        RunPlan {
            hamiltonian: HamiltonianSpec {
                n,
                coupling,
                omega: OmegaSpec::Seed(seed),
            },
            initial: domain_wall_state(n),
            observables: vec![PauliString::single(n, 0, Pauli::X).expect("site in range")],
            times: vec![1.0],
            steps_per_time: 1000,
            schedule: Schedule::TePai(PaiMode::Unbiased),
            delta: PI / 128.0,
            truncation: TruncationPolicy::default(),
            samples: 100,
            workers: 1,
            seed,
            keep_snapshots: false,
        }
    }

    fn step_of(&self, t: f64) -> Result<usize, PlanError> {
        let x = t * self.steps_per_time as f64;
        let s = x.round();
        if !(t >= 0.0) || (x - s).abs() > 1e-6 * s.max(1.0) {
            return invalid(format!(
                "time {t} is not a whole number of steps at {} steps per unit time",
                self.steps_per_time
            ));
        }
        Ok(s as usize)
    }

    /// Grid step counts, checked to increase strictly.
    pub fn grid_steps(&self) -> Result<Vec<usize>, PlanError> {
        if self.times.is_empty() {
            return invalid("empty time grid");
        }
        let steps = self.times.iter().map(|&t| self.step_of(t)).collect::<Result<Vec<_>, _>>()?;
        if steps.windows(2).any(|w| w[1] <= w[0]) {
            return invalid("time grid must increase strictly");
        }
        Ok(steps)
    }

    /// Rejects infeasible plans before any compute.
    pub fn validate(&self) -> Result<Hamiltonian, PlanError> {
        let h = self.hamiltonian.build()?;
        if self.initial.len() != h.n_qubits() {
            return invalid(format!("initial state has {} sites for {} qubits", self.initial.len(), h.n_qubits()));
        }
        if self.observables.is_empty() {
            return invalid("no observables");
        }
        if let Some(o) = self.observables.iter().find(|o| o.n_qubits() != h.n_qubits()) {
            return invalid(format!("observable {o} is on {} qubits", o.n_qubits()));
        }
        if self.steps_per_time == 0 {
            return invalid("steps_per_time must be positive");
        }
        if self.truncation.chi_cut == 0 {
            return Err(MpsError::Policy.into());
        }
        if self.samples == 0 {
            return invalid("samples must be positive");
        }
        if self.workers == 0 {
            return invalid("workers must be positive");
        }
        self.grid_steps()?;
        if let Schedule::Hybrid {
            switch: SwitchRule::AtTime(ts),
            ..
        } = self.schedule
        {
            self.step_of(ts)?;
        }
        if let Schedule::Hybrid {
            switch: SwitchRule::BondThreshold(0),
            ..
        } = self.schedule
        {
            return invalid("bond threshold must be positive");
        }
        if !matches!(self.schedule, Schedule::Trotter) {
            // any TE-PAI segment uses the same per-step angles
            let cfg = PaiConfig {
                delta: self.delta,
                n_steps: 1,
                total_time: 1.0 / self.steps_per_time as f64,
                mode: PaiMode::Unbiased,
            };
            cfg.validate(&h)?;
        }
        Ok(h)
    }
}

/// Per-sample cost of one TE-PAI continuation.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleCost {
    pub point: usize,
    pub sample_id: u64,
    pub nu: u64,
    pub ledger: CostLedger,
}

impl SampleCost {
    pub fn wall_seconds(&self) -> f64 {
        self.ledger.wall.as_secs_f64()
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct CostReport {
    pub samples: Vec<SampleCost>,
    /// The deterministic product-formula segment, run once.
    pub prefix: CostLedger,
}

impl CostReport {
    /// `C_tot`: summed wall time of all circuit samples, in seconds.
    pub fn c_tot(&self) -> f64 {
        self.samples.iter().map(SampleCost::wall_seconds).sum()
    }

    pub fn proxy_total(&self) -> u64 {
        self.samples.iter().map(|s| s.ledger.sum_chi_cubed).sum()
    }

    pub fn deepest(&self) -> f64 {
        self.samples.iter().map(SampleCost::wall_seconds).fold(0.0, f64::max)
    }

    /// Time to solution under ideal parallelisation.
    pub fn tts(&self, workers: usize) -> Result<f64, PlanError> {
        if workers == 0 {
            return invalid("worker count must be positive");
        }
        Ok(self.c_tot() / workers as f64)
    }

    /// Comma-separated `sample_id, nu, sum_chi_cubed, wall_ms, chi_max`.
    pub fn table(&self) -> String {
        let mut out = String::from("point,sample_id,nu,sum_chi_cubed,wall_ms,chi_max\n");
        for s in &self.samples {
            let _ = writeln!(
                out,
                "{},{},{},{},{:.3},{}",
                s.point,
                s.sample_id,
                s.nu,
                s.ledger.sum_chi_cubed,
                s.wall_seconds() * 1e3,
                s.ledger.chi_max
            );
        }
        out
    }
}

#[derive(Copy, Clone, Debug, PartialEq)]
pub struct TtsRow {
    pub workers: usize,
    pub tts: f64,
    /// `C_tot` relative to the supplied serial reference cost.
    pub serial_ratio: Option<f64>,
}

pub fn tts_tradeoff(report: &CostReport, workers: &[usize], reference_cost: Option<f64>) -> Result<Vec<TtsRow>, PlanError> {
    let c = report.c_tot();
    workers
        .iter()
        .map(|&w| {
            Ok(TtsRow {
                workers: w,
                tts: report.tts(w)?,
                serial_ratio: reference_cost.map(|r| c / r),
            })
        })
        .collect()
}

/// Where the product-formula segment ended.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct SwitchInfo {
    pub step: usize,
    pub time: f64,
    /// False when a bond threshold was never met on the grid.
    pub reached: bool,
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub times: Vec<f64>,
    pub observables: Vec<PauliString>,
    /// `ensembles[point][observable]`.
    pub ensembles: Vec<Vec<EnsembleResult>>,
    pub cost: CostReport,
    pub switch: SwitchInfo,
    /// State handed from the product formula to the TE-PAI segment.
    pub switch_state: MpsState,
    /// Retained final states per point when the plan asks for them.
    pub mixtures: Vec<Option<SignedMixture>>,
}

impl RunOutput {
    pub fn ensemble(&self, point: usize, observable: usize) -> &EnsembleResult {
        &self.ensembles[point][observable]
    }

    /// Results table for one observable.
    pub fn results_table(&self, observable: usize) -> String {
        let rows: Vec<(f64, &EnsembleResult)> = self.times.iter().zip(&self.ensembles).map(|(&t, e)| (t, &e[observable])).collect();
        estimator::results_table(&rows)
    }
}

fn deterministic_point(state: &MpsState, observables: &[PauliString], steps: usize, t: f64, ledger: &CostLedger) -> Result<Vec<EnsembleResult>, PlanError> {
    let config = EnsembleConfig {
        delta: 0.0,
        n_steps: steps,
        total_time: t,
        mode: None,
    };
    observables
        .iter()
        .map(|o| {
            let rec = SampleRecord::new(0, config, 1, 1.0, state.expectation(o)?, ledger.gate_count, ledger.clone());
            Ok(estimator::aggregate(vec![rec])?)
        })
        .collect()
}

struct TaskOut {
    records: Vec<SampleRecord>,
    cost: SampleCost,
    state: Option<MpsState>,
}

pub fn run_plan(plan: &RunPlan) -> Result<RunOutput, PlanError> {
    let h = plan.validate()?;
    let steps = plan.grid_steps()?;
    let last = *steps.last().expect("non-empty grid");
    let r = plan.steps_per_time as f64;

    let switch_target = match plan.schedule {
        Schedule::Trotter => Some(last),
        Schedule::TePai(_) => Some(0),
        Schedule::Hybrid {
            switch: SwitchRule::AtTime(ts),
            ..
        } => Some(plan.step_of(ts)?.min(last)),
        Schedule::Hybrid {
            switch: SwitchRule::BondThreshold(_),
            ..
        } => None,
    };
    let threshold = match plan.schedule {
        Schedule::Hybrid {
            switch: SwitchRule::BondThreshold(chi),
            ..
        } => Some(chi),
        _ => None,
    };
    let mode = match plan.schedule {
        Schedule::Trotter => None,
        Schedule::TePai(m) | Schedule::Hybrid { mode: m, .. } => Some(m),
    };

    // product-formula segment, one step at a time
    let one_step = build_trotter_circuit(&h, 1.0 / r, 1)?;
    let mut state = MpsState::product(&plan.initial)?;
    let mut prefix = CostLedger::default();
    let mut ensembles: Vec<Vec<EnsembleResult>> = Vec::with_capacity(steps.len());
    let mut step = 0;
    let mut reached = true;
    let mut next_point = 0;
    loop {
        while next_point < steps.len() && steps[next_point] == step {
            ensembles.push(deterministic_point(&state, &plan.observables, step, plan.times[next_point], &prefix)?);
            next_point += 1;
        }
        let done = match (switch_target, threshold) {
            (Some(s), _) => step >= s,
            (None, Some(chi)) => state.max_bond() >= chi,
            (None, None) => unreachable!(),
        };
        if done || step >= last {
            if !done {
                reached = false;
            }
            break;
        }
        state.run_circuit(&one_step, &plan.truncation, &mut prefix)?;
        step += 1;
    }
    let switch = SwitchInfo {
        step,
        time: step as f64 / r,
        reached,
    };
    let switch_state = state;

    // TE-PAI continuations for the remaining grid points
    let mut cost = CostReport { samples: Vec::new(), prefix };
    let mut mixtures: Vec<Option<SignedMixture>> = vec![None; ensembles.len()];
    if let Some(mode) = mode.filter(|_| next_point < steps.len()) {
        let first_point = next_point;
        let tasks: Vec<(usize, usize)> = (first_point..steps.len()).flat_map(|p| (0..plan.samples).map(move |s| (p, s))).collect();
        let run_task = |&(point, sample): &(usize, usize)| -> Result<TaskOut, PlanError> {
            let n_steps = steps[point] - switch.step;
            let cfg = PaiConfig {
                delta: plan.delta,
                n_steps,
                total_time: n_steps as f64 / r,
                mode,
            };
            let mut rng = rng::stream(plan.seed, Domain::Circuit, rng::task_index(point, sample));
            let circuit = pai::sample_circuit(&h, &cfg, &mut rng)?;
            let mut s = switch_state.clone();
            let mut ledger = CostLedger::default();
            s.run_circuit(&circuit, &plan.truncation, &mut ledger)?;
            let config = EnsembleConfig {
                delta: cfg.delta,
                n_steps,
                total_time: cfg.total_time,
                mode: Some(mode),
            };
            let nu = circuit.nu() as u64;
            let records = plan
                .observables
                .iter()
                .map(|o| {
                    Ok(SampleRecord::new(
                        sample as u64,
                        config,
                        circuit.overall_sign,
                        circuit.weight_norm,
                        s.expectation(o)?,
                        nu,
                        ledger.clone(),
                    ))
                })
                .collect::<Result<Vec<_>, PlanError>>()?;
            let cost = SampleCost {
                point,
                sample_id: sample as u64,
                nu,
                ledger,
            };
            Ok(TaskOut {
                records,
                cost,
                state: plan.keep_snapshots.then_some(s),
            })
        };
        let outputs: Vec<TaskOut> = if plan.workers == 1 {
            tasks.iter().map(run_task).collect::<Result<_, _>>()?
        } else {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(plan.workers)
                .build()
                .map_err(|e| PlanError::Pool(e.to_string()))?;
            pool.install(|| tasks.par_iter().map(run_task).collect::<Result<_, _>>())?
        };
        let mut outputs = outputs.into_iter();
        for _ in first_point..steps.len() {
            let chunk: Vec<TaskOut> = outputs.by_ref().take(plan.samples).collect();
            let per_obs = (0..plan.observables.len())
                .map(|k| estimator::aggregate(chunk.iter().map(|t| t.records[k].clone()).collect()))
                .collect::<Result<Vec<_>, _>>()?;
            let states: Option<Vec<MpsState>> = chunk.iter().map(|t| t.state.clone()).collect();
            mixtures.push(match states {
                Some(st) => Some(SignedMixture::from_ensemble(&per_obs[0], Some(st))?),
                None => None,
            });
            cost.samples.extend(chunk.into_iter().map(|t| t.cost));
            ensembles.push(per_obs);
        }
    }
    Ok(RunOutput {
        times: plan.times.clone(),
        observables: plan.observables.clone(),
        ensembles,
        cost,
        switch,
        switch_state,
        mixtures,
    })
}

/// All `3n` single-qubit Pauli observables.
pub fn single_qubit_paulis(n: usize) -> Vec<PauliString> {
    (0..n)
        .flat_map(|k| [Pauli::X, Pauli::Y, Pauli::Z].map(|p| PauliString::single(n, k, p).expect("site in range")))
        .collect()
}

/// Mean absolute difference over observables between a truncated run and
/// a reference that differs only in its truncation policy.
pub fn truncation_error(truncated: &RunPlan, reference: &RunPlan) -> Result<Vec<(f64, f64)>, PlanError> {
    let same = RunPlan {
        truncation: reference.truncation,
        workers: reference.workers,
        ..truncated.clone()
    };
    if same.times != reference.times || same.steps_per_time != reference.steps_per_time {
        return invalid("truncation study needs matching time grids");
    }
    if same != *reference {
        return invalid("truncation study needs plans that differ only in truncation");
    }
    let (a, b) = (run_plan(truncated)?, run_plan(reference)?);
    Ok(a.times
        .iter()
        .enumerate()
        .map(|(p, &t)| {
            let k = a.observables.len() as f64;
            let err = a.ensembles[p].iter().zip(&b.ensembles[p]).map(|(x, y)| (x.mean - y.mean).abs()).sum::<f64>() / k;
            (t, err)
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct TruncationRow {
    pub t: f64,
    pub trotter: f64,
    pub tepai: f64,
}

/// Truncation error of the product formula and of TE-PAI over all
/// single-qubit Paulis, at `chi_low` against `chi_ref`.
pub fn truncation_study(base: &RunPlan, chi_low: usize, chi_ref: usize) -> Result<Vec<TruncationRow>, PlanError> {
    let n = base.hamiltonian.n;
    let with = |schedule, chi| RunPlan {
        schedule,
        truncation: TruncationPolicy {
            chi_cut: chi,
            ..base.truncation
        },
        observables: single_qubit_paulis(n),
        ..base.clone()
    };
    let mode = match base.schedule {
        Schedule::TePai(m) | Schedule::Hybrid { mode: m, .. } => m,
        Schedule::Trotter => PaiMode::Unbiased,
    };
    let trotter = truncation_error(&with(Schedule::Trotter, chi_low), &with(Schedule::Trotter, chi_ref))?;
    let tepai = truncation_error(&with(Schedule::TePai(mode), chi_low), &with(Schedule::TePai(mode), chi_ref))?;
    Ok(trotter
        .into_iter()
        .zip(tepai)
        .map(|((t, a), (_, b))| TruncationRow { t, trotter: a, tepai: b })
        .collect())
}

// ---------------------------------------------------------------------------
// Text configuration

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    hamiltonian: HamiltonianSection,
    #[serde(default)]
    initial: InitialSection,
    grid: GridSection,
    #[serde(default)]
    segment: Vec<SegmentSection>,
    #[serde(default)]
    tepai: TepaiSection,
    #[serde(default)]
    truncation: TruncationSection,
    #[serde(default)]
    run: RunSection,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct HamiltonianSection {
    n: usize,
    coupling: f64,
    omega: Option<Vec<f64>>,
    omega_seed: Option<u64>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct InitialSection {
    state: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GridSection {
    times: Option<Vec<f64>>,
    t_max: Option<f64>,
    points: Option<usize>,
    steps_per_time: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SegmentSection {
    method: String,
    until_time: Option<f64>,
    until_bond: Option<usize>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum DeltaValue {
    Number(f64),
    Text(String),
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct TepaiSection {
    delta: Option<DeltaValue>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct TruncationSection {
    chi_cut: Option<usize>,
    floor: Option<f64>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RunSection {
    samples: Option<usize>,
    workers: Option<usize>,
    seed: Option<u64>,
    observables: Option<Vec<String>>,
    keep_snapshots: Option<bool>,
}

/// Parses `pi/<k>`, `pi/2^<k>` or a plain number.
pub fn parse_delta(s: &str) -> Result<f64, PlanError> {
    let s = s.trim();
    if let Ok(x) = s.parse::<f64>() {
        return Ok(x);
    }
    let bad = || PlanError::Invalid(format!("cannot read delta `{s}`; use a number, pi/<k> or pi/2^<k>"));
    let rest = s.strip_prefix("pi/").ok_or_else(bad)?;
    let denom = match rest.strip_prefix("2^") {
        Some(e) => 2f64.powi(e.parse::<i32>().map_err(|_| bad())?),
        None => rest.parse::<f64>().map_err(|_| bad())?,
    };
    Ok(PI / denom)
}

fn parse_method(s: &str) -> Result<Option<PaiMode>, PlanError> {
    match s {
        "trotter" => Ok(None),
        "tepai_unbiased" => Ok(Some(PaiMode::Unbiased)),
        "tepai_no_pi" => Ok(Some(PaiMode::NoPi)),
        other => invalid(format!("unknown method `{other}` (trotter, tepai_unbiased, tepai_no_pi)")),
    }
}

fn parse_observable(n: usize, s: &str) -> Result<Vec<PauliString>, PlanError> {
    match s {
        "single_qubit" => Ok(single_qubit_paulis(n)),
        _ => Ok(vec![PauliString::parse(n, s)?]),
    }
}

impl RunPlan {
    /// Reads a plan from its TOML form. Unset run fields fall back to
    /// [`RunPlan::spin_ring`] defaults.
    pub fn from_toml(text: &str) -> Result<Self, PlanError> {
        let f: ConfigFile = toml::from_str(text)?;
        let n = f.hamiltonian.n;
        let seed = f.run.seed.unwrap_or(0);
        let mut plan = RunPlan::spin_ring(n.max(1), f.hamiltonian.coupling, seed);
        plan.hamiltonian.n = n;
        plan.hamiltonian.omega = match (f.hamiltonian.omega, f.hamiltonian.omega_seed) {
            (Some(_), Some(_)) => return invalid("give either omega or omega_seed"),
            (Some(v), None) => OmegaSpec::Values(v),
            (None, Some(s)) => OmegaSpec::Seed(s),
            (None, None) => OmegaSpec::Seed(seed),
        };
        plan.initial = match f.initial.state.as_deref() {
            None | Some("domain_wall") => domain_wall_state(n),
            Some(s) => parse_product_state(s).map_err(PlanError::Invalid)?,
        };
        plan.steps_per_time = f.grid.steps_per_time;
        plan.times = match (f.grid.times, f.grid.t_max, f.grid.points) {
            (Some(t), None, None) => t,
            (None, Some(tm), Some(p)) if p > 0 => (1..=p).map(|i| tm * i as f64 / p as f64).collect(),
            _ => return invalid("grid needs either `times` or both `t_max` and `points`"),
        };
        plan.schedule = match f.segment.as_slice() {
            [] => return invalid("at least one [[segment]] is required"),
            [only] => {
                if only.until_time.is_some() || only.until_bond.is_some() {
                    return invalid("the last segment runs to the end of the grid");
                }
                match parse_method(&only.method)? {
                    None => Schedule::Trotter,
                    Some(m) => Schedule::TePai(m),
                }
            }
            [first, second] => {
                if parse_method(&first.method)?.is_some() {
                    return invalid("only a trotter segment may precede another segment");
                }
                let mode = parse_method(&second.method)?.ok_or_else(|| PlanError::Invalid("second segment must be a TE-PAI method".into()))?;
                if second.until_time.is_some() || second.until_bond.is_some() {
                    return invalid("the last segment runs to the end of the grid");
                }
                let switch = match (first.until_time, first.until_bond) {
                    (Some(t), None) => SwitchRule::AtTime(t),
                    (None, Some(b)) => SwitchRule::BondThreshold(b),
                    _ => return invalid("the trotter segment needs exactly one of until_time, until_bond"),
                };
                Schedule::Hybrid { switch, mode }
            }
            _ => return invalid("at most two segments (trotter then TE-PAI) are supported"),
        };
        if let Some(d) = f.tepai.delta {
            plan.delta = match d {
                DeltaValue::Number(x) => x,
                DeltaValue::Text(s) => parse_delta(&s)?,
            };
        }
        if let Some(c) = f.truncation.chi_cut {
            plan.truncation.chi_cut = c;
        }
        if let Some(fl) = f.truncation.floor {
            plan.truncation.rel_floor = fl;
        }
        if let Some(s) = f.run.samples {
            plan.samples = s;
        }
        if let Some(w) = f.run.workers {
            plan.workers = w;
        }
        if let Some(k) = f.run.keep_snapshots {
            plan.keep_snapshots = k;
        }
        if let Some(obs) = f.run.observables {
            plan.observables = obs.iter().map(|o| parse_observable(n, o)).collect::<Result<Vec<_>, _>>()?.concat();
        }
        Ok(plan)
    }
}
