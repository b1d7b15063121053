//! Ensemble statistics for signed, scaled circuit samples.
//!
//! Each sample contributes a raw value `v = sign * <O>` and a scaled value
//! `o = weight_norm * v`. The estimate is the mean of `o`; because the norm
//! is common to the ensemble, `Var[o] = weight_norm^2 Var[v]`.

use std::fmt::Write as _;

use thiserror::Error;

use crate::mps::{CostLedger, MpsError, MpsState};
use crate::pai::PaiMode;
use crate::pauli::PauliString;

/// Slack on `|v| <= 1` for normalized observables.
pub const RAW_SLACK: f64 = 1e-8;
/// Relative tolerance of the internal scaling-identity check.
pub const SCALING_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum EstimatorError {
    #[error("empty ensemble")]
    Empty,
    #[error("samples from different configurations cannot be aggregated")]
    MixedConfig,
    #[error("raw value {0} exceeds the unit bound")]
    RawOutOfRange(f64),
    #[error("scaling identity violated: var_o = {var_o}, norm^2 * var_v = {scaled}")]
    ScalingIdentity { var_o: f64, scaled: f64 },
    #[error("snapshots were not retained for this ensemble")]
    NoSnapshots,
    #[error(transparent)]
    Mps(#[from] MpsError),
}

/// Shared parameters of an ensemble. `mode == None` marks a deterministic
/// product-formula point recorded as a single sample.
#[derive(Copy, Clone, Debug)]
pub struct EnsembleConfig {
    pub delta: f64,
    pub n_steps: usize,
    pub total_time: f64,
    pub mode: Option<PaiMode>,
}

impl PartialEq for EnsembleConfig {
    fn eq(&self, o: &Self) -> bool {
        self.delta.to_bits() == o.delta.to_bits() && self.n_steps == o.n_steps && self.total_time.to_bits() == o.total_time.to_bits() && self.mode == o.mode
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SampleRecord {
    pub sample_id: u64,
    pub config: EnsembleConfig,
    pub sign: i8,
    pub weight_norm: f64,
    /// Signed value `sign * <O>`.
    pub raw: f64,
    /// `weight_norm * raw`.
    pub scaled: f64,
    pub nu: u64,
    pub cost: CostLedger,
}

impl SampleRecord {
    pub fn new(sample_id: u64, config: EnsembleConfig, sign: i8, weight_norm: f64, expectation: f64, nu: u64, cost: CostLedger) -> Self {
        let raw = sign as f64 * expectation;
        SampleRecord {
            sample_id,
            config,
            sign,
            weight_norm,
            raw,
            scaled: weight_norm * raw,
            nu,
            cost,
        }
    }
}

#[derive(Clone, Debug)]
pub struct EnsembleResult {
    pub config: EnsembleConfig,
    /// Sorted by `sample_id`.
    pub records: Vec<SampleRecord>,
    pub weight_norm: f64,
    pub mean: f64,
    pub var_o: f64,
    pub var_v: f64,
    pub std_error: f64,
    pub mean_nu: f64,
    pub mean_cost: f64,
    pub chi_max: usize,
}

impl EnsembleResult {
    pub fn n_samples(&self) -> usize {
        self.records.len()
    }
}

/// Order-independent reducer: partial results merge by concatenation and
/// statistics are computed once over the id-sorted records.
#[derive(Clone, Debug, Default)]
pub struct Accumulator {
    records: Vec<SampleRecord>,
}

impl Accumulator {
    pub fn push(&mut self, r: SampleRecord) {
        self.records.push(r);
    }

    pub fn merge(mut self, other: Accumulator) -> Accumulator {
        self.records.extend(other.records);
        self
    }

    pub fn finish(self) -> Result<EnsembleResult, EstimatorError> {
        aggregate(self.records)
    }
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    s / n as f64
}

/// Sample variance with the `N - 1` denominator; zero for one sample.
fn variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs.iter().copied());
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

pub fn aggregate(mut records: Vec<SampleRecord>) -> Result<EnsembleResult, EstimatorError> {
    let first = records.first().ok_or(EstimatorError::Empty)?;
    let (config, weight_norm) = (first.config, first.weight_norm);
    if records.iter().any(|r| r.config != config || r.weight_norm.to_bits() != weight_norm.to_bits()) {
        return Err(EstimatorError::MixedConfig);
    }
    if let Some(r) = records.iter().find(|r| !(r.raw.abs() <= 1.0 + RAW_SLACK)) {
        return Err(EstimatorError::RawOutOfRange(r.raw));
    }
    records.sort_by_key(|r| r.sample_id);
    let raw: Vec<f64> = records.iter().map(|r| r.raw).collect();
    let scaled: Vec<f64> = records.iter().map(|r| r.scaled).collect();
    let (var_v, var_o) = (variance(&raw), variance(&scaled));
    let w2 = weight_norm * weight_norm;
    let second_moment = mean(raw.iter().map(|v| v * v));
    if (var_o - w2 * var_v).abs() > SCALING_TOL * w2 * var_v.max(second_moment) {
        return Err(EstimatorError::ScalingIdentity { var_o, scaled: w2 * var_v });
    }
    let n = records.len() as f64;
    Ok(EnsembleResult {
        config,
        weight_norm,
        mean: mean(scaled.iter().copied()),
        var_o,
        var_v,
        std_error: (var_o / n).sqrt(),
        mean_nu: mean(records.iter().map(|r| r.nu as f64)),
        mean_cost: mean(records.iter().map(|r| r.cost.sum_chi_cubed as f64)),
        chi_max: records.iter().map(|r| r.cost.chi_max).max().unwrap_or(1),
        records,
    })
}

/// `rho = scale * sum_l sign_l |psi_l><psi_l|` with `scale = ||g|| / N_s`.
#[derive(Clone, Debug)]
pub struct SignedMixture {
    pub scale: f64,
    pub members: Vec<(i8, MpsState)>,
}

impl SignedMixture {
    /// Builds the mixture of an ensemble from its retained final states,
    /// given in the ensemble's record order.
    pub fn from_ensemble(e: &EnsembleResult, states: Option<Vec<MpsState>>) -> Result<Self, EstimatorError> {
        let states = states.ok_or(EstimatorError::NoSnapshots)?;
        if states.len() != e.records.len() {
            return Err(EstimatorError::NoSnapshots);
        }
        let members = e.records.iter().map(|r| r.sign).zip(states).collect();
        Ok(SignedMixture {
            scale: e.weight_norm / e.records.len() as f64,
            members,
        })
    }

    /// `Tr[O rho]` for every observable in one pass over the stored states.
    pub fn evaluate_observables(&self, observables: &[PauliString]) -> Result<Vec<f64>, EstimatorError> {
        if self.members.is_empty() {
            return Err(EstimatorError::NoSnapshots);
        }
        let mut sums = vec![0.0; observables.len()];
        for (sign, state) in &self.members {
            for (s, o) in sums.iter_mut().zip(observables) {
                *s += *sign as f64 * state.expectation(o)?;
            }
        }
        // mirrors aggregate(): mean of weight_norm * raw
        let n = self.members.len() as f64;
        let w = self.scale * n;
        Ok(sums.into_iter().map(|s| w * s / n).collect())
    }
}

#[derive(Copy, Clone, Debug, PartialEq)]
pub struct BoundRow {
    pub t: f64,
    pub var_o: f64,
    /// `weight_norm^2`.
    pub bound: f64,
    pub var_v: f64,
    pub within_bound: bool,
}

/// Variance against its `weight_norm^2` ceiling per time point. The sample
/// variance of values in `[-w, w]` can reach `w^2 N / (N - 1)`, which sets
/// the slack.
pub fn variance_vs_bound_trace(points: &[(f64, &EnsembleResult)]) -> Vec<BoundRow> {
    points
        .iter()
        .map(|&(t, e)| {
            let n = e.n_samples() as f64;
            let slack = if n > 1.0 { n / (n - 1.0) } else { 1.0 } + 1e-8;
            let bound = e.weight_norm * e.weight_norm;
            BoundRow {
                t,
                var_o: e.var_o,
                bound,
                var_v: e.var_v,
                within_bound: e.var_o <= bound * slack,
            }
        })
        .collect()
}

pub const RESULTS_HEADER: &str = "t,estimate,std_error,var_o,var_v,g_norm,mean_nu,mean_cost,chi_max";

/// Comma-separated results, one row per time point. Floats use the
/// shortest round-trip form so equal values print identically.
pub fn results_table(points: &[(f64, &EnsembleResult)]) -> String {
    let mut out = String::from(RESULTS_HEADER);
    out.push('\n');
    for (t, e) in points {
        let _ = writeln!(
            out,
            "{t},{},{},{},{},{},{},{},{}",
            e.mean, e.std_error, e.var_o, e.var_v, e.weight_norm, e.mean_nu, e.mean_cost, e.chi_max
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::LocalState;

    fn cfg(mode: Option<PaiMode>) -> EnsembleConfig {
        EnsembleConfig {
            delta: 0.1,
            n_steps: 10,
            total_time: 1.0,
            mode,
        }
    }

    fn rec(id: u64, sign: i8, w: f64, x: f64) -> SampleRecord {
        SampleRecord::new(id, cfg(Some(PaiMode::Unbiased)), sign, w, x, 3, CostLedger::default())
    }

    #[test]
    fn hand_computed_scaling() {
        let e = aggregate(vec![rec(0, 1, 2.0, 1.0), rec(1, -1, 2.0, 1.0)]).unwrap();
        assert_eq!(e.mean, 0.0);
        assert_eq!(e.var_v, 2.0);
        assert_eq!(e.var_o, 8.0);
        assert_eq!(e.var_o, 4.0 * e.var_v);
    }

    #[test]
    fn identical_samples_have_zero_variance() {
        let e = aggregate((0..5).map(|i| rec(i, 1, 1.3, 0.37)).collect()).unwrap();
        assert!(e.var_o.abs() < 1e-30 && e.var_v.abs() < 1e-30);
        assert!((e.mean - 1.3 * 0.37).abs() < 1e-15);
    }

    #[test]
    fn no_pi_norm_is_transparent() {
        let c = cfg(Some(PaiMode::NoPi));
        let recs = [0.2, -0.4, 0.9]
            .iter()
            .enumerate()
            .map(|(i, &x)| SampleRecord::new(i as u64, c, 1, 1.0, x, 1, CostLedger::default()))
            .collect();
        let e = aggregate(recs).unwrap();
        assert_eq!(e.var_o, e.var_v);
        assert!(e.records.iter().all(|r| r.raw == r.scaled));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(aggregate(vec![]), Err(EstimatorError::Empty)));
        let mut other = rec(1, 1, 2.0, 0.1);
        other.config.n_steps = 11;
        assert!(matches!(aggregate(vec![rec(0, 1, 2.0, 0.1), other]), Err(EstimatorError::MixedConfig)));
        assert!(matches!(
            aggregate(vec![rec(0, 1, 2.0, 0.1), rec(1, 1, 2.5, 0.1)]),
            Err(EstimatorError::MixedConfig)
        ));
        assert!(matches!(aggregate(vec![rec(0, 1, 1.0, 1.1)]), Err(EstimatorError::RawOutOfRange(_))));
    }

    #[test]
    fn merge_order_does_not_matter() {
        let rs: Vec<_> = (0..7).map(|i| rec(i, if i % 3 == 0 { -1 } else { 1 }, 1.7, 0.1 * i as f64)).collect();
        let mut a = Accumulator::default();
        let mut b = Accumulator::default();
        for (i, r) in rs.iter().enumerate() {
            if i % 2 == 0 {
                a.push(r.clone())
            } else {
                b.push(r.clone())
            }
        }
        let ab = a.clone().merge(b.clone()).finish().unwrap();
        let ba = b.merge(a).finish().unwrap();
        assert_eq!(ab.mean.to_bits(), ba.mean.to_bits());
        assert_eq!(ab.var_o.to_bits(), ba.var_o.to_bits());
    }

    #[test]
    fn mixture_identity_observable_and_trace() {
        let s = MpsState::product(&[LocalState::Plus, LocalState::Zero]).unwrap();
        let recs = vec![rec(0, 1, 3.0, 1.0), rec(1, -1, 3.0, 1.0), rec(2, 1, 3.0, 1.0)];
        let e = aggregate(recs).unwrap();
        let m = SignedMixture::from_ensemble(&e, Some(vec![s.clone(), s.clone(), s])).unwrap();
        let v = m
            .evaluate_observables(&[PauliString::identity(2), PauliString::parse(2, "X0").unwrap()])
            .unwrap();
        assert!((v[0] - 3.0 / 3.0).abs() < 1e-14);
        assert!((v[1] - 1.0).abs() < 1e-14);
        assert!(matches!(SignedMixture::from_ensemble(&e, None), Err(EstimatorError::NoSnapshots)));
    }

    #[test]
    fn bound_trace_and_table() {
        let zero = aggregate(vec![SampleRecord::new(0, cfg(None), 1, 1.0, 1.0, 0, CostLedger::default())]).unwrap();
        let e = aggregate(vec![rec(0, 1, 2.0, 1.0), rec(1, -1, 2.0, 1.0)]).unwrap();
        let rows = variance_vs_bound_trace(&[(0.0, &zero), (1.0, &e)]);
        assert_eq!(rows[0].var_o, 0.0);
        assert_eq!(rows[0].bound, 1.0);
        assert!(rows.iter().all(|r| r.within_bound));
        let t = results_table(&[(0.0, &zero), (1.0, &e)]);
        assert_eq!(t.lines().next().unwrap(), RESULTS_HEADER);
        assert_eq!(t.lines().count(), 3);
    }
}
