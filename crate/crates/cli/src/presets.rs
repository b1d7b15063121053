//! Named experiments at desk scale, with the reference-scale parameters
//! behind `--paper-scale`.

use std::f64::consts::PI;
use std::fmt::Write as _;

use anyhow::{bail, Result};
use tepai::estimator::{results_table, variance_vs_bound_trace, EnsembleResult};
use tepai::pai::{self, PaiMode};
use tepai::pauli::{build_spin_ring, Hamiltonian, OmegaSpec, Pauli, PauliString};
use tepai::runner::{run_plan, truncation_study, RunOutput, RunPlan, Schedule, SwitchRule};
use tepai::TruncationPolicy;

use crate::output::Metadata;

pub const PRESETS: &[(&str, &str)] = &[
    (
        "resource-estimation",
        "precision reached by TE-PAI sampling against product-formula gate counts",
    ),
    ("variance-growth", "TE-PAI estimator variance over time against its norm bound"),
    ("locality-variance", "estimator variance as a function of observable weight"),
    (
        "hybrid",
        "product formula up to a switch time, TE-PAI afterwards, against a deep product formula",
    ),
    ("full-tepai", "TE-PAI from the start against a deep product formula"),
    ("truncation", "truncation error at bond cap 2 against cap 16 for both methods"),
    ("delta-sweep", "bond growth, gate count and cost across TE-PAI angles, untruncated"),
    ("switch-study", "accuracy and cost of hybrid runs across switch times, untruncated"),
];

#[derive(Clone, Debug)]
pub struct Overrides {
    pub seed: u64,
    pub workers: usize,
    pub chi_cut: Option<usize>,
    pub delta: Option<f64>,
    pub samples: Option<usize>,
    pub paper_scale: bool,
    pub dry_run: bool,
}

pub struct Table {
    pub name: String,
    pub body: String,
}

pub struct PresetOutput {
    pub meta: Metadata,
    pub tables: Vec<Table>,
}

pub fn list() -> String {
    PRESETS.iter().map(|(n, d)| format!("  {n:<20} {d}")).collect::<Vec<_>>().join("\n")
}

pub fn run_preset(name: &str, ov: &Overrides) -> Result<PresetOutput> {
    let Some((_, experiment)) = PRESETS.iter().find(|(n, _)| *n == name) else {
        bail!("unknown preset `{name}`; available presets:\n{}", list());
    };
    let mut ctx = Ctx {
        ov: ov.clone(),
        meta: Metadata {
            preset: name.to_string(),
            experiment: experiment.to_string(),
            seed: ov.seed,
            ..Default::default()
        },
        tables: Vec::new(),
    };
    ctx.note(if ov.paper_scale {
        "reference-scale parameters"
    } else {
        "desk-scale parameters; pass --paper-scale for the reference sizes"
    });
    match name {
        "resource-estimation" => resource_estimation(&mut ctx)?,
        "variance-growth" => variance_growth(&mut ctx)?,
        "locality-variance" => locality_variance(&mut ctx)?,
        "hybrid" => hybrid(&mut ctx, false)?,
        "full-tepai" => hybrid(&mut ctx, true)?,
        "truncation" => truncation(&mut ctx)?,
        "delta-sweep" => delta_sweep(&mut ctx)?,
        "switch-study" => switch_study(&mut ctx)?,
        _ => unreachable!("listed preset without a runner"),
    }
    Ok(PresetOutput {
        meta: ctx.meta,
        tables: ctx.tables,
    })
}

struct Ctx {
    ov: Overrides,
    meta: Metadata,
    tables: Vec<Table>,
}

impl Ctx {
    fn pick<T>(&self, desk: T, paper: T) -> T {
        if self.ov.paper_scale {
            paper
        } else {
            desk
        }
    }

    fn param(&mut self, k: &str, v: impl ToString) {
        self.meta.params.push((k.to_string(), v.to_string()));
    }

    fn note(&mut self, n: &str) {
        self.meta.notes.push(n.to_string());
    }

    fn table(&mut self, name: &str, body: String) {
        self.tables.push(Table { name: name.to_string(), body });
    }

    fn delta(&self, default_log2: i32) -> f64 {
        self.ov.delta.unwrap_or(PI / 2f64.powi(default_log2))
    }

    fn samples(&self, default: usize) -> usize {
        self.ov.samples.unwrap_or(default)
    }

    fn chi(&self, default: usize) -> usize {
        self.ov.chi_cut.unwrap_or(default)
    }

    /// Validates every plan; false means stop here (dry run).
    fn ready(&mut self, plans: &[&RunPlan]) -> Result<bool> {
        for p in plans {
            p.validate()?;
        }
        if self.ov.dry_run {
            self.note("dry run: plans validated, nothing computed");
        }
        Ok(!self.ov.dry_run)
    }

    fn plan(&self, n: usize, coupling: f64, times: Vec<f64>, steps_per_time: usize, schedule: Schedule, delta: f64, samples: usize, chi: usize) -> RunPlan {
        RunPlan {
            times,
            steps_per_time,
            schedule,
            delta,
            samples,
            workers: self.ov.workers,
            truncation: TruncationPolicy {
                chi_cut: chi,
                ..Default::default()
            },
            ..RunPlan::spin_ring(n, coupling, self.ov.seed)
        }
    }
}

/// Grid points `1/per_unit, 2/per_unit, ..., t_max`.
fn grid(t_max: f64, per_unit: usize) -> Vec<f64> {
    let points = (t_max * per_unit as f64).round() as usize;
    (1..=points).map(|i| i as f64 / per_unit as f64).collect()
}

/// Smallest multiple of `per_unit` that is at least `base` and keeps every
/// rotation angle within `delta`.
fn steps_per_time(h: &Hamiltonian, delta: f64, base: usize, per_unit: usize) -> usize {
    let need = (2.0 * h.max_abs_coeff() / delta * (1.0 - 1e-12)).ceil() as usize;
    base.max(need).div_ceil(per_unit) * per_unit
}

fn ring(n: usize, coupling: f64, seed: u64) -> Result<Hamiltonian> {
    Ok(build_spin_ring(n, coupling, &OmegaSpec::Seed(seed))?)
}

fn fmt_delta(d: f64) -> String {
    let k = (PI / d).log2();
    if (k - k.round()).abs() < 1e-9 {
        format!("pi/2^{}", k.round())
    } else {
        d.to_string()
    }
}

/// Gates, cost proxy and largest bond up to grid point `p`, including the
/// product-formula prefix for TE-PAI points.
fn point_cost(out: &RunOutput, p: usize) -> (f64, f64, usize) {
    let e = out.ensemble(p, 0);
    match e.config.mode {
        None => (e.mean_nu, e.mean_cost, e.chi_max),
        Some(_) => {
            let pre = &out.cost.prefix;
            (
                pre.gate_count as f64 + e.mean_nu,
                pre.sum_chi_cubed as f64 + e.mean_cost,
                e.chi_max.max(pre.chi_max),
            )
        }
    }
}

fn rows(out: &RunOutput, k: usize) -> Vec<(f64, &EnsembleResult)> {
    out.times.iter().enumerate().map(|(p, &t)| (t, out.ensemble(p, k))).collect()
}

fn resource_estimation(ctx: &mut Ctx) -> Result<()> {
    let n = ctx.pick(10, 50);
    let delta = ctx.delta(12);
    let times = [1.0, 2.0, 3.0, 4.0, 5.0];
    let samples = [10u64, 100, 1_000, 10_000, 100_000, 1_000_000];
    ctx.param("n", n);
    ctx.param("coupling", 1.0);
    ctx.param("delta", fmt_delta(delta));
    ctx.param("times", format!("{times:?}"));
    let h = ring(n, 1.0, ctx.ov.seed)?;
    if ctx.ov.dry_run {
        ctx.note("dry run: nothing computed");
        return Ok(());
    }
    let c1 = h.coeff_l1_norm();
    let mut body = String::from("t,n_samples,epsilon,tepai_gates,overhead,trotter_steps,trotter_gates\n");
    for &t in &times {
        let g = pai::overhead_norm_inf(delta, c1, t)?;
        let nu = pai::expected_gate_count_inf(delta, c1, t)?;
        for &ns in &samples {
            let eps = g / (ns as f64).sqrt();
            let gates = h.trotter_gate_count_bound(t, eps)?;
            let steps = (gates / h.len() as f64).ceil();
            let _ = writeln!(body, "{t},{ns},{eps},{nu},{g},{steps},{}", steps * h.len() as f64);
        }
    }
    ctx.note("epsilon is the standard-deviation bound overhead/sqrt(n_samples); trotter_gates reach the same epsilon by the commutator bound");
    ctx.table("resource-estimation", body);
    Ok(())
}

fn variance_growth(ctx: &mut Ctx) -> Result<()> {
    let (n, t_max, per_unit) = ctx.pick((6, 2.0, 4), (20, 10.0, 2));
    let (delta, samples) = (ctx.delta(7), ctx.samples(ctx.pick(200, 1000)));
    let chi = ctx.chi(16);
    let h = ring(n, 0.1, ctx.ov.seed)?;
    let r = steps_per_time(&h, delta, 1000, per_unit);
    for (k, v) in [
        ("n", n.to_string()),
        ("coupling", "0.1".into()),
        ("t_max", t_max.to_string()),
        ("delta", fmt_delta(delta)),
        ("samples", samples.to_string()),
        ("steps_per_time", r.to_string()),
        ("chi_cut", chi.to_string()),
        ("mode", "unbiased".into()),
    ] {
        ctx.param(k, v);
    }
    let tepai = ctx.plan(n, 0.1, grid(t_max, per_unit), r, Schedule::TePai(PaiMode::Unbiased), delta, samples, chi);
    let reference = RunPlan {
        schedule: Schedule::Trotter,
        ..tepai.clone()
    };
    if !ctx.ready(&[&tepai, &reference])? {
        return Ok(());
    }
    let out = run_plan(&tepai)?;
    let refo = run_plan(&reference)?;
    ctx.table("variance-growth", results_table(&rows(&out, 0)));
    let mut bound = String::from("t,var_o,bound,var_v,within_bound\n");
    for b in variance_vs_bound_trace(&rows(&out, 0)) {
        let _ = writeln!(bound, "{},{},{},{},{}", b.t, b.var_o, b.bound, b.var_v, b.within_bound);
    }
    ctx.table("variance-growth_bound", bound);
    let mut samples_t = String::from("t,sample_id,raw,scaled\n");
    for (t, e) in rows(&out, 0) {
        for r in &e.records {
            let _ = writeln!(samples_t, "{t},{},{},{}", r.sample_id, r.raw, r.scaled);
        }
    }
    ctx.table("variance-growth_samples", samples_t);
    ctx.table("variance-growth_reference", results_table(&rows(&refo, 0)));
    Ok(())
}

/// Weight-`k` strings `P P ... P` on ring windows, for `P` in `X, Y, Z`.
fn window_strings(n: usize, k: usize) -> Vec<PauliString> {
    let mut v = Vec::new();
    for p in [Pauli::X, Pauli::Y, Pauli::Z] {
        for s in 0..n {
            v.push(PauliString::new(n, (0..k).map(|i| ((s + i) % n, p))).expect("distinct sites"));
        }
    }
    v
}

fn locality_variance(ctx: &mut Ctx) -> Result<()> {
    let (n, t_max, per_unit, delta_log2) = ctx.pick((8, 1.0, 4, 9), (100, 2.0, 4, 12));
    let (delta, samples, chi) = (ctx.delta(delta_log2), ctx.samples(ctx.pick(100, 1000)), ctx.chi(16));
    let h = ring(n, 0.1, ctx.ov.seed)?;
    let r = steps_per_time(&h, delta, 1000, per_unit);
    let max_k = 4.min(n);
    for (k, v) in [
        ("n", n.to_string()),
        ("coupling", "0.1".into()),
        ("t_max", t_max.to_string()),
        ("delta", fmt_delta(delta)),
        ("samples", samples.to_string()),
        ("steps_per_time", r.to_string()),
        ("chi_cut", chi.to_string()),
        ("max_weight", max_k.to_string()),
    ] {
        ctx.param(k, v);
    }
    ctx.note("variance per weight is the mean over all ring-window X, Y and Z strings of that weight");
    let observables: Vec<PauliString> = (1..=max_k).flat_map(|k| window_strings(n, k)).collect();
    let plan = RunPlan {
        observables,
        ..ctx.plan(n, 0.1, grid(t_max, per_unit), r, Schedule::TePai(PaiMode::Unbiased), delta, samples, chi)
    };
    if !ctx.ready(&[&plan])? {
        return Ok(());
    }
    let out = run_plan(&plan)?;
    let per_k = 3 * n;
    let mut body = String::from("t,weight,mean_var_o,min_var_o,max_var_o,bound\n");
    for (p, &t) in out.times.iter().enumerate() {
        for k in 1..=max_k {
            let ens = &out.ensembles[p][(k - 1) * per_k..k * per_k];
            let vars: Vec<f64> = ens.iter().map(|e| e.var_o).collect();
            let mean = vars.iter().sum::<f64>() / vars.len() as f64;
            let (lo, hi) = vars.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
            let w = ens[0].weight_norm;
            let _ = writeln!(body, "{t},{k},{mean},{lo},{hi},{}", w * w);
        }
    }
    ctx.table("locality-variance", body);
    Ok(())
}

fn hybrid(ctx: &mut Ctx, from_start: bool) -> Result<()> {
    let (n, t_max, t_switch, per_unit, delta_log2) = ctx.pick((8, 2.0, 1.0, 4, 9), (100, 5.0, 3.0, 4, 12));
    let (delta, samples, chi) = (ctx.delta(delta_log2), ctx.samples(10), ctx.chi(16));
    let h = ring(n, 0.1, ctx.ov.seed)?;
    let r = steps_per_time(&h, delta, 1000, per_unit);
    let schedule = if from_start {
        Schedule::TePai(PaiMode::NoPi)
    } else {
        Schedule::Hybrid {
            switch: SwitchRule::AtTime(t_switch),
            mode: PaiMode::NoPi,
        }
    };
    for (k, v) in [
        ("n", n.to_string()),
        ("coupling", "0.1".into()),
        ("t_max", t_max.to_string()),
        ("delta", fmt_delta(delta)),
        ("samples", samples.to_string()),
        ("steps_per_time", r.to_string()),
        ("chi_cut", chi.to_string()),
        ("mode", "no_pi".into()),
    ] {
        ctx.param(k, v);
    }
    if !from_start {
        ctx.param("switch_time", t_switch);
    }
    let plan = ctx.plan(n, 0.1, grid(t_max, per_unit), r, schedule, delta, samples, chi);
    let reference = RunPlan {
        schedule: Schedule::Trotter,
        ..plan.clone()
    };
    if !ctx.ready(&[&plan, &reference])? {
        return Ok(());
    }
    let out = run_plan(&plan)?;
    let refo = run_plan(&reference)?;
    let mut body = String::from("t,trotter_estimate,estimate,std_error,trotter_gates,gates,trotter_chi_max,chi_max\n");
    for p in 0..out.times.len() {
        let (e, re) = (out.ensemble(p, 0), refo.ensemble(p, 0));
        let (g, _, chi_p) = point_cost(&out, p);
        let (rg, _, rchi) = point_cost(&refo, p);
        let _ = writeln!(body, "{},{},{},{},{rg},{g},{rchi},{chi_p}", out.times[p], re.mean, e.mean, e.std_error);
    }
    let name = if from_start { "full-tepai" } else { "hybrid" };
    ctx.table(name, body);
    ctx.table(&format!("{name}_cost"), out.cost.table());
    Ok(())
}

fn truncation(ctx: &mut Ctx) -> Result<()> {
    let (n, per_unit, delta_log2) = ctx.pick((6, 4, 9), (20, 4, 12));
    let (delta, samples) = (ctx.delta(delta_log2), ctx.samples(ctx.pick(20, 100)));
    let (chi_low, chi_ref) = (ctx.chi(2), 16);
    let h = ring(n, 1.0, ctx.ov.seed)?;
    let r = steps_per_time(&h, delta, 1000, per_unit);
    for (k, v) in [
        ("n", n.to_string()),
        ("coupling", "1".into()),
        ("t_max", "1".into()),
        ("delta", fmt_delta(delta)),
        ("samples", samples.to_string()),
        ("steps_per_time", r.to_string()),
        ("chi_low", chi_low.to_string()),
        ("chi_reference", chi_ref.to_string()),
    ] {
        ctx.param(k, v);
    }
    let base = ctx.plan(n, 1.0, grid(1.0, per_unit), r, Schedule::TePai(PaiMode::Unbiased), delta, samples, chi_ref);
    if !ctx.ready(&[&base])? {
        return Ok(());
    }
    let mut body = String::from("t,trotter_error,tepai_error\n");
    for row in truncation_study(&base, chi_low, chi_ref)? {
        let _ = writeln!(body, "{},{},{}", row.t, row.trotter, row.tepai);
    }
    ctx.note("error is the mean absolute difference over all single-qubit Pauli expectations");
    ctx.table("truncation", body);
    Ok(())
}

fn delta_sweep(ctx: &mut Ctx) -> Result<()> {
    let (n, per_unit, max_log2) = ctx.pick((6, 4, 9), (10, 10, 12));
    let samples = ctx.samples(ctx.pick(10, 100));
    let chi = ctx.chi(1 << (n / 2));
    let h = ring(n, 1.0, ctx.ov.seed)?;
    let deltas: Vec<f64> = match ctx.ov.delta {
        Some(d) => vec![d],
        None => (5..=max_log2).map(|k| PI / 2f64.powi(k)).collect(),
    };
    for (k, v) in [
        ("n", n.to_string()),
        ("coupling", "1".into()),
        ("t_max", "1".into()),
        ("samples", samples.to_string()),
        ("chi_cut", chi.to_string()),
        ("trotter_steps", "1000".into()),
    ] {
        ctx.param(k, v);
    }
    ctx.param("deltas", deltas.iter().map(|&d| fmt_delta(d)).collect::<Vec<_>>().join(" "));
    let trotter = ctx.plan(n, 1.0, grid(1.0, per_unit), 1000, Schedule::Trotter, PI, 1, chi);
    let plans: Vec<RunPlan> = deltas
        .iter()
        .map(|&d| {
            ctx.plan(
                n,
                1.0,
                grid(1.0, per_unit),
                steps_per_time(&h, d, 1000, per_unit),
                Schedule::TePai(PaiMode::Unbiased),
                d,
                samples,
                chi,
            )
        })
        .collect();
    let all: Vec<&RunPlan> = std::iter::once(&trotter).chain(&plans).collect();
    if !ctx.ready(&all)? {
        return Ok(());
    }
    let mut body = String::from("method,delta,steps_per_time,t,estimate,std_error,gates,chi_max,cost\n");
    for plan in all {
        let out = run_plan(plan)?;
        let (method, d) = match plan.schedule {
            Schedule::Trotter => ("trotter", "-".to_string()),
            _ => ("tepai", fmt_delta(plan.delta)),
        };
        for p in 0..out.times.len() {
            let e = out.ensemble(p, 0);
            let (g, c, x) = point_cost(&out, p);
            let _ = writeln!(
                body,
                "{method},{d},{},{},{},{},{g},{x},{c}",
                plan.steps_per_time, out.times[p], e.mean, e.std_error
            );
        }
    }
    ctx.table("delta-sweep", body);
    Ok(())
}

fn switch_study(ctx: &mut Ctx) -> Result<()> {
    let (n, per_unit, delta_log2) = ctx.pick((6, 4, 9), (10, 10, 11));
    let (delta, samples) = (ctx.delta(delta_log2), ctx.samples(ctx.pick(10, 100)));
    let chi = ctx.chi(1 << (n / 2));
    let h = ring(n, 1.0, ctx.ov.seed)?;
    let r = steps_per_time(&h, delta, 1000, per_unit);
    let switches: Vec<f64> = grid(1.0, per_unit);
    for (k, v) in [
        ("n", n.to_string()),
        ("coupling", "1".into()),
        ("t_max", "1".into()),
        ("delta", fmt_delta(delta)),
        ("samples", samples.to_string()),
        ("steps_per_time", r.to_string()),
        ("chi_cut", chi.to_string()),
    ] {
        ctx.param(k, v);
    }
    let mut plans = vec![(
        0.0,
        ctx.plan(n, 1.0, grid(1.0, per_unit), r, Schedule::TePai(PaiMode::Unbiased), delta, samples, chi),
    )];
    for &ts in &switches {
        let s = Schedule::Hybrid {
            switch: SwitchRule::AtTime(ts),
            mode: PaiMode::Unbiased,
        };
        plans.push((ts, ctx.plan(n, 1.0, grid(1.0, per_unit), r, s, delta, samples, chi)));
    }
    let refs: Vec<&RunPlan> = plans.iter().map(|(_, p)| p).collect();
    if !ctx.ready(&refs)? {
        return Ok(());
    }
    ctx.note("switch_time equal to the final time is the pure product formula");
    let mut body = String::from("switch_time,t,estimate,std_error,gates,chi_max,cost\n");
    for (ts, plan) in &plans {
        let out = run_plan(plan)?;
        for p in 0..out.times.len() {
            let e = out.ensemble(p, 0);
            let (g, c, x) = point_cost(&out, p);
            let _ = writeln!(body, "{ts},{},{},{},{g},{x},{c}", out.times[p], e.mean, e.std_error);
        }
    }
    ctx.table("switch-study", body);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_and_steps() {
        assert_eq!(grid(1.0, 4), vec![0.25, 0.5, 0.75, 1.0]);
        let h = ring(4, 1.0, 1).unwrap();
        let r = steps_per_time(&h, PI / 4096.0, 1000, 4);
        assert_eq!(r % 4, 0);
        assert!(2.0 * h.max_abs_coeff() / r as f64 <= PI / 4096.0);
        assert_eq!(steps_per_time(&h, PI / 32.0, 1000, 4), 1000);
    }

    #[test]
    fn delta_labels() {
        assert_eq!(fmt_delta(PI / 128.0), "pi/2^7");
        assert_eq!(fmt_delta(0.3), "0.3");
    }

    #[test]
    fn windows_wrap_around_the_ring() {
        let w = window_strings(4, 2);
        assert_eq!(w.len(), 12);
        assert!(w.iter().all(|p| p.weight() == 2));
        assert!(w.iter().any(|p| p.support().collect::<Vec<_>>() == vec![0, 3]));
    }

    #[test]
    fn unknown_preset_lists_names() {
        let ov = Overrides {
            seed: 1,
            workers: 1,
            chi_cut: None,
            delta: None,
            samples: None,
            paper_scale: false,
            dry_run: true,
        };
        let err = run_preset("nope", &ov).err().unwrap().to_string();
        for (n, _) in PRESETS {
            assert!(err.contains(n));
        }
    }

    #[test]
    fn every_preset_validates_at_both_scales() {
        for paper_scale in [false, true] {
            let ov = Overrides {
                seed: 1,
                workers: 1,
                chi_cut: None,
                delta: None,
                samples: None,
                paper_scale,
                dry_run: true,
            };
            for (n, _) in PRESETS {
                let out = run_preset(n, &ov).unwrap();
                assert!(out.tables.is_empty(), "{n}");
            }
        }
    }
}
