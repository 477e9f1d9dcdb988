//! One function per subcommand. Each writes its report (and CSV, where there
//! is a trajectory) into the output directory and returns the status.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use digraph_heat::geometry::BallConfig;
use digraph_heat::graph::{
    builtin_graph, validate_generator, Graph, ValidationConfig, ValidationReport, VertexId,
    DEFAULT_ADJACENCY_CAP,
};
use digraph_heat::hypotheses::{
    check_hypotheses, estimate_skew_mass, HypothesisConfig, HypothesisReport, SkewMass,
    SkewVerdict,
};
use digraph_heat::oscillator::{
    simulate_nonlinear_observed, verify_phase_lock, NonlinearConfig, PhaseLockCandidate,
    SinCoupling,
};
use digraph_heat::semigroup::{
    evolve_observed, fit_power_law, log_spaced_times, lp_norm, stirling_lower_bound, DecayFit,
    NormKind, SimConfig, SimStats, StateRef, StateVector,
};
use digraph_heat::SCHEMA_VERSION;

use crate::report::{read_csv, write_csv, write_json, NormRow, Report, Status};
use crate::spec::{Action, ExperimentSpec};

/// What a finished action leaves behind.
#[derive(Debug)]
pub struct Finished {
    pub status: Status,
    pub files: Vec<PathBuf>,
}

/// Residual above which a phase-lock candidate is rejected.
pub const PHASE_LOCK_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceExponent {
    pub norm_kind: NormKind,
    pub exponent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateResult {
    pub initial_vertex: VertexId,
    pub stats: SimStats,
    pub fits: Vec<DecayFit>,
    /// Exponents expected on a graph of the declared dimension satisfying the
    /// decay hypotheses; empty without a dimension hint.
    pub reference_exponents: Vec<ReferenceExponent>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitDecayResult {
    pub input: PathBuf,
    pub fits: Vec<DecayFit>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleResult {
    pub skew_mass: SkewMass,
    pub stats: SimStats,
    pub fit: DecayFit,
    /// `l_inf` exponent under finite skew mass in two dimensions.
    pub reference_exponent: f64,
    pub degraded: bool,
    pub peaks_checked: usize,
    /// Indices `i` with `x_(i,0)(i) < e^-1 i^-1/2` beyond the error budget.
    pub peaks_below_bound: Vec<u32>,
    pub min_peak_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OscillateResult {
    pub omega: f64,
    pub phase_lock_residual: f64,
    pub lock_radius: usize,
    pub epsilon: f64,
    pub stats: Option<SimStats>,
    pub fits: Vec<DecayFit>,
    pub max_l1_deviation: Option<f64>,
}

pub fn run(spec: &ExperimentSpec) -> Result<Finished> {
    match spec.action {
        Action::Validate => validate(spec),
        Action::CheckHypotheses => hypotheses(spec),
        Action::Simulate => simulate(spec),
        Action::FitDecay => fit_decay(spec),
        Action::Counterexample => counterexample(spec),
        Action::Oscillate => oscillate(spec),
    }
}

fn finish<R: Serialize>(
    spec: &ExperimentSpec,
    status: Status,
    result: R,
    rows: Option<&[NormRow]>,
) -> Result<Finished> {
    let stem = spec.action.file_stem();
    let report = Report {
        schema: SCHEMA_VERSION.to_string(),
        action: spec.action,
        spec: spec.clone(),
        status: status.clone(),
        result,
    };
    let mut files = vec![write_json(&spec.out, stem, &report)?];
    if let Some(rows) = rows {
        files.push(write_csv(&spec.out, stem, rows)?);
    }
    Ok(Finished { status, files })
}

fn ball_config(spec: &ExperimentSpec) -> BallConfig {
    BallConfig {
        adjacency_cap: DEFAULT_ADJACENCY_CAP,
        vertex_budget: spec.vertex_budget,
    }
}

fn sim_config(spec: &ExperimentSpec) -> SimConfig {
    let mut cfg =
        SimConfig::new(spec.t_max).with_sample_times(log_spaced_times(spec.t_max, spec.samples));
    cfg.rtol = spec.rtol;
    cfg.atol = spec.atol;
    cfg.truncation_margin = spec.truncation_margin;
    cfg.richardson_check = spec.richardson_check;
    cfg.vertex_budget = spec.vertex_budget;
    cfg
}

/// `l^p` kinds first, then the matching `Q_p` kinds.
fn norm_kinds(spec: &ExperimentSpec, with_q: bool) -> Vec<NormKind> {
    let ps = spec.ps();
    let mut kinds: Vec<NormKind> = ps.iter().map(|&p| NormKind::Lp(p)).collect();
    if with_q {
        kinds.extend(ps.iter().map(|&p| NormKind::Q(p)));
    }
    kinds
}

fn observe_norms(kinds: &[NormKind]) -> impl FnMut(&StateRef) -> (f64, Vec<f64>) + '_ {
    move |s: &StateRef| {
        let vals = kinds
            .iter()
            .map(|&k| s.norm(k).unwrap_or(f64::NAN))
            .collect();
        (s.t, vals)
    }
}

fn rows_and_fits(
    kinds: &[NormKind],
    obs: &[(f64, Vec<f64>)],
    window: [f64; 2],
) -> Result<(Vec<NormRow>, Vec<DecayFit>)> {
    let mut rows = Vec::with_capacity(obs.len() * kinds.len());
    for (t, vals) in obs {
        for (k, v) in kinds.iter().zip(vals) {
            rows.push(NormRow {
                t: *t,
                norm_kind: k.to_string(),
                value: *v,
            });
        }
    }
    let mut fits = Vec::new();
    for (j, &k) in kinds.iter().enumerate() {
        let series: Vec<(f64, f64)> = obs.iter().map(|(t, v)| (*t, v[j])).collect();
        fits.push(fit_power_law(k, &series, window).with_context(|| format!("fitting {k}"))?);
    }
    Ok((rows, fits))
}

fn summarize_fits(fits: &[DecayFit]) -> String {
    fits.iter()
        .map(|f| format!("{} exponent {:.4}", f.norm_kind, f.exponent))
        .collect::<Vec<_>>()
        .join(", ")
}

fn verdict_name(v: SkewVerdict) -> &'static str {
    match v {
        SkewVerdict::Convergent => "convergent",
        SkewVerdict::Divergent => "divergent",
        SkewVerdict::Inconclusive => "inconclusive",
    }
}

fn validate(spec: &ExperimentSpec) -> Result<Finished> {
    let g = builtin_graph(&spec.graph)?;
    let cfg = ValidationConfig {
        adjacency_cap: DEFAULT_ADJACENCY_CAP,
        vertex_budget: spec.vertex_budget,
    };
    let rep: ValidationReport = validate_generator(&*g, spec.r_max, &cfg)?;
    let passed = rep.is_clean();
    let verdict = if passed {
        format!("{} vertices checked, generator consistent", rep.vertices_checked)
    } else {
        format!(
            "{} violations in {} vertices{}",
            rep.violations.len(),
            rep.vertices_checked,
            if rep.skeleton_connected { "" } else { ", symmetric skeleton disconnected" }
        )
    };
    finish(spec, Status { passed, verdict }, rep, None)
}

fn hypotheses(spec: &ExperimentSpec) -> Result<Finished> {
    let g = builtin_graph(&spec.graph)?;
    let cfg = HypothesisConfig {
        seed: spec.seed,
        r_min: spec.r_min,
        r_max: spec.r_max,
        max_shells: spec.max_shells,
        skew_tol: spec.tol,
        ball: ball_config(spec),
        ..HypothesisConfig::default()
    };
    let rep: HypothesisReport = check_hypotheses(&*g, &cfg)?;
    let v = &rep.verdicts;
    let passed = v.all_pass();
    let mut failed = Vec::new();
    if !v.volume_growth {
        failed.push("volume growth");
    }
    if !v.ellipticity {
        failed.push("ellipticity");
    }
    if !v.poincare {
        failed.push("Poincare inequality");
    }
    if !v.skew_mass_finite {
        failed.push("finite skew mass");
    }
    let mut verdict = if passed {
        format!(
            "hypotheses hold on the sample (d_fit {:.3}, alpha {:.3}, W {:.6} {})",
            rep.vg.d_fit,
            rep.delta.alpha,
            rep.skew_mass.w_partial,
            verdict_name(rep.skew_mass.verdict)
        )
    } else {
        format!("failed: {}", failed.join(", "))
    };
    for w in &rep.warnings {
        verdict.push_str("; warning: ");
        verdict.push_str(w);
    }
    finish(spec, Status { passed, verdict }, rep, None)
}

fn simulate(spec: &ExperimentSpec) -> Result<Finished> {
    let g = builtin_graph(&spec.graph)?;
    let cfg = sim_config(spec);
    let root = g.root();
    let x0 = StateVector::indicator(&*g, root, &cfg.ball_config())?;
    let kinds = norm_kinds(spec, true);
    let (obs, stats) = evolve_observed(&*g, &x0, &cfg, spec.part.into(), observe_norms(&kinds))?;
    let (rows, fits) = rows_and_fits(&kinds, &obs, spec.window)?;
    let reference_exponents = match g.dimension_hint() {
        Some(d) => kinds
            .iter()
            .map(|&k| {
                let base = -(d / 2.0) * (1.0 - 1.0 / k.p());
                let exponent = match k {
                    NormKind::Lp(_) => base,
                    NormKind::Q(_) => base - 0.5,
                };
                ReferenceExponent { norm_kind: k, exponent }
            })
            .collect(),
        None => Vec::new(),
    };
    let verdict = format!("simulated to t = {}: {}", spec.t_max, summarize_fits(&fits));
    let result = SimulateResult {
        initial_vertex: root,
        stats,
        fits,
        reference_exponents,
    };
    finish(spec, Status { passed: true, verdict }, result, Some(&rows))
}

fn fit_decay(spec: &ExperimentSpec) -> Result<Finished> {
    let input = spec.input.clone().context("fit-decay needs --input")?;
    let rows = read_csv(&input)?;
    let mut kinds: Vec<String> = Vec::new();
    for r in &rows {
        if !kinds.contains(&r.norm_kind) {
            kinds.push(r.norm_kind.clone());
        }
    }
    if kinds.is_empty() {
        bail!("{} has no samples", input.display());
    }
    let mut fits = Vec::new();
    for name in &kinds {
        let kind: NormKind = name
            .parse()
            .with_context(|| format!("unknown norm_kind {name:?} in {}", input.display()))?;
        let series: Vec<(f64, f64)> = rows
            .iter()
            .filter(|r| &r.norm_kind == name)
            .map(|r| (r.t, r.value))
            .collect();
        fits.push(fit_power_law(kind, &series, spec.window).with_context(|| format!("fitting {name}"))?);
    }
    let verdict = summarize_fits(&fits);
    let result = FitDecayResult { input, fits };
    finish(spec, Status { passed: true, verdict }, result, None)
}

fn counterexample(spec: &ExperimentSpec) -> Result<Finished> {
    let g = builtin_graph(&spec.graph)?;
    let skew_mass = estimate_skew_mass(&*g, spec.max_shells, spec.tol, &ball_config(spec))?;

    let t_end = spec.t_max.floor();
    if t_end < 20.0 {
        bail!("counterexample needs --t-max of at least 20, got {}", spec.t_max);
    }
    // integer times, so that the peak x_(i,0)(i) is sampled for every i
    let times: Vec<f64> = (1..=t_end as u32).map(f64::from).collect();
    let mut cfg = sim_config(spec).with_sample_times(times);
    cfg.t_max = t_end;
    let x0 = StateVector::indicator(&*g, g.root(), &cfg.ball_config())?;
    let linf = NormKind::Lp(f64::INFINITY);
    let (obs, stats) = evolve_observed(&*g, &x0, &cfg, spec.part.into(), |s| {
        let peak = s.get(VertexId::pair(s.t.round() as i32, 0));
        (s.t, s.norm(linf).unwrap_or(f64::NAN), peak)
    })?;
    let series: Vec<(f64, f64)> = obs.iter().map(|o| (o.0, o.1)).collect();
    let fit = fit_power_law(linf, &series, spec.window)?;

    // the bound is attained at i = 1, so allow the integration error budget
    let slack = 10.0 * spec.atol;
    let mut below = Vec::new();
    let mut min_ratio = f64::INFINITY;
    for &(t, _, peak) in &obs {
        let i = t as u32;
        let bound = stirling_lower_bound(i);
        min_ratio = min_ratio.min(peak / bound);
        if peak < bound - slack {
            below.push(i);
        }
    }
    let reference_exponent = -1.0;
    let degraded = fit.exponent > reference_exponent + 0.25;
    let divergent = skew_mass.verdict == SkewVerdict::Divergent;
    let passed = degraded && divergent && below.is_empty();
    let w = if divergent {
        "W = inf".to_string()
    } else {
        format!("W ~ {:.4}, {}", skew_mass.w_partial, verdict_name(skew_mass.verdict))
    };
    let verdict = if passed {
        format!(
            "skew mass divergent ({w}), decay degraded: l_inf exponent {:.4} against {reference_exponent} under finite skew mass",
            fit.exponent
        )
    } else {
        format!(
            "degradation not reproduced ({w}, l_inf exponent {:.4}, {} peaks below e^-1 i^-1/2)",
            fit.exponent,
            below.len()
        )
    };
    let rows: Vec<NormRow> = obs
        .iter()
        .map(|o| NormRow {
            t: o.0,
            norm_kind: linf.to_string(),
            value: o.1,
        })
        .collect();
    let result = CounterexampleResult {
        skew_mass,
        stats,
        fit,
        reference_exponent,
        degraded,
        peaks_checked: obs.len(),
        peaks_below_bound: below,
        min_peak_ratio: min_ratio,
    };
    finish(spec, Status { passed, verdict }, result, Some(&rows))
}

fn oscillate(spec: &ExperimentSpec) -> Result<Finished> {
    let coupling = builtin_graph(&spec.graph)?;
    let omega = 1.0;
    let sys = SinCoupling::new(coupling.clone(), omega);
    let cand = PhaseLockCandidate::trivial(omega);
    let lock_radius = spec.r_max;
    let residual = verify_phase_lock(&sys, &cand, coupling.root(), lock_radius, &ball_config(spec))?;
    let mut result = OscillateResult {
        omega,
        phase_lock_residual: residual,
        lock_radius,
        epsilon: spec.eps,
        stats: None,
        fits: Vec::new(),
        max_l1_deviation: None,
    };
    if residual > PHASE_LOCK_TOL {
        let verdict = format!("phase-lock candidate rejected: residual {residual:.3e}");
        return finish(spec, Status { passed: false, verdict }, result, None);
    }

    let mut ncfg = NonlinearConfig::new(sim_config(spec));
    ncfg.epsilon = spec.eps;
    let unit = StateVector::indicator(&*coupling, coupling.root(), &ncfg.sim.ball_config())?;
    let pert = StateVector::new(
        unit.ball().clone(),
        unit.values().iter().map(|v| spec.eps * v).collect(),
    )?;
    let kinds = norm_kinds(spec, false);
    let l1 = NormKind::Lp(1.0);
    let mut max_l1 = lp_norm(pert.values(), 1.0)?;
    let (obs, stats) = simulate_nonlinear_observed(&sys, &cand, &pert, &ncfg, |s| {
        max_l1 = max_l1.max(s.norm(l1).unwrap_or(f64::NAN));
        observe_norms(&kinds)(s)
    })?;
    let (rows, fits) = rows_and_fits(&kinds, &obs, spec.window)?;
    let verdict = format!(
        "phase lock verified (residual {residual:.1e}); deviation {}",
        summarize_fits(&fits)
    );
    result.stats = Some(stats);
    result.fits = fits;
    result.max_l1_deviation = Some(max_l1);
    finish(spec, Status { passed: true, verdict }, result, Some(&rows))
}
