//! Sampled estimates of the geometric hypotheses behind the decay theorem.
//!
//! Every hypothesis quantifies over all vertices and radii of an infinite
//! graph, which no finite computation can certify. The estimators here work
//! on explicit samples (listed in each record) and the resulting
//! [`HypothesisReport`] is evidence, not proof:
//!
//! - volume growth `VG(d)`: pooled log-log slope of `Vol(v, r)`;
//! - local ellipticity: `alpha = min w_sym(v,v') / m(v)` over a ball;
//! - Poincaré inequality: largest generalized Rayleigh quotient per ball;
//! - skew mass `W = sum_v sum_v' |w_skew(v,v')|`, accumulated shell by shell
//!   with a heuristic convergence verdict.

mod poincare;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Ball, BallConfig};
use crate::graph::{Graph, VertexId};
use crate::SCHEMA_VERSION;

pub use poincare::{
    estimate_poincare, max_generalized_eigenvalue, PoincareEstimate, PoincareForms,
};

/// Default per-shell threshold below which skew mass is considered converged.
pub const DEFAULT_SKEW_TOL: f64 = 1e-7;

/// Minimum log-log slope of the shell tail for a divergence verdict.
pub const DIVERGENCE_SLOPE: f64 = -0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolumeGrowth {
    pub d_fit: f64,
    pub c_vol_low: f64,
    pub c_vol_high: f64,
    pub r_min: usize,
    pub r_max: usize,
    pub sample_centers: Vec<VertexId>,
    /// Pooled `(r, Vol)` samples, center-major.
    pub samples: Vec<(usize, f64)>,
}

/// Fit `Vol(v, r) ~ r^d` by least squares on all integer radii in
/// `[r_min, r_max]`, pooled over `centers`.
///
/// The regressor is `ln(r + 1/2)`: on lattices the ball volume is a polynomial
/// in `r + 1/2` to leading orders, so the slope is free of the `O(1/r)` bias a
/// plain `ln r` fit carries at small radii. The sandwich constants use `r^d`
/// itself and bracket every sample exactly.
pub fn fit_volume_growth(
    graph: &dyn Graph,
    centers: &[VertexId],
    r_min: usize,
    r_max: usize,
    cfg: &BallConfig,
) -> Result<VolumeGrowth> {
    if r_min < 1 || r_max < 2 * r_min {
        return Err(Error::InvalidInput(format!(
            "volume fit needs 1 <= r_min and r_max >= 2 r_min, got [{r_min}, {r_max}]"
        )));
    }
    if centers.len() < 3 {
        return Err(Error::InvalidInput(
            "volume fit needs at least three centers".into(),
        ));
    }
    let mut samples = Vec::new();
    for &c in centers {
        let ball = Ball::new(graph, c, r_max, *cfg)?;
        let mut vol = 0.0;
        let mut i = 0;
        for r in 0..=r_max {
            let end = ball.within(r).end;
            vol += ball.measures()[i..end].iter().sum::<f64>();
            i = end;
            if r >= r_min {
                samples.push((r, vol));
            }
        }
    }
    let xs: Vec<f64> = samples.iter().map(|&(r, _)| (r as f64 + 0.5).ln()).collect();
    let ys: Vec<f64> = samples.iter().map(|&(_, v)| v.ln()).collect();
    if ys.iter().any(|y| !y.is_finite()) {
        return Err(Error::DegenerateFit("a sampled ball has zero volume".into()));
    }
    let (slope, _, _) = least_squares(&xs, &ys)
        .ok_or_else(|| Error::DegenerateFit("radii do not vary".into()))?;
    let spread = ys.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b))
        - ys.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    if spread == 0.0 {
        return Err(Error::DegenerateFit(
            "all sampled volumes are equal (finite graph?)".into(),
        ));
    }
    let ratios = samples.iter().map(|&(r, v)| v / (r as f64).powf(slope));
    let (lo, hi) = ratios.fold((f64::INFINITY, 0.0f64), |(lo, hi), q| (lo.min(q), hi.max(q)));
    Ok(VolumeGrowth {
        d_fit: slope,
        c_vol_low: lo,
        c_vol_high: hi,
        r_min,
        r_max,
        sample_centers: centers.to_vec(),
        samples,
    })
}

/// Ordinary least squares `y = slope x + intercept`; returns `(slope, intercept, r^2)`.
pub(crate) fn least_squares(xs: &[f64], ys: &[f64]) -> Option<(f64, f64, f64)> {
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 {
        1.0
    } else {
        (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0)
    };
    Some((slope, intercept, r2))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ellipticity {
    pub alpha: f64,
    /// Pair `(v, v')` attaining the minimum.
    pub witness: (VertexId, VertexId),
    pub center: VertexId,
    pub radius: usize,
    pub vertices_sampled: usize,
}

/// `alpha = min_{v in B, v' in N(v)} w_sym(v,v') / m(v)` over `B(center, r)`.
pub fn estimate_alpha(
    graph: &dyn Graph,
    center: VertexId,
    r: usize,
    cfg: &BallConfig,
) -> Result<Ellipticity> {
    let ball = Ball::new(graph, center, r, *cfg)?;
    let mut best = (f64::INFINITY, (center, center));
    for i in 0..ball.len() {
        let m = ball.measure(i);
        for n in ball.neighbors(i).iter().filter(|n| n.is_symmetric_edge()) {
            let q = n.w_sym() / m;
            if q < best.0 {
                best = (q, (ball.vertex(i), n.id));
            }
        }
    }
    if !best.0.is_finite() {
        return Err(Error::InvalidInput(format!(
            "no symmetric edges within B({center}, {r})"
        )));
    }
    Ok(Ellipticity {
        alpha: best.0,
        witness: best.1,
        center,
        radius: r,
        vertices_sampled: ball.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SkewVerdict {
    Convergent,
    Divergent,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkewMass {
    pub w_partial: f64,
    /// Index of the last shell included.
    pub shells_used: usize,
    /// Log-log slope of shell contributions over the last half of shells,
    /// `None` when the tail has fewer than two positive contributions.
    pub tail_slope: Option<f64>,
    pub verdict: SkewVerdict,
    pub tol: f64,
    pub budget_exhausted: bool,
    /// The last (up to) three shell contributions.
    pub last_shells: Vec<f64>,
}

/// Accumulate `W` over the shells `S_k = B(root,k) \ B(root,k-1)`, `k = 0..=max_shells`.
///
/// Each ordered pair `(v, v')` is attributed to the shell of `v`, so every pair
/// is counted exactly once. Verdict rules:
///
/// - convergent: the last three shell contributions are below `tol` and non-increasing;
/// - divergent: the tail (last half of shells) stays positive with log-log
///   slope at least [`DIVERGENCE_SLOPE`];
/// - inconclusive otherwise, or when the vertex budget runs out.
pub fn estimate_skew_mass(
    graph: &dyn Graph,
    max_shells: usize,
    tol: f64,
    cfg: &BallConfig,
) -> Result<SkewMass> {
    if max_shells < 3 {
        return Err(Error::InvalidInput("max_shells must be at least 3".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidInput("tol must be positive".into()));
    }
    let mut ball = Ball::new(graph, graph.root(), 0, *cfg)?;
    let mut shells: Vec<f64> = Vec::with_capacity(max_shells + 1);
    let mut budget_exhausted = false;
    for k in 0..=max_shells {
        if k > 0 {
            match ball.grow_to(graph, k) {
                Ok(()) => {}
                Err(Error::BudgetExceeded { .. }) => {
                    budget_exhausted = true;
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        let range = ball.beyond(k);
        if range.is_empty() {
            // finite graph exhausted: remaining shells are empty
            shells.push(0.0);
            continue;
        }
        let c: f64 = range
            .flat_map(|i| ball.neighbors(i).iter())
            .map(|n| n.w_skew().abs())
            .sum();
        shells.push(c);
    }

    let w_partial: f64 = shells.iter().sum();
    let shells_used = shells.len().saturating_sub(1);
    let tail = &shells[shells.len() / 2..];
    let tail_slope = {
        let pts: Vec<(f64, f64)> = tail
            .iter()
            .enumerate()
            .map(|(j, &c)| (shells.len() / 2 + j, c))
            .filter(|&(k, c)| k > 0 && c > 0.0)
            .map(|(k, c)| ((k as f64).ln(), c.ln()))
            .collect();
        let (xs, ys): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
        least_squares(&xs, &ys).map(|(s, _, _)| s)
    };
    let last: Vec<f64> = shells[shells.len().saturating_sub(3)..].to_vec();

    let verdict = if budget_exhausted {
        SkewVerdict::Inconclusive
    } else if last.len() == 3 && last.iter().all(|&c| c < tol) && last[0] >= last[1] && last[1] >= last[2]
    {
        SkewVerdict::Convergent
    } else if tail.iter().all(|&c| c > 0.0)
        && tail_slope.is_some_and(|s| s >= DIVERGENCE_SLOPE)
    {
        SkewVerdict::Divergent
    } else {
        SkewVerdict::Inconclusive
    };

    Ok(SkewMass {
        w_partial,
        shells_used,
        tail_slope,
        verdict,
        tol,
        budget_exhausted,
        last_shells: last,
    })
}

/// Sampling plan for [`check_hypotheses`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisConfig {
    pub seed: u64,
    /// Number of volume-growth centers (the root is always one of them).
    pub centers: usize,
    /// Radius of the ball around the root from which extra centers are drawn.
    pub center_radius: usize,
    pub r_min: usize,
    pub r_max: usize,
    /// Radius of the ball on which `alpha` is minimized.
    pub alpha_radius: usize,
    pub pi_radii: Vec<usize>,
    /// Poincaré radii whose double ball exceeds this many vertices are
    /// skipped; the estimate is a dense eigenproblem.
    pub pi_vertex_limit: usize,
    pub max_shells: usize,
    pub skew_tol: f64,
    pub ball: BallConfig,
}

impl Default for HypothesisConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            centers: 4,
            center_radius: 8,
            r_min: 4,
            r_max: 32,
            alpha_radius: 16,
            pi_radii: vec![2, 4, 8],
            pi_vertex_limit: 2500,
            max_shells: 400,
            skew_tol: DEFAULT_SKEW_TOL,
            ball: BallConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisVerdicts {
    pub volume_growth: bool,
    pub dimension_at_least_two: bool,
    pub ellipticity: bool,
    pub poincare: bool,
    pub skew_mass_finite: bool,
}

impl HypothesisVerdicts {
    /// All hypotheses of the decay theorem hold on the sample. A growth
    /// dimension below two only produces a warning.
    pub fn all_pass(&self) -> bool {
        self.volume_growth && self.ellipticity && self.poincare && self.skew_mass_finite
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub schema: String,
    pub graph: String,
    pub vg: VolumeGrowth,
    pub delta: Ellipticity,
    pub pi: Vec<PoincareEstimate>,
    pub skew_mass: SkewMass,
    /// Largest `|N(v)|` observed (estimate of the degree bound `D`).
    pub max_degree: usize,
    /// Largest `w_sym` observed (estimate of the weight bound `M`).
    pub max_sym_weight: f64,
    pub verdicts: HypothesisVerdicts,
    pub warnings: Vec<String>,
    pub notes: Vec<String>,
}

/// Deterministic sample of `count` centers: the root plus seeded draws from
/// `B(root, radius)`.
pub fn sample_centers(
    graph: &dyn Graph,
    count: usize,
    radius: usize,
    seed: u64,
    cfg: &BallConfig,
) -> Result<Vec<VertexId>> {
    let ball = Ball::new(graph, graph.root(), radius, *cfg)?;
    let mut pool: Vec<VertexId> = ball.vertices()[1..].to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    pool.shuffle(&mut rng);
    let mut out = vec![graph.root()];
    out.extend(pool.into_iter().take(count.saturating_sub(1)));
    Ok(out)
}

pub fn check_hypotheses(graph: &dyn Graph, cfg: &HypothesisConfig) -> Result<HypothesisReport> {
    let centers = sample_centers(graph, cfg.centers, cfg.center_radius, cfg.seed, &cfg.ball)?;
    let vg = fit_volume_growth(graph, &centers, cfg.r_min, cfg.r_max, &cfg.ball)?;
    let delta = estimate_alpha(graph, graph.root(), cfg.alpha_radius, &cfg.ball)?;
    let mut pi = Vec::new();
    let mut pi_skipped = Vec::new();
    for &r in &cfg.pi_radii {
        let n = Ball::new(graph, graph.root(), 2 * r, cfg.ball)?.len();
        if n > cfg.pi_vertex_limit {
            pi_skipped.push((r, n));
        } else {
            pi.push(estimate_poincare(graph, graph.root(), r, &cfg.ball)?);
        }
    }
    let skew_mass = estimate_skew_mass(graph, cfg.max_shells, cfg.skew_tol, &cfg.ball)?;
    let sample = Ball::new(graph, graph.root(), cfg.alpha_radius, cfg.ball)?;

    let verdicts = HypothesisVerdicts {
        volume_growth: vg.d_fit > 0.0 && vg.c_vol_low > 0.0,
        dimension_at_least_two: vg.d_fit >= 2.0 - 0.1,
        ellipticity: delta.alpha > 0.0,
        poincare: !pi.is_empty() && pi.iter().all(|p| p.c_pi.is_finite() && p.c_pi > 0.0),
        skew_mass_finite: skew_mass.verdict == SkewVerdict::Convergent,
    };
    let mut warnings = Vec::new();
    if !verdicts.dimension_at_least_two {
        warnings.push(format!(
            "d < 2: fitted growth dimension {:.3} is below the d >= 2 range covered by the decay theorem",
            vg.d_fit
        ));
    }
    if skew_mass.budget_exhausted {
        warnings.push("vertex budget exhausted while accumulating skew mass".into());
    }
    if pi.is_empty() {
        warnings.push("no Poincaré radius fits within the vertex limit".into());
    }
    let mut notes: Vec<String> = vec![
        "all hypotheses are estimated on the listed samples; the report is evidence, not proof".into(),
        format!(
            "degree bound D estimated as the maximum |N(v)| = {} observed on B(root, {}); a global bound cannot be verified by sampling",
            sample.max_degree(),
            cfg.alpha_radius
        ),
        format!(
            "volume-growth radii [{}, {}] are user-chosen; constants may not have stabilized",
            cfg.r_min, cfg.r_max
        ),
    ];
    for (r, n) in pi_skipped {
        notes.push(format!(
            "Poincaré radius {r} skipped: B(root, {}) has {n} vertices, above the limit {}",
            2 * r,
            cfg.pi_vertex_limit
        ));
    }
    Ok(HypothesisReport {
        schema: SCHEMA_VERSION.to_string(),
        graph: graph.name(),
        max_degree: sample.max_degree(),
        max_sym_weight: (0..sample.len())
            .flat_map(|i| sample.neighbors(i).iter())
            .filter(|n| n.is_symmetric_edge())
            .map(|n| n.w_sym())
            .fold(0.0, f64::max),
        vg,
        delta,
        pi,
        skew_mass,
        verdicts,
        warnings,
        notes,
    })
}
