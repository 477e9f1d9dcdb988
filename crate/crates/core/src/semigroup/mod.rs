//! The heat semigroup `x(t) = e^{Lt} x0` on adaptively truncated balls.
//!
//! A simulation starts on `B(center, s + margin)`, with `s` the support radius
//! of `x0`, and enlarges the ball whenever the outer `margin` layers carry
//! more than `atol`. An optional Richardson check integrates a second copy
//! with twice the margin and requires the two to agree within `10 atol` at
//! every sample time, doubling the margin (up to three times) otherwise.

mod advection;
pub(crate) mod domain;
mod fit;
pub(crate) mod integrator;
mod norms;
mod operator;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Ball, BallConfig, DEFAULT_VERTEX_BUDGET};
use crate::graph::{FiniteSequence, Graph, Part, VertexId, DEFAULT_ADJACENCY_CAP};

pub use advection::{advection_oracle, advection_peak, stirling_lower_bound, MAX_INDEX};
pub use domain::MAX_RETRIES;
pub use fit::{default_window, fit_power_law, DecayFit, MIN_FIT_SAMPLES};
pub use norms::{
    lp_norm, parse_p, q_seminorm, q_seminorm_sequence, skew_bound_check, NormKind, SkewBound,
};
pub use operator::TruncatedOperator;

use domain::{BlockFactory, BlockRhs};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub t_max: f64,
    /// Increasing times in `[0, t_max]` at which the state is recorded.
    pub sample_times: Vec<f64>,
    pub rtol: f64,
    pub atol: f64,
    /// Width of the guard layer, in hops.
    pub truncation_margin: usize,
    pub richardson_check: bool,
    pub vertex_budget: usize,
    pub adjacency_cap: usize,
}

impl SimConfig {
    /// Defaults with 40 log-spaced sample times in `[1, t_max]`.
    pub fn new(t_max: f64) -> Self {
        Self {
            t_max,
            sample_times: log_spaced_times(t_max, 40),
            rtol: 1e-8,
            atol: 1e-10,
            truncation_margin: 8,
            richardson_check: true,
            vertex_budget: DEFAULT_VERTEX_BUDGET,
            adjacency_cap: DEFAULT_ADJACENCY_CAP,
        }
    }

    pub fn with_sample_times(mut self, times: Vec<f64>) -> Self {
        self.sample_times = times;
        self
    }

    pub fn ball_config(&self) -> BallConfig {
        BallConfig {
            adjacency_cap: self.adjacency_cap,
            vertex_budget: self.vertex_budget,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidInput(m));
        if !(self.t_max > 0.0) || !self.t_max.is_finite() {
            return bad(format!("t_max must be positive, got {}", self.t_max));
        }
        if !(self.rtol > 0.0 && self.atol > 0.0) {
            return bad("rtol and atol must be positive".into());
        }
        if self.truncation_margin == 0 {
            return bad("truncation_margin must be at least 1".into());
        }
        if self.sample_times.is_empty() {
            return bad("no sample times".into());
        }
        let mut prev = -1.0;
        for &t in &self.sample_times {
            if !(t > prev) || t > self.t_max || t < 0.0 {
                return bad(format!(
                    "sample times must increase within [0, t_max]; offending value {t}"
                ));
            }
            prev = t;
        }
        Ok(())
    }
}

/// `count` geometrically spaced times from 1 to `t_max` (inclusive).
pub fn log_spaced_times(t_max: f64, count: usize) -> Vec<f64> {
    if count < 2 || t_max <= 1.0 {
        return vec![t_max];
    }
    let r = t_max.ln() / (count - 1) as f64;
    let mut v: Vec<f64> = (0..count).map(|k| (k as f64 * r).exp()).collect();
    v[count - 1] = t_max;
    v
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimStats {
    pub steps: usize,
    pub rejected_steps: usize,
    pub retries: usize,
    /// Margin in use by the successful attempt.
    pub truncation_margin: usize,
    pub final_radius: usize,
    pub final_vertices: usize,
    /// Largest primary/reference difference over the sample times.
    pub richardson_max_difference: Option<f64>,
}

/// A finitely supported sequence stored on a ball.
#[derive(Debug, Clone)]
pub struct StateVector {
    ball: Arc<Ball>,
    values: Vec<f64>,
    support_radius: usize,
}

impl StateVector {
    /// `values` may be shorter than the ball; missing entries are zero.
    pub fn new(ball: Arc<Ball>, mut values: Vec<f64>) -> Result<Self> {
        if values.len() > ball.len() {
            return Err(Error::InvalidInput(format!(
                "{} values for a ball of {} vertices",
                values.len(),
                ball.len()
            )));
        }
        values.resize(ball.len(), 0.0);
        let support_radius = support_radius(&ball, &values);
        Ok(Self {
            ball,
            values,
            support_radius,
        })
    }

    /// Ball large enough to hold `x`, centered at `center`.
    pub fn from_sequence(
        graph: &dyn Graph,
        center: VertexId,
        x: &FiniteSequence,
        cfg: &BallConfig,
    ) -> Result<Self> {
        let mut ball = Ball::new(graph, center, 0, *cfg)?;
        let mut r = 0;
        for v in x.support() {
            while !ball.contains(v) {
                let before = ball.len();
                r += 1;
                ball.grow_to(graph, r)?;
                if ball.len() == before {
                    return Err(Error::MissingVertex(v));
                }
            }
        }
        let values = ball.vertices().iter().map(|&v| x.get(v)).collect();
        Self::new(Arc::new(ball), values)
    }

    pub fn indicator(graph: &dyn Graph, v: VertexId, cfg: &BallConfig) -> Result<Self> {
        Self::from_sequence(graph, v, &FiniteSequence::indicator(v), cfg)
    }

    pub fn ball(&self) -> &Arc<Ball> {
        &self.ball
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn support_radius(&self) -> usize {
        self.support_radius
    }

    pub fn get(&self, v: VertexId) -> f64 {
        self.ball.index_of(v).map_or(0.0, |i| self.values[i])
    }

    pub fn to_sequence(&self) -> FiniteSequence {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, &x)| x != 0.0)
            .map(|(i, &x)| (self.ball.vertex(i), x))
            .collect()
    }

    pub fn as_state_ref(&self, t: f64) -> StateRef<'_> {
        StateRef {
            t,
            ball: &self.ball,
            values: &self.values,
        }
    }

    pub fn norms(&self, ps: &[f64]) -> Result<Vec<f64>> {
        ps.iter().map(|&p| lp_norm(&self.values, p)).collect()
    }

    pub fn q_seminorms(&self, ps: &[f64]) -> Result<Vec<f64>> {
        ps.iter()
            .map(|&p| q_seminorm(&self.ball, &self.values, p))
            .collect()
    }
}

fn support_radius(ball: &Ball, values: &[f64]) -> usize {
    values
        .iter()
        .enumerate()
        .filter(|(_, &x)| x != 0.0)
        .map(|(i, _)| ball.distance(i))
        .max()
        .unwrap_or(0)
}

/// Borrowed view of the state at one sample time. `values` covers a prefix
/// of `ball`; the state is zero beyond it.
#[derive(Debug, Clone, Copy)]
pub struct StateRef<'a> {
    pub t: f64,
    pub ball: &'a Ball,
    pub values: &'a [f64],
}

impl StateRef<'_> {
    pub fn get(&self, v: VertexId) -> f64 {
        self.ball
            .index_of(v)
            .and_then(|i| self.values.get(i).copied())
            .unwrap_or(0.0)
    }

    pub fn norm(&self, kind: NormKind) -> Result<f64> {
        match kind {
            NormKind::Lp(p) => lp_norm(self.values, p),
            NormKind::Q(p) => q_seminorm(self.ball, self.values, p),
        }
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }
}

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub t: f64,
    pub state: StateVector,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub snapshots: Vec<Snapshot>,
    pub stats: SimStats,
}

impl Trajectory {
    pub fn norm_series(&self, kind: NormKind) -> Result<Vec<(f64, f64)>> {
        self.snapshots
            .iter()
            .map(|s| Ok((s.t, s.state.as_state_ref(s.t).norm(kind)?)))
            .collect()
    }

    pub fn last(&self) -> Option<&Snapshot> {
        self.snapshots.last()
    }
}

/// `fit_power_law` applied to a norm series of `traj`.
pub fn fit_decay(traj: &Trajectory, kind: NormKind, window: [f64; 2]) -> Result<DecayFit> {
    fit_power_law(kind, &traj.norm_series(kind)?, window)
}

struct LinearFactory<'g> {
    graph: &'g dyn Graph,
    part: Part,
}

impl BlockRhs for TruncatedOperator {
    fn eval(&self, x: &[f64], dx: &mut [f64]) {
        self.apply(x, dx)
    }
}

impl BlockFactory for LinearFactory<'_> {
    type Block = TruncatedOperator;

    fn graph(&self) -> &dyn Graph {
        self.graph
    }

    fn build(&self, ball: &Ball, n: usize) -> Result<TruncatedOperator> {
        Ok(TruncatedOperator::new(ball, n, self.part))
    }
}

/// Rebuild `x0` on a fresh ball that respects the configured budget.
fn initial_ball(graph: &dyn Graph, x0: &StateVector, cfg: &SimConfig) -> Result<(Ball, Vec<f64>)> {
    let ball = Ball::new(
        graph,
        x0.ball.center(),
        x0.support_radius,
        cfg.ball_config(),
    )?;
    let values = ball.vertices().iter().map(|&v| x0.get(v)).collect();
    Ok((ball, values))
}

/// Integrate `dx/dt = L x` (or one part of `L`) and map every sample through
/// `observe`, without storing states.
pub fn evolve_observed<T>(
    graph: &dyn Graph,
    x0: &StateVector,
    cfg: &SimConfig,
    part: Part,
    observe: impl FnMut(&StateRef) -> T,
) -> Result<(Vec<T>, SimStats)> {
    cfg.validate()?;
    let (ball, values) = initial_ball(graph, x0, cfg)?;
    let factory = LinearFactory { graph, part };
    let out = domain::drive(
        &factory,
        ball,
        &values,
        x0.support_radius,
        cfg,
        None,
        observe,
    )?;
    Ok((out.observations, out.stats))
}

/// Integrate `dx/dt = L x` (or one part of `L`) and keep every sampled state.
/// All snapshots share the final ball.
pub fn evolve(graph: &dyn Graph, x0: &StateVector, cfg: &SimConfig, part: Part) -> Result<Trajectory> {
    cfg.validate()?;
    let (ball, values) = initial_ball(graph, x0, cfg)?;
    let factory = LinearFactory { graph, part };
    let out = domain::drive(
        &factory,
        ball,
        &values,
        x0.support_radius,
        cfg,
        None,
        |s: &StateRef| (s.t, s.values.to_vec()),
    )?;
    snapshots_on(out.ball, out.observations, out.stats)
}

pub(crate) fn snapshots_on(
    ball: Ball,
    observations: Vec<(f64, Vec<f64>)>,
    stats: SimStats,
) -> Result<Trajectory> {
    let ball = Arc::new(ball);
    let snapshots = observations
        .into_iter()
        .map(|(t, v)| {
            Ok(Snapshot {
                t,
                state: StateVector::new(ball.clone(), v)?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(Trajectory { snapshots, stats })
}
