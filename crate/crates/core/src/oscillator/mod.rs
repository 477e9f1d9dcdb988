//! Lattices of weakly coupled phase oscillators
//!
//! ```text
//! d theta_v / dt = omega_v + sum_{v'} H(theta_v' - theta_v, v, v')
//! ```
//!
//! A phase-locked solution `theta_v = Omega t + theta_bar_v` linearizes to the
//! heat equation of the directed graph with `w(v,v') = H'(theta_bar_v' - theta_bar_v, v, v')`;
//! [`linearize`] builds that graph so the hypothesis checks and the linear
//! semigroup apply unchanged. [`simulate_nonlinear`] integrates the full
//! system in the co-rotating frame, with oscillators outside the simulated
//! ball pinned to the locked motion.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Ball, OUTSIDE};
use crate::graph::{neighbors, Adjacency, Graph, VertexId, DEFAULT_ADJACENCY_CAP};
use crate::semigroup::domain::{self, BlockFactory, BlockRhs};
use crate::semigroup::{self, lp_norm, SimConfig, SimStats, StateRef, StateVector, Trajectory};

/// A phase-oscillator network with coupling `H(x, v, v')`, smooth and
/// `2 pi`-periodic in `x`.
pub trait OscillatorSystem: Send + Sync {
    /// Per-pair data needed to evaluate `H(., v, v')`.
    type Edge: Copy + Send + Sync;

    fn root(&self) -> VertexId;
    fn name(&self) -> String;
    fn omega(&self, v: VertexId) -> f64;
    /// Interaction partners of `v`. The relation must be symmetric: if `v'`
    /// is listed for `v` then `v` is listed for `v'`, possibly with an edge
    /// on which `H` vanishes.
    fn interactions(&self, v: VertexId) -> Vec<(VertexId, Self::Edge)>;
    fn h(&self, x: f64, e: &Self::Edge) -> f64;
    fn h_prime(&self, x: f64, e: &Self::Edge) -> f64;

    /// `H(x, v, v')`, zero for non-interacting pairs.
    fn coupling(&self, x: f64, v: VertexId, w: VertexId) -> f64 {
        self.interactions(v)
            .iter()
            .find(|(u, _)| *u == w)
            .map_or(0.0, |(_, e)| self.h(x, e))
    }

    fn coupling_derivative(&self, x: f64, v: VertexId, w: VertexId) -> f64 {
        self.interactions(v)
            .iter()
            .find(|(u, _)| *u == w)
            .map_or(0.0, |(_, e)| self.h_prime(x, e))
    }
}

type VertexFn = Arc<dyn Fn(VertexId) -> f64 + Send + Sync>;

/// `H(x, v, v') = k_{v,v'} (sin(x + beta) - sin(beta))`, with `k_{v,v'} = w(v,v')`
/// read from a coupling graph. `beta = 0` is plain sine coupling.
#[derive(Clone)]
pub struct SinCoupling {
    graph: Arc<dyn Graph>,
    omega: VertexFn,
    lag: f64,
    adjacency_cap: usize,
}

impl SinCoupling {
    pub fn new(graph: Arc<dyn Graph>, omega: f64) -> Self {
        Self {
            graph,
            omega: Arc::new(move |_| omega),
            lag: 0.0,
            adjacency_cap: DEFAULT_ADJACENCY_CAP,
        }
    }

    pub fn with_frequencies(mut self, omega: impl Fn(VertexId) -> f64 + Send + Sync + 'static) -> Self {
        self.omega = Arc::new(omega);
        self
    }

    pub fn with_phase_lag(mut self, beta: f64) -> Self {
        self.lag = beta;
        self
    }

    pub fn coupling_graph(&self) -> &Arc<dyn Graph> {
        &self.graph
    }
}

impl fmt::Debug for SinCoupling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SinCoupling")
            .field("graph", &self.graph.name())
            .field("lag", &self.lag)
            .finish()
    }
}

impl OscillatorSystem for SinCoupling {
    type Edge = f64;

    fn root(&self) -> VertexId {
        self.graph.root()
    }

    fn name(&self) -> String {
        if self.lag == 0.0 {
            format!("sin-coupling({})", self.graph.name())
        } else {
            format!("sin-coupling({}, lag {})", self.graph.name(), self.lag)
        }
    }

    fn omega(&self, v: VertexId) -> f64 {
        (self.omega)(v)
    }

    fn interactions(&self, v: VertexId) -> Vec<(VertexId, f64)> {
        // an oversized neighborhood is reported by ball construction; here it
        // is simply truncated to nothing rather than panicking
        neighbors(&*self.graph, v, self.adjacency_cap)
            .map(|nb| nb.into_iter().map(|n| (n.id, n.w_out)).collect())
            .unwrap_or_default()
    }

    fn h(&self, x: f64, k: &f64) -> f64 {
        k * ((x + self.lag).sin() - self.lag.sin())
    }

    fn h_prime(&self, x: f64, k: &f64) -> f64 {
        k * (x + self.lag).cos()
    }
}

/// Ansatz `theta_v(t) = Omega t + theta_bar_v`.
#[derive(Clone)]
pub struct PhaseLockCandidate {
    pub omega: f64,
    theta_bar: VertexFn,
}

impl PhaseLockCandidate {
    pub fn new(omega: f64, theta_bar: impl Fn(VertexId) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            omega,
            theta_bar: Arc::new(theta_bar),
        }
    }

    /// Synchronous state: all phase lags zero.
    pub fn trivial(omega: f64) -> Self {
        Self::new(omega, |_| 0.0)
    }

    pub fn theta_bar(&self, v: VertexId) -> f64 {
        (self.theta_bar)(v)
    }

    /// Same velocity, every lag shifted by `c`.
    pub fn shifted(&self, c: f64) -> Self {
        let f = self.theta_bar.clone();
        Self::new(self.omega, move |v| f(v) + c)
    }
}

impl fmt::Debug for PhaseLockCandidate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PhaseLockCandidate")
            .field("omega", &self.omega)
            .finish_non_exhaustive()
    }
}

/// `max_v |Omega - omega_v - sum_{v'} H(theta_bar_v' - theta_bar_v, v, v')|` over
/// `B(center, radius)` of the linearized graph.
pub fn verify_phase_lock<S: OscillatorSystem + Clone>(
    sys: &S,
    cand: &PhaseLockCandidate,
    center: VertexId,
    radius: usize,
    cfg: &crate::geometry::BallConfig,
) -> Result<f64> {
    let lin = linearize(sys, cand);
    let ball = Ball::new(&lin, center, radius, *cfg)?;
    Ok(ball
        .vertices()
        .iter()
        .map(|&v| phase_lock_residual(sys, cand, v).abs())
        .fold(0.0, f64::max))
}

/// Signed ansatz residual at one vertex.
pub fn phase_lock_residual<S: OscillatorSystem>(sys: &S, cand: &PhaseLockCandidate, v: VertexId) -> f64 {
    let tv = cand.theta_bar(v);
    let pull: f64 = sys
        .interactions(v)
        .iter()
        .map(|(u, e)| sys.h(cand.theta_bar(*u) - tv, e))
        .sum();
    cand.omega - sys.omega(v) - pull
}

/// The directed graph with `w(v,v') = H'(theta_bar_v' - theta_bar_v, v, v')`.
#[derive(Clone)]
pub struct Linearization<S> {
    sys: S,
    cand: PhaseLockCandidate,
}

pub fn linearize<S: OscillatorSystem + Clone>(sys: &S, cand: &PhaseLockCandidate) -> Linearization<S> {
    Linearization {
        sys: sys.clone(),
        cand: cand.clone(),
    }
}

impl<S: OscillatorSystem> Linearization<S> {
    pub fn system(&self) -> &S {
        &self.sys
    }

    pub fn candidate(&self) -> &PhaseLockCandidate {
        &self.cand
    }
}

impl<S: OscillatorSystem> Graph for Linearization<S> {
    fn root(&self) -> VertexId {
        self.sys.root()
    }

    fn adjacency(&self, v: VertexId) -> Adjacency {
        let tv = self.cand.theta_bar(v);
        let partners = self.sys.interactions(v);
        let mut adj = Adjacency::default();
        for (u, e) in &partners {
            let tu = self.cand.theta_bar(*u);
            let w = self.sys.h_prime(tu - tv, e);
            if w != 0.0 {
                adj.out_edges.push((*u, w));
            }
            if let Some((_, back)) = self.sys.interactions(*u).iter().find(|(x, _)| *x == v) {
                let w = self.sys.h_prime(tv - tu, back);
                if w != 0.0 {
                    adj.in_edges.push((*u, w));
                }
            }
        }
        adj
    }

    fn name(&self) -> String {
        format!("linearization({})", self.sys.name())
    }
}

/// Symmetric and skew parts of a coupling matrix `K`, read as the out-edge
/// weights of a graph: `K_sym = (K + K^T)/2`, `K_skew = (K - K^T)/2`.
pub struct CouplingSplit<'a> {
    k: &'a dyn Graph,
}

pub fn split_coupling_matrix(k: &dyn Graph) -> CouplingSplit<'_> {
    CouplingSplit { k }
}

impl CouplingSplit<'_> {
    /// `k_{v,w}` as reported by `v`'s out-edges.
    pub fn entry(&self, v: VertexId, w: VertexId) -> f64 {
        if v == w {
            return 0.0;
        }
        self.k
            .adjacency(v)
            .out_edges
            .iter()
            .filter(|e| e.0 == w)
            .map(|e| e.1)
            .sum()
    }

    pub fn sym(&self, v: VertexId, w: VertexId) -> f64 {
        (self.entry(v, w) + self.entry(w, v)) / 2.0
    }

    pub fn skew(&self, v: VertexId, w: VertexId) -> f64 {
        (self.entry(v, w) - self.entry(w, v)) / 2.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonlinearConfig {
    pub sim: SimConfig,
    /// Largest admissible `||perturbation||_1`.
    pub epsilon: f64,
    /// Abort once `||deviation||_inf` exceeds this.
    pub blowup_threshold: f64,
}

impl NonlinearConfig {
    pub fn new(sim: SimConfig) -> Self {
        Self {
            sim,
            epsilon: 0.01,
            blowup_threshold: FRAC_PI_2,
        }
    }
}

struct OscFactory<'a, S> {
    lin: &'a Linearization<S>,
}

struct OscBlock<'a, S: OscillatorSystem> {
    sys: &'a S,
    drift: Vec<f64>,
    ptr: Vec<usize>,
    /// `(partner index or OUTSIDE, theta_bar_v' - theta_bar_v, edge)`
    slots: Vec<(u32, f64, S::Edge)>,
}

impl<S: OscillatorSystem> BlockRhs for OscBlock<'_, S> {
    fn eval(&self, x: &[f64], dx: &mut [f64]) {
        for i in 0..self.drift.len() {
            let xi = x[i];
            let mut acc = self.drift[i];
            for (j, lag, e) in &self.slots[self.ptr[i]..self.ptr[i + 1]] {
                let xj = if *j == OUTSIDE { 0.0 } else { x[*j as usize] };
                acc += self.sys.h(lag + xj - xi, e);
            }
            dx[i] = acc;
        }
    }
}

impl<'a, S: OscillatorSystem> BlockFactory for OscFactory<'a, S> {
    type Block = OscBlock<'a, S>;

    fn graph(&self) -> &dyn Graph {
        self.lin
    }

    fn build(&self, ball: &Ball, n: usize) -> Result<OscBlock<'a, S>> {
        let sys = &self.lin.sys;
        let cand = &self.lin.cand;
        let mut drift = Vec::with_capacity(n);
        let mut ptr = vec![0];
        let mut slots = Vec::new();
        for &v in &ball.vertices()[..n] {
            drift.push(sys.omega(v) - cand.omega);
            let tv = cand.theta_bar(v);
            for (u, e) in sys.interactions(v) {
                let j = match ball.index_of(u) {
                    Some(j) if j < n => j as u32,
                    _ => OUTSIDE,
                };
                slots.push((j, cand.theta_bar(u) - tv, e));
            }
            ptr.push(slots.len());
        }
        Ok(OscBlock {
            sys,
            drift,
            ptr,
            slots,
        })
    }
}

/// Deviation `phi_v(t) = theta_v(t) - Omega t - theta_bar_v` started from
/// `perturbation`, observed at the sample times.
pub fn simulate_nonlinear_observed<S, T>(
    sys: &S,
    cand: &PhaseLockCandidate,
    perturbation: &StateVector,
    cfg: &NonlinearConfig,
    observe: impl FnMut(&StateRef) -> T,
) -> Result<(Vec<T>, SimStats)>
where
    S: OscillatorSystem + Clone,
{
    let out = run(sys, cand, perturbation, cfg, observe)?;
    Ok((out.observations, out.stats))
}

/// Deviation trajectory of the full nonlinear system; see
/// [`simulate_nonlinear_observed`].
pub fn simulate_nonlinear<S>(
    sys: &S,
    cand: &PhaseLockCandidate,
    perturbation: &StateVector,
    cfg: &NonlinearConfig,
) -> Result<Trajectory>
where
    S: OscillatorSystem + Clone,
{
    let out = run(sys, cand, perturbation, cfg, |s: &StateRef| (s.t, s.values.to_vec()))?;
    semigroup::snapshots_on(out.ball, out.observations, out.stats)
}

fn run<S, T>(
    sys: &S,
    cand: &PhaseLockCandidate,
    perturbation: &StateVector,
    cfg: &NonlinearConfig,
    observe: impl FnMut(&StateRef) -> T,
) -> Result<domain::DriveOutcome<T>>
where
    S: OscillatorSystem + Clone,
{
    cfg.sim.validate()?;
    let size = lp_norm(perturbation.values(), 1.0)?;
    if size > cfg.epsilon {
        return Err(Error::InvalidInput(format!(
            "perturbation has l1 norm {size}, above epsilon = {}",
            cfg.epsilon
        )));
    }
    let lin = linearize(sys, cand);
    let center = perturbation.ball().center();
    let ball = Ball::new(&lin, center, perturbation.support_radius(), cfg.sim.ball_config())?;
    let x0: Vec<f64> = ball.vertices().iter().map(|&v| perturbation.get(v)).collect();
    domain::drive(
        &OscFactory { lin: &lin },
        ball,
        &x0,
        perturbation.support_radius(),
        &cfg.sim,
        Some(cfg.blowup_threshold),
        observe,
    )
}
