//! Adaptive truncation driver shared by linear and nonlinear simulations.
//!
//! The state lives on a prefix `B(center, R)` of one shared, growing [`Ball`].
//! After every accepted step the guard layer (distance greater than
//! `R - margin`) is inspected; once it carries more than `atol` the radius is
//! enlarged and the new vertices start at zero. With the Richardson check
//! enabled a reference copy with twice the margin is integrated in the same
//! vector, so both copies take identical steps and their difference measures
//! truncation error alone.

use crate::error::{Error, Result};
use crate::geometry::Ball;
use crate::graph::Graph;

use super::integrator::{Dopri5, Rhs};
use super::{SimConfig, SimStats, StateRef};

/// Maximum number of margin doublings after a failed Richardson comparison.
pub const MAX_RETRIES: usize = 3;

/// Right-hand side on a ball prefix.
pub(crate) trait BlockRhs {
    fn eval(&self, x: &[f64], dx: &mut [f64]);
}

/// Builds the right-hand side for the first `n` vertices of a ball.
pub(crate) trait BlockFactory {
    type Block: BlockRhs;
    /// Graph whose ball hosts the state.
    fn graph(&self) -> &dyn Graph;
    fn build(&self, ball: &Ball, n: usize) -> Result<Self::Block>;
}

struct Block<B> {
    rhs: B,
    radius: usize,
    margin: usize,
    offset: usize,
    n: usize,
}

struct Blocks<B>(Vec<Block<B>>);

impl<B: BlockRhs> Rhs for Blocks<B> {
    fn eval(&self, x: &[f64], dx: &mut [f64]) {
        for b in &self.0 {
            let r = b.offset..b.offset + b.n;
            b.rhs.eval(&x[r.clone()], &mut dx[r]);
        }
    }
}

pub(crate) struct DriveOutcome<T> {
    pub observations: Vec<T>,
    pub ball: Ball,
    pub stats: SimStats,
}

enum AttemptError {
    Retry(f64),
    Fatal(Error),
}

impl From<Error> for AttemptError {
    fn from(e: Error) -> Self {
        AttemptError::Fatal(e)
    }
}

/// Integrate from `x0` (indexed like `ball`, zero beyond its length) and call
/// `observe` at every sample time. `blowup` aborts once the state leaves
/// `[-blowup, blowup]`.
pub(crate) fn drive<F, T, O>(
    factory: &F,
    mut ball: Ball,
    x0: &[f64],
    support_radius: usize,
    cfg: &SimConfig,
    blowup: Option<f64>,
    mut observe: O,
) -> Result<DriveOutcome<T>>
where
    F: BlockFactory,
    O: FnMut(&StateRef) -> T,
{
    cfg.validate()?;
    let mut margin = cfg.truncation_margin;
    let mut last_diff = 0.0;
    for retries in 0..=MAX_RETRIES {
        match attempt(factory, &mut ball, x0, support_radius, margin, cfg, blowup, &mut observe) {
            Ok((observations, mut stats)) => {
                stats.retries = retries;
                return Ok(DriveOutcome {
                    observations,
                    ball,
                    stats,
                });
            }
            Err(AttemptError::Retry(diff)) => {
                last_diff = diff;
                margin *= 2;
            }
            Err(AttemptError::Fatal(e)) => return Err(e),
        }
    }
    Err(Error::TruncationNotConverged {
        retries: MAX_RETRIES,
        difference: last_diff,
    })
}

#[allow(clippy::too_many_arguments)]
fn attempt<F, T, O>(
    factory: &F,
    ball: &mut Ball,
    x0: &[f64],
    support_radius: usize,
    margin: usize,
    cfg: &SimConfig,
    blowup: Option<f64>,
    observe: &mut O,
) -> std::result::Result<(Vec<T>, SimStats), AttemptError>
where
    F: BlockFactory,
    O: FnMut(&StateRef) -> T,
{
    let margins: Vec<usize> = if cfg.richardson_check {
        vec![margin, 2 * margin]
    } else {
        vec![margin]
    };
    let r_max = support_radius + margins.iter().max().copied().unwrap_or(margin);
    ball.grow_to(factory.graph(), r_max)?;
    let mut blocks = Vec::new();
    let mut y = Vec::new();
    for &m in &margins {
        let radius = support_radius + m;
        let n = ball.within(radius).end;
        let offset = y.len();
        y.extend((0..n).map(|i| x0.get(i).copied().unwrap_or(0.0)));
        blocks.push(Block {
            rhs: factory.build(ball, n)?,
            radius,
            margin: m,
            offset,
            n,
        });
    }
    let mut blocks = Blocks(blocks);
    let mut integ = Dopri5::new(cfg.rtol, cfg.atol);
    let mut t = 0.0;
    let mut observations = Vec::with_capacity(cfg.sample_times.len());
    let mut max_diff: Option<f64> = None;
    let atol = cfg.atol;

    for &ts in &cfg.sample_times {
        integ.advance(&mut blocks, &mut y, &mut t, ts, |blocks, y, t| {
            if let Some(limit) = blowup {
                let p = &blocks.0[0];
                let dev = max_abs(&y[p.offset..p.offset + p.n]);
                if dev > limit {
                    return Err(Error::LeftPerturbativeRegime { t, deviation: dev });
                }
            }
            grow_if_needed(factory, ball, blocks, y, atol)
        })?;
        if cfg.richardson_check {
            let (a, b) = (&blocks.0[0], &blocks.0[1]);
            let xa = &y[a.offset..a.offset + a.n];
            let xb = &y[b.offset..b.offset + b.n];
            let diff = (0..a.n.max(b.n))
                .map(|i| {
                    let va = xa.get(i).copied().unwrap_or(0.0);
                    let vb = xb.get(i).copied().unwrap_or(0.0);
                    (va - vb).abs()
                })
                .fold(0.0, f64::max);
            max_diff = Some(max_diff.map_or(diff, |d: f64| d.max(diff)));
            if diff > 10.0 * atol {
                return Err(AttemptError::Retry(diff));
            }
        }
        let p = &blocks.0[0];
        observations.push(observe(&StateRef {
            t,
            ball,
            values: &y[p.offset..p.offset + p.n],
        }));
    }

    let p = &blocks.0[0];
    Ok((
        observations,
        SimStats {
            steps: integ.stats.accepted,
            rejected_steps: integ.stats.rejected,
            retries: 0,
            truncation_margin: margin,
            final_radius: p.radius,
            final_vertices: p.n,
            richardson_max_difference: max_diff,
        },
    ))
}

fn max_abs(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

fn grow_if_needed<F: BlockFactory>(
    factory: &F,
    ball: &mut Ball,
    blocks: &mut Blocks<F::Block>,
    y: &mut Vec<f64>,
    atol: f64,
) -> Result<bool> {
    let mut grow: Vec<Option<usize>> = Vec::with_capacity(blocks.0.len());
    for b in &blocks.0 {
        let guard = ball.within(b.radius.saturating_sub(b.margin)).end;
        let g = max_abs(&y[b.offset + guard.min(b.n)..b.offset + b.n]);
        grow.push((g > atol).then(|| b.radius + b.margin.max(b.radius / 8)));
    }
    if grow.iter().all(Option::is_none) {
        return Ok(false);
    }
    let target = grow
        .iter()
        .zip(&blocks.0)
        .map(|(g, b)| g.unwrap_or(b.radius))
        .max()
        .unwrap_or(0);
    ball.grow_to(factory.graph(), target)?;

    let mut new_y = Vec::with_capacity(y.len());
    for (b, g) in blocks.0.iter_mut().zip(grow) {
        let old = &y[b.offset..b.offset + b.n];
        let offset = new_y.len();
        new_y.extend_from_slice(old);
        if let Some(radius) = g {
            let n = ball.within(radius).end;
            b.rhs = factory.build(ball, n)?;
            b.radius = radius;
            b.n = n;
        }
        new_y.resize(offset + b.n, 0.0);
        b.offset = offset;
    }
    *y = new_y;
    Ok(true)
}
