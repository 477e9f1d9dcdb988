//! Poincaré constant estimates on finite balls.
//!
//! For a center `v0` and radius `r` the estimate is the largest value of
//!
//! ```text
//!   sum_{v in B(v0,r)} m(v) (x_v - x_B)^2
//!   --------------------------------------------------------
//!   r^2 sum_{v,v' in B(v0,2r)} w_sym(v,v') (x_v - x_{v'})^2
//! ```
//!
//! over nonconstant `x` on the double ball, with `x_B` the measure-weighted
//! mean over the inner ball. Both quadratic forms vanish on constants, so the
//! problem is solved on the orthogonal complement of the constant vector as a
//! dense generalized symmetric eigenproblem.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Ball, BallConfig, OUTSIDE};
use crate::graph::{Graph, VertexId};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoincareEstimate {
    pub center: VertexId,
    pub r: usize,
    /// Vertices in the double ball.
    pub vertices: usize,
    pub c_pi: f64,
}

/// The two quadratic forms of the Poincaré quotient over `B(center, 2r)`.
pub struct PoincareForms {
    ball: Ball,
    r: usize,
    /// Measure-weighted variance over the inner ball.
    numerator: DMatrix<f64>,
    /// `r^2` times the Dirichlet form on the double ball.
    denominator: DMatrix<f64>,
}

impl PoincareForms {
    pub fn new(graph: &dyn Graph, center: VertexId, r: usize, cfg: &BallConfig) -> Result<Self> {
        if r == 0 {
            return Err(Error::InvalidInput("Poincaré radius must be positive".into()));
        }
        let ball = Ball::new(graph, center, 2 * r, *cfg)?;
        let n = ball.len();
        let inner = ball.within(r).end;

        let mut numerator = DMatrix::<f64>::zeros(n, n);
        let vol: f64 = ball.measures()[..inner].iter().sum();
        for i in 0..inner {
            let mi = ball.measure(i);
            numerator[(i, i)] += mi;
            for j in 0..inner {
                numerator[(i, j)] -= mi * ball.measure(j) / vol;
            }
        }

        // ordered pairs: every undirected edge appears twice
        let scale = 2.0 * (r * r) as f64;
        let mut denominator = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            for (nb, &j) in ball.neighbors(i).iter().zip(ball.neighbor_indices(i)) {
                if j == OUTSIDE || (j as usize) <= i || !nb.is_symmetric_edge() {
                    continue;
                }
                let j = j as usize;
                let w = scale * nb.w_sym();
                denominator[(i, i)] += w;
                denominator[(j, j)] += w;
                denominator[(i, j)] -= w;
                denominator[(j, i)] -= w;
            }
        }
        Ok(Self {
            ball,
            r,
            numerator,
            denominator,
        })
    }

    pub fn ball(&self) -> &Ball {
        &self.ball
    }

    /// The quotient for one test vector indexed like [`PoincareForms::ball`].
    pub fn quotient(&self, x: &[f64]) -> f64 {
        let x = DVector::from_column_slice(x);
        let num = x.dot(&(&self.numerator * &x));
        let den = x.dot(&(&self.denominator * &x));
        num / den
    }

    pub fn estimate(&self) -> Result<PoincareEstimate> {
        let c_pi = max_generalized_eigenvalue(&self.numerator, &self.denominator)?;
        Ok(PoincareEstimate {
            center: self.ball.center(),
            r: self.r,
            vertices: self.ball.len(),
            c_pi,
        })
    }
}

/// Largest `lambda` with `A x = lambda B x`, restricted to vectors orthogonal
/// to the constants (where both forms are assumed to vanish).
pub fn max_generalized_eigenvalue(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<f64> {
    let n = a.nrows();
    if n < 2 {
        return Err(Error::InvalidInput(
            "need at least two vertices for a nonconstant test vector".into(),
        ));
    }
    // Householder reflection sending the normalized constant vector to e_1;
    // its remaining columns span the complement of the constants.
    let s = 1.0 / (n as f64).sqrt();
    let mut u = DVector::from_element(n, s);
    u[0] -= 1.0;
    let uu = u.dot(&u);
    let h = DMatrix::<f64>::identity(n, n) - (&u * u.transpose()) * (2.0 / uu);
    let q = h.columns(1, n - 1).into_owned();

    let a_red = q.transpose() * a * &q;
    let b_red = q.transpose() * b * &q;

    let chol = b_red
        .clone()
        .cholesky()
        .ok_or(Error::SingularDirichletForm)?;
    let l = chol.l();
    let diag_max = l.diagonal().iter().fold(0.0f64, |m, &d| m.max(d * d));
    let diag_min = l.diagonal().iter().fold(f64::INFINITY, |m, &d| m.min(d * d));
    if diag_min <= 1e-12 * diag_max {
        return Err(Error::SingularDirichletForm);
    }
    // C = L^{-1} A L^{-T}
    let x = l
        .solve_lower_triangular(&a_red)
        .ok_or(Error::SingularDirichletForm)?;
    let c = l
        .solve_lower_triangular(&x.transpose())
        .ok_or(Error::SingularDirichletForm)?;
    let c = (&c + c.transpose()) * 0.5;
    let eig = SymmetricEigen::new(c);
    Ok(eig.eigenvalues.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v)))
}

pub fn estimate_poincare(
    graph: &dyn Graph,
    center: VertexId,
    r: usize,
    cfg: &BallConfig,
) -> Result<PoincareEstimate> {
    PoincareForms::new(graph, center, r, cfg)?.estimate()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{FiniteGraph, IntegerLattice};

    #[test]
    fn single_edge_matches_hand_solution() {
        // x = (p, q): numerator (p-q)^2/2, denominator 2 (p-q)^2, ratio 1/4
        let (a, b) = (VertexId::scalar(0), VertexId::scalar(1));
        let g = FiniteGraph::undirected("k2", &[(a, b, 1.0)]);
        let est = estimate_poincare(&g, a, 1, &BallConfig::default()).unwrap();
        assert!((est.c_pi - 0.25).abs() < 1e-12);
    }

    #[test]
    fn constants_give_zero_numerator() {
        let g = IntegerLattice::new(2).unwrap();
        let forms = PoincareForms::new(&g, g.root(), 2, &BallConfig::default()).unwrap();
        let n = forms.ball().len();
        let x = DVector::from_element(n, 3.5);
        assert!(x.dot(&(&forms.numerator * &x)).abs() < 1e-12);
        assert!(x.dot(&(&forms.denominator * &x)).abs() < 1e-12);
    }

    #[test]
    fn disconnected_form_is_singular() {
        // two separate edges: Dirichlet form has a second null direction
        let mut b = DMatrix::<f64>::zeros(4, 4);
        for (i, j) in [(0, 1), (2, 3)] {
            b[(i, i)] += 1.0;
            b[(j, j)] += 1.0;
            b[(i, j)] -= 1.0;
            b[(j, i)] -= 1.0;
        }
        let a = DMatrix::<f64>::identity(4, 4) - DMatrix::from_element(4, 4, 0.25);
        assert_eq!(
            max_generalized_eigenvalue(&a, &b),
            Err(Error::SingularDirichletForm)
        );
    }

    #[test]
    fn estimate_dominates_sampled_quotients() {
        let g = IntegerLattice::new(2).unwrap();
        let forms = PoincareForms::new(&g, g.root(), 2, &BallConfig::default()).unwrap();
        let est = forms.estimate().unwrap().c_pi;
        let n = forms.ball().len();
        for k in 0..20 {
            let x: Vec<f64> = (0..n).map(|i| ((i * 7 + k * 13) % 11) as f64 - 5.0).collect();
            assert!(forms.quotient(&x) <= est * (1.0 + 1e-10));
        }
    }
}
