//! Laplacians restricted to a ball prefix.

use nalgebra::DMatrix;

use crate::geometry::{Ball, OUTSIDE};
use crate::graph::Part;

/// One part of the Laplacian restricted to the first `n` vertices of a ball.
///
/// Edges with an endpoint outside the prefix are dropped entirely, including
/// their diagonal contribution, so the restricted `L_sym` is the Laplacian of
/// the induced subgraph and conserves `sum_v x_v`.
#[derive(Debug, Clone)]
pub struct TruncatedOperator {
    part: Part,
    n: usize,
    diag: Vec<f64>,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
}

impl TruncatedOperator {
    /// Panics if `n` exceeds the ball size.
    pub fn new(ball: &Ball, n: usize, part: Part) -> Self {
        assert!(n <= ball.len(), "prefix {n} exceeds ball of {} vertices", ball.len());
        let mut diag = Vec::with_capacity(n);
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for i in 0..n {
            let mut d = 0.0;
            for (nb, &j) in ball.neighbors(i).iter().zip(ball.neighbor_indices(i)) {
                if j == OUTSIDE || j as usize >= n {
                    continue;
                }
                let w = nb.weight(part);
                if w != 0.0 {
                    cols.push(j);
                    vals.push(w);
                    d -= w;
                }
            }
            diag.push(d);
            row_ptr.push(cols.len());
        }
        Self {
            part,
            n,
            diag,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn part(&self) -> Part {
        self.part
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len() + self.n
    }

    /// `out = L x`.
    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        for i in 0..self.n {
            let mut acc = self.diag[i] * x[i];
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.vals[k] * x[self.cols[k] as usize];
            }
            out[i] = acc;
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            m[(i, i)] = self.diag[i];
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                m[(i, self.cols[k] as usize)] += self.vals[k];
            }
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BallConfig;
    use crate::graph::{Advection2d, ExampleChain, Graph, SkewPerturbedLattice};

    #[test]
    fn full_is_sym_plus_skew() {
        for g in [
            &ExampleChain as &dyn Graph,
            &Advection2d,
            &SkewPerturbedLattice::new(0.5).unwrap(),
        ] {
            let ball = Ball::new(g, g.root(), 5, BallConfig::default()).unwrap();
            let n = ball.within(4).end;
            let full = TruncatedOperator::new(&ball, n, Part::Full).to_dense();
            let sym = TruncatedOperator::new(&ball, n, Part::Sym).to_dense();
            let skew = TruncatedOperator::new(&ball, n, Part::Skew).to_dense();
            assert!((&full - (&sym + &skew)).amax() <= 1e-14, "{}", g.name());
            // off-diagonal of L_sym is the symmetric weight matrix; rows sum to zero
            let mut off = sym.clone();
            off.fill_diagonal(0.0);
            assert_eq!(off, off.transpose());
            for i in 0..n {
                assert!(sym.row(i).sum().abs() < 1e-14);
            }
        }
    }

    #[test]
    fn apply_matches_dense() {
        let g = SkewPerturbedLattice::new(0.3).unwrap();
        let ball = Ball::new(&g, g.root(), 3, BallConfig::default()).unwrap();
        let op = TruncatedOperator::new(&ball, ball.len(), Part::Full);
        let x: Vec<f64> = (0..op.dim()).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut y = vec![0.0; op.dim()];
        op.apply(&x, &mut y);
        let yd = op.to_dense() * nalgebra::DVector::from_column_slice(&x);
        for i in 0..op.dim() {
            assert!((y[i] - yd[i]).abs() < 1e-14);
        }
    }
}
