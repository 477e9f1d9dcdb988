//! `l^p` norms, gradient semi-norms `Q_p` and the skew-part bound.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Ball, OUTSIDE};
use crate::graph::{self, apply_laplacian, FiniteSequence, Graph, Part};

pub(crate) fn check_p(p: f64) -> Result<()> {
    if p >= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("p must lie in [1, inf], got {p}")))
    }
}

/// Accumulates `(sum |d|^p)^(1/p)` without overflow, or `max |d|` for `p = inf`.
struct PowerSum {
    p: f64,
    scale: f64,
    sum: f64,
}

impl PowerSum {
    fn new(p: f64) -> Self {
        Self {
            p,
            scale: 0.0,
            sum: 0.0,
        }
    }

    fn add(&mut self, d: f64, weight: f64) {
        let a = d.abs();
        if a == 0.0 {
            return;
        }
        if self.p.is_infinite() {
            self.scale = self.scale.max(a);
        } else if a > self.scale {
            self.sum = self.sum * (self.scale / a).powf(self.p) + weight;
            self.scale = a;
        } else {
            self.sum += weight * (a / self.scale).powf(self.p);
        }
    }

    fn finish(self) -> f64 {
        if self.p.is_infinite() || self.scale == 0.0 {
            self.scale
        } else {
            self.scale * self.sum.powf(1.0 / self.p)
        }
    }
}

pub fn lp_norm(values: &[f64], p: f64) -> Result<f64> {
    check_p(p)?;
    if p == 1.0 {
        return Ok(values.iter().map(|x| x.abs()).sum());
    }
    let mut acc = PowerSum::new(p);
    for &x in values {
        acc.add(x, 1.0);
    }
    Ok(acc.finish())
}

/// `Q_p(x) = (sum_v sum_{v' in N(v)} |x_v' - x_v|^p)^(1/p)` for `x` stored on
/// the first `values.len()` vertices of `ball` and zero elsewhere.
///
/// Pairs leaving the prefix are included (the exterior value is zero), so the
/// result is exact for the finitely supported sequence.
pub fn q_seminorm(ball: &Ball, values: &[f64], p: f64) -> Result<f64> {
    check_p(p)?;
    let n = values.len();
    if n > ball.len() {
        return Err(Error::InvalidInput(format!(
            "{} values for a ball of {} vertices",
            n,
            ball.len()
        )));
    }
    let mut acc = PowerSum::new(p);
    for i in 0..n {
        let xi = values[i];
        for (nb, &j) in ball.neighbors(i).iter().zip(ball.neighbor_indices(i)) {
            if !nb.is_symmetric_edge() {
                continue;
            }
            if j != OUTSIDE && (j as usize) < n {
                acc.add(values[j as usize] - xi, 1.0);
            } else {
                // (v, v') and (v', v) with x_v' = 0
                acc.add(xi, 2.0);
            }
        }
    }
    Ok(acc.finish())
}

/// `Q_p` of a finitely supported sequence, evaluated directly on the graph.
pub fn q_seminorm_sequence(
    graph: &dyn Graph,
    x: &FiniteSequence,
    p: f64,
    cap: usize,
) -> Result<f64> {
    check_p(p)?;
    let region = graph::enlarged_support(graph, x, cap)?;
    let mut acc = PowerSum::new(p);
    for (&v, nb) in &region {
        let xv = x.get(v);
        for n in nb.iter().filter(|n| n.is_symmetric_edge()) {
            acc.add(x.get(n.id) - xv, 1.0);
        }
    }
    Ok(acc.finish())
}

/// Both sides of `||L_skew x||_1 <= W Q_inf(x)` for a finitely supported `x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SkewBound {
    pub lhs: f64,
    pub rhs: f64,
    /// Skew mass of the ordered pairs with at least one endpoint in the support.
    pub w_local: f64,
    pub q_inf: f64,
}

impl SkewBound {
    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs
    }
}

/// Only pairs touching the support contribute to `L_skew x`, so restricting
/// the skew mass to them gives a valid (and sharper) right-hand side.
pub fn skew_bound_check(graph: &dyn Graph, x: &FiniteSequence, cap: usize) -> Result<SkewBound> {
    let lhs = apply_laplacian(graph, x, Part::Skew, cap)?.norm_1();
    let support: BTreeSet<_> = x.support().collect();
    let region = graph::enlarged_support(graph, x, cap)?;
    let w_local: f64 = region
        .iter()
        .flat_map(|(v, nb)| nb.iter().map(move |n| (v, n)))
        .filter(|(v, n)| support.contains(*v) || support.contains(&n.id))
        .map(|(_, n)| n.w_skew().abs())
        .sum();
    let q_inf = q_seminorm_sequence(graph, x, f64::INFINITY, cap)?;
    Ok(SkewBound {
        lhs,
        rhs: w_local * q_inf,
        w_local,
        q_inf,
    })
}

/// A norm tracked along a trajectory: `l^p` or the gradient semi-norm `Q_p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum NormKind {
    Lp(f64),
    Q(f64),
}

impl NormKind {
    pub fn p(&self) -> f64 {
        match *self {
            NormKind::Lp(p) | NormKind::Q(p) => p,
        }
    }
}

fn p_label(p: f64) -> String {
    if p.is_infinite() {
        "inf".into()
    } else {
        format!("{p}")
    }
}

/// Parses `1`, `2.5`, `inf`.
pub fn parse_p(s: &str) -> Result<f64> {
    let p = match s.trim() {
        "inf" | "infinity" | "Inf" => f64::INFINITY,
        t => t
            .parse::<f64>()
            .map_err(|_| Error::InvalidInput(format!("cannot parse p = {s:?}")))?,
    };
    check_p(p)?;
    Ok(p)
}

impl fmt::Display for NormKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            NormKind::Lp(p) => write!(f, "l{}", p_label(p)),
            NormKind::Q(p) => write!(f, "q{}", p_label(p)),
        }
    }
}

impl FromStr for NormKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if let Some(rest) = s.strip_prefix('l') {
            Ok(NormKind::Lp(parse_p(rest)?))
        } else if let Some(rest) = s.strip_prefix('q') {
            Ok(NormKind::Q(parse_p(rest)?))
        } else {
            Err(Error::InvalidInput(format!(
                "norm kind must look like l2, linf or qinf, got {s:?}"
            )))
        }
    }
}

impl From<NormKind> for String {
    fn from(k: NormKind) -> Self {
        k.to_string()
    }
}

impl TryFrom<String> for NormKind {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BallConfig;
    use crate::graph::{ExampleChain, FiniteGraph, IntegerLattice, VertexId};

    #[test]
    fn pythagorean_pair() {
        let x = [3.0, 4.0];
        assert_eq!(lp_norm(&x, 2.0).unwrap(), 5.0);
        assert_eq!(lp_norm(&x, 1.0).unwrap(), 7.0);
        assert_eq!(lp_norm(&x, f64::INFINITY).unwrap(), 4.0);
        assert!(lp_norm(&x, 0.5).is_err());
    }

    #[test]
    fn indicator_has_unit_norms() {
        let x = [0.0, 1.0, 0.0];
        for p in [1.0, 1.5, 2.0, 7.0, f64::INFINITY] {
            assert!((lp_norm(&x, p).unwrap() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn large_p_does_not_overflow() {
        let x = [1e200, 1e200];
        let n = lp_norm(&x, 10.0).unwrap();
        assert!((n / 1e200 - 2f64.powf(0.1)).abs() < 1e-12);
    }

    #[test]
    fn k2_gradient() {
        let (a, b) = (VertexId::scalar(0), VertexId::scalar(1));
        let g = FiniteGraph::undirected("k2", &[(a, b, 1.0)]);
        let ball = Ball::new(&g, a, 1, BallConfig::default()).unwrap();
        let x: Vec<f64> = ball.vertices().iter().map(|&v| if v == a { 1.0 } else { 0.0 }).collect();
        assert_eq!(q_seminorm(&ball, &x, 1.0).unwrap(), 2.0);
        assert_eq!(q_seminorm(&ball, &x, f64::INFINITY).unwrap(), 1.0);
        assert_eq!(q_seminorm(&ball, &[2.0, 2.0], 3.0).unwrap(), 0.0);
        // truncating to the first vertex still sees both ordered pairs
        assert_eq!(q_seminorm(&ball, &x[..1], 1.0).unwrap(), 2.0);
    }

    #[test]
    fn ball_and_sequence_gradients_agree() {
        let g = IntegerLattice::new(2).unwrap();
        let ball = Ball::new(&g, g.root(), 4, BallConfig::default()).unwrap();
        let n = ball.within(2).end;
        let x: Vec<f64> = (0..n).map(|i| ((i * 5) % 7) as f64 - 3.0).collect();
        let seq: FiniteSequence = (0..n).map(|i| (ball.vertex(i), x[i])).collect();
        for p in [1.0, 2.0, 3.0, f64::INFINITY] {
            let a = q_seminorm(&ball, &x, p).unwrap();
            let b = q_seminorm_sequence(&g, &seq, p, 64).unwrap();
            assert!((a - b).abs() <= 1e-12 * a.max(1.0), "p={p}: {a} vs {b}");
        }
    }

    #[test]
    fn skew_bound_on_indicator() {
        let x = FiniteSequence::indicator(VertexId::scalar(0));
        let b = skew_bound_check(&ExampleChain, &x, 64).unwrap();
        // w_skew(0,1) = -1, w_skew(0,-1) = 1/2: (L_skew e_0) = (-1/2, 1/2, 1) at (-1, 0, 1)
        assert!((b.lhs - 2.0).abs() < 1e-15);
        assert!((b.w_local - 3.0).abs() < 1e-15);
        assert_eq!(b.q_inf, 1.0);
        assert!(b.holds());
    }

    #[test]
    fn skew_bound_vanishes_on_symmetric_graph() {
        let g = IntegerLattice::new(2).unwrap();
        let x = FiniteSequence::indicator(g.root());
        let b = skew_bound_check(&g, &x, 64).unwrap();
        assert_eq!(b.lhs, 0.0);
        assert_eq!(b.rhs, 0.0);
        assert!(b.holds());
    }

    #[test]
    fn norm_kind_labels_round_trip() {
        for s in ["l1", "l2", "linf", "qinf", "q2", "l2.5"] {
            let k: NormKind = s.parse().unwrap();
            assert_eq!(k.to_string(), s);
        }
        assert!("x2".parse::<NormKind>().is_err());
        assert!("l0.5".parse::<NormKind>().is_err());
        let json = serde_json::to_string(&NormKind::Q(f64::INFINITY)).unwrap();
        assert_eq!(json, "\"qinf\"");
    }
}
