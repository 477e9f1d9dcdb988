//! Lazily described infinite directed weighted graphs.
//!
//! A graph is never stored. It is presented through [`Graph::adjacency`], a pure
//! callback that reports, for one vertex `v`, every out-edge `(v', w(v,v'))` and
//! every in-edge `(v'', w(v'',v))` with nonzero weight. Reporting both directions
//! lets the symmetric and skew parts of the weights be computed locally:
//!
//! ```text
//! w_sym(v,v')  = (w(v,v') + w(v',v)) / 2
//! w_skew(v,v') = (w(v,v') - w(v',v)) / 2
//! ```
//!
//! Absent edges have weight zero and self-loops are ignored, since their
//! Laplacian contribution `w(v,v)(x_v - x_v)` vanishes.

mod families;
mod validate;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use families::{
    builtin_graph, Advection2d, ExampleChain, FiniteGraph, FnGraph, GraphSpec, IntegerLattice,
    SkewPerturbedLattice, BUILTIN_NAMES,
};
pub use validate::{validate_generator, ValidationConfig, ValidationReport, Violation};

/// Largest supported vertex tuple length.
pub const MAX_DIM: usize = 4;

/// Default cap on the number of distinct vertices adjacent to one vertex.
pub const DEFAULT_ADJACENCY_CAP: usize = 64;

/// Vertex key: a short integer tuple whose length is fixed per graph.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VertexId {
    len: u8,
    coords: [i32; MAX_DIM],
}

impl VertexId {
    /// Panics if `coords` is longer than [`MAX_DIM`].
    pub fn new(coords: &[i32]) -> Self {
        assert!(
            coords.len() <= MAX_DIM,
            "vertex tuples are limited to {MAX_DIM} coordinates"
        );
        let mut c = [0; MAX_DIM];
        c[..coords.len()].copy_from_slice(coords);
        Self {
            len: coords.len() as u8,
            coords: c,
        }
    }

    pub fn scalar(n: i32) -> Self {
        Self::new(&[n])
    }

    pub fn pair(i: i32, j: i32) -> Self {
        Self::new(&[i, j])
    }

    pub fn origin(dim: usize) -> Self {
        Self::new(&[0; MAX_DIM][..dim])
    }

    pub fn coords(&self) -> &[i32] {
        &self.coords[..self.len as usize]
    }

    pub fn dim(&self) -> usize {
        self.len as usize
    }

    /// Squared Euclidean norm of the tuple.
    pub fn norm_sq(&self) -> f64 {
        self.coords().iter().map(|&c| (c as f64) * (c as f64)).sum()
    }

    /// Copy with coordinate `axis` shifted by `delta`.
    pub fn shifted(&self, axis: usize, delta: i32) -> Self {
        let mut out = *self;
        out.coords[axis] += delta;
        out
    }
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, c) in self.coords().iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

impl fmt::Debug for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl Serialize for VertexId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.coords().serialize(s)
    }
}

impl<'de> Deserialize<'de> for VertexId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let coords = Vec::<i32>::deserialize(d)?;
        if coords.len() > MAX_DIM {
            return Err(serde::de::Error::custom(format!(
                "vertex tuple longer than {MAX_DIM}"
            )));
        }
        Ok(VertexId::new(&coords))
    }
}

/// Edges reported by a generator for a single vertex `v`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Adjacency {
    /// Pairs `(v', w(v,v'))`.
    pub out_edges: Vec<(VertexId, f64)>,
    /// Pairs `(v'', w(v'',v))`.
    pub in_edges: Vec<(VertexId, f64)>,
}

/// An infinite (or finite) directed weighted graph described vertex by vertex.
///
/// Implementations must be pure: repeated calls with the same vertex return
/// the same edges, and they must be callable from several threads.
pub trait Graph: Send + Sync {
    /// Enumeration origin.
    fn root(&self) -> VertexId;

    fn adjacency(&self, v: VertexId) -> Adjacency;

    /// User-declared growth dimension, if known.
    fn dimension_hint(&self) -> Option<f64> {
        None
    }

    fn name(&self) -> String;
}

impl<G: Graph + ?Sized> Graph for &G {
    fn root(&self) -> VertexId {
        (**self).root()
    }
    fn adjacency(&self, v: VertexId) -> Adjacency {
        (**self).adjacency(v)
    }
    fn dimension_hint(&self) -> Option<f64> {
        (**self).dimension_hint()
    }
    fn name(&self) -> String {
        (**self).name()
    }
}

impl<G: Graph + ?Sized> Graph for std::sync::Arc<G> {
    fn root(&self) -> VertexId {
        (**self).root()
    }
    fn adjacency(&self, v: VertexId) -> Adjacency {
        (**self).adjacency(v)
    }
    fn dimension_hint(&self) -> Option<f64> {
        (**self).dimension_hint()
    }
    fn name(&self) -> String {
        (**self).name()
    }
}

impl<G: Graph + ?Sized> Graph for Box<G> {
    fn root(&self) -> VertexId {
        (**self).root()
    }
    fn adjacency(&self, v: VertexId) -> Adjacency {
        (**self).adjacency(v)
    }
    fn dimension_hint(&self) -> Option<f64> {
        (**self).dimension_hint()
    }
    fn name(&self) -> String {
        (**self).name()
    }
}

/// One vertex adjacent to `v` in either direction, with both directed weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub id: VertexId,
    /// `w(v, id)`.
    pub w_out: f64,
    /// `w(id, v)`.
    pub w_in: f64,
}

impl Neighbor {
    #[inline]
    pub fn w_sym(&self) -> f64 {
        (self.w_out + self.w_in) / 2.0
    }

    #[inline]
    pub fn w_skew(&self) -> f64 {
        (self.w_out - self.w_in) / 2.0
    }

    #[inline]
    pub fn weight(&self, part: Part) -> f64 {
        match part {
            Part::Full => self.w_out,
            Part::Sym => self.w_sym(),
            Part::Skew => self.w_skew(),
        }
    }

    /// Member of the symmetric neighborhood `N(v)`.
    #[inline]
    pub fn is_symmetric_edge(&self) -> bool {
        self.w_sym() > 0.0
    }
}

/// Merge the out- and in-edge reports of `v` into one sorted neighbor list.
///
/// Repeated reports of the same directed edge are summed; self-loops are dropped.
pub fn neighbors(graph: &dyn Graph, v: VertexId, cap: usize) -> Result<Vec<Neighbor>> {
    let adj = graph.adjacency(v);
    let mut merged: BTreeMap<VertexId, (f64, f64)> = BTreeMap::new();
    for &(u, w) in &adj.out_edges {
        if u != v {
            merged.entry(u).or_insert((0.0, 0.0)).0 += w;
        }
    }
    for &(u, w) in &adj.in_edges {
        if u != v {
            merged.entry(u).or_insert((0.0, 0.0)).1 += w;
        }
    }
    if merged.len() > cap {
        return Err(Error::AdjacencyCap {
            vertex: v,
            size: merged.len(),
            cap,
        });
    }
    Ok(merged
        .into_iter()
        .map(|(id, (w_out, w_in))| Neighbor { id, w_out, w_in })
        .collect())
}

/// Symmetric and skew parts of the weight between `v` and `v2`.
///
/// Both are zero when neither directed edge exists.
pub fn decompose_edge(graph: &dyn Graph, v: VertexId, v2: VertexId) -> Result<(f64, f64)> {
    if v == v2 {
        return Err(Error::InvalidInput(format!(
            "decompose_edge needs distinct vertices, got {v} twice"
        )));
    }
    let nb = neighbors(graph, v, usize::MAX)?;
    Ok(nb
        .iter()
        .find(|n| n.id == v2)
        .map(|n| (n.w_sym(), n.w_skew()))
        .unwrap_or((0.0, 0.0)))
}

/// Which weight the Laplacian is built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Part {
    Full,
    Sym,
    Skew,
}

/// A finitely supported real sequence indexed by vertices; implicitly zero elsewhere.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FiniteSequence {
    values: BTreeMap<VertexId, f64>,
}

impl FiniteSequence {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn indicator(v: VertexId) -> Self {
        let mut s = Self::new();
        s.set(v, 1.0);
        s
    }

    pub fn get(&self, v: VertexId) -> f64 {
        self.values.get(&v).copied().unwrap_or(0.0)
    }

    pub fn set(&mut self, v: VertexId, value: f64) {
        self.values.insert(v, value);
    }

    pub fn iter(&self) -> impl Iterator<Item = (VertexId, f64)> + '_ {
        self.values.iter().map(|(&v, &x)| (v, x))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Vertices carrying a nonzero value.
    pub fn support(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.values
            .iter()
            .filter(|(_, &x)| x != 0.0)
            .map(|(&v, _)| v)
    }

    pub fn norm_inf(&self) -> f64 {
        self.values.values().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn norm_1(&self) -> f64 {
        self.values.values().map(|x| x.abs()).sum()
    }
}

impl FromIterator<(VertexId, f64)> for FiniteSequence {
    fn from_iter<I: IntoIterator<Item = (VertexId, f64)>>(iter: I) -> Self {
        Self {
            values: iter.into_iter().collect(),
        }
    }
}

/// Support of `x` together with every vertex one adjacency hop away.
pub(crate) fn enlarged_support(
    graph: &dyn Graph,
    x: &FiniteSequence,
    cap: usize,
) -> Result<BTreeMap<VertexId, Vec<Neighbor>>> {
    let mut out: BTreeMap<VertexId, Vec<Neighbor>> = BTreeMap::new();
    for v in x.support() {
        if !out.contains_key(&v) {
            let nb = neighbors(graph, v, cap)?;
            out.insert(v, nb);
        }
    }
    let hop: Vec<VertexId> = out
        .values()
        .flat_map(|nb| nb.iter().map(|n| n.id))
        .collect();
    for u in hop {
        if !out.contains_key(&u) {
            let nb = neighbors(graph, u, cap)?;
            out.insert(u, nb);
        }
    }
    Ok(out)
}

/// `[L x]_v = sum_{v'} w(v,v') (x_{v'} - x_v)` for the selected weight part,
/// evaluated on the support of `x` enlarged by one hop.
pub fn apply_laplacian(
    graph: &dyn Graph,
    x: &FiniteSequence,
    part: Part,
    cap: usize,
) -> Result<FiniteSequence> {
    let region = enlarged_support(graph, x, cap)?;
    Ok(region
        .iter()
        .map(|(&v, nb)| {
            let xv = x.get(v);
            let value = nb
                .iter()
                .map(|n| n.weight(part) * (x.get(n.id) - xv))
                .sum::<f64>();
            (v, value)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vertex_ordering_is_lexicographic_within_dimension() {
        let a = VertexId::pair(0, 5);
        let b = VertexId::pair(1, -3);
        assert!(a < b);
        assert_eq!(a.to_string(), "(0,5)");
        assert_eq!(VertexId::origin(3).coords(), &[0, 0, 0]);
    }

    #[test]
    fn decompose_example_chain_edge() {
        let g = ExampleChain;
        let (s, k) = decompose_edge(&g, VertexId::scalar(2), VertexId::scalar(3)).unwrap();
        assert!((s - 1.0).abs() < 1e-15);
        assert!((k + 0.2).abs() < 1e-15);
    }

    #[test]
    fn decompose_symmetric_pair() {
        let g = FiniteGraph::from_edges(
            "pair",
            &[
                (VertexId::scalar(0), VertexId::scalar(1), 2.5),
                (VertexId::scalar(1), VertexId::scalar(0), 2.5),
            ],
        );
        assert_eq!(
            decompose_edge(&g, VertexId::scalar(0), VertexId::scalar(1)).unwrap(),
            (2.5, 0.0)
        );
    }

    #[test]
    fn decompose_advection_edge() {
        let g = Advection2d;
        let (s, k) = decompose_edge(&g, VertexId::pair(1, 0), VertexId::pair(0, 0)).unwrap();
        assert_eq!((s, k), (0.5, 0.5));
        let (s, k) = decompose_edge(&g, VertexId::pair(0, 0), VertexId::pair(1, 0)).unwrap();
        assert_eq!((s, k), (0.5, -0.5));
    }

    #[test]
    fn decompose_absent_edge_is_zero() {
        let g = IntegerLattice::new(2).unwrap();
        let r = decompose_edge(&g, VertexId::pair(0, 0), VertexId::pair(3, 3)).unwrap();
        assert_eq!(r, (0.0, 0.0));
        assert!(decompose_edge(&g, VertexId::pair(0, 0), VertexId::pair(0, 0)).is_err());
    }

    #[test]
    fn symmetric_laplacian_of_indicator_on_example_chain() {
        let g = ExampleChain;
        let x = FiniteSequence::indicator(VertexId::scalar(0));
        let lx = apply_laplacian(&g, &x, Part::Sym, DEFAULT_ADJACENCY_CAP).unwrap();
        assert_eq!(lx.len(), 3);
        assert!((lx.get(VertexId::scalar(0)) + 2.0).abs() < 1e-15);
        assert!((lx.get(VertexId::scalar(1)) - 1.0).abs() < 1e-15);
        assert!((lx.get(VertexId::scalar(-1)) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn constants_are_annihilated_on_interior() {
        let g = IntegerLattice::new(2).unwrap();
        let mut x = FiniteSequence::new();
        for i in -3..=3 {
            for j in -3..=3 {
                x.set(VertexId::pair(i, j), 1.0);
            }
        }
        for part in [Part::Full, Part::Sym, Part::Skew] {
            let lx = apply_laplacian(&g, &x, part, DEFAULT_ADJACENCY_CAP).unwrap();
            for i in -2..=2 {
                for j in -2..=2 {
                    assert!(lx.get(VertexId::pair(i, j)).abs() <= 1e-13);
                }
            }
        }
    }

    #[test]
    fn adjacency_cap_is_enforced() {
        let g = IntegerLattice::new(3).unwrap();
        let x = FiniteSequence::indicator(VertexId::origin(3));
        let err = apply_laplacian(&g, &x, Part::Full, 4).unwrap_err();
        assert!(matches!(err, Error::AdjacencyCap { size: 6, cap: 4, .. }));
    }

    #[test]
    fn vertex_serde_is_a_plain_tuple() {
        let v = VertexId::pair(-4, 7);
        let s = serde_json::to_string(&v).unwrap();
        assert_eq!(s, "[-4,7]");
        let back: VertexId = serde_json::from_str(&s).unwrap();
        assert_eq!(back, v);
    }
}
