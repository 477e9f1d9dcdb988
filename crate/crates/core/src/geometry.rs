//! Metric-measure structure of the symmetric graph: vertex measure, graph
//! distance and balls.
//!
//! Distances are taken in the skeleton of edges with `w_sym > 0`, traversed
//! without orientation. Balls are enumerated breadth-first with sorted
//! adjacency, so the vertex order (and therefore every index built on it) is
//! reproducible.

use std::collections::{HashMap, VecDeque};
use std::io::{self, Write};
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{neighbors, Graph, Neighbor, VertexId, DEFAULT_ADJACENCY_CAP};

pub const DEFAULT_VERTEX_BUDGET: usize = 1_000_000;

/// Marker for a neighbor that lies outside the ball.
pub const OUTSIDE: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BallConfig {
    pub adjacency_cap: usize,
    pub vertex_budget: usize,
}

impl Default for BallConfig {
    fn default() -> Self {
        Self {
            adjacency_cap: DEFAULT_ADJACENCY_CAP,
            vertex_budget: DEFAULT_VERTEX_BUDGET,
        }
    }
}

/// A complete ball `B(center, radius)` of the symmetric graph.
///
/// Besides the vertex list and distances, the ball caches the merged
/// adjacency of every member (including the outer shell), with neighbor
/// positions resolved to ball indices where possible. A ball can be grown in
/// place; existing indices never move.
#[derive(Debug, Clone)]
pub struct Ball {
    center: VertexId,
    radius: usize,
    cfg: BallConfig,
    vertices: Vec<VertexId>,
    index: HashMap<VertexId, u32>,
    distances: Vec<u32>,
    measures: Vec<f64>,
    nbr_ptr: Vec<usize>,
    nbrs: Vec<Neighbor>,
    nbr_idx: Vec<u32>,
    unresolved: Vec<usize>,
    /// Number of leading vertices whose symmetric neighbors were enqueued.
    expanded: usize,
}

impl Ball {
    pub fn new(graph: &dyn Graph, center: VertexId, radius: usize, cfg: BallConfig) -> Result<Self> {
        let mut ball = Ball {
            center,
            radius: 0,
            cfg,
            vertices: Vec::new(),
            index: HashMap::new(),
            distances: Vec::new(),
            measures: Vec::new(),
            nbr_ptr: vec![0],
            nbrs: Vec::new(),
            nbr_idx: Vec::new(),
            unresolved: Vec::new(),
            expanded: 0,
        };
        ball.push(graph, center, 0)?;
        ball.grow_to(graph, radius)?;
        Ok(ball)
    }

    fn push(&mut self, graph: &dyn Graph, v: VertexId, dist: u32) -> Result<()> {
        if self.vertices.len() >= self.cfg.vertex_budget {
            return Err(Error::BudgetExceeded {
                reached: self.vertices.len(),
                budget: self.cfg.vertex_budget,
            });
        }
        let nb = neighbors(graph, v, self.cfg.adjacency_cap)?;
        let m: f64 = nb
            .iter()
            .filter(|n| n.is_symmetric_edge())
            .map(|n| n.w_sym())
            .sum();
        self.index.insert(v, self.vertices.len() as u32);
        self.vertices.push(v);
        self.distances.push(dist);
        self.measures.push(m);
        for n in nb {
            self.unresolved.push(self.nbrs.len());
            self.nbrs.push(n);
            self.nbr_idx.push(OUTSIDE);
        }
        self.nbr_ptr.push(self.nbrs.len());
        Ok(())
    }

    /// Extend the ball to `radius` (no-op when already at least that large).
    pub fn grow_to(&mut self, graph: &dyn Graph, radius: usize) -> Result<()> {
        if radius < self.radius {
            return Ok(());
        }
        let mut queue: VecDeque<usize> = (self.expanded..self.vertices.len()).collect();
        while let Some(i) = queue.pop_front() {
            let d = self.distances[i] as usize;
            if d >= radius {
                break;
            }
            self.expanded = i + 1;
            for k in self.nbr_ptr[i]..self.nbr_ptr[i + 1] {
                let n = self.nbrs[k];
                if n.is_symmetric_edge() && !self.index.contains_key(&n.id) {
                    self.push(graph, n.id, d as u32 + 1)?;
                    queue.push_back(self.vertices.len() - 1);
                }
            }
        }
        self.radius = radius;
        let index = &self.index;
        let nbrs = &self.nbrs;
        let nbr_idx = &mut self.nbr_idx;
        self.unresolved.retain(|&k| match index.get(&nbrs[k].id) {
            Some(&j) => {
                nbr_idx[k] = j;
                false
            }
            None => true,
        });
        Ok(())
    }

    pub fn center(&self) -> VertexId {
        self.center
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn config(&self) -> BallConfig {
        self.cfg
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Vertices in breadth-first order (distances nondecreasing).
    pub fn vertices(&self) -> &[VertexId] {
        &self.vertices
    }

    pub fn vertex(&self, i: usize) -> VertexId {
        self.vertices[i]
    }

    pub fn index_of(&self, v: VertexId) -> Option<usize> {
        self.index.get(&v).map(|&i| i as usize)
    }

    pub fn contains(&self, v: VertexId) -> bool {
        self.index.contains_key(&v)
    }

    pub fn distance(&self, i: usize) -> usize {
        self.distances[i] as usize
    }

    pub fn distances(&self) -> &[u32] {
        &self.distances
    }

    /// `m(v) = sum_{v' in N(v)} w_sym(v,v')`.
    pub fn measure(&self, i: usize) -> f64 {
        self.measures[i]
    }

    pub fn measures(&self) -> &[f64] {
        &self.measures
    }

    pub fn volume(&self) -> f64 {
        self.measures.iter().sum()
    }

    /// Every vertex adjacent to vertex `i` in either direction.
    pub fn neighbors(&self, i: usize) -> &[Neighbor] {
        &self.nbrs[self.nbr_ptr[i]..self.nbr_ptr[i + 1]]
    }

    /// Ball positions of [`Ball::neighbors`], [`OUTSIDE`] for exterior vertices.
    pub fn neighbor_indices(&self, i: usize) -> &[u32] {
        &self.nbr_idx[self.nbr_ptr[i]..self.nbr_ptr[i + 1]]
    }

    /// Index range of vertices at distance at least `d` from the center.
    pub fn beyond(&self, d: usize) -> Range<usize> {
        let start = self.distances.partition_point(|&x| (x as usize) < d);
        start..self.len()
    }

    /// Index range of the vertices within distance `r` of the center.
    pub fn within(&self, r: usize) -> Range<usize> {
        0..self.distances.partition_point(|&x| (x as usize) <= r)
    }

    /// Largest `|N(v)|` over the ball.
    pub fn max_degree(&self) -> usize {
        (0..self.len())
            .map(|i| self.neighbors(i).iter().filter(|n| n.is_symmetric_edge()).count())
            .max()
            .unwrap_or(0)
    }

    pub fn max_measure(&self) -> f64 {
        self.measures.iter().fold(0.0, |a, &b| a.max(b))
    }

    pub fn columns(&self) -> BallColumns {
        BallColumns {
            center: self.center,
            radius: self.radius,
            vertex: self.vertices.clone(),
            distance: self.distances.clone(),
            measure: self.measures.clone(),
        }
    }

    /// CSV with columns `vertex,distance,measure`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "vertex,distance,measure")?;
        for i in 0..self.len() {
            writeln!(
                out,
                "\"{}\",{},{}",
                self.vertices[i], self.distances[i], self.measures[i]
            )?;
        }
        Ok(())
    }
}

/// Columnar snapshot of a ball for debugging and export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallColumns {
    pub center: VertexId,
    pub radius: usize,
    pub vertex: Vec<VertexId>,
    pub distance: Vec<u32>,
    pub measure: Vec<f64>,
}

pub fn ball(graph: &dyn Graph, center: VertexId, r: usize, cfg: &BallConfig) -> Result<Ball> {
    Ball::new(graph, center, r, *cfg)
}

/// `Vol(B(center, r))`.
pub fn volume(graph: &dyn Graph, center: VertexId, r: usize, cfg: &BallConfig) -> Result<f64> {
    Ok(ball(graph, center, r, cfg)?.volume())
}

/// `m(v)` straight from the generator.
pub fn measure(graph: &dyn Graph, v: VertexId, cfg: &BallConfig) -> Result<f64> {
    Ok(neighbors(graph, v, cfg.adjacency_cap)?
        .iter()
        .filter(|n| n.is_symmetric_edge())
        .map(|n| n.w_sym())
        .sum())
}

/// Graph distance `rho(a, b)` if it is at most `cutoff`, `None` otherwise.
pub fn distance(
    graph: &dyn Graph,
    a: VertexId,
    b: VertexId,
    cutoff: usize,
    cfg: &BallConfig,
) -> Result<Option<usize>> {
    if a == b {
        return Ok(Some(0));
    }
    let mut seen: HashMap<VertexId, usize> = HashMap::from([(a, 0)]);
    let mut queue = VecDeque::from([a]);
    while let Some(v) = queue.pop_front() {
        let d = seen[&v];
        if d >= cutoff {
            break;
        }
        for n in neighbors(graph, v, cfg.adjacency_cap)? {
            if !n.is_symmetric_edge() || seen.contains_key(&n.id) {
                continue;
            }
            if n.id == b {
                return Ok(Some(d + 1));
            }
            if seen.len() >= cfg.vertex_budget {
                return Err(Error::BudgetExceeded {
                    reached: seen.len(),
                    budget: cfg.vertex_budget,
                });
            }
            seen.insert(n.id, d + 1);
            queue.push_back(n.id);
        }
    }
    Ok(None)
}
