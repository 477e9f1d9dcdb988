//! Sampled consistency checks for graph generators.

use std::collections::{BTreeSet, HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use super::{Adjacency, Graph, Neighbor, VertexId, DEFAULT_ADJACENCY_CAP};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidationConfig {
    pub adjacency_cap: usize,
    pub vertex_budget: usize,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        Self {
            adjacency_cap: DEFAULT_ADJACENCY_CAP,
            vertex_budget: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    /// The two endpoints disagree on `w(from, to)`; `None` means the edge was not reported.
    WeightMismatch {
        from: VertexId,
        to: VertexId,
        reported_by_source: Option<f64>,
        reported_by_target: Option<f64>,
    },
    ZeroWeight {
        from: VertexId,
        to: VertexId,
    },
    AdjacencyCap {
        vertex: VertexId,
        size: usize,
    },
    NegativeSymmetricWeight {
        a: VertexId,
        b: VertexId,
        w_sym: f64,
    },
    /// Edges in both directions but `w_sym` not strictly positive.
    DegenerateSymmetricWeight {
        a: VertexId,
        b: VertexId,
    },
    IsolatedVertex {
        vertex: VertexId,
    },
    DisconnectedSkeleton {
        components: usize,
        representatives: Vec<VertexId>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub root: VertexId,
    pub sample_radius: usize,
    pub vertices_checked: usize,
    /// Largest `|N(v)|` seen.
    pub max_degree: usize,
    /// Largest `w_sym` seen.
    pub max_sym_weight: f64,
    pub skeleton_connected: bool,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

fn reported(list: &[(VertexId, f64)], v: VertexId) -> Option<f64> {
    let mut hits = list.iter().filter(|e| e.0 == v).map(|e| e.1).peekable();
    hits.peek()?;
    Some(hits.sum())
}

/// Enumerate every vertex within `sample_radius` hops of the root (following
/// edges in either direction) and check the generator contract on each.
///
/// Violations are collected, not raised; only an exhausted vertex budget errors.
pub fn validate_generator(
    graph: &dyn Graph,
    sample_radius: usize,
    cfg: &ValidationConfig,
) -> Result<ValidationReport> {
    if sample_radius < 1 {
        return Err(Error::InvalidInput("sample_radius must be >= 1".into()));
    }
    let root = graph.root();
    let mut adjacency: HashMap<VertexId, Adjacency> = HashMap::new();
    let mut order: Vec<VertexId> = Vec::new();
    let mut depth: HashMap<VertexId, usize> = HashMap::new();
    let mut queue = VecDeque::from([root]);
    depth.insert(root, 0);

    while let Some(v) = queue.pop_front() {
        let adj = graph.adjacency(v);
        order.push(v);
        let d = depth[&v];
        if d < sample_radius {
            let mut next: Vec<VertexId> = adj
                .out_edges
                .iter()
                .chain(adj.in_edges.iter())
                .map(|e| e.0)
                .filter(|&u| u != v)
                .collect();
            next.sort();
            next.dedup();
            for u in next {
                if !depth.contains_key(&u) {
                    if depth.len() >= cfg.vertex_budget {
                        return Err(Error::BudgetExceeded {
                            reached: depth.len(),
                            budget: cfg.vertex_budget,
                        });
                    }
                    depth.insert(u, d + 1);
                    queue.push_back(u);
                }
            }
        }
        adjacency.insert(v, adj);
    }

    let mut violations = Vec::new();
    let mut mismatched: BTreeSet<(VertexId, VertexId)> = BTreeSet::new();
    let mut max_degree = 0;
    let mut max_sym_weight: f64 = 0.0;
    let fetch = |v: VertexId, cache: &HashMap<VertexId, Adjacency>| -> Adjacency {
        cache
            .get(&v)
            .cloned()
            .unwrap_or_else(|| graph.adjacency(v))
    };

    for &a in &order {
        let adj = &adjacency[&a];
        for &(b, w) in &adj.out_edges {
            if w == 0.0 {
                violations.push(Violation::ZeroWeight { from: a, to: b });
            }
            if b == a {
                continue;
            }
            let from_b = reported(&fetch(b, &adjacency).in_edges, a);
            if from_b != Some(w) && mismatched.insert((a, b)) {
                violations.push(Violation::WeightMismatch {
                    from: a,
                    to: b,
                    reported_by_source: reported(&adj.out_edges, b),
                    reported_by_target: from_b,
                });
            }
        }
        for &(b, w) in &adj.in_edges {
            if w == 0.0 {
                violations.push(Violation::ZeroWeight { from: b, to: a });
            }
            if b == a {
                continue;
            }
            let from_b = reported(&fetch(b, &adjacency).out_edges, a);
            if from_b != Some(w) && mismatched.insert((b, a)) {
                violations.push(Violation::WeightMismatch {
                    from: b,
                    to: a,
                    reported_by_source: from_b,
                    reported_by_target: reported(&adj.in_edges, b),
                });
            }
        }

        let merged = super::neighbors(graph, a, usize::MAX)?;
        if merged.len() > cfg.adjacency_cap {
            violations.push(Violation::AdjacencyCap {
                vertex: a,
                size: merged.len(),
            });
        }
        let mut degree = 0;
        for n in &merged {
            check_symmetric_weight(a, n, &mut violations);
            if n.is_symmetric_edge() {
                degree += 1;
                max_sym_weight = max_sym_weight.max(n.w_sym());
            }
        }
        if degree == 0 {
            violations.push(Violation::IsolatedVertex { vertex: a });
        }
        max_degree = max_degree.max(degree);
    }

    let (components, representatives) = skeleton_components(graph, &order);
    let skeleton_connected = components <= 1;
    if !skeleton_connected {
        violations.push(Violation::DisconnectedSkeleton {
            components,
            representatives,
        });
    }

    Ok(ValidationReport {
        root,
        sample_radius,
        vertices_checked: order.len(),
        max_degree,
        max_sym_weight,
        skeleton_connected,
        violations,
    })
}

fn check_symmetric_weight(a: VertexId, n: &Neighbor, violations: &mut Vec<Violation>) {
    // each unordered pair is reported once, from its smaller endpoint
    if a > n.id {
        return;
    }
    let s = n.w_sym();
    if s < 0.0 {
        violations.push(Violation::NegativeSymmetricWeight { a, b: n.id, w_sym: s });
    } else if n.w_out * n.w_in != 0.0 && s <= 0.0 {
        violations.push(Violation::DegenerateSymmetricWeight { a, b: n.id });
    }
}

/// Connected components of the `w_sym > 0` skeleton restricted to `vertices`.
fn skeleton_components(graph: &dyn Graph, vertices: &[VertexId]) -> (usize, Vec<VertexId>) {
    let index: HashMap<VertexId, usize> =
        vertices.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let mut parent: Vec<usize> = (0..vertices.len()).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for (i, &v) in vertices.iter().enumerate() {
        let Ok(nb) = super::neighbors(graph, v, usize::MAX) else {
            continue;
        };
        for n in nb.iter().filter(|n| n.is_symmetric_edge()) {
            if let Some(&j) = index.get(&n.id) {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }
    let mut reps = Vec::new();
    for i in 0..vertices.len() {
        if find(&mut parent, i) == i {
            reps.push(vertices[i]);
        }
    }
    (reps.len(), reps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{families::FnGraph, Advection2d, ExampleChain, FiniteGraph};

    #[test]
    fn example_chain_is_clean() {
        let r = validate_generator(&ExampleChain, 10, &ValidationConfig::default()).unwrap();
        assert!(r.is_clean(), "{:?}", r.violations);
        assert_eq!(r.vertices_checked, 21);
        assert_eq!(r.max_degree, 2);
    }

    #[test]
    fn advection_is_clean_and_connected() {
        let r = validate_generator(&Advection2d, 10, &ValidationConfig::default()).unwrap();
        assert!(r.is_clean(), "{:?}", r.violations);
        assert!(r.skeleton_connected);
        assert_eq!(r.vertices_checked, 2 * 100 + 2 * 10 + 1);
        assert_eq!(r.max_sym_weight, 0.5);
    }

    #[test]
    fn planted_inconsistency_is_reported_once() {
        let a = VertexId::scalar(0);
        let b = VertexId::scalar(1);
        let g = FnGraph::new("planted", a, move |v| {
            if v == a {
                Adjacency {
                    out_edges: vec![(b, 1.0)],
                    in_edges: vec![(b, 1.0)],
                }
            } else {
                Adjacency {
                    out_edges: vec![(a, 1.0)],
                    in_edges: vec![(a, 2.0)],
                }
            }
        });
        let r = validate_generator(&g, 3, &ValidationConfig::default()).unwrap();
        assert_eq!(r.violations.len(), 1, "{:?}", r.violations);
        match &r.violations[0] {
            Violation::WeightMismatch {
                from,
                to,
                reported_by_source,
                reported_by_target,
            } => {
                assert_eq!((*from, *to), (a, b));
                assert_eq!(*reported_by_source, Some(1.0));
                assert_eq!(*reported_by_target, Some(2.0));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn negative_symmetric_weight_rejected() {
        let a = VertexId::scalar(0);
        let b = VertexId::scalar(1);
        let g = FiniteGraph::from_edges("neg", &[(a, b, -2.0), (b, a, 1.0)]);
        let r = validate_generator(&g, 2, &ValidationConfig::default()).unwrap();
        assert!(r
            .violations
            .iter()
            .any(|v| matches!(v, Violation::NegativeSymmetricWeight { .. })));
    }

    #[test]
    fn cancelling_weights_disconnect_the_skeleton() {
        let (a, b, c) = (VertexId::scalar(0), VertexId::scalar(1), VertexId::scalar(2));
        let g = FiniteGraph::from_edges(
            "split",
            &[(a, b, 1.0), (b, a, 1.0), (b, c, 1.0), (c, b, -1.0)],
        );
        let r = validate_generator(&g, 3, &ValidationConfig::default()).unwrap();
        assert!(!r.skeleton_connected);
        assert!(r
            .violations
            .iter()
            .any(|v| matches!(v, Violation::DegenerateSymmetricWeight { .. })));
    }

    #[test]
    fn budget_exhaustion_is_an_error() {
        let cfg = ValidationConfig {
            vertex_budget: 50,
            ..Default::default()
        };
        let err = validate_generator(&Advection2d, 10, &cfg).unwrap_err();
        assert!(matches!(err, Error::BudgetExceeded { budget: 50, .. }));
    }
}
