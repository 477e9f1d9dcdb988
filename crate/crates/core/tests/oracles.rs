//! Simulation checked against independently computed references.

use nalgebra::{DMatrix, DVector};

use digraph_heat::geometry::{Ball, BallConfig};
use digraph_heat::graph::{
    decompose_edge, ExampleChain, Graph, IntegerLattice, Part, SkewPerturbedLattice, VertexId,
};
use digraph_heat::semigroup::{evolve, evolve_observed, SimConfig, StateVector};

/// Dense `L_sym` of the subgraph induced on `B(center, r)`, assembled from
/// `decompose_edge` calls on every pair.
fn dense_sym_laplacian(g: &dyn Graph, ball: &Ball) -> DMatrix<f64> {
    let n = ball.len();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let (s, _) = decompose_edge(g, ball.vertex(i), ball.vertex(j)).unwrap();
            m[(i, j)] = s;
            m[(i, i)] -= s;
        }
    }
    m
}

fn check_against_expm(g: &dyn Graph, radius: usize, times: &[f64]) {
    let ball = Ball::new(g, g.root(), radius, BallConfig::default()).unwrap();
    assert!(ball.len() <= 400);
    let l = dense_sym_laplacian(g, &ball);
    let e0 = DVector::from_fn(ball.len(), |i, _| if i == 0 { 1.0 } else { 0.0 });

    let cfg = SimConfig::new(*times.last().unwrap()).with_sample_times(times.to_vec());
    let x0 = StateVector::indicator(g, g.root(), &BallConfig::default()).unwrap();
    let traj = evolve(g, &x0, &cfg, Part::Sym).unwrap();
    for s in &traj.snapshots {
        let exact = (&l * s.t).exp() * &e0;
        let err = (0..ball.len())
            .map(|i| (s.state.get(ball.vertex(i)) - exact[i]).abs())
            .fold(0.0, f64::max);
        assert!(err <= 1e-8, "{} t={} err={err}", g.name(), s.t);
    }
}

#[test]
fn integer_line_matches_dense_exponential() {
    check_against_expm(&IntegerLattice::new(1).unwrap(), 199, &[1.0, 5.0, 10.0, 20.0]);
}

#[test]
fn example_chain_matches_dense_exponential() {
    check_against_expm(&ExampleChain, 199, &[0.5, 2.0, 10.0]);
}

#[test]
fn semigroup_law() {
    let g = SkewPerturbedLattice::new(0.5).unwrap();
    let mut cfg = SimConfig::new(30.0);
    cfg.rtol = 1e-10;
    let x0 = StateVector::indicator(&g, g.root(), &BallConfig::default()).unwrap();
    for (s, t) in [(1.0, 2.0), (3.0, 7.0), (10.0, 20.0)] {
        let direct = evolve(&g, &x0, &cfg.clone().with_sample_times(vec![s, s + t]), Part::Full).unwrap();
        let mid = &direct.snapshots[0].state;
        let rest = evolve(&g, mid, &cfg.clone().with_sample_times(vec![t]), Part::Full).unwrap();
        let a = &direct.snapshots[1].state;
        let b = &rest.snapshots[0].state;
        let diff = a
            .ball()
            .vertices()
            .iter()
            .chain(b.ball().vertices())
            .map(|&v| (a.get(v) - b.get(v)).abs())
            .fold(0.0, f64::max);
        assert!(diff <= 20.0 * cfg.atol, "s={s} t={t} diff={diff}");
    }
}

#[test]
fn symmetric_flow_is_positive_and_conservative() {
    for g in [
        Box::new(IntegerLattice::new(2).unwrap()) as Box<dyn Graph>,
        Box::new(ExampleChain),
        Box::new(SkewPerturbedLattice::new(0.7).unwrap()),
    ] {
        let cfg = SimConfig::new(100.0);
        let x0 = StateVector::from_sequence(
            &*g,
            g.root(),
            &[(g.root(), 2.0)].into_iter().collect(),
            &BallConfig::default(),
        )
        .unwrap();
        let (obs, stats) = evolve_observed(&*g, &x0, &cfg, Part::Sym, |s| {
            (s.sum(), s.values.iter().copied().fold(f64::INFINITY, f64::min))
        })
        .unwrap();
        assert!(stats.richardson_max_difference.unwrap() <= 10.0 * cfg.atol);
        for (mass, min) in obs {
            assert!((mass - 2.0).abs() <= 100.0 * cfg.atol, "{}: mass {mass}", g.name());
            assert!(min >= -10.0 * cfg.atol, "{}: min {min}", g.name());
        }
    }
}

#[test]
fn indicator_away_from_root() {
    // translation invariance of the lattice flow
    let g = IntegerLattice::new(2).unwrap();
    let cfg = SimConfig::new(5.0).with_sample_times(vec![5.0]);
    let c = VertexId::pair(7, -3);
    let at_c = StateVector::indicator(&g, c, &BallConfig::default()).unwrap();
    let at_0 = StateVector::indicator(&g, g.root(), &BallConfig::default()).unwrap();
    let a = evolve(&g, &at_c, &cfg, Part::Sym).unwrap();
    let b = evolve(&g, &at_0, &cfg, Part::Sym).unwrap();
    for (di, dj) in [(0, 0), (1, 0), (2, -3), (-4, 1)] {
        let x = a.snapshots[0].state.get(VertexId::pair(7 + di, -3 + dj));
        let y = b.snapshots[0].state.get(VertexId::pair(di, dj));
        assert!((x - y).abs() < 1e-12);
    }
}
