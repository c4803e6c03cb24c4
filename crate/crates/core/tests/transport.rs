//! Transportation solver against the unit-augmentation oracle and the general
//! min-cost max-flow solver, plus its scaling on the networks the relaxation
//! produces.

mod common;

use common::oracle;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use skycover::cover::{prune_cover, uniform_cover};
use skycover::driver::{seed_count, SolverConfig};
use skycover::instance::{generate, GeneratorConfig};
use skycover::netflow::{min_cost_max_flow, transport, FlowNetwork, Supply};
use skycover::par::Exec;
use skycover::relaxation::RelaxedProblem;
use skycover::RegionRect;
use std::time::Instant;

/// `source(0) -> supply -> sink -> target(1)` edge list.
fn as_edges(supplies: &[Supply], capacity: &[i64]) -> (usize, Vec<(usize, usize, i64, i64)>) {
    let sink_node = |j: usize| 2 + supplies.len() + j;
    let mut edges = Vec::new();
    for (k, s) in supplies.iter().enumerate() {
        edges.push((0, 2 + k, s.amount, 0));
        for &(j, c) in &s.arcs {
            edges.push((2 + k, sink_node(j), s.amount, c));
        }
    }
    for (j, &cap) in capacity.iter().enumerate() {
        edges.push((sink_node(j), 1, cap, 0));
    }
    (2 + supplies.len() + capacity.len(), edges)
}

fn random_instance(rng: &mut ChaCha8Rng, supplies: usize, sinks: usize) -> (Vec<Supply>, Vec<i64>) {
    let capacity: Vec<i64> = (0..sinks).map(|_| rng.random_range(0..=6)).collect();
    let list = (0..supplies)
        .map(|_| {
            let mut arcs: Vec<(usize, i64)> = Vec::new();
            for _ in 0..rng.random_range(0..=3.min(sinks)) {
                let j = rng.random_range(0..sinks);
                if arcs.iter().all(|a| a.0 != j) {
                    arcs.push((j, rng.random_range(0..=20)));
                }
            }
            Supply {
                amount: rng.random_range(0..=4),
                arcs,
            }
        })
        .collect();
    (list, capacity)
}

fn check_feasible(supplies: &[Supply], capacity: &[i64], flow: &[Vec<i64>]) -> (i64, i64) {
    let mut load = vec![0i64; capacity.len()];
    let (mut shipped, mut cost) = (0, 0);
    for (s, f) in supplies.iter().zip(flow) {
        assert_eq!(s.arcs.len(), f.len());
        assert!(f.iter().all(|&x| x >= 0));
        assert!(f.iter().sum::<i64>() <= s.amount);
        for (&(j, c), &x) in s.arcs.iter().zip(f) {
            load[j] += x;
            shipped += x;
            cost += c * x;
        }
    }
    for (l, c) in load.iter().zip(capacity) {
        assert!(l <= c, "sink over capacity");
    }
    (shipped, cost)
}

#[test]
fn matches_unit_oracle_on_small_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for case in 0..300 {
        let sinks = rng.random_range(1..=5);
        let count = rng.random_range(0..=8);
        let (supplies, capacity) = random_instance(&mut rng, count, sinks);
        let got = transport(&supplies, &capacity).unwrap();
        let (n, edges) = as_edges(&supplies, &capacity);
        assert_eq!((got.shipped, got.cost), oracle(n, &edges, 0, 1), "case {case}");
        assert_eq!(check_feasible(&supplies, &capacity, &got.flow), (got.shipped, got.cost));
    }
}

#[test]
fn matches_general_solver_on_medium_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for case in 0..60 {
        let sinks = rng.random_range(5..=40);
        let count = rng.random_range(20..=300);
        let (supplies, capacity) = random_instance(&mut rng, count, sinks);
        let got = transport(&supplies, &capacity).unwrap();
        let (n, edges) = as_edges(&supplies, &capacity);
        let mut net = FlowNetwork::new(n, 0, 1).unwrap();
        for &(u, v, c, w) in &edges {
            net.add_edge(u, v, c, w).unwrap();
        }
        let want = min_cost_max_flow(&net).unwrap();
        assert_eq!((got.shipped, got.cost), (want.value, want.cost), "case {case}");
        check_feasible(&supplies, &capacity, &got.flow);
    }
}

#[test]
fn deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let (supplies, capacity) = random_instance(&mut rng, 500, 30);
    assert_eq!(
        transport(&supplies, &capacity).unwrap(),
        transport(&supplies, &capacity).unwrap()
    );
}

#[test]
fn trivial_inputs() {
    let r = transport(&[], &[3, 4]).unwrap();
    assert_eq!((r.shipped, r.cost), (0, 0));
    let s = vec![Supply {
        amount: 5,
        arcs: vec![],
    }];
    assert_eq!(transport(&s, &[]).unwrap().shipped, 0);
    let s = vec![Supply {
        amount: 5,
        arcs: vec![(0, 7)],
    }];
    let r = transport(&s, &[2]).unwrap();
    assert_eq!((r.shipped, r.cost, r.flow.clone()), (2, 14, vec![vec![2]]));
}

#[test]
fn prefers_more_shipped_over_cheaper() {
    // two units at 0 cost would fill sink 0; shipping the second supply
    // requires moving one unit to the expensive sink 1
    let s = vec![
        Supply {
            amount: 1,
            arcs: vec![(0, 0), (1, 1000)],
        },
        Supply {
            amount: 1,
            arcs: vec![(0, 0)],
        },
    ];
    let r = transport(&s, &[1, 1]).unwrap();
    assert_eq!((r.shipped, r.cost), (2, 1000));
}

#[test]
fn rejects_bad_input() {
    let ok = |arcs: Vec<(usize, i64)>| vec![Supply { amount: 1, arcs }];
    assert!(transport(&ok(vec![(0, 1)]), &[-1]).is_err());
    assert!(transport(&ok(vec![(1, 1)]), &[1]).is_err());
    assert!(transport(&ok(vec![(0, -1)]), &[1]).is_err());
    assert!(transport(&ok(vec![(0, 1), (0, 2)]), &[1]).is_err());
    assert!(transport(
        &[Supply {
            amount: -1,
            arcs: vec![]
        }],
        &[1]
    )
    .is_err());
    assert!(transport(&ok(vec![(0, i64::MAX / 2)]), &[1]).is_err());
}

/// The transportation problem the relaxation solves for a clustered
/// instance of `n` galaxies at fixed density, seeded with a uniform cover
/// of 10% spare capacity. About 0.9 edges per galaxy.
fn relaxation_shaped(n: usize, seed: u64) -> (Vec<Supply>, Vec<i64>, usize) {
    let r = 1.5f64.to_radians();
    let c = 600;
    // ~30000 galaxies in a 20 x 20 degree patch at mid latitude
    let area = n as f64 / 30_000.0 * RegionRect::new(35.0, 55.0, -55.0, -35.0).unwrap().area();
    let half = (area.sqrt().to_degrees() / 2.0).min(60.0);
    let width = (area / (2.0 * half.to_radians().sin())).to_degrees();
    let region = RegionRect::new(0.0, width, -half, half).unwrap();
    let inst = generate(&GeneratorConfig::with_defaults(region, n, r, seed), r, c).unwrap();
    let k = (1.1 * n as f64 / c as f64).ceil() as usize;
    let seed_cover = prune_cover(&uniform_cover(&inst.region, seed_count(&inst, k), r), &inst, k);
    let model = SolverConfig::default().model(r);
    let problem = RelaxedProblem::build(&inst, &seed_cover, &model, 0.0, Exec::Sequential).unwrap();
    let supplies: Vec<Supply> = problem
        .classes
        .classes
        .iter()
        .map(|cl| Supply {
            amount: cl.members.len() as i64,
            arcs: cl.candidates.clone(),
        })
        .collect();
    let edges = supplies.iter().map(|s| s.arcs.len() + 1).sum::<usize>() + problem.discs;
    (supplies, vec![c as i64; problem.discs], edges)
}

/// Best of five runs, and the network's edge count.
fn time_transport(n: usize) -> (f64, usize) {
    let (supplies, capacity, edges) = relaxation_shaped(n, 3);
    let best = (0..5)
        .map(|_| {
            let t = Instant::now();
            std::hint::black_box(transport(&supplies, &capacity).unwrap());
            t.elapsed().as_secs_f64()
        })
        .fold(f64::INFINITY, f64::min);
    (best, edges)
}

#[test]
fn near_linear_scaling_on_relaxation_shaped_networks() {
    // galaxy counts giving roughly 10^3 .. 10^6 edges
    let runs: Vec<(f64, usize)> = [1_100, 11_000, 110_000, 1_100_000]
        .iter()
        .map(|&n| time_transport(n))
        .collect();
    for w in runs.windows(2) {
        let ((t0, e0), (t1, e1)) = (w[0], w[1]);
        let ratio = t1 / t0;
        println!("{e0} -> {e1} edges: {t0:.2e}s -> {t1:.2e}s, x{ratio:.1}");
        assert!(ratio <= 25.0, "time ratio {ratio:.1} between {e0} and {e1} edges");
    }
}
