use std::collections::{BTreeMap, BTreeSet};

use lvs_core::model::derived_rng;
use lvs_core::topology::{greedy_mhs_select, neighbor_graph, optimal_mhs_bruteforce, NeighborGraph};
use lvs_core::{Position, UserId};
use proptest::prelude::*;
use rand::Rng;

fn ids(v: &[u32]) -> BTreeSet<UserId> {
    v.iter().map(|&i| UserId(i)).collect()
}

fn graph(n: u32, edges: &[(u32, u32)]) -> NeighborGraph {
    NeighborGraph::from_edges((0..n).map(UserId), edges.iter().map(|&(a, b)| (UserId(a), UserId(b))))
}

fn positions(points: &[(f64, f64)]) -> BTreeMap<UserId, Position> {
    points
        .iter()
        .enumerate()
        .map(|(i, &(x, y))| (UserId(i as u32), Position::new(x, y)))
        .collect()
}

/// Every node with a neighbor is selected or next to a selected node, and no
/// isolated node is selected.
fn covers(pos: &BTreeMap<UserId, Position>, range: f64, selected: &BTreeSet<UserId>) -> bool {
    let near = |a: UserId, b: UserId| a != b && pos[&a].distance(&pos[&b]) <= range;
    let has_neighbor = |u: UserId| pos.keys().any(|&v| near(u, v));
    selected.iter().all(|&s| has_neighbor(s))
        && pos
            .keys()
            .all(|&u| !has_neighbor(u) || selected.contains(&u) || selected.iter().any(|&s| near(u, s)))
}

/// Size of a minimum cover by enumerating every subset of the non-isolated nodes.
fn optimum_size(pos: &BTreeMap<UserId, Position>, range: f64) -> usize {
    let users: Vec<UserId> = pos.keys().copied().collect();
    let n = users.len();
    (0u32..1 << n)
        .filter(|mask| {
            let chosen: BTreeSet<UserId> = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| users[i]).collect();
            covers(pos, range, &chosen)
        })
        .map(|mask| mask.count_ones() as usize)
        .min()
        .expect("the set of all non-isolated nodes covers")
}

fn harmonic(n: usize) -> f64 {
    (1..=n).map(|k| 1.0 / k as f64).sum()
}

#[test]
fn disc_boundary() {
    let g = neighbor_graph(&positions(&[(0.0, 0.0), (49.9, 0.0)]), 50.0);
    assert!(g.has_edge(UserId(0), UserId(1)));
    let g = neighbor_graph(&positions(&[(0.0, 0.0), (50.1, 0.0)]), 50.0);
    assert_eq!(g.edge_count(), 0);
}

#[test]
fn graph_matches_pairwise_oracle() {
    for seed in 0..20 {
        let mut rng = derived_rng(seed, 0, 0);
        let pts: Vec<(f64, f64)> = (0..100)
            .map(|_| (rng.gen_range(0.0..400.0), rng.gen_range(-100.0..300.0)))
            .collect();
        let pos = positions(&pts);
        let g = neighbor_graph(&pos, 50.0);
        let mut expected = Vec::new();
        for (&a, pa) in &pos {
            for (&b, pb) in pos.range(UserId(a.0 + 1)..) {
                if pa.distance(pb) <= 50.0 {
                    expected.push((a, b));
                }
            }
        }
        assert_eq!(g.edges(), expected);
    }
}

#[test]
fn small_selection_examples() {
    assert_eq!(greedy_mhs_select(&graph(2, &[(0, 1)])), ids(&[0]));
    assert_eq!(
        greedy_mhs_select(&graph(5, &[(0, 1), (0, 2), (0, 3), (0, 4)])),
        ids(&[0])
    );
    assert_eq!(greedy_mhs_select(&graph(3, &[(0, 1), (1, 2)])), ids(&[1]));
    assert!(greedy_mhs_select(&graph(4, &[])).is_empty());
    assert_eq!(optimal_mhs_bruteforce(&graph(3, &[(0, 1), (1, 2)])).unwrap(), ids(&[1]));
    assert!(optimal_mhs_bruteforce(&graph(4, &[])).unwrap().is_empty());
}

#[test]
fn greedy_within_harmonic_bound_on_random_disc_graphs() {
    let mut rng = derived_rng(2024, 0, 0);
    for _ in 0..200 {
        let n = rng.gen_range(1..=12);
        let side = rng.gen_range(60.0..250.0);
        let pts: Vec<(f64, f64)> = (0..n)
            .map(|_| (rng.gen_range(0.0..side), rng.gen_range(0.0..side)))
            .collect();
        let pos = positions(&pts);
        let g = neighbor_graph(&pos, 50.0);
        let greedy = greedy_mhs_select(&g);
        assert!(covers(&pos, 50.0, &greedy), "{pts:?} -> {greedy:?}");
        let opt = optimum_size(&pos, 50.0);
        assert!(greedy.len() as f64 <= harmonic(n) * opt as f64 + 1e-9, "{pts:?}");
        assert_eq!(optimal_mhs_bruteforce(&g).unwrap().len(), opt);
    }
}

proptest! {
    #[test]
    fn greedy_covers_and_is_deterministic(
        pts in prop::collection::vec((0.0f64..300.0, 0.0f64..300.0), 0..60),
        range in 10.0f64..120.0,
    ) {
        let pos = positions(&pts);
        let g = neighbor_graph(&pos, range);
        let selected = greedy_mhs_select(&g);
        prop_assert!(covers(&pos, range, &selected));
        prop_assert_eq!(greedy_mhs_select(&g.clone()), selected);
    }
}
