use std::collections::{BTreeMap, BTreeSet};

use lvs_core::adversary::{AttackerSpec, PolicySet};
use lvs_core::cos::KnowledgeBase;
use lvs_core::harness::scripted::{covering_trace, A, B, C, D, E, F};
use lvs_core::model::derived_rng;
use lvs_core::protocol::{collect_declarations, epoch_finished, run_round, EpochState, SpotEvent};
use lvs_core::topology::{neighbor_graph, GreedySelector};
use lvs_core::{AreaGrid, AreaId, Position, RoundSchedule, UserId};
use rand::Rng;

fn grid_2x2() -> AreaGrid {
    AreaGrid {
        cell_size: 200.0,
        columns: 2,
        rows: 2,
        origin: Position::new(0.0, 0.0),
    }
}

fn positions(points: &[(f64, f64)]) -> BTreeMap<UserId, Position> {
    points
        .iter()
        .enumerate()
        .map(|(i, &(x, y))| (UserId(i as u32), Position::new(x, y)))
        .collect()
}

fn round(
    r: u64,
    pos: &BTreeMap<UserId, Position>,
    policies: &PolicySet,
    grid: &AreaGrid,
) -> (
    BTreeMap<UserId, lvs_core::protocol::Declaration>,
    lvs_core::protocol::RoundOutcome,
) {
    let decl = collect_declarations(pos, policies, grid, 5, r).unwrap();
    let g = neighbor_graph(pos, 50.0);
    let outcome = run_round(r, &decl, pos, &g, grid, &GreedySelector).unwrap();
    (decl, outcome)
}

fn pairs(events: &[SpotEvent]) -> BTreeSet<(UserId, UserId)> {
    events
        .iter()
        .map(|e| (e.mhs.min(e.neighbor), e.mhs.max(e.neighbor)))
        .collect()
}

#[test]
fn honest_users_declare_their_true_position() {
    let grid = grid_2x2();
    let pos = positions(&[(10.0, 10.0), (250.0, 30.0), (390.0, 390.0)]);
    let decl = collect_declarations(&pos, &PolicySet::default(), &grid, 1, 0).unwrap();
    for (u, d) in &decl {
        assert_eq!(d.position, pos[u]);
        assert_eq!(d.area, grid.area_of(&pos[u]).unwrap());
    }
}

#[test]
fn lsa_attacker_never_declares_its_true_area() {
    let grid = grid_2x2();
    let policies = PolicySet::from_specs(&[AttackerSpec::lsa(UserId(1), AreaId(3))]);
    let mut rng = derived_rng(3, 0, 0);
    for r in 0..200 {
        let pos = positions(&[
            (10.0, 10.0),
            (rng.gen_range(0.0..400.0), rng.gen_range(0.0..400.0)),
            (300.0, 100.0),
        ]);
        let decl = collect_declarations(&pos, &policies, &grid, 9, r).unwrap();
        let spoofer = &decl[&UserId(1)];
        assert_ne!(spoofer.area, grid.area_of(&pos[&UserId(1)]).unwrap());
        assert_eq!(grid.area_of(&spoofer.position).unwrap(), spoofer.area);
        for u in [UserId(0), UserId(2)] {
            assert_eq!(decl[&u].position, pos[&u]);
        }
    }
}

#[test]
fn mhs_and_neighbors_validate_each_other() {
    let grid = AreaGrid {
        cell_size: 1000.0,
        ..AreaGrid::default()
    };
    let none = PolicySet::default();
    // A, B, C in a row 40 m apart; D far away.
    let (_, first) = round(
        0,
        &positions(&[(0.0, 0.0), (40.0, 0.0), (80.0, 0.0), (200.0, 0.0)]),
        &none,
        &grid,
    );
    assert_eq!(first.selected[&AreaId(0)], BTreeSet::from([B]));
    assert_eq!(pairs(&first.events), BTreeSet::from([(A, B), (B, C)]));
    assert!(first.events.iter().all(|e| e.mhs == B));

    // D walks into C's range and C becomes a hotspot too.
    let (_, second) = round(
        1,
        &positions(&[(0.0, 0.0), (40.0, 0.0), (80.0, 0.0), (120.0, 0.0)]),
        &none,
        &grid,
    );
    assert!(second.selected[&AreaId(0)].contains(&C));
    assert!(second.events.iter().any(|e| e.mhs == C && e.neighbor == D));
}

#[test]
fn isolated_users_produce_no_events() {
    let grid = AreaGrid {
        cell_size: 1000.0,
        ..AreaGrid::default()
    };
    let (_, out) = round(
        0,
        &positions(&[(0.0, 0.0), (300.0, 0.0), (0.0, 300.0)]),
        &PolicySet::default(),
        &grid,
    );
    assert!(out.events.is_empty());
    assert_eq!(out.selected_count(), 0);
}

#[test]
fn events_match_pairwise_replay() {
    let grid = grid_2x2();
    let specs: Vec<AttackerSpec> = (40..45).map(|i| AttackerSpec::lsa(UserId(i), AreaId(0))).collect();
    let policies = PolicySet::from_specs(&specs);
    for seed in 0..30 {
        let mut rng = derived_rng(seed, 0, 0);
        let pts: Vec<(f64, f64)> = (0..50)
            .map(|_| (rng.gen_range(0.0..400.0), rng.gen_range(0.0..400.0)))
            .collect();
        let pos = positions(&pts);
        let (decl, out) = round(seed, &pos, &policies, &grid);

        let mut expected = BTreeSet::new();
        for (&area, selected) in &out.selected {
            let present = |u: UserId| decl[&u].area == area && grid.area_of(&pos[&u]).unwrap() == area;
            for &m in selected {
                assert!(present(m), "selected MHS {m} is not in area {area}");
                for &u in pos.keys() {
                    if u != m && present(u) && pos[&u].distance(&pos[&m]) <= 50.0 {
                        expected.insert((m.min(u), m.max(u)));
                    }
                }
            }
        }
        assert_eq!(pairs(&out.events), expected);
        assert_eq!(out.events.len(), expected.len());
        for e in &out.events {
            assert!(out.selected[&e.area].contains(&e.mhs));
            assert!(!e.fabricated);
            assert!(
                ![e.mhs, e.neighbor].iter().any(|u| (40..45).contains(&u.0)),
                "spoofer in a genuine event: {e:?}"
            );
        }
    }
}

#[test]
fn everyone_in_range_with_q1_finishes_in_one_round() {
    let grid = AreaGrid {
        cell_size: 1000.0,
        ..AreaGrid::default()
    };
    let pos = positions(&[(0.0, 0.0), (10.0, 0.0), (0.0, 10.0), (10.0, 10.0), (5.0, 5.0)]);
    let (decl, out) = round(0, &pos, &PolicySet::default(), &grid);
    let schedule = RoundSchedule {
        q: 1,
        m: 1.0,
        ..RoundSchedule::default()
    };
    let mut kb = KnowledgeBase::new(0);
    kb.exchange_round(&out.events, 5);
    let mut state = EpochState::new(AreaId(0), 0);
    state.record_round(decl.keys().copied(), &kb);
    assert!(epoch_finished(&state, &schedule));
}

#[test]
fn scripted_trace_ends_when_hand_replay_says() {
    // Hand replay with M = 0.9, q = 2 over six declared users: after round 2
    // only A lacks a second validator (it has E); in round 3 B spots A.
    let script = covering_trace();
    let schedule = RoundSchedule::default();
    assert_eq!((schedule.m, schedule.q), (0.9, 2));
    let mut kb = KnowledgeBase::new(0);
    let mut state = EpochState::new(AreaId(0), 0);
    let mut finished_at = None;
    for (r, events) in script.rounds.iter().enumerate() {
        kb.exchange_round(events, 5);
        state.record_round(script.users.iter().copied(), &kb);
        if r == 1 {
            let counts: Vec<u32> = [A, B, C, D, E, F].iter().map(|u| state.validator_count[u]).collect();
            assert_eq!(counts, vec![1, 3, 2, 2, 4, 4]);
        }
        if epoch_finished(&state, &schedule) && finished_at.is_none() {
            finished_at = Some(r + 1);
        }
    }
    assert_eq!(finished_at, Some(3));
}

#[test]
fn validator_counts_never_decrease_within_an_epoch() {
    let grid = AreaGrid {
        cell_size: 300.0,
        ..AreaGrid::default()
    };
    let none = PolicySet::default();
    let mut rng = derived_rng(77, 0, 0);
    let mut pts: Vec<(f64, f64)> = (0..40)
        .map(|_| (rng.gen_range(0.0..300.0), rng.gen_range(0.0..300.0)))
        .collect();
    let mut kb = KnowledgeBase::new(0);
    let mut state = EpochState::new(AreaId(0), 0);
    let mut previous = BTreeMap::new();
    for r in 0..10 {
        for p in &mut pts {
            p.0 = (p.0 + rng.gen_range(-20.0..20.0)).clamp(0.0, 299.0);
            p.1 = (p.1 + rng.gen_range(-20.0..20.0)).clamp(0.0, 299.0);
        }
        let (decl, out) = round(r, &positions(&pts), &none, &grid);
        kb.exchange_round(&out.events, 5);
        state.record_round(decl.keys().copied(), &kb);
        for (u, &c) in &state.validator_count {
            assert!(c >= previous.get(u).copied().unwrap_or(0));
            assert_eq!(c as usize, kb.validators_of(*u));
        }
        previous = state.validator_count.clone();
    }
}
