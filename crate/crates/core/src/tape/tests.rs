use proptest::prelude::*;

use super::*;
use crate::voxel::{Avatar, BlockGrid, BlockId, BuildAction, Coord, MoveDir};

pub(crate) const SAMPLE_FRAGMENT: &[&str] = &[
    "0 set_look (-0.004, 0)",
    "1 set_look (-0.044, -0.042)",
    "2 action step_backward",
    "3 pos_change (-0.10159854456559483, 63, 0.014814775657966633)",
    "4 action select_and_place_block 50 1 63 0",
    "5 block_change  (1, 63, 0, 0, 50)",
];

fn action(name: &str, args: &[f64]) -> TapeEventKind {
    TapeEventKind::Action {
        name: name.into(),
        args: args.to_vec(),
    }
}

#[test]
fn parses_sample_lines() {
    let tape = parse_tape(SAMPLE_FRAGMENT).unwrap();
    assert_eq!(tape.len(), 6);
    assert_eq!(tape.events[2], TapeEvent::new(2, action("step_backward", &[])));
    assert_eq!(
        tape.events[4],
        TapeEvent::new(4, action("select_and_place_block", &[50.0, 1.0, 63.0, 0.0]))
    );
    assert_eq!(
        tape.events[5],
        TapeEvent::new(
            5,
            TapeEventKind::BlockChange {
                x: 1,
                y: 63,
                z: 0,
                old: 0,
                new: 50
            }
        )
    );
}

#[test]
fn serializes_canonically() {
    assert!(serialize_tape(&Tape::default()).is_empty());
    let t = Tape::new(vec![TapeEvent::new(
        0,
        TapeEventKind::SetLook {
            pitch: -0.004,
            yaw: 0.0,
        },
    )]);
    assert_eq!(serialize_tape(&t), vec!["0 set_look (-0.004, 0)"]);

    let lines = serialize_tape(&parse_tape(SAMPLE_FRAGMENT).unwrap());
    assert_eq!(lines[5], "5 block_change (1, 63, 0, 0, 50)");
    let mut expected: Vec<String> = SAMPLE_FRAGMENT.iter().map(|s| s.to_string()).collect();
    expected[5] = "5 block_change (1, 63, 0, 0, 50)".into();
    assert_eq!(lines, expected);
    assert_eq!(serialize_tape(&parse_tape(&lines).unwrap()), lines);
}

#[test]
fn parse_errors_carry_line_numbers() {
    let cases: &[(&[&str], usize)] = &[
        (&["0 teleport (1, 2, 3)"], 1),
        (&["0 set_look (1, 2)", "", "1 pos_change (1, 2)"], 3),
        (&["0 set_look (a, 2)"], 1),
        (&["x set_look (1, 2)"], 1),
        (&["0 block_change (1, 63, 0, 50, 50)"], 1),
        (&["0 block_change (1.5, 63, 0, 0, 50)"], 1),
        (&["0 action select_and_place_block 50 1 63"], 1),
        (&["0 action step_backward 3"], 1),
        (&["0 action custom foo"], 1),
        (&["3 action jump", "2 action jump"], 2),
        (&["0 set_look -1, 2"], 1),
        (&["0"], 1),
        (&["0 pos_change (inf, 0, 0)"], 1),
    ];
    for (lines, line) in cases {
        match parse_tape(*lines) {
            Err(TapeError::Parse { line: l, .. }) => assert_eq!(l, *line, "{lines:?}"),
            other => panic!("{lines:?} parsed as {other:?}"),
        }
    }
}

#[test]
fn unknown_actions_parse_and_replay_as_no_ops() {
    let tape = parse_tape(["0 action fly_up 1.5 2", "1 action open_inventory"]).unwrap();
    let start = WorldState::default();
    let end = replay(&tape, start.clone(), &Rules::default(), ReplayOptions::default()).unwrap();
    assert_eq!(end, start);
}

#[test]
fn json_accepts_both_encodings() {
    let a: Tape = serde_json::from_str(r#"["0 action jump", "1 action step_left"]"#).unwrap();
    let b: Tape = serde_json::from_str(r#""0 action jump\n1 action step_left\n""#).unwrap();
    assert_eq!(a, b);
    assert_eq!(
        serde_json::to_string(&a).unwrap(),
        r#"["0 action jump","1 action step_left"]"#
    );
}

#[test]
fn empty_tape_replays_to_initial_state() {
    let start = WorldState::new(
        BlockGrid::from_cells([(Coord::new(0, 0, 0), 57)]).unwrap(),
        Avatar::at(1.0, 0.0, 1.0),
    );
    let end = replay(&Tape::default(), start.clone(), &Rules::default(), ReplayOptions::default())
        .unwrap();
    assert_eq!(end, start);
}

#[test]
fn sample_fragment_places_block() {
    let tape = parse_tape(SAMPLE_FRAGMENT).unwrap();
    let end = replay(&tape, WorldState::default(), &Rules::default(), ReplayOptions::default())
        .unwrap();
    assert_eq!(end.grid.len(), 1);
    assert_eq!(end.grid.get(Coord::from_world(1, 63, 0)).unwrap().get(), 50);
    assert_eq!(end.grid.to_world_blocks(), vec![[1, 63, 0, 50]]);
    assert_eq!(end.avatar.yaw, -0.042);
}

#[test]
fn contradicting_block_change_diverges() {
    let tape = parse_tape([
        "0 pos_change (0, 63, 0)",
        "1 action select_and_place_block 50 1 63 0",
        "2 block_change (1, 63, 0, 0, 57)",
    ])
    .unwrap();
    let err = replay(&tape, WorldState::default(), &Rules::default(), ReplayOptions::default())
        .unwrap_err();
    assert!(matches!(err, TapeError::ReplayDivergence { step: 2, .. }), "{err}");

    let wrong_cell = parse_tape([
        "0 pos_change (0, 63, 0)",
        "1 action select_and_place_block 50 1 63 0",
        "2 block_change (0, 63, 1, 0, 50)",
    ])
    .unwrap();
    assert!(replay(&wrong_cell, WorldState::default(), &Rules::default(), ReplayOptions::default())
        .is_err());
}

#[test]
fn missing_block_change_diverges_at_next_action() {
    let tape = parse_tape([
        "0 pos_change (0, 63, 0)",
        "1 action select_and_place_block 50 1 63 0",
        "2 action jump",
    ])
    .unwrap();
    let err = replay(&tape, WorldState::default(), &Rules::default(), ReplayOptions::default())
        .unwrap_err();
    assert!(matches!(err, TapeError::ReplayDivergence { step: 1, .. }));
}

#[test]
fn unreproducible_action_trusts_the_record() {
    // Avatar far away: the simulated placement is out of reach, the record wins.
    let tape = parse_tape([
        "0 action select_and_place_block 50 5 63 5",
        "1 block_change (5, 63, 5, 0, 50)",
    ])
    .unwrap();
    let end = replay(&tape, WorldState::default(), &Rules::default(), ReplayOptions::default())
        .unwrap();
    assert_eq!(end.grid.to_world_blocks(), vec![[5, 63, 5, 50]]);
}

#[test]
fn strict_mode_checks_positions() {
    let tape = parse_tape(SAMPLE_FRAGMENT).unwrap();
    let err = replay(&tape, WorldState::default(), &Rules::default(), ReplayOptions::strict())
        .unwrap_err();
    assert!(matches!(err, TapeError::ReplayDivergence { step: 3, .. }));

    let close = parse_tape(["0 action step_forward", "1 pos_change (0, 63, -5.5000000001)"]).unwrap();
    replay(&close, WorldState::default(), &Rules::default(), ReplayOptions::strict()).unwrap();
    let far = parse_tape(["0 action step_forward", "1 pos_change (0, 63, -5.49)"]).unwrap();
    assert!(replay(&far, WorldState::default(), &Rules::default(), ReplayOptions::strict()).is_err());
}

#[test]
fn strict_mode_checks_old_ids() {
    let tape = parse_tape(["0 block_change (1, 63, 0, 57, 50)"]).unwrap();
    let rules = Rules::default();
    assert!(replay(&tape, WorldState::default(), &rules, ReplayOptions::strict()).is_err());
    assert!(replay(&tape, WorldState::default(), &rules, ReplayOptions::default()).is_ok());
}

#[test]
fn out_of_region_block_change_diverges() {
    let tape = parse_tape(["0 block_change (9, 63, 0, 0, 50)"]).unwrap();
    assert!(replay(&tape, WorldState::default(), &Rules::default(), ReplayOptions::default())
        .is_err());
}

fn scripted_build(rules: &Rules) -> (Tape, WorldState) {
    let id = |n| BlockId::new(n).unwrap();
    let mut rec = TapeRecorder::new(WorldState::default(), rules);
    let actions = [
        BuildAction::SetLook {
            pitch: 10.0,
            yaw: 0.0,
        },
        BuildAction::Move {
            dir: MoveDir::Forward,
        },
        BuildAction::Move {
            dir: MoveDir::Forward,
        },
        BuildAction::Move {
            dir: MoveDir::Forward,
        },
        BuildAction::Move {
            dir: MoveDir::Forward,
        },
        BuildAction::PlaceBlock {
            coord: Coord::new(0, 0, -2),
            block: id(50),
        },
        BuildAction::PlaceBlock {
            coord: Coord::new(1, 0, -2),
            block: id(57),
        },
        BuildAction::Jump,
        BuildAction::PlaceBlock {
            coord: Coord::new(0, 0, -4),
            block: id(59),
        },
        BuildAction::BreakBlock {
            coord: Coord::new(1, 0, -2),
        },
        BuildAction::Move {
            dir: MoveDir::ForwardLeft,
        },
    ];
    for a in &actions {
        rec.record(a).unwrap();
    }
    rec.finish()
}

#[test]
fn recorded_tapes_replay_strictly() {
    let rules = Rules::default();
    let (tape, end) = scripted_build(&rules);
    assert_eq!(end.grid.len(), 2);
    // Jump + place underneath lifted the avatar onto the new block.
    assert!(tape.to_lines().iter().any(|l| l.ends_with("pos_change (0, 64, -4)")));
    let replayed = replay(&tape, WorldState::default(), &rules, ReplayOptions::strict()).unwrap();
    assert_eq!(replayed, end);
}

#[test]
fn verify_detects_any_single_cell_tampering() {
    let rules = Rules::default();
    let (tape, end) = scripted_build(&rules);
    let v = verify_ending_state(&tape, WorldState::default(), &end.grid, &rules).unwrap();
    assert!(v.verified());

    let mut extra = end.grid.clone();
    extra.set_raw(Coord::new(4, 4, 4), 50).unwrap();
    let v = verify_ending_state(&tape, WorldState::default(), &extra, &rules).unwrap();
    assert_eq!(v.mismatches, vec![Coord::new(4, 4, 4)]);

    for (c, _) in end.grid.iter() {
        let mut missing = end.grid.clone();
        missing.remove(c);
        assert!(!verify_ending_state(&tape, WorldState::default(), &missing, &rules)
            .unwrap()
            .verified());
        let mut recolored = end.grid.clone();
        recolored.set_raw(c, 47).unwrap();
        assert!(!verify_ending_state(&tape, WorldState::default(), &recolored, &rules)
            .unwrap()
            .verified());
    }
}

fn finite() -> impl Strategy<Value = f64> {
    use proptest::num::f64::{NEGATIVE, NORMAL, POSITIVE, SUBNORMAL, ZERO};
    POSITIVE | NEGATIVE | NORMAL | SUBNORMAL | ZERO
}

fn event_kind() -> impl Strategy<Value = TapeEventKind> {
    let known = prop_oneof![
        prop::sample::select(
            MoveDir::ALL
                .iter()
                .map(|d| d.action_name())
                .chain(["jump"])
                .collect::<Vec<_>>()
        )
        .prop_map(|n| action(n, &[])),
        (1u16..100, -10i32..10, 60i32..75, -10i32..10).prop_map(|(b, x, y, z)| action(
            "select_and_place_block",
            &[b as f64, x as f64, y as f64, z as f64]
        )),
        (-10i32..10, 60i32..75, -10i32..10)
            .prop_map(|(x, y, z)| action("break_block", &[x as f64, y as f64, z as f64])),
    ];
    prop_oneof![
        (finite(), finite()).prop_map(|(pitch, yaw)| TapeEventKind::SetLook { pitch, yaw }),
        (finite(), finite(), finite()).prop_map(|(x, y, z)| TapeEventKind::PosChange { x, y, z }),
        known,
        ("[a-z][a-z0-9_]{0,12}", prop::collection::vec(finite(), 0..4)).prop_filter_map(
            "known names have fixed arity",
            |(name, args)| {
                (MoveDir::from_action_name(&name).is_none()
                    && !["jump", "select_and_place_block", "break_block"].contains(&name.as_str()))
                .then(|| TapeEventKind::Action { name, args })
            }
        ),
        (any::<i32>(), any::<i32>(), any::<i32>(), any::<u16>(), any::<u16>())
            .prop_filter_map("ids differ", |(x, y, z, old, new)| {
                (old != new).then_some(TapeEventKind::BlockChange { x, y, z, old, new })
            }),
    ]
}

fn tape_strategy() -> impl Strategy<Value = Tape> {
    prop::collection::vec((0u64..3, event_kind()), 0..30).prop_map(|items| {
        let mut step = 0;
        Tape::new(
            items
                .into_iter()
                .map(|(inc, kind)| {
                    step += inc;
                    TapeEvent::new(step, kind)
                })
                .collect(),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn parse_serialize_round_trip(tape in tape_strategy()) {
        let lines = serialize_tape(&tape);
        let parsed = parse_tape(&lines).unwrap();
        prop_assert_eq!(&parsed, &tape);
        prop_assert_eq!(serialize_tape(&parsed), lines);
    }
}

fn block_change_only_tape() -> impl Strategy<Value = Tape> {
    prop::collection::vec((-5i32..=5, 63i32..=71, -5i32..=5, prop::sample::select(vec![0u16, 47, 50, 57])), 0..40)
        .prop_map(|cells| {
            let mut events = Vec::new();
            for (i, (x, y, z, new)) in cells.into_iter().enumerate() {
                // old id is irrelevant outside strict mode; keep it distinct from new
                let old = if new == 0 { 50 } else { 0 };
                events.push(TapeEvent::new(i as u64, TapeEventKind::BlockChange { x, y, z, old, new }));
            }
            Tape::new(events)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn block_changes_alone_define_the_grid(tape in block_change_only_tape()) {
        let start = WorldState::default();
        let end = replay(&tape, start.clone(), &Rules::default(), ReplayOptions::default()).unwrap();
        let mut expected = start.grid.clone();
        for e in &tape.events {
            if let TapeEventKind::BlockChange { x, y, z, new, .. } = e.kind {
                let c = Coord::from_world(x, y, z);
                match BlockId::new(new) {
                    Some(b) => { expected.set(c, b).unwrap(); }
                    None => { expected.remove(c); }
                }
            }
        }
        prop_assert_eq!(end.grid, expected);
    }

    #[test]
    fn prefix_replay_is_consistent(tape in block_change_only_tape(), cut in 0usize..40) {
        let rules = Rules::default();
        let cut = cut.min(tape.len());
        let mut r = Replayer::new(WorldState::default(), &rules, ReplayOptions::default());
        let mut snapshots = vec![r.state().clone()];
        for e in &tape.events {
            r.feed(e).unwrap();
            snapshots.push(r.state().clone());
        }
        let prefix = Tape::new(tape.events[..cut].to_vec());
        let once = replay(&prefix, WorldState::default(), &rules, ReplayOptions::default()).unwrap();
        let twice = replay(&prefix, WorldState::default(), &rules, ReplayOptions::default()).unwrap();
        prop_assert_eq!(&once, &twice);
        prop_assert_eq!(&once, &snapshots[cut]);
    }
}
