mod common;

use builderkit_core::dataset::{Record, Role};
use builderkit_core::tape::{Tape, TapeRecorder};
use builderkit_core::voxel::{Avatar, BlockGrid, BlockId, BuildAction, Coord, Rules, WorldState};
use builderkit_server::collection::CollectionError;
use builderkit_server::{AdminError, CollectionMode, NewCollectionGame, Submission, TurnKind};
use common::harness;

fn game(mode: CollectionMode) -> NewCollectionGame {
    NewCollectionGame {
        mode,
        initial_grid: BlockGrid::new(),
        target_grid: None,
        structure_id: Some("s1".into()),
    }
}

fn place_tape(c: Coord) -> (Tape, BlockGrid) {
    let rules = Rules::default();
    let start = WorldState::new(BlockGrid::new(), Avatar::default());
    let mut rec = TapeRecorder::new(start, &rules);
    rec.record(&BuildAction::PlaceBlock {
        coord: c,
        block: BlockId::new(57).unwrap(),
    })
    .unwrap();
    let (tape, end) = rec.finish();
    (tape, end.grid)
}

fn collection_err(e: AdminError) -> CollectionError {
    match e {
        AdminError::Collection(c) => c,
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn single_turn_round_produces_three_records() {
    let h = harness();
    let id = h.svc.create_collection_game(game(CollectionMode::SingleTurn));
    let a = h.svc.next_open_turn("alice").unwrap();
    assert_eq!((a.game_id, a.role, a.kind), (id, Role::Architect, TurnKind::Ideation));
    let (tape, _) = place_tape(Coord::new(0, 0, -4));
    let ids = h
        .svc
        .submit_single_turn(&a.assignment_id, Submission::Ideation { tape: tape.clone(), instruction: "put a blue block in front of you".into() })
        .unwrap();
    assert_eq!(ids.len(), 1);

    // Alice played the architect, so the builder turn goes to someone else.
    assert!(h.svc.next_open_turn("alice").is_none());
    let b = h.svc.next_open_turn("bob").unwrap();
    assert_eq!((b.role, b.kind), (Role::Builder, TurnKind::Execution));
    assert_eq!(b.instruction.as_deref(), Some("put a blue block in front of you"));
    assert!(b.target.is_none());
    let (tape, ending) = place_tape(Coord::new(0, 0, -4));
    let ids = h
        .svc
        .submit_single_turn(
            &b.assignment_id,
            Submission::Execution { tape: Some(tape), ending_state: Some(ending), ambiguous: false, question: None },
        )
        .unwrap();
    assert_eq!(ids.len(), 2);
    let records = h.svc.records().unwrap();
    assert_eq!(records.len(), 3);
    match &records[1] {
        Record::Architect(r) => {
            assert_eq!(r.is_clear, Some(true));
            assert_eq!(r.meta.annotator_id.as_deref(), Some("alice"));
        }
        other => panic!("unexpected {other:?}"),
    }
    assert!(h.svc.next_open_turn("carol").is_none());
    assert_eq!(h.svc.stats().unwrap().collection.finished, 1);
}

#[test]
fn ambiguous_execution_needs_a_question() {
    let h = harness();
    h.svc.create_collection_game(game(CollectionMode::MultiTurn));
    let a = h.svc.next_open_turn("alice").unwrap();
    h.svc
        .submit_single_turn(&a.assignment_id, Submission::Instruction { text: "build a tower".into() })
        .unwrap();
    let b = h.svc.next_open_turn("bob").unwrap();
    let err = h
        .svc
        .submit_single_turn(
            &b.assignment_id,
            Submission::Execution { tape: None, ending_state: None, ambiguous: true, question: Some("  ".into()) },
        )
        .unwrap_err();
    assert_eq!(collection_err(err), CollectionError::MissingQuestion);
    let ids = h
        .svc
        .submit_single_turn(
            &b.assignment_id,
            Submission::Execution { tape: None, ending_state: None, ambiguous: true, question: Some("what color?".into()) },
        )
        .unwrap();
    assert_eq!(ids.len(), 1);
    match &h.svc.records().unwrap()[0] {
        Record::Architect(r) => {
            assert!(r.is_ambiguous());
            assert_eq!(r.clarification_question.as_deref(), Some("what color?"));
        }
        other => panic!("unexpected {other:?}"),
    }
    // The game returns to the architect with the question in the history.
    let next = h.svc.next_open_turn("alice").unwrap();
    assert_eq!(next.kind, TurnKind::Instruction);
    assert_eq!(next.history.len(), 2);
}

#[test]
fn tampered_ending_state_is_a_validation_error() {
    let h = harness();
    h.svc.create_collection_game(game(CollectionMode::MultiTurn));
    let a = h.svc.next_open_turn("alice").unwrap();
    h.svc
        .submit_single_turn(&a.assignment_id, Submission::Instruction { text: "one blue block".into() })
        .unwrap();
    let b = h.svc.next_open_turn("bob").unwrap();
    let (tape, mut ending) = place_tape(Coord::new(0, 0, -4));
    ending.set_raw(Coord::new(2, 0, 2), 50).unwrap();
    let err = h
        .svc
        .submit_single_turn(
            &b.assignment_id,
            Submission::Execution { tape: Some(tape), ending_state: Some(ending), ambiguous: false, question: None },
        )
        .unwrap_err();
    assert!(matches!(collection_err(err), CollectionError::Validation(_)));
    assert!(h.svc.records().unwrap().is_empty());
}

#[test]
fn leases_are_disjoint_and_expire() {
    let h = harness();
    h.svc.create_collection_game(game(CollectionMode::MultiTurn));
    h.svc.create_collection_game(game(CollectionMode::MultiTurn));
    let a = h.svc.next_open_turn("alice").unwrap();
    let b = h.svc.next_open_turn("bob").unwrap();
    assert_ne!(a.game_id, b.game_id);
    assert!(h.svc.next_open_turn("carol").is_none());

    h.clock.advance_ms(31 * 60_000);
    let c = h.svc.next_open_turn("carol").unwrap();
    assert_eq!(c.game_id, a.game_id);
    let err = h
        .svc
        .submit_single_turn(&b.assignment_id, Submission::Instruction { text: "late".into() })
        .unwrap_err();
    assert_eq!(collection_err(err), CollectionError::LeaseExpired);
    let err = h
        .svc
        .submit_single_turn(&a.assignment_id, Submission::Instruction { text: "stolen".into() })
        .unwrap_err();
    assert!(matches!(collection_err(err), CollectionError::UnknownAssignment(_)));
}

#[test]
fn wrong_submission_kind_is_refused() {
    let h = harness();
    h.svc.create_collection_game(game(CollectionMode::SingleTurn));
    let a = h.svc.next_open_turn("alice").unwrap();
    let err = h
        .svc
        .submit_single_turn(&a.assignment_id, Submission::Instruction { text: "x".into() })
        .unwrap_err();
    assert_eq!(collection_err(err), CollectionError::WrongKind("instruction", TurnKind::Ideation));
}

#[test]
fn multi_turn_world_carries_over_and_finish_closes() {
    let h = harness();
    h.svc.create_collection_game(game(CollectionMode::MultiTurn));
    let a = h.svc.next_open_turn("alice").unwrap();
    h.svc
        .submit_single_turn(&a.assignment_id, Submission::Instruction { text: "one blue block".into() })
        .unwrap();
    let b = h.svc.next_open_turn("bob").unwrap();
    let (tape, ending) = place_tape(Coord::new(0, 0, -4));
    h.svc
        .submit_single_turn(
            &b.assignment_id,
            Submission::Execution { tape: Some(tape), ending_state: Some(ending.clone()), ambiguous: false, question: None },
        )
        .unwrap();
    let a2 = h.svc.next_open_turn("alice").unwrap();
    assert_eq!(a2.world, ending);
    h.svc.submit_single_turn(&a2.assignment_id, Submission::Finish).unwrap();
    assert!(h.svc.next_open_turn("dave").is_none());
}
