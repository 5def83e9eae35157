mod common;

use std::collections::BTreeMap;

use builderkit_core::metrics::Winner;
use builderkit_core::voxel::{BlockId, Coord, Rules};
use builderkit_protocol::{
    encode_line, replay_log, ClientMessage, ErrorCode, EventKind, Proposal, Reporter, Role, ServerMessage,
};
use builderkit_server::{AdminError, ServerConfig};
use common::{harness, harness_with, three_block_target, Client, Harness};

fn error_code(msgs: &[ServerMessage]) -> Option<ErrorCode> {
    msgs.iter().find_map(|m| match m {
        ServerMessage::Error { code, .. } => Some(*code),
        ServerMessage::Rejected { code, .. } => Some(*code),
        _ => None,
    })
}

fn completion(msgs: &[ServerMessage]) -> Option<(String, bool)> {
    msgs.iter().find_map(|m| match m {
        ServerMessage::Completion {
            completion_code,
            success,
            ..
        } => Some((completion_code.clone(), *success)),
        _ => None,
    })
}

fn place(c: Coord, id: u16) -> Proposal {
    Proposal::BlockPlaced {
        coord: c,
        block_id: BlockId::new(id).unwrap(),
    }
}

fn task(h: &Harness) {
    h.svc
        .create_task(Some("t".into()), Default::default(), three_block_target())
        .unwrap();
}

/// Architect instructs, builder places the three target blocks, architect ends with success.
fn play_to_success(h: &Harness, arch: &Client, agent: &Client, sid: &str) {
    h.propose(arch, sid, Proposal::Chat { text: "build it".into() });
    h.propose(arch, sid, Proposal::EndTurn);
    h.propose(agent, sid, place(Coord::new(0, 0, -4), 57));
    h.propose(agent, sid, place(Coord::new(1, 0, -4), 50));
    h.propose(agent, sid, place(Coord::new(0, 1, -4), 59));
    h.propose(agent, sid, Proposal::EndTurn);
    h.propose(arch, sid, Proposal::EndGame { success: true });
}

#[test]
fn full_game_persists_a_replayable_log() {
    let h = harness();
    task(&h);
    let mut agent = h.agent("bot");
    assert!(matches!(agent.drain()[0], ServerMessage::Welcome { .. }));
    let (mut arch, sid) = h.start_game("bot", "t", "human-1");
    let started = agent.drain();
    match &started[0] {
        ServerMessage::SessionStarted { role, task, step_budget, .. } => {
            assert_eq!(*role, Role::Builder);
            assert!(task.target_grid.is_none(), "builders never see the target");
            assert_eq!(*step_budget, 250);
        }
        other => panic!("unexpected {other:?}"),
    }
    play_to_success(&h, &arch, &agent, &sid);
    let msgs = arch.drain();
    assert_eq!(error_code(&msgs), None);
    let (code, success) = completion(&msgs).expect("completion code");
    assert!(success);
    assert_eq!(code.len(), 32);

    let log = h.svc.log_by_code(&code).unwrap().unwrap();
    assert!(log.success);
    assert_eq!(log.builder_steps, 3);
    assert_eq!(log.final_grid, three_block_target());
    let state = replay_log(&log, &Rules::default()).unwrap();
    assert_eq!(state.grid, log.final_grid);
    let row = &h.svc.storage().index().unwrap()[0];
    assert_eq!(row.instructions, vec!["build it".to_string()]);

    // The agent is free again and the session rejects further proposals.
    assert_eq!(h.svc.agents()[0].session_id, None);
    h.propose(&arch, &sid, Proposal::Chat { text: "more".into() });
    assert_eq!(error_code(&arch.drain()), Some(ErrorCode::SessionEnded));
}

#[test]
fn join_code_errors() {
    let h = harness();
    task(&h);
    let _agent = h.agent("bot");
    let code = h.svc.mint_join_code("bot", "t").unwrap();
    let mut a = h.client();
    h.send(&a, ClientMessage::Join { join_code: "nope".into(), human_id: "x".into() });
    assert_eq!(error_code(&a.drain()), Some(ErrorCode::InvalidCode));
    h.send(&a, ClientMessage::Join { join_code: code.clone(), human_id: "x".into() });
    assert_eq!(error_code(&a.drain()), None);
    let mut b = h.client();
    h.send(&b, ClientMessage::Join { join_code: code, human_id: "y".into() });
    assert_eq!(error_code(&b.drain()), Some(ErrorCode::CodeAlreadyUsed));

    // A busy agent leaves a fresh code unused.
    let code2 = h.svc.mint_join_code("bot", "t").unwrap();
    h.send(&b, ClientMessage::Join { join_code: code2.clone(), human_id: "y".into() });
    assert_eq!(error_code(&b.drain()), Some(ErrorCode::AgentUnavailable));

    assert!(matches!(h.svc.mint_join_code("ghost", "t"), Err(AdminError::UnknownAgent(_))));
    assert!(matches!(h.svc.mint_join_code("bot", "zzz"), Err(AdminError::UnknownTask(_))));
}

#[test]
fn duplicate_agent_ids_are_refused_and_reconnect_reattaches() {
    let h = harness();
    task(&h);
    let agent = h.agent("bot");
    let mut twin = h.agent("bot");
    assert_eq!(error_code(&twin.drain()), Some(ErrorCode::DuplicateAgentId));

    let (mut arch, sid) = h.start_game("bot", "t", "human-1");
    h.propose(&arch, &sid, Proposal::EndTurn);
    h.svc.close_conn(agent.conn);
    h.clock.advance_ms(60_000);
    h.svc.tick();
    assert_eq!(h.svc.snapshot(&sid).unwrap().phase, "builderTurn");

    let mut back = h.agent("bot");
    let msgs = back.drain();
    assert!(matches!(msgs[0], ServerMessage::Welcome { .. }));
    assert!(matches!(msgs[1], ServerMessage::SessionStarted { role: Role::Builder, .. }));
    assert_eq!(msgs.iter().filter(|m| matches!(m, ServerMessage::Event(_))).count(), 3);
    h.propose(&back, &sid, place(Coord::new(0, 0, -4), 57));
    assert_eq!(error_code(&back.drain()), None);
    assert!(arch.drain().iter().any(|m| matches!(m, ServerMessage::Event(e) if matches!(e.event, EventKind::BlockPlaced { .. }))));
}

#[test]
fn disconnect_beyond_grace_seals_the_session() {
    let h = harness_with(ServerConfig { lease_minutes: 5, seed: Some(1), ..ServerConfig::default() });
    task(&h);
    let agent = h.agent("bot");
    let (mut arch, sid) = h.start_game("bot", "t", "human-1");
    h.svc.close_conn(agent.conn);
    h.clock.advance_ms(4 * 60_000);
    h.svc.tick();
    assert!(completion(&arch.drain()).is_none());
    h.clock.advance_ms(60_000);
    h.svc.tick();
    let msgs = arch.drain();
    let ended = msgs.iter().any(|m| {
        matches!(m, ServerMessage::Event(e) if e.event == EventKind::GameEnded { success: false, reporter: Reporter::Server })
    });
    assert!(ended);
    assert_eq!(completion(&msgs).map(|c| c.1), Some(false));
    assert_eq!(h.svc.snapshot(&sid).unwrap().success, Some(false));
}

#[test]
fn session_cap_seals_the_session() {
    let h = harness();
    task(&h);
    let _agent = h.agent("bot");
    let (mut arch, sid) = h.start_game("bot", "t", "human-1");
    h.clock.advance_ms(19 * 60_000);
    h.svc.tick();
    assert_eq!(h.svc.snapshot(&sid).unwrap().phase, "architectTurn");
    h.clock.advance_ms(60_000);
    h.svc.tick();
    assert_eq!(h.svc.snapshot(&sid).unwrap().phase, "ended");
    assert!(completion(&arch.drain()).is_some());
}

#[test]
fn step_budget_forces_the_turn_back() {
    let h = harness_with(ServerConfig { step_budget: 2, seed: Some(3), ..ServerConfig::default() });
    task(&h);
    let mut agent = h.agent("bot");
    let (arch, sid) = h.start_game("bot", "t", "human-1");
    h.propose(&arch, &sid, Proposal::EndTurn);
    h.propose(&agent, &sid, place(Coord::new(0, 0, -4), 57));
    h.propose(&agent, &sid, place(Coord::new(1, 0, -4), 50));
    h.propose(&agent, &sid, place(Coord::new(0, 1, -4), 59));
    let msgs = agent.drain();
    assert!(msgs.iter().any(|m| matches!(m, ServerMessage::Event(e) if e.event == EventKind::TurnEnded { role: Role::Builder, forced: true })));
    assert_eq!(error_code(&msgs), Some(ErrorCode::WrongPhase));
    assert_eq!(h.svc.snapshot(&sid).unwrap().builder_steps, 2);
}

#[test]
fn rule_violations_are_rejected_with_the_client_ref() {
    let h = harness();
    task(&h);
    let mut agent = h.agent("bot");
    let (arch, sid) = h.start_game("bot", "t", "human-1");
    h.propose(&arch, &sid, Proposal::EndTurn);
    agent.drain();
    h.send(
        &agent,
        ClientMessage::Propose {
            session_id: sid.clone(),
            proposal: place(Coord::new(4, 0, 4), 57),
            client_ref: Some(9),
        },
    );
    match &agent.drain()[..] {
        [ServerMessage::Rejected { client_ref, code, .. }] => {
            assert_eq!(*client_ref, Some(9));
            assert_eq!(*code, ErrorCode::RuleViolation);
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn comparison_is_blinded_and_records_an_outcome() {
    let h = harness();
    task(&h);
    let agent_x = h.agent("agent-x");
    let agent_y = h.agent("agent-y");
    let created = h.svc.create_comparison("t", "agent-x", "agent-y").unwrap();
    let slot1 = created.assignment["Agent 1"].clone();
    assert_ne!(slot1, created.assignment["Agent 2"]);
    let view = h.svc.comparison(&created.view.hit_id).unwrap();
    let view_json = serde_json::to_string(&view).unwrap();
    assert!(!view_json.contains("agent-x") && !view_json.contains("agent-y"));

    let mut wire = Vec::new();
    for game in &view.games {
        let mut arch = h.client();
        h.send(&arch, ClientMessage::Join { join_code: game.join_code.clone(), human_id: "p1".into() });
        let msgs = arch.drain();
        let sid = msgs
            .iter()
            .find_map(|m| match m {
                ServerMessage::SessionStarted { session_id, .. } => Some(session_id.clone()),
                _ => None,
            })
            .unwrap();
        assert!(matches!(
            h.svc.submit_verdict(&view.hit_id, "Agent 1", BTreeMap::new()),
            Err(AdminError::GamesNotFinished)
        ));
        let builder = if h.svc.agents().iter().any(|a| a.agent_id == "agent-x" && a.session_id.as_deref() == Some(&sid)) {
            &agent_x
        } else {
            &agent_y
        };
        play_to_success(&h, &arch, builder, &sid);
        wire.extend(msgs);
        wire.extend(arch.drain());
    }
    for m in &wire {
        let line = encode_line(m);
        assert!(!line.contains("agent-x") && !line.contains("agent-y"), "leak: {line}");
    }
    assert!(matches!(
        h.svc.submit_verdict(&view.hit_id, "agent-x", BTreeMap::new()),
        Err(AdminError::BadVerdict)
    ));
    let outcome = h.svc.submit_verdict(&view.hit_id, "Agent 1", BTreeMap::new()).unwrap();
    assert_eq!(outcome.winner, Winner::AgentA);
    assert_eq!(outcome.winner_id(), slot1);
    assert!(matches!(
        h.svc.submit_verdict(&view.hit_id, "Agent 2", BTreeMap::new()),
        Err(AdminError::AlreadyDecided)
    ));
    assert_eq!(h.svc.outcomes().unwrap(), vec![outcome]);
    let index = h.svc.storage().index().unwrap();
    assert!(index.iter().all(|r| r.hit_id.as_deref() == Some(view.hit_id.as_str())));
}

#[test]
fn shutdown_seals_live_sessions() {
    let h = harness();
    task(&h);
    let _agent = h.agent("bot");
    let (mut arch, _sid) = h.start_game("bot", "t", "human-1");
    h.svc.shutdown();
    assert_eq!(completion(&arch.drain()).map(|c| c.1), Some(false));
    assert_eq!(h.svc.storage().index().unwrap().len(), 1);
}

#[test]
fn architect_can_resume() {
    let h = harness();
    task(&h);
    let _agent = h.agent("bot");
    let (arch, sid) = h.start_game("bot", "t", "human-1");
    h.propose(&arch, &sid, Proposal::Chat { text: "hello".into() });
    h.svc.close_conn(arch.conn);
    let mut again = h.client();
    h.send(&again, ClientMessage::Resume { session_id: sid.clone(), human_id: "intruder".into() });
    assert_eq!(error_code(&again.drain()), Some(ErrorCode::NotParticipant));
    h.send(&again, ClientMessage::Resume { session_id: sid.clone(), human_id: "human-1".into() });
    let msgs = again.drain();
    assert!(matches!(&msgs[0], ServerMessage::SessionStarted { role: Role::Architect, task, .. } if task.target_grid.is_some()));
    assert_eq!(msgs.len(), 4);
    h.propose(&again, &sid, Proposal::EndTurn);
    assert_eq!(error_code(&again.drain()), None);
}

#[test]
fn task_validation() {
    let h = harness();
    assert!(matches!(
        h.svc.create_task(None, Default::default(), Default::default()),
        Err(AdminError::InvalidTask(_))
    ));
    let t = h.svc.create_task(None, Default::default(), three_block_target()).unwrap();
    assert_eq!(t.id, "task-1");
    assert!(matches!(
        h.svc.create_task(Some("task-1".into()), Default::default(), three_block_target()),
        Err(AdminError::DuplicateTask(_))
    ));
}

#[test]
fn ping_pong_and_bad_hello() {
    let h = harness();
    let mut c = h.agent("bot");
    c.drain();
    h.send(&c, ClientMessage::Ping);
    assert_eq!(c.drain(), vec![ServerMessage::Pong]);
    h.send(&c, ClientMessage::Hello { agent_id: "other".into() });
    assert_eq!(error_code(&c.drain()), Some(ErrorCode::BadMessage));
}
