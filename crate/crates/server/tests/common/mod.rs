#![allow(dead_code)]

use std::sync::Arc;

use builderkit_core::voxel::{BlockGrid, Coord};
use builderkit_protocol::{ClientMessage, Proposal, ServerMessage};
use builderkit_server::service::ConnId;
use builderkit_server::{build_service, ManualClock, ServerConfig, Service};
use tokio::sync::mpsc::{unbounded_channel, UnboundedReceiver};

pub struct Harness {
    pub svc: Arc<Service>,
    pub clock: Arc<ManualClock>,
}

pub struct Client {
    pub conn: ConnId,
    pub rx: UnboundedReceiver<ServerMessage>,
}

impl Client {
    pub fn drain(&mut self) -> Vec<ServerMessage> {
        let mut out = Vec::new();
        while let Ok(m) = self.rx.try_recv() {
            out.push(m);
        }
        out
    }
}

pub fn harness() -> Harness {
    harness_with(ServerConfig {
        seed: Some(7),
        ..ServerConfig::default()
    })
}

pub fn harness_with(config: ServerConfig) -> Harness {
    let clock = Arc::new(ManualClock::new(1_000_000));
    let svc = build_service(config, clock.clone()).expect("service");
    Harness { svc, clock }
}

impl Harness {
    pub fn client(&self) -> Client {
        let (tx, rx) = unbounded_channel();
        Client {
            conn: self.svc.open_conn(tx),
            rx,
        }
    }

    pub fn send(&self, c: &Client, msg: ClientMessage) {
        self.svc.handle(c.conn, msg);
    }

    pub fn agent(&self, id: &str) -> Client {
        let c = self.client();
        self.send(&c, ClientMessage::Hello { agent_id: id.into() });
        c
    }

    /// Registers the task, mints a code and joins; returns (architect, session id).
    pub fn start_game(&self, agent_id: &str, task_id: &str, human: &str) -> (Client, String) {
        let code = self.svc.mint_join_code(agent_id, task_id).expect("mint");
        let mut arch = self.client();
        self.send(
            &arch,
            ClientMessage::Join {
                join_code: code,
                human_id: human.into(),
            },
        );
        let sid = arch
            .drain()
            .into_iter()
            .find_map(|m| match m {
                ServerMessage::SessionStarted { session_id, .. } => Some(session_id),
                _ => None,
            })
            .expect("session started");
        (arch, sid)
    }

    pub fn propose(&self, c: &Client, sid: &str, p: Proposal) {
        self.send(
            c,
            ClientMessage::Propose {
                session_id: sid.into(),
                proposal: p,
                client_ref: None,
            },
        );
    }
}

pub fn three_block_target() -> BlockGrid {
    BlockGrid::from_cells([
        (Coord::new(0, 0, -4), 57),
        (Coord::new(1, 0, -4), 50),
        (Coord::new(0, 1, -4), 59),
    ])
    .unwrap()
}
