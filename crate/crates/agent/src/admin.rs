//! Blocking client for the server's admin HTTP API.

use builderkit_core::voxel::BlockGrid;
use builderkit_protocol::SessionLog;
use serde::de::DeserializeOwned;
use serde_json::{json, Value};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AdminError {
    #[error("{status} {code}: {detail}")]
    Api { status: u16, code: String, detail: String },
    #[error("http: {0}")]
    Http(#[from] ureq::Error),
}

pub struct AdminClient {
    base: String,
    http: ureq::Agent,
}

impl AdminClient {
    /// `addr` is `host:port` or a full `http://` base URL.
    pub fn new(addr: &str) -> Self {
        let base = if addr.starts_with("http://") || addr.starts_with("https://") {
            addr.trim_end_matches('/').to_string()
        } else {
            format!("http://{addr}")
        };
        let http = ureq::Agent::config_builder().http_status_as_error(false).build().into();
        AdminClient { base, http }
    }

    fn finish<T: DeserializeOwned>(mut r: ureq::http::Response<ureq::Body>) -> Result<T, AdminError> {
        let status = r.status().as_u16();
        if status >= 400 {
            let v: Value = r.body_mut().read_json().unwrap_or(Value::Null);
            return Err(AdminError::Api {
                status,
                code: v["error"].as_str().unwrap_or("unknown").to_string(),
                detail: v["detail"].as_str().unwrap_or_default().to_string(),
            });
        }
        Ok(r.body_mut().read_json()?)
    }

    fn get<T: DeserializeOwned>(&self, path: &str) -> Result<T, AdminError> {
        Self::finish(self.http.get(&format!("{}{path}", self.base)).call()?)
    }

    fn post<T: DeserializeOwned>(&self, path: &str, body: Value) -> Result<T, AdminError> {
        Self::finish(self.http.post(&format!("{}{path}", self.base)).send_json(body)?)
    }

    pub fn health(&self) -> Result<(), AdminError> {
        self.get::<Value>("/health").map(|_| ())
    }

    /// Registers a task and returns its id.
    pub fn create_task(&self, id: Option<&str>, initial: &BlockGrid, target: &BlockGrid) -> Result<String, AdminError> {
        let v: Value = self.post("/tasks", json!({"id": id, "initialGrid": initial, "targetGrid": target}))?;
        Ok(v["id"].as_str().unwrap_or_default().to_string())
    }

    pub fn mint_join_code(&self, agent_id: &str, task_id: &str) -> Result<String, AdminError> {
        let v: Value = self.post("/join-codes", json!({"agentId": agent_id, "taskId": task_id}))?;
        Ok(v["joinCode"].as_str().unwrap_or_default().to_string())
    }

    pub fn agents(&self) -> Result<Value, AdminError> {
        self.get("/agents")
    }

    pub fn log_by_code(&self, completion_code: &str) -> Result<SessionLog, AdminError> {
        self.get(&format!("/logs/{completion_code}"))
    }

    pub fn create_comparison(&self, task_id: &str, agents: [&str; 2]) -> Result<Value, AdminError> {
        self.post("/comparisons", json!({"taskId": task_id, "agents": agents}))
    }

    pub fn comparison(&self, hit_id: &str) -> Result<Value, AdminError> {
        self.get(&format!("/comparisons/{hit_id}"))
    }

    pub fn submit_verdict(&self, hit_id: &str, winner: &str, feedback: Value) -> Result<Value, AdminError> {
        self.post(&format!("/comparisons/{hit_id}/verdict"), json!({"winner": winner, "feedback": feedback}))
    }

    /// Live view of a session: phase, grid and last seq.
    pub fn session(&self, session_id: &str) -> Result<Value, AdminError> {
        self.get(&format!("/sessions/{session_id}"))
    }

    pub fn stats(&self) -> Result<Value, AdminError> {
        self.get("/stats")
    }
}
