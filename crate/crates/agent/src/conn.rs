use std::io::{self, BufRead, BufReader, Write};
use std::net::TcpStream;
use std::time::Duration;

use builderkit_protocol::{decode_line, encode_line, ClientMessage, ErrorCode, ServerMessage};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("connection refused by {0}")]
    ConnectionRefused(String),
    #[error("agent id {0:?} is already connected")]
    DuplicateAgentId(String),
    #[error("server error {code}: {detail}")]
    Server { code: ErrorCode, detail: String },
    #[error("unexpected message: {0}")]
    Protocol(String),
    #[error("connection closed")]
    Closed,
    #[error("timed out waiting for the server")]
    Timeout,
    #[error("local world diverged from the server: {0}")]
    Desync(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Line-oriented connection to a server stream endpoint.
pub struct Connection {
    write: TcpStream,
    read: BufReader<TcpStream>,
    endpoint: String,
}

impl Connection {
    pub fn open(endpoint: &str) -> Result<Self, AgentError> {
        let stream = TcpStream::connect(endpoint).map_err(|e| match e.kind() {
            io::ErrorKind::ConnectionRefused => AgentError::ConnectionRefused(endpoint.to_string()),
            _ => AgentError::Io(e),
        })?;
        stream.set_nodelay(true)?;
        Ok(Connection {
            write: stream.try_clone()?,
            read: BufReader::new(stream),
            endpoint: endpoint.to_string(),
        })
    }

    /// Opens a connection and registers as builder agent `agent_id`.
    pub fn connect(endpoint: &str, agent_id: &str) -> Result<Self, AgentError> {
        let mut conn = Self::open(endpoint)?;
        conn.send(&ClientMessage::Hello {
            agent_id: agent_id.to_string(),
        })?;
        match conn.recv()? {
            ServerMessage::Welcome { .. } => Ok(conn),
            ServerMessage::Error {
                code: ErrorCode::DuplicateAgentId,
                ..
            } => Err(AgentError::DuplicateAgentId(agent_id.to_string())),
            ServerMessage::Error { code, detail } => Err(AgentError::Server { code, detail }),
            other => Err(AgentError::Protocol(format!("{other:?}"))),
        }
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    pub fn set_read_timeout(&self, timeout: Option<Duration>) -> Result<(), AgentError> {
        self.read.get_ref().set_read_timeout(timeout)?;
        Ok(())
    }

    pub fn send(&mut self, msg: &ClientMessage) -> Result<(), AgentError> {
        self.write.write_all(encode_line(msg).as_bytes())?;
        Ok(())
    }

    /// Next non-heartbeat message.
    pub fn recv(&mut self) -> Result<ServerMessage, AgentError> {
        let mut line = String::new();
        loop {
            line.clear();
            match self.read.read_line(&mut line) {
                Ok(0) => return Err(AgentError::Closed),
                Ok(_) => {}
                Err(e) if matches!(e.kind(), io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut) => {
                    return Err(AgentError::Timeout)
                }
                Err(e) => return Err(e.into()),
            }
            if line.trim().is_empty() {
                continue;
            }
            let msg: ServerMessage = decode_line(&line).map_err(|e| AgentError::Protocol(e.to_string()))?;
            if msg != ServerMessage::Heartbeat {
                return Ok(msg);
            }
        }
    }

    pub fn close(self) {
        let _ = self.write.shutdown(std::net::Shutdown::Both);
    }
}
