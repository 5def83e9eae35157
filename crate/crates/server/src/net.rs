//! NDJSON-over-TCP front end for toolkit agents and scripted clients.

use std::sync::Arc;
use std::time::Duration;

use builderkit_protocol::{decode_line, encode_line, ClientMessage, ErrorCode, ServerMessage, HEARTBEAT_SECS};
use tokio::io::{AsyncBufReadExt, AsyncReadExt, AsyncWriteExt, BufReader};
use tokio::net::{TcpListener, TcpStream};
use tokio::sync::{mpsc, oneshot, watch};

use crate::service::Service;

/// Longest accepted request line, in bytes.
pub const MAX_LINE: usize = 1 << 20;

pub async fn accept_loop(listener: TcpListener, svc: Arc<Service>, mut stop: watch::Receiver<bool>) {
    loop {
        tokio::select! {
            _ = stop.changed() => break,
            accepted = listener.accept() => match accepted {
                Ok((stream, peer)) => {
                    tracing::debug!(%peer, "stream connection");
                    tokio::spawn(connection(stream, svc.clone(), stop.clone()));
                }
                Err(e) => tracing::warn!(error = %e, "accept failed"),
            },
        }
    }
}

async fn connection(stream: TcpStream, svc: Arc<Service>, mut stop: watch::Receiver<bool>) {
    let _ = stream.set_nodelay(true);
    let (read, mut write) = stream.into_split();
    let (tx, mut rx) = mpsc::unbounded_channel::<ServerMessage>();
    let conn = svc.open_conn(tx.clone());
    let (closing_tx, mut closing) = oneshot::channel::<()>();

    let writer = tokio::spawn(async move {
        let mut beat = tokio::time::interval(Duration::from_secs(HEARTBEAT_SECS));
        beat.tick().await;
        loop {
            let msg = tokio::select! {
                m = rx.recv() => match m {
                    Some(m) => m,
                    None => break,
                },
                _ = beat.tick() => ServerMessage::Heartbeat,
                _ = &mut closing => {
                    while let Ok(m) = rx.try_recv() {
                        if write.write_all(encode_line(&m).as_bytes()).await.is_err() {
                            break;
                        }
                    }
                    break;
                }
            };
            if write.write_all(encode_line(&msg).as_bytes()).await.is_err() {
                break;
            }
        }
        let _ = write.shutdown().await;
    });

    let mut reader = BufReader::new(read).take(MAX_LINE as u64);
    let mut line = String::new();
    loop {
        line.clear();
        reader.set_limit(MAX_LINE as u64);
        let n = tokio::select! {
            _ = stop.changed() => break,
            n = reader.read_line(&mut line) => n,
        };
        match n {
            Ok(0) | Err(_) => break,
            Ok(_) if !line.ends_with('\n') && line.len() >= MAX_LINE => {
                let _ = tx.send(ServerMessage::Error {
                    code: ErrorCode::BadMessage,
                    detail: "line too long".into(),
                });
                break;
            }
            Ok(_) => {}
        }
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        match decode_line::<ClientMessage>(text) {
            Ok(msg) => svc.handle(conn, msg),
            Err(e) => {
                let _ = tx.send(ServerMessage::Error {
                    code: ErrorCode::BadMessage,
                    detail: e.to_string(),
                });
            }
        }
    }
    svc.close_conn(conn);
    drop(tx);
    let _ = closing_tx.send(());
    let _ = writer.await;
}
