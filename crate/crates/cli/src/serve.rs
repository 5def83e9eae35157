use std::io::Write;
use std::path::PathBuf;

use builderkit_server::{ServeError, ServerConfig};
use serde_json::json;

use crate::{CmdResult, Ctx, Failure};

async fn terminated() {
    #[cfg(unix)]
    {
        use tokio::signal::unix::{signal, SignalKind};
        match signal(SignalKind::terminate()) {
            Ok(mut term) => {
                tokio::select! {
                    _ = tokio::signal::ctrl_c() => {}
                    _ = term.recv() => {}
                }
            }
            Err(_) => {
                let _ = tokio::signal::ctrl_c().await;
            }
        }
    }
    #[cfg(not(unix))]
    {
        let _ = tokio::signal::ctrl_c().await;
    }
}

pub fn serve(ctx: &Ctx, config_path: Option<PathBuf>) -> CmdResult {
    let _ = tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_env("BUILDERKIT_LOG")
                .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("warn")),
        )
        .try_init();
    let mut config = ServerConfig::load(config_path.as_deref()).map_err(|e| Failure::usage(e.to_string()))?;
    if ctx.seed.is_some() {
        config.seed = ctx.seed;
    }
    let rt = tokio::runtime::Runtime::new().map_err(|e| Failure::usage(format!("runtime: {e}")))?;
    rt.block_on(async {
        let handle = builderkit_server::serve(config)
            .await
            .map_err(|e: ServeError| Failure::usage(e.to_string()))?;
        let (stream, http) = (handle.stream_addr, handle.http_addr);
        if ctx.json {
            println!("{}", json!({"stream": stream.to_string(), "http": http.to_string()}));
        } else {
            println!("builderkit listening on stream {stream}, http {http}");
            println!("  agents     tcp://{stream} (newline-delimited JSON)");
            println!("  admin api  http://{http}/");
            println!("  websocket  ws://{http}/ws");
        }
        let _ = std::io::stdout().flush();

        terminated().await;
        let live = handle.service.stats().map(|s| s.sessions_live).unwrap_or(0);
        eprintln!("shutting down; sealing {live} live sessions");
        handle.shutdown().await;
        eprintln!("stopped");
        Ok(0)
    })
}
