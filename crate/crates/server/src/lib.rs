//! Game server: matches human architects with builder agents, relays and
//! validates session events, persists logs and records comparisons.

pub mod clock;
pub mod codes;
pub mod collection;
pub mod config;
pub mod http;
pub mod net;
pub mod service;
pub mod session;
pub mod storage;

use std::net::SocketAddr;
use std::sync::Arc;
use std::time::Duration;

use builderkit_core::voxel::{Palette, Rules};
use tokio::net::TcpListener;
use tokio::sync::watch;
use tokio::task::JoinHandle;

pub use clock::{Clock, ManualClock, SystemClock};
pub use collection::{CollectionMode, NewCollectionGame, Submission, TurnAssignment, TurnKind};
pub use config::{ConfigError, ServerConfig};
pub use service::{AdminError, Service, SLOT_LABELS};
pub use session::Task;
pub use storage::{FsStorage, MemoryStorage, Storage, StorageError};

#[derive(Debug, thiserror::Error)]
pub enum ServeError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Storage(#[from] StorageError),
    #[error("palette: {0}")]
    Palette(String),
    #[error("binding {addr}: {source}")]
    Bind {
        addr: String,
        #[source]
        source: std::io::Error,
    },
}

pub struct ServerHandle {
    pub stream_addr: SocketAddr,
    pub http_addr: SocketAddr,
    pub service: Arc<Service>,
    stop: watch::Sender<bool>,
    tasks: Vec<JoinHandle<()>>,
}

impl ServerHandle {
    /// Seals live sessions, stops accepting and waits for the listeners to exit.
    pub async fn shutdown(self) {
        self.service.shutdown();
        let _ = self.stop.send(true);
        for t in self.tasks {
            let _ = t.await;
        }
    }
}

pub fn build_service(config: ServerConfig, clock: Arc<dyn Clock>) -> Result<Arc<Service>, ServeError> {
    config.validate()?;
    let rules = match &config.palette {
        Some(p) => Rules::with_palette(Palette::load(p).map_err(|e| ServeError::Palette(e.to_string()))?),
        None => Rules::default(),
    };
    let storage: Arc<dyn Storage> = match &config.storage_root {
        Some(root) => Arc::new(FsStorage::open(root)?),
        None => Arc::new(MemoryStorage::default()),
    };
    Ok(Arc::new(Service::new(config, rules, clock, storage)))
}

/// Binds both listeners and starts serving on the current tokio runtime.
pub async fn serve(config: ServerConfig) -> Result<ServerHandle, ServeError> {
    let svc = build_service(config, Arc::new(SystemClock))?;
    serve_service(svc).await
}

pub async fn serve_service(svc: Arc<Service>) -> Result<ServerHandle, ServeError> {
    let cfg = svc.config().clone();
    let bind = |addr: String| async move {
        TcpListener::bind(&addr)
            .await
            .map_err(|source| ServeError::Bind { addr, source })
    };
    let stream = bind(cfg.stream_addr.clone()).await?;
    let http = bind(cfg.http_addr.clone()).await?;
    let stream_addr = stream.local_addr().expect("bound");
    let http_addr = http.local_addr().expect("bound");
    let (stop, stop_rx) = watch::channel(false);

    let mut tasks = Vec::new();
    tasks.push(tokio::spawn(net::accept_loop(stream, svc.clone(), stop_rx.clone())));

    let app = http::router(svc.clone());
    let mut http_stop = stop_rx.clone();
    tasks.push(tokio::spawn(async move {
        let shutdown = async move {
            let _ = http_stop.changed().await;
        };
        if let Err(e) = axum::serve(http, app).with_graceful_shutdown(shutdown).await {
            tracing::error!(error = %e, "http server failed");
        }
    }));

    let ticker_svc = svc.clone();
    let mut tick_stop = stop_rx;
    let tick_ms = cfg.tick_ms.max(1);
    tasks.push(tokio::spawn(async move {
        let mut every = tokio::time::interval(Duration::from_millis(tick_ms));
        loop {
            tokio::select! {
                _ = tick_stop.changed() => break,
                _ = every.tick() => ticker_svc.tick(),
            }
        }
    }));

    tracing::info!(%stream_addr, %http_addr, "server listening");
    Ok(ServerHandle {
        stream_addr,
        http_addr,
        service: svc,
        stop,
        tasks,
    })
}
