//! Admin HTTP API, the browser WebSocket stream and optional static assets.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Duration;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use builderkit_core::voxel::BlockGrid;
use builderkit_protocol::{decode_line, encode_line, ClientMessage, ErrorCode, ServerMessage, HEARTBEAT_SECS};
use serde::Deserialize;
use serde_json::json;
use tokio::sync::mpsc;
use tower_http::services::ServeDir;

use crate::collection::{CollectionError, NewCollectionGame, Submission};
use crate::service::{AdminError, Service};

type Svc = State<Arc<Service>>;

pub fn router(svc: Arc<Service>) -> Router {
    let static_dir = svc.config().static_dir.clone();
    let app = Router::new()
        .route("/health", get(|| async { Json(json!({"status": "ok"})) }))
        .route("/tasks", get(list_tasks).post(create_task))
        .route("/tasks/{id}", get(get_task))
        .route("/agents", get(list_agents))
        .route("/join-codes", post(mint_code))
        .route("/comparisons", post(create_comparison))
        .route("/comparisons/{hit}", get(get_comparison))
        .route("/comparisons/{hit}/verdict", post(post_verdict))
        .route("/sessions/{id}", get(get_session))
        .route("/logs/{code}", get(get_log))
        .route("/outcomes", get(list_outcomes))
        .route("/stats", get(stats))
        .route("/collection/games", post(create_collection_game))
        .route("/collection/next", post(next_turn))
        .route("/collection/submit", post(submit_turn))
        .route("/collection/records", get(list_records))
        .route("/ws", get(ws_upgrade));
    let app = match static_dir {
        Some(dir) => app.fallback_service(ServeDir::new(dir)),
        None => app,
    };
    app.with_state(svc)
}

pub struct ApiError(StatusCode, &'static str, String);

impl ApiError {
    fn not_found(what: impl Into<String>) -> Self {
        ApiError(StatusCode::NOT_FOUND, "notFound", what.into())
    }
}

impl From<AdminError> for ApiError {
    fn from(e: AdminError) -> Self {
        let (status, code) = match &e {
            AdminError::UnknownAgent(_) => (StatusCode::NOT_FOUND, "unknownAgent"),
            AdminError::UnknownTask(_) => (StatusCode::NOT_FOUND, "unknownTask"),
            AdminError::NotFound(_) => (StatusCode::NOT_FOUND, "notFound"),
            AdminError::DuplicateTask(_) => (StatusCode::CONFLICT, "duplicateTask"),
            AdminError::InvalidTask(_) => (StatusCode::BAD_REQUEST, "invalidTask"),
            AdminError::SameAgent => (StatusCode::BAD_REQUEST, "sameAgent"),
            AdminError::GamesNotFinished => (StatusCode::CONFLICT, "gamesNotFinished"),
            AdminError::AlreadyDecided => (StatusCode::CONFLICT, "alreadyDecided"),
            AdminError::BadVerdict => (StatusCode::BAD_REQUEST, "badVerdict"),
            AdminError::Collection(c) => match c {
                CollectionError::UnknownAssignment(_) => (StatusCode::NOT_FOUND, "unknownAssignment"),
                CollectionError::LeaseExpired => (StatusCode::GONE, "leaseExpired"),
                CollectionError::MissingQuestion => (StatusCode::UNPROCESSABLE_ENTITY, "missingQuestion"),
                CollectionError::WrongKind(..) => (StatusCode::UNPROCESSABLE_ENTITY, "wrongKind"),
                CollectionError::Validation(_) => (StatusCode::UNPROCESSABLE_ENTITY, "validationError"),
            },
            AdminError::Storage(_) => (StatusCode::INTERNAL_SERVER_ERROR, "storage"),
        };
        ApiError(status, code, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(json!({"error": self.1, "detail": self.2}))).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct CreateTask {
    #[serde(default)]
    id: Option<String>,
    #[serde(default)]
    initial_grid: BlockGrid,
    target_grid: BlockGrid,
}

async fn create_task(State(svc): Svc, Json(body): Json<CreateTask>) -> Result<impl IntoResponse, ApiError> {
    let task = svc.create_task(body.id, body.initial_grid, body.target_grid)?;
    Ok((StatusCode::CREATED, Json(task)))
}

async fn list_tasks(State(svc): Svc) -> impl IntoResponse {
    Json(svc.tasks())
}

async fn get_task(State(svc): Svc, Path(id): Path<String>) -> Result<impl IntoResponse, ApiError> {
    svc.task(&id).map(Json).ok_or_else(|| ApiError::not_found(id))
}

async fn list_agents(State(svc): Svc) -> impl IntoResponse {
    Json(svc.agents())
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct MintCode {
    agent_id: String,
    task_id: String,
}

async fn mint_code(State(svc): Svc, Json(body): Json<MintCode>) -> Result<impl IntoResponse, ApiError> {
    let code = svc.mint_join_code(&body.agent_id, &body.task_id)?;
    Ok((StatusCode::CREATED, Json(json!({"joinCode": code}))))
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct CreateComparison {
    task_id: String,
    agents: [String; 2],
}

async fn create_comparison(State(svc): Svc, Json(body): Json<CreateComparison>) -> Result<impl IntoResponse, ApiError> {
    let created = svc.create_comparison(&body.task_id, &body.agents[0], &body.agents[1])?;
    Ok((StatusCode::CREATED, Json(created)))
}

async fn get_comparison(State(svc): Svc, Path(hit): Path<String>) -> Result<impl IntoResponse, ApiError> {
    svc.comparison(&hit).map(Json).ok_or_else(|| ApiError::not_found(hit))
}

#[derive(Deserialize)]
struct Verdict {
    winner: String,
    #[serde(default)]
    feedback: BTreeMap<String, String>,
}

async fn post_verdict(State(svc): Svc, Path(hit): Path<String>, Json(body): Json<Verdict>) -> Result<impl IntoResponse, ApiError> {
    svc.submit_verdict(&hit, &body.winner, body.feedback)?;
    Ok(Json(json!({"recorded": true})))
}

async fn get_session(State(svc): Svc, Path(id): Path<String>) -> Result<impl IntoResponse, ApiError> {
    svc.snapshot(&id).map(Json).ok_or_else(|| ApiError::not_found(id))
}

async fn get_log(State(svc): Svc, Path(code): Path<String>) -> Result<impl IntoResponse, ApiError> {
    svc.log_by_code(&code)?.map(Json).ok_or_else(|| ApiError::not_found(code))
}

async fn list_outcomes(State(svc): Svc) -> ApiResult<Vec<builderkit_core::metrics::GameOutcome>> {
    Ok(Json(svc.outcomes()?))
}

async fn stats(State(svc): Svc) -> ApiResult<crate::service::ServiceStats> {
    Ok(Json(svc.stats()?))
}

async fn create_collection_game(State(svc): Svc, Json(body): Json<NewCollectionGame>) -> impl IntoResponse {
    let id = svc.create_collection_game(body);
    (StatusCode::CREATED, Json(json!({"gameId": id})))
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct NextTurn {
    annotator_id: String,
}

async fn next_turn(State(svc): Svc, Json(body): Json<NextTurn>) -> Response {
    match svc.next_open_turn(&body.annotator_id) {
        Some(a) => Json(a).into_response(),
        None => StatusCode::NO_CONTENT.into_response(),
    }
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct SubmitTurn {
    assignment_id: String,
    submission: Submission,
}

async fn submit_turn(State(svc): Svc, Json(body): Json<SubmitTurn>) -> Result<impl IntoResponse, ApiError> {
    let ids = svc.submit_single_turn(&body.assignment_id, body.submission)?;
    Ok(Json(json!({"recordIds": ids})))
}

async fn list_records(State(svc): Svc) -> ApiResult<Vec<serde_json::Value>> {
    Ok(Json(svc.records()?.iter().map(|r| r.to_json()).collect()))
}

async fn ws_upgrade(State(svc): Svc, ws: WebSocketUpgrade) -> Response {
    ws.on_upgrade(move |socket| ws_session(socket, svc))
}

enum Step {
    Out(ServerMessage),
    In(Option<Result<Message, axum::Error>>),
    Beat,
}

/// One JSON message per text frame, same schema as the stream endpoint.
async fn ws_session(mut socket: WebSocket, svc: Arc<Service>) {
    let (tx, mut rx) = mpsc::unbounded_channel::<ServerMessage>();
    let conn = svc.open_conn(tx.clone());
    let mut beat = tokio::time::interval(Duration::from_secs(HEARTBEAT_SECS));
    beat.tick().await;
    loop {
        let step = tokio::select! {
            m = rx.recv() => match m {
                Some(m) => Step::Out(m),
                None => break,
            },
            m = socket.recv() => Step::In(m),
            _ = beat.tick() => Step::Beat,
        };
        let out = match step {
            Step::Out(m) => m,
            Step::Beat => ServerMessage::Heartbeat,
            Step::In(None) | Step::In(Some(Err(_))) | Step::In(Some(Ok(Message::Close(_)))) => break,
            Step::In(Some(Ok(Message::Text(text)))) => {
                match decode_line::<ClientMessage>(text.as_str()) {
                    Ok(msg) => svc.handle(conn, msg),
                    Err(e) => {
                        let _ = tx.send(ServerMessage::Error {
                            code: ErrorCode::BadMessage,
                            detail: e.to_string(),
                        });
                    }
                }
                continue;
            }
            Step::In(Some(Ok(_))) => continue,
        };
        if socket.send(Message::Text(encode_line(&out).trim_end().into())).await.is_err() {
            break;
        }
    }
    svc.close_conn(conn);
    while let Ok(m) = rx.try_recv() {
        if socket.send(Message::Text(encode_line(&m).trim_end().into())).await.is_err() {
            break;
        }
    }
}
