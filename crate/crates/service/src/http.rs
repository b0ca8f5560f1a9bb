//! JSON over HTTP.

use std::sync::Arc;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use axum::body::Bytes;
use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, Query, State};
use axum::http::HeaderMap;
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tower_http::services::ServeDir;

use crate::config::{AdaptationMode, ContextSource};
use crate::engine::{ContextStats, CycleReport, Engine, EngineStats, Network, Related, Result, Session, Turn};
use crate::error::ServiceError;
use crate::snapshot::write_snapshot;

/// Header that sets the event time in epoch seconds, for scripted clients.
pub const EVENT_TIME_HEADER: &str = "x-event-time";

type Shared = State<Arc<Engine>>;

fn event_time(headers: &HeaderMap) -> Result<i64> {
    match headers.get(EVENT_TIME_HEADER) {
        Some(v) => v
            .to_str()
            .ok()
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| ServiceError::BadRequest(format!("bad {EVENT_TIME_HEADER} header"))),
        None => Ok(SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs() as i64)
            .unwrap_or(0)),
    }
}

fn body<T>(payload: std::result::Result<Json<T>, JsonRejection>) -> Result<T> {
    payload
        .map(|Json(v)| v)
        .map_err(|e| ServiceError::BadRequest(e.body_text()))
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T> + Send + 'static) -> Result<T> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ServiceError::Conflict(format!("worker failed: {e}")))?
}

#[derive(Debug, Default, Deserialize)]
struct NewSession {
    user_id: Option<String>,
    auto_answer_level: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SessionCreated {
    pub session_id: String,
}

async fn create_session(State(engine): Shared, headers: HeaderMap, raw: Bytes) -> Result<Json<SessionCreated>> {
    let time = event_time(&headers)?;
    let req: NewSession = if raw.iter().all(u8::is_ascii_whitespace) {
        NewSession::default()
    } else {
        serde_json::from_slice(&raw).map_err(|e| ServiceError::BadRequest(e.to_string()))?
    };
    let session_id = engine.create_session(req.user_id, req.auto_answer_level, time)?;
    Ok(Json(SessionCreated { session_id }))
}

async fn get_session(State(engine): Shared, Path(id): Path<String>) -> Result<Json<Session>> {
    Ok(Json(engine.session(&id)?))
}

#[derive(Debug, Deserialize)]
struct QueryBody {
    keywords: Vec<String>,
}

async fn query(
    State(engine): Shared,
    Path(id): Path<String>,
    headers: HeaderMap,
    payload: std::result::Result<Json<QueryBody>, JsonRejection>,
) -> Result<Json<Turn>> {
    let time = event_time(&headers)?;
    let req = body(payload)?;
    let turn = if engine.config().adaptation_mode == AdaptationMode::PerCategory {
        blocking(move || engine.query(&id, req.keywords, time)).await?
    } else {
        engine.query(&id, req.keywords, time)?
    };
    Ok(Json(turn))
}

#[derive(Debug, Deserialize)]
struct AnswerBody {
    keyword: String,
    relevant: bool,
}

async fn answer(
    State(engine): Shared,
    Path(id): Path<String>,
    headers: HeaderMap,
    payload: std::result::Result<Json<AnswerBody>, JsonRejection>,
) -> Result<Json<Turn>> {
    let time = event_time(&headers)?;
    let req = body(payload)?;
    let turn = if engine.config().adaptation_mode == AdaptationMode::PerCategory {
        blocking(move || engine.answer(&id, &req.keyword, req.relevant, time)).await?
    } else {
        engine.answer(&id, &req.keyword, req.relevant, time)?
    };
    Ok(Json(turn))
}

#[derive(Debug, Deserialize)]
struct CountParam {
    n: Option<usize>,
}

async fn recommendations(
    State(engine): Shared,
    Path(id): Path<String>,
    Query(q): Query<CountParam>,
) -> Result<Json<Value>> {
    let n = q.n.unwrap_or(engine.config().recommendations_n);
    let recs = engine.recommendations(&id, n)?;
    Ok(Json(json!({ "recommendations": recs })))
}

#[derive(Debug, Deserialize)]
struct ClickBody {
    document_id: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RelatedList {
    pub related: Vec<Related>,
}

async fn click(
    State(engine): Shared,
    Path(id): Path<String>,
    headers: HeaderMap,
    payload: std::result::Result<Json<ClickBody>, JsonRejection>,
) -> Result<Json<RelatedList>> {
    let time = event_time(&headers)?;
    let req = body(payload)?;
    let related = blocking(move || engine.click(&id, &req.document_id, time)).await?;
    Ok(Json(RelatedList { related }))
}

#[derive(Debug, Deserialize)]
struct RelatedParams {
    network: Option<String>,
    n: Option<usize>,
}

async fn related(
    State(engine): Shared,
    Path(id): Path<String>,
    Query(q): Query<RelatedParams>,
) -> Result<Json<RelatedList>> {
    let network: Network = q.network.as_deref().unwrap_or("composite").parse()?;
    let n = q.n.unwrap_or(engine.config().related_n);
    let related = blocking(move || engine.related(&id, network, n)).await?;
    Ok(Json(RelatedList { related }))
}

#[derive(Debug, Deserialize)]
struct NewContext {
    record_file: std::path::PathBuf,
    id: Option<String>,
    min_keyword_frequency: Option<usize>,
    stem: Option<bool>,
}

async fn add_context(
    State(engine): Shared,
    payload: std::result::Result<Json<NewContext>, JsonRejection>,
) -> Result<Json<ContextStats>> {
    let req = body(payload)?;
    let id = match req.id {
        Some(id) => id,
        None => req
            .record_file
            .file_stem()
            .and_then(|s| s.to_str())
            .map(str::to_string)
            .ok_or_else(|| ServiceError::BadRequest("cannot derive a context id from record_file".into()))?,
    };
    let defaults = adaptrec_core::IngestOptions::default();
    let source = ContextSource {
        id,
        records: req.record_file,
        min_keyword_frequency: req.min_keyword_frequency.unwrap_or(defaults.min_keyword_frequency),
        stem: req.stem.unwrap_or(defaults.stem),
    };
    Ok(Json(blocking(move || engine.add_context(source)).await?))
}

async fn list_contexts(State(engine): Shared) -> Result<Json<Vec<ContextStats>>> {
    let k = engine.knowledge();
    Ok(Json(k.contexts.values().map(|c| c.stats(k.generation)).collect()))
}

async fn context_stats(State(engine): Shared, Path(id): Path<String>) -> Result<Json<ContextStats>> {
    Ok(Json(engine.context_stats(&id)?))
}

#[derive(Debug, Deserialize)]
struct ProximityParams {
    network: Option<String>,
    a: Option<String>,
    b: Option<String>,
}

/// One pair when `a` and `b` are given, otherwise every stored entry
/// (upper triangle for symmetric networks).
async fn proximity(
    State(engine): Shared,
    Path(id): Path<String>,
    Query(q): Query<ProximityParams>,
) -> Result<Json<Value>> {
    let k = engine.knowledge();
    let cs = k.context(&id)?;
    let ctx = cs.context();
    let network = q.network.as_deref().unwrap_or("ksp");
    let rsp;
    let (matrix, names) = match network {
        "ksp" | "keyword_semantic" => (cs.adaptive.working(), ctx.keywords()),
        "rsp" | "record_semantic" => {
            rsp = cs.record_semantic.clone();
            (&*rsp, ctx.records())
        }
        other => (cs.network(other.parse()?), ctx.documents()),
    };
    match (q.a, q.b) {
        (Some(a), Some(b)) => {
            let value = match (names.get(&a), names.get(&b)) {
                (Some(i), Some(j)) => Some(matrix.get(i, j)),
                _ => None,
            };
            Ok(Json(json!({ "network": network, "a": a, "b": b, "value": value })))
        }
        (None, None) => {
            let entries: Vec<Value> = matrix
                .entries()
                .filter(|&(i, j, _)| !(matrix.is_symmetric() && i == j))
                .map(|(i, j, v)| json!({ "a": names.name(i), "b": names.name(j), "value": v }))
                .collect();
            Ok(Json(json!({ "network": network, "entries": entries })))
        }
        _ => Err(ServiceError::BadRequest("give both `a` and `b` or neither".into())),
    }
}

async fn adapt_now(State(engine): Shared) -> Result<Json<CycleReport>> {
    Ok(Json(blocking(move || engine.run_adaptation_cycle()).await?))
}

async fn stats(State(engine): Shared) -> Result<Json<EngineStats>> {
    Ok(Json(engine.stats()?))
}

pub fn router(engine: Arc<Engine>) -> Router {
    let ui = engine.config().ui_dir.clone();
    let api = Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/query", post(query))
        .route("/sessions/{id}/answer", post(answer))
        .route("/sessions/{id}/recommendations", get(recommendations))
        .route("/sessions/{id}/click", post(click))
        .route("/documents/{id}/related", get(related))
        .route("/admin/contexts", post(add_context).get(list_contexts))
        .route("/admin/contexts/{id}/stats", get(context_stats))
        .route("/admin/contexts/{id}/proximity", get(proximity))
        .route("/admin/adapt-now", post(adapt_now))
        .route("/admin/stats", get(stats))
        .with_state(engine);
    match ui {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let term = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending::<()>().await,
        }
    };
    #[cfg(not(unix))]
    let term = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {}
        _ = term => {}
    }
}

/// Serves until interrupted, running batched cycles on the configured
/// period, then snapshots into `state_dir` if one is set.
pub async fn serve(engine: Arc<Engine>, listen: &str) -> anyhow::Result<()> {
    let config = engine.config().clone();
    if engine.knowledge().contexts.is_empty() {
        anyhow::bail!("no knowledge context configured");
    }
    let listener = tokio::net::TcpListener::bind(listen).await?;
    tracing::info!(addr = %listener.local_addr()?, "listening");

    let ticker = if config.adaptation_mode == AdaptationMode::Batched && config.adaptation_period_secs > 0 {
        let engine = engine.clone();
        Some(tokio::spawn(async move {
            let mut every = tokio::time::interval(Duration::from_secs(config.adaptation_period_secs));
            every.tick().await;
            loop {
                every.tick().await;
                let e = engine.clone();
                match tokio::task::spawn_blocking(move || e.run_adaptation_cycle()).await {
                    Ok(Ok(r)) => tracing::info!(
                        generation = r.generation,
                        categories = r.categories,
                        paths = r.paths,
                        "adaptation cycle"
                    ),
                    Ok(Err(e)) => tracing::error!(error = %e, "adaptation cycle failed"),
                    Err(e) => tracing::error!(error = %e, "adaptation worker panicked"),
                }
            }
        }))
    } else {
        None
    };

    axum::serve(listener, router(engine.clone()))
        .with_graceful_shutdown(shutdown_signal())
        .await?;
    if let Some(t) = ticker {
        t.abort();
    }
    if let Some(dir) = &config.state_dir {
        write_snapshot(&engine, dir)?;
        tracing::info!(dir = %dir.display(), "state saved");
    }
    Ok(())
}
