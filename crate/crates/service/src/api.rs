//! JSON-over-HTTP API.
//!
//! Callers authenticate with `Authorization: Bearer <token>`. Mutating
//! endpoints honour an `Idempotency-Key` header: a retry with the same key
//! from the same worker gets the first response back unchanged. Locks are
//! always taken in the order idempotency, iteration, store, leases.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, MutexGuard};
use std::time::{Duration, Instant};

use axum::extract::rejection::QueryRejection;
use axum::extract::{FromRequest, FromRequestParts, Path, Query, Request, State};
use axum::http::{header, request::Parts, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::Utc;
use movecorpus::bootstrap::{
    apply_reviews, build_committee, export_gold, export_silver, prepare_iteration, IterationRecord, LoopState,
    PoolItem, PreparedIteration, ReviewDecision, SilverConfig,
};
use movecorpus::committee::Candidate;
use movecorpus::config::{Config, Resources};
use movecorpus::committee::Toolkit;
use movecorpus::corpus::store::{Record, Store};
use movecorpus::corpus::{
    create_statement, AgreementStatus, CharSpan, Decision, IngestStatus, Label, MemberVote, Origin, Statement,
    StatementError, Vote,
};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{ApiError, ErrorBody};
use crate::workers::{Role, Session, WorkerRegistry};

/// Votes a statement collects before voters stop being offered it.
pub const VOTES_PER_STATEMENT: usize = 5;

enum Phase {
    Idle,
    Preparing { iter_num: u32 },
    Reviewing { snapshot: Box<LoopState>, prepared: Box<PreparedIteration> },
    Failed { iter_num: u32, error: ErrorBody },
}

#[derive(Default)]
struct Leases {
    held: HashMap<String, (String, Instant)>,
    last_served: HashMap<String, u64>,
    tick: u64,
}

type CacheKey = (String, String, String);

pub struct AppState {
    store: Mutex<Store>,
    config: Config,
    resources: Resources,
    toolkit: Toolkit,
    workers: WorkerRegistry,
    lease: Duration,
    leases: Mutex<Leases>,
    idempotency: Mutex<HashMap<CacheKey, (StatusCode, Value)>>,
    iteration: Mutex<Phase>,
}

pub type Shared = Arc<AppState>;

fn lock<T>(m: &Mutex<T>) -> MutexGuard<'_, T> {
    m.lock().unwrap_or_else(|poisoned| poisoned.into_inner())
}

impl AppState {
    pub fn new(store: Store, config: Config, resources: Resources, workers: WorkerRegistry) -> Shared {
        let toolkit = config.toolkit(&resources);
        Arc::new(Self {
            store: Mutex::new(store),
            lease: Duration::from_secs(config.service.lease_seconds),
            config,
            resources,
            toolkit,
            workers,
            leases: Mutex::default(),
            idempotency: Mutex::default(),
            iteration: Mutex::new(Phase::Idle),
        })
    }

    /// Overrides the toolkit, e.g. to plug in extra featurizers.
    pub fn with_toolkit(store: Store, config: Config, resources: Resources, workers: WorkerRegistry, toolkit: Toolkit) -> Shared {
        let mut st = Arc::into_inner(Self::new(store, config, resources, workers)).expect("fresh Arc");
        st.toolkit = toolkit;
        Arc::new(st)
    }

    fn finish_prepare(&self, iter_num: u32, snapshot: LoopState, result: Result<PreparedIteration, movecorpus::bootstrap::LoopError>) {
        let mut phase = lock(&self.iteration);
        *phase = match result {
            Ok(prepared) if prepared.queue.is_empty() => match self.finalize(snapshot, &prepared) {
                Ok(_) => Phase::Idle,
                Err(e) => Phase::Failed { iter_num, error: e.body },
            },
            Ok(prepared) => Phase::Reviewing { snapshot: Box::new(snapshot), prepared: Box::new(prepared) },
            Err(e) => {
                log::warn!("iteration {iter_num} failed: {e}");
                Phase::Failed { iter_num, error: ApiError::from(e).body }
            }
        };
    }

    /// Folds the reviewed queue into the snapshot and persists the new
    /// statements and the iteration record.
    fn finalize(&self, mut snapshot: LoopState, prepared: &PreparedIteration) -> Result<IterationRecord, ApiError> {
        let (record, added) = apply_reviews(&mut snapshot, prepared)?;
        crate::commit_iteration(&mut lock(&self.store), &record, added)?;
        Ok(record)
    }
}

impl FromRequestParts<Shared> for Session {
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, state: &Shared) -> Result<Self, Self::Rejection> {
        let token = parts
            .headers
            .get(header::AUTHORIZATION)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.strip_prefix("Bearer "))
            .ok_or_else(ApiError::unauthorized)?;
        state.workers.session(token.trim()).cloned().ok_or_else(ApiError::unauthorized)
    }
}

fn require(session: &Session, role: Role) -> Result<(), ApiError> {
    if session.role == role {
        Ok(())
    } else {
        Err(ApiError::forbidden(match role {
            Role::Expert => "expert",
            Role::Voter => "voter",
            Role::Reviewer => "reviewer",
        }))
    }
}

/// `Json` whose rejections use the API error body.
pub struct ApiJson<T>(pub T);

impl<S: Send + Sync, T: DeserializeOwned> FromRequest<S> for ApiJson<T> {
    type Rejection = ApiError;

    async fn from_request(req: Request, state: &S) -> Result<Self, Self::Rejection> {
        match Json::<T>::from_request(req, state).await {
            Ok(Json(v)) => Ok(ApiJson(v)),
            Err(r) => Err(ApiError::new(r.status(), "invalid_body", r.body_text())),
        }
    }
}

fn query<T>(q: Result<Query<T>, QueryRejection>) -> Result<T, ApiError> {
    q.map(|Query(v)| v).map_err(|r| ApiError::new(StatusCode::BAD_REQUEST, "invalid_query", r.body_text()))
}

fn respond(result: Result<(StatusCode, Value), ApiError>) -> Response {
    match result {
        Ok((status, body)) => (status, Json(body)).into_response(),
        Err(e) => e.into_response(),
    }
}

/// Runs a mutation at most once per (worker, route, idempotency key).
fn idempotent(
    state: &AppState,
    session: &Session,
    route: &str,
    headers: &HeaderMap,
    f: impl FnOnce() -> Result<(StatusCode, Value), ApiError>,
) -> Response {
    let Some(key) = headers.get("idempotency-key").and_then(|v| v.to_str().ok()) else {
        return respond(f());
    };
    let mut cache = lock(&state.idempotency);
    let k = (session.worker_id.clone(), route.to_string(), key.to_string());
    if let Some((status, body)) = cache.get(&k) {
        return (*status, Json(body.clone())).into_response();
    }
    let (status, body) = match f() {
        Ok(ok) => ok,
        Err(e) => (e.status, serde_json::to_value(&e.body).expect("error bodies serialize")),
    };
    cache.insert(k, (status, body.clone()));
    (status, Json(body)).into_response()
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("API payloads serialize")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VoteCounts {
    pub agree: usize,
    pub disagree: usize,
}

/// A statement as served: vote counts only, never voter identities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatementView {
    pub statement_id: String,
    pub doc_id: String,
    pub span: CharSpan,
    pub text: String,
    pub entity_type: Option<String>,
    pub label: Label,
    pub origin: Origin,
    pub mean_probability: Option<f64>,
    pub model_votes: Option<std::collections::BTreeMap<String, MemberVote>>,
    pub agreement: AgreementStatus,
    pub votes: VoteCounts,
}

impl From<&Statement> for StatementView {
    fn from(s: &Statement) -> Self {
        let (agree, disagree) = s.vote_counts();
        Self {
            statement_id: s.statement_id.clone(),
            doc_id: s.doc_id.clone(),
            span: s.span,
            text: s.text.clone(),
            entity_type: s.entity_type.clone(),
            label: s.label,
            origin: s.origin,
            mean_probability: s.mean_probability,
            model_votes: s.model_votes.clone(),
            agreement: s.agreement,
            votes: VoteCounts { agree, disagree },
        }
    }
}

pub fn router(state: Shared) -> Router {
    Router::new()
        .route("/health", get(|| async { "ok" }))
        .route("/catalog", get(catalog))
        .route("/documents/next", get(next_document))
        .route("/documents/{doc_id}/complete", post(complete_document))
        .route("/statements", post(post_statement))
        .route("/statements/{id}", get(get_statement))
        .route("/votes", post(post_vote))
        .route("/votes/next", get(next_vote))
        .route("/review", get(review_queue))
        .route("/review/next", get(next_review))
        .route("/review/{id}", post(post_review))
        .route("/iterations", get(list_iterations))
        .route("/iterations/current", get(current_iteration))
        .route("/iterations/run", post(run_iteration))
        .route("/export/gold", get(gold))
        .route("/export/silver", get(silver))
        .with_state(state)
}

pub async fn serve(state: Shared, port: u16) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(("0.0.0.0", port)).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state)).await
}

async fn catalog(State(st): State<Shared>, _s: Session) -> Json<Value> {
    Json(json!({ "entity_types": st.resources.catalog.names() }))
}

#[derive(Debug, Serialize)]
struct DocumentPayload<'a> {
    doc_id: &'a str,
    source_uri: &'a str,
    text: &'a str,
    sentences: &'a [CharSpan],
    place_mentions: &'a [movecorpus::corpus::PlaceMention],
    lease_seconds: u64,
}

/// Least-recently-served Filtered-In document that is neither completed nor
/// leased to someone else. A worker holding a live lease gets that document again.
async fn next_document(State(st): State<Shared>, s: Session) -> Result<Response, ApiError> {
    require(&s, Role::Expert)?;
    let store = lock(&st.store);
    let state = store.state();
    let mut leases = lock(&st.leases);
    let now = Instant::now();
    leases.held.retain(|_, (_, until)| *until > now);
    let open = |id: &str| {
        state.documents.get(id).is_some_and(|d| d.ingest_status == IngestStatus::FilteredIn)
            && !state.completed_docs.contains(id)
    };
    let mine = leases.held.iter().find(|(doc, (w, _))| *w == s.worker_id && open(doc)).map(|(d, _)| d.clone());
    let chosen = mine.or_else(|| {
        state
            .documents
            .keys()
            .filter(|id| open(id) && !leases.held.contains_key(*id))
            .min_by_key(|id| (leases.last_served.get(*id).copied().unwrap_or(0), (*id).clone()))
            .cloned()
    });
    let Some(doc_id) = chosen else {
        return Ok(StatusCode::NO_CONTENT.into_response());
    };
    leases.tick += 1;
    let tick = leases.tick;
    leases.last_served.insert(doc_id.clone(), tick);
    leases.held.insert(doc_id.clone(), (s.worker_id.clone(), now + st.lease));
    let doc = &state.documents[&doc_id];
    let payload = DocumentPayload {
        doc_id: &doc.doc_id,
        source_uri: &doc.source_uri,
        text: &doc.extracted_text,
        sentences: &doc.sentences,
        place_mentions: &doc.place_mentions,
        lease_seconds: st.lease.as_secs(),
    };
    Ok(Json(payload).into_response())
}

async fn complete_document(
    State(st): State<Shared>,
    s: Session,
    headers: HeaderMap,
    Path(doc_id): Path<String>,
) -> Response {
    idempotent(&st, &s, &format!("complete:{doc_id}"), &headers, || {
        require(&s, Role::Expert)?;
        let mut store = lock(&st.store);
        store.append(Record::DocumentCompleted { doc_id: doc_id.clone() })?;
        lock(&st.leases).held.remove(&doc_id);
        Ok((StatusCode::OK, json!({ "doc_id": doc_id, "completed": true })))
    })
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct NewStatement {
    doc_id: String,
    span: CharSpan,
    #[serde(default)]
    entity_type: Option<String>,
    label: Label,
}

async fn post_statement(State(st): State<Shared>, s: Session, headers: HeaderMap, ApiJson(body): ApiJson<NewStatement>) -> Response {
    idempotent(&st, &s, "statements", &headers, || {
        require(&s, Role::Expert)?;
        let mut store = lock(&st.store);
        let doc = store
            .state()
            .documents
            .get(&body.doc_id)
            .ok_or_else(|| StatementError::UnknownDocument(body.doc_id.clone()))?;
        let stmt = create_statement(
            doc,
            body.span,
            body.entity_type.as_deref(),
            body.label,
            Origin::ExpertSeed,
            &st.resources.catalog,
        )?;
        let view = StatementView::from(&stmt);
        store.append(Record::StatementCreated(stmt))?;
        Ok((StatusCode::CREATED, to_value(&view)))
    })
}

async fn get_statement(State(st): State<Shared>, _s: Session, Path(id): Path<String>) -> Result<Json<StatementView>, ApiError> {
    let store = lock(&st.store);
    let stmt = store.state().statements.get(&id).ok_or(StatementError::UnknownStatement(id))?;
    Ok(Json(stmt.into()))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct NewVote {
    statement_id: String,
    decision: Decision,
}

async fn post_vote(State(st): State<Shared>, s: Session, headers: HeaderMap, ApiJson(body): ApiJson<NewVote>) -> Response {
    idempotent(&st, &s, "votes", &headers, || {
        require(&s, Role::Voter)?;
        let mut store = lock(&st.store);
        let vote = Vote { worker_id: s.worker_id.clone(), decision: body.decision, timestamp: Utc::now() };
        store.append(Record::VoteCast { statement_id: body.statement_id.clone(), vote })?;
        let stmt = &store.state().statements[&body.statement_id];
        let (agree, disagree) = stmt.vote_counts();
        Ok((
            StatusCode::OK,
            json!({
                "statement_id": stmt.statement_id,
                "agreement": stmt.agreement,
                "votes": VoteCounts { agree, disagree },
            }),
        ))
    })
}

/// First statement, by id, that still needs votes and this worker has not voted on.
async fn next_vote(State(st): State<Shared>, s: Session) -> Result<Response, ApiError> {
    require(&s, Role::Voter)?;
    let store = lock(&st.store);
    let next = store.state().statements.values().find(|stmt| {
        stmt.origin == Origin::ExpertSeed
            && stmt.votes.len() < VOTES_PER_STATEMENT
            && stmt.votes.iter().all(|v| v.worker_id != s.worker_id)
    });
    Ok(match next {
        Some(stmt) => Json(StatementView::from(stmt)).into_response(),
        None => StatusCode::NO_CONTENT.into_response(),
    })
}

#[derive(Debug, Serialize)]
struct CandidateView<'a> {
    iter_num: u32,
    rank: usize,
    remaining: usize,
    #[serde(flatten)]
    candidate: &'a Candidate,
}

async fn review_queue(State(st): State<Shared>, s: Session) -> Result<Json<Value>, ApiError> {
    require(&s, Role::Reviewer)?;
    let phase = lock(&st.iteration);
    Ok(Json(match &*phase {
        Phase::Reviewing { prepared, .. } => json!({ "iter_num": prepared.iter_num, "entries": prepared.queue.entries() }),
        _ => json!({ "iter_num": null, "entries": [] }),
    }))
}

async fn next_review(State(st): State<Shared>, s: Session) -> Result<Response, ApiError> {
    require(&s, Role::Reviewer)?;
    let phase = lock(&st.iteration);
    if let Phase::Reviewing { prepared, .. } = &*phase {
        let q = &prepared.queue;
        if let Some((rank, e)) = q.entries().iter().enumerate().find(|(_, e)| e.state == movecorpus::bootstrap::ReviewState::Pending) {
            let view = CandidateView { iter_num: prepared.iter_num, rank: rank + 1, remaining: q.pending_count(), candidate: &e.candidate };
            return Ok(Json(view).into_response());
        }
    }
    Ok(StatusCode::NO_CONTENT.into_response())
}

async fn post_review(
    State(st): State<Shared>,
    s: Session,
    headers: HeaderMap,
    Path(id): Path<String>,
    ApiJson(decision): ApiJson<ReviewDecision>,
) -> Response {
    idempotent(&st, &s, &format!("review:{id}"), &headers, || {
        require(&s, Role::Reviewer)?;
        if let ReviewDecision::Confirmed { entity_type: Some(et) } = &decision {
            if !st.resources.catalog.contains(et) {
                return Err(StatementError::UnknownEntityType(et.clone()).into());
            }
        }
        let mut phase = lock(&st.iteration);
        let Phase::Reviewing { prepared, .. } = &mut *phase else {
            return Err(ApiError::new(StatusCode::CONFLICT, "no_active_review", "no iteration is awaiting review"));
        };
        let state = prepared.queue.record(&id, decision)?;
        let remaining = prepared.queue.pending_count();
        let mut record = None;
        if remaining == 0 {
            let Phase::Reviewing { snapshot, prepared } = std::mem::replace(&mut *phase, Phase::Idle) else {
                unreachable!()
            };
            match st.finalize(*snapshot, &prepared) {
                Ok(r) => record = Some(r),
                Err(e) => {
                    *phase = Phase::Failed { iter_num: prepared.iter_num, error: e.body.clone() };
                    return Err(e);
                }
            }
        }
        Ok((StatusCode::OK, json!({ "statement_id": id, "state": state, "remaining": remaining, "iteration": record })))
    })
}

async fn list_iterations(State(st): State<Shared>, _s: Session) -> Json<Vec<IterationRecord>> {
    Json(lock(&st.store).state().iterations.clone())
}

fn phase_view(phase: &Phase) -> Value {
    match phase {
        Phase::Idle => json!({ "state": "idle" }),
        Phase::Preparing { iter_num } => json!({ "state": "preparing", "iter_num": iter_num }),
        Phase::Reviewing { prepared, .. } => json!({
            "state": "reviewing",
            "iter_num": prepared.iter_num,
            "queued": prepared.queue.len(),
            "pending": prepared.queue.pending_count(),
            "predicted_positive": prepared.predicted_positive,
            "members": prepared.members,
        }),
        Phase::Failed { iter_num, error } => json!({ "state": "failed", "iter_num": iter_num, "error": error }),
    }
}

async fn current_iteration(State(st): State<Shared>, _s: Session) -> Json<Value> {
    Json(phase_view(&lock(&st.iteration)))
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RunRequest {
    batch_size: Option<usize>,
}

/// Starts an iteration in the background; poll `/iterations/current`.
async fn run_iteration(State(st): State<Shared>, s: Session, headers: HeaderMap, ApiJson(req): ApiJson<RunRequest>) -> Response {
    let shared = &st;
    idempotent(&st, &s, "iterations/run", &headers, || {
        require(&s, Role::Reviewer)?;
        let mut phase = lock(&shared.iteration);
        if let Phase::Preparing { iter_num } = &*phase {
            return Err(in_progress(*iter_num));
        }
        if let Phase::Reviewing { prepared, .. } = &*phase {
            return Err(in_progress(prepared.iter_num));
        }
        let snapshot = LoopState::from_corpus(lock(&shared.store).state());
        let iter_num = snapshot.next_iter_num();
        let mut cfg = shared.config.loop_config();
        if let Some(b) = req.batch_size {
            cfg.batch_size = b;
        }
        *phase = Phase::Preparing { iter_num };
        let worker = shared.clone();
        tokio::task::spawn_blocking(move || {
            let result = prepare_iteration(&snapshot, &cfg, &worker.toolkit);
            worker.finish_prepare(iter_num, snapshot, result);
        });
        Ok((StatusCode::ACCEPTED, json!({ "iter_num": iter_num, "state": "preparing" })))
    })
}

fn in_progress(iter_num: u32) -> ApiError {
    ApiError::new(StatusCode::CONFLICT, "iteration_in_progress", format!("iteration {iter_num} is still running"))
        .with_detail(json!({ "iter_num": iter_num }))
}

fn ndjson(body: Vec<u8>) -> Response {
    ([(header::CONTENT_TYPE, "application/x-ndjson")], body).into_response()
}

async fn gold(State(st): State<Shared>, _s: Session) -> Result<Response, ApiError> {
    let mut buf = Vec::new();
    export_gold(lock(&st.store).state().statements.values(), &mut buf)?;
    Ok(ndjson(buf))
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SilverQuery {
    threshold: Option<f64>,
    negative_ceiling: Option<f64>,
    seed: Option<u64>,
}

/// Trains a committee on the current corpus and exports the pool it scores.
async fn silver(State(st): State<Shared>, _s: Session, q: Result<Query<SilverQuery>, QueryRejection>) -> Result<Response, ApiError> {
    let q = query(q)?;
    let base = &st.config.silver;
    let cfg = SilverConfig {
        threshold: q.threshold.unwrap_or(base.threshold),
        negative_ceiling: q.negative_ceiling.unwrap_or(base.negative_ceiling),
        seed: q.seed.unwrap_or(base.seed),
    };
    let snapshot = LoopState::from_corpus(lock(&st.store).state());
    let worker = st.clone();
    let out = tokio::task::spawn_blocking(move || -> Result<Vec<u8>, ApiError> {
        let loop_cfg = worker.config.loop_config();
        let (committee, _) = build_committee(&snapshot, &loop_cfg, &worker.toolkit, snapshot.next_iter_num())?;
        let pool: Vec<_> = snapshot.pool.values().map(PoolItem::unit).collect();
        let mut buf = Vec::new();
        export_silver(&committee, &pool, &cfg, &mut buf)?;
        Ok(buf)
    })
    .await
    .map_err(|e| ApiError::internal(e.to_string()))??;
    Ok(ndjson(out))
}
