//! HTTP API under `/v1`.
//!
//! Every body is `{"ok": true, "data": ...}` or
//! `{"ok": false, "error": {"code", "message", "detail"}}`. Handlers share no
//! mutable state: the store, catalog and gateway are fixed at startup.

use std::net::SocketAddr;
use std::sync::Arc;

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::assembler::{assemble, AssembleError, AssembleOptions, CameraRing, Catalog};
use crate::describer::{describe, paraphrase};
use crate::gateway::{Gateway, GatewayError, GenerateError};
use crate::geometry::{validate_layout, Violation, ViolationKind, DEFAULT_TOLERANCE};
use crate::layout::{Layout, LayoutDocument, RoomSpec};
use crate::pipeline::{self, GenerateRequest, PipelineError};
use crate::prompt::{condition_distance, Condition, ExemplarStore, FormatOptions, Polarity, PromptError};

/// Machine-readable error shared by the service and the command line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<Value>,
}

impl ErrorBody {
    pub fn new(code: &str, message: impl ToString) -> Self {
        Self { code: code.into(), message: message.to_string(), detail: None }
    }

    pub fn with_detail(mut self, detail: Value) -> Self {
        self.detail = Some(detail);
        self
    }
}

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub body: ErrorBody,
}

impl ApiError {
    fn new(status: StatusCode, code: &str, message: impl ToString) -> Self {
        Self { status, body: ErrorBody::new(code, message) }
    }

    fn bad_request(code: &str, message: impl ToString) -> Self {
        Self::new(StatusCode::BAD_REQUEST, code, message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "ok": false, "error": self.body }))).into_response()
    }
}

impl From<&GatewayError> for ApiError {
    fn from(e: &GatewayError) -> Self {
        let (status, code) = match e {
            GatewayError::FixtureMiss(_) => (StatusCode::NOT_FOUND, "fixture_miss"),
            GatewayError::Network { .. } => (StatusCode::BAD_GATEWAY, "network"),
            GatewayError::Auth(_) => (StatusCode::BAD_GATEWAY, "auth"),
            GatewayError::Upstream { .. } => (StatusCode::BAD_GATEWAY, "upstream"),
            GatewayError::Protocol(_) => (StatusCode::BAD_GATEWAY, "protocol"),
            GatewayError::InvalidExchange(_) => (StatusCode::INTERNAL_SERVER_ERROR, "invalid_exchange"),
            GatewayError::Io(_) => (StatusCode::INTERNAL_SERVER_ERROR, "fixture_io"),
        };
        let mut err = Self::new(status, code, e);
        if let GatewayError::FixtureMiss(hash) = e {
            err.body.detail = Some(json!({ "hash": hash }));
        }
        err
    }
}

impl From<&PipelineError> for ApiError {
    fn from(e: &PipelineError) -> Self {
        match e {
            PipelineError::Room(_) => Self::bad_request("invalid_room", e),
            PipelineError::Prompt(PromptError::InsufficientExemplars { needed, available }) => {
                let mut err = Self::bad_request("insufficient_exemplars", e);
                err.body.detail = Some(json!({ "needed": needed, "available": available }));
                err
            }
            PipelineError::Prompt(_) => Self::bad_request("invalid_k", e),
            PipelineError::Generate(GenerateError::Gateway(g)) => g.into(),
            PipelineError::Generate(GenerateError::Grammar { attempts, .. }) => {
                let mut err = Self::new(StatusCode::BAD_GATEWAY, "unusable_response", e);
                err.body.detail = Some(json!({ "attempts": attempts }));
                err
            }
        }
    }
}

impl From<&AssembleError> for ApiError {
    fn from(e: &AssembleError) -> Self {
        match e {
            AssembleError::CategoryNotInCatalog { index, category } => {
                let mut err = Self::bad_request("category_not_in_catalog", e);
                err.body.detail = Some(json!({ "box": index, "category": category }));
                err
            }
            AssembleError::Catalog { .. } => Self::new(StatusCode::INTERNAL_SERVER_ERROR, "catalog", e),
        }
    }
}

fn ok<T: Serialize>(data: T) -> Response {
    Json(json!({ "ok": true, "data": data })).into_response()
}

type ApiResult = Result<Response, ApiError>;

fn body<T>(extracted: Result<Json<T>, JsonRejection>) -> Result<T, ApiError> {
    extracted.map(|Json(v)| v).map_err(|e| ApiError::bad_request("malformed_request", e.body_text()))
}

fn to_layout(doc: &LayoutDocument) -> Result<Layout, ApiError> {
    doc.to_layout().map_err(|e| ApiError::bad_request("invalid_layout", e))
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> T + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f).await.map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e))
}

pub struct AppState {
    pub store: ExemplarStore,
    pub gateway: Gateway,
    pub catalog: Option<Catalog>,
    pub format: FormatOptions,
    pub tolerance: f64,
}

impl AppState {
    pub fn new(store: ExemplarStore, gateway: Gateway) -> Self {
        Self { store, gateway, catalog: None, format: FormatOptions::default(), tolerance: DEFAULT_TOLERANCE }
    }

    pub fn with_catalog(mut self, catalog: Catalog) -> Self {
        self.catalog = Some(catalog);
        self
    }
}

type Shared = State<Arc<AppState>>;

async fn health(State(state): Shared) -> Response {
    ok(json!({ "status": "ok", "mode": state.gateway.mode().to_string(), "exemplars": state.store.len() }))
}

async fn generate(State(state): Shared, req: Result<Json<GenerateRequest>, JsonRejection>) -> ApiResult {
    let request = body(req)?;
    let result = blocking(move || {
        pipeline::generate(&state.store, &request, &state.format, &state.gateway)
            .map(|g| json!({ "layout": g.document(), "diagnostics": g.report }))
    })
    .await?;
    result.map(ok).map_err(|e| (&e).into())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LayoutBody {
    layout: LayoutDocument,
    #[serde(default)]
    tolerance: Option<f64>,
}

#[derive(Serialize)]
struct BoxReport {
    index: usize,
    category: String,
    oob: bool,
    overlaps: Vec<usize>,
}

async fn validate(State(state): Shared, req: Result<Json<LayoutBody>, JsonRejection>) -> ApiResult {
    let req = body(req)?;
    let layout = to_layout(&req.layout)?;
    let violations: Vec<Violation> = validate_layout(&layout, req.tolerance.unwrap_or(state.tolerance));
    let boxes: Vec<BoxReport> = layout
        .boxes()
        .iter()
        .enumerate()
        .map(|(index, b)| BoxReport {
            index,
            category: b.category().to_string(),
            oob: violations.iter().any(|v| v.kind == ViolationKind::OutOfBounds && v.boxes[0] == index),
            overlaps: violations
                .iter()
                .filter(|v| v.kind == ViolationKind::Overlap && v.boxes.contains(&index))
                .map(|v| if v.boxes[0] == index { v.boxes[1] } else { v.boxes[0] })
                .collect(),
        })
        .collect();
    let oob = boxes.iter().any(|b| b.oob);
    let overlap = boxes.iter().any(|b| !b.overlaps.is_empty());
    Ok(ok(json!({ "oob": oob, "overlap": overlap, "violations": violations, "boxes": boxes })))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DescribeBody {
    layout: LayoutDocument,
    #[serde(default)]
    paraphrase: bool,
}

async fn describe_layout(State(state): Shared, req: Result<Json<DescribeBody>, JsonRejection>) -> ApiResult {
    let req = body(req)?;
    let description = describe(&to_layout(&req.layout)?);
    if !req.paraphrase {
        return Ok(ok(description));
    }
    let result = blocking(move || paraphrase(&description, Some(&state.gateway))).await?;
    result.map(ok).map_err(|e| (&e).into())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AssembleBody {
    layout: LayoutDocument,
    #[serde(default)]
    fit_to_box: bool,
    /// Number of camera poses; omitted means none.
    #[serde(default)]
    cameras: Option<usize>,
}

async fn assemble_layout(State(state): Shared, req: Result<Json<AssembleBody>, JsonRejection>) -> ApiResult {
    let req = body(req)?;
    let layout = to_layout(&req.layout)?;
    let Some(catalog) = &state.catalog else {
        return Err(ApiError::new(
            StatusCode::SERVICE_UNAVAILABLE,
            "catalog_unavailable",
            "service started without a catalog",
        ));
    };
    let opts = AssembleOptions {
        fit_to_box: req.fit_to_box,
        cameras: req.cameras.filter(|&n| n > 0).map(|count| CameraRing { count, ..CameraRing::default() }),
    };
    assemble(&layout, catalog, &opts).map(ok).map_err(|e| (&e).into())
}

#[derive(Deserialize)]
struct NearestQuery {
    rl: f64,
    rw: f64,
    k: Option<usize>,
    room_type: Option<String>,
}

#[derive(Serialize)]
struct Preview<'a> {
    id: &'a str,
    distance: f64,
    description: &'a str,
    layout: LayoutDocument,
}

/// Closest positive exemplars by floor dimensions, for previews.
async fn nearest(State(state): Shared, query: Result<Query<NearestQuery>, QueryRejection>) -> ApiResult {
    let Query(q) = query.map_err(|e| ApiError::bad_request("malformed_request", e.body_text()))?;
    let room_type = q.room_type.as_deref().unwrap_or("room");
    let room = RoomSpec::new(room_type, q.rl, q.rw).map_err(|e| ApiError::bad_request("invalid_room", e))?;
    let probe = Condition::new("", room);
    let mut scored: Vec<_> = state
        .store
        .exemplars()
        .iter()
        .filter(|e| e.polarity == Polarity::Positive)
        .filter(|e| q.room_type.is_none() || e.condition.room_type() == probe.room_type())
        .map(|e| (condition_distance(&e.condition, &probe), e))
        .collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));
    let previews: Vec<Preview> = scored
        .into_iter()
        .take(q.k.unwrap_or(8))
        .map(|(distance, e)| Preview {
            id: &e.id,
            distance,
            description: &e.condition.description,
            layout: LayoutDocument::from_layout(&e.layout),
        })
        .collect();
    Ok(ok(previews))
}

async fn not_found() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such endpoint")
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/v1/health", get(health))
        .route("/v1/generate", post(generate))
        .route("/v1/validate", post(validate))
        .route("/v1/describe", post(describe_layout))
        .route("/v1/assemble", post(assemble_layout))
        .route("/v1/exemplars/nearest", get(nearest))
        .fallback(not_found)
        .with_state(state)
}

pub async fn serve(addr: SocketAddr, state: Arc<AppState>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state)).await
}
