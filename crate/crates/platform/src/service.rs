//! HTTP/JSON service over a store.
//!
//! | method | path | success |
//! |---|---|---|
//! | POST | `/v1/incidents` | 201 `{serial_no, significance}` |
//! | POST | `/v1/incidents:batch` | 200 `{accepted, rejected, results[]}` |
//! | GET | `/v1/incidents` | 200 `{total, offset, limit, entries[]}` (query = filter pairs) |
//! | GET | `/v1/analytics/anova` | 200 `{result}` (`response`, `interaction`, `factor_a`, `factor_b`) |
//! | GET | `/v1/analytics/clusters` | 200 cluster summary + `assignments[]` (`k`, `seed`, `n_init`) |
//! | GET | `/v1/health` | 200 `{status, record_count}` |
//!
//! Every body carries `schema_version`. Errors are
//! `{"schema_version", "error": {"code", "message", "details"?}}` with codes:
//! `invalid_body` (400), `invalid_parameter` (400), `unsupported_k` (400),
//! `not_found` (404), `duplicate` (409), `validation_failed` (422),
//! `insignificant` (422), `degenerate_design` (422), `insufficient_data`
//! (422), `io_error` (500), `internal` (500). Bodies contain no clock
//! values, so identical state and parameters give identical bytes.

use std::sync::{Arc, RwLock};

use axum::body::Bytes;
use axum::extract::rejection::QueryRejection;
use axum::extract::{Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use incidentdb_core::anova::{two_way_anova_with_schema, AnovaError, AnovaSpec, Factor, Response as AnovaResponse};
use incidentdb_core::cluster::{analyze, ClusterError, KMeansOptions};
use incidentdb_core::model::{IncidentRecord, Schema};
use serde_json::{json, Map, Value};

use crate::query::QueryFilter;
use crate::report::ClusterSummary;
use crate::store::{AppendError, Source, Store};
use crate::SCHEMA_VERSION;

#[derive(Clone)]
pub struct AppState {
    store: Arc<RwLock<Store>>,
    schema: Arc<Schema>,
}

impl AppState {
    pub fn new(store: Store) -> Self {
        let schema = Arc::new(store.options().schema.clone());
        AppState { store: Arc::new(RwLock::new(store)), schema }
    }

    fn snapshot(&self) -> Vec<IncidentRecord> {
        self.store.read().expect("store lock").records()
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/v1/health", get(health))
        .route("/v1/incidents", post(submit).get(list))
        .route("/v1/incidents:batch", post(submit_batch))
        .route("/v1/analytics/anova", get(anova))
        .route("/v1/analytics/clusters", get(clusters))
        .fallback(|| async { ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such endpoint") })
        .with_state(state)
}

fn envelope(status: StatusCode, body: Value) -> Response {
    let mut map = match body {
        Value::Object(m) => m,
        other => {
            let mut m = Map::new();
            m.insert("data".into(), other);
            m
        }
    };
    map.insert("schema_version".into(), Value::String(SCHEMA_VERSION.into()));
    let bytes = serde_json::to_vec(&Value::Object(map)).expect("json value serializes");
    (status, [(axum::http::header::CONTENT_TYPE, "application/json")], bytes).into_response()
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
    details: Option<Value>,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError { status, code, message: message.into(), details: None }
    }

    fn with_details(mut self, details: Value) -> Self {
        self.details = Some(details);
        self
    }

    fn param(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, "invalid_parameter", message)
    }

    fn body(&self) -> Value {
        let mut err = json!({ "code": self.code, "message": self.message });
        if let Some(d) = &self.details {
            err["details"] = d.clone();
        }
        err
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        envelope(self.status, json!({ "error": self.body() }))
    }
}

impl From<AppendError> for ApiError {
    fn from(e: AppendError) -> Self {
        let status = match e {
            AppendError::Duplicate { .. } => StatusCode::CONFLICT,
            AppendError::Validation(_) | AppendError::Insignificant(_) => StatusCode::UNPROCESSABLE_ENTITY,
            AppendError::Io(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        let details = match &e {
            AppendError::Validation(report) => serde_json::to_value(&report.violations).ok(),
            AppendError::Duplicate { existing_serial } => Some(json!({ "existing_serial": existing_serial })),
            AppendError::Insignificant(v) => serde_json::to_value(v).ok(),
            AppendError::Io(_) => None,
        };
        ApiError { status, code: e.code(), message: e.to_string(), details }
    }
}

fn parse_record(value: Value) -> Result<IncidentRecord, ApiError> {
    serde_json::from_value(value)
        .map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "validation_failed", e.to_string()))
}

fn parse_json(body: &[u8]) -> Result<Value, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "invalid_body", e.to_string()))
}

type Pairs = Result<Query<Vec<(String, String)>>, QueryRejection>;

fn pairs(q: Pairs) -> Result<Vec<(String, String)>, ApiError> {
    q.map(|Query(p)| p).map_err(|e| ApiError::param(e.body_text()))
}

async fn health(State(s): State<AppState>) -> Response {
    let n = s.store.read().expect("store lock").len();
    envelope(StatusCode::OK, json!({ "status": "ok", "record_count": n }))
}

async fn submit(State(s): State<AppState>, body: Bytes) -> Result<Response, ApiError> {
    let record = parse_record(parse_json(&body)?)?;
    let mut store = s.store.write().expect("store lock");
    let serial = store.append(&record, Source::Api)?;
    let significance = store.entries().last().expect("just appended").ingest_meta.significance;
    Ok(envelope(StatusCode::CREATED, json!({ "serial_no": serial, "significance": significance })))
}

async fn submit_batch(State(s): State<AppState>, body: Bytes) -> Result<Response, ApiError> {
    let items = match parse_json(&body)? {
        Value::Array(items) => items,
        _ => return Err(ApiError::new(StatusCode::BAD_REQUEST, "invalid_body", "expected a JSON array of records")),
    };
    let mut results: Vec<Option<Value>> = vec![None; items.len()];
    let mut valid = Vec::new();
    for (i, item) in items.into_iter().enumerate() {
        match parse_record(item) {
            Ok(r) => valid.push((i, r)),
            Err(e) => results[i] = Some(json!({ "index": i, "status": "rejected", "error": e.body() })),
        }
    }
    let outcomes = s.store.write().expect("store lock").append_batch(valid.iter().map(|(_, r)| r), Source::Api);
    for ((i, _), outcome) in valid.iter().zip(outcomes) {
        results[*i] = Some(match outcome {
            Ok(serial) => json!({ "index": i, "status": "accepted", "serial_no": serial }),
            Err(e) => json!({ "index": i, "status": "rejected", "error": ApiError::from(e).body() }),
        });
    }
    let results: Vec<Value> = results.into_iter().map(|r| r.expect("every item has an outcome")).collect();
    let accepted = results.iter().filter(|r| r["status"] == "accepted").count();
    Ok(envelope(
        StatusCode::OK,
        json!({ "accepted": accepted, "rejected": results.len() - accepted, "results": results }),
    ))
}

async fn list(State(s): State<AppState>, q: Pairs) -> Result<Response, ApiError> {
    let filter = QueryFilter::from_pairs(pairs(q)?, &s.schema).map_err(|e| ApiError::param(e.to_string()))?;
    let store = s.store.read().expect("store lock");
    let (total, page) = filter.apply(store.entries());
    Ok(envelope(
        StatusCode::OK,
        json!({ "total": total, "offset": filter.offset, "limit": filter.limit, "entries": page }),
    ))
}

fn parse_bool(key: &str, v: &str) -> Result<bool, ApiError> {
    match v.trim().to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(ApiError::param(format!("{key} must be a boolean, got {v:?}"))),
    }
}

fn parse_factor(key: &str, v: &str) -> Result<Factor, ApiError> {
    match v.trim().to_ascii_lowercase().as_str() {
        "ai_system_category" => Ok(Factor::AiSystemCategory),
        "market_region" => Ok(Factor::MarketRegion),
        _ => Err(ApiError::param(format!("{key} must be ai_system_category or market_region, got {v:?}"))),
    }
}

fn anova_error(e: AnovaError) -> ApiError {
    match &e {
        AnovaError::DegenerateDesign { empty_cells, .. } => {
            ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "degenerate_design", e.to_string())
                .with_details(json!({ "empty_cells": empty_cells }))
        }
        AnovaError::NotStrictValid { .. } => {
            ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "validation_failed", e.to_string())
        }
        AnovaError::SameFactor(_) => ApiError::param(e.to_string()),
        AnovaError::Stats(_) => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()),
        _ => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "insufficient_data", e.to_string()),
    }
}

async fn anova(State(s): State<AppState>, q: Pairs) -> Result<Response, ApiError> {
    let mut spec = AnovaSpec::default();
    for (k, v) in pairs(q)? {
        match k.as_str() {
            "response" => {
                spec.response =
                    AnovaResponse::parse(&v).ok_or_else(|| ApiError::param(format!("unknown response {v:?}")))?
            }
            "interaction" | "include_interaction" => spec.include_interaction = parse_bool(&k, &v)?,
            "factor_a" => spec.factor_a = parse_factor(&k, &v)?,
            "factor_b" => spec.factor_b = parse_factor(&k, &v)?,
            _ => return Err(ApiError::param(format!("unknown parameter {k:?}"))),
        }
    }
    let records = s.snapshot();
    let schema = s.schema.clone();
    let result = tokio::task::spawn_blocking(move || two_way_anova_with_schema(&records, &spec, &schema))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?
        .map_err(anova_error)?;
    Ok(envelope(StatusCode::OK, json!({ "result": result })))
}

async fn clusters(State(s): State<AppState>, q: Pairs) -> Result<Response, ApiError> {
    let (mut k, mut seed, mut opts) = (5usize, 0u64, KMeansOptions::default());
    for (key, v) in pairs(q)? {
        let bad = || ApiError::param(format!("{key} must be a non-negative integer, got {v:?}"));
        match key.as_str() {
            "k" => k = v.trim().parse().map_err(|_| bad())?,
            "seed" => seed = v.trim().parse().map_err(|_| bad())?,
            "n_init" => opts.n_init = v.trim().parse().map_err(|_| bad())?,
            _ => return Err(ApiError::param(format!("unknown parameter {key:?}"))),
        }
    }
    if k != 5 {
        return Err(ApiError::new(StatusCode::BAD_REQUEST, "unsupported_k", ClusterError::UnsupportedK(k).to_string()));
    }
    let records = s.snapshot();
    let analysis = tokio::task::spawn_blocking(move || analyze(&records, k, seed, &opts))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?
        .map_err(|e| match e {
            ClusterError::InvalidOptions(_) => ApiError::param(e.to_string()),
            _ => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "insufficient_data", e.to_string()),
        })?;
    let mut body = serde_json::to_value(ClusterSummary::from_analysis(&analysis)).expect("summary serializes");
    let assignments: Vec<Value> = analysis
        .model
        .assignments
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            json!({
                "serial_no": analysis.matrix.serials[i],
                "cluster": c,
                "zone": analysis.zones.labels[c],
                "pc1": analysis.pca.projection[i][0],
                "pc2": analysis.pca.projection[i][1],
            })
        })
        .collect();
    body["assignments"] = Value::Array(assignments);
    Ok(envelope(StatusCode::OK, body))
}

/// Binds `addr` and serves until Ctrl-C.
pub async fn serve(store: Store, addr: &str) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(AppState::new(store)))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
