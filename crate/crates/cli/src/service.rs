//! HTTP API for the planning UI: scenario catalogue, asynchronous runs and
//! per-cycle record retrieval.
//!
//! Every JSON body carries `format_version`. Errors are
//! `{"format_version", "error", "field"?}` with 400 for malformed or invalid
//! input, 404 for unknown ids and 409 for a duplicate run id.

use std::collections::{BTreeMap, VecDeque};
use std::fs;
use std::path::Path;
use std::sync::{Arc, Mutex};

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use netctl::sim::RunSummary;
use netctl::whatif::WhatIfRequest;
use netctl::{reference, run, CycleRecord, Error, RunResult, Scenario, FORMAT_VERSION};

/// Finished or pending runs kept before the least recently used is dropped.
pub const RUN_RETENTION: usize = 32;

pub const SCENARIO_SCHEMA: &str = include_str!("../../../docs/scenario.schema.json");

/// Scenarios addressable by id, in id order.
#[derive(Debug, Clone, Default)]
pub struct Catalog {
    scenarios: BTreeMap<String, Scenario>,
}

impl Catalog {
    /// The shipped reference scenarios.
    pub fn reference() -> Self {
        let scenarios = reference::all().into_iter().map(|(id, s)| (id.to_string(), s)).collect();
        Self { scenarios }
    }

    /// Adds every `*.json` file in `dir`, keyed by file stem. Files are read
    /// once and never written.
    pub fn load_dir(&mut self, dir: &Path) -> anyhow::Result<()> {
        let mut paths: Vec<_> = fs::read_dir(dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        paths.sort();
        for path in paths {
            let id = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
            let scenario = Scenario::from_json(&fs::read_to_string(&path)?)
                .and_then(|s| s.validate().map(|_| s))
                .map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?;
            self.scenarios.insert(id, scenario);
        }
        Ok(())
    }

    pub fn insert(&mut self, id: impl Into<String>, scenario: Scenario) {
        self.scenarios.insert(id.into(), scenario);
    }

    pub fn get(&self, id: &str) -> Option<&Scenario> {
        self.scenarios.get(id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Pending,
    Running,
    Done,
    Failed,
}

#[derive(Debug)]
struct RunEntry {
    id: String,
    label: String,
    status: RunStatus,
    result: Option<RunResult>,
    error: Option<String>,
}

/// Run table with least-recently-used eviction. Runs still in flight are
/// never evicted.
#[derive(Debug, Default)]
struct Registry {
    runs: VecDeque<RunEntry>,
}

impl Registry {
    fn position(&self, id: &str) -> Option<usize> {
        self.runs.iter().position(|r| r.id == id)
    }

    /// Looks up a run and marks it most recently used.
    fn touch(&mut self, id: &str) -> Option<&mut RunEntry> {
        let k = self.position(id)?;
        let entry = self.runs.remove(k)?;
        self.runs.push_back(entry);
        self.runs.back_mut()
    }

    fn insert(&mut self, entry: RunEntry) {
        self.runs.push_back(entry);
        while self.runs.len() > RUN_RETENTION {
            let Some(k) = self
                .runs
                .iter()
                .position(|r| matches!(r.status, RunStatus::Done | RunStatus::Failed))
            else {
                break;
            };
            self.runs.remove(k);
        }
    }
}

#[derive(Debug)]
pub struct AppState {
    catalog: Catalog,
    registry: Mutex<Registry>,
}

impl AppState {
    pub fn new(catalog: Catalog) -> Arc<Self> {
        Arc::new(Self { catalog, registry: Mutex::new(Registry::default()) })
    }

    fn registry(&self) -> std::sync::MutexGuard<'_, Registry> {
        self.registry.lock().unwrap_or_else(|e| e.into_inner())
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/scenarios", get(list_scenarios))
        .route("/scenarios/{id}", get(get_scenario))
        .route("/runs", axum::routing::post(create_run))
        .route("/runs/{id}", get(get_run).delete(delete_run))
        .route("/runs/{id}/cycles", get(get_cycles))
        .route("/runs/{id}/export", get(export_run))
        .with_state(state)
}

pub struct ApiError {
    status: StatusCode,
    message: String,
    field: Option<String>,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self { status, message: message.into(), field: None }
    }

    fn not_found(what: &str, id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, format!("unknown {what} {id}"))
    }

    fn bad_request(field: Option<&str>, message: impl Into<String>) -> Self {
        Self { status: StatusCode::BAD_REQUEST, message: message.into(), field: field.map(str::to_string) }
    }
}

impl From<Error> for ApiError {
    fn from(err: Error) -> Self {
        let field = err.field().map(str::to_string);
        Self { status: StatusCode::BAD_REQUEST, message: err.to_string(), field }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut body = json!({ "format_version": FORMAT_VERSION, "error": self.message });
        if let Some(field) = self.field {
            body["field"] = Value::String(field);
        }
        (self.status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

async fn list_scenarios(State(state): State<Arc<AppState>>) -> Json<Value> {
    let scenarios: Vec<Value> = state
        .catalog
        .scenarios
        .iter()
        .map(|(id, s)| {
            json!({
                "id": id,
                "name": s.display_name(),
                "comm_model": s.comm_model,
                "nodes": s.node_ids(),
                "max_cycles": s.max_cycles,
            })
        })
        .collect();
    let schema: Value = serde_json::from_str(SCENARIO_SCHEMA).expect("bundled schema is JSON");
    Json(json!({ "format_version": FORMAT_VERSION, "scenarios": scenarios, "schema": schema }))
}

async fn get_scenario(State(state): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> ApiResult<Json<Value>> {
    let s = state.catalog.get(&id).ok_or_else(|| ApiError::not_found("scenario", &id))?;
    Ok(Json(json!({ "format_version": FORMAT_VERSION, "id": id, "scenario": s })))
}

/// Body of `POST /runs`: exactly one of `scenario` or `what_if`. A what-if
/// names its base by catalogue id.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunRequest {
    #[serde(default)]
    run_id: Option<String>,
    #[serde(default)]
    scenario: Option<Value>,
    #[serde(default)]
    what_if: Option<Value>,
}

fn parse_field<T: serde::de::DeserializeOwned>(field: &str, value: Value) -> ApiResult<T> {
    serde_json::from_value(value).map_err(|e| ApiError::bad_request(Some(field), format!("{field}: {e}")))
}

fn resolve(state: &AppState, req: RunRequest) -> ApiResult<(String, Scenario)> {
    match (req.scenario, req.what_if) {
        (Some(s), None) => {
            let scenario: Scenario = parse_field("scenario", s)?;
            scenario.validate()?;
            Ok((scenario.display_name().to_string(), scenario))
        }
        (None, Some(w)) => {
            let what_if: WhatIfRequest = parse_field("what_if", w)?;
            let base_id = what_if
                .base
                .as_deref()
                .ok_or_else(|| ApiError::bad_request(Some("what_if.base"), "a base scenario id is required"))?;
            let base = state.catalog.get(base_id).ok_or_else(|| ApiError::not_found("scenario", base_id))?;
            netctl::whatif::check_labels([what_if.label.as_str()])
                .map_err(|_| ApiError::bad_request(Some("what_if.label"), "must not be empty"))?;
            let scenario = what_if.apply(base)?;
            Ok((what_if.label, scenario))
        }
        _ => Err(ApiError::bad_request(None, "exactly one of scenario or what_if is required")),
    }
}

async fn create_run(
    State(state): State<Arc<AppState>>,
    body: Result<Json<Value>, JsonRejection>,
) -> ApiResult<(StatusCode, Json<Value>)> {
    let Json(body) = body.map_err(|e| ApiError::bad_request(None, e.body_text()))?;
    let req: RunRequest = serde_json::from_value(body).map_err(|e| ApiError::bad_request(None, e.to_string()))?;
    if req.run_id.as_deref() == Some("") {
        return Err(ApiError::bad_request(Some("run_id"), "must not be empty"));
    }
    let run_id = req.run_id.clone().unwrap_or_else(|| uuid::Uuid::new_v4().to_string());
    let (label, scenario) = resolve(&state, req)?;
    {
        let mut registry = state.registry();
        if registry.position(&run_id).is_some() {
            return Err(ApiError::new(StatusCode::CONFLICT, format!("run {run_id} already exists")));
        }
        registry.insert(RunEntry { id: run_id.clone(), label, status: RunStatus::Pending, result: None, error: None });
    }

    let task_state = Arc::clone(&state);
    let task_id = run_id.clone();
    tokio::task::spawn_blocking(move || {
        if let Some(entry) = task_state.registry().runs.iter_mut().find(|r| r.id == task_id) {
            entry.status = RunStatus::Running;
        }
        let outcome = run(&scenario);
        let mut registry = task_state.registry();
        // The run may have been deleted while it executed.
        let Some(k) = registry.position(&task_id) else { return };
        let entry = &mut registry.runs[k];
        match outcome {
            Ok(result) => {
                entry.status = RunStatus::Done;
                entry.result = Some(result);
            }
            Err(e) => {
                entry.status = RunStatus::Failed;
                entry.error = Some(e.to_string());
            }
        }
    });

    Ok((
        StatusCode::ACCEPTED,
        Json(json!({ "format_version": FORMAT_VERSION, "run_id": run_id, "status": RunStatus::Pending })),
    ))
}

#[derive(Serialize)]
struct RunView<'a> {
    format_version: u32,
    run_id: &'a str,
    label: &'a str,
    status: RunStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    summary: Option<RunSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    wall_time_ms: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<&'a str>,
}

async fn get_run(State(state): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> ApiResult<Json<Value>> {
    let mut registry = state.registry();
    let entry = registry.touch(&id).ok_or_else(|| ApiError::not_found("run", &id))?;
    let view = RunView {
        format_version: FORMAT_VERSION,
        run_id: &entry.id,
        label: &entry.label,
        status: entry.status,
        summary: entry.result.as_ref().map(RunResult::summary),
        wall_time_ms: entry.result.as_ref().map(|r| r.wall_time.as_secs_f64() * 1e3),
        error: entry.error.as_deref(),
    };
    Ok(Json(serde_json::to_value(view).expect("run view serializes")))
}

#[derive(Debug, Deserialize)]
struct CycleRange {
    from: Option<u32>,
    to: Option<u32>,
}

async fn get_cycles(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    range: Result<Query<CycleRange>, axum::extract::rejection::QueryRejection>,
) -> ApiResult<Json<Value>> {
    let Query(range) = range.map_err(|e| ApiError::bad_request(None, e.body_text()))?;
    let mut registry = state.registry();
    let entry = registry.touch(&id).ok_or_else(|| ApiError::not_found("run", &id))?;
    let records: &[CycleRecord] = entry.result.as_ref().map_or(&[], |r| &r.records);
    let total = records.len() as u32;
    let from = range.from.unwrap_or(1);
    let to = range.to.unwrap_or(total);
    if from == 0 || range.to.is_some_and(|t| t < from) {
        return Err(ApiError::bad_request(Some("from"), "need 1 <= from <= to"));
    }
    let selected: Vec<&CycleRecord> = records.iter().filter(|r| r.cycle >= from && r.cycle <= to).collect();
    Ok(Json(json!({
        "format_version": FORMAT_VERSION,
        "run_id": entry.id,
        "status": entry.status,
        "total": total,
        "records": selected,
    })))
}

async fn export_run(State(state): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> ApiResult<Response> {
    let mut registry = state.registry();
    let entry = registry.touch(&id).ok_or_else(|| ApiError::not_found("run", &id))?;
    let result = entry
        .result
        .as_ref()
        .ok_or_else(|| ApiError::new(StatusCode::CONFLICT, format!("run {id} has no records yet")))?;
    Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], result.to_ndjson()).into_response())
}

async fn delete_run(State(state): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> ApiResult<Json<Value>> {
    let mut registry = state.registry();
    let k = registry.position(&id).ok_or_else(|| ApiError::not_found("run", &id))?;
    registry.runs.remove(k);
    Ok(Json(json!({ "format_version": FORMAT_VERSION, "run_id": id, "deleted": true })))
}
