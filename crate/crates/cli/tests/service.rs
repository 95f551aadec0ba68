use std::time::Duration;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use netctl_cli::service::{router, AppState, Catalog, RUN_RETENTION};

fn tiny() -> Value {
    serde_json::from_str(include_str!("fixtures/tiny.json")).unwrap()
}

fn app() -> Router {
    let mut catalog = Catalog::reference();
    catalog.insert("tiny", serde_json::from_value(tiny()).unwrap());
    router(AppState::new(catalog))
}

async fn send(app: &Router, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Vec<u8>) {
    let mut req = Request::builder().method(method).uri(uri);
    let body = match body {
        Some(v) => {
            req = req.header("content-type", "application/json");
            Body::from(v.to_string())
        }
        None => Body::empty(),
    };
    let resp = app.clone().oneshot(req.body(body).unwrap()).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
    (status, bytes)
}

async fn send_json(app: &Router, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let (status, bytes) = send(app, method, uri, body).await;
    let value: Value = serde_json::from_slice(&bytes).unwrap_or_else(|_| panic!("{}", String::from_utf8_lossy(&bytes)));
    assert_eq!(value["format_version"], 1, "{value}");
    (status, value)
}

async fn wait_done(app: &Router, id: &str) -> Value {
    for _ in 0..2000 {
        let (status, v) = send_json(app, Method::GET, &format!("/runs/{id}"), None).await;
        assert_eq!(status, StatusCode::OK);
        if v["status"] == "done" || v["status"] == "failed" {
            return v;
        }
        tokio::time::sleep(Duration::from_millis(10)).await;
    }
    panic!("run {id} did not finish");
}

#[tokio::test]
async fn scenario_catalogue() {
    let app = app();
    let (status, v) = send_json(&app, Method::GET, "/scenarios", None).await;
    assert_eq!(status, StatusCode::OK);
    let ids: Vec<&str> = v["scenarios"].as_array().unwrap().iter().map(|s| s["id"].as_str().unwrap()).collect();
    assert_eq!(ids, ["net-1", "net-2", "net-3", "net-team", "tiny"]);
    assert_eq!(v["schema"]["title"], "netctl scenario");

    let (status, v) = send_json(&app, Method::GET, "/scenarios/net-2", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(v["scenario"]["name"], "Net-2");

    let (status, v) = send_json(&app, Method::GET, "/scenarios/net-9", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert!(v["error"].as_str().unwrap().contains("net-9"));
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn run_lifecycle_matches_the_library() {
    let app = app();
    let (status, v) = send_json(&app, Method::POST, "/runs", Some(json!({ "run_id": "r1", "scenario": tiny() }))).await;
    assert_eq!(status, StatusCode::ACCEPTED);
    assert_eq!(v["run_id"], "r1");

    let done = wait_done(&app, "r1").await;
    assert_eq!(done["status"], "done");
    assert_eq!(done["label"], "tiny");
    let cycles = done["summary"]["cycles"].as_u64().unwrap();
    assert!(cycles >= 1);

    let (status, v) = send_json(&app, Method::GET, "/runs/r1/cycles?from=1&to=1", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(v["records"].as_array().unwrap().len(), 1);
    assert_eq!(v["records"][0]["cycle"], 1);
    assert_eq!(v["total"], cycles);

    let (status, v) = send_json(&app, Method::GET, "/runs/r1/cycles", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(v["records"].as_array().unwrap().len() as u64, cycles);

    // Pages concatenate to the full stream.
    let mut paged = Vec::new();
    let mut from = 1;
    while from <= cycles {
        let uri = format!("/runs/r1/cycles?from={from}&to={}", from + 1);
        let (_, page) = send_json(&app, Method::GET, &uri, None).await;
        paged.extend(page["records"].as_array().unwrap().iter().cloned());
        from += 2;
    }
    assert_eq!(Value::Array(paged), v["records"]);

    let (status, _) = send_json(&app, Method::GET, "/runs/r1/cycles?from=3&to=2", None).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);

    // The export is byte-identical to what the CLI writes.
    let (status, bytes) = send(&app, Method::GET, "/runs/r1/export", None).await;
    assert_eq!(status, StatusCode::OK);
    let scenario: netctl::Scenario = serde_json::from_value(tiny()).unwrap();
    assert_eq!(String::from_utf8(bytes).unwrap(), netctl::run(&scenario).unwrap().to_ndjson());

    let (status, _) = send_json(&app, Method::POST, "/runs", Some(json!({ "run_id": "r1", "scenario": tiny() }))).await;
    assert_eq!(status, StatusCode::CONFLICT);

    let (status, v) = send_json(&app, Method::DELETE, "/runs/r1", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(v["deleted"], true);
    let (status, _) = send_json(&app, Method::GET, "/runs/r1", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let (status, _) = send_json(&app, Method::DELETE, "/runs/r1", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn what_if_runs_against_a_catalogue_scenario() {
    let app = app();
    let what_if = json!({
        "label": "relaxed",
        "base": "tiny",
        "net_overrides": [{ "a": "HVU", "b": "U1", "c": 4, "h": 10 }],
        "max_cycles": 2
    });
    let (status, v) = send_json(&app, Method::POST, "/runs", Some(json!({ "what_if": what_if }))).await;
    assert_eq!(status, StatusCode::ACCEPTED);
    let id = v["run_id"].as_str().unwrap().to_string();
    assert!(!id.is_empty());
    let done = wait_done(&app, &id).await;
    assert_eq!(done["label"], "relaxed");
    assert!(done["summary"]["cycles"].as_u64().unwrap() <= 2);

    let unknown = json!({ "what_if": { "label": "x", "base": "nope" } });
    let (status, _) = send_json(&app, Method::POST, "/runs", Some(unknown)).await;
    assert_eq!(status, StatusCode::NOT_FOUND);

    let bad_pair = json!({ "what_if": { "label": "x", "base": "tiny", "net_overrides": [{ "a": "HVU", "b": "U7", "c": 1, "h": 1 }] } });
    let (status, v) = send_json(&app, Method::POST, "/runs", Some(bad_pair)).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(v["field"], "net_overrides[0]");
}

#[tokio::test]
async fn bad_requests_name_the_problem() {
    let app = app();
    let mut invalid = tiny();
    invalid["weights"]["alpha_c"] = json!(0.9);
    let (status, v) = send_json(&app, Method::POST, "/runs", Some(json!({ "scenario": invalid }))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(v["field"], "weights");

    let mut unknown_key = tiny();
    unknown_key["bogus"] = json!(1);
    let (status, v) = send_json(&app, Method::POST, "/runs", Some(json!({ "scenario": unknown_key }))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert!(v["error"].as_str().unwrap().contains("bogus"));

    let mut asymmetric = tiny();
    asymmetric["net"][0][2] = json!([3, 10]);
    let (status, v) = send_json(&app, Method::POST, "/runs", Some(json!({ "scenario": asymmetric }))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert!(v["error"].as_str().unwrap().contains("(HVU, U2)"), "{v}");

    let (status, _) = send_json(&app, Method::POST, "/runs", Some(json!({}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, _) = send_json(&app, Method::POST, "/runs", Some(json!({ "scenario": tiny(), "what_if": {} }))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);

    let req = Request::builder()
        .method(Method::POST)
        .uri("/runs")
        .header("content-type", "application/json")
        .body(Body::from("{ not json"))
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    assert_eq!(resp.status(), StatusCode::BAD_REQUEST);

    let (status, _) = send_json(&app, Method::GET, "/runs/missing/cycles", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn least_recently_used_runs_are_evicted() {
    let app = app();
    let mut quick = tiny();
    quick["max_cycles"] = json!(1);
    for k in 0..RUN_RETENTION {
        let body = json!({ "run_id": format!("run-{k}"), "scenario": quick });
        assert_eq!(send_json(&app, Method::POST, "/runs", Some(body)).await.0, StatusCode::ACCEPTED);
        wait_done(&app, &format!("run-{k}")).await;
    }
    // Reading run-0 makes run-1 the least recently used.
    wait_done(&app, "run-0").await;
    let body = json!({ "run_id": "one-more", "scenario": quick });
    assert_eq!(send_json(&app, Method::POST, "/runs", Some(body)).await.0, StatusCode::ACCEPTED);

    assert_eq!(send_json(&app, Method::GET, "/runs/run-0", None).await.0, StatusCode::OK);
    assert_eq!(send_json(&app, Method::GET, "/runs/run-1", None).await.0, StatusCode::NOT_FOUND);
    assert_eq!(send_json(&app, Method::GET, "/runs/run-2", None).await.0, StatusCode::OK);
}
