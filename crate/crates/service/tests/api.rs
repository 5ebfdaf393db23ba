use std::sync::Arc;

use axum::body::Body;
use axum::http::{header, Request, StatusCode};
use axum::Router;
use gasp_core::engine::EngineConfig;
use gasp_service::{router, AppState, ServiceConfig};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

const PATIENT1: &str = include_str!("../../core/tests/fixtures/profiles/patient_01.lp");
const HYDRALAZINE: &str = "hydralazine_and_isosorbide_dinitrate";

fn app() -> Router {
    router(AppState::new(ServiceConfig::default()).unwrap())
}

async fn send(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let mut req = Request::builder().method(method).uri(uri);
    let body = match body {
        Some(v) => {
            req = req.header(header::CONTENT_TYPE, "application/json");
            Body::from(v.to_string())
        }
        None => Body::empty(),
    };
    raw(app, req.body(body).unwrap()).await
}

async fn raw(app: &Router, req: Request<Body>) -> (StatusCode, Value) {
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
}

async fn create(app: &Router, profile: &str) -> String {
    let (status, body) = send(app, "POST", "/sessions", Some(json!({ "profile": profile }))).await;
    assert_eq!(status, StatusCode::CREATED, "{body}");
    body["id"].as_str().unwrap().to_string()
}

fn check_body(class: &str) -> Option<Value> {
    Some(json!({ "treatment": HYDRALAZINE, "cor_class": class }))
}

#[tokio::test]
async fn physician_loop() {
    let app = app();
    let id = create(&app, PATIENT1).await;

    let (status, body) = send(&app, "POST", &format!("/sessions/{id}/check"), check_body("class_1")).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["verdict"], "rejected");
    assert_eq!(body["explanations"], json!([]));

    let (status, body) = send(&app, "POST", &format!("/sessions/{id}/check"), check_body("class_2a")).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["verdict"], "repairable_with_evidence");
    assert_eq!(
        body["explanations"],
        json!([{ "assumed_true": ["history(angioedema)", "contraindication(arbs)"], "assumed_false": [] }])
    );
    assert!(body["timings_ms"]["abduction"].is_number());

    let confirm = json!({ "confirm": ["history(angioedema)", "contraindication(arbs)"] });
    let (status, body) = send(&app, "POST", &format!("/sessions/{id}/evidence"), Some(confirm)).await;
    assert_eq!(status, StatusCode::OK);
    let facts: Vec<&str> = body["profile"]["facts"].as_array().unwrap().iter().map(|f| f.as_str().unwrap()).collect();
    assert!(facts.contains(&"history(angioedema)") && facts.contains(&"contraindication(arbs)"));
    assert!(body["timings_ms"].is_object());

    let (_, body) = send(&app, "POST", &format!("/sessions/{id}/check"), check_body("class_2a")).await;
    assert_eq!(body["verdict"], "compliant");

    let (status, body) = send(&app, "GET", &format!("/sessions/{id}/recommendations"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert!(body["recommendations"]
        .as_array()
        .unwrap()
        .contains(&json!({ "treatment": HYDRALAZINE, "cor_class": "class_2a" })));
    assert!(body["timings_ms"]["enumeration"].is_number());

    let (status, body) = send(&app, "GET", &format!("/sessions/{id}/profile"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["checks"], 3);
    assert_eq!(body["profile"]["record"]["measurements"]["lvef"], "16");
}

#[tokio::test]
async fn plain_text_upload() {
    let app = app();
    let req = Request::builder().method("POST").uri("/sessions").body(Body::from(PATIENT1)).unwrap();
    let (status, body) = raw(&app, req).await;
    assert_eq!(status, StatusCode::CREATED);
    assert!(body["profile"]["text"].as_str().unwrap().contains("evidence(accf_stage_c)."));
}

#[tokio::test]
async fn error_statuses() {
    let app = app();
    let (status, _) = send(&app, "POST", "/sessions", Some(json!({ "profile": "p :- q." }))).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    let (status, _) = send(&app, "POST", "/sessions", Some(json!({ "facts": PATIENT1 }))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);

    let unknown = uuid::Uuid::new_v4();
    let (status, body) = send(&app, "GET", &format!("/sessions/{unknown}/profile"), None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert!(body["error"].as_str().unwrap().contains("unknown session"));
    assert_eq!(send(&app, "GET", "/sessions/not-a-uuid/recommendations", None).await.0, StatusCode::NOT_FOUND);

    let id = create(&app, PATIENT1).await;
    let check = format!("/sessions/{id}/check");
    assert_eq!(send(&app, "POST", &check, check_body("class_9")).await.0, StatusCode::BAD_REQUEST);
    let bad = Some(json!({ "treatment": "aspirin", "cor_class": "class_1" }));
    assert_eq!(send(&app, "POST", &check, bad).await.0, StatusCode::BAD_REQUEST);
    let req = Request::builder().method("POST").uri(&check).body(Body::from("{not json")).unwrap();
    assert_eq!(raw(&app, req).await.0, StatusCode::BAD_REQUEST);

    let evidence = format!("/sessions/{id}/evidence");
    let outside = Some(json!({ "confirm": ["made_up(x)"] }));
    assert_eq!(send(&app, "POST", &evidence, outside).await.0, StatusCode::BAD_REQUEST);
    let unparsable = Some(json!({ "confirm": ["history("] }));
    assert_eq!(send(&app, "POST", &evidence, unparsable).await.0, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn depth_limit_is_a_server_error() {
    let config = ServiceConfig { engine: EngineConfig { depth_limit: 2 }, ..ServiceConfig::default() };
    let app = router(AppState::new(config).unwrap());
    let id = create(&app, PATIENT1).await;
    let (status, body) = send(&app, "POST", &format!("/sessions/{id}/check"), check_body("class_2a")).await;
    assert_eq!(status, StatusCode::INTERNAL_SERVER_ERROR);
    assert!(body["error"].as_str().unwrap().contains("depth"));
}

#[tokio::test]
async fn sessions_are_isolated_and_checks_stateless() {
    let app = app();
    let a = create(&app, PATIENT1).await;
    let b = create(&app, PATIENT1).await;
    assert_ne!(a, b);
    let confirm = json!({ "confirm": ["history(angioedema)", "contraindication(arbs)"] });
    send(&app, "POST", &format!("/sessions/{a}/evidence"), Some(confirm)).await;

    let (_, ra) = send(&app, "POST", &format!("/sessions/{a}/check"), check_body("class_2a")).await;
    let (_, rb) = send(&app, "POST", &format!("/sessions/{b}/check"), check_body("class_2a")).await;
    assert_eq!(ra["verdict"], "compliant");
    assert_eq!(rb["verdict"], "repairable_with_evidence");

    // same profile, different history: same report apart from timings
    let c = create(&app, PATIENT1).await;
    let (_, rc) = send(&app, "POST", &format!("/sessions/{c}/check"), check_body("class_2a")).await;
    let strip = |mut v: Value| {
        v.as_object_mut().unwrap().remove("timings_ms");
        v
    };
    assert_eq!(strip(rb.clone()), strip(rc));
    assert_eq!(rb["profile_hash"].as_str().unwrap().len(), 16);
}

#[tokio::test]
async fn concurrent_evidence_updates_all_apply() {
    let app = app();
    let id = create(&app, "evidence(accf_stage_c).").await;
    let atoms =
        ["diagnosis(diabetes)", "diagnosis(hypertension)", "evidence(angina)", "history(stroke)", "evidence(female)"];
    let tasks: Vec<_> = atoms
        .iter()
        .map(|a| {
            let app = app.clone();
            let uri = format!("/sessions/{id}/evidence");
            let body = json!({ "confirm": [a] });
            tokio::spawn(async move { send(&app, "POST", &uri, Some(body)).await.0 })
        })
        .collect();
    for t in tasks {
        assert_eq!(t.await.unwrap(), StatusCode::OK);
    }
    let (_, body) = send(&app, "GET", &format!("/sessions/{id}/profile"), None).await;
    let facts = body["profile"]["facts"].as_array().unwrap();
    for a in atoms {
        assert!(facts.contains(&json!(a)), "{a} lost");
    }
}

#[tokio::test]
async fn cors_headers() {
    let app = app();
    let req = Request::builder()
        .method("OPTIONS")
        .uri("/sessions")
        .header(header::ORIGIN, "http://localhost:5173")
        .header(header::ACCESS_CONTROL_REQUEST_METHOD, "POST")
        .body(Body::empty())
        .unwrap();
    let resp = app.oneshot(req).await.unwrap();
    assert_eq!(resp.headers().get(header::ACCESS_CONTROL_ALLOW_ORIGIN).unwrap(), "*");
}

#[tokio::test]
async fn sessions_survive_restart() {
    let dir = std::env::temp_dir().join(format!("gasp-service-{}", uuid::Uuid::new_v4()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("sessions.jsonl");
    let config = ServiceConfig { persist_path: Some(path.clone()), ..ServiceConfig::default() };

    let state = AppState::new(config.clone()).unwrap();
    let app = router(Arc::clone(&state));
    let id = create(&app, PATIENT1).await;
    let confirm = json!({ "confirm": ["history(angioedema)"] });
    send(&app, "POST", &format!("/sessions/{id}/evidence"), Some(confirm)).await;

    let restarted = AppState::new(config).unwrap();
    assert_eq!(restarted.session_count().await, 1);
    let (status, body) = send(&router(restarted), "GET", &format!("/sessions/{id}/profile"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert!(body["profile"]["facts"].as_array().unwrap().contains(&json!("history(angioedema)")));
    std::fs::remove_dir_all(dir).unwrap();
}
