mod common;

use std::net::SocketAddr;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::extract::State;
use axum::http::{HeaderMap, StatusCode};
use axum::routing::post;
use axum::{Json, Router};
use common::fixture;
use serde_json::{json, Value};
use vqanle::gateway::{chat_body, RemoteConfig, RemoteGateway, Retrying};
use vqanle_core::gateway::{DecodingParams, Embedder, GatewayError, GenerationRequest, Generator};

#[derive(Default)]
struct Seen {
    bodies: Vec<Value>,
    auth: Vec<Option<String>>,
}

type Shared = Arc<Mutex<Seen>>;

async fn chat(State(seen): State<Shared>, headers: HeaderMap, Json(body): Json<Value>) -> (StatusCode, Json<Value>) {
    let mut s = seen.lock().unwrap();
    s.auth.push(headers.get("authorization").map(|v| v.to_str().unwrap().to_string()));
    s.bodies.push(body.clone());
    let prompt = body["messages"][0]["content"][0]["text"].as_str().unwrap_or("").to_string();
    let attempts = s.bodies.iter().filter(|b| b["messages"][0]["content"][0]["text"] == prompt.as_str()).count();
    match prompt.as_str() {
        "flaky" if attempts == 1 => (StatusCode::SERVICE_UNAVAILABLE, Json(json!({"error": "warming up"}))),
        "reject" => (StatusCode::BAD_REQUEST, Json(json!({"error": {"message": "prompt too long"}}))),
        _ => (StatusCode::OK, Json(json!({"choices": [{"index": 0, "message": {"role": "assistant", "content": format!("echo: {prompt}")}}]}))),
    }
}

async fn embeddings(Json(body): Json<Value>) -> Json<Value> {
    let n = body["input"].as_str().unwrap().len() as f64;
    Json(json!({"data": [{"index": 0, "embedding": [n, 1.0, 0.0]}], "model": body["model"]}))
}

fn start() -> (SocketAddr, Shared) {
    let seen: Shared = Arc::default();
    let app = Router::new().route("/v1/chat/completions", post(chat)).route("/v1/embeddings", post(embeddings)).with_state(seen.clone());
    let (tx, rx) = std::sync::mpsc::channel();
    std::thread::spawn(move || {
        let rt = tokio::runtime::Builder::new_current_thread().enable_all().build().unwrap();
        rt.block_on(async move {
            let l = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
            tx.send(l.local_addr().unwrap()).unwrap();
            axum::serve(l, app).await.unwrap();
        });
    });
    (rx.recv().unwrap(), seen)
}

fn gateway(addr: SocketAddr) -> RemoteGateway {
    RemoteGateway::new(RemoteConfig {
        base_url: format!("http://{addr}/v1/"),
        model: "llava-hf/llava-1.5-7b-hf".into(),
        token: Some("tok".into()),
        embedding_model: Some("embed-small".into()),
        timeout: Duration::from_secs(5),
    })
}

fn req(prompt: &str, image: Option<&str>) -> GenerationRequest {
    GenerationRequest { prompt: prompt.into(), image: image.map(String::from), params: DecodingParams::default().with_budget(20), tag: "t#0".into() }
}

#[test]
fn request_body_matches_pinned_wire_fixture() {
    let body = chat_body("llava-hf/llava-1.5-7b-hf", &req("Describe the image.", Some("iVBORw0KGgo=")));
    let pinned: Value = serde_json::from_str(&std::fs::read_to_string(fixture("wire/chat_request.json")).unwrap()).unwrap();
    assert_eq!(body, pinned);
}

#[test]
fn round_trip_against_local_server() {
    let (addr, seen) = start();
    let g = gateway(addr);
    assert_eq!(g.generate(&req("hello", Some("AAAA"))).unwrap(), "echo: hello");
    {
        let s = seen.lock().unwrap();
        assert_eq!(s.auth[0].as_deref(), Some("Bearer tok"));
        let b = &s.bodies[0];
        assert_eq!(b["model"], "llava-hf/llava-1.5-7b-hf");
        assert_eq!(b["max_tokens"], 20);
        assert_eq!(b["messages"][0]["content"][1]["image_url"]["url"], "data:image/png;base64,AAAA");
    }
    assert_eq!(g.embed("abcd").unwrap(), vec![4.0, 1.0, 0.0]);
}

#[test]
fn transient_status_is_retried_client_errors_are_not() {
    let (addr, seen) = start();
    let g = Retrying::new(gateway(addr), 3, Duration::from_millis(1));
    assert_eq!(g.generate(&req("flaky", None)).unwrap(), "echo: flaky");
    let before = seen.lock().unwrap().bodies.len();
    assert!(matches!(g.generate(&req("reject", None)), Err(GatewayError::Backend { .. })));
    assert_eq!(seen.lock().unwrap().bodies.len(), before + 1);
}
