mod common;

use std::io::{Read, Write};
use std::net::{TcpListener, TcpStream};
use std::path::Path;
use std::process::{Command, Stdio};
use std::sync::Arc;
use std::time::{Duration, Instant};

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use common::{girthkit, json, ok, url_encode};
use girthkit::mesh::{mesh_from_bytes, MeshFormat, PlyEncoding};
use girthkit_app::config::MeasureDefaults;
use girthkit_app::server::{router, AppState};
use girthkit_app::store::Store;
use http_body_util::BodyExt;
use tower::ServiceExt;

const CUBE_PROBE: &str = r#"{"center":[0,0,0],"normal":[0,0,1],"rays":10000}"#;

fn app(data: &Path) -> Router {
    router(AppState {
        store: Arc::new(Store::open(data).unwrap()),
        measure: MeasureDefaults::default(),
    })
}

async fn call(app: &Router, method: Method, uri: &str, body: impl Into<Body>) -> (StatusCode, Vec<u8>) {
    let request = Request::builder().method(method).uri(uri).body(body.into()).unwrap();
    let response = app.clone().oneshot(request).await.unwrap();
    let status = response.status();
    (status, response.into_body().collect().await.unwrap().to_bytes().to_vec())
}

async fn get_json(app: &Router, uri: &str) -> (StatusCode, serde_json::Value) {
    let (status, body) = call(app, Method::GET, uri, Body::empty()).await;
    (status, json(std::str::from_utf8(&body).unwrap()))
}

/// Writes cube meshes with the CLI and returns the directory.
fn cubes() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["synth", "mesh", "--shape", "cube:15", "-o", "c15.ply"]);
    ok(dir.path(), &["synth", "mesh", "--shape", "cube:14", "-o", "c14.ply"]);
    dir
}

#[tokio::test]
async fn empty_store_and_unknown_model() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let (status, body) = get_json(&app, "/models").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body, serde_json::json!([]));
    for uri in ["/models/unknown", "/models/unknown/mesh"] {
        let (status, body) = get_json(&app, uri).await;
        assert_eq!(status, StatusCode::NOT_FOUND);
        assert_eq!(body["error"], "UnknownModel");
        assert!(body["message"].as_str().unwrap().contains("unknown"));
    }
    let (status, body) = call(&app, Method::POST, "/models/unknown/measure", CUBE_PROBE).await;
    assert_eq!(status, StatusCode::NOT_FOUND, "{}", String::from_utf8_lossy(&body));
    let (status, body) = get_json(&app, "/elsewhere").await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(body["error"], "NotFound");
}

#[tokio::test]
async fn served_measurement_equals_cli_bytes() {
    let dir = cubes();
    let d = dir.path();
    let app = app(&d.join("store"));
    let ply = std::fs::read(d.join("c15.ply")).unwrap();
    let (status, body) = call(&app, Method::PUT, "/models/cube-15", ply.clone()).await;
    assert_eq!(status, StatusCode::OK, "{}", String::from_utf8_lossy(&body));
    let (_, models) = get_json(&app, "/models").await;
    assert_eq!(models, serde_json::json!([{"id": "cube-15", "vertex_count": 8, "triangle_count": 12}]));

    let (status, served) = call(&app, Method::POST, "/models/cube-15/measure", CUBE_PROBE).await;
    assert_eq!(status, StatusCode::OK);
    let cli = ok(d, &["measure", "c15.ply", "--center", "0,0,0", "--normal", "0,0,1", "--rays", "10000"]);
    assert_eq!(String::from_utf8(served.clone()).unwrap(), cli);
    let served = json(std::str::from_utf8(&served).unwrap());
    assert!((served["perimeter_cm"].as_f64().unwrap() - 60.0).abs() < 0.3);

    let volume = r#"{"center":[0,0,7.5],"normal":[0,0,1],"radius":"auto","height":15,"h":1}"#;
    let (_, served) = call(&app, Method::POST, "/models/cube-15/measure", volume).await;
    let cli = ok(
        d,
        &["measure", "c15.ply", "--center", "0,0,7.5", "--normal", "0,0,1", "--radius", "auto", "--height", "15", "--h", "1"],
    );
    assert_eq!(String::from_utf8(served).unwrap(), cli);

    let (status, mesh) = call(&app, Method::GET, "/models/cube-15/mesh", Body::empty()).await;
    assert_eq!(status, StatusCode::OK);
    let served = mesh_from_bytes(&mesh, MeshFormat::Ply(PlyEncoding::BinaryLittleEndian), "served").unwrap();
    let local = mesh_from_bytes(&ply, MeshFormat::Ply(PlyEncoding::BinaryLittleEndian), "local").unwrap();
    assert_eq!(served.vertices(), local.vertices());
    assert_eq!(served.triangles(), local.triangles());
}

#[tokio::test]
async fn bad_requests() {
    let dir = cubes();
    let app = app(&dir.path().join("store"));
    call(&app, Method::PUT, "/models/c", std::fs::read(dir.path().join("c15.ply")).unwrap()).await;
    let cases = [
        ("{not json", StatusCode::BAD_REQUEST, "BadRequest"),
        (r#"{"center":[0,0,0],"normal":[0,0,1],"rays":4}"#, StatusCode::BAD_REQUEST, "InvalidParam"),
        (r#"{"center":[0,0,0],"normal":[0,0,2]}"#, StatusCode::BAD_REQUEST, "InvalidParam"),
        (r#"{"center":[0,0,90],"normal":[0,0,1],"radius":20}"#, StatusCode::UNPROCESSABLE_ENTITY, "NoSection"),
    ];
    for (body, status, kind) in cases {
        let (got, text) = call(&app, Method::POST, "/models/c/measure", body).await;
        assert_eq!(got, status, "{body}");
        assert_eq!(json(std::str::from_utf8(&text).unwrap())["error"], kind);
    }
    let (status, _) = call(&app, Method::PUT, "/models/c", "not a mesh").await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, _) = call(&app, Method::PUT, "/models/..", "ply").await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn session_series_over_http() {
    let dir = cubes();
    let d = dir.path();
    let app = app(&d.join("store"));
    for (id, file) in [("cube-15", "c15.ply"), ("cube-14", "c14.ply")] {
        call(&app, Method::PUT, &format!("/models/{id}"), std::fs::read(d.join(file)).unwrap()).await;
    }
    let (status, body) = get_json(&app, "/patients/p1/sessions").await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(body["error"], "UnknownPatient");

    let register = |ts: &str, model: &str, session: &str| {
        format!(r#"{{"timestamp":"{ts}","model_id":"{model}","session":"{session}","meta":{{"note":"x"}}}}"#)
    };
    let (status, body) =
        call(&app, Method::POST, "/patients/p1/sessions", register("2024-05-02T08:00:00Z", "cube-14", "b")).await;
    assert_eq!(status, StatusCode::CREATED, "{}", String::from_utf8_lossy(&body));
    let compare = format!("/patients/p1/compare?probe={}", url_encode(CUBE_PROBE));
    let (status, series) = get_json(&app, &compare).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(series.as_array().unwrap().len(), 1);

    call(&app, Method::POST, "/patients/p1/sessions", register("2024-05-01T08:00:00Z", "cube-15", "a")).await;
    let (status, _) =
        call(&app, Method::POST, "/patients/p1/sessions", register("2024-05-03T08:00:00Z", "cube-15", "a")).await;
    assert_eq!(status, StatusCode::CONFLICT);
    let (_, sessions) = get_json(&app, "/patients/p1/sessions").await;
    assert_eq!(
        sessions,
        serde_json::json!([
            {"session": "a", "timestamp": "2024-05-01T08:00:00Z", "model_id": "cube-15"},
            {"session": "b", "timestamp": "2024-05-02T08:00:00Z", "model_id": "cube-14"},
        ])
    );

    let (_, series) = get_json(&app, &format!("{compare}&sessions=b,a")).await;
    let points = series.as_array().unwrap();
    assert_eq!(points.len(), 2);
    assert_eq!(points[0]["session"], "a");
    for (p, truth) in points.iter().zip([60.0, 56.0]) {
        let got = p["perimeter_cm"].as_f64().unwrap();
        assert!((got - truth).abs() / truth < 0.005, "{series}");
        assert!(p["area_cm2"].as_f64().unwrap() > 0.0);
    }
    let (status, body) = get_json(&app, &format!("{compare}&sessions=a,zz")).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(body["error"], "UnknownSession");
    let (status, _) = get_json(&app, "/patients/p1/compare").await;
    assert_eq!(status, StatusCode::BAD_REQUEST);

    // a fresh service over the same directory sees the same sessions
    let restarted = self::app(&d.join("store"));
    let (_, again) = get_json(&restarted, &format!("{compare}&sessions=b,a")).await;
    assert_eq!(again, series);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_measurements_agree() {
    let dir = cubes();
    let app = app(&dir.path().join("store"));
    call(&app, Method::PUT, "/models/c", std::fs::read(dir.path().join("c15.ply")).unwrap()).await;
    let tasks: Vec<_> = (0..8)
        .map(|_| {
            let app = app.clone();
            tokio::spawn(async move { call(&app, Method::POST, "/models/c/measure", CUBE_PROBE).await })
        })
        .collect();
    let mut bodies = Vec::new();
    for t in tasks {
        let (status, body) = t.await.unwrap();
        assert_eq!(status, StatusCode::OK);
        bodies.push(body);
    }
    assert!(bodies.windows(2).all(|w| w[0] == w[1]));
}

fn http_get(addr: &str, path: &str) -> std::io::Result<String> {
    let mut stream = TcpStream::connect(addr)?;
    stream.set_read_timeout(Some(Duration::from_secs(10)))?;
    write!(stream, "GET {path} HTTP/1.1\r\nHost: {addr}\r\nConnection: close\r\n\r\n")?;
    let mut response = String::new();
    stream.read_to_string(&mut response)?;
    Ok(response)
}

#[test]
fn serve_binary_answers_and_rejects_busy_port() {
    let dir = tempfile::tempdir().unwrap();
    let free = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = free.local_addr().unwrap().to_string();
    drop(free);
    let mut child = Command::new(env!("CARGO_BIN_EXE_girthkit"))
        .args(["--data", dir.path().to_str().unwrap(), "serve", "--addr", &addr])
        .stdout(Stdio::null())
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    let start = Instant::now();
    let response = loop {
        match http_get(&addr, "/models") {
            Ok(r) => break r,
            Err(_) if start.elapsed() < Duration::from_secs(20) => std::thread::sleep(Duration::from_millis(50)),
            Err(e) => {
                child.kill().ok();
                panic!("service did not come up: {e}");
            }
        }
    };
    assert!(response.starts_with("HTTP/1.1 200"), "{response}");
    assert!(response.ends_with("[]"), "{response}");

    let busy = girthkit(dir.path(), &["serve", "--addr", &addr]);
    child.kill().unwrap();
    child.wait().unwrap();
    assert_eq!(busy.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&busy.stderr).contains("cannot bind"));
}

#[test]
fn unreadable_data_dir_fails_startup() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("not-a-dir");
    std::fs::write(&file, "x").unwrap();
    let out = girthkit(dir.path(), &["--data", file.to_str().unwrap(), "serve", "--addr", "127.0.0.1:0"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("cannot start service"));
}
