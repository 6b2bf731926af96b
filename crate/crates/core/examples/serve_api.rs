//! Runs the annotation service and talks to it over HTTP.
//!
//! Without arguments a demo image sequence is generated, a short client
//! session runs against it and the server stops. With a directory argument
//! the service keeps serving that directory on 127.0.0.1:8750.
//!
//! Run with:
//!
//! ```not_rust
//! cargo run --example serve_api
//! cargo run --example serve_api -- /data/videos
//! ```

use std::net::SocketAddr;

use horizon_gt::api::{self, AppState, ServiceConfig};
use horizon_gt::frame_source::SyntheticSource;
use horizon_gt::FrameDims;
use serde_json::{json, Value};

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    if let Some(root) = std::env::args().nth(1) {
        let state = AppState::new(ServiceConfig::new(root.as_ref())?);
        let listener = tokio::net::TcpListener::bind(("127.0.0.1", api::DEFAULT_PORT)).await?;
        println!("listening on {}", listener.local_addr()?);
        api::serve(listener, state, async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
        return Ok(());
    }

    let root = tempfile::tempdir()?;
    SyntheticSource::new("dock", 10, FrameDims::new(1280, 720)?)?
        .write_png_sequence(&root.path().join("dock"))?;
    let addr: SocketAddr = "127.0.0.1:0".parse()?;
    let (local, stop, server) =
        api::spawn(addr, AppState::new(ServiceConfig::new(root.path())?)).await?;
    let base = format!("http://{local}");
    let http = reqwest::Client::new();
    println!("service on {base}");

    let created: Value = http
        .post(format!("{base}/sessions"))
        .json(&json!({"video_path": "dock"}))
        .send()
        .await?
        .json()
        .await?;
    let id = created["id"].as_str().ok_or("no id")?;
    println!("POST /sessions -> {created}");
    let session = format!("{base}/sessions/{id}");

    let png = http
        .get(format!("{session}/frames/0?scale=0.5"))
        .send()
        .await?
        .bytes()
        .await?;
    println!("GET frames/0?scale=0.5 -> {} PNG bytes", png.len());

    // points clicked on the half-size preview
    let pending: Value = http
        .post(format!("{session}/pending"))
        .json(&json!({"p1": {"x": 20, "y": 170}, "p2": {"x": 620, "y": 160}, "space": "display", "scale": 0.5}))
        .send()
        .await?
        .json()
        .await?;
    println!("POST pending -> original {}", pending["original"]);
    let validated: Value = http
        .post(format!("{session}/validate"))
        .send()
        .await?
        .json()
        .await?;
    println!("POST validate -> {}", validated["state"]["current_text"]);

    http.put(format!("{session}/cursor"))
        .json(&json!({"index": 9}))
        .send()
        .await?;
    let conflict = http.post(format!("{session}/replicate")).send().await?;
    println!("POST replicate on an empty frame -> {}", conflict.status());

    let save = http
        .post(format!("{session}/gt:save"))
        .json(&json!({"directory": ".", "force": true}))
        .send()
        .await?;
    println!("POST gt:save -> {} {}", save.status(), save.text().await?);

    stop.send(()).ok();
    server.await??;
    Ok(())
}
