//! Acceptance runner: one PASS/FAIL line per criterion, non-zero exit on any failure.

mod common;

use std::net::SocketAddr;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use horizon_gt::api::{self, AppState, ServiceConfig};
use horizon_gt::frame_source::SourceOptions;
use horizon_gt::geometry::{self, FrameDims, Point, ScaleFactor};
use horizon_gt::gt_format::{self, GtArray, GtFormatError, GtRow, QUIET_NAN_BITS};
use horizon_gt::session::{Direction, SaveOutcome, Session};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($msg)+));
        }
    };
}

const PAIRS: usize = 10_000;

fn random_dims(rng: &mut ChaCha8Rng) -> FrameDims {
    FrameDims::new(rng.gen_range(16..=3840), rng.gen_range(16..=2160)).unwrap()
}

fn random_point(rng: &mut ChaCha8Rng, dims: FrameDims) -> Point {
    Point::new(
        rng.gen_range(0.0..=dims.right_border()),
        rng.gen_range(0.0..=f64::from(dims.height() - 1)),
    )
}

/// Two in-frame points at least one column apart.
fn random_pair(rng: &mut ChaCha8Rng, dims: FrameDims) -> (Point, Point) {
    loop {
        let (a, b) = (random_point(rng, dims), random_point(rng, dims));
        if (a.x - b.x).abs() >= 1.0 {
            return (a, b);
        }
    }
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    // endpoints of steep lines lie far outside the frame; compare relative to magnitude there
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

fn geometry_suite() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001);
    let bits = |l: &geometry::LineAnnotation| {
        [l.position, l.tilt, l.start.x, l.start.y, l.end.x, l.end.y].map(f64::to_bits)
    };

    for _ in 0..PAIRS {
        let dims = random_dims(&mut rng);
        let (a, b) = random_pair(&mut rng, dims);
        let ab = geometry::infer_full_line(a, b, dims).map_err(|e| e.to_string())?;
        let ba = geometry::infer_full_line(b, a, dims).map_err(|e| e.to_string())?;
        ensure!(
            bits(&ab) == bits(&ba),
            "order invariance broken for {a:?} {b:?}"
        );
    }

    for _ in 0..PAIRS {
        let dims = random_dims(&mut rng);
        let (a, b) = random_pair(&mut rng, dims);
        let b = Point::new(b.x, a.y);
        let line = geometry::infer_full_line(a, b, dims).map_err(|e| e.to_string())?;
        ensure!(
            line.position == a.y
                && line.tilt.to_bits() == 0
                && line.start.y == a.y
                && line.end.y == a.y,
            "horizontal fixpoint broken at y={}: {line:?}",
            a.y
        );
    }

    for _ in 0..PAIRS {
        let dims = random_dims(&mut rng);
        let (a, b) = random_pair(&mut rng, dims);
        let (left, right) = if a.x < b.x { (a, b) } else { (b, a) };
        let line = geometry::infer_full_line(a, b, dims).map_err(|e| e.to_string())?;
        let expected = if right.y < left.y {
            line.tilt > 0.0
        } else if right.y > left.y {
            line.tilt < 0.0
        } else {
            line.tilt == 0.0
        };
        ensure!(
            expected,
            "phi sign wrong for {left:?} -> {right:?}: {}",
            line.tilt
        );
    }

    for _ in 0..PAIRS {
        let dims = random_dims(&mut rng);
        let (a, b) = random_pair(&mut rng, dims);
        let line = geometry::infer_full_line(a, b, dims).map_err(|e| e.to_string())?;
        let mid = (line.start.y + line.end.y) / 2.0;
        ensure!(
            close(mid, line.position, 1e-9),
            "midpoint {mid} != Y {}",
            line.position
        );
        let rebuilt = geometry::line_from_params(line.position, line.tilt, dims)
            .map_err(|e| e.to_string())?;
        ensure!(
            close(rebuilt.start.y, line.start.y, 1e-9) && close(rebuilt.end.y, line.end.y, 1e-9),
            "params round trip drifted: {line:?} vs {rebuilt:?}"
        );
        let (y, phi) =
            geometry::params_from_endpoints(line.start, line.end).map_err(|e| e.to_string())?;
        ensure!(
            close(y, line.position, 1e-9) && close(phi, line.tilt, 1e-9),
            "endpoint params drifted"
        );
    }

    for _ in 0..PAIRS {
        let dims = random_dims(&mut rng);
        let s = ScaleFactor::new(rng.gen_range(0.05..=1.0)).unwrap();
        let p = random_point(&mut rng, dims);
        let back = geometry::display_to_original(geometry::original_to_display(p, s), s);
        ensure!(
            (back.x - p.x).abs() <= 1e-9 && (back.y - p.y).abs() <= 1e-9,
            "scale round trip drifted at s={}",
            s.get()
        );
        let shown = Point::new(p.x * s.get(), p.y * s.get());
        let there = geometry::original_to_display(geometry::display_to_original(shown, s), s);
        ensure!(
            (there.x - shown.x).abs() <= 1e-9 && (there.y - shown.y).abs() <= 1e-9,
            "inverse scale round trip drifted"
        );
    }
    Ok(format!("5 properties x {PAIRS} pairs"))
}

fn worked_case() -> Check {
    let dims = FrameDims::new(1920, 1080).unwrap();
    let line = geometry::infer_full_line(Point::new(0.0, 540.0), Point::new(1919.0, 440.0), dims)
        .map_err(|e| e.to_string())?;
    ensure!(line.position == 490.0, "Y = {}", line.position);
    // analytic: phi = atan(100 / 1919) in degrees
    let analytic = (100.0f64 / 1919.0).atan().to_degrees();
    ensure!(
        (line.tilt - analytic).abs() < 1e-12,
        "phi {} vs analytic {analytic}",
        line.tilt
    );
    ensure!(
        (line.tilt - 2.98297).abs() < 1e-4,
        "phi {} not within 1e-4 of 2.98297",
        line.tilt
    );
    Ok(format!("Y={} phi={:.6}", line.position, line.tilt))
}

fn random_track(rng: &mut ChaCha8Rng) -> GtArray {
    let n = rng.gen_range(1..=500);
    let missing_rate = rng.gen_range(0.0..=1.0);
    let rows = (0..n)
        .map(|_| {
            if rng.gen_bool(missing_rate) {
                GtRow::MISSING
            } else {
                let mut cell = || loop {
                    let v = if rng.gen_bool(0.1) {
                        f64::from_bits(rng.gen())
                    } else {
                        rng.gen_range(-5000.0..5000.0)
                    };
                    if v.is_finite() {
                        return v;
                    }
                };
                GtRow::annotated([cell(), cell(), cell(), cell(), cell(), cell()]).unwrap()
            }
        })
        .collect();
    GtArray::new(rows)
}

fn raw_rows(array: &GtArray) -> Vec<[f64; 6]> {
    let missing = [f64::from_bits(QUIET_NAN_BITS); 6];
    array
        .rows
        .iter()
        .map(|r| r.values().copied().unwrap_or(missing))
        .collect()
}

fn format_suite() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0003);
    let mut rejected = 0;
    for t in 0..1000 {
        let track = random_track(&mut rng);
        let bytes = gt_format::encode_gt(&track).map_err(|e| e.to_string())?;
        ensure!(
            bytes.len() == track.encoded_len(),
            "track {t}: size mismatch"
        );
        let back = gt_format::decode_gt(&bytes).map_err(|e| format!("track {t}: {e}"))?;
        ensure!(
            gt_format::encode_gt(&back).unwrap() == bytes,
            "track {t}: re-encoding differs"
        );
        let cell_bits = |a: &GtArray| {
            raw_rows(a)
                .iter()
                .flatten()
                .map(|v| v.to_bits())
                .collect::<Vec<_>>()
        };
        ensure!(
            cell_bits(&back) == cell_bits(&track),
            "track {t}: values not bit-identical"
        );
        ensure!(
            common::npy_oracle::write(&raw_rows(&track)) == bytes,
            "track {t}: differs from reference writer"
        );
        ensure!(
            common::npy_oracle::read(&bytes).is_some(),
            "track {t}: reference reader rejects output"
        );

        // flip one cell of one row into the opposite class
        let row = rng.gen_range(0..track.len());
        let col = rng.gen_range(0..6);
        let mut values = raw_rows(&track);
        values[row][col] = if track.rows[row].is_missing() {
            1.25
        } else {
            f64::NAN
        };
        let corrupted = common::npy_oracle::write(&values);
        match gt_format::decode_gt(&corrupted) {
            Err(GtFormatError::MixedRow { row: r }) if r == row => rejected += 1,
            other => {
                return Err(format!(
                    "track {t}: mixed row {row} not rejected: {other:?}"
                ))
            }
        }
    }
    let one = gt_format::encode_gt(&GtArray::all_missing(1)).unwrap();
    ensure!(
        one.len() == 176 && one == common::npy_oracle::numpy_single_nan_row(),
        "N=1 file is {} bytes",
        one.len()
    );
    let five = gt_format::encode_gt(&GtArray::all_missing(5)).unwrap();
    ensure!(
        five.len() == 368 && common::npy_oracle::write(&[[f64::NAN; 6]; 5]) == five,
        "N=5 file is {} bytes",
        five.len()
    );
    Ok(format!(
        "1000 tracks bit-identical, {rejected} mixed rows rejected, N=1 176 B, N=5 368 B"
    ))
}

fn replication_scenario() -> Check {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let started = Instant::now();
    let mut s = Session::open(common::synthetic("clip", 150, 1920, 1080));
    s.go_to(149).map_err(|e| e.to_string())?;
    s.set_pending(Point::new(300.0, 610.0), Point::new(1500.0, 575.0))
        .map_err(|e| e.to_string())?;
    let line = s.validate_line().map_err(|e| e.to_string())?;
    let filled = s.replicate_backwards().map_err(|e| e.to_string())?;
    ensure!(filled == 149, "filled {filled} slots");
    let outcome = s.save(tmp.path(), false).map_err(|e| e.to_string())?;
    let elapsed = started.elapsed();
    ensure!(
        matches!(outcome, SaveOutcome::Saved { .. }),
        "save returned {outcome:?}"
    );
    let rows =
        common::npy_oracle::read(&std::fs::read(tmp.path().join("clip_LineGT.npy")).unwrap())
            .ok_or("saved file unreadable")?;
    let expected = GtRow::from(&line).values().unwrap().map(f64::to_bits);
    ensure!(
        rows.len() == 150 && rows.iter().all(|r| r.map(f64::to_bits) == expected),
        "rows are not 150 identical copies"
    );
    ensure!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
    Ok(format!(
        "149 filled, 150 identical rows, {:.1} ms",
        elapsed.as_secs_f64() * 1e3
    ))
}

fn session_suite() -> Check {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let dir = tmp.path();
    let annotate = |s: &mut Session, y: f64| -> Result<(), String> {
        s.set_pending(Point::new(50.0, y), Point::new(600.0, y + 20.0))
            .map_err(|e| e.to_string())?;
        s.validate_line().map(|_| ()).map_err(|e| e.to_string())
    };
    let mut s = Session::open(common::synthetic("seq", 8, 640, 360));
    for i in [0, 3, 5] {
        s.go_to(i).unwrap();
        annotate(&mut s, 100.0 + i as f64)?;
    }
    let outcome = s.save(dir, false).map_err(|e| e.to_string())?;
    ensure!(
        outcome == SaveOutcome::IncompleteWarning { missing_count: 5 },
        "got {outcome:?}"
    );
    ensure!(
        std::fs::read_dir(dir).unwrap().count() == 0,
        "incomplete save wrote a file"
    );

    s.save(dir, true).map_err(|e| e.to_string())?;
    let path = dir.join("seq_LineGT.npy");
    let plain = std::fs::read(&path).unwrap();
    let rows = common::npy_oracle::read(&plain).ok_or("unreadable")?;
    let nan_rows = rows
        .iter()
        .filter(|r| r.iter().all(|v| v.to_bits() == QUIET_NAN_BITS))
        .count();
    ensure!(nan_rows == 5, "{nan_rows} all-NaN rows, expected 5");

    let mut loaded = Session::open(common::synthetic("seq", 8, 640, 360));
    loaded.load_gt_file(dir).map_err(|e| e.to_string())?;
    ensure!(
        loaded
            .slots()
            .iter()
            .map(|x| x.annotation().copied())
            .eq(s.slots().iter().map(|x| x.annotation().copied())),
        "round trip changed slots"
    );

    for i in [0, 5] {
        s.go_to(i).unwrap();
        s.set_hidden(true);
    }
    s.save(dir, true).map_err(|e| e.to_string())?;
    ensure!(
        std::fs::read(&path).unwrap() == plain,
        "hidden flags changed the saved bytes"
    );

    s.go_to(0).unwrap();
    s.set_browse_offset("3").map_err(|e| e.to_string())?;
    ensure!(
        s.browse(Direction::Previous) && s.cursor() == 0,
        "no clamp at start"
    );
    s.go_to(6).unwrap();
    ensure!(
        s.browse(Direction::Next) && s.cursor() == 7,
        "no clamp at end"
    );
    ensure!(
        !s.browse(Direction::Previous) && s.cursor() == 4,
        "plain step flagged as clamped"
    );

    s.set_thickness("4").map_err(|e| e.to_string())?;
    for bad in ["0", "-1", "abc", "", "2.5"] {
        ensure!(
            s.set_browse_offset(bad).is_err() && s.set_thickness(bad).is_err(),
            "accepted '{bad}'"
        );
    }
    ensure!(
        s.browse_offset() == 3 && s.thickness() == 4,
        "invalid input changed settings"
    );
    Ok("incomplete/force/round-trip/hidden/clamp/settings".into())
}

struct Client {
    base: String,
    http: reqwest::Client,
}

impl Client {
    async fn call(&self, method: reqwest::Method, path: &str, body: Option<Value>) -> (u16, Value) {
        let mut req = self.http.request(method, format!("{}{path}", self.base));
        if let Some(body) = body {
            req = req.json(&body);
        }
        let resp = req.send().await.unwrap();
        let status = resp.status().as_u16();
        let bytes = resp.bytes().await.unwrap();
        (
            status,
            serde_json::from_slice(&bytes).unwrap_or(Value::Null),
        )
    }

    async fn bytes(&self, path: &str) -> (u16, Vec<u8>) {
        let resp = self
            .http
            .get(format!("{}{path}", self.base))
            .send()
            .await
            .unwrap();
        (resp.status().as_u16(), resp.bytes().await.unwrap().to_vec())
    }
}

async fn api_checks(c: &Client, root: &Path) -> Result<usize, String> {
    use reqwest::Method as M;
    let checked = std::cell::Cell::new(0usize);
    let expect = |what: &str, status: u16, want: u16, body: &Value| -> Result<(), String> {
        checked.set(checked.get() + 1);
        if status == want {
            Ok(())
        } else {
            Err(format!("{what}: HTTP {status}, expected {want}: {body}"))
        }
    };

    let (st, b) = c
        .call(
            M::POST,
            "/sessions",
            Some(json!({"video_path": "clip.mkv"})),
        )
        .await;
    expect("open .mkv", st, 422, &b)?;
    let (st, b) = c
        .call(
            M::POST,
            "/sessions",
            Some(json!({"video_path": "../x.mp4"})),
        )
        .await;
    expect("open traversal", st, 400, &b)?;
    let (st, b) = c
        .call(
            M::POST,
            "/sessions",
            Some(json!({"video_path": "clip.mp4"})),
        )
        .await;
    expect("open", st, 201, &b)?;
    ensure!(
        b["frame_count"] == 10 && b["width"] == 1920,
        "session body {b}"
    );
    let id = b["id"].as_str().unwrap().to_string();
    let s = |p: &str| format!("/sessions/{id}{p}");

    let (st, b) = c
        .call(
            M::GET,
            "/sessions/00000000-0000-0000-0000-000000000000",
            None,
        )
        .await;
    expect("unknown session", st, 404, &b)?;
    let (st, png) = c.bytes(&s("/frames/2?scale=0.5")).await;
    expect("frame", st, 200, &Value::Null)?;
    let img = image::load_from_memory(&png).map_err(|e| e.to_string())?;
    ensure!(
        (img.width(), img.height()) == (960, 540),
        "frame at 0.5 is {}x{}",
        img.width(),
        img.height()
    );
    let (st, b) = c.call(M::GET, &s("/frames/2?scale=1.5"), None).await;
    expect("scale 1.5", st, 422, &b)?;
    let (st, b) = c.call(M::GET, &s("/frames/10"), None).await;
    expect("frame out of range", st, 404, &b)?;

    let (st, b) = c.call(M::POST, &s("/replicate"), None).await;
    expect("replicate without annotation", st, 409, &b)?;
    let (st, b) = c.call(M::POST, &s("/validate"), None).await;
    expect("validate without pending", st, 409, &b)?;
    let pending = json!({"p1": {"x": 160, "y": 90}, "p2": {"x": 480, "y": 90}, "space": "display", "scale": 0.5});
    let (st, b) = c.call(M::POST, &s("/pending"), Some(pending)).await;
    expect("pending", st, 200, &b)?;
    ensure!(
        b["original"]["Y"] == 180.0 && b["original"]["phi"] == 0.0,
        "pending body {b}"
    );
    let (st, b) = c
        .call(
            M::POST,
            &s("/pending"),
            Some(json!({"p1": {"x": 9, "y": 1}, "p2": {"x": 9, "y": 80}})),
        )
        .await;
    expect("vertical pending", st, 422, &b)?;
    let (st, b) = c.call(M::DELETE, &s("/pending"), None).await;
    expect("abort pending", st, 200, &b)?;
    ensure!(b["state"]["pending"].is_null(), "pending survived abort");

    let (st, b) = c
        .call(M::PUT, &s("/cursor"), Some(json!({"index": 9})))
        .await;
    expect("cursor index", st, 200, &b)?;
    let (st, b) = c
        .call(M::PUT, &s("/cursor"), Some(json!({"index": 10})))
        .await;
    expect("cursor out of range", st, 422, &b)?;
    let (st, b) = c
        .call(M::PUT, &s("/cursor"), Some(json!({"direction": "next"})))
        .await;
    expect("browse", st, 200, &b)?;
    ensure!(
        b["clamped"] == true && b["state"]["cursor"] == 9,
        "browse body {b}"
    );
    let (st, b) = c
        .call(
            M::PUT,
            &s("/settings"),
            Some(json!({"browse_offset": "abc"})),
        )
        .await;
    expect("bad offset", st, 422, &b)?;
    ensure!(
        b["message"] == "Invalid browsing offset \"abc\": enter a positive integer",
        "message {b}"
    );
    let (st, b) = c
        .call(M::PUT, &s("/settings"), Some(json!({"thickness": "3"})))
        .await;
    expect("settings", st, 200, &b)?;

    let (st, b) = c.call(M::POST, &s("/pending"), Some(json!({"p1": {"x": 0, "y": 540}, "p2": {"x": 1919, "y": 440}, "expected_cursor": 4}))).await;
    expect("stale cursor", st, 409, &b)?;
    let (st, b) = c.call(M::POST, &s("/pending"), Some(json!({"p1": {"x": 0, "y": 540}, "p2": {"x": 1919, "y": 440}, "expected_cursor": 9}))).await;
    expect("pending at 9", st, 200, &b)?;
    let (st, b) = c.call(M::POST, &s("/validate"), None).await;
    expect("validate", st, 200, &b)?;
    ensure!(b["state"]["current"]["Y"] == 490.0, "validated body {b}");
    let (st, b) = c.call(M::POST, &s("/hide"), None).await;
    expect("hide", st, 200, &b)?;
    let (st, b) = c.call(M::POST, &s("/show"), None).await;
    expect("show", st, 200, &b)?;

    let gt_dir = root.join("gt");
    std::fs::create_dir_all(&gt_dir).unwrap();
    let (st, b) = c
        .call(M::POST, &s("/gt:save"), Some(json!({"directory": "gt"})))
        .await;
    expect("incomplete save", st, 409, &b)?;
    ensure!(
        b["missing_count"] == 9 && std::fs::read_dir(&gt_dir).unwrap().count() == 0,
        "incomplete save body {b}"
    );
    let (st, b) = c.call(M::POST, &s("/replicate"), None).await;
    expect("replicate", st, 200, &b)?;
    ensure!(b["filled"] == 9, "replicate body {b}");
    let (st, b) = c
        .call(M::POST, &s("/gt:save"), Some(json!({"directory": "gt"})))
        .await;
    expect("save", st, 200, &b)?;

    let hash = |state: &[u8], gt: &[u8]| {
        Sha256::new()
            .chain_update(state)
            .chain_update(gt)
            .finalize()
    };
    let h1 = hash(&c.bytes(&s("")).await.1, &c.bytes(&s("/gt")).await.1);
    for _ in 0..3 {
        c.bytes(&s("")).await;
        c.bytes(&s("/gt")).await;
        c.bytes(&s("/frames/5")).await;
    }
    let h2 = hash(&c.bytes(&s("")).await.1, &c.bytes(&s("/gt")).await.1);
    ensure!(h1 == h2, "GET requests changed the session state");
    checked.set(checked.get() + 1);

    let (st, downloaded) = c.bytes(&s("/gt")).await;
    expect("download", st, 200, &Value::Null)?;
    ensure!(
        downloaded == std::fs::read(gt_dir.join("clip_LineGT.npy")).unwrap(),
        "download differs from saved file"
    );

    let (st, b) = c.call(M::DELETE, &s("/annotation"), None).await;
    expect("delete", st, 200, &b)?;
    let (st, b) = c
        .call(M::POST, &s("/gt:load"), Some(json!({"path": "gt"})))
        .await;
    expect("load", st, 200, &b)?;
    ensure!(
        b["state"]["annotated_count"] == 10 && b["state"]["dirty"] == false,
        "load body {b}"
    );
    std::fs::write(
        root.join("short.npy"),
        gt_format::encode_gt(&GtArray::all_missing(3)).unwrap(),
    )
    .unwrap();
    let (st, b) = c
        .call(M::POST, &s("/gt:load"), Some(json!({"path": "short.npy"})))
        .await;
    expect("load wrong length", st, 422, &b)?;

    // detector output shifted down by 5 px on every frame
    let gt = gt_format::decode_gt(&downloaded).map_err(|e| e.to_string())?;
    let shifted = GtArray::new(
        gt.rows
            .iter()
            .map(|r| {
                let v = r.values().unwrap();
                GtRow::annotated([v[0] + 5.0, v[1], v[2], v[3], v[4] + 5.0, v[5] + 5.0]).unwrap()
            })
            .collect(),
    );
    let report = gt_format::gt_diff(&gt, &shifted).map_err(|e| e.to_string())?;
    ensure!(
        (report.mean_abs_dy - 5.0).abs() <= 1e-9,
        "mean |dY| = {}",
        report.mean_abs_dy
    );
    Ok(checked.get())
}

fn api_suite() -> Check {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let root = tmp.path().join("videos");
    std::fs::create_dir_all(&root).unwrap();
    common::fake_video(&root, "clip.mp4", "1920x1080*10");
    std::fs::write(root.join("clip.mkv"), "1920x1080*10").unwrap();
    let mut config = ServiceConfig::new(&root).map_err(|e| e.to_string())?;
    config.source = SourceOptions {
        cache_frames: 8,
        decoder: common::fake_decoder(&tmp.path().join("bin")),
    };
    let runtime = tokio::runtime::Runtime::new().map_err(|e| e.to_string())?;
    runtime.block_on(async {
        let addr: SocketAddr = "127.0.0.1:0".parse().unwrap();
        let (local, stop, task) = api::spawn(addr, AppState::new(config))
            .await
            .map_err(|e| e.to_string())?;
        let client = Client {
            base: format!("http://{local}"),
            http: reqwest::Client::new(),
        };
        let result = api_checks(&client, &root.canonicalize().unwrap()).await;
        let _ = stop.send(());
        let _ = task.await;
        result.map(|n| format!("{n} endpoint checks, gt-diff +5 px mean 5.00"))
    })
}

fn cli_suite() -> Check {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let dims = FrameDims::new(640, 360).unwrap();
    let track = GtArray::new(
        (0..12)
            .map(|i| {
                if i % 5 == 2 {
                    GtRow::MISSING
                } else {
                    GtRow::from(
                        &geometry::line_from_params(170.0 + i as f64, 0.3 * i as f64 - 1.0, dims)
                            .unwrap(),
                    )
                }
            })
            .collect(),
    );
    let a = tmp.path().join("a.npy");
    let b = tmp.path().join("b.npy");
    let junk = tmp.path().join("junk.npy");
    std::fs::write(&a, gt_format::encode_gt(&track).unwrap()).unwrap();
    let mut moved = track.clone();
    for row in &mut moved.rows {
        if let Some(v) = row.values().copied() {
            *row =
                GtRow::annotated([v[0] + 5.0, v[1], v[2], v[3], v[4] + 5.0, v[5] + 5.0]).unwrap();
        }
    }
    std::fs::write(&b, gt_format::encode_gt(&moved).unwrap()).unwrap();
    std::fs::write(&junk, b"garbage").unwrap();
    let (a, b, junk) = (
        a.to_str().unwrap(),
        b.to_str().unwrap(),
        junk.to_str().unwrap(),
    );

    let exe = env!("CARGO_BIN_EXE_horizon-gt");
    let run = |args: &[&str]| {
        Command::new(exe)
            .args(args)
            .output()
            .map_err(|e| e.to_string())
    };
    let deterministic: [&[&str]; 7] = [
        &["gt-inspect", a],
        &["gt-inspect", a, "--json"],
        &["gt-validate", a, "--frames", "12"],
        &["gt-convert", a, "--to", "csv"],
        &["gt-convert", a, "--to", "json"],
        &["gt-diff", a, b],
        &["gt-diff", a, b, "--json"],
    ];
    for args in deterministic {
        let (first, second) = (run(args)?, run(args)?);
        ensure!(
            first.status.code() == Some(0),
            "{args:?} exited {:?}",
            first.status.code()
        );
        ensure!(
            first.stdout == second.stdout && !first.stdout.is_empty(),
            "{args:?} output not deterministic"
        );
    }
    let diff = String::from_utf8(run(&["gt-diff", a, b])?.stdout).unwrap();
    ensure!(diff.contains("mean |dY|: 5.00 px"), "diff output: {diff}");

    let codes: [(&[&str], i32); 6] = [
        (&["gt-inspect", junk], 1),
        (&["gt-validate", a, "--frames", "11"], 1),
        (&["gt-diff", a, junk], 1),
        (&["gt-inspect"], 2),
        (&["gt-convert", a, "--to", "xml"], 2),
        (&["frobnicate"], 2),
    ];
    for (args, want) in codes {
        let code = run(args)?.status.code();
        ensure!(
            code == Some(want),
            "{args:?} exited {code:?}, expected {want}"
        );
    }
    Ok("7 commands deterministic, exit codes 0/1/2".into())
}

fn main() {
    let criteria: [Criterion; 7] = [
        ("geometry suite", geometry_suite),
        ("worked geometry case", worked_case),
        ("format suite", format_suite),
        ("replication scenario (150 frames)", replication_scenario),
        ("session suite", session_suite),
        ("API contract suite", api_suite),
        ("CLI determinism and exit codes", cli_suite),
    ];
    let started = Instant::now();
    let mut failures = 0;
    for (name, check) in criteria {
        let t = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|panic| {
            let msg = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let ms = t.elapsed().as_secs_f64() * 1e3;
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail} [{ms:.0} ms]"),
            Err(reason) => {
                failures += 1;
                println!("FAIL  {name}: {reason} [{ms:.0} ms]");
            }
        }
    }
    println!(
        "{} of 7 criteria passed in {:.1} s",
        7 - failures,
        started.elapsed().as_secs_f64()
    );
    if failures > 0 {
        std::process::exit(1);
    }
}
