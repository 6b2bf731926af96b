//! Static-camera shortcut: annotate the last frame once and copy the line onto
//! every earlier frame, then save.
//!
//! Run with:
//!
//! ```not_rust
//! cargo run --example replicate_static_camera
//! ```

use std::sync::Arc;

use horizon_gt::frame_source::SyntheticSource;
use horizon_gt::session::SaveOutcome;
use horizon_gt::{FrameDims, Point, Session};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let source = Arc::new(SyntheticSource::new(
        "buoy_cam",
        150,
        FrameDims::new(1920, 1080)?,
    )?);
    let mut session = Session::open(source);
    let started = std::time::Instant::now();

    session.go_to(149)?;
    session.set_pending(Point::new(120.0, 612.0), Point::new(1800.0, 598.0))?;
    let line = session.validate_line()?;
    println!("frame 149: {}", session.current_annotation_text());

    let out = tempfile::tempdir()?;
    if let SaveOutcome::IncompleteWarning { missing_count } = session.save(out.path(), false)? {
        println!("save refused: {missing_count} frames still missing");
    }
    let filled = session.replicate_backwards()?;
    println!("replicated onto {filled} earlier frames");

    match session.save(out.path(), false)? {
        SaveOutcome::Saved { path, bytes } => println!("saved {} ({bytes} bytes)", path.display()),
        other => unreachable!("{other:?}"),
    }
    let gt = session.to_gt_array();
    assert!(gt.rows.iter().all(|r| r.position() == Some(line.position)));
    println!("{} identical rows in {:.2?}", gt.len(), started.elapsed());
    Ok(())
}
