//! Drives an annotation session the way the front end does: browse, draw,
//! validate, hide, delete, and reload a saved track.
//!
//! Run with:
//!
//! ```not_rust
//! cargo run --example annotate_session
//! ```

use std::sync::Arc;

use horizon_gt::frame_source::SyntheticSource;
use horizon_gt::session::Direction;
use horizon_gt::{FrameDims, Point, Session};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let source = Arc::new(SyntheticSource::new(
        "sea_trial",
        24,
        FrameDims::new(640, 360)?,
    )?);
    let mut session = Session::open(source.clone());

    // every fourth frame, clicking on the rendered horizon
    session.set_browse_offset("4")?;
    loop {
        let y = source.horizon_at(session.cursor());
        session.set_pending(Point::new(40.0, y), Point::new(600.0, y))?;
        session.validate_line()?;
        println!(
            "frame {:>2}: {}",
            session.cursor(),
            session.current_annotation_text()
        );
        if session.browse(Direction::Next) {
            break;
        }
    }
    println!(
        "annotated {} of {}, dirty = {}",
        session.annotated_count(),
        session.frame_count(),
        session.is_dirty()
    );

    if let Err(e) = session.set_browse_offset("two") {
        println!("rejected: {e} (offset stays {})", session.browse_offset());
    }

    session.go_to(8)?;
    session.set_hidden(true);
    println!("frame 8 hidden: {}", session.current_slot().is_hidden());
    session.go_to(0)?;
    session.delete_annotation();
    println!(
        "frame 0 after delete: {}",
        session.current_annotation_text()
    );

    let dir = tempfile::tempdir()?;
    session.save(dir.path(), true)?;
    let mut reopened = Session::open(source);
    let warnings = reopened.load_gt_file(dir.path())?;
    println!(
        "reloaded {}: {} annotated, {} warnings, hidden flags reset: {}",
        reopened.gt_file_name(),
        reopened.annotated_count(),
        warnings.len(),
        reopened.slots().iter().all(|s| !s.is_hidden())
    );
    Ok(())
}
