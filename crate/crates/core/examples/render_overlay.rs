//! Burns annotated horizons into frame images for visual review.
//!
//! Run with:
//!
//! ```not_rust
//! cargo run --example render_overlay -- OUT_DIR
//! ```

use std::sync::Arc;

use horizon_gt::frame_source::SyntheticSource;
use horizon_gt::render;
use horizon_gt::{FrameDims, FrameSource, Point, Session};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args()
        .nth(1)
        .map(std::path::PathBuf::from)
        .unwrap_or_else(|| "overlay".into());
    let source = Arc::new(SyntheticSource::new(
        "overlay_demo",
        8,
        FrameDims::new(480, 270)?,
    )?);
    let mut session = Session::open(source.clone());
    for i in (0..8).filter(|i| i % 3 != 1) {
        session.go_to(i)?;
        let y = source.horizon_at(i);
        session.set_pending(Point::new(20.0, y + 6.0), Point::new(460.0, y - 6.0))?;
        session.validate_line()?;
    }

    let color = render::parse_color("#ffcc00")?;
    std::fs::create_dir_all(&out)?;
    for (i, slot) in session.slots().iter().enumerate() {
        let mut img = (*source.get_frame(i)?.pixels).clone();
        if let Some(line) = slot.annotation() {
            render::draw_line(&mut img, line, session.thickness(), color);
        }
        img.save(out.join(format!("frame_{i:06}.png")))?;
        println!(
            "frame {i}: {}",
            horizon_gt::session::annotation_text(slot.annotation())
        );
    }
    println!(
        "wrote {} frames to {}",
        session.frame_count(),
        out.display()
    );
    Ok(())
}
