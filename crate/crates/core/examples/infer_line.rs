//! Turns two clicked points into a full-width horizon line.
//!
//! Run with:
//!
//! ```not_rust
//! cargo run --example infer_line
//! cargo run --example infer_line -- 1920 1080 0 540 1919 440
//! ```

use horizon_gt::geometry::{self, FrameDims, Point, ScaleFactor};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<f64> = std::env::args()
        .skip(1)
        .map(|a| a.parse())
        .collect::<Result<_, _>>()?;
    let [w, h, x1, y1, x2, y2] = match args[..] {
        [] => [1920.0, 1080.0, 0.0, 540.0, 1919.0, 440.0],
        [w, h, x1, y1, x2, y2] => [w, h, x1, y1, x2, y2],
        _ => return Err("expected WIDTH HEIGHT X1 Y1 X2 Y2".into()),
    };
    let dims = FrameDims::new(w as u32, h as u32)?;
    let line = geometry::infer_full_line(Point::new(x1, y1), Point::new(x2, y2), dims)?;
    println!("frame {dims}, points ({x1}, {y1}) and ({x2}, {y2})");
    println!(
        "  Y   = {} px (height at column {})",
        line.position,
        dims.center_x()
    );
    println!("  phi = {:.5} deg", line.tilt);
    println!("  left border  ({}, {})", line.start.x, line.start.y);
    println!("  right border ({}, {})", line.end.x, line.end.y);

    // the same line rebuilt from its two parameters
    let rebuilt = geometry::line_from_params(line.position, line.tilt, dims)?;
    println!(
        "  from (Y, phi): left y = {}, right y = {}",
        rebuilt.start.y, rebuilt.end.y
    );

    // clicks on a half-size preview map back to original pixels
    let scale = geometry::compute_scale(dims, FrameDims::new(960, 540)?);
    let shown = geometry::original_to_display(Point::new(x1, y1), scale);
    let back = geometry::display_to_original(shown, scale);
    println!(
        "  preview scale {}: ({}, {}) shown at ({}, {})",
        scale.get(),
        back.x,
        back.y,
        shown.x,
        shown.y
    );
    assert_eq!(ScaleFactor::new(scale.get())?, scale);

    match geometry::infer_full_line(Point::new(10.0, 10.0), Point::new(10.0, 500.0), dims) {
        Err(e) => println!("vertical clicks are rejected: {e}"),
        Ok(_) => unreachable!(),
    }
    Ok(())
}
