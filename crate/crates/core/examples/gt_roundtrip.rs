//! Writes a GT track, reads it back, and exports it as CSV and JSON.
//!
//! Run with:
//!
//! ```not_rust
//! cargo run --example gt_roundtrip
//! ```

use horizon_gt::geometry::{self, FrameDims};
use horizon_gt::gt_format::{self, GtArray, GtRow, TextFormat};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dims = FrameDims::new(1280, 720)?;
    let rows = (0..6)
        .map(|i| {
            if i == 2 {
                Ok(GtRow::MISSING)
            } else {
                let line =
                    geometry::line_from_params(300.0 + 2.5 * i as f64, 0.4 * i as f64 - 1.0, dims)?;
                Ok(GtRow::from(&line))
            }
        })
        .collect::<Result<Vec<_>, geometry::GeometryError>>()?;
    let track = GtArray::new(rows);

    let dir = tempfile::tempdir()?;
    let path = dir.path().join("harbour_LineGT.npy");
    gt_format::write_gt(&track, std::fs::File::create(&path)?)?;
    let bytes = std::fs::read(&path)?;
    println!(
        "wrote {} ({} bytes, {} rows, {} missing)",
        path.display(),
        bytes.len(),
        track.len(),
        track.missing_count()
    );

    let back = gt_format::read_gt(std::fs::File::open(&path)?)?;
    assert_eq!(gt_format::encode_gt(&back)?, bytes);
    println!(
        "read back bit-identical; Y range {:?}",
        back.position_range()
    );

    let csv = gt_format::gt_to_text(&back, TextFormat::Csv);
    print!("\n{csv}");
    let json = gt_format::gt_to_text(&back, TextFormat::Json);
    println!("\n{json}");
    assert_eq!(
        gt_format::encode_gt(&gt_format::gt_from_text(&json, TextFormat::Json)?)?,
        bytes
    );

    let mut corrupt = bytes.clone();
    let last = corrupt.len() - 8;
    corrupt[last..].copy_from_slice(&f64::NAN.to_le_bytes());
    match gt_format::decode_gt(&corrupt) {
        Err(e) => println!("\nhalf-NaN row rejected: {e}"),
        Ok(_) => unreachable!(),
    }
    Ok(())
}
