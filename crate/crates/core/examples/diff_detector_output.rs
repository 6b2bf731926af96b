//! Scores a detector's horizon track against ground truth.
//!
//! Run with:
//!
//! ```not_rust
//! cargo run --example diff_detector_output
//! cargo run --example diff_detector_output -- GT.npy DETECTIONS.npy
//! ```

use horizon_gt::geometry::{self, FrameDims};
use horizon_gt::gt_format::{self, GtArray, GtRow};
use rand::{Rng, SeedableRng};

fn load(path: &str) -> Result<GtArray, Box<dyn std::error::Error>> {
    Ok(gt_format::read_gt(std::io::BufReader::new(
        std::fs::File::open(path)?,
    ))?)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let (truth, detected) = match &args[..] {
        [a, b] => (load(a)?, load(b)?),
        [] => simulated()?,
        _ => return Err("expected GT.npy DETECTIONS.npy".into()),
    };
    let report = gt_format::gt_diff(&truth, &detected)?;
    println!(
        "compared {} frames, skipped {}",
        report.compared_frames, report.skipped_frames
    );
    println!(
        "mean |dY|   {:.3} px   max {:.3} px",
        report.mean_abs_dy, report.max_abs_dy
    );
    println!(
        "mean |dphi| {:.3} deg  max {:.3} deg",
        report.mean_abs_dphi, report.max_abs_dphi
    );
    if let Some(worst) = report
        .per_frame
        .iter()
        .max_by(|a, b| a.abs_dy.total_cmp(&b.abs_dy))
    {
        println!("worst frame {}: |dY| = {:.3} px", worst.frame, worst.abs_dy);
    }
    Ok(())
}

/// Ground truth plus a noisy detector that misses every tenth frame.
fn simulated() -> Result<(GtArray, GtArray), geometry::GeometryError> {
    let dims = FrameDims::new(1920, 1080)?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    let mut truth = Vec::new();
    let mut detected = Vec::new();
    for i in 0..100 {
        let y = 500.0 + 20.0 * (i as f64 / 15.0).sin();
        let phi = 1.5 * (i as f64 / 23.0).cos();
        truth.push(GtRow::from(&geometry::line_from_params(y, phi, dims)?));
        detected.push(if i % 10 == 9 {
            GtRow::MISSING
        } else {
            let noisy = geometry::line_from_params(
                y + rng.gen_range(-4.0..4.0),
                phi + rng.gen_range(-0.3..0.3),
                dims,
            )?;
            GtRow::from(&noisy)
        });
    }
    Ok((GtArray::new(truth), GtArray::new(detected)))
}
