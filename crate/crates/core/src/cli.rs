//! Command-line entry points.
//!
//! Exit codes: 0 on success, 1 when a file fails to parse or validate, 2 on
//! usage errors.

use std::ffi::OsString;
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use image::Rgb;
use serde_json::json;

use crate::api::{self, AppState, ServiceConfig};
use crate::frame_source::{self, SourceOptions, DEFAULT_CACHE_FRAMES};
use crate::gt_format::{self, format_g17, GtArray, GtFormatError, TextFormat};
use crate::render;
use crate::session::CONSISTENCY_TOLERANCE;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Parser)]
#[command(
    name = "horizon-gt",
    version,
    about = "Horizon-line ground-truth tools"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the annotation HTTP service.
    Serve {
        #[arg(long, env = "HORIZON_HOST", default_value = api::DEFAULT_HOST)]
        host: String,
        #[arg(long, env = "HORIZON_PORT", default_value_t = api::DEFAULT_PORT)]
        port: u16,
        #[arg(long, env = "HORIZON_VIDEO_ROOT")]
        video_root: PathBuf,
        #[arg(long, env = "HORIZON_CACHE_FRAMES", default_value_t = DEFAULT_CACHE_FRAMES as u64,
              value_parser = clap::value_parser!(u64).range(1..))]
        cache_frames: u64,
    },
    /// Summarize a GT file.
    GtInspect {
        file: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Check a GT file's layout, row count and internal consistency.
    GtValidate {
        file: PathBuf,
        /// Expected number of rows (video frame count).
        #[arg(long)]
        frames: Option<usize>,
    },
    /// Export a GT file as CSV or JSON.
    GtConvert {
        file: PathBuf,
        #[arg(long)]
        to: TextFormat,
        /// Output file; stdout when omitted.
        #[arg(short = 'o', long)]
        output: Option<PathBuf>,
    },
    /// Burn GT lines into frame images (`frame_%06d.png`).
    GtRender {
        video: PathBuf,
        gt: PathBuf,
        #[arg(short = 'o', long)]
        output: PathBuf,
        #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u32).range(1..))]
        thickness: u32,
        #[arg(long, default_value = "red", value_parser = render::parse_color)]
        color: Rgb<u8>,
    },
    /// Compare two GT files frame by frame.
    GtDiff {
        a: PathBuf,
        b: PathBuf,
        #[arg(long)]
        json: bool,
    },
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            if code == 0 {
                let _ = write!(out, "{text}");
            } else {
                let _ = write!(err, "{text}");
            }
            return code;
        }
    };
    let result = match cli.command {
        Command::Serve {
            host,
            port,
            video_root,
            cache_frames,
        } => serve(&host, port, &video_root, cache_frames as usize, out, err),
        Command::GtInspect { file, json } => inspect(&file, json, out),
        Command::GtValidate { file, frames } => validate(&file, frames, out),
        Command::GtConvert { file, to, output } => convert(&file, to, output.as_deref(), out),
        Command::GtRender {
            video,
            gt,
            output,
            thickness,
            color,
        } => render_frames(&video, &gt, &output, thickness, color, out),
        Command::GtDiff { a, b, json } => diff(&a, &b, json, out),
    };
    match result {
        Ok(code) => code,
        Err(message) => {
            let _ = writeln!(err, "error: {message}");
            EXIT_FAILURE
        }
    }
}

type CmdResult = Result<i32, String>;

fn read_file(path: &Path) -> Result<GtArray, GtFormatError> {
    let file = std::fs::File::open(path)?;
    gt_format::read_gt(std::io::BufReader::new(file))
}

fn load(path: &Path) -> Result<GtArray, String> {
    read_file(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn range_json(r: Option<(f64, f64)>) -> serde_json::Value {
    r.map_or(serde_json::Value::Null, |(lo, hi)| json!([lo, hi]))
}

fn range_text(r: Option<(f64, f64)>) -> String {
    r.map_or("none".to_string(), |(lo, hi)| {
        format!("[{}, {}]", format_g17(lo), format_g17(hi))
    })
}

fn io_err(e: std::io::Error) -> String {
    format!("IoFailure: {e}")
}

fn inspect(file: &Path, as_json: bool, out: &mut dyn Write) -> CmdResult {
    let gt = load(file)?;
    if as_json {
        let doc = json!({
            "schema": SCHEMA_VERSION,
            "file": file.display().to_string(),
            "frames": gt.len(),
            "annotated": gt.annotated_count(),
            "missing": gt.missing_count(),
            "y_range": range_json(gt.position_range()),
            "phi_range": range_json(gt.tilt_range()),
        });
        writeln!(out, "{}", serde_json::to_string_pretty(&doc).expect("json")).map_err(io_err)?;
    } else {
        writeln!(
            out,
            "file: {}\nframes: {}\nannotated: {}\nmissing: {}\nY range: {}\nphi range: {}",
            file.display(),
            gt.len(),
            gt.annotated_count(),
            gt.missing_count(),
            range_text(gt.position_range()),
            range_text(gt.tilt_range()),
        )
        .map_err(io_err)?;
    }
    Ok(EXIT_OK)
}

/// Lists every violation found in a GT file.
pub fn validation_errors(gt: &GtArray, expected_frames: Option<usize>) -> Vec<String> {
    let mut problems = Vec::new();
    if let Some(n) = expected_frames {
        if gt.len() != n {
            problems.push(format!("row count {} != expected {n}", gt.len()));
        }
    }
    for bad in gt.inconsistencies(CONSISTENCY_TOLERANCE) {
        let (y, phi) = bad.stored;
        problems.push(match bad.implied {
            Some((iy, iphi)) => format!(
                "frame {}: stored Y={} phi={} but endpoints imply Y={} phi={}",
                bad.frame,
                format_g17(y),
                format_g17(phi),
                format_g17(iy),
                format_g17(iphi)
            ),
            None => format!("frame {}: endpoints share a column", bad.frame),
        });
    }
    problems
}

fn validate(file: &Path, frames: Option<usize>, out: &mut dyn Write) -> CmdResult {
    let gt = load(file)?;
    let problems = validation_errors(&gt, frames);
    if problems.is_empty() {
        writeln!(
            out,
            "OK: {} rows, {} annotated",
            gt.len(),
            gt.annotated_count()
        )
        .map_err(io_err)?;
        Ok(EXIT_OK)
    } else {
        for p in &problems {
            writeln!(out, "{p}").map_err(io_err)?;
        }
        writeln!(out, "FAILED: {} violation(s)", problems.len()).map_err(io_err)?;
        Ok(EXIT_FAILURE)
    }
}

fn convert(file: &Path, to: TextFormat, output: Option<&Path>, out: &mut dyn Write) -> CmdResult {
    let gt = load(file)?;
    let text = gt_format::gt_to_text(&gt, to);
    match output {
        Some(path) => std::fs::write(path, text).map_err(io_err)?,
        None => write!(out, "{text}").map_err(io_err)?,
    }
    Ok(EXIT_OK)
}

fn render_frames(
    video: &Path,
    gt_path: &Path,
    output: &Path,
    thickness: u32,
    color: Rgb<u8>,
    out: &mut dyn Write,
) -> CmdResult {
    let gt = load(gt_path)?;
    let source =
        frame_source::open_source(video, &SourceOptions::default()).map_err(|e| e.to_string())?;
    if source.frame_count() != gt.len() {
        return Err(format!(
            "LengthMismatch: GT has {} rows but {} has {} frames",
            gt.len(),
            video.display(),
            source.frame_count()
        ));
    }
    std::fs::create_dir_all(output).map_err(io_err)?;
    for (index, row) in gt.rows.iter().enumerate() {
        let frame = source.get_frame(index).map_err(|e| e.to_string())?;
        let mut img = (*frame.pixels).clone();
        if let Some(line) = row.to_annotation() {
            render::draw_line(&mut img, &line, thickness, color);
        }
        let path = output.join(format!("frame_{index:06}.png"));
        img.save(&path)
            .map_err(|e| format!("{}: {e}", path.display()))?;
    }
    writeln!(out, "wrote {} frames to {}", gt.len(), output.display()).map_err(io_err)?;
    Ok(EXIT_OK)
}

fn diff(a: &Path, b: &Path, as_json: bool, out: &mut dyn Write) -> CmdResult {
    let (ga, gb) = (load(a)?, load(b)?);
    let report = gt_format::gt_diff(&ga, &gb).map_err(|e| e.to_string())?;
    if as_json {
        let mut doc = serde_json::to_value(&report).expect("json");
        doc["schema"] = json!(SCHEMA_VERSION);
        writeln!(out, "{}", serde_json::to_string_pretty(&doc).expect("json")).map_err(io_err)?;
    } else {
        writeln!(
            out,
            "frames: {}\ncompared: {}\nskipped: {}\nmean |dY|: {:.2} px\nmax |dY|: {:.2} px\nmean |dphi|: {:.2} deg\nmax |dphi|: {:.2} deg",
            ga.len(),
            report.compared_frames,
            report.skipped_frames,
            report.mean_abs_dy,
            report.max_abs_dy,
            report.mean_abs_dphi,
            report.max_abs_dphi,
        )
        .map_err(io_err)?;
    }
    Ok(EXIT_OK)
}

fn serve(
    host: &str,
    port: u16,
    video_root: &Path,
    cache_frames: usize,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> CmdResult {
    if !video_root.is_dir() {
        let _ = writeln!(
            err,
            "error: --video-root {} is not a directory",
            video_root.display()
        );
        return Ok(EXIT_USAGE);
    }
    let addr: SocketAddr = match format!("{host}:{port}").parse() {
        Ok(a) => a,
        Err(_) => {
            let _ = writeln!(err, "error: invalid --host '{host}'");
            return Ok(EXIT_USAGE);
        }
    };
    let mut config = ServiceConfig::new(video_root).map_err(io_err)?;
    config.source.cache_frames = cache_frames;

    let runtime = tokio::runtime::Runtime::new().map_err(io_err)?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind(addr)
            .await
            .map_err(|e| format!("cannot bind {addr}: {e}"))?;
        let local = listener.local_addr().map_err(io_err)?;
        writeln!(out, "listening on {local}").map_err(io_err)?;
        out.flush().map_err(io_err)?;
        let shutdown = async {
            let _ = tokio::signal::ctrl_c().await;
        };
        api::serve(listener, AppState::new(config), shutdown)
            .await
            .map_err(io_err)?;
        Ok(EXIT_OK)
    })
}
