//! Indexed access to decoded frames.
//!
//! Three sources share the [`FrameSource`] trait: `.avi`/`.mp4` videos decoded
//! by an external `ffmpeg`/`ffprobe` pair, directories of still images, and an
//! in-memory synthetic generator for tests and demos. Every source reports a
//! fixed frame count and frame size, and serves frames through a bounded LRU
//! cache so repeated lookups are bit-identical.

use std::io::Read;
use std::num::NonZeroUsize;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::sync::Arc;

use image::{Rgb, RgbImage};
use lru::LruCache;
use parking_lot::Mutex;
use serde::Serialize;
use thiserror::Error;

use crate::geometry::FrameDims;

pub const DEFAULT_CACHE_FRAMES: usize = 32;
pub const VIDEO_EXTENSIONS: [&str; 2] = ["avi", "mp4"];
pub const IMAGE_EXTENSIONS: [&str; 4] = ["png", "jpg", "jpeg", "bmp"];
/// Frames decoded per decoder invocation when a video frame misses the cache.
const READ_AHEAD: usize = 8;

#[derive(Debug, Error)]
pub enum SourceError {
    #[error("unsupported format: {0} (expected .avi, .mp4 or an image directory)")]
    UnsupportedFormat(PathBuf),
    #[error("no such file or directory: {0}")]
    NotFound(PathBuf),
    #[error("decode failure: {0}")]
    DecodeFailure(String),
    #[error("source contains no frames: {0}")]
    EmptySource(PathBuf),
    #[error("frame {index} is {found}, expected {expected}")]
    InconsistentDims {
        index: usize,
        expected: String,
        found: String,
    },
    #[error("frame index {index} out of range (frame count {count})")]
    IndexOutOfRange { index: usize, count: usize },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    Video,
    ImageDirectory,
    Synthetic,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SourceInfo {
    pub frame_count: usize,
    pub dims: FrameDims,
    pub kind: SourceKind,
    pub uri: PathBuf,
}

impl SourceInfo {
    /// File name without extension, or the directory name.
    pub fn stem(&self) -> String {
        let name = match self.kind {
            SourceKind::Video => self.uri.file_stem(),
            SourceKind::ImageDirectory | SourceKind::Synthetic => self.uri.file_name(),
        };
        name.map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "video".to_string())
    }
}

#[derive(Debug, Clone)]
pub struct Frame {
    pub index: usize,
    pub pixels: Arc<RgbImage>,
}

pub trait FrameSource: Send + Sync {
    fn info(&self) -> &SourceInfo;

    fn get_frame(&self, index: usize) -> Result<Frame, SourceError>;

    fn frame_count(&self) -> usize {
        self.info().frame_count
    }

    fn dims(&self) -> FrameDims {
        self.info().dims
    }
}

fn dims_of(width: u32, height: u32) -> Result<FrameDims, SourceError> {
    FrameDims::new(width, height).map_err(|e| SourceError::DecodeFailure(e.to_string()))
}

fn check_index(info: &SourceInfo, index: usize) -> Result<(), SourceError> {
    if index >= info.frame_count {
        Err(SourceError::IndexOutOfRange {
            index,
            count: info.frame_count,
        })
    } else {
        Ok(())
    }
}

/// Thread-safe LRU of decoded frames keyed by index.
pub struct FrameCache {
    inner: Mutex<LruCache<usize, Arc<RgbImage>>>,
}

impl FrameCache {
    pub fn new(capacity: usize) -> Self {
        let cap = NonZeroUsize::new(capacity).unwrap_or(NonZeroUsize::MIN);
        Self {
            inner: Mutex::new(LruCache::new(cap)),
        }
    }

    pub fn capacity(&self) -> usize {
        self.inner.lock().cap().get()
    }

    pub fn len(&self) -> usize {
        self.inner.lock().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, index: usize) -> Option<Arc<RgbImage>> {
        self.inner.lock().get(&index).cloned()
    }

    pub fn contains(&self, index: usize) -> bool {
        self.inner.lock().contains(&index)
    }

    pub fn insert(&self, index: usize, frame: Arc<RgbImage>) {
        self.inner.lock().put(index, frame);
    }

    fn get_or_load(
        &self,
        index: usize,
        load: impl FnOnce() -> Result<RgbImage, SourceError>,
    ) -> Result<Frame, SourceError> {
        if let Some(pixels) = self.get(index) {
            return Ok(Frame { index, pixels });
        }
        let pixels = Arc::new(load()?);
        self.insert(index, pixels.clone());
        Ok(Frame { index, pixels })
    }
}

/// External decoder programs. Defaults to `ffmpeg`/`ffprobe` on `PATH`,
/// overridable through `HORIZON_FFMPEG` and `HORIZON_FFPROBE`.
///
/// Probing runs
/// `ffprobe -v error -select_streams v:0 -show_entries frame=width,height -of csv=p=0 PATH`
/// and expects one `width,height` line per decoded frame. Frame extraction runs
/// `ffmpeg -v error -i PATH -vf select='between(n\,FIRST\,LAST)' -fps_mode passthrough
/// -frames:v COUNT -f rawvideo -pix_fmt rgb24 -` and reads raw RGB24 frames,
/// frame-major, from stdout.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FfmpegDecoder {
    pub ffmpeg: PathBuf,
    pub ffprobe: PathBuf,
}

impl Default for FfmpegDecoder {
    fn default() -> Self {
        let var = |name: &str, fallback: &str| {
            std::env::var_os(name)
                .map(PathBuf::from)
                .unwrap_or_else(|| PathBuf::from(fallback))
        };
        Self {
            ffmpeg: var("HORIZON_FFMPEG", "ffmpeg"),
            ffprobe: var("HORIZON_FFPROBE", "ffprobe"),
        }
    }
}

impl FfmpegDecoder {
    /// Per-frame dimensions, in decode order. Counting happens by a full
    /// decode, so container metadata is never trusted.
    pub fn frame_sizes(&self, path: &Path) -> Result<Vec<(u32, u32)>, SourceError> {
        let output = Command::new(&self.ffprobe)
            .args(["-v", "error", "-select_streams", "v:0"])
            .args(["-show_entries", "frame=width,height", "-of", "csv=p=0"])
            .arg(path)
            .stdin(Stdio::null())
            .output()
            .map_err(|e| {
                SourceError::DecodeFailure(format!("cannot run {}: {e}", self.ffprobe.display()))
            })?;
        if !output.status.success() {
            return Err(SourceError::DecodeFailure(format!(
                "{} exited with {}: {}",
                self.ffprobe.display(),
                output.status,
                String::from_utf8_lossy(&output.stderr).trim()
            )));
        }
        String::from_utf8_lossy(&output.stdout)
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(|line| {
                let mut parts = line.split(',').map(str::trim);
                let w = parts.next().and_then(|v| v.parse().ok());
                let h = parts.next().and_then(|v| v.parse().ok());
                w.zip(h).ok_or_else(|| {
                    SourceError::DecodeFailure(format!("unexpected probe line '{line}'"))
                })
            })
            .collect()
    }

    /// Decodes `count` consecutive frames starting at `first`.
    pub fn decode_range(
        &self,
        path: &Path,
        dims: FrameDims,
        first: usize,
        count: usize,
    ) -> Result<Vec<RgbImage>, SourceError> {
        let last = first + count - 1;
        let mut child = Command::new(&self.ffmpeg)
            .args(["-v", "error", "-i"])
            .arg(path)
            .arg("-vf")
            .arg(format!("select='between(n\\,{first}\\,{last})'"))
            .args(["-fps_mode", "passthrough", "-frames:v"])
            .arg(count.to_string())
            .args(["-f", "rawvideo", "-pix_fmt", "rgb24", "-"])
            .stdin(Stdio::null())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| {
                SourceError::DecodeFailure(format!("cannot run {}: {e}", self.ffmpeg.display()))
            })?;

        let frame_bytes = dims.width() as usize * dims.height() as usize * 3;
        let mut stdout = child.stdout.take().expect("piped stdout");
        let mut frames = Vec::with_capacity(count);
        let mut buf = vec![0u8; frame_bytes];
        while frames.len() < count {
            match stdout.read_exact(&mut buf) {
                Ok(()) => {
                    let img = RgbImage::from_raw(dims.width(), dims.height(), buf.clone())
                        .expect("buffer sized to frame");
                    frames.push(img);
                }
                Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => break,
                Err(e) => return Err(e.into()),
            }
        }
        drop(stdout);
        let output = child.wait_with_output()?;
        if frames.is_empty() {
            return Err(SourceError::DecodeFailure(format!(
                "no frame decoded at index {first}: {}",
                String::from_utf8_lossy(&output.stderr).trim()
            )));
        }
        Ok(frames)
    }
}

pub struct VideoSource {
    info: SourceInfo,
    decoder: FfmpegDecoder,
    cache: FrameCache,
}

impl VideoSource {
    pub fn open(
        path: &Path,
        decoder: FfmpegDecoder,
        cache_frames: usize,
    ) -> Result<Self, SourceError> {
        if !path.exists() {
            return Err(SourceError::NotFound(path.to_path_buf()));
        }
        if !has_extension(path, &VIDEO_EXTENSIONS) {
            return Err(SourceError::UnsupportedFormat(path.to_path_buf()));
        }
        let sizes = decoder.frame_sizes(path)?;
        let Some(&(w, h)) = sizes.first() else {
            return Err(SourceError::EmptySource(path.to_path_buf()));
        };
        if let Some((index, &(fw, fh))) = sizes.iter().enumerate().find(|(_, &s)| s != (w, h)) {
            return Err(SourceError::InconsistentDims {
                index,
                expected: format!("{w}x{h}"),
                found: format!("{fw}x{fh}"),
            });
        }
        Ok(Self {
            info: SourceInfo {
                frame_count: sizes.len(),
                dims: dims_of(w, h)?,
                kind: SourceKind::Video,
                uri: path.to_path_buf(),
            },
            decoder,
            cache: FrameCache::new(cache_frames),
        })
    }

    pub fn cache(&self) -> &FrameCache {
        &self.cache
    }
}

impl FrameSource for VideoSource {
    fn info(&self) -> &SourceInfo {
        &self.info
    }

    fn get_frame(&self, index: usize) -> Result<Frame, SourceError> {
        check_index(&self.info, index)?;
        if let Some(pixels) = self.cache.get(index) {
            return Ok(Frame { index, pixels });
        }
        let ahead = READ_AHEAD
            .min(self.cache.capacity())
            .min(self.info.frame_count - index)
            .max(1);
        let frames = self
            .decoder
            .decode_range(&self.info.uri, self.info.dims, index, ahead)?;
        let mut first = None;
        for (offset, img) in frames.into_iter().enumerate() {
            let pixels = Arc::new(img);
            if offset == 0 {
                first = Some(pixels);
            } else if !self.cache.contains(index + offset) {
                self.cache.insert(index + offset, pixels);
            }
        }
        let pixels = first.expect("at least one decoded frame");
        // requested frame goes in last so it is the most recently used
        self.cache.insert(index, pixels.clone());
        Ok(Frame { index, pixels })
    }
}

fn has_extension(path: &Path, allowed: &[&str]) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| allowed.iter().any(|a| a.eq_ignore_ascii_case(e)))
}

/// Still images in a directory, ordered lexicographically by file name.
pub struct ImageDirSource {
    info: SourceInfo,
    files: Vec<PathBuf>,
    cache: FrameCache,
}

impl ImageDirSource {
    pub fn open(dir: &Path, cache_frames: usize) -> Result<Self, SourceError> {
        if !dir.is_dir() {
            return Err(SourceError::NotFound(dir.to_path_buf()));
        }
        let mut files: Vec<PathBuf> = std::fs::read_dir(dir)?
            .filter_map(|e| e.ok())
            .map(|e| e.path())
            .filter(|p| p.is_file() && has_extension(p, &IMAGE_EXTENSIONS))
            .collect();
        files.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
        if files.is_empty() {
            return Err(SourceError::EmptySource(dir.to_path_buf()));
        }

        let mut expected = None;
        for (index, file) in files.iter().enumerate() {
            let (w, h) = image::image_dimensions(file)
                .map_err(|e| SourceError::DecodeFailure(format!("{}: {e}", file.display())))?;
            match expected {
                None => expected = Some((w, h)),
                Some((ew, eh)) if (ew, eh) != (w, h) => {
                    return Err(SourceError::InconsistentDims {
                        index,
                        expected: format!("{ew}x{eh}"),
                        found: format!("{w}x{h}"),
                    })
                }
                Some(_) => {}
            }
        }
        let (w, h) = expected.expect("non-empty");
        Ok(Self {
            info: SourceInfo {
                frame_count: files.len(),
                dims: dims_of(w, h)?,
                kind: SourceKind::ImageDirectory,
                uri: dir.to_path_buf(),
            },
            files,
            cache: FrameCache::new(cache_frames),
        })
    }

    pub fn files(&self) -> &[PathBuf] {
        &self.files
    }

    pub fn cache(&self) -> &FrameCache {
        &self.cache
    }
}

impl FrameSource for ImageDirSource {
    fn info(&self) -> &SourceInfo {
        &self.info
    }

    fn get_frame(&self, index: usize) -> Result<Frame, SourceError> {
        check_index(&self.info, index)?;
        self.cache.get_or_load(index, || {
            let file = &self.files[index];
            let img = image::open(file)
                .map_err(|e| SourceError::DecodeFailure(format!("{}: {e}", file.display())))?
                .to_rgb8();
            let dims = self.info.dims;
            if img.dimensions() != (dims.width(), dims.height()) {
                return Err(SourceError::InconsistentDims {
                    index,
                    expected: dims.to_string(),
                    found: format!("{}x{}", img.width(), img.height()),
                });
            }
            Ok(img)
        })
    }
}

/// Deterministic generated frames: a sky gradient over a darker sea, split by
/// a horizon that drifts slowly with the frame index.
pub struct SyntheticSource {
    info: SourceInfo,
    cache: FrameCache,
}

impl SyntheticSource {
    pub fn new(name: &str, frame_count: usize, dims: FrameDims) -> Result<Self, SourceError> {
        if frame_count == 0 {
            return Err(SourceError::EmptySource(PathBuf::from(name)));
        }
        Ok(Self {
            info: SourceInfo {
                frame_count,
                dims,
                kind: SourceKind::Synthetic,
                uri: PathBuf::from(name),
            },
            cache: FrameCache::new(DEFAULT_CACHE_FRAMES),
        })
    }

    /// Horizon height used when rendering frame `index`.
    pub fn horizon_at(&self, index: usize) -> f64 {
        let h = f64::from(self.info.dims.height());
        h * 0.45 + (index % 16) as f64
    }

    pub fn render(&self, index: usize) -> RgbImage {
        let dims = self.info.dims;
        let horizon = self.horizon_at(index);
        let h = dims.height();
        RgbImage::from_fn(dims.width(), h, |x, y| {
            let fy = f64::from(y);
            if fy < horizon {
                let t = (fy / horizon * 80.0) as u8;
                Rgb([120 + t, 170 + t / 2, 230])
            } else {
                let ripple = ((x / 7 + y / 3 + index as u32) % 9) as u8;
                Rgb([20 + ripple, 60 + ripple, 110 + ripple * 2])
            }
        })
    }

    /// Writes every frame as `frame_%06d.png` into `dir`.
    pub fn write_png_sequence(&self, dir: &Path) -> Result<Vec<PathBuf>, SourceError> {
        std::fs::create_dir_all(dir)?;
        (0..self.info.frame_count)
            .map(|i| {
                let path = dir.join(format!("frame_{i:06}.png"));
                self.render(i)
                    .save(&path)
                    .map_err(|e| SourceError::DecodeFailure(format!("{}: {e}", path.display())))?;
                Ok(path)
            })
            .collect()
    }
}

impl FrameSource for SyntheticSource {
    fn info(&self) -> &SourceInfo {
        &self.info
    }

    fn get_frame(&self, index: usize) -> Result<Frame, SourceError> {
        check_index(&self.info, index)?;
        self.cache.get_or_load(index, || Ok(self.render(index)))
    }
}

#[derive(Debug, Clone)]
pub struct SourceOptions {
    pub cache_frames: usize,
    pub decoder: FfmpegDecoder,
}

impl Default for SourceOptions {
    fn default() -> Self {
        Self {
            cache_frames: DEFAULT_CACHE_FRAMES,
            decoder: FfmpegDecoder::default(),
        }
    }
}

/// Probes `path` and opens the matching source: a directory becomes an image
/// sequence, `.avi`/`.mp4` a decoded video.
pub fn open_source(
    path: &Path,
    options: &SourceOptions,
) -> Result<Arc<dyn FrameSource>, SourceError> {
    if !path.exists() {
        return Err(SourceError::NotFound(path.to_path_buf()));
    }
    if path.is_dir() {
        return Ok(Arc::new(ImageDirSource::open(path, options.cache_frames)?));
    }
    if has_extension(path, &VIDEO_EXTENSIONS) {
        return Ok(Arc::new(VideoSource::open(
            path,
            options.decoder.clone(),
            options.cache_frames,
        )?));
    }
    Err(SourceError::UnsupportedFormat(path.to_path_buf()))
}

pub fn probe(path: &Path, options: &SourceOptions) -> Result<SourceInfo, SourceError> {
    open_source(path, options).map(|s| s.info().clone())
}
