//! Annotation session state machine.
//!
//! A [`Session`] owns one annotation slot per source frame, a cursor, and at
//! most one pending (drawn but not yet validated) line. The track length is
//! fixed when the session opens.

use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::frame_source::{FrameSource, SourceInfo};
use crate::geometry::{self, GeometryError, LineAnnotation, Point};
use crate::gt_format::{self, GtArray, GtFormatError, GtRow};

pub const DEFAULT_BROWSE_OFFSET: u32 = 1;
pub const DEFAULT_THICKNESS: u32 = 2;
/// Allowed disagreement between stored `(Y, phi)` and the endpoints.
pub const CONSISTENCY_TOLERANCE: f64 = 1e-3;
pub const GT_SUFFIX: &str = "LineGT.npy";
pub const MISSING_TEXT: &str = "???";

#[derive(Debug, Error)]
pub enum SessionError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("no line to validate: draw a line first")]
    NoPendingLine,
    #[error("the current frame has no annotation to replicate")]
    CurrentNotAnnotated,
    #[error("Invalid browsing offset \"{0}\": enter a positive integer")]
    InvalidOffset(String),
    #[error("Invalid line thickness \"{0}\": enter a positive integer")]
    InvalidThickness(String),
    #[error("GT file has {actual} rows but the video has {expected} frames")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("frame index {index} out of range (frame count {count})")]
    IndexOutOfRange { index: usize, count: usize },
    #[error("frame {frame}: stored line cannot be reconstructed")]
    UnusableRow { frame: usize },
    #[error("no GT file for '{stem}' in {dir}")]
    GtFileNotFound { stem: String, dir: PathBuf },
    #[error(transparent)]
    Format(#[from] GtFormatError),
    #[error("IoFailure: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Slot {
    annotation: Option<LineAnnotation>,
    hidden: bool,
}

impl Slot {
    pub fn annotation(&self) -> Option<&LineAnnotation> {
        self.annotation.as_ref()
    }

    pub fn is_annotated(&self) -> bool {
        self.annotation.is_some()
    }

    /// Overlay visibility only; never persisted.
    pub fn is_hidden(&self) -> bool {
        self.hidden
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Next,
    Previous,
}

impl std::str::FromStr for Direction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "next" => Ok(Self::Next),
            "previous" | "prev" => Ok(Self::Previous),
            _ => Err(format!("unknown direction '{s}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SaveOutcome {
    Saved {
        path: PathBuf,
        bytes: usize,
    },
    /// Nothing was written; save again with `force` to keep the gaps.
    IncompleteWarning {
        missing_count: usize,
    },
}

/// A loaded row whose `(Y, phi)` disagreed with its endpoints.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConsistencyWarning {
    pub frame: usize,
    pub stored_position: f64,
    pub stored_tilt: f64,
    pub position: f64,
    pub tilt: f64,
}

impl fmt::Display for ConsistencyWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "frame {}: stored Y={} phi={} disagree with endpoints (Y={} phi={}); endpoints kept",
            self.frame, self.stored_position, self.stored_tilt, self.position, self.tilt
        )
    }
}

fn parse_positive(raw: &str) -> Option<u32> {
    raw.trim().parse::<u32>().ok().filter(|v| *v > 0)
}

pub fn parse_browse_offset(raw: &str) -> Result<u32, SessionError> {
    parse_positive(raw).ok_or_else(|| SessionError::InvalidOffset(raw.to_string()))
}

pub fn parse_thickness(raw: &str) -> Result<u32, SessionError> {
    parse_positive(raw).ok_or_else(|| SessionError::InvalidThickness(raw.to_string()))
}

/// `<stem>_LineGT.npy`
pub fn gt_file_name(stem: &str) -> String {
    format!("{stem}_{GT_SUFFIX}")
}

/// Finds the GT file for `stem` in `dir`, accepting both `<stem>_LineGT.npy`
/// and `<stem>LineGT.npy`.
pub fn find_gt_file(dir: &Path, stem: &str) -> Option<PathBuf> {
    [gt_file_name(stem), format!("{stem}{GT_SUFFIX}")]
        .into_iter()
        .map(|name| dir.join(name))
        .find(|p| p.is_file())
}

pub struct Session {
    source: Arc<dyn FrameSource>,
    slots: Vec<Slot>,
    cursor: usize,
    pending: Option<(Point, Point)>,
    browse_offset: u32,
    thickness: u32,
    // Last saved or loaded annotations, and how many slots differ from it.
    baseline: Vec<Option<LineAnnotation>>,
    changed: usize,
}

impl fmt::Debug for Session {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Session")
            .field("source", self.source.info())
            .field("cursor", &self.cursor)
            .field("pending", &self.pending)
            .field("browse_offset", &self.browse_offset)
            .field("thickness", &self.thickness)
            .field("annotated", &self.annotated_count())
            .field("dirty", &self.is_dirty())
            .finish()
    }
}

impl Session {
    pub fn open(source: Arc<dyn FrameSource>) -> Self {
        let n = source.frame_count();
        Self {
            source,
            slots: vec![Slot::default(); n],
            cursor: 0,
            pending: None,
            browse_offset: DEFAULT_BROWSE_OFFSET,
            thickness: DEFAULT_THICKNESS,
            baseline: vec![None; n],
            changed: 0,
        }
    }

    pub fn source(&self) -> &Arc<dyn FrameSource> {
        &self.source
    }

    pub fn info(&self) -> &SourceInfo {
        self.source.info()
    }

    pub fn frame_count(&self) -> usize {
        self.slots.len()
    }

    pub fn cursor(&self) -> usize {
        self.cursor
    }

    pub fn pending(&self) -> Option<(Point, Point)> {
        self.pending
    }

    pub fn browse_offset(&self) -> u32 {
        self.browse_offset
    }

    pub fn thickness(&self) -> u32 {
        self.thickness
    }

    /// True iff the track differs from the last saved or loaded state.
    pub fn is_dirty(&self) -> bool {
        self.changed > 0
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    pub fn slot(&self, index: usize) -> Option<&Slot> {
        self.slots.get(index)
    }

    pub fn current_slot(&self) -> &Slot {
        &self.slots[self.cursor]
    }

    pub fn annotated_count(&self) -> usize {
        self.slots.iter().filter(|s| s.is_annotated()).count()
    }

    pub fn missing_count(&self) -> usize {
        self.frame_count() - self.annotated_count()
    }

    fn set_annotation(&mut self, index: usize, annotation: Option<LineAnnotation>) {
        let was_changed = self.slots[index].annotation != self.baseline[index];
        let slot = &mut self.slots[index];
        slot.annotation = annotation;
        slot.hidden = false;
        let now_changed = slot.annotation != self.baseline[index];
        match (was_changed, now_changed) {
            (false, true) => self.changed += 1,
            (true, false) => self.changed -= 1,
            _ => {}
        }
    }

    fn mark_clean(&mut self) {
        self.baseline = self.slots.iter().map(|s| s.annotation).collect();
        self.changed = 0;
    }

    /// Replaces the track with the rows of `array`.
    ///
    /// Rows whose stored position or tilt disagree with their endpoints are
    /// rebuilt from the endpoints and reported.
    pub fn load_gt(&mut self, array: &GtArray) -> Result<Vec<ConsistencyWarning>, SessionError> {
        if array.len() != self.frame_count() {
            return Err(SessionError::LengthMismatch {
                expected: self.frame_count(),
                actual: array.len(),
            });
        }
        let dims = self.info().dims;
        let mut warnings = Vec::new();
        let mut loaded = Vec::with_capacity(array.len());
        for (frame, row) in array.rows.iter().enumerate() {
            let Some(stored) = row.to_annotation() else {
                loaded.push(None);
                continue;
            };
            let rebuilt = geometry::extend_line(stored.start, stored.end, dims)
                .map_err(|_| SessionError::UnusableRow { frame })?;
            let agrees = (rebuilt.position - stored.position).abs() <= CONSISTENCY_TOLERANCE
                && (rebuilt.tilt - stored.tilt).abs() <= CONSISTENCY_TOLERANCE;
            if agrees {
                loaded.push(Some(stored));
            } else {
                warnings.push(ConsistencyWarning {
                    frame,
                    stored_position: stored.position,
                    stored_tilt: stored.tilt,
                    position: rebuilt.position,
                    tilt: rebuilt.tilt,
                });
                loaded.push(Some(rebuilt));
            }
        }
        for (slot, annotation) in self.slots.iter_mut().zip(loaded) {
            *slot = Slot {
                annotation,
                hidden: false,
            };
        }
        self.mark_clean();
        Ok(warnings)
    }

    /// Loads a GT file, or the GT file for this video when `path` is a directory.
    pub fn load_gt_file(&mut self, path: &Path) -> Result<Vec<ConsistencyWarning>, SessionError> {
        let file = if path.is_dir() {
            let stem = self.info().stem();
            find_gt_file(path, &stem).ok_or_else(|| SessionError::GtFileNotFound {
                stem,
                dir: path.to_path_buf(),
            })?
        } else {
            path.to_path_buf()
        };
        let reader = std::io::BufReader::new(std::fs::File::open(&file)?);
        let array = gt_format::read_gt(reader)?;
        self.load_gt(&array)
    }

    /// Stores `p1`, `p2` as the pending line and returns its full extent.
    pub fn set_pending(&mut self, p1: Point, p2: Point) -> Result<LineAnnotation, SessionError> {
        let line = geometry::infer_full_line(p1, p2, self.info().dims)?;
        self.pending = Some((p1, p2));
        Ok(line)
    }

    /// The pending line extended to the frame borders.
    pub fn pending_line(&self) -> Option<LineAnnotation> {
        let (p1, p2) = self.pending?;
        geometry::infer_full_line(p1, p2, self.info().dims).ok()
    }

    pub fn abort_pending(&mut self) {
        self.pending = None;
    }

    pub fn validate_line(&mut self) -> Result<LineAnnotation, SessionError> {
        let (p1, p2) = self.pending.ok_or(SessionError::NoPendingLine)?;
        let line = geometry::infer_full_line(p1, p2, self.info().dims)?;
        self.set_annotation(self.cursor, Some(line));
        self.pending = None;
        Ok(line)
    }

    /// Returns whether an annotation was removed.
    pub fn delete_annotation(&mut self) -> bool {
        if !self.current_slot().is_annotated() {
            return false;
        }
        self.set_annotation(self.cursor, None);
        true
    }

    /// Hides or shows the current frame's line. No-op on a missing slot.
    pub fn set_hidden(&mut self, hidden: bool) -> bool {
        let slot = &mut self.slots[self.cursor];
        if slot.is_annotated() {
            slot.hidden = hidden;
            true
        } else {
            false
        }
    }

    /// Copies the current annotation onto every earlier missing frame and
    /// returns how many were filled.
    pub fn replicate_backwards(&mut self) -> Result<usize, SessionError> {
        let line = self
            .current_slot()
            .annotation
            .ok_or(SessionError::CurrentNotAnnotated)?;
        let targets: Vec<usize> = (0..self.cursor)
            .filter(|&i| !self.slots[i].is_annotated())
            .collect();
        for &i in &targets {
            self.set_annotation(i, Some(line));
        }
        Ok(targets.len())
    }

    /// Moves by the browsing offset, clamped to the track. Returns whether the
    /// move was clamped.
    pub fn browse(&mut self, direction: Direction) -> bool {
        self.pending = None;
        let step = self.browse_offset as usize;
        let last = self.frame_count() - 1;
        match direction {
            Direction::Next => {
                let target = self.cursor.saturating_add(step);
                self.cursor = target.min(last);
                target > last
            }
            Direction::Previous => {
                let clamped = step > self.cursor;
                self.cursor = self.cursor.saturating_sub(step);
                clamped
            }
        }
    }

    pub fn go_to(&mut self, index: usize) -> Result<(), SessionError> {
        if index >= self.frame_count() {
            return Err(SessionError::IndexOutOfRange {
                index,
                count: self.frame_count(),
            });
        }
        self.pending = None;
        self.cursor = index;
        Ok(())
    }

    pub fn set_browse_offset(&mut self, raw: &str) -> Result<u32, SessionError> {
        self.browse_offset = parse_browse_offset(raw)?;
        Ok(self.browse_offset)
    }

    pub fn set_thickness(&mut self, raw: &str) -> Result<u32, SessionError> {
        self.thickness = parse_thickness(raw)?;
        Ok(self.thickness)
    }

    /// `Y=<v> px, phi=<v> deg` for the current frame, or `???`.
    pub fn current_annotation_text(&self) -> String {
        annotation_text(self.current_slot().annotation())
    }

    pub fn to_gt_array(&self) -> GtArray {
        GtArray::new(
            self.slots
                .iter()
                .map(|s| GtRow::from(s.annotation()))
                .collect(),
        )
    }

    pub fn gt_file_name(&self) -> String {
        gt_file_name(&self.info().stem())
    }

    /// Writes `<stem>_LineGT.npy` into `directory`.
    ///
    /// With missing frames and `force == false` nothing is written and the
    /// missing count is returned instead.
    pub fn save(&mut self, directory: &Path, force: bool) -> Result<SaveOutcome, SessionError> {
        let missing_count = self.missing_count();
        if missing_count > 0 && !force {
            return Ok(SaveOutcome::IncompleteWarning { missing_count });
        }
        let bytes = gt_format::encode_gt(&self.to_gt_array())?;
        let path = directory.join(self.gt_file_name());
        let tmp = directory.join(format!(".{}.tmp", self.gt_file_name()));
        std::fs::write(&tmp, &bytes)?;
        if let Err(e) = std::fs::rename(&tmp, &path) {
            let _ = std::fs::remove_file(&tmp);
            return Err(e.into());
        }
        self.mark_clean();
        Ok(SaveOutcome::Saved {
            path,
            bytes: bytes.len(),
        })
    }
}

pub fn annotation_text(annotation: Option<&LineAnnotation>) -> String {
    match annotation {
        Some(line) => format!("Y={:.2} px, phi={:.2} deg", line.position, line.tilt),
        None => MISSING_TEXT.to_string(),
    }
}
