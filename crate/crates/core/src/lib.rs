//! Horizon-line ground truth for maritime video.
//!
//! The crate covers the whole annotation pipeline:
//!
//! - [`geometry`]: two-point line inference, the position/tilt parameterization
//!   and display/original coordinate mapping.
//! - [`gt_format`]: the `N x 6` float64 GT array file, its CSV/JSON exports and
//!   GT-vs-GT error statistics.
//! - [`frame_source`]: indexed frame access for videos, image directories and
//!   synthetic sources.
//! - [`session`]: the annotation state machine (validate, delete, hide,
//!   replicate, browse, save, load).
//! - [`api`]: the HTTP service used by the browser client.
//! - [`cli`]: the `horizon-gt` command line.

pub mod api;
pub mod cli;
pub mod frame_source;
pub mod geometry;
pub mod gt_format;
pub mod render;
pub mod session;

pub use frame_source::{FrameSource, SourceInfo, SourceKind};
pub use geometry::{FrameDims, LineAnnotation, Point, ScaleFactor};
pub use gt_format::{GtArray, GtRow};
pub use session::{Direction, SaveOutcome, Session};
