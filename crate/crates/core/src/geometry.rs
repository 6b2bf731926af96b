//! Horizon line geometry.
//!
//! A horizon is stored as a position/tilt pair plus the two points where the
//! line crosses the left and right frame borders. Coordinates are pixels of the
//! original frame with `x` growing rightward and `y` growing downward. The
//! position `Y` is measured at the central column `(width - 1) / 2` and the tilt
//! is in degrees, positive when the line rotates anti-clockwise on screen.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Minimum horizontal separation of the two drawn points.
pub const MIN_DX: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("degenerate line: points are vertically aligned (|dx| = {dx:e} px)")]
    DegenerateLine { dx: f64 },
    #[error("point ({x}, {y}) lies outside the {width}x{height} frame")]
    OutOfFrame {
        x: f64,
        y: f64,
        width: u32,
        height: u32,
    },
    #[error("invalid tilt {phi} deg: the horizon cannot be vertical")]
    InvalidTilt { phi: f64 },
    #[error("invalid frame dimensions {width}x{height}: both must be at least 2")]
    InvalidDims { width: u32, height: u32 },
    #[error("invalid scale factor {0}: must lie in (0, 1]")]
    InvalidScale(f64),
    #[error("non-finite coordinate")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// Frame size in pixels. Both sides are at least 2 so a line always spans two
/// distinct columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawDims")]
pub struct FrameDims {
    width: u32,
    height: u32,
}

#[derive(Deserialize)]
struct RawDims {
    width: u32,
    height: u32,
}

impl TryFrom<RawDims> for FrameDims {
    type Error = GeometryError;

    fn try_from(raw: RawDims) -> Result<Self, Self::Error> {
        FrameDims::new(raw.width, raw.height)
    }
}

impl FrameDims {
    pub fn new(width: u32, height: u32) -> Result<Self, GeometryError> {
        if width < 2 || height < 2 {
            return Err(GeometryError::InvalidDims { width, height });
        }
        Ok(Self { width, height })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    /// x of the rightmost column.
    pub fn right_border(&self) -> f64 {
        f64::from(self.width - 1)
    }

    /// x of the central column, where `Y` is measured.
    pub fn center_x(&self) -> f64 {
        self.right_border() / 2.0
    }

    pub fn contains(&self, p: Point) -> bool {
        (0.0..=self.right_border()).contains(&p.x)
            && (0.0..=f64::from(self.height - 1)).contains(&p.y)
    }
}

impl std::fmt::Display for FrameDims {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}x{}", self.width, self.height)
    }
}

/// One frame's horizon annotation in original-frame pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineAnnotation {
    /// `Y`: line height at the central column.
    pub position: f64,
    /// `phi`: tilt in degrees.
    pub tilt: f64,
    /// Crossing of the left border (`x = 0`).
    pub start: Point,
    /// Crossing of the right border (`x = width - 1`).
    pub end: Point,
}

impl LineAnnotation {
    /// Height of the line at column `x`.
    pub fn y_at(&self, x: f64) -> f64 {
        interpolate(self.start, self.end, x)
    }
}

/// Down-scaling factor between the original frame and its on-screen copy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScaleFactor(f64);

impl ScaleFactor {
    pub const IDENTITY: ScaleFactor = ScaleFactor(1.0);

    pub fn new(s: f64) -> Result<Self, GeometryError> {
        if s.is_finite() && s > 0.0 && s <= 1.0 {
            Ok(Self(s))
        } else {
            Err(GeometryError::InvalidScale(s))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl Default for ScaleFactor {
    fn default() -> Self {
        Self::IDENTITY
    }
}

// Multiply before dividing so integer-valued inputs stay exact.
fn interpolate(a: Point, b: Point, x: f64) -> f64 {
    a.y + (b.y - a.y) * (x - a.x) / (b.x - a.x)
}

fn ordered(p1: Point, p2: Point) -> (Point, Point) {
    let key = |p: &Point| (p.x, p.y);
    if key(&p1) <= key(&p2) {
        (p1, p2)
    } else {
        (p2, p1)
    }
}

fn degrees_positive_zero(rad: f64) -> f64 {
    // -0.0 + 0.0 == +0.0, keeping horizontal tilts bit-identical to zero.
    rad.to_degrees() + 0.0
}

/// Extends the line through `p1` and `p2` to both vertical borders without
/// checking that the points lie inside the frame.
///
/// The result does not depend on the order of the two points.
pub fn extend_line(p1: Point, p2: Point, dims: FrameDims) -> Result<LineAnnotation, GeometryError> {
    if !p1.is_finite() || !p2.is_finite() {
        return Err(GeometryError::NonFinite);
    }
    let dx = p2.x - p1.x;
    if dx.abs() < MIN_DX {
        return Err(GeometryError::DegenerateLine { dx });
    }
    let (a, b) = ordered(p1, p2);
    let right = dims.right_border();
    let start = Point::new(0.0, interpolate(a, b, 0.0));
    let end = Point::new(right, interpolate(a, b, right));
    let slope = (b.y - a.y) / (b.x - a.x);
    Ok(LineAnnotation {
        position: interpolate(a, b, dims.center_x()),
        tilt: degrees_positive_zero(-slope.atan()),
        start,
        end,
    })
}

/// Infers the full horizon from two points drawn inside the frame.
///
/// Border endpoints may land above or below the frame for steep lines; they
/// are kept unclamped.
pub fn infer_full_line(
    p1: Point,
    p2: Point,
    dims: FrameDims,
) -> Result<LineAnnotation, GeometryError> {
    for p in [p1, p2] {
        if !p.is_finite() {
            return Err(GeometryError::NonFinite);
        }
        if !dims.contains(p) {
            return Err(GeometryError::OutOfFrame {
                x: p.x,
                y: p.y,
                width: dims.width,
                height: dims.height,
            });
        }
    }
    extend_line(p1, p2, dims)
}

/// Rebuilds the border endpoints from a position/tilt pair.
pub fn line_from_params(
    position: f64,
    tilt: f64,
    dims: FrameDims,
) -> Result<LineAnnotation, GeometryError> {
    if !position.is_finite() || !tilt.is_finite() {
        return Err(GeometryError::NonFinite);
    }
    if tilt.abs() >= 90.0 {
        return Err(GeometryError::InvalidTilt { phi: tilt });
    }
    let tan = tilt.to_radians().tan();
    let cx = dims.center_x();
    let y = |x: f64| position - tan * (x - cx);
    let right = dims.right_border();
    Ok(LineAnnotation {
        position,
        tilt,
        start: Point::new(0.0, y(0.0)),
        end: Point::new(right, y(right)),
    })
}

/// Position and tilt implied by two endpoints, measuring the position at the
/// endpoints' mid-column.
pub fn params_from_endpoints(start: Point, end: Point) -> Result<(f64, f64), GeometryError> {
    if !start.is_finite() || !end.is_finite() {
        return Err(GeometryError::NonFinite);
    }
    let dx = end.x - start.x;
    if dx.abs() < MIN_DX {
        return Err(GeometryError::DegenerateLine { dx });
    }
    let position = interpolate(start, end, (start.x + end.x) / 2.0);
    let tilt = degrees_positive_zero((start.y - end.y).atan2(dx));
    Ok((position, tilt))
}

/// Largest factor `<= 1` that fits `frame` inside `max_display`.
pub fn compute_scale(frame: FrameDims, max_display: FrameDims) -> ScaleFactor {
    let sx = f64::from(max_display.width) / f64::from(frame.width);
    let sy = f64::from(max_display.height) / f64::from(frame.height);
    ScaleFactor(1f64.min(sx).min(sy))
}

pub fn display_to_original(p: Point, s: ScaleFactor) -> Point {
    Point::new(p.x / s.0, p.y / s.0)
}

pub fn original_to_display(p: Point, s: ScaleFactor) -> Point {
    Point::new(p.x * s.0, p.y * s.0)
}
