//! Ground-truth array files.
//!
//! A track of `N` frames is stored as an `N x 6` little-endian `float64`
//! matrix in the version 1.0 `.npy` layout. Columns are, in order,
//! `Y, phi, x_s, x_e, y_s, y_e`. A frame without annotation is a row of six
//! NaNs; every other row is fully finite.

use std::fmt::Write as _;
use std::io::{self, Read, Write};
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::geometry::{self, LineAnnotation, Point};

pub const MAGIC: &[u8; 6] = b"\x93NUMPY";
pub const COLUMNS: usize = 6;
pub const COLUMN_NAMES: [&str; COLUMNS] = ["Y", "phi", "x_s", "x_e", "y_s", "y_e"];
const ROW_BYTES: usize = COLUMNS * 8;
const ALIGNMENT: usize = 64;
/// Quiet NaN written for every cell of a missing row.
pub const QUIET_NAN_BITS: u64 = 0x7FF8_0000_0000_0000;

#[derive(Debug, Error)]
pub enum GtFormatError {
    #[error("BadMagic: not an array file")]
    BadMagic,
    #[error("UnsupportedVersion: format version {major}.{minor} (only 1.0 is supported)")]
    UnsupportedVersion { major: u8, minor: u8 },
    #[error("BadHeader: {0}")]
    BadHeader(String),
    #[error("BadShape: expected (N, 6), found {0}")]
    BadShape(String),
    #[error("MixedRow: row {row} mixes NaN and finite values")]
    MixedRow { row: usize },
    #[error("InvalidRow: row {row} must be all NaN or all finite")]
    InvalidRow { row: usize },
    #[error("TruncatedData: expected {expected} data bytes, found {actual}")]
    TruncatedData { expected: usize, actual: usize },
    #[error("LengthMismatch: {left} rows vs {right} rows")]
    LengthMismatch { left: usize, right: usize },
    #[error("BadText: line {line}: {reason}")]
    BadText { line: usize, reason: String },
    #[error("IoFailure: {0}")]
    Io(#[from] io::Error),
}

impl GtFormatError {
    /// Stable variant name, used in CLI diagnostics.
    pub fn name(&self) -> &'static str {
        match self {
            Self::BadMagic => "BadMagic",
            Self::UnsupportedVersion { .. } => "UnsupportedVersion",
            Self::BadHeader(_) => "BadHeader",
            Self::BadShape(_) => "BadShape",
            Self::MixedRow { .. } => "MixedRow",
            Self::InvalidRow { .. } => "InvalidRow",
            Self::TruncatedData { .. } => "TruncatedData",
            Self::LengthMismatch { .. } => "LengthMismatch",
            Self::BadText { .. } => "BadText",
            Self::Io(_) => "IoFailure",
        }
    }
}

/// One row of the GT matrix: `None` for a missing frame.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GtRow(Option<[f64; COLUMNS]>);

impl GtRow {
    pub const MISSING: GtRow = GtRow(None);

    /// Builds an annotated row. Values must all be finite.
    pub fn annotated(values: [f64; COLUMNS]) -> Result<Self, [f64; COLUMNS]> {
        if values.iter().all(|v| v.is_finite()) {
            Ok(Self(Some(values)))
        } else {
            Err(values)
        }
    }

    /// Builds a row without checking finiteness. The writer rejects invalid rows.
    pub fn from_values_unchecked(values: [f64; COLUMNS]) -> Self {
        Self(Some(values))
    }

    pub fn values(&self) -> Option<&[f64; COLUMNS]> {
        self.0.as_ref()
    }

    pub fn is_missing(&self) -> bool {
        self.0.is_none()
    }

    pub fn position(&self) -> Option<f64> {
        self.0.map(|v| v[0])
    }

    pub fn tilt(&self) -> Option<f64> {
        self.0.map(|v| v[1])
    }

    /// Stored endpoints `(x_s, y_s)` and `(x_e, y_e)`.
    pub fn endpoints(&self) -> Option<(Point, Point)> {
        self.0
            .map(|v| (Point::new(v[2], v[4]), Point::new(v[3], v[5])))
    }

    /// Interprets the row as stored, without geometric checks.
    pub fn to_annotation(&self) -> Option<LineAnnotation> {
        self.0.map(|v| LineAnnotation {
            position: v[0],
            tilt: v[1],
            start: Point::new(v[2], v[4]),
            end: Point::new(v[3], v[5]),
        })
    }

    fn classify(values: [f64; COLUMNS], row: usize) -> Result<Self, GtFormatError> {
        if values.iter().all(|v| v.is_nan()) {
            Ok(Self::MISSING)
        } else if values.iter().all(|v| v.is_finite()) {
            Ok(Self(Some(values)))
        } else {
            Err(GtFormatError::MixedRow { row })
        }
    }
}

impl From<&LineAnnotation> for GtRow {
    fn from(line: &LineAnnotation) -> Self {
        Self(Some([
            line.position,
            line.tilt,
            line.start.x,
            line.end.x,
            line.start.y,
            line.end.y,
        ]))
    }
}

impl From<Option<&LineAnnotation>> for GtRow {
    fn from(line: Option<&LineAnnotation>) -> Self {
        line.map_or(Self::MISSING, Self::from)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct GtArray {
    pub rows: Vec<GtRow>,
}

impl GtArray {
    pub fn new(rows: Vec<GtRow>) -> Self {
        Self { rows }
    }

    pub fn all_missing(n: usize) -> Self {
        Self {
            rows: vec![GtRow::MISSING; n],
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn annotated_count(&self) -> usize {
        self.rows.iter().filter(|r| !r.is_missing()).count()
    }

    pub fn missing_count(&self) -> usize {
        self.len() - self.annotated_count()
    }

    fn column_range(&self, col: usize) -> Option<(f64, f64)> {
        self.rows
            .iter()
            .filter_map(|r| r.values().map(|v| v[col]))
            .fold(None, |acc, v| match acc {
                None => Some((v, v)),
                Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
            })
    }

    pub fn position_range(&self) -> Option<(f64, f64)> {
        self.column_range(0)
    }

    pub fn tilt_range(&self) -> Option<(f64, f64)> {
        self.column_range(1)
    }

    /// Serialized size in bytes.
    pub fn encoded_len(&self) -> usize {
        preamble_len(&header_dict(self.len())) + self.len() * ROW_BYTES
    }

    /// Annotated rows whose stored `(Y, phi)` disagree with their endpoints by
    /// more than `tolerance`.
    pub fn inconsistencies(&self, tolerance: f64) -> Vec<Inconsistency> {
        self.rows
            .iter()
            .enumerate()
            .filter_map(|(frame, row)| {
                let v = row.values()?;
                let (start, end) = row.endpoints()?;
                let implied = geometry::params_from_endpoints(start, end).ok();
                let consistent = implied.is_some_and(|(y, phi)| {
                    (y - v[0]).abs() <= tolerance && (phi - v[1]).abs() <= tolerance
                });
                (!consistent).then_some(Inconsistency {
                    frame,
                    stored: (v[0], v[1]),
                    implied,
                })
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Inconsistency {
    pub frame: usize,
    pub stored: (f64, f64),
    /// `None` when the endpoints share a column.
    pub implied: Option<(f64, f64)>,
}

fn header_dict(rows: usize) -> String {
    format!("{{'descr': '<f8', 'fortran_order': False, 'shape': ({rows}, {COLUMNS}), }}")
}

fn preamble_len(dict: &str) -> usize {
    // magic + version + u16 length + dict + '\n'
    let unpadded = MAGIC.len() + 2 + 2 + dict.len() + 1;
    unpadded.div_ceil(ALIGNMENT) * ALIGNMENT
}

/// Writes `array` and returns the number of bytes emitted.
pub fn write_gt<W: Write>(array: &GtArray, mut sink: W) -> Result<usize, GtFormatError> {
    for (row, r) in array.rows.iter().enumerate() {
        if let Some(v) = r.values() {
            if !v.iter().all(|x| x.is_finite()) {
                return Err(GtFormatError::InvalidRow { row });
            }
        }
    }

    let dict = header_dict(array.len());
    let preamble = preamble_len(&dict);
    let header_len = preamble - (MAGIC.len() + 4);
    let header_len_field = u16::try_from(header_len).map_err(|_| {
        GtFormatError::BadHeader(format!("header of {header_len} bytes is too long"))
    })?;

    let mut buf = Vec::with_capacity(preamble + array.len() * ROW_BYTES);
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&[1, 0]);
    buf.extend_from_slice(&header_len_field.to_le_bytes());
    buf.extend_from_slice(dict.as_bytes());
    buf.resize(preamble - 1, b' ');
    buf.push(b'\n');
    for row in &array.rows {
        match row.values() {
            Some(values) => values
                .iter()
                .for_each(|v| buf.extend_from_slice(&v.to_le_bytes())),
            None => (0..COLUMNS).for_each(|_| buf.extend_from_slice(&QUIET_NAN_BITS.to_le_bytes())),
        }
    }
    sink.write_all(&buf)?;
    sink.flush()?;
    Ok(buf.len())
}

pub fn encode_gt(array: &GtArray) -> Result<Vec<u8>, GtFormatError> {
    let mut out = Vec::with_capacity(array.encoded_len());
    write_gt(array, &mut out)?;
    Ok(out)
}

fn read_up_to<R: Read>(source: &mut R, buf: &mut [u8]) -> io::Result<usize> {
    let mut filled = 0;
    while filled < buf.len() {
        match source.read(&mut buf[filled..]) {
            Ok(0) => break,
            Ok(n) => filled += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e),
        }
    }
    Ok(filled)
}

pub fn read_gt<R: Read>(mut source: R) -> Result<GtArray, GtFormatError> {
    let mut lead = [0u8; 8];
    let got = read_up_to(&mut source, &mut lead)?;
    if got < MAGIC.len() || &lead[..MAGIC.len()] != MAGIC {
        return Err(GtFormatError::BadMagic);
    }
    if got < lead.len() {
        return Err(GtFormatError::BadHeader("missing version bytes".into()));
    }
    let (major, minor) = (lead[6], lead[7]);
    if (major, minor) != (1, 0) {
        return Err(GtFormatError::UnsupportedVersion { major, minor });
    }

    let mut len_field = [0u8; 2];
    if read_up_to(&mut source, &mut len_field)? < 2 {
        return Err(GtFormatError::BadHeader("missing header length".into()));
    }
    let header_len = usize::from(u16::from_le_bytes(len_field));
    let mut header = vec![0u8; header_len];
    if read_up_to(&mut source, &mut header)? < header_len {
        return Err(GtFormatError::BadHeader(
            "header shorter than declared".into(),
        ));
    }
    let header = std::str::from_utf8(&header)
        .map_err(|_| GtFormatError::BadHeader("header is not ASCII".into()))?;
    let rows = parse_header(header)?;

    let expected = rows
        .checked_mul(ROW_BYTES)
        .ok_or_else(|| GtFormatError::BadShape(format!("({rows}, {COLUMNS})")))?;
    let mut data = Vec::new();
    source.take(expected as u64).read_to_end(&mut data)?;
    if data.len() < expected {
        return Err(GtFormatError::TruncatedData {
            expected,
            actual: data.len(),
        });
    }

    let rows = data
        .chunks_exact(ROW_BYTES)
        .enumerate()
        .map(|(i, chunk)| {
            let mut values = [0f64; COLUMNS];
            for (v, bytes) in values.iter_mut().zip(chunk.chunks_exact(8)) {
                *v = f64::from_le_bytes(bytes.try_into().expect("8-byte chunk"));
            }
            GtRow::classify(values, i)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(GtArray { rows })
}

pub fn decode_gt(bytes: &[u8]) -> Result<GtArray, GtFormatError> {
    read_gt(bytes)
}

// Python literal subset used by array headers.
#[derive(Debug, Clone, PartialEq)]
enum Literal {
    Str(String),
    Bool(bool),
    Int(u64),
    Tuple(Vec<Literal>),
}

struct LiteralParser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> LiteralParser<'a> {
    fn new(src: &'a str) -> Self {
        Self {
            src: src.as_bytes(),
            pos: 0,
        }
    }

    fn err(&self, what: &str) -> GtFormatError {
        GtFormatError::BadHeader(format!("{what} at offset {}", self.pos))
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expect(&mut self, c: u8) -> Result<(), GtFormatError> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(&format!("expected '{}'", c as char)))
        }
    }

    fn dict(&mut self) -> Result<Vec<(String, Literal)>, GtFormatError> {
        self.expect(b'{')?;
        let mut entries = Vec::new();
        loop {
            if self.peek() == Some(b'}') {
                self.pos += 1;
                break;
            }
            let key = match self.value()? {
                Literal::Str(s) => s,
                _ => return Err(self.err("dictionary key must be a string")),
            };
            self.expect(b':')?;
            let value = self.value()?;
            entries.push((key, value));
            match self.peek() {
                Some(b',') => self.pos += 1,
                Some(b'}') => {}
                _ => return Err(self.err("expected ',' or '}'")),
            }
        }
        self.skip_ws();
        if self.pos != self.src.len() {
            return Err(self.err("trailing characters"));
        }
        Ok(entries)
    }

    fn value(&mut self) -> Result<Literal, GtFormatError> {
        match self.peek() {
            Some(q @ (b'\'' | b'"')) => {
                self.pos += 1;
                let start = self.pos;
                while self.pos < self.src.len() && self.src[self.pos] != q {
                    self.pos += 1;
                }
                if self.pos == self.src.len() {
                    return Err(self.err("unterminated string"));
                }
                let s = String::from_utf8_lossy(&self.src[start..self.pos]).into_owned();
                self.pos += 1;
                Ok(Literal::Str(s))
            }
            Some(b'(') => {
                self.pos += 1;
                let mut items = Vec::new();
                loop {
                    if self.peek() == Some(b')') {
                        self.pos += 1;
                        break;
                    }
                    items.push(self.value()?);
                    match self.peek() {
                        Some(b',') => self.pos += 1,
                        Some(b')') => {}
                        _ => return Err(self.err("expected ',' or ')'")),
                    }
                }
                Ok(Literal::Tuple(items))
            }
            Some(c) if c.is_ascii_digit() => {
                let start = self.pos;
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
                // L suffix from old Python 2 writers
                if self.src.get(self.pos) == Some(&b'L') {
                    self.pos += 1;
                }
                let digits = std::str::from_utf8(&self.src[start..self.pos])
                    .expect("ascii")
                    .trim_end_matches('L');
                digits
                    .parse()
                    .map(Literal::Int)
                    .map_err(|_| self.err("integer out of range"))
            }
            Some(_) => {
                for (word, value) in [("True", true), ("False", false)] {
                    if self.src[self.pos..].starts_with(word.as_bytes()) {
                        self.pos += word.len();
                        return Ok(Literal::Bool(value));
                    }
                }
                Err(self.err("unexpected token"))
            }
            None => Err(self.err("unexpected end of header")),
        }
    }
}

fn parse_header(text: &str) -> Result<usize, GtFormatError> {
    let entries = LiteralParser::new(text.trim_end_matches(['\n', ' ', '\0'])).dict()?;
    let get = |key: &str| {
        entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v)
            .ok_or_else(|| GtFormatError::BadHeader(format!("missing key '{key}'")))
    };
    match get("descr")? {
        Literal::Str(d) if d == "<f8" => {}
        other => {
            return Err(GtFormatError::BadHeader(format!(
                "descr must be '<f8', found {other:?}"
            )))
        }
    }
    match get("fortran_order")? {
        Literal::Bool(false) => {}
        Literal::Bool(true) => {
            return Err(GtFormatError::BadHeader(
                "fortran_order must be False".into(),
            ))
        }
        other => {
            return Err(GtFormatError::BadHeader(format!(
                "fortran_order must be a boolean, found {other:?}"
            )))
        }
    }
    match get("shape")? {
        Literal::Tuple(dims) => {
            let ints: Option<Vec<u64>> = dims
                .iter()
                .map(|d| match d {
                    Literal::Int(i) => Some(*i),
                    _ => None,
                })
                .collect();
            let ints =
                ints.ok_or_else(|| GtFormatError::BadHeader("shape must hold integers".into()))?;
            match ints.as_slice() {
                [n, 6] => {
                    usize::try_from(*n).map_err(|_| GtFormatError::BadShape(format!("{ints:?}")))
                }
                _ => Err(GtFormatError::BadShape(format!(
                    "({})",
                    ints.iter()
                        .map(u64::to_string)
                        .collect::<Vec<_>>()
                        .join(", ")
                ))),
            }
        }
        other => Err(GtFormatError::BadHeader(format!(
            "shape must be a tuple, found {other:?}"
        ))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TextFormat {
    Csv,
    Json,
}

impl FromStr for TextFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            _ => Err(format!("unknown text format '{s}' (expected csv or json)")),
        }
    }
}

/// Formats like C's `%.17g`: 17 significant digits, trailing zeros removed.
pub fn format_g17(v: f64) -> String {
    const PRECISION: i32 = 17;
    if v == 0.0 {
        return if v.is_sign_negative() {
            "-0".into()
        } else {
            "0".into()
        };
    }
    let sci = format!("{:.*e}", (PRECISION - 1) as usize, v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    let strip = |s: &str| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if !(-4..PRECISION).contains(&exp) {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", strip(mantissa), exp.abs())
    } else {
        strip(&format!("{:.*}", (PRECISION - 1 - exp) as usize, v))
    }
}

pub const CSV_HEADER: &str = "frame,Y,phi,x_s,x_e,y_s,y_e";

pub fn gt_to_text(array: &GtArray, format: TextFormat) -> String {
    let mut out = String::new();
    match format {
        TextFormat::Csv => {
            out.push_str(CSV_HEADER);
            out.push('\n');
            for (i, row) in array.rows.iter().enumerate() {
                write!(out, "{i}").unwrap();
                match row.values() {
                    Some(v) => v
                        .iter()
                        .for_each(|x| write!(out, ",{}", format_g17(*x)).unwrap()),
                    None => out.push_str(&",".repeat(COLUMNS)),
                }
                out.push('\n');
            }
        }
        TextFormat::Json => {
            out.push('[');
            for (i, row) in array.rows.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write!(out, "{{\"frame\":{i}").unwrap();
                for (c, name) in COLUMN_NAMES.iter().enumerate() {
                    match row.values() {
                        Some(v) => write!(out, ",\"{name}\":{}", format_g17(v[c])).unwrap(),
                        None => write!(out, ",\"{name}\":null").unwrap(),
                    }
                }
                out.push('}');
            }
            out.push(']');
        }
    }
    out
}

fn text_row(values: [Option<f64>; COLUMNS], line: usize) -> Result<GtRow, GtFormatError> {
    let bad = |reason: &str| GtFormatError::BadText {
        line,
        reason: reason.into(),
    };
    if values.iter().all(Option::is_none) {
        return Ok(GtRow::MISSING);
    }
    let mut out = [0f64; COLUMNS];
    for (o, v) in out.iter_mut().zip(values) {
        *o = v.ok_or_else(|| bad("row mixes empty and numeric fields"))?;
    }
    GtRow::annotated(out).map_err(|_| bad("non-finite value"))
}

/// Parses text produced by [`gt_to_text`].
pub fn gt_from_text(text: &str, format: TextFormat) -> Result<GtArray, GtFormatError> {
    let mut rows = Vec::new();
    match format {
        TextFormat::Csv => {
            let mut lines = text.lines().enumerate();
            match lines.next() {
                Some((_, h)) if h.trim() == CSV_HEADER => {}
                _ => {
                    return Err(GtFormatError::BadText {
                        line: 1,
                        reason: format!("header must be '{CSV_HEADER}'"),
                    })
                }
            }
            for (n, line) in lines {
                let line_no = n + 1;
                if line.trim().is_empty() {
                    continue;
                }
                let bad = |reason: String| GtFormatError::BadText {
                    line: line_no,
                    reason,
                };
                let fields: Vec<&str> = line.split(',').map(str::trim).collect();
                if fields.len() != COLUMNS + 1 {
                    return Err(bad(format!(
                        "expected {} fields, found {}",
                        COLUMNS + 1,
                        fields.len()
                    )));
                }
                let frame: usize = fields[0]
                    .parse()
                    .map_err(|_| bad("bad frame index".into()))?;
                if frame != rows.len() {
                    return Err(bad(format!("frame {frame} out of sequence")));
                }
                let mut values = [None; COLUMNS];
                for (v, f) in values.iter_mut().zip(&fields[1..]) {
                    if !f.is_empty() {
                        *v = Some(
                            f.parse::<f64>()
                                .map_err(|_| bad(format!("bad number '{f}'")))?,
                        );
                    }
                }
                rows.push(text_row(values, line_no)?);
            }
        }
        TextFormat::Json => {
            let bad = |line: usize, reason: String| GtFormatError::BadText { line, reason };
            let doc: serde_json::Value =
                serde_json::from_str(text).map_err(|e| bad(e.line(), e.to_string()))?;
            let items = doc
                .as_array()
                .ok_or_else(|| bad(1, "expected a JSON array".into()))?;
            for (i, item) in items.iter().enumerate() {
                let obj = item
                    .as_object()
                    .ok_or_else(|| bad(1, format!("element {i} is not an object")))?;
                if obj.get("frame").and_then(|f| f.as_u64()) != Some(i as u64) {
                    return Err(bad(1, format!("element {i} has a wrong frame index")));
                }
                let mut values = [None; COLUMNS];
                for (v, name) in values.iter_mut().zip(COLUMN_NAMES) {
                    *v = match obj.get(name) {
                        None | Some(serde_json::Value::Null) => None,
                        Some(x) => Some(x.as_f64().ok_or_else(|| {
                            bad(1, format!("element {i}: '{name}' is not a number"))
                        })?),
                    };
                }
                rows.push(text_row(values, 1)?);
            }
        }
    }
    Ok(GtArray { rows })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrameDiff {
    pub frame: usize,
    pub abs_dy: f64,
    pub abs_dphi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GtDiffReport {
    pub compared_frames: usize,
    pub skipped_frames: usize,
    pub mean_abs_dy: f64,
    pub max_abs_dy: f64,
    pub mean_abs_dphi: f64,
    pub max_abs_dphi: f64,
    pub per_frame: Vec<FrameDiff>,
}

/// Position and tilt errors over the frames annotated in both arrays.
/// Statistics are zero when no frame can be compared.
pub fn gt_diff(a: &GtArray, b: &GtArray) -> Result<GtDiffReport, GtFormatError> {
    if a.len() != b.len() {
        return Err(GtFormatError::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let per_frame: Vec<FrameDiff> = a
        .rows
        .iter()
        .zip(&b.rows)
        .enumerate()
        .filter_map(|(frame, (ra, rb))| {
            let (va, vb) = (ra.values()?, rb.values()?);
            Some(FrameDiff {
                frame,
                abs_dy: (va[0] - vb[0]).abs(),
                abs_dphi: (va[1] - vb[1]).abs(),
            })
        })
        .collect();
    let compared = per_frame.len();
    let mean = |f: fn(&FrameDiff) -> f64| {
        if compared == 0 {
            0.0
        } else {
            per_frame.iter().map(f).sum::<f64>() / compared as f64
        }
    };
    let max = |f: fn(&FrameDiff) -> f64| per_frame.iter().map(f).fold(0.0, f64::max);
    Ok(GtDiffReport {
        compared_frames: compared,
        skipped_frames: a.len() - compared,
        mean_abs_dy: mean(|d| d.abs_dy),
        max_abs_dy: max(|d| d.abs_dy),
        mean_abs_dphi: mean(|d| d.abs_dphi),
        max_abs_dphi: max(|d| d.abs_dphi),
        per_frame,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn row(v: [f64; 6]) -> GtRow {
        GtRow::annotated(v).unwrap()
    }

    #[test]
    fn single_missing_row_is_176_bytes() {
        let bytes = encode_gt(&GtArray::all_missing(1)).unwrap();
        assert_eq!(bytes.len(), 176);
        assert_eq!(&bytes[..8], b"\x93NUMPY\x01\x00");
        assert_eq!(u16::from_le_bytes([bytes[8], bytes[9]]), 118);
        assert_eq!(bytes[127], b'\n');
        for cell in bytes[128..].chunks(8) {
            assert_eq!(u64::from_le_bytes(cell.try_into().unwrap()), QUIET_NAN_BITS);
        }
    }

    #[test]
    fn five_rows_is_368_bytes() {
        let a = GtArray::new(
            (0..5)
                .map(|i| row([i as f64, 0.5, 0.0, 99.0, 1.25, -3.0]))
                .collect(),
        );
        let bytes = encode_gt(&a).unwrap();
        assert_eq!(bytes.len(), 368);
        assert_eq!(a.encoded_len(), 368);
        assert_eq!(decode_gt(&bytes).unwrap(), a);
    }

    #[test]
    fn mixed_row_rejected_on_write() {
        let a = GtArray::new(vec![GtRow::from_values_unchecked([
            f64::NAN,
            0.0,
            0.0,
            1.0,
            2.0,
            3.0,
        ])]);
        assert!(matches!(
            encode_gt(&a),
            Err(GtFormatError::InvalidRow { row: 0 })
        ));
        assert!(GtRow::annotated([f64::INFINITY, 0.0, 0.0, 1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn patched_nan_makes_mixed_row() {
        let a = GtArray::new(vec![row([490.0, 2.98, 0.0, 1919.0, 540.0, 440.0]); 3]);
        let mut bytes = encode_gt(&a).unwrap();
        // y_e of row 1
        let offset = 128 + 48 + 5 * 8;
        bytes[offset..offset + 8].copy_from_slice(&f64::NAN.to_le_bytes());
        assert!(matches!(
            decode_gt(&bytes),
            Err(GtFormatError::MixedRow { row: 1 })
        ));
    }

    fn with_header(dict: &str, rows: usize, version: [u8; 2]) -> Vec<u8> {
        let mut out = MAGIC.to_vec();
        out.extend_from_slice(&version);
        let mut text = dict.to_string();
        text.push('\n');
        out.extend_from_slice(&(text.len() as u16).to_le_bytes());
        out.extend_from_slice(text.as_bytes());
        out.extend(std::iter::repeat_n(0u8, rows * 48));
        out
    }

    #[test]
    fn header_errors() {
        let bytes = with_header(
            "{'descr': '<f8', 'fortran_order': False, 'shape': (3, 5), }",
            3,
            [1, 0],
        );
        assert!(matches!(decode_gt(&bytes), Err(GtFormatError::BadShape(_))));

        let bytes = with_header(
            "{'descr': '<f8', 'fortran_order': False, 'shape': (3,), }",
            3,
            [1, 0],
        );
        assert!(matches!(decode_gt(&bytes), Err(GtFormatError::BadShape(_))));

        let bytes = with_header(
            "{'descr': '>f8', 'fortran_order': False, 'shape': (3, 6), }",
            3,
            [1, 0],
        );
        assert!(matches!(
            decode_gt(&bytes),
            Err(GtFormatError::BadHeader(_))
        ));

        let bytes = with_header(
            "{'descr': '<f8', 'fortran_order': True, 'shape': (3, 6), }",
            3,
            [1, 0],
        );
        assert!(matches!(
            decode_gt(&bytes),
            Err(GtFormatError::BadHeader(_))
        ));

        let bytes = with_header("{'descr': '<f8', 'shape': (3, 6)", 3, [1, 0]);
        assert!(matches!(
            decode_gt(&bytes),
            Err(GtFormatError::BadHeader(_))
        ));

        let bytes = with_header(
            "{'descr': '<f8', 'fortran_order': False, 'shape': (3, 6), }",
            3,
            [2, 0],
        );
        assert!(matches!(
            decode_gt(&bytes),
            Err(GtFormatError::UnsupportedVersion { major: 2, minor: 0 })
        ));

        assert!(matches!(
            decode_gt(b"\x93NUMPZ\x01\x00"),
            Err(GtFormatError::BadMagic)
        ));
        assert!(matches!(decode_gt(b"PK"), Err(GtFormatError::BadMagic)));
    }

    #[test]
    fn compact_header_accepted() {
        let bytes = with_header(
            "{'shape':(2,6),'fortran_order':False,'descr':'<f8'}",
            2,
            [1, 0],
        );
        let a = decode_gt(&bytes).unwrap();
        assert_eq!(a.len(), 2);
        assert_eq!(a.annotated_count(), 2);
    }

    #[test]
    fn truncated_payload() {
        let mut bytes = encode_gt(&GtArray::all_missing(4)).unwrap();
        bytes.truncate(bytes.len() - 1);
        assert!(matches!(
            decode_gt(&bytes),
            Err(GtFormatError::TruncatedData {
                expected: 192,
                actual: 191
            })
        ));
    }

    #[test]
    fn csv_missing_row() {
        assert_eq!(
            gt_to_text(&GtArray::all_missing(1), TextFormat::Csv),
            "frame,Y,phi,x_s,x_e,y_s,y_e\n0,,,,,,\n"
        );
    }

    #[test]
    fn json_row() {
        let a = GtArray::new(vec![row([100.0, 0.0, 0.0, 1919.0, 100.0, 100.0])]);
        assert_eq!(
            gt_to_text(&a, TextFormat::Json),
            r#"[{"frame":0,"Y":100,"phi":0,"x_s":0,"x_e":1919,"y_s":100,"y_e":100}]"#
        );
        let missing = gt_to_text(&GtArray::all_missing(1), TextFormat::Json);
        assert_eq!(
            missing,
            r#"[{"frame":0,"Y":null,"phi":null,"x_s":null,"x_e":null,"y_s":null,"y_e":null}]"#
        );
    }

    #[test]
    fn g17_formatting() {
        assert_eq!(format_g17(100.0), "100");
        assert_eq!(format_g17(0.1), "0.10000000000000001");
        assert_eq!(format_g17(2.5), "2.5");
        assert_eq!(format_g17(-0.0), "-0");
        assert_eq!(format_g17(1e20), "1e+20");
        assert_eq!(format_g17(1.5e-7), "1.4999999999999999e-07");
        assert_eq!(format_g17(123456.789), "123456.789");
    }

    #[test]
    fn diff_cases() {
        let a = GtArray::new(vec![
            row([10.0, 1.0, 0.0, 9.0, 10.0, 10.0]),
            GtRow::MISSING,
            row([20.0, 0.0, 0.0, 9.0, 20.0, 20.0]),
            row([30.0, 0.0, 0.0, 9.0, 30.0, 30.0]),
        ]);
        let b = GtArray::new(vec![
            row([12.0, 0.5, 0.0, 9.0, 12.0, 12.0]),
            row([0.0, 0.0, 0.0, 9.0, 0.0, 0.0]),
            row([24.0, 0.0, 0.0, 9.0, 24.0, 24.0]),
            GtRow::MISSING,
        ]);
        let r = gt_diff(&a, &b).unwrap();
        assert_eq!((r.compared_frames, r.skipped_frames), (2, 2));
        assert_eq!(r.mean_abs_dy, 3.0);
        assert_eq!(r.max_abs_dy, 4.0);
        assert_eq!(r.mean_abs_dphi, 0.25);
        assert_eq!(
            r.per_frame.iter().map(|d| d.frame).collect::<Vec<_>>(),
            vec![0, 2]
        );

        let same = gt_diff(&a, &a).unwrap();
        assert_eq!(
            (same.mean_abs_dy, same.max_abs_dphi, same.skipped_frames),
            (0.0, 0.0, 1)
        );

        assert!(matches!(
            gt_diff(&a, &GtArray::all_missing(3)),
            Err(GtFormatError::LengthMismatch { left: 4, right: 3 })
        ));
    }

    fn finite() -> impl Strategy<Value = f64> {
        prop_oneof![
            -1e6..1e6f64,
            any::<f64>().prop_filter("finite", |v| v.is_finite())
        ]
    }

    fn arb_row() -> impl Strategy<Value = GtRow> {
        prop_oneof![
            1 => Just(GtRow::MISSING),
            3 => proptest::array::uniform6(finite()).prop_map(|v| GtRow::annotated(v).unwrap()),
        ]
    }

    fn arb_array() -> impl Strategy<Value = GtArray> {
        proptest::collection::vec(arb_row(), 0..40).prop_map(GtArray::new)
    }

    fn bits(a: &GtArray) -> Vec<Option<[u64; 6]>> {
        a.rows
            .iter()
            .map(|r| r.values().map(|v| v.map(f64::to_bits)))
            .collect()
    }

    proptest! {
        #[test]
        fn binary_round_trip(a in arb_array()) {
            let bytes = encode_gt(&a).unwrap();
            prop_assert_eq!(bytes.len() % 8, 0);
            prop_assert_eq!((bytes.len() - a.len() * 48) % 64, 0);
            prop_assert_eq!(bits(&decode_gt(&bytes).unwrap()), bits(&a));
        }

        #[test]
        fn text_round_trip(a in arb_array(), json in any::<bool>()) {
            let format = if json { TextFormat::Json } else { TextFormat::Csv };
            let text = gt_to_text(&a, format);
            let back = gt_from_text(&text, format).unwrap();
            prop_assert_eq!(bits(&back), bits(&a));
            prop_assert_eq!(gt_to_text(&back, format), text);
        }

        #[test]
        fn diff_symmetric(a in arb_array(), shift in -50.0..50.0f64) {
            let b = GtArray::new(a.rows.iter().map(|r| match r.values() {
                Some(v) => row([v[0] + shift, v[1], v[2], v[3], v[4], v[5]]),
                None => GtRow::MISSING,
            }).collect());
            let ab = gt_diff(&a, &b).unwrap();
            let ba = gt_diff(&b, &a).unwrap();
            prop_assert_eq!(&ab, &ba);
            prop_assert_eq!(ab.compared_frames + ab.skipped_frames, a.len());
            prop_assert!(ab.max_abs_dy >= ab.mean_abs_dy);
        }
    }
}
