//! Burning horizon overlays into frames.

use image::{Rgb, RgbImage};

use crate::geometry::LineAnnotation;

pub const RED: Rgb<u8> = Rgb([255, 0, 0]);

/// Parses `red`, `green`, `blue`, `yellow`, `white`, `black` or `#rrggbb`.
pub fn parse_color(raw: &str) -> Result<Rgb<u8>, String> {
    let named = match raw.to_ascii_lowercase().as_str() {
        "red" => Some(RED),
        "green" => Some(Rgb([0, 255, 0])),
        "blue" => Some(Rgb([0, 0, 255])),
        "yellow" => Some(Rgb([255, 255, 0])),
        "white" => Some(Rgb([255, 255, 255])),
        "black" => Some(Rgb([0, 0, 0])),
        _ => None,
    };
    if let Some(c) = named {
        return Ok(c);
    }
    let hex = raw
        .strip_prefix('#')
        .filter(|h| h.len() == 6)
        .ok_or_else(|| format!("unknown color '{raw}'"))?;
    let channel = |i: usize| {
        u8::from_str_radix(&hex[i..i + 2], 16).map_err(|_| format!("unknown color '{raw}'"))
    };
    Ok(Rgb([channel(0)?, channel(2)?, channel(4)?]))
}

/// Paints the pixels whose centre lies within `thickness / 2` of the line
/// (measured perpendicular to it).
/// Parts of the line outside the frame are clipped.
pub fn draw_line(img: &mut RgbImage, line: &LineAnnotation, thickness: u32, color: Rgb<u8>) {
    let (w, h) = img.dimensions();
    if w == 0 || h == 0 || thickness == 0 {
        return;
    }
    let dx = line.end.x - line.start.x;
    if dx == 0.0 {
        return;
    }
    let slope = (line.end.y - line.start.y) / dx;
    // vertical half-extent of a band of perpendicular half-width t/2
    let half = f64::from(thickness) / 2.0 * (1.0 + slope * slope).sqrt();
    let max_y = f64::from(h - 1);
    for x in 0..w {
        let yc = line.y_at(f64::from(x));
        // half-open band [yc - half, yc + half)
        let lo = (yc - half).ceil().max(0.0);
        let hi = ((yc + half).ceil() - 1.0).min(max_y);
        if lo > hi {
            continue;
        }
        for y in lo as u32..=hi as u32 {
            img.put_pixel(x, y, color);
        }
    }
}
