//! RGB rasters, binary PPM (P6) I/O and trajectory overlays.

use super::camera::CameraModel;
use super::segmap::SegMap;
use crate::error::{Error, Result};
use crate::traj::Trajectory;

pub type Rgb = [u8; 3];

const MAX_PIXELS: usize = 1 << 24;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Raster {
    width: usize,
    height: usize,
    pixels: Vec<Rgb>,
}

impl Raster {
    pub fn filled(width: usize, height: usize, color: Rgb) -> Self {
        Raster { width, height, pixels: vec![color; width * height] }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, x: usize, y: usize) -> Rgb {
        self.pixels[y * self.width + x]
    }

    pub fn set(&mut self, x: i64, y: i64, color: Rgb) {
        if x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height {
            self.pixels[y as usize * self.width + x as usize] = color;
        }
    }

    pub fn to_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.reserve(self.pixels.len() * 3);
        for p in &self.pixels {
            out.extend_from_slice(p);
        }
        out
    }

    pub fn from_ppm(bytes: &[u8]) -> Result<Self> {
        let bad = |msg: &str| Error::format("PPM image", msg.to_string());
        let mut at = 0;
        let mut token = || -> Result<&[u8]> {
            loop {
                match bytes.get(at) {
                    Some(b'#') => {
                        while bytes.get(at).is_some_and(|b| *b != b'\n') {
                            at += 1;
                        }
                    }
                    Some(b) if b.is_ascii_whitespace() => at += 1,
                    Some(_) => break,
                    None => return Err(bad("truncated header")),
                }
            }
            let start = at;
            while bytes.get(at).is_some_and(|b| !b.is_ascii_whitespace()) {
                at += 1;
            }
            Ok(&bytes[start..at])
        };
        if token()? != b"P6" {
            return Err(bad("not a binary PPM"));
        }
        let mut number = || -> Result<usize> {
            std::str::from_utf8(token()?).ok().and_then(|s| s.parse().ok()).ok_or_else(|| bad("invalid header number"))
        };
        let (width, height, maxval) = (number()?, number()?, number()?);
        if maxval != 255 {
            return Err(bad("only 8-bit PPM is supported"));
        }
        let n = width.checked_mul(height).filter(|n| *n <= MAX_PIXELS).ok_or_else(|| bad("image too large"))?;
        // Exactly one whitespace byte separates the header from the data.
        let data = bytes.get(at + 1..).ok_or_else(|| bad("missing pixel data"))?;
        if data.len() != n * 3 {
            return Err(bad("pixel data length does not match the header"));
        }
        let pixels = data.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
        Ok(Raster { width, height, pixels })
    }
}

pub const CLASS_COLORS: [Rgb; 4] = [[128, 64, 128], [244, 35, 232], [70, 70, 70], [70, 130, 180]];

/// Argmax class colors.
pub fn visualize_segmap(seg: &SegMap) -> Raster {
    let mut r = Raster::filled(seg.width(), seg.height(), [0, 0, 0]);
    for row in 0..seg.height() {
        for col in 0..seg.width() {
            let k = seg.argmax(col, row);
            r.set(col as i64, row as i64, CLASS_COLORS.get(k).copied().unwrap_or([255, 255, 255]));
        }
    }
    r
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Style {
    Past,
    GroundTruth,
    Accepted,
    Rejected,
}

impl Style {
    pub fn color(self) -> Rgb {
        match self {
            Style::Past => [255, 255, 255],
            Style::GroundTruth => [0, 220, 0],
            Style::Accepted => [0, 160, 255],
            Style::Rejected => [230, 30, 30],
        }
    }
}

fn line(r: &mut Raster, (x0, y0): (i64, i64), (x1, y1): (i64, i64), color: Rgb) {
    let (dx, dy) = ((x1 - x0).abs(), -(y1 - y0).abs());
    let (sx, sy) = (if x0 < x1 { 1 } else { -1 }, if y0 < y1 { 1 } else { -1 });
    let (mut x, mut y, mut err) = (x0, y0, dx + dy);
    loop {
        r.set(x, y, color);
        if x == x1 && y == y1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
}

type Pixel = (i64, i64);

/// Draws each trajectory as a polyline between consecutive visible
/// waypoints, then a 3x3 marker centered on every visible waypoint's
/// nearest pixel.
pub fn render_overlay(background: &Raster, cam: &CameraModel, trajectories: &[(Trajectory, Style)]) -> Raster {
    let mut out = background.clone();
    let pixels: Vec<(Vec<Option<Pixel>>, Rgb)> = trajectories
        .iter()
        .map(|(t, style)| {
            let px =
                t.positions().iter().map(|p| cam.project(*p).nearest().map(|(u, v)| (u as i64, v as i64))).collect();
            (px, style.color())
        })
        .collect();
    for (px, color) in &pixels {
        for w in px.windows(2) {
            if let (Some(a), Some(b)) = (w[0], w[1]) {
                line(&mut out, a, b, *color);
            }
        }
    }
    for (px, color) in &pixels {
        for (u, v) in px.iter().flatten() {
            for dy in -1..=1 {
                for dx in -1..=1 {
                    out.set(u + dx, v + dy, *color);
                }
            }
        }
    }
    out
}
