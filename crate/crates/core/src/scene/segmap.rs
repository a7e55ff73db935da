//! Per-pixel class-probability maps.
//!
//! Binary layout (all integers u32 LE):
//!
//! ```text
//! magic   8 bytes  "SGANSEG\0"
//! width, height, classes
//! classes x (name length, UTF-8 name)
//! traversable count, traversable class indices
//! height x width x classes f32 LE, row-major, class-minor
//! ```

use super::camera::CameraModel;
use crate::dataset::{Surface, World};
use crate::error::{Error, Result};

pub const SEGMAP_MAGIC: &[u8; 8] = b"SGANSEG\0";
pub const SUM_TOLERANCE: f64 = 1e-6;
const MAX_VALUES: usize = 1 << 26;
const MAX_CLASSES: usize = 256;

pub const ROAD: usize = 0;
pub const SIDEWALK: usize = 1;
pub const BUILDING: usize = 2;
pub const SKY: usize = 3;
pub const CLASS_NAMES: [&str; 4] = ["road", "sidewalk", "building", "sky"];

#[derive(Debug, Clone, PartialEq)]
pub struct SegMap {
    width: usize,
    height: usize,
    class_names: Vec<String>,
    traversable: Vec<usize>,
    probs: Vec<f32>,
}

impl SegMap {
    pub fn new(
        width: usize,
        height: usize,
        class_names: Vec<String>,
        traversable: Vec<usize>,
        probs: Vec<f32>,
    ) -> Result<Self> {
        let c = class_names.len();
        if width == 0 || height == 0 || c == 0 || c > MAX_CLASSES {
            return Err(Error::Config(format!("segmentation map needs positive size and 1..={MAX_CLASSES} classes")));
        }
        let expected = width
            .checked_mul(height)
            .and_then(|n| n.checked_mul(c))
            .filter(|n| *n <= MAX_VALUES)
            .ok_or_else(|| Error::Config("segmentation map too large".into()))?;
        if probs.len() != expected {
            return Err(Error::ShapeMismatch { what: "segmentation probabilities".into(), expected, got: probs.len() });
        }
        if let Some(bad) = traversable.iter().find(|i| **i >= c) {
            return Err(Error::Config(format!("traversable class {bad} out of range")));
        }
        for (i, px) in probs.chunks_exact(c).enumerate() {
            if px.iter().any(|p| !p.is_finite()) {
                return Err(Error::NonFinite(format!("segmentation pixel {i}")));
            }
            let sum: f64 = px.iter().map(|p| *p as f64).sum();
            if px.iter().any(|p| *p < 0.0) || (sum - 1.0).abs() > SUM_TOLERANCE {
                return Err(Error::Config(format!(
                    "pixel {i} probabilities must be non-negative and sum to 1, got sum {sum}"
                )));
            }
        }
        Ok(SegMap { width, height, class_names, traversable, probs })
    }

    /// Every pixel certain of a single class.
    pub fn uniform_class(width: usize, height: usize, class: usize) -> Result<Self> {
        let c = CLASS_NAMES.len();
        let mut probs = vec![0.0f32; width * height * c];
        for px in probs.chunks_exact_mut(c) {
            px[class] = 1.0;
        }
        Self::new(width, height, default_names(), vec![ROAD, SIDEWALK], probs)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn traversable(&self) -> &[usize] {
        &self.traversable
    }

    pub fn pixel(&self, col: usize, row: usize) -> &[f32] {
        let c = self.num_classes();
        let i = (row * self.width + col) * c;
        &self.probs[i..i + c]
    }

    /// Replaces one pixel's distribution.
    pub fn set_pixel(&mut self, col: usize, row: usize, dist: &[f32]) -> Result<()> {
        let c = self.num_classes();
        let sum: f64 = dist.iter().map(|p| *p as f64).sum();
        if dist.len() != c || dist.iter().any(|p| !(*p >= 0.0)) || (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::Config("pixel distribution must be a probability vector".into()));
        }
        let i = (row * self.width + col) * c;
        self.probs[i..i + c].copy_from_slice(dist);
        Ok(())
    }

    /// Total probability of the traversable classes at a pixel.
    pub fn traversable_prob(&self, col: usize, row: usize) -> f64 {
        let px = self.pixel(col, row);
        self.traversable.iter().map(|&k| px[k] as f64).sum::<f64>().clamp(0.0, 1.0)
    }

    /// Most probable class per pixel, first index on ties.
    pub fn argmax(&self, col: usize, row: usize) -> usize {
        let px = self.pixel(col, row);
        (0..px.len()).fold(0, |best, k| if px[k] > px[best] { k } else { best })
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(64 + self.probs.len() * 4);
        out.extend_from_slice(SEGMAP_MAGIC);
        for v in [self.width, self.height, self.num_classes()] {
            out.extend_from_slice(&(v as u32).to_le_bytes());
        }
        for name in &self.class_names {
            out.extend_from_slice(&(name.len() as u32).to_le_bytes());
            out.extend_from_slice(name.as_bytes());
        }
        out.extend_from_slice(&(self.traversable.len() as u32).to_le_bytes());
        for t in &self.traversable {
            out.extend_from_slice(&(*t as u32).to_le_bytes());
        }
        for p in &self.probs {
            out.extend_from_slice(&p.to_le_bytes());
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, at: 0 };
        if r.take(8)? != SEGMAP_MAGIC {
            return Err(bad("bad magic"));
        }
        let (width, height, classes) = (r.u32()? as usize, r.u32()? as usize, r.u32()? as usize);
        if classes == 0 || classes > MAX_CLASSES {
            return Err(bad(format!("class count {classes} out of range")));
        }
        let mut names = Vec::with_capacity(classes);
        for _ in 0..classes {
            let len = r.u32()? as usize;
            let name = std::str::from_utf8(r.take(len)?).map_err(|_| bad("class name is not UTF-8"))?;
            names.push(name.to_string());
        }
        let n_trav = r.u32()? as usize;
        if n_trav > classes {
            return Err(bad("more traversable classes than classes"));
        }
        let traversable = (0..n_trav).map(|_| r.u32().map(|v| v as usize)).collect::<Result<Vec<_>>>()?;
        let n = width
            .checked_mul(height)
            .and_then(|n| n.checked_mul(classes))
            .filter(|n| *n <= MAX_VALUES)
            .ok_or_else(|| bad("dimensions too large"))?;
        let payload = r.take(n * 4)?;
        if r.at != bytes.len() {
            return Err(bad("trailing bytes"));
        }
        let probs = payload.chunks_exact(4).map(|b| f32::from_le_bytes(b.try_into().unwrap())).collect();
        SegMap::new(width, height, names, traversable, probs).map_err(|e| bad(e.to_string()))
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.at.checked_add(n).filter(|e| *e <= self.bytes.len()).ok_or_else(|| bad("truncated"))?;
        let s = &self.bytes[self.at..end];
        self.at = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}

fn bad(msg: impl Into<String>) -> Error {
    Error::format("segmentation map", msg)
}

fn default_names() -> Vec<String> {
    CLASS_NAMES.iter().map(|s| s.to_string()).collect()
}

/// Renders the world's ground surface through `cam`, leaking `label_noise`
/// probability mass uniformly to the other classes.
pub fn render_segmap(world: &World, cam: &CameraModel, label_noise: f64) -> Result<SegMap> {
    if !(0.0..1.0).contains(&label_noise) {
        return Err(Error::Config(format!("label noise {label_noise} outside [0, 1)")));
    }
    cam.validate()?;
    let c = CLASS_NAMES.len();
    let (w, h) = (cam.width as usize, cam.height as usize);
    let other = (label_noise / (c - 1) as f64) as f32;
    let main = 1.0 - other * (c - 1) as f32;
    let mut probs = vec![other; w * h * c];
    for row in 0..h {
        for col in 0..w {
            let class = match cam.back_project(col as f64, row as f64) {
                None => SKY,
                Some(g) => match world.surface(g) {
                    Surface::Road => ROAD,
                    Surface::Sidewalk => SIDEWALK,
                    Surface::Blocked => BUILDING,
                },
            };
            probs[(row * w + col) * c + class] = main;
        }
    }
    SegMap::new(w, h, default_names(), vec![ROAD, SIDEWALK], probs)
}
