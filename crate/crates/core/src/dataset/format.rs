//! Text formats: trajectory log CSV, world description and the JSON-lines
//! dataset manifest.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::world::{Layout, Rect, World, WorldConfig};
use crate::error::{Error, Result};
use crate::traj::{Trajectory, Vec2, DT, DT_TOLERANCE};

/// Formats `v` with 9 significant digits, trailing zeros removed.
pub fn format_sig9(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{v:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-5..9).contains(&exp) {
        let m = mantissa.trim_end_matches('0').trim_end_matches('.');
        return format!("{m}e{exp}");
    }
    let decimals = (8 - exp).max(0) as usize;
    let fixed = format!("{v:.decimals$}");
    if fixed.contains('.') {
        fixed.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        fixed
    }
}

/// Rounds `v` to the value its 9-digit text form parses back to.
pub fn quantize(v: f64) -> f64 {
    format_sig9(v).parse().expect("formatted float parses")
}

pub fn write_log_csv(traj: &Trajectory) -> String {
    let mut out = String::from("t,x,y\n");
    for (i, p) in traj.positions().iter().enumerate() {
        let t = i as f64 * traj.dt();
        writeln!(out, "{},{},{}", format_sig9(t), format_sig9(p.x), format_sig9(p.y)).unwrap();
    }
    out
}

fn bad_csv(msg: impl Into<String>) -> Error {
    Error::format("trajectory log", msg)
}

/// Parses a `t,x,y` log; timestamps must advance by exactly one sampling
/// interval per row.
pub fn parse_log_csv(text: &str) -> Result<Trajectory> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| bad_csv(e.to_string()))?;
    if headers.iter().collect::<Vec<_>>() != ["t", "x", "y"] {
        return Err(bad_csv(format!("expected header t,x,y, got {:?}", headers)));
    }
    let mut positions = Vec::new();
    let mut t0 = 0.0;
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| bad_csv(e.to_string()))?;
        let field = |k: usize| -> Result<f64> {
            let s = record.get(k).ok_or_else(|| bad_csv(format!("row {}: missing column", i + 1)))?;
            let v: f64 = s.trim().parse().map_err(|_| bad_csv(format!("row {}: not a number: {s:?}", i + 1)))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::NonFinite(format!("trajectory log row {}", i + 1)))
            }
        };
        let (t, x, y) = (field(0)?, field(1)?, field(2)?);
        if i == 0 {
            t0 = t;
        } else {
            let expected = t0 + i as f64 * DT;
            if (t - expected).abs() > DT_TOLERANCE * (1.0 + expected.abs()) {
                return Err(Error::TimeStepMismatch(DT, t - t0 - (i - 1) as f64 * DT));
            }
        }
        positions.push(Vec2::new(x, y));
    }
    if positions.is_empty() {
        return Err(bad_csv("no rows"));
    }
    Trajectory::new(positions, DT)
}

const WORLD_MAGIC: &str = "# scenegan world v1";

fn layout_text(layout: &Layout) -> String {
    match layout {
        Layout::Grid { block_pitch, closed_streets, enclosed } => {
            format!("grid {block_pitch} {closed_streets} {}", if *enclosed { "enclosed" } else { "open" })
        }
        Layout::TJunction { road_width } => format!("tjunction {road_width}"),
    }
}

/// Renders a world as a key-value header followed by the mask, top row
/// (largest y) first, `#` for blocked and `.` for traversable cells.
pub fn write_world(world: &World) -> String {
    let c = &world.config;
    let mut out = String::new();
    writeln!(out, "{WORLD_MAGIC}").unwrap();
    writeln!(out, "extent = {} {}", c.extent_x, c.extent_y).unwrap();
    writeln!(out, "resolution = {}", c.resolution).unwrap();
    writeln!(out, "seed = {}", world.seed).unwrap();
    writeln!(out, "obstacle_density = {}", c.obstacle_density).unwrap();
    writeln!(out, "layout = {}", layout_text(&c.layout)).unwrap();
    for r in &world.obstacles {
        writeln!(out, "obstacle = {} {} {} {}", r.x0, r.y0, r.x1, r.y1).unwrap();
    }
    writeln!(out, "grid = {} {}", world.cols(), world.rows()).unwrap();
    for row in (0..world.rows()).rev() {
        for col in 0..world.cols() {
            out.push(if world.cell_traversable(col, row) { '.' } else { '#' });
        }
        out.push('\n');
    }
    out
}

fn bad_world(msg: impl Into<String>) -> Error {
    Error::format("world file", msg)
}

fn floats<const N: usize>(key: &str, value: &str) -> Result<[f64; N]> {
    let parts: Vec<&str> = value.split_whitespace().collect();
    if parts.len() != N {
        return Err(bad_world(format!("{key}: expected {N} values, got {}", parts.len())));
    }
    let mut out = [0.0f64; N];
    for (o, p) in out.iter_mut().zip(parts) {
        *o = p.parse().map_err(|_| bad_world(format!("{key}: not a number: {p:?}")))?;
        if !o.is_finite() {
            return Err(Error::NonFinite(format!("world file {key}")));
        }
    }
    Ok(out)
}

pub fn parse_world(text: &str) -> Result<World> {
    let mut lines = text.split('\n');
    if lines.next() != Some(WORLD_MAGIC) {
        return Err(bad_world("missing header line"));
    }
    let (mut extent, mut resolution, mut seed, mut density, mut layout) = (None, None, None, None, None);
    let mut obstacles = Vec::new();
    let grid_size;
    loop {
        let line = lines.next().ok_or_else(|| bad_world("missing grid"))?;
        let (key, value) =
            line.split_once(" = ").ok_or_else(|| bad_world(format!("malformed header line {line:?}")))?;
        match key {
            "extent" => extent = Some(floats::<2>(key, value)?),
            "resolution" => resolution = Some(floats::<1>(key, value)?[0]),
            "seed" => seed = Some(value.parse::<u64>().map_err(|_| bad_world(format!("seed: {value:?}")))?),
            "obstacle_density" => density = Some(floats::<1>(key, value)?[0]),
            "layout" => {
                let (kind, arg) = value.split_once(' ').ok_or_else(|| bad_world(format!("layout: {value:?}")))?;
                layout = Some(match kind {
                    "grid" => {
                        let (numbers, rim) =
                            arg.rsplit_once(' ').ok_or_else(|| bad_world(format!("layout: {value:?}")))?;
                        let [block_pitch, closed_streets] = floats::<2>(key, numbers)?;
                        let enclosed = match rim {
                            "enclosed" => true,
                            "open" => false,
                            _ => return Err(bad_world(format!("layout: unknown rim {rim:?}"))),
                        };
                        Layout::Grid { block_pitch, closed_streets, enclosed }
                    }
                    "tjunction" => Layout::TJunction { road_width: floats::<1>(key, arg)?[0] },
                    _ => return Err(bad_world(format!("unknown layout {kind:?}"))),
                });
            }
            "obstacle" => {
                let [x0, y0, x1, y1] = floats::<4>(key, value)?;
                obstacles.push(Rect { x0, y0, x1, y1 });
            }
            "grid" => {
                let parts: Vec<&str> = value.split(' ').collect();
                let parse = |s: &str| s.parse::<usize>().map_err(|_| bad_world(format!("grid: {value:?}")));
                if parts.len() != 2 {
                    return Err(bad_world(format!("grid: {value:?}")));
                }
                grid_size = (parse(parts[0])?, parse(parts[1])?);
                break;
            }
            _ => return Err(bad_world(format!("unknown key {key:?}"))),
        }
    }
    let missing = |k: &str| bad_world(format!("missing {k}"));
    let [extent_x, extent_y] = extent.ok_or_else(|| missing("extent"))?;
    let config = WorldConfig {
        extent_x,
        extent_y,
        resolution: resolution.ok_or_else(|| missing("resolution"))?,
        obstacle_density: density.ok_or_else(|| missing("obstacle_density"))?,
        layout: layout.ok_or_else(|| missing("layout"))?,
    };
    let world = World::from_obstacles(config, seed.ok_or_else(|| missing("seed"))?, obstacles)?;
    if grid_size != (world.cols(), world.rows()) {
        return Err(bad_world(format!(
            "grid is {:?} but extent and resolution give {:?}",
            grid_size,
            (world.cols(), world.rows())
        )));
    }
    for row in (0..world.rows()).rev() {
        let line = lines.next().ok_or_else(|| bad_world("grid truncated"))?;
        if line.len() != world.cols() {
            return Err(bad_world(format!("grid row has {} cells, expected {}", line.len(), world.cols())));
        }
        for (col, ch) in line.bytes().enumerate() {
            let traversable = match ch {
                b'.' => true,
                b'#' => false,
                _ => return Err(bad_world(format!("invalid grid character {:?}", ch as char))),
            };
            if traversable != world.cell_traversable(col, row) {
                return Err(bad_world(format!("grid cell ({col}, {row}) disagrees with the obstacle list")));
            }
        }
    }
    if lines.next() != Some("") || lines.next().is_some() {
        return Err(bad_world("trailing content after grid"));
    }
    Ok(world)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitTag {
    Train,
    Val,
    Test,
}

/// One manifest line: a window of a source log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub log_id: String,
    pub start: usize,
    pub split: SplitTag,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scene_id: Option<String>,
}

pub fn write_manifest(entries: &[ManifestEntry]) -> String {
    let mut out = String::new();
    for e in entries {
        out.push_str(&serde_json::to_string(e).expect("manifest entry serializes"));
        out.push('\n');
    }
    out
}

pub fn parse_manifest(text: &str) -> Result<Vec<ManifestEntry>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::format("dataset manifest", format!("line {}: {e}", i + 1)))
        })
        .collect()
}
