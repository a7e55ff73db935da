//! Synthetic occupancy worlds: axis-aligned building footprints on a
//! regular block lattice (or a single T-junction), rasterized to a
//! traversability mask.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::traj::Vec2;

/// Axis-aligned rectangle `[x0, x1) x [y0, y1)` in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub fn contains(&self, p: Vec2) -> bool {
        p.x >= self.x0 && p.x < self.x1 && p.y >= self.y0 && p.y < self.y1
    }
}

/// Street layout that the synthetic driver follows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Layout {
    /// Buildings centered in square blocks of `block_pitch` meters; roads run
    /// along the block boundaries.
    /// A `closed_streets` fraction of the street segments between interior
    /// junctions is built over, turning crossings into T-junctions and
    /// corners. An `enclosed` grid is walled off beyond its outermost
    /// streets, so that junctions on the rim are T-junctions or corners too.
    Grid {
        block_pitch: f64,
        #[serde(default)]
        closed_streets: f64,
        #[serde(default)]
        enclosed: bool,
    },
    /// A horizontal road with a stem coming up from the bottom edge.
    TJunction { road_width: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorldConfig {
    pub extent_x: f64,
    pub extent_y: f64,
    pub resolution: f64,
    /// Target blocked-area fraction for grid layouts, in [0, 1).
    pub obstacle_density: f64,
    pub layout: Layout,
}

impl Default for WorldConfig {
    fn default() -> Self {
        WorldConfig {
            extent_x: 60.0,
            extent_y: 60.0,
            resolution: 0.25,
            obstacle_density: 0.7,
            layout: Layout::Grid { block_pitch: 12.0, closed_streets: 0.3, enclosed: true },
        }
    }
}

impl WorldConfig {
    pub fn t_junction() -> Self {
        WorldConfig {
            extent_x: 40.0,
            extent_y: 40.0,
            resolution: 0.25,
            obstacle_density: 0.0,
            layout: Layout::TJunction { road_width: 4.0 },
        }
    }

    fn grid_size(&self) -> Result<(usize, usize)> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !ok(self.extent_x) || !ok(self.extent_y) || !ok(self.resolution) {
            return Err(Error::Config(format!("extent and resolution must be positive: {self:?}")));
        }
        if !(0.0..1.0).contains(&self.obstacle_density) {
            return Err(Error::Config(format!("obstacle density {} outside [0, 1)", self.obstacle_density)));
        }
        let cells = |extent: f64| -> Result<usize> {
            let n = (extent / self.resolution).round();
            if !(1.0..=20_000.0).contains(&n) || (n * self.resolution - extent).abs() > 1e-9 {
                return Err(Error::Config(format!(
                    "extent {extent} is not a whole number of {} m cells",
                    self.resolution
                )));
            }
            Ok(n as usize)
        };
        Ok((cells(self.extent_x)?, cells(self.extent_y)?))
    }
}

/// Semantic surface type of a world location.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Surface {
    Road,
    Sidewalk,
    Blocked,
}

/// Distance from a blocked cell within which traversable ground counts as
/// sidewalk.
const SIDEWALK_WIDTH: f64 = 1.0;

#[derive(Debug, Clone, PartialEq)]
pub struct World {
    pub config: WorldConfig,
    pub seed: u64,
    pub obstacles: Vec<Rect>,
    cols: usize,
    rows: usize,
    /// Row-major, row 0 at y = 0; `true` is traversable.
    mask: Vec<bool>,
}

impl World {
    /// Builds a world from its obstacle list, rasterizing the mask at cell
    /// centers.
    pub fn from_obstacles(config: WorldConfig, seed: u64, obstacles: Vec<Rect>) -> Result<Self> {
        let (cols, rows) = config.grid_size()?;
        let mut mask = vec![true; cols * rows];
        let res = config.resolution;
        for r in &obstacles {
            if ![r.x0, r.y0, r.x1, r.y1].iter().all(|v| v.is_finite()) {
                return Err(Error::NonFinite("obstacle rectangle".into()));
            }
            // Only visit the cells the rectangle can cover.
            let c0 = ((r.x0 / res - 0.5).ceil().max(0.0) as usize).min(cols);
            let c1 = ((r.x1 / res - 0.5).ceil().max(0.0) as usize).min(cols);
            let r0 = ((r.y0 / res - 0.5).ceil().max(0.0) as usize).min(rows);
            let r1 = ((r.y1 / res - 0.5).ceil().max(0.0) as usize).min(rows);
            for row in r0.saturating_sub(1)..(r1 + 1).min(rows) {
                for col in c0.saturating_sub(1)..(c1 + 1).min(cols) {
                    let center = Vec2::new((col as f64 + 0.5) * res, (row as f64 + 0.5) * res);
                    if r.contains(center) {
                        mask[row * cols + col] = false;
                    }
                }
            }
        }
        Ok(World { config, seed, obstacles, cols, rows, mask })
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn cell_traversable(&self, col: usize, row: usize) -> bool {
        self.mask[row * self.cols + col]
    }

    fn cell_of(&self, p: Vec2) -> Option<(usize, usize)> {
        if !p.is_finite() || p.x < 0.0 || p.y < 0.0 {
            return None;
        }
        let col = (p.x / self.config.resolution).floor() as usize;
        let row = (p.y / self.config.resolution).floor() as usize;
        (col < self.cols && row < self.rows).then_some((col, row))
    }

    /// Points outside the world extent are not traversable.
    pub fn is_traversable(&self, p: Vec2) -> bool {
        self.cell_of(p).is_some_and(|(c, r)| self.cell_traversable(c, r))
    }

    pub fn surface(&self, p: Vec2) -> Surface {
        let Some((col, row)) = self.cell_of(p) else {
            return Surface::Blocked;
        };
        if !self.cell_traversable(col, row) {
            return Surface::Blocked;
        }
        let reach = (SIDEWALK_WIDTH / self.config.resolution).round() as isize;
        for dr in -reach..=reach {
            for dc in -reach..=reach {
                let (c, r) = (col as isize + dc, row as isize + dr);
                if c < 0 || r < 0 || c >= self.cols as isize || r >= self.rows as isize {
                    continue;
                }
                if !self.cell_traversable(c as usize, r as usize) {
                    return Surface::Sidewalk;
                }
            }
        }
        Surface::Road
    }

    pub fn blocked_fraction(&self) -> f64 {
        self.mask.iter().filter(|t| !**t).count() as f64 / self.mask.len() as f64
    }

    /// Centers of the street junctions of the layout.
    pub fn junctions(&self) -> Vec<Vec2> {
        let c = &self.config;
        match c.layout {
            Layout::Grid { block_pitch, .. } => {
                let (nx, ny) = (lattice_nodes(c.extent_x, block_pitch), lattice_nodes(c.extent_y, block_pitch));
                (1..=ny)
                    .flat_map(|j| (1..=nx).map(move |i| Vec2::new(i as f64 * block_pitch, j as f64 * block_pitch)))
                    .collect()
            }
            Layout::TJunction { .. } => vec![Vec2::new(c.extent_x / 2.0, 0.7 * c.extent_y)],
        }
    }

    /// Sizes of the 4-connected traversable components, largest first.
    pub fn traversable_components(&self) -> Vec<usize> {
        let mut label = vec![false; self.mask.len()];
        let mut sizes = Vec::new();
        let mut stack = Vec::new();
        for start in 0..self.mask.len() {
            if !self.mask[start] || label[start] {
                continue;
            }
            label[start] = true;
            stack.push(start);
            let mut size = 0;
            while let Some(i) = stack.pop() {
                size += 1;
                let (c, r) = (i % self.cols, i / self.cols);
                let mut visit = |j: usize| {
                    if self.mask[j] && !label[j] {
                        label[j] = true;
                        stack.push(j);
                    }
                };
                if c > 0 {
                    visit(i - 1);
                }
                if c + 1 < self.cols {
                    visit(i + 1);
                }
                if r > 0 {
                    visit(i - self.cols);
                }
                if r + 1 < self.rows {
                    visit(i + self.cols);
                }
            }
            sizes.push(size);
        }
        sizes.sort_unstable_by(|a, b| b.cmp(a));
        sizes
    }
}

/// Deterministic world generation from `(seed, config)`.
/// Number of interior lattice lines along an extent; junctions sit at
/// multiples `1..=n` of the pitch.
pub(crate) fn lattice_nodes(extent: f64, pitch: f64) -> i64 {
    ((extent / pitch).ceil() as i64 - 1).max(0)
}

type Edge = ((i64, i64), u8);

/// Street segments to close, as `(lower node, 0 for +x | 1 for +y)`. Every
/// junction keeps at least two open streets and the network stays
/// connected.
fn street_closures(nx: i64, ny: i64, fraction: f64, rng: &mut ChaCha8Rng) -> Vec<Edge> {
    let mut edges: Vec<Edge> = Vec::new();
    for j in 1..=ny {
        for i in 1..=nx {
            if i < nx {
                edges.push(((i, j), 0));
            }
            if j < ny {
                edges.push(((i, j), 1));
            }
        }
    }
    let target = (fraction * edges.len() as f64).round() as usize;
    edges.shuffle(rng);
    let far = |((i, j), d): Edge| if d == 0 { (i + 1, j) } else { (i, j + 1) };
    let mut closed: Vec<Edge> = Vec::new();
    let open = |closed: &[Edge], a: (i64, i64), b: (i64, i64)| {
        let e = if a <= b { (a, b) } else { (b, a) };
        !closed.iter().any(|c| (c.0, far(*c)) == e)
    };
    let neighbours = |closed: &[Edge], n: (i64, i64)| -> Vec<(i64, i64)> {
        [(1, 0), (-1, 0), (0, 1), (0, -1)]
            .iter()
            .map(|(di, dj)| (n.0 + di, n.1 + dj))
            .filter(|m| (1..=nx).contains(&m.0) && (1..=ny).contains(&m.1) && open(closed, n, *m))
            .collect()
    };
    for e in edges {
        if closed.len() == target {
            break;
        }
        let (a, b) = (e.0, far(e));
        if neighbours(&closed, a).len() <= 2 || neighbours(&closed, b).len() <= 2 {
            continue;
        }
        closed.push(e);
        let mut seen = vec![(1, 1)];
        let mut stack = vec![(1, 1)];
        while let Some(n) = stack.pop() {
            for m in neighbours(&closed, n) {
                if !seen.contains(&m) {
                    seen.push(m);
                    stack.push(m);
                }
            }
        }
        if seen.len() != (nx * ny) as usize {
            closed.pop();
        }
    }
    closed.sort();
    closed
}

pub fn generate_world(seed: u64, config: &WorldConfig) -> Result<World> {
    config.grid_size()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (ex, ey) = (config.extent_x, config.extent_y);
    let obstacles = match config.layout {
        Layout::Grid { block_pitch, closed_streets, enclosed } => {
            if !(block_pitch > 0.0) {
                return Err(Error::Config(format!("block pitch must be positive, got {block_pitch}")));
            }
            if !(0.0..=1.0).contains(&closed_streets) {
                return Err(Error::Config(format!("closed street fraction {closed_streets} outside [0, 1]")));
            }
            let mut rects = Vec::new();
            if config.obstacle_density > 0.0 {
                let nx = (ex / block_pitch).ceil() as usize;
                let ny = (ey / block_pitch).ceil() as usize;
                let max_side = block_pitch - 2.0 * config.resolution;
                for bj in 0..ny {
                    for bi in 0..nx {
                        let jitter: f64 = rng.random_range(0.85..1.15);
                        let side = (block_pitch * (config.obstacle_density * jitter).sqrt()).min(max_side);
                        let cx = (bi as f64 + 0.5) * block_pitch;
                        let cy = (bj as f64 + 0.5) * block_pitch;
                        let r = Rect {
                            x0: (cx - side / 2.0).max(0.0),
                            y0: (cy - side / 2.0).max(0.0),
                            x1: (cx + side / 2.0).min(ex),
                            y1: (cy + side / 2.0).min(ey),
                        };
                        if r.x1 > r.x0 && r.y1 > r.y0 {
                            rects.push(r);
                        }
                    }
                }
                let (nx, ny) = (lattice_nodes(ex, block_pitch), lattice_nodes(ey, block_pitch));
                // Closures stop at the nominal building faces so that the
                // junction they touch keeps its full width.
                let gap = block_pitch * (1.0 - config.obstacle_density.sqrt()) / 2.0;
                let half = block_pitch / 2.0;
                for ((i, j), d) in street_closures(nx, ny, closed_streets, &mut rng) {
                    let (x, y) = (i as f64 * block_pitch, j as f64 * block_pitch);
                    rects.push(match d {
                        0 => Rect { x0: x + gap, y0: y - half, x1: x + block_pitch - gap, y1: y + half },
                        _ => Rect { x0: x - half, y0: y + gap, x1: x + half, y1: y + block_pitch - gap },
                    });
                }
                if enclosed {
                    let (left, bottom) = (block_pitch - gap, block_pitch - gap);
                    let (right, top) = (nx as f64 * block_pitch + gap, ny as f64 * block_pitch + gap);
                    rects.extend([
                        Rect { x0: 0.0, y0: 0.0, x1: left, y1: ey },
                        Rect { x0: right, y0: 0.0, x1: ex, y1: ey },
                        Rect { x0: 0.0, y0: 0.0, x1: ex, y1: bottom },
                        Rect { x0: 0.0, y0: top, x1: ex, y1: ey },
                    ]);
                }
            }
            rects
        }
        Layout::TJunction { road_width } => {
            if !(road_width > 0.0) || road_width >= ex.min(ey) {
                return Err(Error::Config(format!("road width {road_width} does not fit the extent")));
            }
            let (xc, yc, half) = (ex / 2.0, 0.7 * ey, road_width / 2.0);
            vec![
                Rect { x0: 0.0, y0: 0.0, x1: xc - half, y1: yc - half },
                Rect { x0: xc + half, y0: 0.0, x1: ex, y1: yc - half },
                Rect { x0: 0.0, y0: yc + half, x1: ex, y1: ey },
            ]
        }
    };
    let world = World::from_obstacles(*config, seed, obstacles)?;
    if world.traversable_components().is_empty() {
        return Err(Error::Generation("no traversable region".into()));
    }
    Ok(world)
}
