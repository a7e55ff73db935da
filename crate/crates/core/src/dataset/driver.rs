//! Waypoint-following unicycle driver producing synthetic trajectory logs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::format::quantize;
use super::world::{lattice_nodes, Layout, World};
use crate::error::{Error, Result};
use crate::traj::{normalize_angle, Trajectory, Vec2, DT};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DriverConfig {
    /// Target length of each run in seconds.
    pub run_duration: f64,
    pub cruise_speed_min: f64,
    pub cruise_speed_max: f64,
    /// Speed used while negotiating a turn.
    pub turn_speed: f64,
    pub max_speed: f64,
    pub max_accel: f64,
    pub max_turn_rate: f64,
    /// Heading noise standard deviation per recorded step (radians).
    pub heading_noise: f64,
    /// Probability of turning at a junction when going straight is possible.
    pub turn_probability: f64,
    /// Probability of a full stop at a junction.
    pub stop_probability: f64,
    pub stop_duration_min: f64,
    pub stop_duration_max: f64,
    pub lookahead: f64,
    pub substep: f64,
}

impl Default for DriverConfig {
    fn default() -> Self {
        DriverConfig {
            run_duration: 90.0,
            cruise_speed_min: 1.2,
            cruise_speed_max: 1.8,
            turn_speed: 0.8,
            max_speed: 2.0,
            max_accel: 0.8,
            max_turn_rate: 1.0,
            heading_noise: 0.05,
            turn_probability: 0.6,
            stop_probability: 0.2,
            stop_duration_min: 1.0,
            stop_duration_max: 3.0,
            lookahead: 1.5,
            substep: 0.05,
        }
    }
}

impl DriverConfig {
    fn validate(&self) -> Result<()> {
        let positive = [
            self.run_duration,
            self.cruise_speed_min,
            self.turn_speed,
            self.max_accel,
            self.max_turn_rate,
            self.lookahead,
            self.substep,
        ];
        if positive.iter().any(|v| !(v.is_finite() && *v > 0.0))
            || !(self.cruise_speed_min <= self.cruise_speed_max)
            || !(self.cruise_speed_max <= self.max_speed)
            || !(self.turn_speed <= self.max_speed)
            || !(self.heading_noise >= 0.0)
            || !(0.0..=1.0).contains(&self.turn_probability)
            || !(0.0..=1.0).contains(&self.stop_probability)
            || !(0.0 <= self.stop_duration_min && self.stop_duration_min <= self.stop_duration_max)
        {
            return Err(Error::Config(format!("invalid driver config: {self:?}")));
        }
        let steps = DT / self.substep;
        if (steps - steps.round()).abs() > 1e-9 {
            return Err(Error::Config(format!("substep {} does not divide {DT}", self.substep)));
        }
        Ok(())
    }
}

/// A polyline route with per-vertex behavior.
#[derive(Debug, Clone)]
pub struct Route {
    pub points: Vec<Vec2>,
    /// Vertices where the route changes direction.
    pub turns: Vec<bool>,
    /// Stop duration at each vertex (0 for no stop).
    pub stops: Vec<f64>,
}

#[derive(Debug, Clone, Default)]
pub struct DriveOutcome {
    pub trajectories: Vec<Trajectory>,
    /// `(run index, reason)` for runs that were abandoned.
    pub skipped: Vec<(usize, String)>,
}

const DIRS: [(i64, i64); 4] = [(1, 0), (0, 1), (-1, 0), (0, -1)];

fn grid_route(world: &World, pitch: f64, length: f64, cfg: &DriverConfig, rng: &mut ChaCha8Rng) -> Result<Route> {
    let nx = lattice_nodes(world.config.extent_x, pitch);
    let ny = lattice_nodes(world.config.extent_y, pitch);
    if nx < 2 || ny < 2 {
        return Err(Error::Config(format!("extent too small for a {pitch} m block lattice")));
    }
    let node = |i: i64, j: i64| Vec2::new(i as f64 * pitch, j as f64 * pitch);
    let (mut i, mut j) = (rng.random_range(1..=nx), rng.random_range(1..=ny));
    // A street is usable when both ends are interior junctions and its
    // midpoint has not been built over.
    let open = |i: i64, j: i64, d: usize| {
        let (ni, nj) = (i + DIRS[d].0, j + DIRS[d].1);
        (1..=nx).contains(&ni) && (1..=ny).contains(&nj) && world.is_traversable((node(i, j) + node(ni, nj)) * 0.5)
    };
    let options: Vec<usize> = (0..4).filter(|&d| open(i, j, d)).collect();
    let mut dir = options[rng.random_range(0..options.len())];

    let mut route = Route { points: vec![node(i, j)], turns: vec![false], stops: vec![0.0] };
    let mut travelled = 0.0;
    while travelled < length {
        i += DIRS[dir].0;
        j += DIRS[dir].1;
        travelled += pitch;
        route.points.push(node(i, j));
        let straight_ok = open(i, j, dir);
        let sides: Vec<usize> = [(dir + 1) % 4, (dir + 3) % 4].into_iter().filter(|&d| open(i, j, d)).collect();
        let new_dir = if sides.is_empty() || (straight_ok && rng.random::<f64>() >= cfg.turn_probability) {
            dir
        } else {
            sides[rng.random_range(0..sides.len())]
        };
        let stop = if rng.random::<f64>() < cfg.stop_probability {
            rng.random_range(cfg.stop_duration_min..=cfg.stop_duration_max)
        } else {
            0.0
        };
        if new_dir == dir && !straight_ok {
            // Every junction keeps two open streets, so this means the world
            // was not generated by the lattice layout.
            return Err(Error::Generation("route reached a dead end".into()));
        }
        route.turns.push(new_dir != dir);
        route.stops.push(stop);
        dir = new_dir;
    }
    Ok(route)
}

fn t_junction_route(world: &World, road_width: f64, cfg: &DriverConfig, rng: &mut ChaCha8Rng) -> Route {
    let (ex, ey) = (world.config.extent_x, world.config.extent_y);
    let (xc, yc) = (ex / 2.0, 0.7 * ey);
    let lateral = rng.random_range(-0.15..0.15) * road_width;
    let end_x = if rng.random::<bool>() { 1.0 } else { ex - 1.0 };
    let stop = if rng.random::<f64>() < cfg.stop_probability {
        rng.random_range(cfg.stop_duration_min..=cfg.stop_duration_max)
    } else {
        0.0
    };
    Route {
        points: vec![
            Vec2::new(xc + lateral, 1.0),
            Vec2::new(xc + lateral, yc + lateral),
            Vec2::new(end_x, yc + lateral),
        ],
        turns: vec![false, true, false],
        stops: vec![0.0, stop, 0.0],
    }
}

/// Arc-length parametrized polyline.
struct Path<'a> {
    route: &'a Route,
    cumulative: Vec<f64>,
}

impl<'a> Path<'a> {
    fn new(route: &'a Route) -> Self {
        let mut cumulative = vec![0.0];
        for w in route.points.windows(2) {
            cumulative.push(cumulative.last().unwrap() + w[0].distance(w[1]));
        }
        Path { route, cumulative }
    }

    fn total(&self) -> f64 {
        *self.cumulative.last().unwrap()
    }

    fn point_at(&self, s: f64) -> Vec2 {
        let s = s.clamp(0.0, self.total());
        let seg = self.cumulative.partition_point(|c| *c <= s).clamp(1, self.cumulative.len() - 1) - 1;
        let len = self.cumulative[seg + 1] - self.cumulative[seg];
        let a = self.route.points[seg];
        if len <= 0.0 {
            return a;
        }
        let frac = (s - self.cumulative[seg]) / len;
        a + (self.route.points[seg + 1] - a) * frac
    }

    /// Projects `p` onto segments `from..`, returning arc length and segment.
    fn project(&self, p: Vec2, from: usize) -> (f64, usize) {
        let mut best = (f64::INFINITY, self.cumulative[from], from);
        let last = (from + 2).min(self.route.points.len() - 1);
        for seg in from..last {
            let (a, b) = (self.route.points[seg], self.route.points[seg + 1]);
            let ab = b - a;
            let len2 = ab.dot(ab);
            let t = if len2 > 0.0 { ((p - a).dot(ab) / len2).clamp(0.0, 1.0) } else { 0.0 };
            let q = a + ab * t;
            let d = p.distance(q);
            if d < best.0 {
                best = (d, self.cumulative[seg] + t * len2.sqrt(), seg);
            }
        }
        (best.1, best.2)
    }
}

/// Simulates one run along `route`. Positions are recorded every `DT`
/// starting at the first route vertex.
fn simulate(world: &World, route: &Route, cfg: &DriverConfig, rng: &mut ChaCha8Rng) -> Result<Trajectory> {
    let path = Path::new(route);
    let cruise = rng.random_range(cfg.cruise_speed_min..=cfg.cruise_speed_max);
    let noise = Normal::new(0.0, cfg.heading_noise).expect("validated noise");
    let substeps = (DT / cfg.substep).round() as usize;
    let max_steps = (cfg.run_duration / DT).round() as usize;

    let start = route.points[0];
    let first = route.points[1] - start;
    let mut pos = start;
    let mut heading = first.y.atan2(first.x);
    let mut speed = 0.0;
    let mut seg = 0;
    // Next vertex whose stop/turn behavior is still pending.
    let mut next_vertex = 1;
    let mut stop_left = 0.0;
    let mut positions = vec![quantize_point(pos)];

    'outer: while positions.len() <= max_steps {
        for _ in 0..substeps {
            let (s, new_seg) = path.project(pos, seg);
            seg = new_seg;
            if path.total() - s < 0.5 {
                break 'outer;
            }
            while next_vertex < route.points.len() - 1 && path.cumulative[next_vertex] < s - 0.5 {
                next_vertex += 1;
            }
            let to_vertex = path.cumulative[next_vertex] - s;
            let mut target: f64 = cruise;
            if stop_left > 0.0 {
                stop_left -= cfg.substep;
                target = 0.0;
                if stop_left <= 0.0 {
                    next_vertex += 1;
                }
            } else if next_vertex < route.points.len() - 1 {
                let stop = route.stops[next_vertex];
                if stop > 0.0 {
                    // Brake to rest at the vertex.
                    target = target.min((2.0 * cfg.max_accel * (to_vertex - 0.2).max(0.0)).sqrt());
                    if to_vertex < 0.4 && speed < 0.05 {
                        stop_left = stop;
                        target = 0.0;
                    }
                } else if route.turns[next_vertex] && to_vertex < 3.0 {
                    target = target.min(cfg.turn_speed);
                }
                // Keep the turn speed while exiting a corner.
                let prev = next_vertex - 1;
                if route.turns[prev] && s - path.cumulative[prev] < 2.0 {
                    target = target.min(cfg.turn_speed);
                }
            }
            let dv = (target - speed).clamp(-cfg.max_accel * cfg.substep, cfg.max_accel * cfg.substep);
            speed = (speed + dv).clamp(0.0, cfg.max_speed);

            let look = path.point_at(s + cfg.lookahead);
            let to = look - pos;
            let err = normalize_angle(to.y.atan2(to.x) - heading);
            let omega = (2.5 * err).clamp(-cfg.max_turn_rate, cfg.max_turn_rate);
            if speed > 0.0 {
                heading = normalize_angle(heading + omega * cfg.substep);
            }
            pos += Vec2::new(heading.cos(), heading.sin()) * (speed * cfg.substep);
            if !world.is_traversable(pos) {
                return Err(Error::Generation(format!("left traversable ground at ({:.2}, {:.2})", pos.x, pos.y)));
            }
        }
        if speed > 0.0 {
            heading = normalize_angle(heading + noise.sample(rng));
        }
        positions.push(quantize_point(pos));
    }
    let traj = Trajectory::new(positions, DT)?;
    if traj.positions().iter().any(|p| !world.is_traversable(*p)) {
        return Err(Error::Generation("recorded waypoint off traversable ground".into()));
    }
    Ok(traj)
}

fn quantize_point(p: Vec2) -> Vec2 {
    Vec2::new(quantize(p.x), quantize(p.y))
}

fn run_rng(seed: u64, run: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(run as u64 + 1);
    rng
}

/// Drives `n_runs` independent runs through the world's street layout.
/// Runs that fail are skipped and reported rather than aborting.
pub fn drive_scenarios(world: &World, n_runs: usize, seed: u64, cfg: &DriverConfig) -> Result<DriveOutcome> {
    cfg.validate()?;
    let mut out = DriveOutcome::default();
    for run in 0..n_runs {
        let mut rng = run_rng(seed, run);
        let route = match world.config.layout {
            Layout::Grid { block_pitch, .. } => {
                let length = cfg.run_duration * cfg.max_speed + 2.0 * block_pitch;
                grid_route(world, block_pitch, length, cfg, &mut rng)?
            }
            Layout::TJunction { road_width } => t_junction_route(world, road_width, cfg, &mut rng),
        };
        match simulate(world, &route, cfg, &mut rng) {
            Ok(t) => out.trajectories.push(t),
            Err(e) => out.skipped.push((run, e.to_string())),
        }
    }
    Ok(out)
}

/// Constant-speed straight-line run with no noise.
pub fn drive_straight(world: &World, start: Vec2, heading: f64, speed: f64, steps: usize) -> Result<Trajectory> {
    if !(speed.is_finite() && speed >= 0.0) || !heading.is_finite() {
        return Err(Error::Config(format!("invalid straight run: speed {speed}, heading {heading}")));
    }
    let dir = Vec2::new(heading.cos(), heading.sin());
    let positions: Vec<Vec2> = (0..=steps).map(|i| start + dir * (speed * DT * i as f64)).collect();
    if let Some(p) = positions.iter().find(|p| !world.is_traversable(**p)) {
        return Err(Error::Generation(format!("straight run leaves traversable ground at ({}, {})", p.x, p.y)));
    }
    Trajectory::new(positions, DT)
}
