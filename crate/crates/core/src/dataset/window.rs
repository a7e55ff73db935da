use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::format::SplitTag;
use crate::error::{Error, Result};
use crate::gan::{OBS_LEN, PRED_LEN};
use crate::traj::{to_absolute, transform_to_world, Pose2D, RelativeTrajectory, Trajectory, Vec2};

/// Displacements shorter than this do not define a heading.
const HEADING_MIN_STEP: f64 = 1e-6;

/// A fixed-size training window in the agent-local frame at its current
/// time step.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainInstance {
    pub past: RelativeTrajectory,
    pub future: RelativeTrajectory,
    pub agent_pose: Pose2D,
    pub log_id: String,
    /// Index of the first window position in the source log.
    pub start: usize,
    pub scene_id: Option<String>,
}

impl TrainInstance {
    /// Index of the current time step in the source log.
    pub fn current(&self) -> usize {
        self.start + OBS_LEN
    }

    /// Past positions, current position and future positions in world
    /// coordinates.
    pub fn world_segment(&self) -> Trajectory {
        let pose = &self.agent_pose;
        let past_world = self.past.rotated(pose.heading());
        let total = past_world.displacements().iter().fold(Vec2::ZERO, |acc, d| acc + *d);
        let origin = pose.position - total;
        let mut points = vec![origin];
        points.extend(to_absolute(&past_world, origin).expect("past is finite").positions());
        points.pop();
        points.push(pose.position);
        points.extend(transform_to_world(&self.future, pose).expect("future is finite").positions());
        Trajectory::new(points, self.past.dt()).expect("window is non-empty and finite")
    }
}

fn heading_of(displacements: &[Vec2]) -> f64 {
    displacements.iter().rev().find(|d| d.norm() > HEADING_MIN_STEP).map_or(0.0, |d| d.y.atan2(d.x))
}

/// Stride-1 windows over a log; logs shorter than `OBS_LEN + PRED_LEN + 1`
/// yield nothing.
/// Lateral distance within which a junction counts as lying on the path
/// ahead.
pub const JUNCTION_LATERAL_TOLERANCE: f64 = 2.0;

/// True when some junction lies ahead of the agent, more than `near` and
/// at most `reach` meters along its heading.
pub fn approaches_junction(inst: &TrainInstance, junctions: &[Vec2], near: f64, reach: f64) -> bool {
    junctions.iter().any(|j| {
        let l = inst.agent_pose.to_local(*j);
        l.x > near && l.x <= reach && l.y.abs() < JUNCTION_LATERAL_TOLERANCE
    })
}

pub fn window_log(traj: &Trajectory, log_id: &str) -> Vec<TrainInstance> {
    let span = OBS_LEN + PRED_LEN;
    if traj.len() <= span {
        return Vec::new();
    }
    let pos = traj.positions();
    let dt = traj.dt();
    (0..traj.len() - span)
        .map(|start| {
            let now = start + OBS_LEN;
            let steps = |a: usize, b: usize| -> Vec<Vec2> { (a..b).map(|i| pos[i + 1] - pos[i]).collect() };
            let past = steps(start, now);
            let heading = heading_of(&past);
            let agent_pose = Pose2D::new(pos[now], heading);
            let local = |d: Vec<Vec2>| {
                RelativeTrajectory::new(d, dt).expect("window steps are non-empty and finite").rotated(-heading)
            };
            TrainInstance {
                past: local(past),
                future: local(steps(now, now + PRED_LEN)),
                agent_pose,
                log_id: log_id.to_string(),
                start,
                scene_id: None,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Default)]
pub struct DatasetSplit {
    pub train: Vec<TrainInstance>,
    pub val: Vec<TrainInstance>,
    pub test: Vec<TrainInstance>,
    pub split_seed: u64,
    /// Split of every source log, in input order.
    pub assignment: Vec<(String, SplitTag)>,
}

impl DatasetSplit {
    pub fn part(&self, tag: SplitTag) -> &[TrainInstance] {
        match tag {
            SplitTag::Train => &self.train,
            SplitTag::Val => &self.val,
            SplitTag::Test => &self.test,
        }
    }
}

/// Assigns whole logs to train/val/test in proportion to `ratios`, with at
/// least one log per split.
pub fn split_dataset(logs: Vec<(String, Vec<TrainInstance>)>, ratios: [f64; 3], seed: u64) -> Result<DatasetSplit> {
    let n = logs.len();
    if n < 3 {
        return Err(Error::InsufficientData(format!("need at least 3 source logs, got {n}")));
    }
    if ratios.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
        return Err(Error::Config(format!("split ratios must be positive: {ratios:?}")));
    }
    let sum: f64 = ratios.iter().sum();
    let share = |r: f64| ((n as f64 * r / sum).round() as usize).max(1);
    let n_val = share(ratios[1]).min(n - 2);
    let n_test = share(ratios[2]).min(n - 1 - n_val);

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut tags = vec![SplitTag::Train; n];
    for &i in &order[..n_val] {
        tags[i] = SplitTag::Val;
    }
    for &i in &order[n_val..n_val + n_test] {
        tags[i] = SplitTag::Test;
    }

    let mut split = DatasetSplit { split_seed: seed, ..DatasetSplit::default() };
    for ((log_id, instances), tag) in logs.into_iter().zip(tags) {
        match tag {
            SplitTag::Train => split.train.extend(instances),
            SplitTag::Val => split.val.extend(instances),
            SplitTag::Test => split.test.extend(instances),
        }
        split.assignment.push((log_id, tag));
    }
    Ok(split)
}
