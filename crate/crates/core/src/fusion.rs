//! Rejection sampling of generator proposals against a scene score.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::ade;
use crate::gan::{NoiseStream, Proposer};
use crate::scene::Scene;
use crate::seed::derive_seed;
use crate::traj::{transform_to_world, Pose2D, RelativeTrajectory, Trajectory, Vec2};

/// Stream index of the acceptance uniforms, kept apart from the proposal
/// noise so that proposals match the scene-free sampler draw for draw.
const ACCEPT_STREAM: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FusionConfig {
    pub k: usize,
    pub max_proposals: usize,
    pub seed: u64,
}

impl Default for FusionConfig {
    fn default() -> Self {
        FusionConfig { k: 20, max_proposals: 2000, seed: 0 }
    }
}

impl FusionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.max_proposals < self.k {
            return Err(Error::Config(format!(
                "fusion needs k >= 1 and max_proposals >= k, got k={} max_proposals={}",
                self.k, self.max_proposals
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionSet {
    /// World-frame trajectories: accepted samples first, then any fallback
    /// fill in descending score order.
    pub accepted: Vec<Trajectory>,
    pub scores: Vec<f64>,
    /// Number of leading entries that passed the acceptance test.
    pub num_accepted: usize,
    pub proposals_drawn: usize,
    pub acceptance_rate: f64,
    pub fallback_used: bool,
    pub seed: u64,
    pub agent: Pose2D,
}

impl PredictionSet {
    pub fn len(&self) -> usize {
        self.accepted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.accepted.is_empty()
    }
}

/// Draws proposals from `proposer` with the noise stream seeded by
/// `cfg.seed`, accepting each with probability equal to its scene score,
/// until `cfg.k` are accepted or `cfg.max_proposals` are drawn.
///
/// When the budget runs out, the remaining slots are filled with the
/// highest-scoring rejected proposals that have a positive score; if no
/// drawn proposal scored above zero, the top-k by score are returned
/// unfiltered. Either way `fallback_used` is set.
pub fn fuse<P: Proposer + ?Sized>(
    proposer: &P,
    past: &RelativeTrajectory,
    agent: &Pose2D,
    scene: &Scene,
    cfg: &FusionConfig,
) -> Result<PredictionSet> {
    cfg.validate()?;
    let mut draw = proposer.condition(past)?;
    let mut stream = NoiseStream::new(cfg.seed);
    let mut accept_rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, ACCEPT_STREAM));
    let mut accepted = Vec::with_capacity(cfg.k);
    let mut scores = Vec::with_capacity(cfg.k);
    let mut rejected: Vec<(Trajectory, f64)> = Vec::new();
    let mut drawn = 0;
    while accepted.len() < cfg.k && drawn < cfg.max_proposals {
        let world = transform_to_world(&draw(&mut stream), agent)?;
        let p = scene.score(&world);
        drawn += 1;
        if accept_rng.random::<f64>() < p {
            accepted.push(world);
            scores.push(p);
        } else {
            rejected.push((world, p));
        }
    }
    let num_accepted = accepted.len();
    let fallback_used = num_accepted < cfg.k;
    if fallback_used {
        // Stable sort keeps draw order among equal scores.
        rejected.sort_by(|a, b| b.1.total_cmp(&a.1));
        let any_positive = num_accepted > 0 || rejected.first().is_some_and(|r| r.1 > 0.0);
        for (t, p) in rejected {
            if accepted.len() == cfg.k || (any_positive && p <= 0.0) {
                break;
            }
            accepted.push(t);
            scores.push(p);
        }
    }
    Ok(PredictionSet {
        accepted,
        scores,
        num_accepted,
        proposals_drawn: drawn,
        acceptance_rate: num_accepted as f64 / drawn as f64,
        fallback_used,
        seed: cfg.seed,
        agent: *agent,
    })
}

/// How a single trajectory is chosen from a prediction set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selection {
    Random,
    Mean,
    MinK,
}

impl Selection {
    pub const ALL: [Selection; 3] = [Selection::Random, Selection::Mean, Selection::MinK];

    pub fn name(self) -> &'static str {
        match self {
            Selection::Random => "random",
            Selection::Mean => "mean",
            Selection::MinK => "min_k",
        }
    }
}

/// Uniformly random index drawn from `seed`.
pub fn random_index(n: usize, seed: u64) -> usize {
    ChaCha8Rng::seed_from_u64(seed).random_range(0..n)
}

/// Index of the trajectory with the lowest ADE against `truth`, first on
/// ties.
pub fn min_ade_index(trajectories: &[Trajectory], truth: &Trajectory) -> Result<usize> {
    let mut best = (f64::INFINITY, 0);
    for (i, t) in trajectories.iter().enumerate() {
        let e = ade(t, truth)?;
        if e < best.0 {
            best = (e, i);
        }
    }
    Ok(best.1)
}

/// Per-step mean of displacement vectors, accumulated from `origin`.
pub fn mean_trajectory(trajectories: &[Trajectory], origin: Vec2) -> Result<Trajectory> {
    let first = trajectories.first().ok_or_else(|| Error::DegenerateInput("mean of an empty set".into()))?;
    let (n, dt) = (first.len(), first.dt());
    let mut sums = vec![Vec2::ZERO; n];
    for t in trajectories {
        if t.len() != n {
            return Err(Error::ShapeMismatch { what: "trajectory in mean".into(), expected: n, got: t.len() });
        }
        crate::traj::ensure_same_dt(dt, t.dt())?;
        let mut prev = origin;
        for (s, p) in sums.iter_mut().zip(t.positions()) {
            *s += *p - prev;
            prev = *p;
        }
    }
    let scale = 1.0 / trajectories.len() as f64;
    let mut pos = origin;
    let positions = sums
        .iter()
        .map(|s| {
            pos += *s * scale;
            pos
        })
        .collect();
    Trajectory::new(positions, dt)
}

/// Picks one trajectory from `pred`. `seed` drives the random strategy;
/// `truth` is required for min-k.
pub fn select(pred: &PredictionSet, strategy: Selection, seed: u64, truth: Option<&Trajectory>) -> Result<Trajectory> {
    select_from(&pred.accepted, pred.agent.position, strategy, seed, truth)
}

pub fn select_from(
    set: &[Trajectory],
    origin: Vec2,
    strategy: Selection,
    seed: u64,
    truth: Option<&Trajectory>,
) -> Result<Trajectory> {
    if set.is_empty() {
        return Err(Error::DegenerateInput("cannot select from an empty prediction set".into()));
    }
    match strategy {
        Selection::Random => Ok(set[random_index(set.len(), seed)].clone()),
        Selection::Mean => mean_trajectory(set, origin),
        Selection::MinK => {
            let truth = truth.ok_or_else(|| Error::Config("min_k selection needs the ground truth".into()))?;
            Ok(set[min_ade_index(set, truth)?].clone())
        }
    }
}

/// One JSON-lines record per trajectory of a prediction set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictionRecord {
    pub index: usize,
    pub waypoints: Vec<[f64; 2]>,
    pub score: f64,
    /// True for entries added by the fallback fill.
    pub fallback: bool,
    pub selected_by: Vec<Selection>,
    pub proposals_drawn: usize,
    pub acceptance_rate: f64,
    pub seed: u64,
}

/// Exports `pred`, tagging entries chosen by the random strategy (with
/// `selection_seed`) and, when `truth` is given, by min-k.
pub fn export_jsonl(pred: &PredictionSet, selection_seed: u64, truth: Option<&Trajectory>) -> Result<String> {
    let mut out = String::new();
    if pred.is_empty() {
        return Ok(out);
    }
    let random = random_index(pred.len(), selection_seed);
    let min_k = truth.map(|t| min_ade_index(&pred.accepted, t)).transpose()?;
    for (i, (t, s)) in pred.accepted.iter().zip(&pred.scores).enumerate() {
        let mut selected_by = Vec::new();
        if i == random {
            selected_by.push(Selection::Random);
        }
        if min_k == Some(i) {
            selected_by.push(Selection::MinK);
        }
        let rec = PredictionRecord {
            index: i,
            waypoints: t.positions().iter().map(|p| [p.x, p.y]).collect(),
            score: *s,
            fallback: i >= pred.num_accepted,
            selected_by,
            proposals_drawn: pred.proposals_drawn,
            acceptance_rate: pred.acceptance_rate,
            seed: pred.seed,
        };
        out.push_str(&serde_json::to_string(&rec)?);
        out.push('\n');
    }
    Ok(out)
}

pub fn parse_jsonl(text: &str) -> Result<Vec<PredictionRecord>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::format("prediction set", format!("line {}: {e}", i + 1)))
        })
        .collect()
}
