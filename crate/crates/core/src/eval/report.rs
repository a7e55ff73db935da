use serde::{Deserialize, Serialize};

use super::metrics::{ade, fde};
use crate::dataset::TrainInstance;
use crate::error::{Error, Result};
use crate::fusion::{fuse, select_from, FusionConfig, Selection};
use crate::gan::{sample_k, Proposer};
use crate::scene::{classify_waypoint, Scene, WaypointScore};
use crate::seed::derive_seed;
use crate::traj::{transform_to_world, Trajectory};

const SELECTION_STREAM: u64 = 2;

/// A test instance together with the scene observed at its current step.
#[derive(Debug, Clone)]
pub struct EvalCase {
    pub instance: TrainInstance,
    pub scene: Scene,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErrorPair {
    pub ade: f64,
    pub fde: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectionTable {
    pub random: ErrorPair,
    pub mean: ErrorPair,
    pub min_k: ErrorPair,
}

impl SelectionTable {
    pub fn get(&self, s: Selection) -> ErrorPair {
        match s {
            Selection::Random => self.random,
            Selection::Mean => self.mean,
            Selection::MinK => self.min_k,
        }
    }

    fn get_mut(&mut self, s: Selection) -> &mut ErrorPair {
        match s {
            Selection::Random => &mut self.random,
            Selection::Mean => &mut self.mean,
            Selection::MinK => &mut self.min_k,
        }
    }

    fn values(&self) -> [f64; 6] {
        let (r, m, k) = (self.random, self.mean, self.min_k);
        [r.ade, r.fde, m.ade, m.fde, k.ade, k.fde]
    }

    fn map2(&self, other: &SelectionTable, f: impl Fn(f64, f64) -> f64) -> SelectionTable {
        let pair = |a: ErrorPair, b: ErrorPair| ErrorPair { ade: f(a.ade, b.ade), fde: f(a.fde, b.fde) };
        SelectionTable {
            random: pair(self.random, other.random),
            mean: pair(self.mean, other.mean),
            min_k: pair(self.min_k, other.min_k),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceResult {
    pub log_id: String,
    pub start: usize,
    pub baseline: SelectionTable,
    pub fused: SelectionTable,
    pub acceptance_rate: f64,
    pub fallback_used: bool,
    /// Baseline proposals with a visible waypoint classified as
    /// non-traversable.
    pub baseline_offroad: usize,
}

/// Errors of both methods under each selection strategy, averaged over the
/// evaluated instances, with the relative improvement of fusion in percent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricReport {
    pub k: usize,
    pub max_proposals: usize,
    pub seed: u64,
    pub num_instances: usize,
    pub baseline: SelectionTable,
    pub fused: SelectionTable,
    pub improvement_pct: SelectionTable,
    pub fallback_count: usize,
    pub mean_acceptance_rate: f64,
    pub baseline_offroad_fraction: f64,
    pub instances: Vec<InstanceResult>,
}

impl MetricReport {
    pub fn all_finite(&self) -> bool {
        [self.baseline, self.fused, self.improvement_pct]
            .iter()
            .flat_map(|t| t.values())
            .chain([self.mean_acceptance_rate, self.baseline_offroad_fraction])
            .all(f64::is_finite)
    }

    /// Six rows (three selections by two metrics) with baseline, fused and
    /// improvement columns.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("selection,metric,baseline,fused,improvement_pct\n");
        for s in Selection::ALL {
            let (b, f, i) = (self.baseline.get(s), self.fused.get(s), self.improvement_pct.get(s));
            out.push_str(&format!("{},ade,{},{},{}\n", s.name(), b.ade, f.ade, i.ade));
            out.push_str(&format!("{},fde,{},{},{}\n", s.name(), b.fde, f.fde, i.fde));
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::format("metric report", e.to_string()))
    }
}

/// Per-instance seeds: proposals and acceptance share the fusion seed, the
/// random selection has its own stream.
pub fn instance_seeds(seed: u64, index: usize) -> (u64, u64) {
    let fusion = derive_seed(seed, index as u64);
    (fusion, derive_seed(fusion, SELECTION_STREAM))
}

fn is_offroad(traj: &Trajectory, scene: &Scene) -> bool {
    traj.positions().iter().any(|p| {
        matches!(classify_waypoint(*p, &scene.seg, &scene.cam, &scene.foot), WaypointScore::Classified(v) if v < 0.5)
    })
}

struct Proposals {
    truth: Trajectory,
    baseline: Vec<Trajectory>,
    fused: crate::fusion::PredictionSet,
}

fn propose<P: Proposer + ?Sized>(
    proposer: &P,
    case: &EvalCase,
    k: usize,
    max_proposals: usize,
    seed: u64,
) -> Result<Proposals> {
    let inst = &case.instance;
    let pose = &inst.agent_pose;
    let baseline = sample_k(proposer, &inst.past, k, seed)?
        .iter()
        .map(|r| transform_to_world(r, pose))
        .collect::<Result<Vec<_>>>()?;
    let cfg = FusionConfig { k, max_proposals, seed };
    Ok(Proposals {
        truth: transform_to_world(&inst.future, pose)?,
        baseline,
        fused: fuse(proposer, &inst.past, pose, &case.scene, &cfg)?,
    })
}

fn errors(set: &[Trajectory], case: &EvalCase, truth: &Trajectory, selection_seed: u64) -> Result<SelectionTable> {
    let mut table = SelectionTable::default();
    for s in Selection::ALL {
        let chosen = select_from(set, case.instance.agent_pose.position, s, selection_seed, Some(truth))?;
        *table.get_mut(s) = ErrorPair { ade: ade(&chosen, truth)?, fde: fde(&chosen, truth)? };
    }
    // Min-k picks by ADE; the FDE column is the minimum over the set on its own.
    table.min_k.fde =
        set.iter().map(|t| fde(t, truth)).collect::<Result<Vec<_>>>()?.into_iter().fold(f64::INFINITY, f64::min);
    Ok(table)
}

/// Evaluates the scene-free baseline and the fused predictor on `cases`
/// with paired noise streams.
pub fn table_report<P: Proposer + ?Sized>(
    proposer: &P,
    cases: &[EvalCase],
    cfg: &FusionConfig,
) -> Result<MetricReport> {
    cfg.validate()?;
    if cases.is_empty() {
        return Err(Error::InsufficientData("no evaluation instances".into()));
    }
    let mut instances = Vec::with_capacity(cases.len());
    for (i, case) in cases.iter().enumerate() {
        let (seed, selection_seed) = instance_seeds(cfg.seed, i);
        let p = propose(proposer, case, cfg.k, cfg.max_proposals, seed)?;
        instances.push(InstanceResult {
            log_id: case.instance.log_id.clone(),
            start: case.instance.start,
            baseline: errors(&p.baseline, case, &p.truth, selection_seed)?,
            fused: errors(&p.fused.accepted, case, &p.truth, selection_seed)?,
            acceptance_rate: p.fused.acceptance_rate,
            fallback_used: p.fused.fallback_used,
            baseline_offroad: p.baseline.iter().filter(|t| is_offroad(t, &case.scene)).count(),
        });
    }
    let n = instances.len() as f64;
    let mean = |f: &dyn Fn(&InstanceResult) -> SelectionTable| {
        instances
            .iter()
            .fold(SelectionTable::default(), |acc, r| acc.map2(&f(r), |a, b| a + b))
            .map2(&SelectionTable::default(), |a, _| a / n)
    };
    let baseline = mean(&|r| r.baseline);
    let fused = mean(&|r| r.fused);
    Ok(MetricReport {
        k: cfg.k,
        max_proposals: cfg.max_proposals,
        seed: cfg.seed,
        num_instances: instances.len(),
        improvement_pct: baseline.map2(&fused, |b, f| 100.0 * (b - f) / b),
        baseline,
        fused,
        fallback_count: instances.iter().filter(|r| r.fallback_used).count(),
        mean_acceptance_rate: instances.iter().map(|r| r.acceptance_rate).sum::<f64>() / n,
        baseline_offroad_fraction: instances.iter().map(|r| r.baseline_offroad).sum::<usize>() as f64
            / (n * cfg.k as f64),
        instances,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub k: usize,
    pub ade_baseline: f64,
    pub ade_fused: f64,
    pub fde_baseline: f64,
    pub fde_fused: f64,
}

/// Mean min-ADE and min-FDE over the first `k` samples for every `k` up to
/// a maximum. Both minima are taken independently.
#[derive(Debug, Clone, PartialEq)]
pub struct MinKCurve {
    pub rows: Vec<CurveRow>,
}

impl MinKCurve {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,ade_baseline,ade_fused,fde_baseline,fde_fused\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{},{},{}\n", r.k, r.ade_baseline, r.ade_fused, r.fde_baseline, r.fde_fused));
        }
        out
    }

    pub fn all_finite(&self) -> bool {
        self.rows
            .iter()
            .all(|r| [r.ade_baseline, r.ade_fused, r.fde_baseline, r.fde_fused].iter().all(|v| v.is_finite()))
    }
}

/// Running minima of ADE and FDE over prefixes of `set`, padded with the
/// last value when the set is shorter than `k_max`.
fn prefix_minima(set: &[Trajectory], truth: &Trajectory, k_max: usize) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::with_capacity(k_max);
    let (mut a, mut f) = (f64::INFINITY, f64::INFINITY);
    for k in 0..k_max {
        if let Some(t) = set.get(k) {
            a = a.min(ade(t, truth)?);
            f = f.min(fde(t, truth)?);
        }
        out.push((a, f));
    }
    Ok(out)
}

pub fn min_k_curve<P: Proposer + ?Sized>(
    proposer: &P,
    cases: &[EvalCase],
    k_max: usize,
    max_proposals: usize,
    seed: u64,
) -> Result<MinKCurve> {
    FusionConfig { k: k_max, max_proposals, seed }.validate()?;
    if cases.is_empty() {
        return Err(Error::InsufficientData("no evaluation instances".into()));
    }
    let mut sums = vec![[0.0f64; 4]; k_max];
    for (i, case) in cases.iter().enumerate() {
        let (s, _) = instance_seeds(seed, i);
        let p = propose(proposer, case, k_max, max_proposals, s)?;
        let b = prefix_minima(&p.baseline, &p.truth, k_max)?;
        let f = prefix_minima(&p.fused.accepted, &p.truth, k_max)?;
        for (acc, (b, f)) in sums.iter_mut().zip(b.iter().zip(&f)) {
            acc[0] += b.0;
            acc[1] += f.0;
            acc[2] += b.1;
            acc[3] += f.1;
        }
    }
    let n = cases.len() as f64;
    Ok(MinKCurve {
        rows: sums
            .iter()
            .enumerate()
            .map(|(i, s)| CurveRow {
                k: i + 1,
                ade_baseline: s[0] / n,
                ade_fused: s[1] / n,
                fde_baseline: s[2] / n,
                fde_fused: s[3] / n,
            })
            .collect(),
    })
}
