//! On-disk workflow: dataset generation, training with checkpoints,
//! prediction and evaluation.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dataset::{
    approaches_junction, drive_scenarios, generate_world, parse_log_csv, parse_manifest, split_dataset, window_log,
    write_log_csv, write_manifest, write_world, DatasetSplit, DriverConfig, Layout, ManifestEntry, SplitTag,
    TrainInstance, WorldConfig,
};
use crate::error::{Error, Result};
use crate::eval::{instance_seeds, min_k_curve, table_report, EvalCase, MetricReport, MinKCurve};
use crate::fusion::{export_jsonl, fuse, FusionConfig, PredictionSet};
use crate::gan::{
    init_model, load_checkpoint, sample_k, save_checkpoint, sha256_hex, Checkpoint, EpochMetrics, GanModel,
    TrainConfig, Trainer,
};
use crate::scene::{
    render_overlay, render_segmap, visualize_segmap, CameraModel, FootprintDisk, Intrinsics, Scene, SegMap, Style,
    DEFAULT_FOOTPRINT_RADIUS,
};
use crate::seed::derive_seed;
use crate::traj::{transform_to_world, Trajectory};

pub const DATASET_CONFIG_FILE: &str = "dataset.json";
pub const MANIFEST_FILE: &str = "manifest.jsonl";
pub const CHECKPOINT_DIR: &str = "checkpoint";
pub const TRAIN_METRICS_FILE: &str = "train_metrics.csv";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CameraConfig {
    /// Camera height above the ground in meters.
    pub height: f64,
    /// Downward pitch in radians.
    pub tilt: f64,
    pub intrinsics: Intrinsics,
    pub footprint_radius: f64,
}

impl Default for CameraConfig {
    fn default() -> Self {
        CameraConfig {
            height: 1.4,
            tilt: 0.5,
            intrinsics: Intrinsics::default(),
            footprint_radius: DEFAULT_FOOTPRINT_RADIUS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetConfig {
    pub seed: u64,
    /// One driving log per generated world.
    pub n_logs: usize,
    pub world: WorldConfig,
    pub driver: DriverConfig,
    /// Relative train/val/test shares of whole logs.
    pub split_ratios: [f64; 3],
    pub camera: CameraConfig,
    pub label_noise: f64,
    /// Every `scene_stride`-th test window is a scene candidate.
    pub scene_stride: usize,
    /// When set, only candidates with a junction at most this many meters
    /// ahead get a scene.
    pub junction_reach: Option<f64>,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        DatasetConfig {
            seed: 0,
            n_logs: 10,
            world: WorldConfig::default(),
            driver: DriverConfig::default(),
            split_ratios: [6.0, 1.0, 3.0],
            camera: CameraConfig::default(),
            label_noise: 0.1,
            scene_stride: 1,
            junction_reach: Some(4.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetSummary {
    pub logs: usize,
    pub skipped: Vec<(usize, String)>,
    pub train: usize,
    pub val: usize,
    pub test: usize,
    pub scenes: usize,
}

fn write_file(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::from(e).in_file(parent))?;
    }
    fs::write(path, bytes).map_err(|e| Error::from(e).in_file(path))
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::from(e).in_file(path))
}

fn log_path(dir: &Path, id: &str) -> PathBuf {
    dir.join("logs").join(format!("{id}.csv"))
}

fn scene_paths(dir: &Path, id: &str) -> (PathBuf, PathBuf) {
    let base = dir.join("scenes");
    (base.join(format!("{id}.seg")), base.join(format!("{id}.camera.json")))
}

/// Camera mounted on the agent at the instance's current step.
pub fn instance_camera(inst: &TrainInstance, cfg: &CameraConfig) -> Result<CameraModel> {
    CameraModel::mounted(&inst.agent_pose, cfg.height, cfg.tilt, &cfg.intrinsics)
}

pub fn make_scene(inst: &TrainInstance, seg: SegMap, cam: CameraModel, cfg: &CameraConfig) -> Result<Scene> {
    Scene::new(seg, cam, FootprintDisk::new(inst.agent_pose.position, cfg.footprint_radius)?)
}

/// Generates worlds and driving logs, splits them by log, renders scenes for
/// test windows and writes everything under `out`.
pub fn generate_dataset(out: &Path, cfg: &DatasetConfig) -> Result<DatasetSummary> {
    if cfg.scene_stride == 0 {
        return Err(Error::Config("scene_stride must be at least 1".into()));
    }
    let mut logs = Vec::new();
    let mut worlds = HashMap::new();
    let mut skipped = Vec::new();
    for i in 0..cfg.n_logs {
        let id = format!("log_{i:03}");
        let world = generate_world(derive_seed(cfg.seed, 2 * i as u64), &cfg.world)?;
        let outcome = drive_scenarios(&world, 1, derive_seed(cfg.seed, 2 * i as u64 + 1), &cfg.driver)?;
        skipped.extend(outcome.skipped.into_iter().map(|(_, why)| (i, why)));
        let Some(traj) = outcome.trajectories.into_iter().next() else {
            continue;
        };
        write_file(&log_path(out, &id), write_log_csv(&traj))?;
        write_file(&out.join("worlds").join(format!("{id}.world")), write_world(&world))?;
        // Windows come from the file contents so that reloading is exact.
        let traj = parse_log_csv(&write_log_csv(&traj))?;
        logs.push((id.clone(), window_log(&traj, &id)));
        worlds.insert(id, world);
    }
    let mut split = split_dataset(logs, cfg.split_ratios, cfg.seed)?;
    let mut scenes = 0;
    for inst in split.test.iter_mut().filter(|i| i.start % cfg.scene_stride == 0) {
        let world = &worlds[&inst.log_id];
        if cfg.junction_reach.is_some_and(|r| !approaches_junction(inst, &world.junctions(), 0.0, r)) {
            continue;
        }
        let id = format!("{}_{:04}", inst.log_id, inst.start);
        let cam = instance_camera(inst, &cfg.camera)?;
        let seg = render_segmap(world, &cam, cfg.label_noise)?;
        let (seg_path, cam_path) = scene_paths(out, &id);
        write_file(&seg_path, seg.encode())?;
        write_file(&cam_path, cam.to_json())?;
        inst.scene_id = Some(id);
        scenes += 1;
    }
    let entries: Vec<ManifestEntry> = tagged(&split)
        .map(|(inst, tag)| ManifestEntry {
            log_id: inst.log_id.clone(),
            start: inst.start,
            split: tag,
            scene_id: inst.scene_id.clone(),
        })
        .collect();
    write_file(&out.join(MANIFEST_FILE), write_manifest(&entries))?;
    write_file(&out.join(DATASET_CONFIG_FILE), serde_json::to_string_pretty(cfg)? + "\n")?;
    Ok(DatasetSummary {
        logs: split.assignment.len(),
        skipped,
        train: split.train.len(),
        val: split.val.len(),
        test: split.test.len(),
        scenes,
    })
}

fn tagged(split: &DatasetSplit) -> impl Iterator<Item = (&TrainInstance, SplitTag)> {
    [SplitTag::Train, SplitTag::Val, SplitTag::Test]
        .into_iter()
        .flat_map(move |t| split.part(t).iter().map(move |i| (i, t)))
}

#[derive(Debug, Clone)]
pub struct LoadedDataset {
    pub config: DatasetConfig,
    pub split: DatasetSplit,
    /// Test instances that have a rendered scene.
    pub cases: Vec<EvalCase>,
    pub manifest_sha256: String,
}

/// Reads a dataset written by [`generate_dataset`].
pub fn load_dataset(dir: &Path) -> Result<LoadedDataset> {
    let cfg_path = dir.join(DATASET_CONFIG_FILE);
    let config: DatasetConfig = serde_json::from_str(&read_text(&cfg_path)?)
        .map_err(|e| Error::format("dataset config", e.to_string()).in_file(&cfg_path))?;
    let manifest_path = dir.join(MANIFEST_FILE);
    let manifest_text = read_text(&manifest_path)?;
    let entries = parse_manifest(&manifest_text).map_err(|e| e.in_file(&manifest_path))?;

    let mut windows: HashMap<String, Vec<Option<TrainInstance>>> = HashMap::new();
    let mut split = DatasetSplit { split_seed: config.seed, ..DatasetSplit::default() };
    let mut tags: HashMap<String, SplitTag> = HashMap::new();
    let mut cases = Vec::new();
    for e in entries {
        if !windows.contains_key(&e.log_id) {
            let path = log_path(dir, &e.log_id);
            let traj = parse_log_csv(&read_text(&path)?).map_err(|err| err.in_file(&path))?;
            windows.insert(e.log_id.clone(), window_log(&traj, &e.log_id).into_iter().map(Some).collect());
            split.assignment.push((e.log_id.clone(), e.split));
        }
        if *tags.entry(e.log_id.clone()).or_insert(e.split) != e.split {
            let msg = format!("log {} appears in more than one split", e.log_id);
            return Err(Error::format("dataset manifest", msg).in_file(&manifest_path));
        }
        let mut inst =
            windows.get_mut(&e.log_id).and_then(|w| w.get_mut(e.start)).and_then(Option::take).ok_or_else(|| {
                let msg = format!("no unused window {} in log {}", e.start, e.log_id);
                Error::format("dataset manifest", msg).in_file(&manifest_path)
            })?;
        inst.scene_id = e.scene_id.clone();
        if let Some(id) = &e.scene_id {
            let (seg_path, cam_path) = scene_paths(dir, id);
            let bytes = fs::read(&seg_path).map_err(|err| Error::from(err).in_file(&seg_path))?;
            let seg = SegMap::decode(&bytes).map_err(|err| err.in_file(&seg_path))?;
            let cam = CameraModel::from_json(&read_text(&cam_path)?).map_err(|err| err.in_file(&cam_path))?;
            let scene = make_scene(&inst, seg, cam, &config.camera).map_err(|err| err.in_file(&seg_path))?;
            if e.split == SplitTag::Test {
                cases.push(EvalCase { instance: inst.clone(), scene });
            }
        }
        match e.split {
            SplitTag::Train => split.train.push(inst),
            SplitTag::Val => split.val.push(inst),
            SplitTag::Test => split.test.push(inst),
        }
    }
    Ok(LoadedDataset { config, split, cases, manifest_sha256: sha256_hex(manifest_text.as_bytes()) })
}

/// Windows from T-junction runs in which the agent is still on the stem,
/// short of the junction box, with the junction center at most `reach`
/// meters ahead.
pub fn t_junction_instances(seed: u64, n_runs: usize, driver: &DriverConfig, reach: f64) -> Result<Vec<TrainInstance>> {
    let config = WorldConfig::t_junction();
    let Layout::TJunction { road_width } = config.layout else {
        unreachable!("t_junction() builds a T-junction layout")
    };
    let world = generate_world(seed, &config)?;
    let junctions = world.junctions();
    let runs = drive_scenarios(&world, n_runs, seed, driver)?;
    Ok(runs
        .trajectories
        .iter()
        .enumerate()
        .flat_map(|(i, t)| window_log(t, &format!("tjunction_{i:03}")))
        .filter(|inst| approaches_junction(inst, &junctions, road_width / 2.0, reach))
        .collect())
}

pub fn write_train_metrics(path: &Path, history: &[EpochMetrics]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for m in history {
        w.serialize(m).map_err(|e| Error::format("training metrics", e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::format("training metrics", e.to_string()))?;
    write_file(path, bytes)
}

/// Trains for `cfg.epochs` total epochs, saving a checkpoint and the metrics
/// history after every epoch. With `resume`, continues from the checkpoint
/// in `out` if one exists; only the epoch count may differ from the saved
/// configuration.
pub fn train_dataset(
    data: &LoadedDataset,
    out: &Path,
    cfg: &TrainConfig,
    resume: bool,
    mut on_epoch: impl FnMut(&EpochMetrics),
) -> Result<Trainer> {
    let ckpt_dir = out.join(CHECKPOINT_DIR);
    let mut trainer = if resume && ckpt_dir.join(crate::gan::checkpoint::SIDECAR_FILE).exists() {
        let ckpt = load_checkpoint(&ckpt_dir)?;
        if ckpt.manifest_sha256 != data.manifest_sha256 {
            return Err(Error::Config(format!(
                "checkpoint in {} was trained on a different dataset",
                ckpt_dir.display()
            )));
        }
        let mut t = ckpt.trainer;
        if (TrainConfig { epochs: cfg.epochs, ..t.config.clone() }) != *cfg {
            return Err(Error::Config("resumed configuration differs from the checkpoint".into()));
        }
        t.config.epochs = cfg.epochs;
        t
    } else {
        Trainer::new(init_model(cfg)?, cfg.clone())?
    };
    while trainer.epoch < cfg.epochs {
        let m = trainer.run_epoch(&data.split)?;
        on_epoch(&m);
        save_checkpoint(
            &ckpt_dir,
            &Checkpoint { trainer: trainer.clone(), manifest_sha256: data.manifest_sha256.clone() },
        )?;
        write_train_metrics(&out.join(TRAIN_METRICS_FILE), &trainer.history)?;
    }
    Ok(trainer)
}

/// Loads the model from a checkpoint directory, or from a training output
/// directory containing one.
pub fn load_model(path: &Path) -> Result<GanModel> {
    let dir = if path.join(CHECKPOINT_DIR).is_dir() { path.join(CHECKPOINT_DIR) } else { path.to_path_buf() };
    Ok(load_checkpoint(&dir)?.trainer.model)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredictionSummary {
    pub scene_id: String,
    pub accepted: usize,
    pub proposals_drawn: usize,
    pub acceptance_rate: f64,
    pub fallback_used: bool,
}

/// Fused prediction for test case `index`, with the same seeds as evaluation.
pub fn predict_case(model: &GanModel, case: &EvalCase, index: usize, cfg: &FusionConfig) -> Result<PredictionSet> {
    let (seed, _) = instance_seeds(cfg.seed, index);
    fuse(model, &case.instance.past, &case.instance.agent_pose, &case.scene, &FusionConfig { seed, ..*cfg })
}

/// Writes `<scene>.jsonl` and a `<scene>.ppm` overlay for every test case,
/// or only for `only` when given.
pub fn predict_dataset(
    model: &GanModel,
    data: &LoadedDataset,
    cfg: &FusionConfig,
    only: Option<&str>,
    out: &Path,
) -> Result<Vec<PredictionSummary>> {
    let mut summaries = Vec::new();
    for (i, case) in data.cases.iter().enumerate() {
        let id = case.instance.scene_id.as_deref().unwrap_or_default();
        if only.is_some_and(|o| o != id) {
            continue;
        }
        let pred = predict_case(model, case, i, cfg)?;
        let (seed, selection_seed) = instance_seeds(cfg.seed, i);
        let pose = &case.instance.agent_pose;
        let truth = transform_to_world(&case.instance.future, pose)?;
        write_file(&out.join(format!("{id}.jsonl")), export_jsonl(&pred, selection_seed, Some(&truth))?)?;

        let drawn = sample_k(model, &case.instance.past, pred.proposals_drawn, seed)?;
        let mut layers: Vec<(Trajectory, Style)> = Vec::new();
        for r in &drawn {
            let t = transform_to_world(r, pose)?;
            if !pred.accepted.contains(&t) {
                layers.push((t, Style::Rejected));
            }
        }
        layers.extend(pred.accepted.iter().map(|t| (t.clone(), Style::Accepted)));
        layers.push((truth, Style::GroundTruth));
        let seg_view = visualize_segmap(&case.scene.seg);
        let image = render_overlay(&seg_view, &case.scene.cam, &layers);
        write_file(&out.join(format!("{id}.ppm")), image.to_ppm())?;

        summaries.push(PredictionSummary {
            scene_id: id.to_string(),
            accepted: pred.num_accepted,
            proposals_drawn: pred.proposals_drawn,
            acceptance_rate: pred.acceptance_rate,
            fallback_used: pred.fallback_used,
        });
    }
    if let Some(o) = only {
        if summaries.is_empty() {
            return Err(Error::InsufficientData(format!("no test scene named {o}")));
        }
    }
    Ok(summaries)
}

/// Computes the comparison table and the min-k curve, writes
/// `metrics.csv`, `metrics.json` and `min_k_curve.csv` to `out`, and fails
/// with a numerical error if any reported value is non-finite.
pub fn evaluate_dataset(
    model: &GanModel,
    data: &LoadedDataset,
    cfg: &FusionConfig,
    out: &Path,
) -> Result<(MetricReport, MinKCurve)> {
    let report = table_report(model, &data.cases, cfg)?;
    let curve = min_k_curve(model, &data.cases, cfg.k, cfg.max_proposals, cfg.seed)?;
    write_file(&out.join("metrics.csv"), report.to_csv())?;
    write_file(&out.join("metrics.json"), report.to_json()?)?;
    write_file(&out.join("min_k_curve.csv"), curve.to_csv())?;
    if !report.all_finite() || !curve.all_finite() {
        return Err(Error::NonFinite("evaluation metrics".into()));
    }
    Ok((report, curve))
}
