//! Training checkpoints: a parameter file holding model weights and Adam
//! moments, and a JSON sidecar with the configuration, optimizer step
//! counts, metrics history and the dataset manifest hash.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::model::GanModel;
use super::train::{EpochMetrics, TrainConfig, Trainer};
use crate::error::{Error, Result};
use crate::neural::{decode_params, encode_params, AdamConfig, AdamState, Parameterized, Tensor2};

pub const PARAMS_FILE: &str = "model.params";
pub const SIDECAR_FILE: &str = "checkpoint.json";
const FORMAT: &str = "scenegan-checkpoint-1";

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub trainer: Trainer,
    pub manifest_sha256: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Sidecar {
    format: String,
    epoch: usize,
    manifest_sha256: String,
    params_sha256: String,
    adam_g_step: u64,
    adam_d_step: u64,
    config: TrainConfig,
    history: Vec<EpochMetrics>,
}

fn column(v: &[f64]) -> Tensor2 {
    Tensor2::from_vec(v.len(), 1, v.to_vec()).expect("optimizer moments are finite")
}

/// Serializes to `(parameter file bytes, sidecar JSON)`.
pub fn encode_checkpoint(ckpt: &Checkpoint) -> (Vec<u8>, String) {
    let t = &ckpt.trainer;
    let mut sections = t.model.sections("");
    for (name, state) in [("optimizer.generator", &t.adam_g), ("optimizer.discriminator", &t.adam_d)] {
        sections.push((format!("{name}.m"), column(&state.m)));
        sections.push((format!("{name}.v"), column(&state.v)));
    }
    let params = encode_params(&sections);
    let sidecar = Sidecar {
        format: FORMAT.into(),
        epoch: t.epoch,
        manifest_sha256: ckpt.manifest_sha256.clone(),
        params_sha256: sha256_hex(&params),
        adam_g_step: t.adam_g.step,
        adam_d_step: t.adam_d.step,
        config: t.config.clone(),
        history: t.history.clone(),
    };
    let mut json = serde_json::to_string_pretty(&sidecar).expect("sidecar serializes");
    json.push('\n');
    (params, json)
}

pub fn parse_sidecar_config(sidecar: &str) -> Result<TrainConfig> {
    let s: Sidecar = serde_json::from_str(sidecar).map_err(|e| Error::format("checkpoint sidecar", e.to_string()))?;
    Ok(s.config)
}

pub fn decode_checkpoint(params: &[u8], sidecar: &str) -> Result<Checkpoint> {
    let s: Sidecar = serde_json::from_str(sidecar).map_err(|e| Error::format("checkpoint sidecar", e.to_string()))?;
    if s.format != FORMAT {
        return Err(Error::format("checkpoint sidecar", format!("unknown format {:?}", s.format)));
    }
    if sha256_hex(params) != s.params_sha256 {
        return Err(Error::format("checkpoint", "parameter file does not match the sidecar hash"));
    }
    let sections = decode_params(params)?;
    let (model_sections, optimizer): (Vec<_>, Vec<_>) =
        sections.into_iter().partition(|(n, _)| !n.starts_with("optimizer."));
    let model = GanModel::from_sections(s.config.dims, &model_sections)?;
    let moment = |name: &str, expected: usize| -> Result<Vec<f64>> {
        let (_, t) = optimizer
            .iter()
            .find(|(n, _)| n == name)
            .ok_or_else(|| Error::format("checkpoint", format!("missing section {name}")))?;
        if t.cols() != 1 || t.rows() != expected {
            return Err(Error::ShapeMismatch { what: name.to_string(), expected, got: t.data().len() });
        }
        Ok(t.data().to_vec())
    };
    if optimizer.len() != 4 {
        return Err(Error::format("checkpoint", "expected four optimizer sections"));
    }
    let state = |prefix: &str, lr: f64, step: u64, n: usize| -> Result<AdamState> {
        Ok(AdamState {
            config: AdamConfig { lr, ..AdamConfig::default() },
            step,
            m: moment(&format!("{prefix}.m"), n)?,
            v: moment(&format!("{prefix}.v"), n)?,
        })
    };
    let adam_g = state("optimizer.generator", s.config.lr_g, s.adam_g_step, model.generator.num_params())?;
    let adam_d = state("optimizer.discriminator", s.config.lr_d, s.adam_d_step, model.discriminator.num_params())?;
    let trainer = Trainer::resume(model, s.config, adam_g, adam_d, s.epoch, s.history)?;
    Ok(Checkpoint { trainer, manifest_sha256: s.manifest_sha256 })
}

pub fn save_checkpoint(dir: &Path, ckpt: &Checkpoint) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::from(e).in_file(dir))?;
    let (params, sidecar) = encode_checkpoint(ckpt);
    let params_path = dir.join(PARAMS_FILE);
    let sidecar_path = dir.join(SIDECAR_FILE);
    fs::write(&params_path, params).map_err(|e| Error::from(e).in_file(&params_path))?;
    fs::write(&sidecar_path, sidecar).map_err(|e| Error::from(e).in_file(&sidecar_path))?;
    Ok(())
}

pub fn load_checkpoint(dir: &Path) -> Result<Checkpoint> {
    let params_path = dir.join(PARAMS_FILE);
    let sidecar_path = dir.join(SIDECAR_FILE);
    let params = fs::read(&params_path).map_err(|e| Error::from(e).in_file(&params_path))?;
    let sidecar = fs::read_to_string(&sidecar_path).map_err(|e| Error::from(e).in_file(&sidecar_path))?;
    decode_checkpoint(&params, &sidecar).map_err(|e| e.in_file(dir))
}
