//! Adversarial training with label smoothing and a best-of-k variety loss.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::model::{Discriminator, GanDims, GanModel, Generator, NOISE_DIM, OBS_LEN};
use super::sampling::sample_k;
use crate::dataset::{DatasetSplit, TrainInstance};
use crate::error::{Error, Result};
use crate::neural::{adam_update, bce_with_logit, AdamConfig, AdamState, Parameterized};
use crate::seed::derive_seed;
use crate::traj::Vec2;

/// Stream index of the validation noise; epochs use `1..`.
const VAL_STREAM: u64 = u64::MAX;
const INIT_STREAM: u64 = 0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    /// Samples per instance for the variety loss.
    pub k_variety: usize,
    pub lr_g: f64,
    pub lr_d: f64,
    pub real_label_range: [f64; 2],
    pub fake_label_range: [f64; 2],
    pub variety_weight: f64,
    /// Samples per validation instance for the min-k ADE.
    pub val_k: usize,
    pub seed: u64,
    pub dims: GanDims,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 200,
            batch_size: 64,
            k_variety: 20,
            lr_g: 1e-3,
            lr_d: 1e-3,
            real_label_range: [0.7, 1.0],
            fake_label_range: [0.0, 0.3],
            variety_weight: 1.0,
            val_k: 20,
            seed: 0,
            dims: GanDims::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let range_ok = |r: [f64; 2]| 0.0 <= r[0] && r[0] <= r[1] && r[1] <= 1.0;
        if self.k_variety == 0 || self.val_k == 0 || self.batch_size == 0 {
            return Err(Error::Config("k_variety, val_k and batch_size must be at least 1".into()));
        }
        if !(self.lr_g > 0.0 && self.lr_d > 0.0 && self.lr_g.is_finite() && self.lr_d.is_finite()) {
            return Err(Error::Config(format!("learning rates must be positive: {} {}", self.lr_g, self.lr_d)));
        }
        if !range_ok(self.real_label_range) || !range_ok(self.fake_label_range) {
            return Err(Error::Config("label ranges must be ordered within [0, 1]".into()));
        }
        if !(self.variety_weight >= 0.0 && self.variety_weight.is_finite()) {
            return Err(Error::Config(format!("variety weight {} is invalid", self.variety_weight)));
        }
        self.dims.validate()
    }

    fn adam(&self, lr: f64) -> AdamConfig {
        AdamConfig { lr, ..AdamConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub d_loss: f64,
    pub g_loss: f64,
    pub g_adversarial: f64,
    pub g_variety: f64,
    /// Validation min-k ADE in meters; absent for an empty validation split.
    pub val_min_ade: Option<f64>,
    /// Extremes of the smoothed labels drawn during the epoch.
    pub real_label_min: f64,
    pub real_label_max: f64,
    pub fake_label_min: f64,
    pub fake_label_max: f64,
}

/// Freshly initialized model for a configuration.
pub fn init_model(cfg: &TrainConfig) -> Result<GanModel> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, INIT_STREAM));
    GanModel::new(cfg.dims, &mut rng)
}

fn seq(past: &[Vec2], future: impl IntoIterator<Item = [f64; 2]>) -> Vec<[f64; 2]> {
    past.iter().map(|d| [d.x, d.y]).chain(future).collect()
}

fn future_of(inst: &TrainInstance) -> Vec<[f64; 2]> {
    inst.future.displacements().iter().map(|d| [d.x, d.y]).collect()
}

fn sse(a: &[[f64; 2]], b: &[[f64; 2]]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sum()
}

/// Mean discriminator BCE over a batch of real and generated futures.
/// Gradients (of the mean) accumulate into `grads` when given.
pub fn discriminator_loss(
    model: &GanModel,
    batch: &[&TrainInstance],
    fakes: &[Vec<[f64; 2]>],
    real_labels: &[f64],
    fake_labels: &[f64],
    mut grads: Option<&mut Discriminator>,
) -> f64 {
    let scale = 1.0 / batch.len() as f64;
    let d = &model.discriminator;
    let mut total = 0.0;
    for (i, inst) in batch.iter().enumerate() {
        let past = inst.past.displacements();
        for (sequence, label) in
            [(seq(past, future_of(inst)), real_labels[i]), (seq(past, fakes[i].iter().copied()), fake_labels[i])]
        {
            match grads.as_deref_mut() {
                Some(g) => {
                    let trace = d.forward_traced(&sequence);
                    let (loss, dz) = bce_with_logit(trace.logit, label);
                    d.backward(&trace, dz * scale, g);
                    total += loss;
                }
                None => total += bce_with_logit(d.logit(&sequence), label).0,
            }
        }
    }
    total * scale
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratorLoss {
    pub total: f64,
    pub adversarial: f64,
    pub variety: f64,
}

/// Mean generator loss over a batch: BCE of the discriminator on the first
/// sample against `adv_labels`, plus `variety_weight` times the best-of-k
/// summed squared displacement error. `noises[i]` holds the k noise
/// vectors of instance `i`.
pub fn generator_loss(
    model: &GanModel,
    batch: &[&TrainInstance],
    noises: &[Vec<[f64; NOISE_DIM]>],
    adv_labels: &[f64],
    variety_weight: f64,
    mut grads: Option<&mut Generator>,
) -> GeneratorLoss {
    let scale = 1.0 / batch.len() as f64;
    let (g, d) = (&model.generator, &model.discriminator);
    let mut scratch = grads.as_ref().map(|_| Discriminator::zeros(&model.dims));
    let (mut adv_total, mut var_total) = (0.0, 0.0);
    for (i, inst) in batch.iter().enumerate() {
        let past = inst.past.displacements();
        let last = *past.last().expect("past is non-empty");
        let truth = future_of(inst);
        let enc = g.encode_traced(past);
        let samples: Vec<Vec<[f64; 2]>> = noises[i].iter().map(|z| g.decode(&enc.hidden, last, z)).collect();
        let errors: Vec<f64> = samples.iter().map(|s| sse(s, &truth)).collect();
        let best = (0..errors.len()).fold(0, |b, j| if errors[j] < errors[b] { j } else { b });
        var_total += errors[best];

        let Some(gr) = grads.as_deref_mut() else {
            adv_total += bce_with_logit(d.logit(&seq(past, samples[0].iter().copied())), adv_labels[i]).0;
            continue;
        };
        let variety_grad = |out: &[[f64; 2]]| -> Vec<[f64; 2]> {
            out.iter()
                .zip(&truth)
                .map(|(o, t)| {
                    let k = 2.0 * variety_weight * scale;
                    [k * (o[0] - t[0]), k * (o[1] - t[1])]
                })
                .collect()
        };
        let first = g.decode_traced(&enc.hidden, last, &noises[i][0]);
        let d_trace = d.forward_traced(&seq(past, first.outputs.iter().copied()));
        let (adv, dz) = bce_with_logit(d_trace.logit, adv_labels[i]);
        adv_total += adv;
        let d_in = d.backward(&d_trace, dz * scale, scratch.as_mut().expect("scratch exists with grads"));
        let mut d_first: Vec<[f64; 2]> = d_in[OBS_LEN..].to_vec();
        if best == 0 {
            for (a, v) in d_first.iter_mut().zip(variety_grad(&first.outputs)) {
                a[0] += v[0];
                a[1] += v[1];
            }
        }
        let mut dh = g.backward_decoder(&first, &d_first, gr);
        if best != 0 {
            let trace = g.decode_traced(&enc.hidden, last, &noises[i][best]);
            let dh_best = g.backward_decoder(&trace, &variety_grad(&trace.outputs), gr);
            for (a, b) in dh.iter_mut().zip(dh_best) {
                *a += b;
            }
        }
        g.backward_encoder(&enc, &dh, gr);
    }
    let adversarial = adv_total * scale;
    let variety = var_total * scale;
    GeneratorLoss { total: adversarial + variety_weight * variety, adversarial, variety }
}

/// ADE between two displacement sequences accumulated from a common origin.
fn local_ade(a: &[Vec2], b: &[Vec2]) -> f64 {
    let (mut pa, mut pb, mut total) = (Vec2::ZERO, Vec2::ZERO, 0.0);
    for (da, db) in a.iter().zip(b) {
        pa += *da;
        pb += *db;
        total += pa.distance(pb);
    }
    total / a.len() as f64
}

/// Mean over instances of the best ADE among `k` samples.
pub fn validation_min_ade(model: &GanModel, instances: &[TrainInstance], k: usize, seed: u64) -> Result<Option<f64>> {
    if instances.is_empty() {
        return Ok(None);
    }
    let mut total = 0.0;
    for (i, inst) in instances.iter().enumerate() {
        let samples = sample_k(model, &inst.past, k, derive_seed(seed, i as u64))?;
        total += samples
            .iter()
            .map(|s| local_ade(s.displacements(), inst.future.displacements()))
            .fold(f64::INFINITY, f64::min);
    }
    Ok(Some(total / instances.len() as f64))
}

fn draw_noise(rng: &mut ChaCha8Rng) -> [f64; NOISE_DIM] {
    let mut z = [0.0; NOISE_DIM];
    for v in &mut z {
        *v = rng.sample(StandardNormal);
    }
    z
}

struct LabelStats {
    real: [f64; 2],
    fake: [f64; 2],
}

impl LabelStats {
    fn new() -> Self {
        LabelStats { real: [f64::INFINITY, f64::NEG_INFINITY], fake: [f64::INFINITY, f64::NEG_INFINITY] }
    }

    fn note(range: &mut [f64; 2], v: f64) {
        range[0] = range[0].min(v);
        range[1] = range[1].max(v);
    }
}

fn draw_label(rng: &mut ChaCha8Rng, range: [f64; 2]) -> f64 {
    if range[0] == range[1] {
        range[0]
    } else {
        rng.random_range(range[0]..=range[1])
    }
}

/// Model plus optimizer state; advancing one epoch at a time.
#[derive(Debug, Clone)]
pub struct Trainer {
    pub model: GanModel,
    pub config: TrainConfig,
    pub adam_g: AdamState,
    pub adam_d: AdamState,
    /// Completed epochs.
    pub epoch: usize,
    pub history: Vec<EpochMetrics>,
}

impl Trainer {
    pub fn new(model: GanModel, config: TrainConfig) -> Result<Self> {
        let adam_g = AdamState::new(config.adam(config.lr_g), model.generator.num_params());
        let adam_d = AdamState::new(config.adam(config.lr_d), model.discriminator.num_params());
        Self::resume(model, config, adam_g, adam_d, 0, Vec::new())
    }

    pub fn resume(
        model: GanModel,
        config: TrainConfig,
        adam_g: AdamState,
        adam_d: AdamState,
        epoch: usize,
        history: Vec<EpochMetrics>,
    ) -> Result<Self> {
        config.validate()?;
        if model.dims != config.dims {
            return Err(Error::Config(format!(
                "model dims {:?} differ from config dims {:?}",
                model.dims, config.dims
            )));
        }
        if adam_g.m.len() != model.generator.num_params() || adam_d.m.len() != model.discriminator.num_params() {
            return Err(Error::Config("optimizer state does not match the model".into()));
        }
        if history.len() != epoch {
            return Err(Error::Config(format!("history has {} entries for {epoch} completed epochs", history.len())));
        }
        Ok(Trainer { model, config, adam_g, adam_d, epoch, history })
    }

    /// Runs one epoch. On a non-finite loss or gradient the trainer is left
    /// exactly as it was before the epoch.
    pub fn run_epoch(&mut self, split: &DatasetSplit) -> Result<EpochMetrics> {
        if split.train.is_empty() {
            return Err(Error::InsufficientData("training split is empty".into()));
        }
        let snapshot = (self.model.clone(), self.adam_g.clone(), self.adam_d.clone());
        match self.epoch_inner(split) {
            Ok(m) => {
                self.epoch += 1;
                self.history.push(m.clone());
                Ok(m)
            }
            Err(e) => {
                (self.model, self.adam_g, self.adam_d) = snapshot;
                Err(e)
            }
        }
    }

    fn epoch_inner(&mut self, split: &DatasetSplit) -> Result<EpochMetrics> {
        let cfg = self.config.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, self.epoch as u64 + 1));
        let mut order: Vec<usize> = (0..split.train.len()).collect();
        order.shuffle(&mut rng);
        let mut labels = LabelStats::new();
        let (mut d_sum, mut g_sum, mut adv_sum, mut var_sum) = (0.0, 0.0, 0.0, 0.0);

        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<&TrainInstance> = chunk.iter().map(|&i| &split.train[i]).collect();
            let b = batch.len() as f64;

            let g = &self.model.generator;
            let fakes: Vec<Vec<[f64; 2]>> = batch
                .iter()
                .map(|inst| {
                    let past = inst.past.displacements();
                    g.decode(&g.encode(past), *past.last().unwrap(), &draw_noise(&mut rng))
                })
                .collect();
            let mut real = Vec::with_capacity(batch.len());
            let mut fake = Vec::with_capacity(batch.len());
            for _ in 0..batch.len() {
                let r = draw_label(&mut rng, cfg.real_label_range);
                let f = draw_label(&mut rng, cfg.fake_label_range);
                LabelStats::note(&mut labels.real, r);
                LabelStats::note(&mut labels.fake, f);
                real.push(r);
                fake.push(f);
            }
            let mut d_grads = Discriminator::zeros(&cfg.dims);
            let d_loss = discriminator_loss(&self.model, &batch, &fakes, &real, &fake, Some(&mut d_grads));
            if !d_loss.is_finite() {
                return Err(Error::NonFinite(format!("discriminator loss in epoch {}", self.epoch + 1)));
            }
            let mut flat = self.model.discriminator.flatten();
            adam_update(&mut self.adam_d, &mut flat, &d_grads.flatten())?;
            self.model.discriminator.assign_flat(&flat)?;

            let noises: Vec<Vec<[f64; NOISE_DIM]>> =
                batch.iter().map(|_| (0..cfg.k_variety).map(|_| draw_noise(&mut rng)).collect()).collect();
            let adv_labels: Vec<f64> = (0..batch.len())
                .map(|_| {
                    let r = draw_label(&mut rng, cfg.real_label_range);
                    LabelStats::note(&mut labels.real, r);
                    r
                })
                .collect();
            let mut g_grads = Generator::zeros(&cfg.dims);
            let g_loss =
                generator_loss(&self.model, &batch, &noises, &adv_labels, cfg.variety_weight, Some(&mut g_grads));
            if !g_loss.total.is_finite() {
                return Err(Error::NonFinite(format!("generator loss in epoch {}", self.epoch + 1)));
            }
            let mut flat = self.model.generator.flatten();
            adam_update(&mut self.adam_g, &mut flat, &g_grads.flatten())?;
            self.model.generator.assign_flat(&flat)?;

            d_sum += d_loss * b;
            g_sum += g_loss.total * b;
            adv_sum += g_loss.adversarial * b;
            var_sum += g_loss.variety * b;
        }
        if !self.model.all_finite() {
            return Err(Error::NonFinite(format!("parameters after epoch {}", self.epoch + 1)));
        }
        let n = split.train.len() as f64;
        let val = validation_min_ade(&self.model, &split.val, cfg.val_k, derive_seed(cfg.seed, VAL_STREAM))?;
        Ok(EpochMetrics {
            epoch: self.epoch + 1,
            d_loss: d_sum / n,
            g_loss: g_sum / n,
            g_adversarial: adv_sum / n,
            g_variety: var_sum / n,
            val_min_ade: val,
            real_label_min: labels.real[0],
            real_label_max: labels.real[1],
            fake_label_min: labels.fake[0],
            fake_label_max: labels.fake[1],
        })
    }

    /// Validation min-k ADE of the current model with the fixed validation
    /// seed used by every epoch.
    pub fn validation(&self, split: &DatasetSplit) -> Result<Option<f64>> {
        validation_min_ade(&self.model, &split.val, self.config.val_k, derive_seed(self.config.seed, VAL_STREAM))
    }
}

/// Trains for `cfg.epochs` epochs from `model`.
pub fn train(model: GanModel, split: &DatasetSplit, cfg: &TrainConfig) -> Result<(GanModel, Vec<EpochMetrics>)> {
    let mut trainer = Trainer::new(model, cfg.clone())?;
    for _ in 0..cfg.epochs {
        trainer.run_epoch(split)?;
    }
    Ok((trainer.model, trainer.history))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{split_dataset, window_log};
    use crate::neural::grad_check;
    use crate::traj::{Trajectory, DT};

    fn small_dims() -> GanDims {
        GanDims { embed_dim: 3, enc_hidden: 4, dec_hidden: 5, disc_hidden: 4 }
    }

    fn curvy_log(seed: u64, len: usize) -> Trajectory {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut heading: f64 = rng.random_range(-3.0..3.0);
        let mut p = Vec2::ZERO;
        let pts = (0..len)
            .map(|_| {
                heading += rng.random_range(-0.3..0.3);
                p += Vec2::new(heading.cos(), heading.sin()) * 0.7;
                p
            })
            .collect();
        Trajectory::new(pts, DT).unwrap()
    }

    fn split(len: usize) -> DatasetSplit {
        let logs = (0..4)
            .map(|i| {
                let id = format!("log{i}");
                let w = window_log(&curvy_log(i, len), &id);
                (id, w)
            })
            .collect();
        split_dataset(logs, [2.0, 1.0, 1.0], 0).unwrap()
    }

    fn batch_inputs(seed: u64) -> (GanModel, Vec<TrainInstance>, Vec<Vec<[f64; NOISE_DIM]>>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = GanModel::new(small_dims(), &mut rng).unwrap();
        let s = split(20);
        let batch = vec![s.train[0].clone(), s.train[3].clone()];
        let noises = (0..2).map(|_| (0..3).map(|_| draw_noise(&mut rng)).collect()).collect();
        (model, batch, noises)
    }

    #[test]
    fn generator_gradient_matches_finite_differences() {
        for seed in 0..4 {
            let (model, batch, noises) = batch_inputs(seed);
            let refs: Vec<&TrainInstance> = batch.iter().collect();
            let labels = [0.8, 0.95];
            let mut grads = Generator::zeros(&model.dims);
            generator_loss(&model, &refs, &noises, &labels, 1.0, Some(&mut grads));
            let err = grad_check(
                |p| {
                    let mut m = model.clone();
                    m.generator.assign_flat(p).unwrap();
                    generator_loss(&m, &refs, &noises, &labels, 1.0, None).total
                },
                &model.generator.flatten(),
                &grads.flatten(),
            );
            assert!(err < 1e-3, "seed {seed}: {err}");
        }
    }

    #[test]
    fn discriminator_gradient_matches_finite_differences() {
        for seed in 0..4 {
            let (model, batch, noises) = batch_inputs(seed);
            let refs: Vec<&TrainInstance> = batch.iter().collect();
            let fakes: Vec<Vec<[f64; 2]>> = batch
                .iter()
                .zip(&noises)
                .map(|(inst, z)| {
                    let g = &model.generator;
                    let past = inst.past.displacements();
                    g.decode(&g.encode(past), *past.last().unwrap(), &z[0])
                })
                .collect();
            let (real, fake) = ([0.75, 0.9], [0.1, 0.25]);
            let mut grads = Discriminator::zeros(&model.dims);
            discriminator_loss(&model, &refs, &fakes, &real, &fake, Some(&mut grads));
            let err = grad_check(
                |p| {
                    let mut m = model.clone();
                    m.discriminator.assign_flat(p).unwrap();
                    discriminator_loss(&m, &refs, &fakes, &real, &fake, None)
                },
                &model.discriminator.flatten(),
                &grads.flatten(),
            );
            assert!(err < 1e-3, "seed {seed}: {err}");
        }
    }

    #[test]
    fn loss_without_gradients_matches_traced_loss() {
        let (model, batch, noises) = batch_inputs(9);
        let refs: Vec<&TrainInstance> = batch.iter().collect();
        let mut grads = Generator::zeros(&model.dims);
        let a = generator_loss(&model, &refs, &noises, &[0.9, 0.7], 1.0, Some(&mut grads));
        let b = generator_loss(&model, &refs, &noises, &[0.9, 0.7], 1.0, None);
        assert!((a.total - b.total).abs() < 1e-12);
        assert!(a.variety >= 0.0);
    }

    #[test]
    fn one_epoch_smoke() {
        let mut s = split(20);
        s.train.truncate(10);
        let cfg = TrainConfig { epochs: 1, dims: small_dims(), k_variety: 3, val_k: 3, ..TrainConfig::default() };
        let (model, metrics) = train(init_model(&cfg).unwrap(), &s, &cfg).unwrap();
        assert_eq!(metrics.len(), 1);
        let m = &metrics[0];
        assert!(m.d_loss.is_finite() && m.g_loss.is_finite() && m.val_min_ade.unwrap().is_finite());
        assert!(m.real_label_min >= 0.7 && m.real_label_max <= 1.0);
        assert!(m.fake_label_min >= 0.0 && m.fake_label_max <= 0.3);
        assert!(model.all_finite());
    }

    #[test]
    fn training_is_deterministic_and_resumable() {
        let s = split(30);
        let cfg = TrainConfig {
            epochs: 3,
            batch_size: 8,
            dims: small_dims(),
            k_variety: 4,
            val_k: 4,
            seed: 5,
            ..TrainConfig::default()
        };
        let (a, ma) = train(init_model(&cfg).unwrap(), &s, &cfg).unwrap();
        let (b, mb) = train(init_model(&cfg).unwrap(), &s, &cfg).unwrap();
        assert_eq!(
            a.flatten().iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            b.flatten().iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
        assert_eq!(ma, mb);

        let mut t = Trainer::new(init_model(&cfg).unwrap(), cfg.clone()).unwrap();
        t.run_epoch(&s).unwrap();
        let resumed = Trainer::resume(
            t.model.clone(),
            cfg.clone(),
            t.adam_g.clone(),
            t.adam_d.clone(),
            t.epoch,
            t.history.clone(),
        )
        .unwrap();
        let mut resumed = resumed;
        resumed.run_epoch(&s).unwrap();
        resumed.run_epoch(&s).unwrap();
        assert_eq!(resumed.model, a);
        assert_eq!(resumed.history, ma);
    }

    #[test]
    fn training_improves_validation() {
        let s = split(60);
        let cfg = TrainConfig { epochs: 15, batch_size: 16, k_variety: 5, val_k: 5, seed: 1, ..TrainConfig::default() };
        let mut t = Trainer::new(init_model(&cfg).unwrap(), cfg.clone()).unwrap();
        let before = t.validation(&s).unwrap().unwrap();
        for _ in 0..cfg.epochs {
            t.run_epoch(&s).unwrap();
        }
        let after = t.history.last().unwrap().val_min_ade.unwrap();
        assert!(after < before, "{after} >= {before}");
    }

    #[test]
    fn non_finite_data_aborts_and_keeps_state() {
        let mut s = split(20);
        let cfg = TrainConfig { dims: small_dims(), k_variety: 2, val_k: 2, ..TrainConfig::default() };
        let mut t = Trainer::new(init_model(&cfg).unwrap(), cfg).unwrap();
        t.run_epoch(&s).unwrap();
        let before = t.clone();
        let huge =
            crate::traj::RelativeTrajectory::new(vec![Vec2::new(1e300, 1e300); super::super::model::PRED_LEN], DT)
                .unwrap();
        for inst in &mut s.train {
            inst.future = huge.clone();
        }
        let err = t.run_epoch(&s).unwrap_err();
        assert!(err.is_numerical());
        assert_eq!(t.model, before.model);
        assert_eq!(t.epoch, 1);
        assert_eq!(t.adam_g, before.adam_g);
    }

    #[test]
    fn invalid_configs() {
        let bad = [
            TrainConfig { k_variety: 0, ..TrainConfig::default() },
            TrainConfig { lr_g: 0.0, ..TrainConfig::default() },
            TrainConfig { real_label_range: [0.9, 0.7], ..TrainConfig::default() },
        ];
        for cfg in bad {
            assert!(cfg.validate().is_err());
        }
    }
}
