use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::model::{GanModel, NOISE_DIM, OBS_LEN, PRED_LEN};
use crate::error::{Error, Result};
use crate::neural::sigmoid;
use crate::traj::{ensure_same_dt, RelativeTrajectory, Vec2};

/// Seeded source of generator noise. Proposals drawn from one stream are
/// reproducible and shared between the scene-free baseline and fusion.
#[derive(Debug, Clone)]
pub struct NoiseStream {
    rng: ChaCha8Rng,
}

impl NoiseStream {
    pub fn new(seed: u64) -> Self {
        NoiseStream { rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    /// `NOISE_DIM` i.i.d. standard normal coordinates.
    pub fn next_noise(&mut self) -> [f64; NOISE_DIM] {
        let mut z = [0.0; NOISE_DIM];
        for v in &mut z {
            *v = self.rng.sample(StandardNormal);
        }
        z
    }

    /// Uniform draw in [0, 1), for stub proposers.
    pub fn next_uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }
}

/// Anything that proposes future displacements conditioned on a past.
pub trait Proposer {
    /// Prepares a sampler for one past; each call of the returned closure
    /// consumes the stream and yields one proposal of `PRED_LEN` steps.
    fn condition<'a>(&'a self, past: &RelativeTrajectory) -> Result<Sampler<'a>>;
}

/// Draws one proposal per call from a noise stream.
pub type Sampler<'a> = Box<dyn FnMut(&mut NoiseStream) -> RelativeTrajectory + 'a>;

fn check_len(what: &str, traj: &RelativeTrajectory, expected: usize) -> Result<()> {
    if traj.len() == expected {
        Ok(())
    } else {
        Err(Error::ShapeMismatch { what: what.to_string(), expected, got: traj.len() })
    }
}

fn to_rel(steps: &[[f64; 2]], dt: f64) -> RelativeTrajectory {
    RelativeTrajectory::new(steps.iter().map(|s| Vec2::new(s[0], s[1])).collect(), dt)
        .expect("generator output is non-empty")
}

impl Proposer for GanModel {
    fn condition<'a>(&'a self, past: &RelativeTrajectory) -> Result<Sampler<'a>> {
        check_len("past trajectory", past, OBS_LEN)?;
        let encoded = self.generator.encode(past.displacements());
        let last = *past.displacements().last().unwrap();
        let dt = past.dt();
        Ok(Box::new(move |stream| {
            let z = stream.next_noise();
            to_rel(&self.generator.decode(&encoded, last, &z), dt)
        }))
    }
}

/// `G(z | past)`: deterministic given model, past and noise.
pub fn generate(model: &GanModel, past: &RelativeTrajectory, noise: &[f64]) -> Result<RelativeTrajectory> {
    check_len("past trajectory", past, OBS_LEN)?;
    if noise.len() != NOISE_DIM {
        return Err(Error::ShapeMismatch { what: "noise vector".into(), expected: NOISE_DIM, got: noise.len() });
    }
    if noise.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("noise vector".into()));
    }
    let encoded = model.generator.encode(past.displacements());
    let last = *past.displacements().last().unwrap();
    Ok(to_rel(&model.generator.decode(&encoded, last, noise), past.dt()))
}

/// The first `k` proposals of the noise stream seeded with `seed`.
pub fn sample_k<P: Proposer + ?Sized>(
    proposer: &P,
    past: &RelativeTrajectory,
    k: usize,
    seed: u64,
) -> Result<Vec<RelativeTrajectory>> {
    let mut draw = proposer.condition(past)?;
    let mut stream = NoiseStream::new(seed);
    Ok((0..k).map(|_| draw(&mut stream)).collect())
}

/// Discriminator probability that `(past, future)` is real.
pub fn discriminate(model: &GanModel, past: &RelativeTrajectory, future: &RelativeTrajectory) -> Result<f64> {
    check_len("past trajectory", past, OBS_LEN)?;
    check_len("future trajectory", future, PRED_LEN)?;
    ensure_same_dt(past.dt(), future.dt())?;
    let seq: Vec<[f64; 2]> = past.displacements().iter().chain(future.displacements()).map(|d| [d.x, d.y]).collect();
    Ok(sigmoid(model.discriminator.logit(&seq)))
}

/// Summed squared error between displacement sequences.
pub fn displacement_sse(a: &[Vec2], b: &[Vec2]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p.x - q.x).powi(2) + (p.y - q.y).powi(2)).sum()
}

/// Minimum over `k` samples of the summed squared displacement error.
pub fn variety_loss<P: Proposer + ?Sized>(
    proposer: &P,
    past: &RelativeTrajectory,
    ground_truth: &RelativeTrajectory,
    k: usize,
    seed: u64,
) -> Result<f64> {
    if k == 0 {
        return Err(Error::Config("variety loss needs k >= 1".into()));
    }
    check_len("ground-truth future", ground_truth, PRED_LEN)?;
    let samples = sample_k(proposer, past, k, seed)?;
    Ok(samples
        .iter()
        .map(|s| displacement_sse(s.displacements(), ground_truth.displacements()))
        .fold(f64::INFINITY, f64::min))
}
