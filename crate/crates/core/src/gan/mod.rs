//! Conditional sequence GAN over trajectory displacements.

pub mod checkpoint;
pub mod model;
pub mod sampling;
pub mod train;

pub use checkpoint::{decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint, sha256_hex, Checkpoint};
pub use model::{Discriminator, GanDims, GanModel, Generator, NOISE_DIM, OBS_LEN, PRED_LEN};
pub use sampling::{discriminate, displacement_sse, generate, sample_k, variety_loss, NoiseStream, Proposer, Sampler};
pub use train::{
    discriminator_loss, generator_loss, init_model, train, validation_min_ade, EpochMetrics, GeneratorLoss,
    TrainConfig, Trainer,
};
