//! Minimal neural substrate: dense layers, LSTM cells, BCE, Adam and a
//! finite-difference gradient checker. All arithmetic is `f64`.

pub mod adam;
pub mod gradcheck;
pub mod linear;
pub mod loss;
pub mod lstm;
pub mod param_file;
pub mod params;
pub mod tensor;

pub use adam::{adam_update, AdamConfig, AdamState};
pub use gradcheck::grad_check;
pub use linear::Linear;
pub use loss::{bce_loss, bce_with_logit};
pub use lstm::{lstm_backward, lstm_forward, lstm_step, sigmoid, LstmCache, LstmCellParams};
pub use param_file::{decode_params, encode_params};
pub use params::{load_sections, Parameterized};
pub use tensor::Tensor2;
