//! Generator and discriminator networks with hand-written backpropagation
//! through time.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::neural::params::join;
use crate::neural::{lstm_backward, lstm_forward, Linear, LstmCache, LstmCellParams, Parameterized, Tensor2};
use crate::traj::Vec2;

/// Dimension of the generator's noise input.
pub const NOISE_DIM: usize = 8;
/// Observed steps (M).
pub const OBS_LEN: usize = 8;
/// Predicted steps (N).
pub const PRED_LEN: usize = 8;

/// Layer widths. Noise, observation and prediction lengths are fixed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GanDims {
    pub embed_dim: usize,
    pub enc_hidden: usize,
    pub dec_hidden: usize,
    pub disc_hidden: usize,
}

impl Default for GanDims {
    fn default() -> Self {
        GanDims { embed_dim: 16, enc_hidden: 32, dec_hidden: 40, disc_hidden: 32 }
    }
}

impl GanDims {
    pub fn validate(&self) -> Result<()> {
        if self.embed_dim == 0 || self.enc_hidden == 0 || self.dec_hidden == 0 || self.disc_hidden == 0 {
            return Err(Error::Config(format!("layer widths must be positive: {self:?}")));
        }
        Ok(())
    }
}

fn v2(v: Vec2) -> [f64; 2] {
    [v.x, v.y]
}

/// LSTM encoder over past displacements and an LSTM decoder emitting future
/// displacements, initialized from the encoding concatenated with noise.
#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    pub embedding: Linear,
    pub encoder: LstmCellParams,
    pub hidden_init: Linear,
    pub decoder: LstmCellParams,
    pub head: Linear,
}

#[derive(Debug, Clone)]
pub struct EncoderTrace {
    inputs: Vec<[f64; 2]>,
    steps: Vec<LstmCache>,
    pub hidden: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct DecoderTrace {
    init_input: Vec<f64>,
    inputs: Vec<[f64; 2]>,
    steps: Vec<LstmCache>,
    pub outputs: Vec<[f64; 2]>,
}

impl Generator {
    pub fn new<R: Rng + ?Sized>(dims: &GanDims, rng: &mut R) -> Self {
        Generator {
            embedding: Linear::new(2, dims.embed_dim, rng),
            encoder: LstmCellParams::new(dims.embed_dim, dims.enc_hidden, rng),
            hidden_init: Linear::new(dims.enc_hidden + NOISE_DIM, dims.dec_hidden, rng),
            decoder: LstmCellParams::new(dims.embed_dim, dims.dec_hidden, rng),
            head: Linear::new(dims.dec_hidden, 2, rng),
        }
    }

    pub fn zeros(dims: &GanDims) -> Self {
        Generator {
            embedding: Linear::zeros(2, dims.embed_dim),
            encoder: LstmCellParams::zeros(dims.embed_dim, dims.enc_hidden),
            hidden_init: Linear::zeros(dims.enc_hidden + NOISE_DIM, dims.dec_hidden),
            decoder: LstmCellParams::zeros(dims.embed_dim, dims.dec_hidden),
            head: Linear::zeros(dims.dec_hidden, 2),
        }
    }

    /// Final encoder hidden state.
    pub fn encode(&self, past: &[Vec2]) -> Vec<f64> {
        let hs = self.encoder.hidden_size();
        let mut h = vec![0.0; hs];
        let mut c = vec![0.0; hs];
        for d in past {
            let e = self.embedding.forward(&v2(*d));
            let step = lstm_forward(&self.encoder, &e, &h, &c);
            h = step.h;
            c = step.c;
        }
        h
    }

    pub fn encode_traced(&self, past: &[Vec2]) -> EncoderTrace {
        let hs = self.encoder.hidden_size();
        let mut h = vec![0.0; hs];
        let mut c = vec![0.0; hs];
        let mut trace = EncoderTrace {
            inputs: Vec::with_capacity(past.len()),
            steps: Vec::with_capacity(past.len()),
            hidden: Vec::new(),
        };
        for d in past {
            let x = v2(*d);
            let e = self.embedding.forward(&x);
            let step = lstm_forward(&self.encoder, &e, &h, &c);
            h = step.h.clone();
            c = step.c.clone();
            trace.inputs.push(x);
            trace.steps.push(step);
        }
        trace.hidden = h;
        trace
    }

    fn init_input(encoded: &[f64], noise: &[f64]) -> Vec<f64> {
        let mut v = Vec::with_capacity(encoded.len() + noise.len());
        v.extend_from_slice(encoded);
        v.extend_from_slice(noise);
        v
    }

    /// Emits `PRED_LEN` displacements. The first decoder input is the last
    /// observed displacement; later inputs are the previous outputs.
    pub fn decode(&self, encoded: &[f64], last_observed: Vec2, noise: &[f64]) -> Vec<[f64; 2]> {
        let mut h = self.hidden_init.forward(&Self::init_input(encoded, noise));
        let mut c = vec![0.0; h.len()];
        let mut prev = v2(last_observed);
        let mut out = Vec::with_capacity(PRED_LEN);
        for _ in 0..PRED_LEN {
            let e = self.embedding.forward(&prev);
            let step = lstm_forward(&self.decoder, &e, &h, &c);
            let y = self.head.forward(&step.h);
            h = step.h;
            c = step.c;
            prev = [y[0], y[1]];
            out.push(prev);
        }
        out
    }

    pub fn decode_traced(&self, encoded: &[f64], last_observed: Vec2, noise: &[f64]) -> DecoderTrace {
        let init_input = Self::init_input(encoded, noise);
        let mut h = self.hidden_init.forward(&init_input);
        let mut c = vec![0.0; h.len()];
        let mut prev = v2(last_observed);
        let mut trace = DecoderTrace {
            init_input,
            inputs: Vec::with_capacity(PRED_LEN),
            steps: Vec::with_capacity(PRED_LEN),
            outputs: Vec::with_capacity(PRED_LEN),
        };
        for _ in 0..PRED_LEN {
            let e = self.embedding.forward(&prev);
            let step = lstm_forward(&self.decoder, &e, &h, &c);
            let y = self.head.forward(&step.h);
            h = step.h.clone();
            c = step.c.clone();
            trace.inputs.push(prev);
            trace.steps.push(step);
            prev = [y[0], y[1]];
            trace.outputs.push(prev);
        }
        trace
    }

    /// Backpropagates output gradients through the decoder (including the
    /// feedback of each output into the next step's input). Returns the
    /// gradient with respect to the encoder's final hidden state.
    pub fn backward_decoder(&self, trace: &DecoderTrace, d_outputs: &[[f64; 2]], grads: &mut Generator) -> Vec<f64> {
        let hd = self.decoder.hidden_size();
        let mut dh_next = vec![0.0; hd];
        let mut dc_next = vec![0.0; hd];
        let mut d_feedback = [0.0; 2];
        for t in (0..trace.steps.len()).rev() {
            let step = &trace.steps[t];
            let dy = [d_outputs[t][0] + d_feedback[0], d_outputs[t][1] + d_feedback[1]];
            let mut dh = dh_next.clone();
            self.head.backward(&step.h, &dy, &mut grads.head, Some(&mut dh));
            let (dx, dh_prev, dc_prev) = lstm_backward(&self.decoder, step, &dh, &dc_next, &mut grads.decoder);
            let mut d_in = [0.0; 2];
            self.embedding.backward(&trace.inputs[t], &dx, &mut grads.embedding, Some(&mut d_in));
            // Step 0's input is observed data; later inputs are outputs t-1.
            d_feedback = if t > 0 { d_in } else { [0.0; 2] };
            dh_next = dh_prev;
            dc_next = dc_prev;
        }
        let mut d_init = vec![0.0; trace.init_input.len()];
        self.hidden_init.backward(&trace.init_input, &dh_next, &mut grads.hidden_init, Some(&mut d_init));
        d_init.truncate(self.encoder.hidden_size());
        d_init
    }

    pub fn backward_encoder(&self, trace: &EncoderTrace, d_hidden: &[f64], grads: &mut Generator) {
        let he = self.encoder.hidden_size();
        let mut dh = d_hidden.to_vec();
        let mut dc = vec![0.0; he];
        for t in (0..trace.steps.len()).rev() {
            let (dx, dh_prev, dc_prev) = lstm_backward(&self.encoder, &trace.steps[t], &dh, &dc, &mut grads.encoder);
            self.embedding.backward(&trace.inputs[t], &dx, &mut grads.embedding, None);
            dh = dh_prev;
            dc = dc_prev;
        }
    }

    fn refresh(&mut self) {
        self.encoder.refresh_sizes();
        self.decoder.refresh_sizes();
    }
}

impl Parameterized for Generator {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(String, &Tensor2)) {
        self.embedding.visit(&join(prefix, "embedding"), f);
        self.encoder.visit(&join(prefix, "encoder"), f);
        self.hidden_init.visit(&join(prefix, "hidden_init"), f);
        self.decoder.visit(&join(prefix, "decoder"), f);
        self.head.visit(&join(prefix, "head"), f);
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut Tensor2)) {
        self.embedding.visit_mut(f);
        self.encoder.visit_mut(f);
        self.hidden_init.visit_mut(f);
        self.decoder.visit_mut(f);
        self.head.visit_mut(f);
    }
}

/// LSTM over the concatenated past+future displacement sequence, scored
/// from the final hidden state.
#[derive(Debug, Clone, PartialEq)]
pub struct Discriminator {
    pub embedding: Linear,
    pub lstm: LstmCellParams,
    pub score: Linear,
}

#[derive(Debug, Clone)]
pub struct DiscriminatorTrace {
    inputs: Vec<[f64; 2]>,
    steps: Vec<LstmCache>,
    pub logit: f64,
}

impl Discriminator {
    pub fn new<R: Rng + ?Sized>(dims: &GanDims, rng: &mut R) -> Self {
        Discriminator {
            embedding: Linear::new(2, dims.embed_dim, rng),
            lstm: LstmCellParams::new(dims.embed_dim, dims.disc_hidden, rng),
            score: Linear::new(dims.disc_hidden, 1, rng),
        }
    }

    pub fn zeros(dims: &GanDims) -> Self {
        Discriminator {
            embedding: Linear::zeros(2, dims.embed_dim),
            lstm: LstmCellParams::zeros(dims.embed_dim, dims.disc_hidden),
            score: Linear::zeros(dims.disc_hidden, 1),
        }
    }

    pub fn logit(&self, sequence: &[[f64; 2]]) -> f64 {
        let hs = self.lstm.hidden_size();
        let mut h = vec![0.0; hs];
        let mut c = vec![0.0; hs];
        for x in sequence {
            let e = self.embedding.forward(x);
            let step = lstm_forward(&self.lstm, &e, &h, &c);
            h = step.h;
            c = step.c;
        }
        self.score.forward(&h)[0]
    }

    pub fn forward_traced(&self, sequence: &[[f64; 2]]) -> DiscriminatorTrace {
        let hs = self.lstm.hidden_size();
        let mut h = vec![0.0; hs];
        let mut c = vec![0.0; hs];
        let mut steps = Vec::with_capacity(sequence.len());
        for x in sequence {
            let e = self.embedding.forward(x);
            let step = lstm_forward(&self.lstm, &e, &h, &c);
            h = step.h.clone();
            c = step.c.clone();
            steps.push(step);
        }
        let logit = self.score.forward(&h)[0];
        DiscriminatorTrace { inputs: sequence.to_vec(), steps, logit }
    }

    /// Backpropagates `d_logit`, accumulating parameter gradients into
    /// `grads` and returning the gradient for every input displacement.
    pub fn backward(&self, trace: &DiscriminatorTrace, d_logit: f64, grads: &mut Discriminator) -> Vec<[f64; 2]> {
        let hs = self.lstm.hidden_size();
        let last_h = trace.steps.last().map(|s| s.h.clone()).unwrap_or_else(|| vec![0.0; hs]);
        let mut dh = vec![0.0; hs];
        self.score.backward(&last_h, &[d_logit], &mut grads.score, Some(&mut dh));
        let mut dc = vec![0.0; hs];
        let mut d_inputs = vec![[0.0; 2]; trace.inputs.len()];
        for t in (0..trace.steps.len()).rev() {
            let (dx, dh_prev, dc_prev) = lstm_backward(&self.lstm, &trace.steps[t], &dh, &dc, &mut grads.lstm);
            let mut d_in = [0.0; 2];
            self.embedding.backward(&trace.inputs[t], &dx, &mut grads.embedding, Some(&mut d_in));
            d_inputs[t] = d_in;
            dh = dh_prev;
            dc = dc_prev;
        }
        d_inputs
    }

    fn refresh(&mut self) {
        self.lstm.refresh_sizes();
    }
}

impl Parameterized for Discriminator {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(String, &Tensor2)) {
        self.embedding.visit(&join(prefix, "embedding"), f);
        self.lstm.visit(&join(prefix, "lstm"), f);
        self.score.visit(&join(prefix, "score"), f);
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut Tensor2)) {
        self.embedding.visit_mut(f);
        self.lstm.visit_mut(f);
        self.score.visit_mut(f);
    }
}

/// Conditional sequence GAN.
#[derive(Debug, Clone, PartialEq)]
pub struct GanModel {
    pub dims: GanDims,
    pub generator: Generator,
    pub discriminator: Discriminator,
}

impl GanModel {
    pub fn new<R: Rng + ?Sized>(dims: GanDims, rng: &mut R) -> Result<Self> {
        dims.validate()?;
        let generator = Generator::new(&dims, rng);
        let discriminator = Discriminator::new(&dims, rng);
        Ok(GanModel { dims, generator, discriminator })
    }

    /// Loads parameters from named sections, checking every shape against
    /// `dims` and rejecting non-finite values.
    pub fn from_sections(dims: GanDims, sections: &[(String, Tensor2)]) -> Result<Self> {
        dims.validate()?;
        let mut generator = Generator::zeros(&dims);
        let mut discriminator = Discriminator::zeros(&dims);
        crate::neural::load_sections(&mut generator, "generator", sections)?;
        crate::neural::load_sections(&mut discriminator, "discriminator", sections)?;
        generator.refresh();
        discriminator.refresh();
        generator.encoder.validate()?;
        generator.decoder.validate()?;
        discriminator.lstm.validate()?;
        let model = GanModel { dims, generator, discriminator };
        if !model.all_finite() {
            return Err(Error::NonFinite("model parameters".into()));
        }
        Ok(model)
    }
}

impl Parameterized for GanModel {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(String, &Tensor2)) {
        self.generator.visit(&join(prefix, "generator"), f);
        self.discriminator.visit(&join(prefix, "discriminator"), f);
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut Tensor2)) {
        self.generator.visit_mut(f);
        self.discriminator.visit_mut(f);
    }
}
