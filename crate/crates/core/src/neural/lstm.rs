//! LSTM cell without peepholes.
//!
//! ```text
//! i = sigmoid(W_i [x; h] + b_i)     f = sigmoid(W_f [x; h] + b_f)
//! g = tanh(W_g [x; h] + b_g)        o = sigmoid(W_o [x; h] + b_o)
//! c' = f * c + i * g                h' = o * tanh(c')
//! ```

use rand::Rng;

use super::params::{join, Parameterized};
use super::tensor::Tensor2;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LstmCellParams {
    input_size: usize,
    hidden_size: usize,
    pub w_i: Tensor2,
    pub w_f: Tensor2,
    pub w_g: Tensor2,
    pub w_o: Tensor2,
    pub b_i: Tensor2,
    pub b_f: Tensor2,
    pub b_g: Tensor2,
    pub b_o: Tensor2,
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl LstmCellParams {
    /// Weights uniform in +-1/sqrt(input + hidden); forget-gate bias starts
    /// at 1.0, other biases at zero.
    pub fn new<R: Rng + ?Sized>(input_size: usize, hidden_size: usize, rng: &mut R) -> Self {
        let fan_in = input_size + hidden_size;
        let bound = 1.0 / (fan_in.max(1) as f64).sqrt();
        let mut w = || Tensor2::from_fn(hidden_size, fan_in, |_, _| rng.random_range(-bound..=bound));
        let (w_i, w_f, w_g, w_o) = (w(), w(), w(), w());
        LstmCellParams {
            input_size,
            hidden_size,
            w_i,
            w_f,
            w_g,
            w_o,
            b_i: Tensor2::zeros(hidden_size, 1),
            b_f: Tensor2::filled(hidden_size, 1, 1.0),
            b_g: Tensor2::zeros(hidden_size, 1),
            b_o: Tensor2::zeros(hidden_size, 1),
        }
    }

    pub fn zeros(input_size: usize, hidden_size: usize) -> Self {
        let w = || Tensor2::zeros(hidden_size, input_size + hidden_size);
        let b = || Tensor2::zeros(hidden_size, 1);
        LstmCellParams {
            input_size,
            hidden_size,
            w_i: w(),
            w_f: w(),
            w_g: w(),
            w_o: w(),
            b_i: b(),
            b_f: b(),
            b_g: b(),
            b_o: b(),
        }
    }

    pub fn input_size(&self) -> usize {
        self.input_size
    }

    pub fn hidden_size(&self) -> usize {
        self.hidden_size
    }

    fn gates(&self) -> [(&Tensor2, &Tensor2); 4] {
        [(&self.w_i, &self.b_i), (&self.w_f, &self.b_f), (&self.w_g, &self.b_g), (&self.w_o, &self.b_o)]
    }

    /// Checks internal shape consistency (used after loading).
    pub fn validate(&self) -> Result<()> {
        let fan_in = self.input_size + self.hidden_size;
        for (name, (w, b)) in ["i", "f", "g", "o"].iter().zip(self.gates()) {
            if w.rows() != self.hidden_size || w.cols() != fan_in {
                return Err(Error::ShapeMismatch {
                    what: format!("lstm W_{name} columns"),
                    expected: fan_in,
                    got: w.cols(),
                });
            }
            if b.rows() != self.hidden_size || b.cols() != 1 {
                return Err(Error::ShapeMismatch {
                    what: format!("lstm b_{name} rows"),
                    expected: self.hidden_size,
                    got: b.rows(),
                });
            }
        }
        Ok(())
    }

    /// Rebuilds sizes from the loaded tensors.
    pub(crate) fn refresh_sizes(&mut self) {
        self.hidden_size = self.w_i.rows();
        self.input_size = self.w_i.cols().saturating_sub(self.hidden_size);
    }
}

impl Parameterized for LstmCellParams {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(String, &Tensor2)) {
        f(join(prefix, "w_i"), &self.w_i);
        f(join(prefix, "w_f"), &self.w_f);
        f(join(prefix, "w_g"), &self.w_g);
        f(join(prefix, "w_o"), &self.w_o);
        f(join(prefix, "b_i"), &self.b_i);
        f(join(prefix, "b_f"), &self.b_f);
        f(join(prefix, "b_g"), &self.b_g);
        f(join(prefix, "b_o"), &self.b_o);
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut Tensor2)) {
        f(&mut self.w_i);
        f(&mut self.w_f);
        f(&mut self.w_g);
        f(&mut self.w_o);
        f(&mut self.b_i);
        f(&mut self.b_f);
        f(&mut self.b_g);
        f(&mut self.b_o);
    }
}

/// Activations of one step, retained for backpropagation.
#[derive(Debug, Clone)]
pub struct LstmCache {
    /// `[x; h_prev]`
    pub z: Vec<f64>,
    pub c_prev: Vec<f64>,
    pub i: Vec<f64>,
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    pub o: Vec<f64>,
    pub c: Vec<f64>,
    pub tanh_c: Vec<f64>,
    pub h: Vec<f64>,
}

/// One LSTM step with shape checking. Returns `(h, c)`.
pub fn lstm_step(params: &LstmCellParams, x: &[f64], h_prev: &[f64], c_prev: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let check = |what: &str, expected: usize, got: usize| {
        if expected == got {
            Ok(())
        } else {
            Err(Error::ShapeMismatch { what: what.to_string(), expected, got })
        }
    };
    check("lstm input x", params.input_size, x.len())?;
    check("lstm h_prev", params.hidden_size, h_prev.len())?;
    check("lstm c_prev", params.hidden_size, c_prev.len())?;
    let cache = lstm_forward(params, x, h_prev, c_prev);
    Ok((cache.h, cache.c))
}

/// Unchecked forward step retaining everything needed for backward.
pub fn lstm_forward(params: &LstmCellParams, x: &[f64], h_prev: &[f64], c_prev: &[f64]) -> LstmCache {
    let hs = params.hidden_size;
    let mut z = Vec::with_capacity(x.len() + h_prev.len());
    z.extend_from_slice(x);
    z.extend_from_slice(h_prev);

    let pre = |w: &Tensor2, b: &Tensor2| {
        let mut a = b.data().to_vec();
        w.matvec_acc(&z, &mut a);
        a
    };
    let i: Vec<f64> = pre(&params.w_i, &params.b_i).into_iter().map(sigmoid).collect();
    let f: Vec<f64> = pre(&params.w_f, &params.b_f).into_iter().map(sigmoid).collect();
    let g: Vec<f64> = pre(&params.w_g, &params.b_g).into_iter().map(f64::tanh).collect();
    let o: Vec<f64> = pre(&params.w_o, &params.b_o).into_iter().map(sigmoid).collect();

    let mut c = vec![0.0; hs];
    let mut tanh_c = vec![0.0; hs];
    let mut h = vec![0.0; hs];
    for j in 0..hs {
        c[j] = f[j] * c_prev[j] + i[j] * g[j];
        tanh_c[j] = c[j].tanh();
        h[j] = o[j] * tanh_c[j];
    }
    LstmCache { z, c_prev: c_prev.to_vec(), i, f, g, o, c, tanh_c, h }
}

/// Backward through one step.
///
/// `dh` and `dc` are the gradients reaching this step's outputs. Parameter
/// gradients are accumulated into `grads`; returns `(dx, dh_prev, dc_prev)`.
pub fn lstm_backward(
    params: &LstmCellParams,
    cache: &LstmCache,
    dh: &[f64],
    dc: &[f64],
    grads: &mut LstmCellParams,
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let hs = params.hidden_size;
    let mut da_i = vec![0.0; hs];
    let mut da_f = vec![0.0; hs];
    let mut da_g = vec![0.0; hs];
    let mut da_o = vec![0.0; hs];
    let mut dc_prev = vec![0.0; hs];
    for j in 0..hs {
        let (i, f, g, o, tc) = (cache.i[j], cache.f[j], cache.g[j], cache.o[j], cache.tanh_c[j]);
        let d_o = dh[j] * tc;
        let dc_total = dc[j] + dh[j] * o * (1.0 - tc * tc);
        let d_i = dc_total * g;
        let d_g = dc_total * i;
        let d_f = dc_total * cache.c_prev[j];
        dc_prev[j] = dc_total * f;
        da_i[j] = d_i * i * (1.0 - i);
        da_f[j] = d_f * f * (1.0 - f);
        da_g[j] = d_g * (1.0 - g * g);
        da_o[j] = d_o * o * (1.0 - o);
    }

    let mut dz = vec![0.0; cache.z.len()];
    let terms = [
        (&params.w_i, &mut grads.w_i, &mut grads.b_i, &da_i),
        (&params.w_f, &mut grads.w_f, &mut grads.b_f, &da_f),
        (&params.w_g, &mut grads.w_g, &mut grads.b_g, &da_g),
        (&params.w_o, &mut grads.w_o, &mut grads.b_o, &da_o),
    ];
    for (w, gw, gb, da) in terms {
        gw.add_outer(da, &cache.z);
        for (b, d) in gb.data_mut().iter_mut().zip(da.iter()) {
            *b += d;
        }
        w.matvec_t_acc(da, &mut dz);
    }
    let dh_prev = dz.split_off(params.input_size);
    (dz, dh_prev, dc_prev)
}
