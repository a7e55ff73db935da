use rand::Rng;

use super::params::{join, Parameterized};
use super::tensor::Tensor2;

/// Affine map `y = W x + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    pub weight: Tensor2,
    pub bias: Tensor2,
}

impl Linear {
    /// Uniform init in +-1/sqrt(fan_in) for weights and biases.
    pub fn new<R: Rng + ?Sized>(input: usize, output: usize, rng: &mut R) -> Self {
        let bound = 1.0 / (input.max(1) as f64).sqrt();
        Linear {
            weight: Tensor2::from_fn(output, input, |_, _| rng.random_range(-bound..=bound)),
            bias: Tensor2::from_fn(output, 1, |_, _| rng.random_range(-bound..=bound)),
        }
    }

    pub fn zeros(input: usize, output: usize) -> Self {
        Linear { weight: Tensor2::zeros(output, input), bias: Tensor2::zeros(output, 1) }
    }

    pub fn input_size(&self) -> usize {
        self.weight.cols()
    }

    pub fn output_size(&self) -> usize {
        self.weight.rows()
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        let mut y = self.bias.data().to_vec();
        self.weight.matvec_acc(x, &mut y);
        y
    }

    /// Accumulates parameter gradients into `grads` and, when requested,
    /// the input gradient into `dx`.
    pub fn backward(&self, x: &[f64], dy: &[f64], grads: &mut Linear, dx: Option<&mut [f64]>) {
        grads.weight.add_outer(dy, x);
        for (g, d) in grads.bias.data_mut().iter_mut().zip(dy) {
            *g += d;
        }
        if let Some(dx) = dx {
            self.weight.matvec_t_acc(dy, dx);
        }
    }
}

impl Parameterized for Linear {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(String, &Tensor2)) {
        f(join(prefix, "weight"), &self.weight);
        f(join(prefix, "bias"), &self.bias);
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut Tensor2)) {
        f(&mut self.weight);
        f(&mut self.bias);
    }
}
