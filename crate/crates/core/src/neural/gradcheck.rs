/// Central-difference step.
pub const GRAD_CHECK_STEP: f64 = 1e-5;

/// Compares an analytic gradient against central finite differences of
/// `loss` around `params`.
///
/// Returns the maximum over coordinates of
/// `|analytic - numeric| / max(|analytic|, |numeric|, 1e-8)`.
pub fn grad_check<F>(mut loss: F, params: &[f64], analytic: &[f64]) -> f64
where
    F: FnMut(&[f64]) -> f64,
{
    assert_eq!(params.len(), analytic.len(), "gradient length mismatch");
    let mut work = params.to_vec();
    let mut worst = 0.0f64;
    for idx in 0..params.len() {
        let orig = work[idx];
        work[idx] = orig + GRAD_CHECK_STEP;
        let up = loss(&work);
        work[idx] = orig - GRAD_CHECK_STEP;
        let down = loss(&work);
        work[idx] = orig;
        let numeric = (up - down) / (2.0 * GRAD_CHECK_STEP);
        let a = analytic[idx];
        let denom = a.abs().max(numeric.abs()).max(1e-8);
        worst = worst.max((a - numeric).abs() / denom);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::linear::Linear;
    use crate::neural::params::Parameterized;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn linear_layer_with_squared_loss() {
        for seed in 0..20u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (n_in, n_out) = (rng.random_range(1..6), rng.random_range(1..6));
            let layer = Linear::new(n_in, n_out, &mut rng);
            let x: Vec<f64> = (0..n_in).map(|_| rng.random_range(-2.0..2.0)).collect();
            let t: Vec<f64> = (0..n_out).map(|_| rng.random_range(-2.0..2.0)).collect();
            let loss = |flat: &[f64]| {
                let mut l = layer.clone();
                l.assign_flat(flat).unwrap();
                l.forward(&x).iter().zip(&t).map(|(y, t)| (y - t).powi(2)).sum::<f64>()
            };
            let y = layer.forward(&x);
            let dy: Vec<f64> = y.iter().zip(&t).map(|(y, t)| 2.0 * (y - t)).collect();
            let mut grads = Linear::zeros(n_in, n_out);
            layer.backward(&x, &dy, &mut grads, None);
            let err = grad_check(loss, &layer.flatten(), &grads.flatten());
            assert!(err < 1e-6, "seed {seed}: {err}");
        }
    }

    #[test]
    fn detects_a_wrong_gradient() {
        let err = grad_check(|p| p[0] * p[0], &[1.5], &[2.0]);
        assert!(err > 0.1);
    }
}
