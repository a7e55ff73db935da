use super::lstm::sigmoid;

/// Clamp applied to predicted probabilities before taking logs.
pub const BCE_EPS: f64 = 1e-7;

/// Binary cross-entropy of a probability against a (possibly soft) label.
pub fn bce_loss(prediction: f64, label: f64) -> f64 {
    let p = prediction.clamp(BCE_EPS, 1.0 - BCE_EPS);
    -(label * p.ln() + (1.0 - label) * (1.0 - p).ln())
}

/// BCE evaluated from a logit, `softplus(z) - y z`, together with its
/// derivative `sigmoid(z) - y`. Equal to `bce_loss(sigmoid(z), y)` away from
/// the clamp.
pub fn bce_with_logit(logit: f64, label: f64) -> (f64, f64) {
    let softplus = if logit > 0.0 { logit + (-logit).exp().ln_1p() } else { logit.exp().ln_1p() };
    (softplus - label * logit, sigmoid(logit) - label)
}
