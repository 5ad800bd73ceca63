use crate::ising::ParamClass;

use super::TrainingConfig;

/// One momentum step:
///
/// ```text
/// delta     = -eta * grad - lambda * theta + nu * prev_delta
/// theta_new = clip(theta + delta)
/// ```
///
/// Biases are clipped to `[-h_max, h_max]` and couplings to `[-j_max, j_max]`.
/// The returned `delta` is the unclipped step, kept as momentum memory.
pub fn momentum_update(
    theta: &[f64],
    grad: &[f64],
    prev_delta: &[f64],
    classes: &[ParamClass],
    cfg: &TrainingConfig,
) -> (Vec<f64>, Vec<f64>) {
    assert!(
        theta.len() == grad.len() && theta.len() == prev_delta.len() && theta.len() == classes.len(),
        "parameter, gradient and momentum shapes differ"
    );
    let mut next = Vec::with_capacity(theta.len());
    let mut delta = Vec::with_capacity(theta.len());
    for i in 0..theta.len() {
        let d = -cfg.eta * grad[i] - cfg.lambda * theta[i] + cfg.nu * prev_delta[i];
        let bound = match classes[i] {
            ParamClass::Bias(_) => cfg.h_max,
            ParamClass::Coupling(..) => cfg.j_max,
        };
        next.push((theta[i] + d).clamp(-bound, bound));
        delta.push(d);
    }
    (next, delta)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(eta: f64, lambda: f64, nu: f64) -> TrainingConfig {
        TrainingConfig { eta, lambda, nu, ..Default::default() }
    }

    #[test]
    fn plain_step() {
        let (t, d) = momentum_update(&[0.5], &[0.2], &[0.0], &[ParamClass::Bias(0)], &cfg(0.1, 0.0, 0.0));
        assert!((t[0] - 0.48).abs() < 1e-15);
        assert!((d[0] + 0.02).abs() < 1e-15);
    }

    #[test]
    fn momentum_step() {
        let (t, d) = momentum_update(&[0.5], &[0.2], &[-0.1], &[ParamClass::Bias(0)], &cfg(0.1, 0.0, 0.5));
        assert!((d[0] + 0.07).abs() < 1e-15);
        assert!((t[0] - 0.43).abs() < 1e-15);
    }

    #[test]
    fn clipping_keeps_unclipped_memory() {
        let classes = [ParamClass::Bias(0), ParamClass::Coupling(0, 1)];
        let c = TrainingConfig { h_max: 1.0, j_max: 0.5, ..cfg(1.0, 0.0, 0.0) };
        let (t, d) = momentum_update(&[0.9, 0.4], &[-0.4, -0.4], &[0.0, 0.0], &classes, &c);
        assert_eq!(t, vec![1.0, 0.5]);
        assert!((d[0] - 0.4).abs() < 1e-15);
    }

    #[test]
    fn weight_decay_is_not_scaled_by_eta() {
        let (t, _) = momentum_update(&[0.5], &[0.0], &[0.0], &[ParamClass::Bias(0)], &cfg(0.1, 0.01, 0.0));
        assert!((t[0] - 0.495).abs() < 1e-15);
    }
}
