use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::scalar::Scalar;

/// Adam with global-norm gradient clipping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Gradients whose global L2 norm exceeds this are rescaled to it.
    /// Non-positive disables clipping.
    pub clip_norm: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { learning_rate: 5e-4, beta1: 0.9, beta2: 0.999, epsilon: 1e-8, clip_norm: 1.0 }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        let ok = self.learning_rate > 0.0
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.epsilon > 0.0;
        if ok {
            Ok(())
        } else {
            Err(ModelError::Config(format!("invalid optimizer settings {self:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct AdamState<T> {
    pub m: Vec<T>,
    pub v: Vec<T>,
    pub step: u64,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(n: usize) -> Self {
        Self { m: vec![T::zero(); n], v: vec![T::zero(); n], step: 0 }
    }

    /// Clips `grad` in place and applies one update to `params`.
    pub fn update(&mut self, cfg: &AdamConfig, params: &mut [T], grad: &mut [T]) {
        let norm = grad.iter().map(|g| g.to_f64().unwrap().powi(2)).sum::<f64>().sqrt();
        if cfg.clip_norm > 0.0 && norm > cfg.clip_norm {
            let scale = T::lit(cfg.clip_norm / norm);
            grad.iter_mut().for_each(|g| *g *= scale);
        }
        self.step += 1;
        let t = self.step as i32;
        let step_size = T::lit(cfg.learning_rate / (1.0 - cfg.beta1.powi(t)));
        let v_corr = T::lit(1.0 / (1.0 - cfg.beta2.powi(t)));
        let (b1, b2) = (T::lit(cfg.beta1), T::lit(cfg.beta2));
        let (one_b1, one_b2) = (T::lit(1.0 - cfg.beta1), T::lit(1.0 - cfg.beta2));
        let eps = T::lit(cfg.epsilon);
        for (((p, &g), m), v) in params.iter_mut().zip(grad.iter()).zip(&mut self.m).zip(&mut self.v) {
            *m = b1 * *m + one_b1 * g;
            *v = b2 * *v + one_b2 * g * g;
            *p -= step_size * *m / ((*v * v_corr).sqrt() + eps);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_by_learning_rate() {
        // with bias correction the first Adam step is lr * sign(g)
        let cfg = AdamConfig { learning_rate: 1e-3, clip_norm: 0.0, ..Default::default() };
        let mut st = AdamState::<f64>::new(2);
        let mut p = vec![1.0, 1.0];
        let mut g = vec![0.5, -2.0];
        st.update(&cfg, &mut p, &mut g);
        assert!((p[0] - (1.0 - 1e-3)).abs() < 1e-9);
        assert!((p[1] - (1.0 + 1e-3)).abs() < 1e-9);
    }

    #[test]
    fn clipping_rescales_to_norm() {
        let cfg = AdamConfig::default();
        let mut st = AdamState::<f64>::new(2);
        let mut p = vec![0.0, 0.0];
        let mut g = vec![3.0, 4.0];
        st.update(&cfg, &mut p, &mut g);
        assert!((g[0] - 0.6).abs() < 1e-12 && (g[1] - 0.8).abs() < 1e-12);
    }
}
