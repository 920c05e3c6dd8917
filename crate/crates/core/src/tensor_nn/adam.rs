use serde::{Deserialize, Serialize};

use super::{Gradients, Network};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { lr: 1e-3, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// Moment accumulators for one parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    step: u64,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl AdamState {
    pub fn new(param_count: usize, config: AdamConfig) -> Self {
        Self { config, step: 0, m: vec![0.0; param_count], v: vec![0.0; param_count] }
    }

    pub fn for_network(net: &Network, config: AdamConfig) -> Self {
        Self::new(net.param_count(), config)
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// Bias-corrected Adam update of a raw parameter slice. On a non-finite
    /// gradient nothing is modified and the offending index is returned.
    pub fn update(&mut self, params: &mut [f64], grads: &[f64]) -> std::result::Result<(), usize> {
        assert_eq!(params.len(), self.m.len(), "Adam state does not match parameters");
        assert_eq!(grads.len(), self.m.len(), "Adam state does not match gradients");
        if let Some(bad) = grads.iter().position(|g| !g.is_finite()) {
            return Err(bad);
        }
        self.step += 1;
        let AdamConfig { lr, beta1, beta2, eps } = self.config;
        let t = self.step as i32;
        let c1 = 1.0 - beta1.powi(t);
        let c2 = 1.0 - beta2.powi(t);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = beta1 * self.m[i] + (1.0 - beta1) * g;
            self.v[i] = beta2 * self.v[i] + (1.0 - beta2) * g * g;
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            params[i] -= lr * m_hat / (v_hat.sqrt() + eps);
        }
        Ok(())
    }
}

/// One Adam step on a network. The Fourier frequencies are not parameters and
/// are never touched.
pub fn adam_step(state: &mut AdamState, net: &mut Network, grads: &Gradients) -> Result<()> {
    if grads.len() != net.param_count() {
        return Err(Error::Shape(format!(
            "gradient has {} entries, network has {}",
            grads.len(),
            net.param_count()
        )));
    }
    if state.m.len() != net.param_count() {
        return Err(Error::Shape("Adam state does not match network".into()));
    }
    match state.update(net.params_mut(), grads.as_slice()) {
        Ok(()) => Ok(()),
        Err(i) => Err(Error::NonFiniteGradient { layer: net.layer_of(i).unwrap_or(0) }),
    }
}
