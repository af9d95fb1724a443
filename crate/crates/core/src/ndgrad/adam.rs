use alloc::format;
use alloc::vec::Vec;

use super::{ParamId, ParamStore, ShapeError, Tensor};

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig { learning_rate: 1e-3, beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

/// Adam with bias-corrected moment estimates.
#[derive(Clone, Debug)]
pub struct Adam {
    pub config: AdamConfig,
    step: u64,
    first: Vec<Tensor>,
    second: Vec<Tensor>,
}

impl Adam {
    pub fn new(store: &ParamStore, config: AdamConfig) -> Self {
        let zeros: Vec<Tensor> = store.iter().map(|(_, _, t)| Tensor::zeros_like(t)).collect();
        Adam { config, step: 0, first: zeros.clone(), second: zeros }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    pub fn step(&mut self, store: &mut ParamStore, grads: &[Tensor]) -> Result<(), ShapeError> {
        if grads.len() != self.first.len() || store.len() != self.first.len() {
            return Err(ShapeError::new(
                "adam_step",
                format!("{} gradients for {} parameters", grads.len(), self.first.len()),
            ));
        }
        self.step += 1;
        let AdamConfig { learning_rate, beta1, beta2, epsilon } = self.config;
        let correction1 = 1.0 - libm::pow(beta1, self.step as f64);
        let correction2 = 1.0 - libm::pow(beta2, self.step as f64);
        for (k, grad) in grads.iter().enumerate() {
            let id = ParamId(k);
            if grad.shape() != self.first[k].shape() {
                return Err(ShapeError::new(
                    "adam_step",
                    format!("gradient {:?} for parameter {:?}", grad.shape(), self.first[k].shape()),
                ));
            }
            let param = store.get_mut(id).data_mut();
            let m = self.first[k].data_mut();
            let v = self.second[k].data_mut();
            for i in 0..param.len() {
                let g = grad.data()[i];
                m[i] = beta1 * m[i] + (1.0 - beta1) * g;
                v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
                let m_hat = m[i] / correction1;
                let v_hat = v[i] / correction2;
                param[i] -= learning_rate * m_hat / (libm::sqrt(v_hat) + epsilon);
            }
        }
        Ok(())
    }
}
