//! Adam optimizer state for one network.

use serde::{Deserialize, Serialize};

use super::mlp::{MlpGrads, MlpParams};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    t: u64,
    m_w: Vec<Vec<f64>>,
    v_w: Vec<Vec<f64>>,
    m_b: Vec<Vec<f64>>,
    v_b: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(params: &MlpParams, lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m_w: params.weights.iter().map(|w| vec![0.0; w.len()]).collect(),
            v_w: params.weights.iter().map(|w| vec![0.0; w.len()]).collect(),
            m_b: params.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
            v_b: params.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }

    pub fn step(&mut self, params: &mut MlpParams, grads: &MlpGrads) {
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        let update = |p: &mut f64, g: f64, m: &mut f64, v: &mut f64| {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            *p -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
        };
        for l in 0..params.weights.len() {
            for i in 0..params.weights[l].len() {
                update(
                    &mut params.weights[l][i],
                    grads.weights[l][i],
                    &mut self.m_w[l][i],
                    &mut self.v_w[l][i],
                );
            }
            for i in 0..params.biases[l].len() {
                update(
                    &mut params.biases[l][i],
                    grads.biases[l][i],
                    &mut self.m_b[l][i],
                    &mut self.v_b[l][i],
                );
            }
        }
    }
}
