//! Gradient-step rules. The adaptive-moment method is the training default;
//! plain gradient descent exists for tests that need a transparent update.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OptimizerKind {
    Adam,
    Sgd,
}

/// First/second moment state for one parameter tensor.
#[derive(Debug, Clone)]
struct Moments {
    m: Vec<f64>,
    v: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Optimizer {
    kind: OptimizerKind,
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    t: u64,
    moments: Vec<Moments>,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, lr: f64, tensor_sizes: &[usize]) -> Self {
        Self {
            kind,
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1.0e-8,
            t: 0,
            moments: tensor_sizes
                .iter()
                .map(|&n| Moments { m: vec![0.0; n], v: vec![0.0; n] })
                .collect(),
        }
    }

    /// Applies one descent step on every tensor against its gradient.
    pub fn step(&mut self, params: Vec<&mut Vec<f64>>, grads: Vec<&Vec<f64>>) {
        assert_eq!(params.len(), self.moments.len());
        self.t += 1;
        match self.kind {
            OptimizerKind::Sgd => {
                for (p, g) in params.into_iter().zip(grads) {
                    for (pv, gv) in p.iter_mut().zip(g) {
                        *pv -= self.lr * gv;
                    }
                }
            }
            OptimizerKind::Adam => {
                let bc1 = 1.0 - self.beta1.powi(self.t as i32);
                let bc2 = 1.0 - self.beta2.powi(self.t as i32);
                for ((p, g), mom) in params.into_iter().zip(grads).zip(&mut self.moments) {
                    for i in 0..p.len() {
                        mom.m[i] = self.beta1 * mom.m[i] + (1.0 - self.beta1) * g[i];
                        mom.v[i] = self.beta2 * mom.v[i] + (1.0 - self.beta2) * g[i] * g[i];
                        let m_hat = mom.m[i] / bc1;
                        let v_hat = mom.v[i] / bc2;
                        p[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
                    }
                }
            }
        }
    }
}
