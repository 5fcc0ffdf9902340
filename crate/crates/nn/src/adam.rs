use serde::{Deserialize, Serialize};

use crate::params::Params;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Bias-corrected Adam with first and second moments shaped like the
/// parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub config: AdamConfig,
    pub t: u64,
    pub m: Params,
    pub v: Params,
}

impl Adam {
    pub fn new(config: AdamConfig, params: &Params) -> Self {
        Self {
            config,
            t: 0,
            m: params.zeros_like(),
            v: params.zeros_like(),
        }
    }

    pub fn step(&mut self, params: &mut Params, grads: &Params) {
        let c = self.config;
        self.t += 1;
        let bc1 = 1.0 - c.beta1.powf(self.t as f64);
        let bc2 = 1.0 - c.beta2.powf(self.t as f64);
        let tensors = params
            .tensors_mut()
            .into_iter()
            .zip(grads.tensors())
            .zip(self.m.tensors_mut().into_iter().zip(self.v.tensors_mut()));
        for ((p, g), (m, v)) in tensors {
            ndarray::Zip::from(p)
                .and(g)
                .and(m)
                .and(v)
                .for_each(|p, &g, m, v| {
                    *m = c.beta1 * *m + (1.0 - c.beta1) * g;
                    *v = c.beta2 * *v + (1.0 - c.beta2) * g * g;
                    let m_hat = *m / bc1;
                    let v_hat = *v / bc2;
                    *p -= c.lr * m_hat / (v_hat.sqrt() + c.eps);
                });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::NetConfig;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params() -> Params {
        Params::init(&NetConfig::default(), &mut ChaCha8Rng::seed_from_u64(0))
    }

    #[test]
    fn zero_gradient_leaves_params() {
        let mut p = params();
        let before = p.clone();
        let mut adam = Adam::new(AdamConfig::default(), &p);
        adam.step(&mut p, &before.zeros_like());
        assert_eq!(p, before);
    }

    #[test]
    fn zero_lr_leaves_params() {
        let mut p = params();
        let before = p.clone();
        let mut g = p.clone();
        g.fill(0.3);
        let mut adam = Adam::new(
            AdamConfig {
                lr: 0.0,
                ..Default::default()
            },
            &p,
        );
        adam.step(&mut p, &g);
        assert_eq!(p, before);
    }

    #[test]
    fn first_step_is_bounded_by_lr() {
        let mut p = params();
        let before = p.clone();
        // varied gradient magnitudes and signs
        let mut g = p.clone();
        for (k, t) in g.tensors_mut().into_iter().enumerate() {
            t.mapv_inplace(|v| v * 10f64.powi(k as i32 % 7 - 3));
        }
        let mut adam = Adam::new(AdamConfig::default(), &p);
        adam.step(&mut p, &g);
        for ((a, b), gt) in p.tensors().iter().zip(before.tensors()).zip(g.tensors()) {
            for ((&x, &y), &gv) in a.iter().zip(b.iter()).zip(gt.iter()) {
                let delta = x - y;
                assert!(delta.abs() <= 1e-4 + 1e-12);
                // closed form: -lr * g / (|g| + eps)
                let expect = -1e-4 * gv / (gv.abs() + 1e-8);
                assert!((delta - expect).abs() < 1e-14);
            }
        }
    }
}
