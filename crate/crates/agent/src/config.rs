use hgff_nn::{AdamConfig, NetConfig};
use serde::{Deserialize, Serialize};

use crate::error::{AgentError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub episodes: u64,
    pub batch_size: usize,
    pub lr: f64,
    pub gamma: f64,
    pub eps_init: f64,
    pub eps_fin: f64,
    /// Linear decrease of ε per episode.
    pub eps_decay: f64,
    /// Environment steps between target network syncs.
    pub target_sync: u64,
    pub buffer_capacity: usize,
    /// Environment steps between optimizer steps.
    pub train_every: u64,
    /// Hard cap on rounds per episode.
    pub max_rounds: u64,
    pub seed: u64,
    pub net: NetConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            episodes: 3000,
            batch_size: 64,
            lr: 1e-4,
            gamma: 0.98,
            eps_init: 0.99,
            eps_fin: 0.01,
            eps_decay: 5e-5,
            target_sync: 1000,
            buffer_capacity: 50_000,
            train_every: 1,
            max_rounds: 100_000,
            seed: 0,
            net: NetConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn epsilon(&self, episode: u64) -> f64 {
        (self.eps_init - self.eps_decay * episode as f64).max(self.eps_fin)
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            lr: self.lr,
            ..AdamConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(AgentError::Config(m.to_string()));
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return bad("gamma must lie in (0, 1)");
        }
        if !(0.0 <= self.eps_fin && self.eps_fin <= self.eps_init && self.eps_init <= 1.0) {
            return bad("exploration bounds must satisfy 0 <= eps_fin <= eps_init <= 1");
        }
        if self.eps_decay < 0.0 {
            return bad("eps_decay must be non-negative");
        }
        if self.batch_size == 0 || self.buffer_capacity < self.batch_size {
            return bad("batch size must be positive and fit in the replay buffer");
        }
        if self.target_sync == 0 || self.train_every == 0 || self.max_rounds == 0 {
            return bad("target_sync, train_every and max_rounds must be positive");
        }
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return bad("learning rate must be finite and non-negative");
        }
        self.net.validate()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn epsilon_schedule() {
        let c = TrainConfig::default();
        assert_eq!(c.epsilon(0), 0.99);
        assert!((c.epsilon(19_600) - 0.01).abs() < 1e-12);
        assert_eq!(c.epsilon(1_000_000), 0.01);
        assert!((c.epsilon(1000) - 0.94).abs() < 1e-12);
    }

    #[test]
    fn validation() {
        TrainConfig::default().validate().unwrap();
        let bad = [
            TrainConfig {
                gamma: 1.0,
                ..TrainConfig::default()
            },
            TrainConfig {
                eps_fin: 0.995,
                ..TrainConfig::default()
            },
            TrainConfig {
                buffer_capacity: 10,
                ..TrainConfig::default()
            },
        ];
        for c in bad {
            assert!(c.validate().is_err());
        }
    }
}
