use serde::{Deserialize, Serialize};

use crate::error::{NnError, Result};

/// Architecture switches and sizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetConfig {
    pub use_type_embedding: bool,
    pub use_feature_fusion: bool,
    /// Width of the learned state part of each node embedding.
    pub d_mu: usize,
    /// Width of the node-type embedding; zero when type embeddings are off.
    pub d_t: usize,
    /// Message passing rounds.
    pub layers: usize,
    pub heads: usize,
    /// Hidden width of the Q-head MLP.
    pub hidden: usize,
    pub input_dim: usize,
}

impl Default for NetConfig {
    fn default() -> Self {
        Self::variant(true, true)
    }
}

impl NetConfig {
    /// The standard 64-wide network with the given ablation switches.
    pub fn variant(use_type_embedding: bool, use_feature_fusion: bool) -> Self {
        let (d_mu, d_t) = if use_type_embedding {
            (48, 16)
        } else {
            (64, 0)
        };
        Self {
            use_type_embedding,
            use_feature_fusion,
            d_mu,
            d_t,
            layers: 3,
            heads: 8,
            hidden: 128,
            input_dim: hgff_core::env::FEATURE_DIM,
        }
    }

    /// Full node embedding width.
    pub fn d_h(&self) -> usize {
        self.d_mu + self.d_t
    }

    pub fn head_dim(&self) -> usize {
        self.d_h() / self.heads
    }

    pub fn validate(&self) -> Result<()> {
        if self.use_type_embedding != (self.d_t > 0) {
            return Err(NnError::Config(
                "type embedding width must be positive exactly when type embeddings are enabled"
                    .into(),
            ));
        }
        if self.d_mu == 0 || self.layers == 0 || self.hidden == 0 || self.input_dim == 0 {
            return Err(NnError::Config("network sizes must be positive".into()));
        }
        if self.heads == 0 || !self.d_h().is_multiple_of(self.heads) {
            return Err(NnError::Config(format!(
                "embedding width {} is not divisible by {} heads",
                self.d_h(),
                self.heads
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_widths() {
        let full = NetConfig::default();
        assert_eq!((full.d_mu, full.d_t, full.d_h()), (48, 16, 64));
        assert_eq!(full.head_dim(), 8);
        let plain = NetConfig::variant(false, false);
        assert_eq!((plain.d_mu, plain.d_t), (64, 0));
        full.validate().unwrap();
        plain.validate().unwrap();
    }

    #[test]
    fn inconsistent_widths_rejected() {
        let no_types = NetConfig {
            d_t: 0,
            ..NetConfig::default()
        };
        assert!(no_types.validate().is_err());
        let odd_heads = NetConfig {
            heads: 5,
            ..NetConfig::default()
        };
        assert!(odd_heads.validate().is_err());
    }
}
