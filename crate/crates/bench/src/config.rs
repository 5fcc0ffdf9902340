//! Flat `key = value` configuration file (TOML syntax, no tables). Every key
//! is optional and overrides a default; unknown keys are rejected.

use std::path::{Path, PathBuf};

use hgff_agent::TrainConfig;
use hgff_core::baselines::AcoConfig;
use hgff_nn::NetConfig;
use serde::Deserialize;

use crate::error::{BenchError, Result};

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    // training
    episodes: Option<u64>,
    batch_size: Option<usize>,
    lr: Option<f64>,
    gamma: Option<f64>,
    eps_init: Option<f64>,
    eps_fin: Option<f64>,
    eps_decay: Option<f64>,
    target_sync: Option<u64>,
    buffer_capacity: Option<usize>,
    train_every: Option<u64>,
    max_rounds: Option<u64>,
    train_instances: Option<u64>,
    // network
    use_type_embedding: Option<bool>,
    use_feature_fusion: Option<bool>,
    // ant colony
    ants: Option<usize>,
    exploitation: Option<f64>,
    reinforcement: Option<f64>,
    heuristic_weight: Option<f64>,
    hop_weight: Option<f64>,
    horizon: Option<usize>,
    iterations: Option<usize>,
    // instances and evaluation
    e_init: Option<f64>,
    dynamic: Option<bool>,
    eval_episodes: Option<usize>,
    seeds_per_type: Option<u64>,
    map_types: Option<Vec<u8>>,
    methods: Option<Vec<String>>,
    checkpoint: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub train: TrainConfig,
    /// Number of map instances (seeds 0..n) training cycles through.
    pub train_instances: u64,
    pub aco: AcoConfig,
    /// Initial sensor energy override, J.
    pub e_init: Option<f64>,
    pub dynamic: bool,
    pub eval_episodes: usize,
    pub seeds_per_type: u64,
    pub map_types: Vec<u8>,
    pub methods: Vec<String>,
    pub checkpoint: Option<PathBuf>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            train: TrainConfig::default(),
            train_instances: 5,
            aco: AcoConfig::default(),
            e_init: None,
            dynamic: false,
            eval_episodes: 20,
            seeds_per_type: 10,
            map_types: vec![1],
            methods: vec!["gmre".into(), "random".into()],
            checkpoint: None,
        }
    }
}

impl BenchConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let f: FileConfig = toml::from_str(text)?;
        let mut c = Self::default();
        let t = &mut c.train;
        macro_rules! set {
            ($($src:ident => $dst:expr),* $(,)?) => {
                $(if let Some(v) = f.$src { $dst = v; })*
            };
        }
        set! {
            episodes => t.episodes,
            batch_size => t.batch_size,
            lr => t.lr,
            gamma => t.gamma,
            eps_init => t.eps_init,
            eps_fin => t.eps_fin,
            eps_decay => t.eps_decay,
            target_sync => t.target_sync,
            buffer_capacity => t.buffer_capacity,
            train_every => t.train_every,
            max_rounds => t.max_rounds,
        }
        let te = f.use_type_embedding.unwrap_or(t.net.use_type_embedding);
        let ff = f.use_feature_fusion.unwrap_or(t.net.use_feature_fusion);
        t.net = NetConfig::variant(te, ff);
        let a = &mut c.aco;
        set! {
            ants => a.ants,
            exploitation => a.exploitation,
            reinforcement => a.reinforcement,
            heuristic_weight => a.heuristic_weight,
            hop_weight => a.hop_weight,
            horizon => a.horizon,
            iterations => a.iterations,
        }
        set! {
            train_instances => c.train_instances,
            dynamic => c.dynamic,
            eval_episodes => c.eval_episodes,
            seeds_per_type => c.seeds_per_type,
            map_types => c.map_types,
            methods => c.methods,
        }
        c.e_init = f.e_init.or(c.e_init);
        c.checkpoint = f.checkpoint.or(c.checkpoint);
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        self.aco.validate()?;
        if let Some(e) = self.e_init {
            if !(e > 0.0 && e.is_finite()) {
                return Err(BenchError::Config("e_init must be positive".into()));
            }
        }
        if self.eval_episodes == 0 || self.train_instances == 0 {
            return Err(BenchError::Config(
                "eval_episodes and train_instances must be positive".into(),
            ));
        }
        if let Some(t) = self.map_types.iter().find(|t| !(1..=10).contains(*t)) {
            return Err(BenchError::Config(format!("unknown map type {t}")));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_and_defaults() {
        let c = BenchConfig::parse(
            "# desk run\nepisodes = 500\nlr = 1e-3\nuse_feature_fusion = false\nants = 4\ne_init = 0.08\nmap_types = [1, 4]\n",
        )
        .unwrap();
        assert_eq!(c.train.episodes, 500);
        assert_eq!(c.train.lr, 1e-3);
        assert!(!c.train.net.use_feature_fusion);
        assert!(c.train.net.use_type_embedding);
        assert_eq!(c.aco.ants, 4);
        assert_eq!(c.aco.iterations, 30);
        assert_eq!(c.e_init, Some(0.08));
        assert_eq!(c.map_types, vec![1, 4]);
        assert_eq!(c.train.batch_size, 64);
    }

    #[test]
    fn unknown_key_is_an_error() {
        let err = BenchConfig::parse("episodse = 10\n").unwrap_err();
        assert!(err.to_string().contains("episodse"), "{err}");
    }

    #[test]
    fn invalid_values_are_rejected() {
        assert!(BenchConfig::parse("gamma = 1.5\n").is_err());
        assert!(BenchConfig::parse("map_types = [11]\n").is_err());
        assert!(BenchConfig::parse("exploitation = 2.0\n").is_err());
    }
}
