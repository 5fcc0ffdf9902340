use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use hgff_agent::{episode_seed, HgffPolicy};
use hgff_core::baselines::{AcoConfig, Gmre, RandomPolicy};
use hgff_core::env::{generate, generate_map, MapSpec};
use hgff_core::{EnergyParams, Policy, WsnInstance};
use hgff_nn::Checkpoint;

use crate::config::BenchConfig;
use crate::error::{BenchError, Result};
use crate::eval::evaluate;
use crate::results::ResultRow;

/// A policy the suite can evaluate.
#[derive(Debug, Clone, PartialEq)]
pub enum Method {
    Gmre,
    Random,
    Aco,
    /// Greedy learned policy; the checkpoint falls back to the configured
    /// one when no path is given.
    Hgff(Option<PathBuf>),
}

impl FromStr for Method {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gmre" => Ok(Method::Gmre),
            "random" => Ok(Method::Random),
            "aco" => Ok(Method::Aco),
            "hgff" => Ok(Method::Hgff(None)),
            _ => match s.strip_prefix("hgff@") {
                Some(p) if !p.is_empty() => Ok(Method::Hgff(Some(PathBuf::from(p)))),
                _ => Err(BenchError::Config(format!("unknown method {s:?}"))),
            },
        }
    }
}

impl Method {
    /// Name written to the results file.
    pub fn label(&self) -> &'static str {
        match self {
            Method::Gmre => "gmre",
            Method::Random => "random",
            Method::Aco => "aco",
            Method::Hgff(_) => "hgff",
        }
    }
}

/// Builds fresh policies for each evaluation episode.
pub enum PolicyFactory {
    Gmre,
    Random,
    Aco(AcoConfig),
    Hgff(Box<HgffPolicy>),
}

impl PolicyFactory {
    pub fn new(method: &Method, config: &BenchConfig) -> Result<Self> {
        Ok(match method {
            Method::Gmre => PolicyFactory::Gmre,
            Method::Random => PolicyFactory::Random,
            Method::Aco => PolicyFactory::Aco(config.aco),
            Method::Hgff(path) => {
                let path = path
                    .as_ref()
                    .or(config.checkpoint.as_ref())
                    .ok_or_else(|| {
                        BenchError::Config(
                            "hgff needs a checkpoint (hgff@<path> or checkpoint = ...)".into(),
                        )
                    })?;
                PolicyFactory::Hgff(Box::new(load_policy(path)?))
            }
        })
    }

    /// Policy for one episode; stochastic policies are seeded from `seed`.
    pub fn make(&self, seed: u64) -> Box<dyn Policy> {
        match self {
            PolicyFactory::Gmre => Box::new(Gmre::default()),
            PolicyFactory::Random => Box::new(RandomPolicy::new(seed)),
            PolicyFactory::Aco(c) => Box::new(hgff_core::baselines::Aco::new(*c, seed)),
            PolicyFactory::Hgff(p) => Box::new((**p).clone()),
        }
    }
}

pub fn load_policy(path: &Path) -> Result<HgffPolicy> {
    if !path.exists() {
        return Err(BenchError::Config(format!(
            "checkpoint {} not found",
            path.display()
        )));
    }
    Ok(HgffPolicy::from_checkpoint(&Checkpoint::load(path)?)?)
}

/// Generated instance with the configured energy and dynamics overrides.
pub fn build_instance(map_type: u8, seed: u64, config: &BenchConfig) -> Result<WsnInstance> {
    let mut inst = generate_map(map_type, seed)?;
    if let Some(e) = config.e_init {
        inst.energy.e_init = e;
    }
    if config.dynamic {
        inst.dynamic = true;
    }
    inst.validate()?;
    Ok(inst)
}

/// A 5-sensor, 2×2-site instance on a 40 m square, small enough for the
/// exhaustive oracle.
pub fn tiny_instance(seed: u64, e_init: f64) -> Result<WsnInstance> {
    let energy = EnergyParams {
        e_init,
        ..EnergyParams::default()
    };
    Ok(generate(
        &MapSpec::custom(5, 2, 2, 40.0, 40.0),
        seed,
        energy,
    )?)
}

/// Evaluate one method on one instance and return its result rows.
pub fn evaluate_cell(
    factory: &PolicyFactory,
    label: &str,
    instance: Arc<WsnInstance>,
    config: &BenchConfig,
    seed: u64,
) -> Result<Vec<ResultRow>> {
    let (map_type, instance_seed) = (instance.map_type, instance.seed);
    let cell_seed = episode_seed(seed ^ instance_seed.rotate_left(17), map_type as u64);
    let eval = evaluate(
        |k| Ok(factory.make(episode_seed(cell_seed, k))),
        instance,
        config.eval_episodes,
        cell_seed,
        config.train.max_rounds,
    )?;
    Ok(eval
        .episodes
        .iter()
        .enumerate()
        .map(|(k, e)| ResultRow {
            method: label.to_string(),
            map_type,
            instance_seed,
            episode: k as u64,
            lifetime_rounds: e.lifetime_rounds,
            decision_time_ms: e.mean_decision_ms(),
        })
        .collect())
}

/// Every (map type, instance seed, method) cell, in that nesting order.
/// `on_cell` sees each cell's rows as soon as they are ready.
pub fn run_suite<F: FnMut(&[ResultRow])>(
    config: &BenchConfig,
    seed: u64,
    mut on_cell: F,
) -> Result<Vec<ResultRow>> {
    let methods = config
        .methods
        .iter()
        .map(|m| m.parse::<Method>())
        .collect::<Result<Vec<_>>>()?;
    let factories = methods
        .iter()
        .map(|m| PolicyFactory::new(m, config))
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    for &map_type in &config.map_types {
        for instance_seed in 0..config.seeds_per_type {
            let inst = Arc::new(build_instance(map_type, instance_seed, config)?);
            for (m, f) in methods.iter().zip(&factories) {
                let cell = evaluate_cell(f, m.label(), inst.clone(), config, seed)?;
                on_cell(&cell);
                rows.extend(cell);
            }
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_parsing() {
        assert_eq!("gmre".parse::<Method>().unwrap(), Method::Gmre);
        assert_eq!("hgff".parse::<Method>().unwrap(), Method::Hgff(None));
        assert_eq!(
            "hgff@runs/a.ckpt".parse::<Method>().unwrap(),
            Method::Hgff(Some("runs/a.ckpt".into()))
        );
        assert!("hgff@".parse::<Method>().is_err());
        assert!("dqn".parse::<Method>().is_err());
    }

    #[test]
    fn learned_method_without_checkpoint_is_a_config_error() {
        let c = BenchConfig::default();
        assert!(matches!(
            PolicyFactory::new(&Method::Hgff(None), &c),
            Err(BenchError::Config(_))
        ));
        let missing = Method::Hgff(Some("/nonexistent/x.ckpt".into()));
        assert!(matches!(
            PolicyFactory::new(&missing, &c),
            Err(BenchError::Config(_))
        ));
    }

    #[test]
    fn overrides_reach_the_instance() {
        let c = BenchConfig {
            e_init: Some(0.08),
            dynamic: true,
            ..BenchConfig::default()
        };
        let inst = build_instance(1, 2, &c).unwrap();
        assert_eq!(inst.energy.e_init, 0.08);
        assert!(inst.dynamic);
    }

    #[test]
    fn suite_rows_cover_every_cell() {
        let c = BenchConfig {
            e_init: Some(0.02),
            eval_episodes: 2,
            seeds_per_type: 2,
            map_types: vec![1],
            methods: vec!["gmre".into(), "random".into()],
            ..BenchConfig::default()
        };
        let mut cells = 0;
        let rows = run_suite(&c, 0, |_| cells += 1).unwrap();
        assert_eq!(cells, 4);
        assert_eq!(rows.len(), 8);
        assert!(rows
            .iter()
            .all(|r| r.lifetime_rounds >= 1 && r.decision_time_ms >= 0.0));
    }
}
