//! Comparison policies for the learned agent.

mod aco;
mod gmre;
mod oracle;

pub use aco::{Aco, AcoConfig};
pub use gmre::{gmre_select, Gmre};
pub use oracle::{oracle_search, OracleResult, ORACLE_BUDGET};

use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::env::Env;
use crate::error::{Error, Result};
use crate::Policy;

/// Uniformly random accessible site.
#[derive(Debug, Clone)]
pub struct RandomPolicy {
    rng: ChaCha8Rng,
}

impl RandomPolicy {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl Policy for RandomPolicy {
    fn name(&self) -> &str {
        "random"
    }

    fn select(&mut self, env: &Env) -> Result<usize> {
        let sites: Vec<usize> = env.instance().accessible_sites().collect();
        sites
            .choose(&mut self.rng)
            .copied()
            .ok_or_else(|| Error::Config("no accessible site".into()))
    }
}

/// Replays a fixed site sequence, then repeats its last entry.
#[derive(Debug, Clone)]
pub struct SequencePolicy {
    sequence: Vec<usize>,
}

impl SequencePolicy {
    pub fn new(sequence: Vec<usize>) -> Self {
        assert!(!sequence.is_empty(), "sequence must not be empty");
        Self { sequence }
    }
}

impl Policy for SequencePolicy {
    fn name(&self) -> &str {
        "sequence"
    }

    fn select(&mut self, env: &Env) -> Result<usize> {
        let k = env.state().round as usize;
        Ok(self.sequence[k.min(self.sequence.len() - 1)])
    }
}
