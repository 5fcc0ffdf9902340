//! Exhaustive search over every site sequence up to a horizon. Only usable on
//! tiny instances; it is the ground truth the other policies are checked
//! against.

use std::sync::Arc;

use crate::env::Env;
use crate::error::{Error, Result};
use crate::wsn::WsnInstance;

/// Upper bound on the number of sequences the oracle will enumerate.
pub const ORACLE_BUDGET: f64 = 1e6;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    /// Rounds survived, capped at the horizon.
    pub lifetime: u64,
    pub sequence: Vec<usize>,
}

/// Best lifetime over all sequences of length `horizon`; a sequence whose
/// episode ends early counts the rounds it lasted. Among equal lifetimes the
/// lexicographically smallest sequence is returned.
pub fn oracle_search(
    instance: Arc<WsnInstance>,
    horizon: usize,
    seed: u64,
) -> Result<OracleResult> {
    let sites: Vec<usize> = instance.accessible_sites().collect();
    let sequences = (sites.len() as f64).powi(horizon as i32);
    if sequences > ORACLE_BUDGET {
        return Err(Error::SearchBudget {
            sequences,
            budget: ORACLE_BUDGET,
        });
    }
    let env = Env::reset(instance, seed);
    let mut best = OracleResult {
        lifetime: 0,
        sequence: Vec::new(),
    };
    let mut prefix = Vec::with_capacity(horizon);
    search(&env, &sites, horizon as u64, &mut prefix, &mut best)?;
    Ok(best)
}

fn search(
    env: &Env,
    sites: &[usize],
    horizon: u64,
    prefix: &mut Vec<usize>,
    best: &mut OracleResult,
) -> Result<()> {
    let round = env.state().round;
    if env.is_done() || round == horizon {
        if round > best.lifetime {
            best.lifetime = round;
            best.sequence = prefix.clone();
        }
        return Ok(());
    }
    for &a in sites {
        if best.lifetime == horizon {
            break;
        }
        let mut next = env.clone();
        next.step(a)?;
        prefix.push(a);
        search(&next, sites, horizon, prefix, best)?;
        prefix.pop();
    }
    Ok(())
}
