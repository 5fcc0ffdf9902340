use std::sync::Arc;
use std::time::Instant;

use hgff_agent::episode_seed;
use hgff_core::{Env, EpisodeTrace, Policy, WsnInstance};

use crate::error::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeResult {
    pub lifetime_rounds: u64,
    /// Total wall-clock time spent inside the policy, ms.
    pub decision_time_ms: f64,
    pub decisions: u64,
    pub trace: EpisodeTrace,
}

impl EpisodeResult {
    pub fn mean_decision_ms(&self) -> f64 {
        if self.decisions == 0 {
            0.0
        } else {
            self.decision_time_ms / self.decisions as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub episodes: Vec<EpisodeResult>,
    /// Round length, s.
    pub delta_t: f64,
}

impl Evaluation {
    /// Mean lifetime over episodes, rounds.
    pub fn mean_lifetime(&self) -> f64 {
        let n = self.episodes.len().max(1) as f64;
        self.episodes
            .iter()
            .map(|e| e.lifetime_rounds as f64)
            .sum::<f64>()
            / n
    }

    /// Mean lifetime in seconds (rounds × round length).
    pub fn mean_lifetime_seconds(&self) -> f64 {
        self.mean_lifetime() * self.delta_t
    }

    /// Mean time per decision over all decisions of all episodes, ms.
    pub fn mean_decision_ms(&self) -> f64 {
        let total: f64 = self.episodes.iter().map(|e| e.decision_time_ms).sum();
        let n: u64 = self.episodes.iter().map(|e| e.decisions).sum();
        if n == 0 {
            0.0
        } else {
            total / n as f64
        }
    }
}

/// Play one episode, timing only the policy's decisions.
pub fn run_episode<P: Policy + ?Sized>(
    policy: &mut P,
    instance: Arc<WsnInstance>,
    env_seed: u64,
    max_rounds: u64,
) -> Result<EpisodeResult> {
    let mut env = Env::reset(instance, env_seed);
    let mut spent = 0.0;
    let mut decisions = 0;
    while !env.is_done() && env.state().round < max_rounds {
        let t0 = Instant::now();
        let a = policy.select(&env)?;
        spent += t0.elapsed().as_secs_f64() * 1e3;
        decisions += 1;
        env.step(a)?;
    }
    Ok(EpisodeResult {
        lifetime_rounds: env.state().round,
        decision_time_ms: spent,
        decisions,
        trace: env.trace().clone(),
    })
}

/// Run `episodes` episodes; `make_policy(k)` builds the policy for episode
/// `k`, whose environment is seeded from `(seed, k)`.
pub fn evaluate<F>(
    mut make_policy: F,
    instance: Arc<WsnInstance>,
    episodes: usize,
    seed: u64,
    max_rounds: u64,
) -> Result<Evaluation>
where
    F: FnMut(u64) -> Result<Box<dyn Policy>>,
{
    let delta_t = instance.energy.delta_t;
    let mut out = Vec::with_capacity(episodes);
    for k in 0..episodes as u64 {
        let mut policy = make_policy(k)?;
        out.push(run_episode(
            policy.as_mut(),
            instance.clone(),
            episode_seed(seed, k),
            max_rounds,
        )?);
    }
    Ok(Evaluation {
        episodes: out,
        delta_t,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use hgff_core::baselines::{Gmre, SequencePolicy};
    use hgff_core::env::generate_map;

    fn ep(lifetime: u64) -> EpisodeResult {
        EpisodeResult {
            lifetime_rounds: lifetime,
            decision_time_ms: 0.0,
            decisions: lifetime,
            trace: EpisodeTrace::default(),
        }
    }

    #[test]
    fn mean_and_seconds() {
        let e = Evaluation {
            episodes: vec![ep(10), ep(20)],
            delta_t: 3600.0,
        };
        assert_eq!(e.mean_lifetime(), 15.0);
        assert_eq!(e.mean_lifetime_seconds(), 15.0 * 3600.0);
    }

    #[test]
    fn deterministic_policy_on_static_map_repeats() {
        let inst = Arc::new(generate_map(1, 3).unwrap());
        let e = evaluate(|_| Ok(Box::new(Gmre::default())), inst, 20, 0, 100_000).unwrap();
        let first = e.episodes[0].lifetime_rounds;
        assert!(first >= 1);
        assert!(e.episodes.iter().all(|r| r.lifetime_rounds == first));
    }

    #[test]
    fn round_cap_is_respected() {
        let inst = Arc::new(generate_map(1, 0).unwrap());
        let r = run_episode(&mut SequencePolicy::new(vec![12]), inst, 0, 5).unwrap();
        assert_eq!(r.lifetime_rounds, 5);
        assert_eq!(r.decisions, 5);
    }
}
