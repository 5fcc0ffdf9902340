//! Receding-horizon ant colony planner.
//!
//! At every decision a fresh colony searches site sequences of length
//! `horizon` starting from the sink's current site. Each sequence is scored
//! by simulating it on a copy of the environment; the first site of the best
//! sequence found is returned.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::env::Env;
use crate::error::{Error, Result};
use crate::Policy;

pub const PHEROMONE_MIN: f64 = 0.01;
pub const PHEROMONE_MAX: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AcoConfig {
    pub ants: usize,
    /// Probability of taking the best-looking move instead of sampling.
    pub exploitation: f64,
    /// Pheromone reinforcement (and evaporation) rate.
    pub reinforcement: f64,
    /// Exponent on the heuristic desirability.
    pub heuristic_weight: f64,
    /// Weight of the inverse average hop count inside the heuristic.
    pub hop_weight: f64,
    pub horizon: usize,
    pub iterations: usize,
}

impl Default for AcoConfig {
    fn default() -> Self {
        Self {
            ants: 10,
            exploitation: 0.95,
            reinforcement: 0.5,
            heuristic_weight: 0.1,
            hop_weight: 10.0,
            horizon: 10,
            iterations: 30,
        }
    }
}

impl AcoConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.exploitation) {
            return Err(Error::Config(
                "ACO exploitation rate must lie in [0, 1]".into(),
            ));
        }
        if !(self.reinforcement > 0.0 && self.reinforcement <= 1.0) {
            return Err(Error::Config(
                "ACO reinforcement rate must lie in (0, 1]".into(),
            ));
        }
        if self.ants == 0 || self.horizon == 0 || self.iterations == 0 {
            return Err(Error::Config(
                "ACO ants, horizon and iterations must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Site-to-site pheromone trails.
#[derive(Debug, Clone, PartialEq)]
pub struct Pheromone {
    n: usize,
    tau: Vec<f64>,
}

impl Pheromone {
    pub fn uniform(n: usize) -> Self {
        Self {
            n,
            tau: vec![1.0; n * n],
        }
    }

    pub fn get(&self, from: usize, to: usize) -> f64 {
        self.tau[from * self.n + to]
    }

    /// Evaporate every trail by `rho`, then deposit `rho * delta` on the
    /// transitions of `path` (which starts at `start`).
    pub fn update(&mut self, start: usize, path: &[usize], rho: f64, delta: f64) {
        for t in &mut self.tau {
            *t *= 1.0 - rho;
        }
        let mut cur = start;
        for &next in path {
            let t = &mut self.tau[cur * self.n + next];
            *t += rho * delta;
            cur = next;
        }
        for t in &mut self.tau {
            *t = t.clamp(PHEROMONE_MIN, PHEROMONE_MAX);
        }
    }
}

#[derive(Debug, Clone)]
pub struct Aco {
    pub config: AcoConfig,
    rng: ChaCha8Rng,
}

impl Aco {
    pub fn new(config: AcoConfig, seed: u64) -> Self {
        Self {
            config,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Heuristic desirability `eta[from][to]` over all sites, for the current
    /// state. Inaccessible targets get zero.
    pub fn heuristic(&self, env: &Env) -> Result<Vec<Vec<f64>>> {
        let inst = env.instance();
        let state = env.state();
        let n = inst.site_count();
        let d_max = inst.energy.d_max;

        let mut hop_term = vec![0.0; n];
        let mut energy_term = vec![0.0; n];
        for j in inst.accessible_sites() {
            let tree = env.routing_tree(j)?;
            let avg_hop =
                tree.hop_count.iter().map(|&h| h as f64).sum::<f64>() / tree.sensor_count() as f64;
            hop_term[j] = self.config.hop_weight / avg_hop;
            let near: Vec<f64> = state
                .sensor_positions
                .iter()
                .zip(&state.residuals)
                .filter(|(p, _)| p.distance(&inst.sites[j]) <= d_max)
                .map(|(_, &u)| u.max(0.0))
                .collect();
            if !near.is_empty() {
                energy_term[j] = near.iter().sum::<f64>() / near.len() as f64;
            }
        }
        let max_energy = energy_term.iter().copied().fold(0.0, f64::max);
        if max_energy > 0.0 {
            for e in &mut energy_term {
                *e /= max_energy;
            }
        }

        let mut eta = vec![vec![0.0; n]; n];
        for (i, row) in eta.iter_mut().enumerate() {
            for j in inst.accessible_sites() {
                let step = inst.sites[i].distance(&inst.sites[j]);
                row[j] = hop_term[j] + energy_term[j] + 1.0 / (1.0 + step / d_max);
            }
        }
        Ok(eta)
    }

    fn choose(
        &mut self,
        cur: usize,
        candidates: &[usize],
        tau: &Pheromone,
        eta: &[Vec<f64>],
    ) -> usize {
        let beta = self.config.heuristic_weight;
        let weights: Vec<f64> = candidates
            .iter()
            .map(|&j| tau.get(cur, j) * eta[cur][j].powf(beta))
            .collect();
        if self.rng.random::<f64>() < self.config.exploitation {
            let mut best = 0;
            for k in 1..weights.len() {
                if weights[k] > weights[best] {
                    best = k;
                }
            }
            return candidates[best];
        }
        let total: f64 = weights.iter().sum();
        let mut r = self.rng.random::<f64>() * total;
        for (k, w) in weights.iter().enumerate() {
            if r < *w {
                return candidates[k];
            }
            r -= w;
        }
        *candidates.last().expect("at least one candidate")
    }

    /// Rounds survived within the sequence, plus the final minimum residual
    /// fraction as a tie-breaker when the whole sequence is survived.
    fn score(env: &Env, sequence: &[usize]) -> Result<f64> {
        let mut sim = env.clone();
        let start = sim.state().round;
        for &a in sequence {
            if sim.step(a)?.done {
                return Ok((sim.state().round - start) as f64);
            }
        }
        let frac = sim.state().min_residual() / sim.instance().energy.e_init;
        Ok((sim.state().round - start) as f64 + frac.clamp(0.0, 1.0))
    }

    pub fn plan(&mut self, env: &Env) -> Result<usize> {
        self.config.validate()?;
        let inst = env.instance().clone();
        let candidates: Vec<usize> = inst.accessible_sites().collect();
        if candidates.len() == 1 {
            return Ok(candidates[0]);
        }
        let eta = self.heuristic(env)?;
        let mut tau = Pheromone::uniform(inst.site_count());
        let start = env.state().sink_site;

        let mut scores: HashMap<Vec<usize>, f64> = HashMap::new();
        let mut best: Option<(Vec<usize>, f64)> = None;
        for _ in 0..self.config.iterations {
            let mut iteration_best: Option<(Vec<usize>, f64)> = None;
            for _ in 0..self.config.ants {
                let mut seq = Vec::with_capacity(self.config.horizon);
                let mut cur = start;
                for _ in 0..self.config.horizon {
                    cur = self.choose(cur, &candidates, &tau, &eta);
                    seq.push(cur);
                }
                let s = match scores.get(&seq) {
                    Some(&s) => s,
                    None => {
                        let s = Self::score(env, &seq)?;
                        scores.insert(seq.clone(), s);
                        s
                    }
                };
                if iteration_best.as_ref().is_none_or(|(_, b)| s > *b) {
                    iteration_best = Some((seq, s));
                }
            }
            let (seq, s) = iteration_best.expect("colony has ants");
            if best.as_ref().is_none_or(|(_, b)| s > *b) {
                best = Some((seq.clone(), s));
            }
            // Deposit is the iteration's best score relative to the best so far.
            let best_score = best.as_ref().map_or(0.0, |(_, b)| *b);
            let delta = if best_score > 0.0 {
                s / best_score
            } else {
                0.0
            };
            tau.update(start, &seq, self.config.reinforcement, delta);
        }
        Ok(best.expect("colony produced a sequence").0[0])
    }
}

impl Policy for Aco {
    fn name(&self) -> &str {
        "aco"
    }

    fn select(&mut self, env: &Env) -> Result<usize> {
        self.plan(env)
    }
}
