use std::io::Write;
use std::sync::Arc;

use hgff_core::{Env, WsnInstance};
use hgff_nn::{Adam, Checkpoint, GraphInput, QNetwork, RngState};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::TrainConfig;
use crate::dqn::train_step;
use crate::error::{AgentError, Result};
use crate::policy::select_action;
use crate::replay::{ReplayBuffer, Transition};

/// One row of the training log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub episode: u64,
    pub lifetime_rounds: u64,
    pub epsilon: f64,
    /// Mean loss of the optimizer steps taken during the episode; empty when
    /// none were taken.
    pub mean_loss: Option<f64>,
}

/// `Σ_t γ^t r_t`.
pub fn discounted_return(rewards: &[f64], gamma: f64) -> f64 {
    rewards.iter().rev().fold(0.0, |acc, r| r + gamma * acc)
}

/// Return of an episode of `t` unit rewards, `(1 - γ^t) / (1 - γ)`.
pub fn unit_reward_return(t: u64, gamma: f64) -> f64 {
    (1.0 - gamma.powf(t as f64)) / (1.0 - gamma)
}

pub fn write_log_csv<W: Write>(w: W, records: &[EpisodeRecord]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["episode", "lifetime_rounds", "epsilon", "mean_loss"])?;
    for r in records {
        out.write_record([
            r.episode.to_string(),
            r.lifetime_rounds.to_string(),
            r.epsilon.to_string(),
            r.mean_loss.map(|l| l.to_string()).unwrap_or_default(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Seed of the environment used in a given episode.
pub fn episode_seed(seed: u64, episode: u64) -> u64 {
    let mut z = seed ^ episode.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Double DQN learner. Episodes cycle through the training instances in
/// order.
pub struct Trainer {
    pub config: TrainConfig,
    instances: Vec<Arc<WsnInstance>>,
    online: QNetwork,
    target: QNetwork,
    adam: Adam,
    buffer: ReplayBuffer,
    rng: ChaCha8Rng,
    env_steps: u64,
    train_steps: u64,
    episode: u64,
    log: Vec<EpisodeRecord>,
}

impl Trainer {
    pub fn new(config: TrainConfig, instances: Vec<Arc<WsnInstance>>) -> Result<Self> {
        config.validate()?;
        if instances.is_empty() {
            return Err(AgentError::Config("no training instances".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let online = QNetwork::new(config.net, &mut rng)?;
        Ok(Self {
            target: online.clone(),
            adam: Adam::new(config.adam(), &online.params),
            online,
            buffer: ReplayBuffer::new(config.buffer_capacity),
            instances,
            rng,
            env_steps: 0,
            train_steps: 0,
            episode: 0,
            log: Vec::new(),
            config,
        })
    }

    pub fn online(&self) -> &QNetwork {
        &self.online
    }

    pub fn target(&self) -> &QNetwork {
        &self.target
    }

    pub fn buffer(&self) -> &ReplayBuffer {
        &self.buffer
    }

    pub fn env_steps(&self) -> u64 {
        self.env_steps
    }

    pub fn train_steps(&self) -> u64 {
        self.train_steps
    }

    pub fn log(&self) -> &[EpisodeRecord] {
        &self.log
    }

    /// One optimizer step on a uniform batch; `None` while the buffer holds
    /// fewer than a batch.
    pub fn train_once(&mut self) -> Result<Option<f64>> {
        let Some(batch) = self.buffer.sample(self.config.batch_size, &mut self.rng) else {
            return Ok(None);
        };
        let loss = train_step(
            &batch,
            &self.instances,
            &mut self.online,
            &self.target,
            &mut self.adam,
            self.config.gamma,
        )?;
        self.train_steps += 1;
        Ok(Some(loss))
    }

    pub fn sync_target(&mut self) {
        self.target = self.online.clone();
    }

    /// Play and learn from one episode.
    pub fn run_episode(&mut self) -> Result<EpisodeRecord> {
        let episode = self.episode;
        let idx = (episode % self.instances.len() as u64) as usize;
        let inst = self.instances[idx].clone();
        let epsilon = self.config.epsilon(episode);
        let mut env = Env::reset(inst.clone(), episode_seed(self.config.seed, episode));
        let mut state = Arc::new(env.state().clone());
        let mut rewards = Vec::new();
        let (mut loss_sum, mut loss_n) = (0.0, 0u64);

        while !env.is_done() && env.state().round < self.config.max_rounds {
            let graph = GraphInput::from_state(&state, &inst)?;
            let action = select_action(
                &self.online,
                &graph,
                inst.action_mask(),
                epsilon,
                &mut self.rng,
            )?;
            let outcome = env.step(action)?;
            let next = Arc::new(env.state().clone());
            rewards.push(outcome.reward);
            self.buffer.push(Transition {
                instance: idx,
                state,
                action,
                reward: outcome.reward,
                next: next.clone(),
                done: outcome.done,
            });
            state = next;
            self.env_steps += 1;

            if self.env_steps.is_multiple_of(self.config.train_every) {
                if let Some(l) = self.train_once()? {
                    loss_sum += l;
                    loss_n += 1;
                }
            }
            if self.env_steps.is_multiple_of(self.config.target_sync) {
                self.sync_target();
            }
        }

        let lifetime = env.state().round;
        let ret = discounted_return(&rewards, self.config.gamma);
        let expect = unit_reward_return(lifetime, self.config.gamma);
        if (ret - expect).abs() > 1e-9 * expect.max(1.0) {
            return Err(AgentError::Numeric(format!(
                "episode return {ret} differs from the unit-reward value {expect}"
            )));
        }
        let record = EpisodeRecord {
            episode,
            lifetime_rounds: lifetime,
            epsilon,
            mean_loss: (loss_n > 0).then(|| loss_sum / loss_n as f64),
        };
        self.log.push(record.clone());
        self.episode += 1;
        Ok(record)
    }

    /// Run the remaining configured episodes, reporting each one.
    pub fn train<F: FnMut(&EpisodeRecord)>(&mut self, mut on_episode: F) -> Result<()> {
        while self.episode < self.config.episodes {
            let r = self.run_episode()?;
            on_episode(&r);
        }
        Ok(())
    }

    pub fn checkpoint(&self) -> Result<Checkpoint> {
        let mut ck = Checkpoint::new(self.config.net, self.online.params.clone());
        ck.step = self.train_steps;
        ck.rng = Some(RngState::capture(&self.rng));
        ck.adam = Some(self.adam.clone());
        ck.meta = serde_json::json!({
            "train": serde_json::to_value(self.config)?,
            "episodes_done": self.episode,
            "env_steps": self.env_steps,
        });
        Ok(ck)
    }
}

pub struct TrainOutcome {
    pub checkpoint: Checkpoint,
    pub log: Vec<EpisodeRecord>,
}

/// Train from scratch for `config.episodes` episodes.
pub fn train_loop(instances: Vec<Arc<WsnInstance>>, config: TrainConfig) -> Result<TrainOutcome> {
    let mut trainer = Trainer::new(config, instances)?;
    trainer.train(|_| {})?;
    Ok(TrainOutcome {
        checkpoint: trainer.checkpoint()?,
        log: trainer.log,
    })
}
