//! Double DQN training of the HGFF Q-network and the greedy policy it
//! yields.
//!
//! Transitions keep raw simulator states; graphs and features are rebuilt
//! when a batch is replayed. Targets follow Double DQN with no bootstrap on
//! terminal transitions, and the target network is refreshed from the online
//! one every `target_sync` environment steps.

mod config;
mod dqn;
mod error;
mod policy;
mod replay;
mod trainer;

pub use config::TrainConfig;
pub use dqn::{compute_targets, double_dqn_target, train_step};
pub use error::{AgentError, Result};
pub use policy::{select_action, HgffPolicy};
pub use replay::{ReplayBuffer, Transition};
pub use trainer::{
    discounted_return, episode_seed, train_loop, unit_reward_return, write_log_csv, EpisodeRecord,
    TrainOutcome, Trainer,
};
