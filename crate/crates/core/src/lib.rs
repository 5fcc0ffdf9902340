//! Simulation core for mobile-sink wireless sensor networks.
//!
//! The crate models a flat multi-hop sensor network whose single mobile sink
//! hops between a fixed set of candidate sites once per round. Each round the
//! sensors forward their sensed data along a minimum-cost routing tree toward
//! the sink and pay for it in transmit and receive energy. The network's
//! lifetime is the number of rounds until the first sensor is depleted.
//!
//! Modules:
//! - [`wsn`]: positions, the radio energy model, instances and the
//!   communication graph.
//! - [`routing`]: per-round forwarding tree and per-sensor flows.
//! - [`env`]: map generation, the round-stepping environment, node features.
//! - [`baselines`]: GMRE, ACO, uniform-random and an exhaustive oracle.

pub mod baselines;
pub mod env;
pub mod error;
pub mod routing;
pub mod wsn;

pub use env::{Env, EpisodeTrace, MapSpec, NodeFeatures, SimState, StepOutcome};
pub use error::{Error, Result};
pub use routing::{Parent, RoutingParams, RoutingTree};
pub use wsn::{CommGraph, EnergyParams, NodeKind, Position, WsnInstance};

/// A sink movement policy: given the current environment, choose the next
/// site index.
pub trait Policy {
    fn name(&self) -> &str;

    fn select(&mut self, env: &Env) -> Result<usize>;
}
