//! The HGFF Q-network.
//!
//! A message passing encoder over the heterogeneous sensor/site graph, where
//! every node embedding is the concatenation of a learned state vector and a
//! learned per-layer node-type embedding. Site embeddings then attend over all
//! sensor embeddings (multi-head scaled dot-product attention), and an MLP
//! scores each site from its fused embedding concatenated with the mean of all
//! site embeddings.
//!
//! Gradients are computed by a hand-written reverse pass specific to this
//! architecture; [`gradcheck`] verifies it against central differences.

mod adam;
mod checkpoint;
mod config;
mod error;
pub mod gradcheck;
mod graph;
mod network;
mod params;

pub use adam::{Adam, AdamConfig};
pub use checkpoint::{Checkpoint, RngState};
pub use config::NetConfig;
pub use error::{NnError, Result};
pub use graph::GraphInput;
pub use network::{attention_fuse, Attention, ForwardCache, QNetwork};
pub use params::{AttentionParams, LayerParams, Params};
