//! Experiment runner for mobile-sink policies: instance suites, lifetime and
//! decision-time metrics, CSV export and SVG route drawings.
//!
//! Decision time covers only the policy's `select` call, for learned and
//! heuristic methods alike; environment stepping is never timed.

pub mod config;
pub mod error;
pub mod eval;
pub mod render;
pub mod results;
pub mod suite;

pub use config::BenchConfig;
pub use error::{BenchError, Result};
pub use eval::{evaluate, run_episode, EpisodeResult, Evaluation};
pub use render::{render_route, route_stays};
pub use results::{
    read_results, summarize, write_results, write_summary, ResultRow, SummaryRow, RESULTS_HEADER,
};
pub use suite::{
    build_instance, evaluate_cell, load_policy, run_suite, tiny_instance, Method, PolicyFactory,
};
