//! Finite-difference verification of the reverse pass.

use rand::Rng;

use crate::config::NetConfig;
use crate::error::Result;
use crate::graph::GraphInput;
use crate::network::QNetwork;

/// Central difference step.
pub const FD_STEP: f64 = 1e-4;

/// Denominator floor of the relative error, so entries whose true gradient
/// is essentially zero are judged on absolute error.
pub const REL_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct TensorCheck {
    pub name: String,
    pub max_rel_err: f64,
    pub entries: usize,
    /// Entries whose perturbation moved some ReLU across its kink; the
    /// central difference is meaningless there, so they are not scored.
    pub skipped: usize,
}

/// `0.5 * Σ (q_i - y_i)^2` over all sites.
pub fn squared_loss(net: &QNetwork, g: &GraphInput, targets: &[f64]) -> Result<f64> {
    let q = net.q_values(g)?;
    Ok(q.iter()
        .zip(targets)
        .map(|(a, b)| 0.5 * (a - b).powi(2))
        .sum())
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_FLOOR)
}

fn probe_loss(net: &QNetwork, g: &GraphInput, targets: &[f64]) -> Result<(f64, Vec<bool>)> {
    let (q, cache) = net.forward(g)?;
    let loss = q
        .iter()
        .zip(targets)
        .map(|(a, b)| 0.5 * (a - b).powi(2))
        .sum();
    Ok((loss, cache.relu_pattern(g)))
}

/// Compare every parameter entry's analytic gradient of [`squared_loss`]
/// with a central difference. Returns one summary per tensor.
pub fn check_gradients(
    net: &QNetwork,
    g: &GraphInput,
    targets: &[f64],
) -> Result<Vec<TensorCheck>> {
    let (q, cache) = net.forward(g)?;
    let pattern = cache.relu_pattern(g);
    let dq: Vec<f64> = q.iter().zip(targets).map(|(a, b)| a - b).collect();
    let mut grads = net.params.zeros_like();
    net.backward(g, &cache, &dq, &mut grads)?;

    let names = net.params.names();
    let mut probe = net.clone();
    let mut out = Vec::with_capacity(names.len());
    for (k, name) in names.into_iter().enumerate() {
        let analytic = grads.tensors()[k].clone();
        let mut worst: f64 = 0.0;
        let mut skipped = 0;
        for (idx, &a) in analytic.indexed_iter() {
            let orig = probe.params.tensors()[k][idx];
            probe.params.tensors_mut()[k][idx] = orig + FD_STEP;
            let (up, up_pattern) = probe_loss(&probe, g, targets)?;
            probe.params.tensors_mut()[k][idx] = orig - FD_STEP;
            let (down, down_pattern) = probe_loss(&probe, g, targets)?;
            probe.params.tensors_mut()[k][idx] = orig;
            if up_pattern != pattern || down_pattern != pattern {
                skipped += 1;
                continue;
            }
            let numeric = (up - down) / (2.0 * FD_STEP);
            worst = worst.max(relative_error(a, numeric));
        }
        out.push(TensorCheck {
            name,
            max_rel_err: worst,
            entries: analytic.len(),
            skipped,
        });
    }
    Ok(out)
}

/// A reduced-width configuration that still exercises every parameter group.
pub fn small_config(use_type_embedding: bool, use_feature_fusion: bool) -> NetConfig {
    let (d_mu, d_t) = if use_type_embedding { (6, 2) } else { (8, 0) };
    NetConfig {
        use_type_embedding,
        use_feature_fusion,
        d_mu,
        d_t,
        layers: 3,
        heads: 2,
        hidden: 6,
        input_dim: hgff_core::env::FEATURE_DIM,
    }
}

/// Random 3-sensor/2-site graph: a sensor path with each site attached to
/// one or two sensors, random features and edge weights in `(0, 1]`.
pub fn random_small_graph<R: Rng + ?Sized>(rng: &mut R) -> Result<GraphInput> {
    use hgff_core::NodeKind::{Sensor, Site};
    let kinds = vec![Sensor, Sensor, Sensor, Site, Site];
    let mut adj = vec![Vec::new(); 5];
    let mut link = |a: usize, b: usize, rng: &mut R| {
        let w = rng.random_range(0.05..=1.0);
        adj[a].push((b, w));
        adj[b].push((a, w));
    };
    link(0, 1, rng);
    link(1, 2, rng);
    link(3, 0, rng);
    link(4, 2, rng);
    if rng.random_bool(0.5) {
        link(3, 1, rng);
    }
    let mut x = ndarray::Array2::from_shape_simple_fn((5, hgff_core::env::FEATURE_DIM), || {
        rng.random::<f64>()
    });
    for (v, k) in kinds.iter().enumerate() {
        x[[v, 0]] = k.index() as f64;
        if *k == Site {
            x[[v, 3]] = 0.0;
            x[[v, 4]] = 0.0;
        }
    }
    GraphInput::new(x, kinds, &adj)
}

/// Largest relative error over all tensors of a random network on a random
/// 3-sensor/2-site graph.
pub fn grad_check<R: Rng + ?Sized>(config: NetConfig, rng: &mut R) -> Result<f64> {
    let net = QNetwork::new(config, rng)?;
    let g = random_small_graph(rng)?;
    let targets: Vec<f64> = (0..g.sites().len())
        .map(|_| rng.random_range(-1.0..1.0))
        .collect();
    Ok(check_gradients(&net, &g, &targets)?
        .iter()
        .fold(0.0, |m, t| m.max(t.max_rel_err)))
}
