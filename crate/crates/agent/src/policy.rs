use hgff_core::{Env, Policy};
use hgff_nn::{Checkpoint, GraphInput, QNetwork};
use rand::Rng;

use crate::error::{AgentError, Result};

/// ε-greedy choice. The network is only evaluated on the greedy branch.
pub fn select_action<R: Rng + ?Sized>(
    net: &QNetwork,
    graph: &GraphInput,
    mask: &[bool],
    epsilon: f64,
    rng: &mut R,
) -> Result<usize> {
    let allowed: Vec<usize> = (0..mask.len()).filter(|&i| mask[i]).collect();
    if allowed.is_empty() {
        return Err(AgentError::Config("every site is masked".into()));
    }
    if epsilon > 0.0 && rng.random::<f64>() < epsilon {
        return Ok(allowed[rng.random_range(0..allowed.len())]);
    }
    let q = net.q_values(graph)?;
    Ok(QNetwork::masked_argmax(&q, mask).expect("non-empty mask"))
}

/// Greedy policy over a trained network.
#[derive(Debug, Clone)]
pub struct HgffPolicy {
    pub net: QNetwork,
    name: String,
}

impl HgffPolicy {
    pub fn new(net: QNetwork) -> Self {
        Self::named(net, "hgff")
    }

    pub fn named(net: QNetwork, name: impl Into<String>) -> Self {
        Self {
            net,
            name: name.into(),
        }
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        Ok(Self::new(QNetwork::from_params(
            ck.config,
            ck.params.clone(),
        )?))
    }

    /// Chosen site and the Q-values of all sites.
    pub fn decide(&self, env: &Env) -> Result<(usize, Vec<f64>)> {
        let graph = GraphInput::from_state(env.state(), env.instance())?;
        let q = self.net.q_values(&graph)?;
        let a = QNetwork::masked_argmax(&q, env.action_mask())
            .ok_or_else(|| AgentError::Config("every site is masked".into()))?;
        Ok((a, q))
    }
}

impl Policy for HgffPolicy {
    fn name(&self) -> &str {
        &self.name
    }

    fn select(&mut self, env: &Env) -> hgff_core::Result<usize> {
        self.decide(env)
            .map(|(a, _)| a)
            .map_err(|e| hgff_core::Error::Policy(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use hgff_core::NodeKind;
    use hgff_nn::NetConfig;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn net_and_graph() -> (QNetwork, GraphInput) {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let net = QNetwork::new(NetConfig::default(), &mut rng).unwrap();
        let kinds = vec![
            NodeKind::Sensor,
            NodeKind::Site,
            NodeKind::Site,
            NodeKind::Site,
            NodeKind::Site,
        ];
        let x = ndarray::array![
            [0.0, 0.5, 0.5, 1.0, 0.0],
            [1.0, 0.1, 0.1, 0.0, 0.0],
            [1.0, 0.9, 0.1, 0.0, 0.0],
            [1.0, 0.1, 0.9, 0.0, 0.0],
            [1.0, 0.9, 0.9, 0.0, 0.0],
        ];
        let adj = vec![
            vec![(1, 0.5), (2, 0.5)],
            vec![(0, 0.5)],
            vec![(0, 0.5)],
            vec![],
            vec![],
        ];
        (net, GraphInput::new(x, kinds, &adj).unwrap())
    }

    #[test]
    fn greedy_is_argmax_and_respects_mask() {
        let (net, g) = net_and_graph();
        let q = net.q_values(&g).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let best = QNetwork::masked_argmax(&q, &[true; 4]).unwrap();
        for _ in 0..5 {
            assert_eq!(
                select_action(&net, &g, &[true; 4], 0.0, &mut rng).unwrap(),
                best
            );
        }
        let mut mask = [true; 4];
        mask[best] = false;
        let second = QNetwork::masked_argmax(&q, &mask).unwrap();
        assert_ne!(second, best);
        assert_eq!(
            select_action(&net, &g, &mask, 0.0, &mut rng).unwrap(),
            second
        );
    }

    #[test]
    fn all_masked_is_an_error() {
        let (net, g) = net_and_graph();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(select_action(&net, &g, &[false; 4], 0.5, &mut rng).is_err());
    }
}
