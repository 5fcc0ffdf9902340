use std::sync::Arc;

use hgff_core::WsnInstance;
use hgff_nn::{Adam, GraphInput, QNetwork};

use crate::error::{AgentError, Result};
use crate::replay::Transition;

/// `r` on terminal transitions, otherwise
/// `r + γ · Q_target(s', argmax_a Q_online(s', a))` over allowed sites.
pub fn double_dqn_target(
    reward: f64,
    done: bool,
    gamma: f64,
    q_online_next: &[f64],
    q_target_next: &[f64],
    mask: &[bool],
) -> f64 {
    if done {
        return reward;
    }
    let a = QNetwork::masked_argmax(q_online_next, mask).expect("at least one allowed site");
    reward + gamma * q_target_next[a]
}

pub fn compute_targets(
    batch: &[&Transition],
    instances: &[Arc<WsnInstance>],
    online: &QNetwork,
    target: &QNetwork,
    gamma: f64,
) -> Result<Vec<f64>> {
    batch
        .iter()
        .map(|t| {
            if t.done {
                return Ok(t.reward);
            }
            let inst = &instances[t.instance];
            let g = GraphInput::from_state(&t.next, inst)?;
            let qo = online.q_values(&g)?;
            let qt = target.q_values(&g)?;
            Ok(double_dqn_target(
                t.reward,
                false,
                gamma,
                &qo,
                &qt,
                inst.action_mask(),
            ))
        })
        .collect()
}

/// One optimizer step on the mean squared error between `Q_online(s, a)` and
/// the Double DQN targets. Returns the loss before the step.
pub fn train_step(
    batch: &[&Transition],
    instances: &[Arc<WsnInstance>],
    online: &mut QNetwork,
    target: &QNetwork,
    adam: &mut Adam,
    gamma: f64,
) -> Result<f64> {
    if batch.is_empty() {
        return Err(AgentError::Config("empty training batch".into()));
    }
    let targets = compute_targets(batch, instances, online, target, gamma)?;
    let n = batch.len() as f64;
    let mut grads = online.params.zeros_like();
    let mut loss = 0.0;
    for (t, y) in batch.iter().zip(&targets) {
        let g = GraphInput::from_state(&t.state, &instances[t.instance])?;
        let (q, cache) = online.forward(&g)?;
        let err = q[t.action] - y;
        loss += err * err / n;
        let mut dq = vec![0.0; q.len()];
        dq[t.action] = 2.0 * err / n;
        online.backward(&g, &cache, &dq, &mut grads)?;
    }
    if !grads.all_finite() {
        return Err(AgentError::Numeric("gradients".into()));
    }
    adam.step(&mut online.params, &grads);
    if !online.params.all_finite() {
        return Err(AgentError::Numeric("parameters".into()));
    }
    Ok(loss)
}
