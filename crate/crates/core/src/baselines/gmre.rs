use crate::env::Env;
use crate::error::Result;
use crate::wsn::WsnInstance;
use crate::{Policy, SimState};

/// Greedy maximum residual energy: move to the accessible site whose sensors
/// within `radius` hold the most residual energy in total.
#[derive(Debug, Clone, Default)]
pub struct Gmre {
    /// Coverage radius; the radio range when `None`.
    pub radius: Option<f64>,
}

pub fn gmre_select(state: &SimState, instance: &WsnInstance, radius: f64) -> usize {
    let mut best: Option<(usize, f64)> = None;
    for j in instance.accessible_sites() {
        let site = instance.sites[j];
        let total: f64 = state
            .sensor_positions
            .iter()
            .zip(&state.residuals)
            .filter(|(p, _)| p.distance(&site) <= radius)
            .map(|(_, &u)| u)
            .sum();
        if best.is_none_or(|(_, b)| total > b) {
            best = Some((j, total));
        }
    }
    best.expect("instance has an accessible site").0
}

impl Policy for Gmre {
    fn name(&self) -> &str {
        "gmre"
    }

    fn select(&mut self, env: &Env) -> Result<usize> {
        let inst = env.instance();
        let radius = self.radius.unwrap_or(inst.energy.d_max);
        Ok(gmre_select(env.state(), inst, radius))
    }
}
