//! Per-round forwarding tree.
//!
//! Every sensor forwards along its minimum-cost path to the sink, where the
//! cost of the link `i -> j` is `et_ij^x1 * (u_i / E_i)^-x2`: expensive links
//! and nearly depleted senders are avoided. The tree is rebuilt from scratch
//! every round since residuals change every round.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::wsn::{transmit_cost, EnergyParams, Position};

/// Smallest residual fraction used in link costs. `1e-4^-50` is still finite
/// in double precision.
pub const RESIDUAL_FLOOR: f64 = 1e-4;

/// Exponents of the link cost. `x3` weighs the initial-energy ratio, which is
/// identically one for homogeneous sensors; it is kept for configuration
/// compatibility only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoutingParams {
    pub x1: f64,
    pub x2: f64,
    pub x3: f64,
}

impl Default for RoutingParams {
    fn default() -> Self {
        Self {
            x1: 1.0,
            x2: 50.0,
            x3: 50.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parent {
    Sink,
    Sensor(usize),
}

impl Parent {
    /// Node index in the routing graph, where the sink follows the sensors.
    fn node_index(self, sensor_count: usize) -> usize {
        match self {
            Parent::Sink => sensor_count,
            Parent::Sensor(j) => j,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoutingTree {
    pub parent: Vec<Parent>,
    /// Bits sent by each sensor this round (own data plus relayed data).
    pub send_flow: Vec<f64>,
    /// Bits received by each sensor this round.
    pub recv_flow: Vec<f64>,
    pub hop_count: Vec<u32>,
    /// Total link cost of each sensor's path to the sink.
    pub path_cost: Vec<f64>,
    /// Distance from each sensor to its parent, m.
    pub link_distance: Vec<f64>,
}

impl RoutingTree {
    pub fn sensor_count(&self) -> usize {
        self.parent.len()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Cost of the link from sensor `i` (the sender) over distance `d`.
pub fn link_cost(d: f64, residual: f64, p: &EnergyParams, rp: &RoutingParams) -> f64 {
    let et = p.a * d * d + p.b;
    let frac = (residual / p.e_init).max(RESIDUAL_FLOOR);
    et.powf(rp.x1) * frac.powf(-rp.x2)
}

/// Minimum-cost forwarding tree toward a sink at `sink`, with per-sensor flows.
///
/// Equal-cost alternatives resolve to the lower predecessor index; the sink
/// ranks after every sensor.
pub fn build_routing_tree(
    sensors: &[Position],
    residuals: &[f64],
    sink: Position,
    p: &EnergyParams,
    rp: &RoutingParams,
) -> Result<RoutingTree> {
    let m = sensors.len();
    assert_eq!(residuals.len(), m, "one residual per sensor");

    let mut dist = vec![f64::INFINITY; m];
    let mut pred: Vec<Option<Parent>> = vec![None; m];
    let mut done = vec![false; m];

    let sink_dist: Vec<f64> = sensors.iter().map(|s| s.distance(&sink)).collect();
    for i in 0..m {
        if sink_dist[i] <= p.d_max {
            dist[i] = link_cost(sink_dist[i], residuals[i], p, rp);
            pred[i] = Some(Parent::Sink);
        }
    }

    for _ in 0..m {
        let mut best: Option<usize> = None;
        for i in 0..m {
            if !done[i] && dist[i].is_finite() && best.is_none_or(|b| dist[i] < dist[b]) {
                best = Some(i);
            }
        }
        let Some(j) = best else { break };
        done[j] = true;
        for i in 0..m {
            if done[i] {
                continue;
            }
            let d = sensors[i].distance(&sensors[j]);
            if d > p.d_max {
                continue;
            }
            let cand = dist[j] + link_cost(d, residuals[i], p, rp);
            let better = match pred[i] {
                None => true,
                Some(cur) => cand < dist[i] || (cand == dist[i] && j < cur.node_index(m)),
            };
            if better {
                dist[i] = cand;
                pred[i] = Some(Parent::Sensor(j));
            }
        }
    }

    let parent: Vec<Parent> = pred
        .iter()
        .enumerate()
        .map(|(i, p)| p.ok_or(Error::Unreachable { sensor: i }))
        .collect::<Result<_>>()?;

    // Children lists give a traversal order that does not rely on the
    // floating-point ordering of path costs.
    let mut children = vec![Vec::new(); m];
    let mut roots = Vec::new();
    for (i, par) in parent.iter().enumerate() {
        match *par {
            Parent::Sink => roots.push(i),
            Parent::Sensor(j) => children[j].push(i),
        }
    }
    let mut order = Vec::with_capacity(m);
    let mut hop_count = vec![0u32; m];
    let mut stack: Vec<usize> = roots.clone();
    for &r in &roots {
        hop_count[r] = 1;
    }
    while let Some(v) = stack.pop() {
        order.push(v);
        for &c in &children[v] {
            hop_count[c] = hop_count[v] + 1;
            stack.push(c);
        }
    }
    debug_assert_eq!(order.len(), m, "routing tree must span every sensor");

    let bits = p.bits_per_round();
    let mut send_flow = vec![0.0; m];
    let mut recv_flow = vec![0.0; m];
    // Reverse pre-order visits every child before its parent.
    for &v in order.iter().rev() {
        send_flow[v] = recv_flow[v] + bits;
        if let Parent::Sensor(j) = parent[v] {
            recv_flow[j] += send_flow[v];
        }
    }

    let link_distance = parent
        .iter()
        .enumerate()
        .map(|(i, par)| match *par {
            Parent::Sink => sink_dist[i],
            Parent::Sensor(j) => sensors[i].distance(&sensors[j]),
        })
        .collect();

    Ok(RoutingTree {
        parent,
        send_flow,
        recv_flow,
        hop_count,
        path_cost: dist,
        link_distance,
    })
}

/// Energy spent by each sensor in one round under `tree`, J.
pub fn round_energy_drain(tree: &RoutingTree, p: &EnergyParams) -> Result<Vec<f64>> {
    (0..tree.sensor_count())
        .map(|i| {
            let et = transmit_cost(tree.link_distance[i], p)?;
            Ok(et * tree.send_flow[i] + p.er * tree.recv_flow[i])
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn params() -> EnergyParams {
        EnergyParams::default()
    }

    #[test]
    fn link_cost_examples() {
        let p = params();
        let rp = RoutingParams::default();
        let et = transmit_cost(10.0, &p).unwrap();
        assert_relative_eq!(link_cost(10.0, p.e_init, &p, &rp), et, max_relative = 1e-12);

        let rp1 = RoutingParams {
            x1: 1.0,
            x2: 1.0,
            x3: 1.0,
        };
        assert_relative_eq!(
            link_cost(10.0, 0.5 * p.e_init, &p, &rp1),
            2.0 * et,
            max_relative = 1e-12
        );

        let clamped = link_cost(10.0, 1e-9 * p.e_init, &p, &rp1);
        assert_relative_eq!(clamped, et / RESIDUAL_FLOOR, max_relative = 1e-12);
        assert!(link_cost(10.0, -1.0, &p, &rp).is_finite());
    }

    #[test]
    fn single_sensor_one_hop() {
        let p = params();
        let t = build_routing_tree(
            &[Position::new(0.0, 0.0)],
            &[p.e_init],
            Position::new(10.0, 0.0),
            &p,
            &RoutingParams::default(),
        )
        .unwrap();
        assert_eq!(t.parent, vec![Parent::Sink]);
        assert_eq!(t.send_flow, vec![3600.0]);
        assert_eq!(t.recv_flow, vec![0.0]);
        assert_eq!(t.hop_count, vec![1]);

        let drain = round_energy_drain(&t, &p).unwrap();
        assert_relative_eq!(drain[0], 2.16e-4, max_relative = 1e-12);
    }

    #[test]
    fn chain_accumulates_flow() {
        let p = params();
        // A at 0, B at 25, sink at 50: A cannot reach the sink.
        let t = build_routing_tree(
            &[Position::new(0.0, 0.0), Position::new(25.0, 0.0)],
            &[p.e_init; 2],
            Position::new(50.0, 0.0),
            &p,
            &RoutingParams::default(),
        )
        .unwrap();
        assert_eq!(t.parent, vec![Parent::Sensor(1), Parent::Sink]);
        assert_eq!(t.send_flow, vec![3600.0, 7200.0]);
        assert_eq!(t.recv_flow, vec![0.0, 3600.0]);
        assert_eq!(t.hop_count, vec![2, 1]);

        let drain = round_energy_drain(&t, &p).unwrap();
        let receive_share = p.er * t.recv_flow[1];
        assert_relative_eq!(receive_share, 1.8e-4, max_relative = 1e-12);
        let et = transmit_cost(25.0, &p).unwrap();
        assert_relative_eq!(drain[1], et * 7200.0 + 1.8e-4, max_relative = 1e-12);
        assert_relative_eq!(drain[0], et * 3600.0, max_relative = 1e-12);
    }

    #[test]
    fn equal_cost_parents_pick_lower_index() {
        let p = params();
        // A is out of sink range; B and C mirror each other across A's axis.
        let sensors = [
            Position::new(50.0, 0.0),
            Position::new(40.0, 20.0),
            Position::new(60.0, 20.0),
        ];
        let t = build_routing_tree(
            &sensors,
            &[p.e_init; 3],
            Position::new(50.0, 40.0),
            &p,
            &RoutingParams::default(),
        )
        .unwrap();
        assert_eq!(t.path_cost[1], t.path_cost[2]);
        assert_eq!(t.parent[0], Parent::Sensor(1));
    }

    #[test]
    fn relays_even_when_sink_in_range_if_cheaper() {
        // With the default constants a direct hop within range is always
        // cheaper than relaying; a steeper distance term reverses that.
        let p = EnergyParams {
            a: 1e-9,
            ..params()
        };
        // Direct hop of 29 m costs more than two hops of 14.5 m.
        let t = build_routing_tree(
            &[Position::new(0.0, 0.0), Position::new(14.5, 0.0)],
            &[p.e_init; 2],
            Position::new(29.0, 0.0),
            &p,
            &RoutingParams::default(),
        )
        .unwrap();
        assert_eq!(t.parent[0], Parent::Sensor(1));
    }

    #[test]
    fn depleted_relay_is_avoided() {
        let p = params();
        let sensors = [Position::new(0.0, 0.0), Position::new(14.5, 0.0)];
        let t = build_routing_tree(
            &sensors,
            &[p.e_init, 0.5 * p.e_init],
            Position::new(29.0, 0.0),
            &p,
            &RoutingParams::default(),
        )
        .unwrap();
        assert_eq!(t.parent[0], Parent::Sink);
    }

    #[test]
    fn unreachable_sensor_is_reported() {
        let p = params();
        let err = build_routing_tree(
            &[Position::new(0.0, 0.0), Position::new(90.0, 0.0)],
            &[p.e_init; 2],
            Position::new(10.0, 0.0),
            &p,
            &RoutingParams::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Unreachable { sensor: 1 }));
    }

    #[test]
    fn tree_dump_is_json() {
        let p = params();
        let t = build_routing_tree(
            &[Position::new(0.0, 0.0)],
            &[p.e_init],
            Position::new(1.0, 0.0),
            &p,
            &RoutingParams::default(),
        )
        .unwrap();
        let v: serde_json::Value = serde_json::from_str(&t.to_json().unwrap()).unwrap();
        assert_eq!(v["parent"][0], "sink");
    }

    /// Minimum path cost over every simple path to the sink, by exhaustive DFS.
    fn brute_force_costs(
        sensors: &[Position],
        residuals: &[f64],
        sink: Position,
        p: &EnergyParams,
    ) -> Vec<f64> {
        let rp = RoutingParams::default();
        #[allow(clippy::too_many_arguments)]
        fn dfs(
            v: usize,
            acc: f64,
            visited: &mut Vec<bool>,
            sensors: &[Position],
            residuals: &[f64],
            sink: Position,
            p: &EnergyParams,
            rp: &RoutingParams,
            best: &mut f64,
        ) {
            let ds = sensors[v].distance(&sink);
            if ds <= p.d_max {
                *best = best.min(acc + link_cost(ds, residuals[v], p, rp));
            }
            for u in 0..sensors.len() {
                let d = sensors[v].distance(&sensors[u]);
                if !visited[u] && d <= p.d_max {
                    visited[u] = true;
                    let c = acc + link_cost(d, residuals[v], p, rp);
                    dfs(u, c, visited, sensors, residuals, sink, p, rp, best);
                    visited[u] = false;
                }
            }
        }
        (0..sensors.len())
            .map(|s| {
                let mut visited = vec![false; sensors.len()];
                visited[s] = true;
                let mut best = f64::INFINITY;
                dfs(
                    s,
                    0.0,
                    &mut visited,
                    sensors,
                    residuals,
                    sink,
                    p,
                    &rp,
                    &mut best,
                );
                best
            })
            .collect()
    }

    fn arb_network() -> impl Strategy<Value = (Vec<Position>, Vec<f64>, Position)> {
        (1usize..=6).prop_flat_map(|m| {
            (
                prop::collection::vec((0.0f64..50.0, 0.0f64..50.0), m),
                prop::collection::vec(0.3f64..1.0, m),
                (0.0f64..50.0, 0.0f64..50.0),
            )
                .prop_map(|(pts, res, (sx, sy))| {
                    (
                        pts.into_iter().map(|(x, y)| Position::new(x, y)).collect(),
                        res,
                        Position::new(sx, sy),
                    )
                })
        })
    }

    proptest! {
        #[test]
        fn tree_matches_brute_force((sensors, residuals, sink) in arb_network()) {
            let p = params();
            let brute = brute_force_costs(&sensors, &residuals, sink, &p);
            match build_routing_tree(&sensors, &residuals, sink, &p, &RoutingParams::default()) {
                Ok(t) => {
                    for (got, want) in t.path_cost.iter().zip(&brute) {
                        prop_assert!((got - want).abs() <= 1e-12 * want.abs());
                    }
                }
                Err(Error::Unreachable { sensor }) => prop_assert!(brute[sensor].is_infinite()),
                Err(e) => prop_assert!(false, "unexpected error {e}"),
            }
        }

        #[test]
        fn flows_conserve_and_tree_is_acyclic((sensors, residuals, sink) in arb_network()) {
            let p = params();
            let Ok(t) = build_routing_tree(&sensors, &residuals, sink, &p, &RoutingParams::default()) else {
                return Ok(());
            };
            let m = sensors.len();
            let bits = p.bits_per_round();
            for i in 0..m {
                prop_assert_eq!(t.recv_flow[i] + bits, t.send_flow[i]);
                let mut v = i;
                let mut steps = 0;
                while let Parent::Sensor(j) = t.parent[v] {
                    prop_assert!(sensors[v].distance(&sensors[j]) <= p.d_max);
                    v = j;
                    steps += 1;
                    prop_assert!(steps <= m);
                }
                prop_assert_eq!(steps + 1, t.hop_count[i] as usize);
            }
            let inflow: f64 = (0..m).filter(|&i| t.parent[i] == Parent::Sink).map(|i| t.send_flow[i]).sum();
            prop_assert_eq!(inflow, m as f64 * bits);
        }
    }
}
