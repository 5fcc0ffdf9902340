//! Domain types, the first-order radio energy model and the communication
//! graph shared by every other module.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const PICO: f64 = 1e-12;
const NANO: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    #[inline]
    pub fn distance(&self, other: &Position) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn within(&self, width: f64, height: f64) -> bool {
        (0.0..=width).contains(&self.x) && (0.0..=height).contains(&self.y)
    }
}

impl From<[f64; 2]> for Position {
    fn from(v: [f64; 2]) -> Self {
        Self::new(v[0], v[1])
    }
}

impl From<Position> for [f64; 2] {
    fn from(p: Position) -> Self {
        [p.x, p.y]
    }
}

/// Physical constants of the radio and sensing model, held in SI units
/// (J/bit/m², J/bit, m, bit/s, s, J).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "EnergyParamsFile", into = "EnergyParamsFile")]
pub struct EnergyParams {
    /// Distance coefficient of the transmit cost, J/bit/m².
    pub a: f64,
    /// Fixed per-bit transmit cost, J/bit.
    pub b: f64,
    /// Per-bit receive cost, J/bit.
    pub er: f64,
    pub d_max: f64,
    /// Sensing rate, bit/s.
    pub z: f64,
    /// Round length, s.
    pub delta_t: f64,
    /// Initial energy of every sensor, J.
    pub e_init: f64,
}

impl Default for EnergyParams {
    fn default() -> Self {
        Self {
            a: 100.0 * PICO,
            b: 50.0 * NANO,
            er: 50.0 * NANO,
            d_max: 30.0,
            z: 1.0,
            delta_t: 3600.0,
            e_init: 1.0,
        }
    }
}

impl EnergyParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("a", self.a),
            ("b", self.b),
            ("er", self.er),
            ("d_max", self.d_max),
            ("z", self.z),
            ("delta_t", self.delta_t),
            ("e_init", self.e_init),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidInstance(format!(
                    "energy parameter {name} must be finite and positive, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// Bits generated by one sensor in one round.
    pub fn bits_per_round(&self) -> f64 {
        self.z * self.delta_t
    }
}

/// On-disk representation with the customary unit prefixes.
#[derive(Serialize, Deserialize)]
#[allow(non_snake_case)]
struct EnergyParamsFile {
    a_pJ: f64,
    b_nJ: f64,
    er_nJ: f64,
    d_max: f64,
    z_bps: f64,
    delta_t_s: f64,
    e_init_J: f64,
}

impl TryFrom<EnergyParamsFile> for EnergyParams {
    type Error = Error;

    fn try_from(f: EnergyParamsFile) -> Result<Self> {
        let p = EnergyParams {
            a: f.a_pJ * PICO,
            b: f.b_nJ * NANO,
            er: f.er_nJ * NANO,
            d_max: f.d_max,
            z: f.z_bps,
            delta_t: f.delta_t_s,
            e_init: f.e_init_J,
        };
        p.validate()?;
        Ok(p)
    }
}

impl From<EnergyParams> for EnergyParamsFile {
    fn from(p: EnergyParams) -> Self {
        Self {
            a_pJ: p.a / PICO,
            b_nJ: p.b / NANO,
            er_nJ: p.er / NANO,
            d_max: p.d_max,
            z_bps: p.z,
            delta_t_s: p.delta_t,
            e_init_J: p.e_init,
        }
    }
}

/// Per-bit cost of sending over distance `d`: `a·d² + b` in J/bit.
pub fn transmit_cost(d: f64, p: &EnergyParams) -> Result<f64> {
    if d > p.d_max {
        return Err(Error::RangeViolation {
            distance: d,
            d_max: p.d_max,
        });
    }
    Ok(p.a * d * d + p.b)
}

/// Immutable description of one map: geometry, sites, initial sensor
/// deployment and physical constants. Site and sensor order is significant:
/// it defines action indices and graph node indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WsnInstance {
    /// Index into the ten standard map types, or 0 for a custom map.
    pub map_type: u8,
    pub seed: u64,
    pub width: f64,
    pub height: f64,
    pub sites: Vec<Position>,
    pub site_accessible: Vec<bool>,
    #[serde(rename = "sensors")]
    pub sensors_init: Vec<Position>,
    pub dynamic: bool,
    pub perturb_variance: f64,
    pub energy: EnergyParams,
}

impl WsnInstance {
    pub fn sensor_count(&self) -> usize {
        self.sensors_init.len()
    }

    pub fn site_count(&self) -> usize {
        self.sites.len()
    }

    pub fn accessible_sites(&self) -> impl Iterator<Item = usize> + '_ {
        self.site_accessible
            .iter()
            .enumerate()
            .filter_map(|(i, &ok)| ok.then_some(i))
    }

    pub fn action_mask(&self) -> &[bool] {
        &self.site_accessible
    }

    pub fn center(&self) -> Position {
        Position::new(self.width / 2.0, self.height / 2.0)
    }

    pub fn validate(&self) -> Result<()> {
        self.energy.validate()?;
        if self.sensors_init.is_empty() {
            return Err(Error::InvalidInstance("no sensors".into()));
        }
        if self.sites.is_empty() {
            return Err(Error::InvalidInstance("no sites".into()));
        }
        if self.site_accessible.len() != self.sites.len() {
            return Err(Error::InvalidInstance(format!(
                "accessibility mask has {} entries for {} sites",
                self.site_accessible.len(),
                self.sites.len()
            )));
        }
        if !self.site_accessible.iter().any(|&a| a) {
            return Err(Error::InvalidInstance("every site is inaccessible".into()));
        }
        if let Some(spec) = crate::env::MapSpec::for_type(self.map_type) {
            if spec.sensor_count != self.sensor_count()
                || spec.site_count() != self.site_count()
                || spec.width != self.width
                || spec.height != self.height
            {
                return Err(Error::InvalidInstance(format!(
                    "dimensions do not match map type {}",
                    self.map_type
                )));
            }
        }
        for p in self.sites.iter().chain(&self.sensors_init) {
            if !p.within(self.width, self.height) {
                return Err(Error::InvalidInstance(format!(
                    "position ({}, {}) outside the {}x{} region",
                    p.x, p.y, self.width, self.height
                )));
            }
        }
        if !connectivity_ok(
            &self.sensors_init,
            &self.sites,
            &self.site_accessible,
            self.energy.d_max,
        ) {
            return Err(Error::InvalidInstance(
                "sensors are not connected or an accessible site is out of range".into(),
            ));
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let inst: WsnInstance = serde_json::from_str(&text)?;
        inst.validate()?;
        Ok(inst)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }
}

/// Connectivity invariant of a deployment: the sensor-only graph is connected
/// and every accessible site has at least one sensor within radio range, so
/// every sensor can reach the sink wherever it stops.
pub fn connectivity_ok(
    sensors: &[Position],
    sites: &[Position],
    accessible: &[bool],
    d_max: f64,
) -> bool {
    let m = sensors.len();
    if m == 0 {
        return false;
    }
    let covered = sites
        .iter()
        .zip(accessible)
        .filter(|(_, &a)| a)
        .all(|(s, _)| sensors.iter().any(|p| p.distance(s) <= d_max));
    if !covered {
        return false;
    }
    let mut seen = vec![false; m];
    let mut stack = vec![0usize];
    seen[0] = true;
    let mut count = 1;
    while let Some(i) = stack.pop() {
        for j in 0..m {
            if !seen[j] && sensors[i].distance(&sensors[j]) <= d_max {
                seen[j] = true;
                count += 1;
                stack.push(j);
            }
        }
    }
    count == m
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Sensor,
    Site,
}

impl NodeKind {
    pub fn index(self) -> usize {
        match self {
            NodeKind::Sensor => 0,
            NodeKind::Site => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraphNode {
    pub kind: NodeKind,
    pub pos: Position,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    /// Distance normalized by the radio range, in (0, 1].
    pub weight: f64,
}

/// Undirected heterogeneous communication graph over sensors and sites.
#[derive(Debug, Clone, PartialEq)]
pub struct CommGraph {
    pub nodes: Vec<GraphNode>,
    /// Each undirected edge once, with `i < j`.
    pub edges: Vec<Edge>,
}

impl CommGraph {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Symmetric adjacency lists of `(neighbor, weight)`, sorted by neighbor.
    pub fn adjacency(&self) -> Vec<Vec<(usize, f64)>> {
        let mut adj = vec![Vec::new(); self.nodes.len()];
        for e in &self.edges {
            adj[e.i].push((e.j, e.weight));
            adj[e.j].push((e.i, e.weight));
        }
        for list in &mut adj {
            list.sort_by_key(|&(u, _)| u);
        }
        adj
    }

    pub fn kinds(&self) -> Vec<NodeKind> {
        self.nodes.iter().map(|n| n.kind).collect()
    }
}

/// Build the communication graph over `sensors` followed by `sites` (node
/// indices follow that order). Two nodes are linked iff their distance is at
/// most `d_max`; coincident nodes are not linked since their normalized
/// distance would be zero.
pub fn build_comm_graph(sensors: &[Position], sites: &[Position], p: &EnergyParams) -> CommGraph {
    let nodes: Vec<GraphNode> = sensors
        .iter()
        .map(|&pos| GraphNode {
            kind: NodeKind::Sensor,
            pos,
        })
        .chain(sites.iter().map(|&pos| GraphNode {
            kind: NodeKind::Site,
            pos,
        }))
        .collect();
    let mut edges = Vec::new();
    for i in 0..nodes.len() {
        for j in (i + 1)..nodes.len() {
            let d = nodes[i].pos.distance(&nodes[j].pos);
            if d <= p.d_max && d > 0.0 {
                edges.push(Edge {
                    i,
                    j,
                    weight: d / p.d_max,
                });
            }
        }
    }
    CommGraph { nodes, edges }
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
    fn transmit_cost_examples() {
        let p = params();
        assert_relative_eq!(
            transmit_cost(0.0, &p).unwrap(),
            5.0e-8,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            transmit_cost(30.0, &p).unwrap(),
            1.4e-7,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            transmit_cost(10.0, &p).unwrap(),
            6.0e-8,
            max_relative = 1e-12
        );
    }

    #[test]
    fn transmit_cost_rejects_out_of_range() {
        let err = transmit_cost(30.5, &params()).unwrap_err();
        assert!(matches!(err, Error::RangeViolation { .. }));
    }

    #[test]
    fn graph_boundary_is_inclusive() {
        let p = params();
        let g = build_comm_graph(&[Position::new(0.0, 0.0)], &[Position::new(30.0, 0.0)], &p);
        assert_eq!(g.edges.len(), 1);
        assert_eq!(g.edges[0].weight, 1.0);

        let g = build_comm_graph(&[Position::new(0.0, 0.0)], &[Position::new(31.0, 0.0)], &p);
        assert!(g.edges.is_empty());

        let g = build_comm_graph(
            &[Position::new(0.0, 0.0), Position::new(15.0, 0.0)],
            &[],
            &p,
        );
        assert_relative_eq!(g.edges[0].weight, 0.5);
    }

    #[test]
    fn graph_has_two_node_kinds_in_order() {
        let g = build_comm_graph(
            &[Position::new(1.0, 1.0), Position::new(2.0, 2.0)],
            &[Position::new(3.0, 3.0)],
            &params(),
        );
        assert_eq!(
            g.kinds(),
            vec![NodeKind::Sensor, NodeKind::Sensor, NodeKind::Site]
        );
    }

    #[test]
    fn energy_json_uses_prefixed_units() {
        let json = serde_json::to_value(params()).unwrap();
        assert_relative_eq!(json["a_pJ"].as_f64().unwrap(), 100.0, max_relative = 1e-12);
        assert_relative_eq!(json["b_nJ"].as_f64().unwrap(), 50.0, max_relative = 1e-12);
        assert_eq!(json["d_max"].as_f64().unwrap(), 30.0);
        let back: EnergyParams = serde_json::from_value(json).unwrap();
        assert_relative_eq!(back.a, params().a, max_relative = 1e-12);
    }

    #[test]
    fn energy_json_rejects_nonpositive() {
        let bad = r#"{"a_pJ":100,"b_nJ":50,"er_nJ":50,"d_max":0,"z_bps":1,"delta_t_s":3600,"e_init_J":1}"#;
        assert!(serde_json::from_str::<EnergyParams>(bad).is_err());
    }

    #[test]
    fn connectivity_detects_split_and_uncovered_site() {
        let s = [Position::new(0.0, 0.0), Position::new(20.0, 0.0)];
        assert!(connectivity_ok(
            &s,
            &[Position::new(10.0, 10.0)],
            &[true],
            30.0
        ));
        let split = [Position::new(0.0, 0.0), Position::new(50.0, 0.0)];
        assert!(!connectivity_ok(&split, &[], &[], 30.0));
        assert!(!connectivity_ok(
            &s,
            &[Position::new(90.0, 90.0)],
            &[true],
            30.0
        ));
        // an inaccessible site may be out of range
        assert!(connectivity_ok(
            &s,
            &[Position::new(90.0, 90.0)],
            &[false],
            30.0
        ));
    }

    proptest! {
        #[test]
        fn transmit_cost_strictly_increasing(d1 in 0.0f64..30.0, d2 in 0.0f64..30.0) {
            prop_assume!(d1 < d2);
            let p = params();
            prop_assert!(transmit_cost(d1, &p).unwrap() < transmit_cost(d2, &p).unwrap());
        }

        #[test]
        fn graph_edges_symmetric_and_normalized(
            pts in prop::collection::vec((0.0f64..100.0, 0.0f64..100.0), 2..25)
        ) {
            let p = params();
            let pos: Vec<Position> = pts.iter().map(|&(x, y)| Position::new(x, y)).collect();
            let g = build_comm_graph(&pos, &[], &p);
            let adj = g.adjacency();
            for e in &g.edges {
                prop_assert!(e.weight > 0.0 && e.weight <= 1.0);
                let d = pos[e.i].distance(&pos[e.j]);
                prop_assert!((e.weight * p.d_max - d).abs() <= 1e-9 * d);
                prop_assert!(adj[e.j].iter().any(|&(u, w)| u == e.i && w == e.weight));
            }
            for i in 0..pos.len() {
                for j in (i + 1)..pos.len() {
                    let d = pos[i].distance(&pos[j]);
                    let present = g.edges.iter().any(|e| e.i == i && e.j == j);
                    prop_assert_eq!(present, d <= p.d_max && d > 0.0);
                }
            }
        }
    }
}
