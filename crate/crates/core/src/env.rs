//! The sink-movement environment: map generation, round stepping, dynamic
//! sensor perturbation, node features and episode accounting.

use std::io::Write;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::routing::{build_routing_tree, round_energy_drain, RoutingParams, RoutingTree};
use crate::wsn::{
    build_comm_graph, connectivity_ok, CommGraph, EnergyParams, Position, WsnInstance,
};

pub const GENERATION_RETRIES: usize = 1000;
pub const PERTURB_RETRIES: usize = 100;
pub const PERTURB_VARIANCE: f64 = 3.0;
/// Width of a node feature row.
pub const FEATURE_DIM: usize = 5;

/// Geometry of a map family. Sites sit at the centers of a `cols × rows`
/// grid laid over the `width × height` region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MapSpec {
    pub map_type: u8,
    pub sensor_count: usize,
    pub site_cols: usize,
    pub site_rows: usize,
    pub width: f64,
    pub height: f64,
    pub dynamic: bool,
    /// Fraction of sites made inaccessible at random.
    pub inaccessible_fraction: f64,
}

impl MapSpec {
    /// The ten standard map types.
    pub fn for_type(map_type: u8) -> Option<MapSpec> {
        let (sensors, cols, rows, w, h) = match map_type {
            1 => (30, 5, 5, 100.0, 100.0),
            2 => (50, 5, 5, 100.0, 100.0),
            3 => (100, 5, 5, 100.0, 100.0),
            4 => (100, 10, 10, 150.0, 150.0),
            5 => (200, 5, 5, 100.0, 100.0),
            6 => (200, 10, 10, 150.0, 150.0),
            7 => (100, 5, 15, 50.0, 150.0),
            8 => (100, 10, 10, 100.0, 100.0),
            9 => (300, 10, 10, 150.0, 150.0),
            10 => (500, 20, 20, 150.0, 150.0),
            _ => return None,
        };
        Some(MapSpec {
            map_type,
            sensor_count: sensors,
            site_cols: cols,
            site_rows: rows,
            width: w,
            height: h,
            dynamic: false,
            inaccessible_fraction: if map_type == 8 { 0.5 } else { 0.0 },
        })
    }

    /// A free-form map outside the standard table.
    pub fn custom(
        sensor_count: usize,
        site_cols: usize,
        site_rows: usize,
        width: f64,
        height: f64,
    ) -> MapSpec {
        MapSpec {
            map_type: 0,
            sensor_count,
            site_cols,
            site_rows,
            width,
            height,
            dynamic: false,
            inaccessible_fraction: 0.0,
        }
    }

    pub fn with_dynamic(mut self, dynamic: bool) -> Self {
        self.dynamic = dynamic;
        self
    }

    pub fn site_count(&self) -> usize {
        self.site_cols * self.site_rows
    }

    /// Site positions in row-major order (row along y, column along x).
    pub fn site_positions(&self) -> Vec<Position> {
        let dx = self.width / self.site_cols as f64;
        let dy = self.height / self.site_rows as f64;
        (0..self.site_rows)
            .flat_map(|r| {
                (0..self.site_cols)
                    .map(move |c| Position::new((c as f64 + 0.5) * dx, (r as f64 + 0.5) * dy))
            })
            .collect()
    }
}

/// Generate a standard map with default physical constants.
pub fn generate_map(map_type: u8, seed: u64) -> Result<WsnInstance> {
    let spec = MapSpec::for_type(map_type)
        .ok_or_else(|| Error::Config(format!("map type must be in 1..=10, got {map_type}")))?;
    generate(&spec, seed, EnergyParams::default())
}

/// Sample an instance of `spec`, resampling sensors until the deployment is
/// connected and covers every accessible site.
pub fn generate(spec: &MapSpec, seed: u64, energy: EnergyParams) -> Result<WsnInstance> {
    energy.validate()?;
    if spec.sensor_count == 0 || spec.site_count() == 0 {
        return Err(Error::Config(
            "map needs at least one sensor and one site".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sites = spec.site_positions();
    let n = sites.len();

    let mut site_accessible = vec![true; n];
    let blocked = (spec.inaccessible_fraction * n as f64).round() as usize;
    if blocked > 0 {
        if blocked >= n {
            return Err(Error::Config("every site would be inaccessible".into()));
        }
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(&mut rng);
        for &i in &idx[..blocked] {
            site_accessible[i] = false;
        }
    }

    for _ in 0..GENERATION_RETRIES {
        let sensors: Vec<Position> = (0..spec.sensor_count)
            .map(|_| {
                Position::new(
                    rng.random::<f64>() * spec.width,
                    rng.random::<f64>() * spec.height,
                )
            })
            .collect();
        if connectivity_ok(&sensors, &sites, &site_accessible, energy.d_max) {
            return Ok(WsnInstance {
                map_type: spec.map_type,
                seed,
                width: spec.width,
                height: spec.height,
                sites,
                site_accessible,
                sensors_init: sensors,
                dynamic: spec.dynamic,
                perturb_variance: PERTURB_VARIANCE,
                energy,
            });
        }
    }
    Err(Error::Generation {
        attempts: GENERATION_RETRIES,
        reason: "no connected deployment found".into(),
    })
}

/// Mutable per-round state. Positions are shared between snapshots until a
/// perturbation replaces them.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub round: u64,
    pub sensor_positions: Arc<[Position]>,
    /// Residual energy of each sensor, J.
    pub residuals: Vec<f64>,
    pub sink_site: usize,
    /// Energy spent by each sensor in the previous round, J.
    pub last_drain: Vec<f64>,
}

impl SimState {
    pub fn min_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn is_terminal(&self) -> bool {
        self.min_residual() <= 0.0
    }
}

/// Where the sink stood in each round of an episode.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EpisodeTrace {
    pub start_site: usize,
    pub sites: Vec<usize>,
    pub min_residuals: Vec<f64>,
    pub site_count: usize,
}

impl EpisodeTrace {
    pub fn lifetime(&self) -> u64 {
        self.sites.len() as u64
    }

    /// Total rounds spent at each site.
    pub fn sojourn_times(&self) -> Vec<u64> {
        let mut t = vec![0u64; self.site_count];
        for &s in &self.sites {
            t[s] += 1;
        }
        t
    }

    /// Consecutive stays as `(site, rounds)`.
    pub fn visits(&self) -> Vec<(usize, u64)> {
        let mut out: Vec<(usize, u64)> = Vec::new();
        for &s in &self.sites {
            match out.last_mut() {
                Some((site, n)) if *site == s => *n += 1,
                _ => out.push((s, 1)),
            }
        }
        out
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "round,site_index,min_residual_J")?;
        for (k, (s, r)) in self.sites.iter().zip(&self.min_residuals).enumerate() {
            writeln!(w, "{},{},{}", k + 1, s, r)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub reward: f64,
    pub done: bool,
}

/// Node feature matrix: sensors first, then sites.
///
/// Sensor rows are `[0, x/width, y/height, u/E, drain/max_drain]`, site rows
/// `[1, x/width, y/height, 0, 0]`.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeFeatures {
    pub rows: Vec<[f64; FEATURE_DIM]>,
    pub sensor_count: usize,
    pub site_count: usize,
}

pub fn node_features(state: &SimState, instance: &WsnInstance) -> NodeFeatures {
    let max_drain = state.last_drain.iter().copied().fold(0.0, f64::max);
    let e = instance.energy.e_init;
    let mut rows = Vec::with_capacity(instance.sensor_count() + instance.site_count());
    for (i, p) in state.sensor_positions.iter().enumerate() {
        let drain = if max_drain > 0.0 {
            state.last_drain[i] / max_drain
        } else {
            0.0
        };
        rows.push([
            0.0,
            p.x / instance.width,
            p.y / instance.height,
            (state.residuals[i] / e).clamp(0.0, 1.0),
            drain,
        ]);
    }
    for p in &instance.sites {
        rows.push([1.0, p.x / instance.width, p.y / instance.height, 0.0, 0.0]);
    }
    NodeFeatures {
        rows,
        sensor_count: instance.sensor_count(),
        site_count: instance.site_count(),
    }
}

/// Communication graph for the current sensor positions.
pub fn state_graph(state: &SimState, instance: &WsnInstance) -> CommGraph {
    build_comm_graph(&state.sensor_positions, &instance.sites, &instance.energy)
}

/// Draw a new deployment around the initial positions. If no connected
/// deployment is found within the retry budget, `current` is kept.
pub fn perturb_sensors<R: Rng + ?Sized>(
    instance: &WsnInstance,
    current: &[Position],
    rng: &mut R,
) -> Vec<Position> {
    let sd = instance.perturb_variance.sqrt();
    for _ in 0..PERTURB_RETRIES {
        let next: Vec<Position> = instance
            .sensors_init
            .iter()
            .map(|p0| {
                let (x, y) = perturb_point(p0, sd, rng);
                Position::new(x.clamp(0.0, instance.width), y.clamp(0.0, instance.height))
            })
            .collect();
        if connectivity_ok(
            &next,
            &instance.sites,
            &instance.site_accessible,
            instance.energy.d_max,
        ) {
            return next;
        }
    }
    current.to_vec()
}

/// One unclamped draw around `center` with standard deviation `sd`.
pub fn perturb_point<R: Rng + ?Sized>(center: &Position, sd: f64, rng: &mut R) -> (f64, f64) {
    let nx = Normal::new(center.x, sd).expect("finite standard deviation");
    let ny = Normal::new(center.y, sd).expect("finite standard deviation");
    (nx.sample(rng), ny.sample(rng))
}

/// Accessible site closest to the map center; ties go to the lower index.
pub fn initial_sink_site(instance: &WsnInstance) -> usize {
    let c = instance.center();
    let mut best = None::<(usize, f64)>;
    for i in instance.accessible_sites() {
        let d = instance.sites[i].distance(&c);
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((i, d));
        }
    }
    best.expect("instance has an accessible site").0
}

/// Single-episode environment. Cloning yields an independent copy, which is
/// how the planners roll out hypothetical futures.
#[derive(Debug, Clone)]
pub struct Env {
    instance: Arc<WsnInstance>,
    routing: RoutingParams,
    state: SimState,
    trace: EpisodeTrace,
    rng: ChaCha8Rng,
    done: bool,
}

impl Env {
    pub fn reset(instance: Arc<WsnInstance>, seed: u64) -> Env {
        Self::reset_with(instance, seed, RoutingParams::default())
    }

    pub fn reset_with(instance: Arc<WsnInstance>, seed: u64, routing: RoutingParams) -> Env {
        let m = instance.sensor_count();
        let sink = initial_sink_site(&instance);
        let state = SimState {
            round: 0,
            sensor_positions: instance.sensors_init.clone().into(),
            residuals: vec![instance.energy.e_init; m],
            sink_site: sink,
            last_drain: vec![0.0; m],
        };
        let trace = EpisodeTrace {
            start_site: sink,
            site_count: instance.site_count(),
            ..Default::default()
        };
        Env {
            instance,
            routing,
            state,
            trace,
            rng: ChaCha8Rng::seed_from_u64(seed),
            done: false,
        }
    }

    pub fn instance(&self) -> &Arc<WsnInstance> {
        &self.instance
    }

    pub fn state(&self) -> &SimState {
        &self.state
    }

    pub fn trace(&self) -> &EpisodeTrace {
        &self.trace
    }

    pub fn routing_params(&self) -> &RoutingParams {
        &self.routing
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    pub fn features(&self) -> NodeFeatures {
        node_features(&self.state, &self.instance)
    }

    pub fn action_mask(&self) -> &[bool] {
        self.instance.action_mask()
    }

    /// Routing tree the network would use with the sink at `site`, under the
    /// current positions and residuals.
    pub fn routing_tree(&self, site: usize) -> Result<RoutingTree> {
        build_routing_tree(
            &self.state.sensor_positions,
            &self.state.residuals,
            self.instance.sites[site],
            &self.instance.energy,
            &self.routing,
        )
    }

    /// Play one round with the sink at `action`.
    pub fn step(&mut self, action: usize) -> Result<StepOutcome> {
        if self.done {
            return Err(Error::EpisodeFinished {
                round: self.state.round,
            });
        }
        if action >= self.instance.site_count() {
            return Err(Error::InvalidAction {
                action,
                reason: "site index out of range",
            });
        }
        if !self.instance.site_accessible[action] {
            return Err(Error::InvalidAction {
                action,
                reason: "site is inaccessible",
            });
        }

        if self.instance.dynamic {
            let next = perturb_sensors(&self.instance, &self.state.sensor_positions, &mut self.rng);
            self.state.sensor_positions = next.into();
        }
        let tree = self.routing_tree(action)?;
        let drain = round_energy_drain(&tree, &self.instance.energy)?;
        for (u, d) in self.state.residuals.iter_mut().zip(&drain) {
            *u -= d;
        }
        self.state.last_drain = drain;
        self.state.sink_site = action;
        self.state.round += 1;
        let min_residual = self.state.min_residual();
        self.trace.sites.push(action);
        self.trace.min_residuals.push(min_residual);
        self.done = min_residual <= 0.0;
        Ok(StepOutcome {
            reward: 1.0,
            done: self.done,
        })
    }

    /// Run `policy` until the network dies or `max_rounds` is reached;
    /// returns the lifetime in rounds.
    pub fn run<P: crate::Policy + ?Sized>(
        &mut self,
        policy: &mut P,
        max_rounds: u64,
    ) -> Result<u64> {
        while !self.done && self.state.round < max_rounds {
            let a = policy.select(self)?;
            self.step(a)?;
        }
        Ok(self.state.round)
    }
}
