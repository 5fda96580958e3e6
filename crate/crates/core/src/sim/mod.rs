//! Scenario configuration, query simulation and metric collection.

pub mod experiment;
pub mod mobility;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::energy::EnergyModel;
use crate::error::{Error, Result};
use crate::plan::bsta::{plan_bsta_with_tables, replay_bsta};
use crate::plan::stat::build_stat_with_tables;
use crate::plan::{Planner, Transmission};
use crate::spa::{forwardable, shortest_paths, tables_for, Hop, TransmitParams};
use crate::tcg::{build_tcg, ContactMode, ContactOptions, NodeId, Tcg};
use crate::time::Micros;
use crate::trajectory::{determine_targets, Query, Region, Trajectory};

pub use experiment::{run_experiment, ExperimentResult, MetricsRow, Summary, SweepVar};
pub use mobility::{generate_scenario, Scenario};

/// Simulation settings; defaults follow the forest-monitoring setup.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    pub area_width: f64,
    pub area_height: f64,
    pub n_search_uavs: usize,
    pub n_ferry_uavs: usize,
    /// m/s
    pub uav_speed: f64,
    /// m
    pub comm_range: f64,
    /// bytes
    pub packet_size: u64,
    /// bytes/s
    pub link_throughput: u64,
    /// s
    pub sim_time: f64,
    /// s
    pub query_time_period: f64,
    /// Fraction of the area covered by a query region.
    pub query_region_ratio: f64,
    pub query_count: usize,
    /// s
    pub zeta: f64,
    pub rng_seed: u64,
    pub contact_mode: ContactMode,
    /// Contact sampling step, s.
    pub contact_dt: f64,
    pub energy: EnergyModel,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            area_width: 1200.0,
            area_height: 1300.0,
            n_search_uavs: 21,
            n_ferry_uavs: 4,
            uav_speed: 10.0,
            comm_range: 200.0,
            packet_size: 10_000,
            link_throughput: 125_000,
            sim_time: 1000.0,
            query_time_period: 30.0,
            query_region_ratio: 0.1,
            query_count: 1000,
            zeta: 0.0,
            rng_seed: 1,
            contact_mode: ContactMode::Intervals,
            contact_dt: 0.1,
            energy: EnergyModel::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("area_width", self.area_width),
            ("area_height", self.area_height),
            ("uav_speed", self.uav_speed),
            ("comm_range", self.comm_range),
            ("sim_time", self.sim_time),
            ("query_time_period", self.query_time_period),
            ("contact_dt", self.contact_dt),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig(format!("{name} must be positive, got {v}")));
            }
        }
        if self.packet_size == 0 || self.link_throughput == 0 {
            return Err(Error::InvalidConfig("packet_size and link_throughput must be positive".into()));
        }
        if !(self.query_region_ratio > 0.0 && self.query_region_ratio <= 1.0) {
            return Err(Error::InvalidConfig("query_region_ratio must be in (0, 1]".into()));
        }
        if !(self.zeta >= 0.0) {
            return Err(Error::InvalidConfig("zeta must be non-negative".into()));
        }
        if self.query_time_period > self.sim_time {
            return Err(Error::InvalidConfig("query_time_period exceeds sim_time".into()));
        }
        if self.n_search_uavs + self.n_ferry_uavs == 0 {
            return Err(Error::InvalidConfig("no UAVs".into()));
        }
        if self.energy.e_tx < 0.0 || self.energy.e_rx < 0.0 {
            return Err(Error::InvalidConfig("energy costs must be non-negative".into()));
        }
        Ok(())
    }

    /// Trajectories and contacts run to twice the query horizon so late
    /// queries can still complete.
    pub fn horizon(&self) -> f64 {
        2.0 * self.sim_time
    }

    pub fn transmit_params(&self) -> Result<TransmitParams> {
        TransmitParams::from_link(self.packet_size, self.link_throughput)
    }

    /// `key = value` lines, one per field, sorted by key.
    pub fn describe(&self) -> String {
        let v = serde_json::to_value(self).expect("config serializes");
        let mut out = String::new();
        if let serde_json::Value::Object(map) = v {
            for (k, v) in map {
                out.push_str(&format!("{k} = {v}\n"));
            }
        }
        out
    }
}

/// How a target learns about a query, which fixes its result generation
/// time.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum RequestModel {
    /// Every target holds the request at issue time.
    Instant,
    /// The request travels from the ground station along earliest-delivery
    /// paths starting at issue time.
    Routed,
}

/// A contact graph ready for querying.
#[derive(Clone, Debug)]
pub struct PreparedScenario {
    pub tcg: Tcg,
    pub g0: NodeId,
    pub params: TransmitParams,
    pub energy: EnergyModel,
    pub packet_bytes: u64,
    pub zeta: Micros,
    /// Empty when the graph was supplied directly.
    pub trajectories: Vec<Trajectory<f64>>,
}

impl PreparedScenario {
    pub fn from_config(cfg: &ScenarioConfig) -> Result<Self> {
        let sc = generate_scenario(cfg)?;
        Self::from_scenario(cfg, sc)
    }

    pub fn from_scenario(cfg: &ScenarioConfig, sc: Scenario) -> Result<Self> {
        cfg.validate()?;
        let opts = ContactOptions {
            comm_range: cfg.comm_range,
            t0: Micros::ZERO,
            t1: Micros::from_secs_f64(sc.horizon),
            dt: Micros::from_secs_f64(cfg.contact_dt),
            mode: cfg.contact_mode,
        };
        let tcg = build_tcg(&sc.uavs, &sc.ground_station, &opts)?;
        let g0 = tcg.require(&sc.ground_station.uav_id)?;
        Ok(PreparedScenario {
            tcg,
            g0,
            params: cfg.transmit_params()?,
            energy: cfg.energy,
            packet_bytes: cfg.packet_size,
            zeta: Micros::from_secs_f64(cfg.zeta),
            trajectories: sc.uavs,
        })
    }

    pub fn from_tcg(tcg: Tcg, g0: NodeId, params: TransmitParams, zeta: Micros) -> Self {
        PreparedScenario {
            tcg,
            g0,
            params,
            energy: EnergyModel::default(),
            packet_bytes: 0,
            zeta,
            trajectories: Vec::new(),
        }
    }
}

/// Targets with their result generation times, shared by both planners.
#[derive(Clone, Debug)]
pub struct PreparedQuery {
    pub issue_time: Micros,
    pub t_gen: BTreeMap<NodeId, Micros>,
    /// Packet-hops used to distribute the request.
    pub request_transmissions: usize,
}

/// Request distribution for `targets` issued at `issue_time`.
pub fn prepare_targets(
    sc: &PreparedScenario,
    targets: &[NodeId],
    issue_time: Micros,
    request: RequestModel,
) -> Result<PreparedQuery> {
    if targets.contains(&sc.g0) {
        return Err(Error::InvalidArgument("the ground station cannot be a target".into()));
    }
    match request {
        RequestModel::Instant => Ok(PreparedQuery {
            issue_time,
            t_gen: targets.iter().map(|&s| (s, issue_time)).collect(),
            request_transmissions: 0,
        }),
        RequestModel::Routed => {
            let table = shortest_paths(&sc.tcg, sc.g0, issue_time, sc.params, None)?;
            let mut t_gen = BTreeMap::new();
            let mut unreachable = Vec::new();
            let mut edges = BTreeSet::new();
            for &s in targets {
                match table.path_nodes(s) {
                    Some(path) => {
                        t_gen.insert(s, table.arrival(s).expect("reachable"));
                        edges.extend(path.windows(2).map(|p| (p[0], p[1])));
                    }
                    None => unreachable.push(sc.tcg.label(s).to_owned()),
                }
            }
            if !unreachable.is_empty() {
                return Err(Error::Infeasible { unreachable });
            }
            // the request is multicast along the union of its paths
            Ok(PreparedQuery { issue_time, t_gen, request_transmissions: edges.len() })
        }
    }
}

/// Targets of a trajectory query, routed request model.
pub fn prepare_query(sc: &PreparedScenario, query: &Query<f64>) -> Result<PreparedQuery> {
    let labels = determine_targets(&sc.trajectories, query, None)?;
    let targets: Vec<NodeId> = labels.iter().map(|l| sc.tcg.require(l)).collect::<Result<_>>()?;
    prepare_targets(sc, &targets, Micros::from_secs_f64(query.issue_time), RequestModel::Routed)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueryMetrics {
    pub query_id: usize,
    pub planner: Planner,
    pub n_targets: usize,
    /// Last result arrival minus issue time, s.
    pub delay_s: f64,
    /// Result packets only.
    pub energy_units: f64,
    pub request_energy_units: f64,
    pub fallback_count: usize,
}

/// Everything observed while executing one plan.
#[derive(Clone, Debug)]
pub struct QueryRun {
    pub metrics: QueryMetrics,
    pub transmissions: Vec<Transmission>,
    /// Earliest possible completion (max earliest delivery).
    pub t_d: Micros,
    /// Completion deadline the plan was built for.
    pub t_nd: Micros,
    pub completed: Micros,
    /// Packet-hops if every result travelled alone.
    pub independent_transmissions: usize,
}

/// Plans and replays one prepared query.
pub fn run_query(sc: &PreparedScenario, pq: &PreparedQuery, planner: Planner, query_id: usize) -> Result<QueryRun> {
    let request_energy = sc.energy.cost(pq.request_transmissions, sc.packet_bytes);
    if pq.t_gen.is_empty() {
        return Ok(QueryRun {
            metrics: QueryMetrics {
                query_id,
                planner,
                n_targets: 0,
                delay_s: 0.0,
                energy_units: 0.0,
                request_energy_units: request_energy,
                fallback_count: 0,
            },
            transmissions: Vec::new(),
            t_d: pq.issue_time,
            t_nd: pq.issue_time,
            completed: pq.issue_time,
            independent_transmissions: 0,
        });
    }
    let tables = tables_for(&sc.tcg, &pq.t_gen, sc.params, Some(sc.g0))?;
    let bsta = plan_bsta_with_tables(&sc.tcg, sc.g0, &pq.t_gen, sc.params, &tables)?;
    let independent = bsta.independent_transmissions();

    let (transmissions, completed, t_d, t_nd, fallback_count) = match planner {
        Planner::Esta => {
            let tree = build_stat_with_tables(&sc.tcg, sc.g0, &pq.t_gen, sc.zeta, sc.params, &tables)?;
            let r = tree.replay(&sc.tcg, sc.params)?;
            (r.transmissions, r.completed, tree.t_d, tree.t_nd, tree.fallback_count())
        }
        Planner::Bsta => {
            let r = replay_bsta(&bsta)?;
            let completed = r.completed();
            (r.transmissions, completed, bsta.t_d, bsta.t_d, 0)
        }
    };
    let hops: Vec<Hop> = transmissions.iter().map(|t| t.hop).collect();
    check_transmissions(&sc.tcg, sc.params, &hops)?;
    if completed > t_nd {
        return Err(Error::Consistency(format!("completed at {completed}, deadline {t_nd}")));
    }
    Ok(QueryRun {
        metrics: QueryMetrics {
            query_id,
            planner,
            n_targets: pq.t_gen.len(),
            delay_s: (completed - pq.issue_time).as_secs_f64(),
            energy_units: sc.energy.cost(transmissions.len(), sc.packet_bytes),
            request_energy_units: request_energy,
            fallback_count,
        },
        transmissions,
        t_d,
        t_nd,
        completed,
        independent_transmissions: independent,
    })
}

/// Determines targets, distributes the request and executes the plan.
pub fn simulate_query(sc: &PreparedScenario, query: &Query<f64>, planner: Planner, query_id: usize) -> Result<QueryRun> {
    let pq = prepare_query(sc, query)?;
    run_query(sc, &pq, planner, query_id)
}

/// Every hop must use a real window of the graph and satisfy the
/// forwarding rule.
pub fn check_transmissions(tcg: &Tcg, params: TransmitParams, hops: &[Hop]) -> Result<()> {
    for h in hops {
        let real = tcg.windows(h.from, h.to).contains(&h.window);
        if !real || !forwardable(h.send, h.window, params.t_trans) || h.arrive != h.send + params.t_trans {
            return Err(Error::Consistency(format!(
                "{} -> {} at {} violates its window [{}, {}]",
                tcg.label(h.from),
                tcg.label(h.to),
                h.send,
                h.window.begin,
                h.window.end
            )));
        }
    }
    Ok(())
}

/// Random historical queries: the region has the area's aspect ratio and is
/// placed uniformly; the period starts uniformly in `[0, sim_time - period]`
/// and the query is issued when it ends. Depends only on `seed` and the
/// query-shape settings.
pub fn generate_queries(cfg: &ScenarioConfig, seed: u64) -> Result<Vec<Query<f64>>> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let k = cfg.query_region_ratio.sqrt();
    let (w, h) = (cfg.area_width * k, cfg.area_height * k);
    let latest = cfg.sim_time - cfg.query_time_period;
    (0..cfg.query_count)
        .map(|_| {
            let x = rng.gen::<f64>() * (cfg.area_width - w);
            let y = rng.gen::<f64>() * (cfg.area_height - h);
            let t0 = rng.gen::<f64>() * latest;
            let t1 = t0 + cfg.query_time_period;
            Query::new(t0, t1, Region::new(x, y, x + w, y + h)?, t1)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{worked_example, worked_example_params};

    fn example() -> PreparedScenario {
        let g = worked_example();
        let g0 = g.require("g0").unwrap();
        PreparedScenario::from_tcg(g, g0, worked_example_params(), Micros::ZERO)
    }

    #[test]
    fn worked_example_instant_requests() {
        let sc = example();
        let targets: Vec<NodeId> = ["u1", "u2", "u3"].iter().map(|l| sc.tcg.require(l).unwrap()).collect();
        let pq = prepare_targets(&sc, &targets, Micros::ZERO, RequestModel::Instant).unwrap();
        let e = run_query(&sc, &pq, Planner::Esta, 0).unwrap();
        assert_eq!((e.metrics.delay_s, e.metrics.energy_units), (6.1, 7.0));
        let b = run_query(&sc, &pq, Planner::Bsta, 0).unwrap();
        assert_eq!((b.metrics.delay_s, b.metrics.energy_units), (6.1, 9.0));
        assert_eq!(b.independent_transmissions, 11);
    }

    #[test]
    fn empty_query_costs_nothing() {
        let sc = example();
        let pq = prepare_targets(&sc, &[], Micros::ZERO, RequestModel::Routed).unwrap();
        let r = run_query(&sc, &pq, Planner::Esta, 3).unwrap();
        assert_eq!((r.metrics.n_targets, r.metrics.delay_s, r.metrics.energy_units), (0, 0.0, 0.0));
    }

    #[test]
    fn config_validation() {
        assert!(ScenarioConfig::default().validate().is_ok());
        let bad = ScenarioConfig { query_region_ratio: 1.5, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = ScenarioConfig { area_width: 100.0, ..Default::default() };
        assert!(matches!(generate_scenario(&bad), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn queries_depend_only_on_seed() {
        let cfg = ScenarioConfig { query_count: 5, ..Default::default() };
        let a = generate_queries(&cfg, 9).unwrap();
        let other = ScenarioConfig { comm_range: 300.0, rng_seed: 4, ..cfg.clone() };
        assert_eq!(a, generate_queries(&other, 9).unwrap());
        assert_ne!(a, generate_queries(&cfg, 10).unwrap());
        for q in &a {
            assert_eq!(q.issue_time, q.t_end);
            assert!(q.region.x_max <= 1200.0 && q.region.y_max <= 1300.0);
        }
    }
}
