//! Spatial-temporal range aggregation for UAV networks.
//!
//! The pipeline: pick the UAVs whose planned paths cross a query's region and
//! period ([`trajectory`]), turn all trajectories into timed contact windows
//! ([`tcg`]), compute earliest store-carry-forward deliveries ([`spa`]), and
//! plan result collection either as an aggregation tree ([`plan::stat`]) or as
//! merged shortest paths ([`plan::bsta`]). [`sim`] generates scenarios and
//! replays plans; [`io`] reads and writes the JSON formats.
//!
//! The geometric layer is generic over `f32`/`f64`; routing time is always
//! integer microseconds ([`Micros`]).

pub mod energy;
pub mod error;
pub mod fixtures;
pub mod io;
pub mod plan;
pub mod scalar;
pub mod sim;
pub mod spa;
pub mod tcg;
pub mod time;
pub mod trajectory;

pub use energy::{EnergyMode, EnergyModel};
pub use error::{Error, Result};
pub use plan::bsta::{plan_bsta, replay_bsta, BstaPlan, BstaReplay};
pub use plan::stat::{build_stat, AggregationTree};
pub use plan::Planner;
pub use scalar::Scalar;
pub use spa::{shortest_paths, user_query_delay, SpaTable, TransmitParams};
pub use tcg::{build_tcg, ContactMode, ContactOptions, GroundStation, NodeId, Tcg, Window};
pub use time::Micros;
pub use trajectory::{determine_targets, AggregationOp, Query, Region, Trajectory, Waypoint};

pub type Trajectory64 = Trajectory<f64>;
pub type Trajectory32 = Trajectory<f32>;
pub type Region64 = Region<f64>;
pub type Region32 = Region<f32>;
pub type Query64 = Query<f64>;
pub type Query32 = Query<f32>;
pub type Waypoint64 = Waypoint<f64>;
pub type Waypoint32 = Waypoint<f32>;
