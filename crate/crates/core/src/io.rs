//! Versioned JSON files: scenarios (`stat-scenario/1`) and contact graphs
//! (`stat-tcg/1`). Readers reject any other schema string.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tcg::{GroundStation, Tcg, Window};
use crate::time::Micros;
use crate::trajectory::Trajectory;

pub const SCENARIO_SCHEMA: &str = "stat-scenario/1";
pub const TCG_SCHEMA: &str = "stat-tcg/1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioFile {
    pub schema: String,
    pub uavs: Vec<Trajectory<f64>>,
    pub ground_station: GroundStation<f64>,
    pub comm_range_m: f64,
    pub link_throughput_bytes_per_s: u64,
    pub packet_size_bytes: u64,
}

impl ScenarioFile {
    pub fn new(
        uavs: Vec<Trajectory<f64>>,
        ground_station: GroundStation<f64>,
        comm_range_m: f64,
        link_throughput_bytes_per_s: u64,
        packet_size_bytes: u64,
    ) -> Self {
        ScenarioFile {
            schema: SCENARIO_SCHEMA.into(),
            uavs,
            ground_station,
            comm_range_m,
            link_throughput_bytes_per_s,
            packet_size_bytes,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        check_schema(text, SCENARIO_SCHEMA)?;
        let f: ScenarioFile = serde_json::from_str(text)?;
        if !(f.comm_range_m > 0.0) || f.link_throughput_bytes_per_s == 0 || f.packet_size_bytes == 0 {
            return Err(Error::InvalidConfig(
                "comm range, throughput and packet size must be positive".into(),
            ));
        }
        Ok(f)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json() + "\n")?;
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeRecord {
    pub a: String,
    pub b: String,
    pub t_begin: f64,
    pub t_end: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TcgFile {
    pub schema: String,
    pub nodes: Vec<String>,
    pub edges: Vec<EdgeRecord>,
    /// Ground station label; when absent, readers fall back to `"g0"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_station: Option<String>,
    /// Per-hop transmission time in seconds, if the graph fixes one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_trans_s: Option<f64>,
}

impl TcgFile {
    pub fn from_tcg(tcg: &Tcg) -> Self {
        let mut edges: Vec<EdgeRecord> = tcg
            .edges()
            .iter()
            .map(|e| EdgeRecord {
                a: tcg.label(e.a).to_owned(),
                b: tcg.label(e.b).to_owned(),
                t_begin: e.window.begin.as_secs_f64(),
                t_end: e.window.end.as_secs_f64(),
            })
            .collect();
        edges.sort_by(|x, y| {
            let key = |e: &EdgeRecord| (tcg.node(&e.a), tcg.node(&e.b), Micros::from_secs_f64(e.t_begin));
            key(x).cmp(&key(y))
        });
        TcgFile {
            schema: TCG_SCHEMA.into(),
            nodes: tcg.labels().to_vec(),
            edges,
            ground_station: None,
            t_trans_s: None,
        }
    }

    pub fn to_tcg(&self) -> Result<Tcg> {
        let mut g = Tcg::new(self.nodes.iter().cloned())?;
        for e in &self.edges {
            g.add_edge_by_label(&e.a, &e.b, Window::secs(e.t_begin, e.t_end)?)?;
        }
        Ok(g)
    }

    pub fn ground_station_label(&self) -> &str {
        self.ground_station.as_deref().unwrap_or("g0")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        check_schema(text, TCG_SCHEMA)?;
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("tcg serializes")
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json() + "\n")?;
        Ok(())
    }
}

/// Looks only at the `schema` field so a version mismatch is reported as
/// such rather than as whatever field error the new version would cause.
pub fn check_schema(text: &str, expected: &'static str) -> Result<()> {
    #[derive(Deserialize)]
    struct Probe {
        schema: Option<String>,
    }
    let probe: Probe = serde_json::from_str(text)?;
    match probe.schema {
        Some(s) if s == expected => Ok(()),
        found => Err(Error::Schema { expected, found: found.unwrap_or_default() }),
    }
}
