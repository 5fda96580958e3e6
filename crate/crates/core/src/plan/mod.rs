//! Aggregation planners: the set-cover driven tree and the shortest-path
//! baseline.

pub mod bsta;
pub mod stat;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::spa::Hop;
use crate::tcg::NodeId;

/// Which planner produced a plan or metric row.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Planner {
    Esta,
    Bsta,
}

impl Planner {
    pub fn as_str(self) -> &'static str {
        match self {
            Planner::Esta => "ESTA",
            Planner::Bsta => "BSTA",
        }
    }
}

impl std::fmt::Display for Planner {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Planner {
    type Err = crate::Error;
    fn from_str(s: &str) -> crate::Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "ESTA" => Ok(Planner::Esta),
            "BSTA" => Ok(Planner::Bsta),
            _ => Err(crate::Error::InvalidArgument(format!("unknown planner {s:?}"))),
        }
    }
}

/// Nested `stat-tree/1` vertex.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeNodeExport {
    pub node: String,
    pub deadline: crate::Micros,
    pub targets: Vec<String>,
    pub children: Vec<TreeNodeExport>,
}

/// `stat-tree/1` document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeExport {
    pub schema: String,
    pub planner: Planner,
    pub t_d: crate::Micros,
    pub t_nd: crate::Micros,
    pub fallback: Vec<String>,
    pub root: TreeNodeExport,
}

impl TreeExport {
    pub const SCHEMA: &'static str = "stat-tree/1";
}

/// One packet transmission and the target results it carries.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transmission {
    pub hop: Hop,
    pub carried: BTreeSet<NodeId>,
}
