//! Parameter sweeps over generated scenarios.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::plan::Planner;
use crate::sim::{generate_queries, prepare_query, run_query, PreparedScenario, ScenarioConfig};

pub const SUMMARY_SCHEMA: &str = "stat-summary/1";

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVar {
    RegionRatio,
    TimePeriod,
    QueryCount,
    UavSpeed,
    CommRange,
    Zeta,
}

impl SweepVar {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepVar::RegionRatio => "region_ratio",
            SweepVar::TimePeriod => "time_period",
            SweepVar::QueryCount => "query_count",
            SweepVar::UavSpeed => "uav_speed",
            SweepVar::CommRange => "comm_range",
            SweepVar::Zeta => "zeta",
        }
    }

    /// `cfg` with this variable set to `value`.
    pub fn apply(self, cfg: &ScenarioConfig, value: f64) -> Result<ScenarioConfig> {
        let mut c = cfg.clone();
        match self {
            SweepVar::RegionRatio => c.query_region_ratio = value,
            SweepVar::TimePeriod => c.query_time_period = value,
            SweepVar::QueryCount => {
                if value < 0.0 || value.fract() != 0.0 {
                    return Err(Error::InvalidArgument(format!("query_count must be a whole number, got {value}")));
                }
                c.query_count = value as usize;
            }
            SweepVar::UavSpeed => c.uav_speed = value,
            SweepVar::CommRange => c.comm_range = value,
            SweepVar::Zeta => c.zeta = value,
        }
        c.validate()?;
        Ok(c)
    }
}

impl std::fmt::Display for SweepVar {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for SweepVar {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.replace('-', "_").as_str() {
            "region_ratio" | "query_region_ratio" => SweepVar::RegionRatio,
            "time_period" | "query_time_period" => SweepVar::TimePeriod,
            "query_count" => SweepVar::QueryCount,
            "uav_speed" => SweepVar::UavSpeed,
            "comm_range" => SweepVar::CommRange,
            "zeta" => SweepVar::Zeta,
            _ => return Err(Error::InvalidArgument(format!("unknown sweep variable {s:?}"))),
        })
    }
}

/// One CSV row. Infeasible queries (some target can never reach the ground
/// station) leave the measurement columns empty.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub planner: Planner,
    pub sweep_var: SweepVar,
    pub sweep_value: f64,
    pub seed: u64,
    pub query_id: usize,
    pub n_targets: usize,
    pub delay_s: Option<f64>,
    pub energy_units: Option<f64>,
    pub request_energy_units: Option<f64>,
    pub fallback_count: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PlannerStats {
    pub queries: usize,
    pub infeasible: usize,
    pub mean_delay_s: f64,
    pub mean_energy_units: f64,
    pub mean_request_energy_units: f64,
    pub queries_with_fallback: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub sweep_value: f64,
    pub planners: BTreeMap<Planner, PlannerStats>,
    /// Mean ESTA energy over mean BSTA energy, when both ran.
    pub esta_over_bsta_energy: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub schema: String,
    pub sweep_var: SweepVar,
    pub seeds: Vec<u64>,
    pub base_config: ScenarioConfig,
    pub points: Vec<SweepPoint>,
}

#[derive(Clone, Debug)]
pub struct ExperimentResult {
    pub rows: Vec<MetricsRow>,
    pub summary: Summary,
}

impl ExperimentResult {
    pub fn csv_string(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.rows {
            w.serialize(r)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv is utf-8"))
    }

    pub fn summary_json(&self) -> String {
        serde_json::to_string_pretty(&self.summary).expect("summary serializes") + "\n"
    }

    pub fn write(&self, csv_path: &Path, summary_path: &Path) -> Result<()> {
        std::fs::File::create(csv_path)?.write_all(self.csv_string()?.as_bytes())?;
        std::fs::write(summary_path, self.summary_json())?;
        Ok(())
    }

    pub fn point(&self, value: f64) -> Option<&SweepPoint> {
        self.summary.points.iter().find(|p| p.sweep_value == value)
    }
}

/// Runs `query_count` queries per (value, seed) for every planner. Work is
/// spread over threads; output order is value, seed, query, planner.
pub fn run_experiment(
    cfg: &ScenarioConfig,
    var: SweepVar,
    values: &[f64],
    planners: &[Planner],
    seeds: &[u64],
) -> Result<ExperimentResult> {
    if values.is_empty() || seeds.is_empty() || planners.is_empty() {
        return Err(Error::InvalidArgument("sweep needs values, seeds and planners".into()));
    }
    let cells: Vec<(f64, u64)> = values.iter().flat_map(|&v| seeds.iter().map(move |&s| (v, s))).collect();
    let per_cell: Vec<Vec<MetricsRow>> = cells
        .par_iter()
        .map(|&(value, seed)| run_cell(cfg, var, value, seed, planners))
        .collect::<Result<_>>()?;
    let rows: Vec<MetricsRow> = per_cell.into_iter().flatten().collect();

    let points = values
        .iter()
        .map(|&v| {
            let mut planners_out = BTreeMap::new();
            for &p in planners {
                planners_out.insert(p, stats(rows.iter().filter(|r| r.sweep_value == v && r.planner == p)));
            }
            let ratio = match (planners_out.get(&Planner::Esta), planners_out.get(&Planner::Bsta)) {
                (Some(e), Some(b)) if b.mean_energy_units > 0.0 => Some(e.mean_energy_units / b.mean_energy_units),
                _ => None,
            };
            SweepPoint { sweep_value: v, planners: planners_out, esta_over_bsta_energy: ratio }
        })
        .collect();

    Ok(ExperimentResult {
        rows,
        summary: Summary {
            schema: SUMMARY_SCHEMA.into(),
            sweep_var: var,
            seeds: seeds.to_vec(),
            base_config: cfg.clone(),
            points,
        },
    })
}

fn run_cell(cfg: &ScenarioConfig, var: SweepVar, value: f64, seed: u64, planners: &[Planner]) -> Result<Vec<MetricsRow>> {
    let mut c = var.apply(cfg, value)?;
    c.rng_seed = seed;
    let sc = PreparedScenario::from_config(&c)?;
    let queries = generate_queries(&c, seed)?;
    let per_query: Vec<Vec<MetricsRow>> = queries
        .par_iter()
        .enumerate()
        .map(|(qid, q)| {
            let base = |p: Planner, n: usize| MetricsRow {
                planner: p,
                sweep_var: var,
                sweep_value: value,
                seed,
                query_id: qid,
                n_targets: n,
                delay_s: None,
                energy_units: None,
                request_energy_units: None,
                fallback_count: None,
            };
            let pq = match prepare_query(&sc, q) {
                Ok(pq) => pq,
                Err(Error::Infeasible { .. }) => {
                    let n = crate::trajectory::determine_targets(&sc.trajectories, q, None)?.len();
                    return Ok(planners.iter().map(|&p| base(p, n)).collect());
                }
                Err(e) => return Err(e),
            };
            planners
                .iter()
                .map(|&p| match run_query(&sc, &pq, p, qid) {
                    Ok(run) => Ok(MetricsRow {
                        delay_s: Some(run.metrics.delay_s),
                        energy_units: Some(run.metrics.energy_units),
                        request_energy_units: Some(run.metrics.request_energy_units),
                        fallback_count: Some(run.metrics.fallback_count),
                        ..base(p, run.metrics.n_targets)
                    }),
                    Err(Error::Infeasible { .. }) => Ok(base(p, pq.t_gen.len())),
                    Err(e) => Err(e),
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok(per_query.into_iter().flatten().collect())
}

fn stats<'a>(rows: impl Iterator<Item = &'a MetricsRow>) -> PlannerStats {
    let mut s = PlannerStats::default();
    let (mut d, mut e, mut r) = (0.0, 0.0, 0.0);
    for row in rows {
        s.queries += 1;
        match (row.delay_s, row.energy_units, row.request_energy_units) {
            (Some(dd), Some(ee), Some(rr)) => {
                d += dd;
                e += ee;
                r += rr;
                if row.fallback_count.unwrap_or(0) > 0 {
                    s.queries_with_fallback += 1;
                }
            }
            _ => s.infeasible += 1,
        }
    }
    let ok = (s.queries - s.infeasible) as f64;
    if ok > 0.0 {
        s.mean_delay_s = d / ok;
        s.mean_energy_units = e / ok;
        s.mean_request_energy_units = r / ok;
    }
    s
}
