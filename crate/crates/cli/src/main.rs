//! `stagg`: plan, simulate and sweep range-aggregation queries over UAV
//! contact graphs.
//!
//! Exit codes: 0 ok, 1 I/O, 2 usage or bad input, 3 infeasible query,
//! 4 internal consistency failure.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use stagg::io::{ScenarioFile, TcgFile};
use stagg::sim::{
    generate_queries, prepare_query, prepare_targets, run_experiment, run_query, PreparedQuery, PreparedScenario,
    RequestModel, Scenario, ScenarioConfig, SweepVar,
};
use stagg::{build_stat, plan_bsta, replay_bsta, ContactMode, EnergyMode, Error, Micros, NodeId, Planner, TransmitParams};

#[derive(Parser)]
#[command(name = "stagg", version, about = "Spatial-temporal range aggregation for UAV networks")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Plan one query and print the aggregation tree or merged paths.
    Plan(PlanArgs),
    /// Run queries end to end with both planners.
    Simulate(SimulateArgs),
    /// Sweep one parameter over generated scenarios; writes CSV + summary JSON.
    Sweep(SweepArgs),
    /// Write the contact graph of a scenario as `stat-tcg/1` JSON.
    ExportTcg(ExportArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum EnergyArg {
    Unit,
    LinearInBytes,
}

/// Overrides for every scenario setting.
#[derive(Args, Default)]
struct ConfigArgs {
    #[arg(long)]
    area_width: Option<f64>,
    #[arg(long)]
    area_height: Option<f64>,
    #[arg(long)]
    n_search_uavs: Option<usize>,
    #[arg(long)]
    n_ferry_uavs: Option<usize>,
    /// m/s
    #[arg(long)]
    uav_speed: Option<f64>,
    /// m
    #[arg(long)]
    comm_range: Option<f64>,
    /// bytes
    #[arg(long)]
    packet_size: Option<u64>,
    /// bytes/s
    #[arg(long)]
    link_throughput: Option<u64>,
    /// s
    #[arg(long)]
    sim_time: Option<f64>,
    /// s
    #[arg(long)]
    query_time_period: Option<f64>,
    #[arg(long)]
    query_region_ratio: Option<f64>,
    #[arg(long, visible_alias = "queries")]
    query_count: Option<usize>,
    /// Deadline slack, s.
    #[arg(long)]
    zeta: Option<f64>,
    #[arg(long, visible_alias = "seed")]
    rng_seed: Option<u64>,
    #[arg(long)]
    contact_mode: Option<ContactMode>,
    /// Contact sampling step, s.
    #[arg(long, visible_alias = "dt")]
    contact_dt: Option<f64>,
    #[arg(long, value_enum)]
    energy_mode: Option<EnergyArg>,
    #[arg(long)]
    e_tx: Option<f64>,
    #[arg(long)]
    e_rx: Option<f64>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<ScenarioConfig, Error> {
        let mut c = ScenarioConfig::default();
        macro_rules! set {
            ($($f:ident),*) => { $( if let Some(v) = self.$f { c.$f = v; } )* };
        }
        set!(
            area_width, area_height, n_search_uavs, n_ferry_uavs, uav_speed, comm_range, packet_size,
            link_throughput, sim_time, query_time_period, query_region_ratio, query_count, zeta, rng_seed,
            contact_mode, contact_dt
        );
        if let Some(m) = self.energy_mode {
            c.energy.mode = match m {
                EnergyArg::Unit => EnergyMode::Unit,
                EnergyArg::LinearInBytes => EnergyMode::LinearInBytes,
            };
        }
        if let Some(v) = self.e_tx {
            c.energy.e_tx = v;
        }
        if let Some(v) = self.e_rx {
            c.energy.e_rx = v;
        }
        c.validate()?;
        Ok(c)
    }
}

/// Where the contact graph comes from. Without either flag a scenario is
/// generated from the settings.
#[derive(Args)]
struct Source {
    /// `stat-scenario/1` trajectories.
    #[arg(long, conflicts_with = "tcg")]
    scenario: Option<PathBuf>,
    /// `stat-tcg/1` contact graph.
    #[arg(long)]
    tcg: Option<PathBuf>,
    /// Ground station label (graph input only).
    #[arg(long, requires = "tcg")]
    g0: Option<String>,
    /// Per-hop transmission time in s (graph input only).
    #[arg(long, requires = "tcg")]
    t_trans: Option<f64>,
}

#[derive(Args)]
struct PlanArgs {
    #[command(flatten)]
    source: Source,
    #[command(flatten)]
    cfg: ConfigArgs,
    /// Comma-separated target labels.
    #[arg(long, value_delimiter = ',', conflicts_with = "query")]
    targets: Vec<String>,
    /// Plan the n-th generated query instead of explicit targets.
    #[arg(long)]
    query: Option<usize>,
    /// Request issue time, s. Targets given explicitly on a graph hold the
    /// request from this time on.
    #[arg(long, default_value_t = 0.0)]
    issue_time: f64,
    #[arg(long, default_value = "esta")]
    planner: Planner,
    /// Write the plan as `stat-tree/1` JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    source: Source,
    #[command(flatten)]
    cfg: ConfigArgs,
    /// Run a single query on these targets instead of generated queries.
    #[arg(long, value_delimiter = ',')]
    targets: Vec<String>,
    #[arg(long, default_value_t = 0.0)]
    issue_time: f64,
    /// Per-query metrics as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    cfg: ConfigArgs,
    /// region_ratio, time_period, query_count, uav_speed, comm_range or zeta.
    #[arg(long)]
    var: SweepVar,
    #[arg(long, value_delimiter = ',', required = true)]
    values: Vec<f64>,
    /// Replications; defaults to the single `--seed`.
    #[arg(long, value_delimiter = ',')]
    seeds: Vec<u64>,
    #[arg(long, value_delimiter = ',', default_value = "esta,bsta")]
    planners: Vec<Planner>,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct ExportArgs {
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[command(flatten)]
    cfg: ConfigArgs,
    /// Defaults to standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Infeasible { .. } => 3,
        Error::Consistency(_) => 4,
        Error::Io(_) | Error::Csv(_) => 1,
        _ => 2,
    }
}

fn header(cmd: &str, cfg: &ScenarioConfig, extra: &[(&str, String)]) {
    println!("# stagg {cmd}");
    for (k, v) in extra {
        println!("# {k} = {v}");
    }
    for line in cfg.describe().lines() {
        println!("# {line}");
    }
}

struct Loaded {
    sc: PreparedScenario,
    from_graph: bool,
    extra: Vec<(&'static str, String)>,
}

fn load(source: &Source, cfg: &mut ScenarioConfig) -> Result<Loaded, Error> {
    if let Some(path) = &source.tcg {
        let file = TcgFile::read(path)?;
        let tcg = file.to_tcg()?;
        let label = source.g0.clone().unwrap_or_else(|| file.ground_station_label().to_owned());
        let g0 = tcg.require(&label)?;
        let params = match source.t_trans.or(file.t_trans_s) {
            Some(s) => TransmitParams::new(Micros::from_secs_f64(s))?,
            None => cfg.transmit_params()?,
        };
        let mut sc = PreparedScenario::from_tcg(tcg, g0, params, Micros::from_secs_f64(cfg.zeta));
        sc.energy = cfg.energy;
        sc.packet_bytes = cfg.packet_size;
        let extra = vec![
            ("tcg", path.display().to_string()),
            ("g0", label),
            ("t_trans_s", params.t_trans.to_string()),
        ];
        return Ok(Loaded { sc, from_graph: true, extra });
    }
    if let Some(path) = &source.scenario {
        let sc = scenario_from_file(path, cfg)?;
        let extra = vec![("scenario", path.display().to_string())];
        return Ok(Loaded { sc: PreparedScenario::from_scenario(cfg, sc)?, from_graph: false, extra });
    }
    Ok(Loaded { sc: PreparedScenario::from_config(cfg)?, from_graph: false, extra: Vec::new() })
}

/// Reads trajectories; link settings in the file replace those in `cfg`.
fn scenario_from_file(path: &Path, cfg: &mut ScenarioConfig) -> Result<Scenario, Error> {
    let f = ScenarioFile::read(path)?;
    cfg.comm_range = f.comm_range_m;
    cfg.link_throughput = f.link_throughput_bytes_per_s;
    cfg.packet_size = f.packet_size_bytes;
    cfg.validate()?;
    Ok(Scenario { uavs: f.uavs, ground_station: f.ground_station, horizon: cfg.horizon() })
}

fn explicit_targets(l: &Loaded, labels: &[String], issue_time: f64) -> Result<PreparedQuery, Error> {
    let ids: Vec<NodeId> = labels.iter().map(|s| l.sc.tcg.require(s.trim())).collect::<Result<_, _>>()?;
    let model = if l.from_graph { RequestModel::Instant } else { RequestModel::Routed };
    prepare_targets(&l.sc, &ids, Micros::from_secs_f64(issue_time), model)
}

fn cmd_plan(a: &PlanArgs) -> Result<(), Error> {
    let mut cfg = a.cfg.resolve()?;
    let l = load(&a.source, &mut cfg)?;
    header("plan", &cfg, &l.extra);
    let pq = match (a.query, a.targets.is_empty()) {
        (Some(i), _) if !l.from_graph => {
            let qs = generate_queries(&cfg, cfg.rng_seed)?;
            let q = qs.get(i).ok_or_else(|| {
                Error::InvalidArgument(format!("query {i} out of range, {} generated", qs.len()))
            })?;
            prepare_query(&l.sc, q)?
        }
        (Some(_), _) => return Err(Error::InvalidArgument("--query needs a scenario, not a graph".into())),
        (None, false) => explicit_targets(&l, &a.targets, a.issue_time)?,
        (None, true) => return Err(Error::InvalidArgument("give --targets or --query".into())),
    };
    let (g, g0) = (&l.sc.tcg, l.sc.g0);
    let labels: Vec<&str> = pq.t_gen.keys().map(|&n| g.label(n)).collect();
    println!("targets: {}", labels.join(","));

    let export = match a.planner {
        Planner::Esta => {
            let tree = build_stat(g, g0, &pq.t_gen, l.sc.zeta, l.sc.params)?;
            let r = tree.replay(g, l.sc.params)?;
            print!("{}", tree.render(g));
            println!("tree: {}", tree.canonical(g));
            println!("t_d = {} s", tree.t_d);
            println!("t_nd = {} s", tree.t_nd);
            println!("completed = {} s", r.completed);
            let fb: Vec<&str> = tree.fallback.iter().map(|&n| g.label(n)).collect();
            println!("fallback = [{}]", fb.join(","));
            println!("energy = {}", l.sc.energy.cost(r.transmissions.len(), l.sc.packet_bytes));
            tree.export(g)
        }
        Planner::Bsta => {
            let plan = plan_bsta(g, g0, &pq.t_gen, l.sc.params)?;
            let r = replay_bsta(&plan)?;
            for p in &plan.paths {
                let mut path = vec![g.label(p.target)];
                path.extend(p.hops.iter().map(|h| g.label(h.to)));
                println!("{}: {} (arrives {} s)", g.label(p.target), path.join(" -> "), p.arrival());
            }
            println!("merged: {}", r.canonical(g, g0));
            println!("t_d = {} s", plan.t_d);
            println!("t_nd = {} s", plan.t_d);
            println!("independent = {}", l.sc.energy.cost(plan.independent_transmissions(), l.sc.packet_bytes));
            println!("energy = {}", r.energy(&l.sc.energy, l.sc.packet_bytes));
            r.export(g, &plan)
        }
    };
    if let Some(out) = &a.out {
        std::fs::write(out, serde_json::to_string_pretty(&export)? + "\n")?;
    }
    Ok(())
}

fn cmd_simulate(a: &SimulateArgs) -> Result<(), Error> {
    let mut cfg = a.cfg.resolve()?;
    let l = load(&a.source, &mut cfg)?;
    header("simulate", &cfg, &l.extra);
    let prepared: Vec<Result<PreparedQuery, Error>> = if !a.targets.is_empty() {
        vec![explicit_targets(&l, &a.targets, a.issue_time)]
    } else if l.from_graph {
        return Err(Error::InvalidArgument("a graph input needs --targets".into()));
    } else {
        generate_queries(&cfg, cfg.rng_seed)?.iter().map(|q| prepare_query(&l.sc, q)).collect()
    };

    let n = prepared.len();
    let mut all = Vec::new();
    let mut sums: BTreeMap<Planner, (usize, f64, f64)> = BTreeMap::new();
    let mut infeasible = 0;
    for (i, pq) in prepared.into_iter().enumerate() {
        let pq = match pq {
            Ok(pq) => pq,
            // a single explicit query reports infeasibility through the exit code
            Err(Error::Infeasible { .. }) if n > 1 => {
                infeasible += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        for p in [Planner::Esta, Planner::Bsta] {
            let run = match run_query(&l.sc, &pq, p, i) {
                Ok(r) => r,
                Err(Error::Infeasible { .. }) if n > 1 => {
                    infeasible += 1;
                    break;
                }
                Err(e) => return Err(e),
            };
            let m = run.metrics;
            let s = sums.entry(p).or_default();
            s.0 += 1;
            s.1 += m.delay_s;
            s.2 += m.energy_units;
            if n == 1 {
                println!("{p}: targets={} delay={} s energy={} fallback={}", m.n_targets, m.delay_s, m.energy_units, m.fallback_count);
            }
            all.push(m);
        }
    }
    println!("queries = {n}, infeasible = {infeasible}");
    for (p, (n, d, e)) in &sums {
        let k = (*n).max(1) as f64;
        println!("{p}: mean delay {:.3} s, mean energy {:.3}", d / k, e / k);
    }
    if let (Some(e), Some(b)) = (sums.get(&Planner::Esta), sums.get(&Planner::Bsta)) {
        if b.2 > 0.0 {
            println!("ESTA/BSTA energy = {:.4}", e.2 / b.2);
        }
    }
    if let Some(out) = &a.out {
        std::fs::write(out, serde_json::to_string_pretty(&all)? + "\n")?;
    }
    Ok(())
}

fn cmd_sweep(a: &SweepArgs) -> Result<(), Error> {
    let cfg = a.cfg.resolve()?;
    let seeds = if a.seeds.is_empty() { vec![cfg.rng_seed] } else { a.seeds.clone() };
    let values: Vec<String> = a.values.iter().map(f64::to_string).collect();
    let seed_list: Vec<String> = seeds.iter().map(u64::to_string).collect();
    header(
        "sweep",
        &cfg,
        &[("var", a.var.to_string()), ("values", values.join(",")), ("seeds", seed_list.join(","))],
    );
    let r = run_experiment(&cfg, a.var, &a.values, &a.planners, &seeds)?;
    std::fs::create_dir_all(&a.out_dir)?;
    let (csv, json) = (a.out_dir.join("results.csv"), a.out_dir.join("summary.json"));
    r.write(&csv, &json)?;
    for p in &r.summary.points {
        let mut line = format!("{} = {}:", a.var, p.sweep_value);
        for (pl, s) in &p.planners {
            line += &format!(
                " {pl} delay {:.3} s energy {:.3} (infeasible {})",
                s.mean_delay_s, s.mean_energy_units, s.infeasible
            );
        }
        if let Some(ratio) = p.esta_over_bsta_energy {
            line += &format!(" ratio {ratio:.4}");
        }
        println!("{line}");
    }
    println!("wrote {} rows to {}", r.rows.len(), csv.display());
    println!("wrote {}", json.display());
    Ok(())
}

fn cmd_export(a: &ExportArgs) -> Result<(), Error> {
    let mut cfg = a.cfg.resolve()?;
    let sc = match &a.scenario {
        Some(p) => PreparedScenario::from_scenario(&cfg.clone(), scenario_from_file(p, &mut cfg)?)?,
        None => PreparedScenario::from_config(&cfg)?,
    };
    let mut f = TcgFile::from_tcg(&sc.tcg);
    f.ground_station = Some(sc.tcg.label(sc.g0).to_owned());
    f.t_trans_s = Some(sc.params.t_trans.as_secs_f64());
    match &a.out {
        Some(p) => {
            header("export-tcg", &cfg, &[]);
            f.write(p)?;
            println!("wrote {} nodes, {} windows to {}", f.nodes.len(), f.edges.len(), p.display());
        }
        None => println!("{}", f.to_json()),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match &cli.cmd {
        Cmd::Plan(a) => cmd_plan(a),
        Cmd::Simulate(a) => cmd_simulate(a),
        Cmd::Sweep(a) => cmd_sweep(a),
        Cmd::ExportTcg(a) => cmd_export(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
