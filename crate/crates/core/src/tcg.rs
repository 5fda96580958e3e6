//! Topology change graph: timed communication windows between node pairs.

use std::collections::HashMap;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::time::Micros;
use crate::trajectory::Trajectory;

/// Dense node handle. Ordering follows the graph's declaration order and is
/// the tie-break order used by every planner.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub u32);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// Closed contact interval `[begin, end]`.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Window {
    pub begin: Micros,
    pub end: Micros,
}

impl Window {
    pub fn new(begin: Micros, end: Micros) -> Result<Self> {
        if begin >= end {
            return Err(Error::InvalidArgument(format!("window [{begin}, {end}] is empty")));
        }
        Ok(Window { begin, end })
    }

    pub fn secs(begin: f64, end: f64) -> Result<Self> {
        Window::new(Micros::from_secs_f64(begin), Micros::from_secs_f64(end))
    }

    fn overlaps(&self, other: &Window) -> bool {
        self.begin <= other.end && other.begin <= self.end
    }
}

/// Undirected edge `<a, b, t_begin, t_end>`.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct TcgEdge {
    pub a: NodeId,
    pub b: NodeId,
    pub window: Window,
}

impl TcgEdge {
    pub fn other(&self, n: NodeId) -> NodeId {
        if self.a == n {
            self.b
        } else {
            self.a
        }
    }
}

#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ContactMode {
    /// One edge per maximal in-range run.
    #[default]
    Intervals,
    /// One edge per pair spanning the first contact to the last.
    Hull,
}

impl std::str::FromStr for ContactMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "intervals" => Ok(ContactMode::Intervals),
            "hull" => Ok(ContactMode::Hull),
            other => Err(Error::InvalidArgument(format!("unknown contact mode {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct Tcg {
    labels: Vec<String>,
    index: HashMap<String, NodeId>,
    edges: Vec<TcgEdge>,
    /// node -> incident edge indices, sorted by (neighbor, begin)
    adjacency: Vec<Vec<usize>>,
}

impl Tcg {
    pub fn new<I, L>(labels: I) -> Result<Self>
    where
        I: IntoIterator<Item = L>,
        L: Into<String>,
    {
        let mut tcg = Tcg::default();
        for l in labels {
            let l = l.into();
            let id = NodeId(tcg.labels.len() as u32);
            if tcg.index.insert(l.clone(), id).is_some() {
                return Err(Error::InvalidArgument(format!("duplicate node id {l:?}")));
            }
            tcg.labels.push(l);
            tcg.adjacency.push(Vec::new());
        }
        Ok(tcg)
    }

    /// Adds an edge. Parallel edges must not overlap in time.
    pub fn add_edge(&mut self, a: NodeId, b: NodeId, window: Window) -> Result<()> {
        if a == b {
            return Err(Error::InvalidArgument(format!("self edge on {:?}", self.label(a))));
        }
        if a.index() >= self.labels.len() || b.index() >= self.labels.len() {
            return Err(Error::UnknownNode(format!("{a} / {b}")));
        }
        if window.begin >= window.end {
            return Err(Error::InvalidArgument("edge window must have t_begin < t_end".into()));
        }
        if self.windows(a, b).iter().any(|w| w.overlaps(&window)) {
            return Err(Error::InvalidArgument(format!(
                "overlapping parallel windows between {:?} and {:?}",
                self.label(a),
                self.label(b)
            )));
        }
        let ix = self.edges.len();
        self.edges.push(TcgEdge { a, b, window });
        for n in [a, b] {
            let edges = &self.edges;
            let adj = &mut self.adjacency[n.index()];
            let key = |e: usize| (edges[e].other(n), edges[e].window.begin);
            let pos = adj.partition_point(|&e| key(e) < key(ix));
            adj.insert(pos, ix);
        }
        Ok(())
    }

    pub fn add_edge_by_label(&mut self, a: &str, b: &str, window: Window) -> Result<()> {
        let (a, b) = (self.require(a)?, self.require(b)?);
        self.add_edge(a, b, window)
    }

    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> {
        (0..self.labels.len() as u32).map(NodeId)
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, n: NodeId) -> &str {
        &self.labels[n.index()]
    }

    pub fn node(&self, label: &str) -> Option<NodeId> {
        self.index.get(label).copied()
    }

    pub fn require(&self, label: &str) -> Result<NodeId> {
        self.node(label).ok_or_else(|| Error::UnknownNode(label.to_owned()))
    }

    pub fn edges(&self) -> &[TcgEdge] {
        &self.edges
    }

    /// Incident `(neighbor, window)` pairs, ordered by neighbor then begin.
    pub fn incident(&self, n: NodeId) -> impl Iterator<Item = (NodeId, Window)> + '_ {
        self.adjacency[n.index()].iter().map(move |&e| {
            let edge = &self.edges[e];
            (edge.other(n), edge.window)
        })
    }

    /// Distinct neighbors in id order.
    pub fn neighbors(&self, n: NodeId) -> Vec<NodeId> {
        let mut out: Vec<NodeId> = self.incident(n).map(|(m, _)| m).collect();
        out.dedup();
        out
    }

    /// All contact windows between `a` and `b`, sorted by begin.
    pub fn windows(&self, a: NodeId, b: NodeId) -> Vec<Window> {
        if a == b || a.index() >= self.labels.len() {
            return Vec::new();
        }
        self.incident(a).filter(|(m, _)| *m == b).map(|(_, w)| w).collect()
    }

    /// Label-based form of [`Tcg::windows`]; unknown labels yield nothing.
    pub fn edge_window(&self, a: &str, b: &str) -> Vec<(Micros, Micros)> {
        match (self.node(a), self.node(b)) {
            (Some(a), Some(b)) => self.windows(a, b).into_iter().map(|w| (w.begin, w.end)).collect(),
            _ => Vec::new(),
        }
    }
}

/// Ground-station description: a fixed position with an id.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundStation<S = f64> {
    pub uav_id: String,
    pub x: S,
    pub y: S,
}

#[derive(Clone, Debug)]
pub struct ContactOptions<S = f64> {
    pub comm_range: S,
    pub t0: Micros,
    pub t1: Micros,
    pub dt: Micros,
    pub mode: ContactMode,
}

impl<S: Scalar> ContactOptions<S> {
    pub fn new(comm_range: S, t0: Micros, t1: Micros) -> Self {
        ContactOptions { comm_range, t0, t1, dt: Micros::from_millis(100), mode: ContactMode::Intervals }
    }
}

/// Samples pairwise distances every `dt` over `[t0, t1]` and turns maximal
/// in-range runs into windows. Nodes are the trajectories in order followed by
/// the ground station.
pub fn build_tcg<S: Scalar>(
    trajs: &[Trajectory<S>],
    ground_station: &GroundStation<S>,
    opts: &ContactOptions<S>,
) -> Result<Tcg> {
    if opts.dt <= Micros::ZERO {
        return Err(Error::InvalidArgument("dt must be positive".into()));
    }
    if opts.t0 >= opts.t1 {
        return Err(Error::InvalidArgument("horizon needs t0 < t1".into()));
    }
    if !(opts.comm_range > S::zero()) {
        return Err(Error::InvalidArgument("comm_range must be positive".into()));
    }

    let gs = Trajectory::stationary(ground_station.uav_id.clone(), ground_station.x, ground_station.y);
    let all: Vec<&Trajectory<S>> = trajs.iter().chain(std::iter::once(&gs)).collect();
    let mut tcg = Tcg::new(all.iter().map(|t| t.uav_id().to_owned()))?;

    let mut times = Vec::new();
    let mut t = opts.t0;
    while t <= opts.t1 {
        times.push(t);
        t += opts.dt;
    }
    if *times.last().expect("t0 <= t1") < opts.t1 {
        times.push(opts.t1);
    }
    let tsecs: Vec<S> = times.iter().map(|t| t.as_secs()).collect();
    let positions: Vec<Vec<(S, S)>> =
        all.par_iter().map(|tr| tsecs.iter().map(|&t| tr.position_at(t)).collect()).collect();

    let r2 = opts.comm_range * opts.comm_range;
    let n = all.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let runs: Vec<Vec<Window>> = pairs
        .par_iter()
        .map(|&(i, j)| contact_runs(&positions[i], &positions[j], &times, r2))
        .collect();

    for (&(i, j), runs) in pairs.iter().zip(runs) {
        let (a, b) = (NodeId(i as u32), NodeId(j as u32));
        match opts.mode {
            ContactMode::Intervals => {
                for w in runs {
                    tcg.add_edge(a, b, w)?;
                }
            }
            ContactMode::Hull => {
                if let (Some(first), Some(last)) = (runs.first(), runs.last()) {
                    tcg.add_edge(a, b, Window { begin: first.begin, end: last.end })?;
                }
            }
        }
    }
    Ok(tcg)
}

fn contact_runs<S: Scalar>(pa: &[(S, S)], pb: &[(S, S)], times: &[Micros], r2: S) -> Vec<Window> {
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    let close = |k: usize, s: usize, out: &mut Vec<Window>| {
        // single-sample touches carry no duration
        if times[s] < times[k] {
            out.push(Window { begin: times[s], end: times[k] });
        }
    };
    for k in 0..times.len() {
        let (dx, dy) = (pa[k].0 - pb[k].0, pa[k].1 - pb[k].1);
        let in_range = dx * dx + dy * dy <= r2;
        match (in_range, start) {
            (true, None) => start = Some(k),
            (false, Some(s)) => {
                close(k - 1, s, &mut out);
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        close(times.len() - 1, s, &mut out);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajectory::Waypoint;

    fn gs(x: f64) -> GroundStation<f64> {
        GroundStation { uav_id: "g0".into(), x, y: 0.0 }
    }

    fn opts(t1: i64) -> ContactOptions<f64> {
        ContactOptions::new(200.0, Micros::ZERO, Micros::from_whole_secs(t1))
    }

    #[test]
    fn stationary_pairs() {
        let near = [Trajectory::stationary("a", 50.0, 0.0)];
        let tcg = build_tcg(&near, &gs(0.0), &opts(10)).unwrap();
        assert_eq!(
            tcg.edge_window("a", "g0"),
            vec![(Micros::ZERO, Micros::from_whole_secs(10))]
        );
        let far = [Trajectory::stationary("a", 500.0, 0.0)];
        let tcg = build_tcg(&far, &gs(0.0), &opts(10)).unwrap();
        assert!(tcg.edges().is_empty());
    }

    #[test]
    fn approaching_node_contact_begins_at_closed_form_time() {
        // B starts 300 m out and closes at 10 m/s; range 200 m => contact at t = 10 s
        let b = Trajectory::new(
            "b",
            vec![Waypoint::new(0.0, 300.0, 0.0), Waypoint::new(60.0, -300.0, 0.0)],
        )
        .unwrap();
        let o = opts(60);
        let tcg = build_tcg(&[b], &gs(0.0), &o).unwrap();
        let w = tcg.edge_window("b", "g0");
        assert_eq!(w.len(), 1);
        let begin = w[0].0.as_secs_f64();
        assert!((begin - 10.0).abs() <= o.dt.as_secs_f64() + 1e-9, "begin {begin}");
        // leaves range when x = -200 m, i.e. t = 50 s
        assert!((w[0].1.as_secs_f64() - 50.0).abs() <= o.dt.as_secs_f64() + 1e-9);
    }

    #[test]
    fn hull_versus_intervals() {
        // in range (x <= 200) over [0.5, 2.5] and [4.5, 6.5]
        let w = |t: f64, x: f64| Waypoint::new(t, x, 0.0);
        let b = Trajectory::new(
            "b",
            vec![w(0.0, 300.0), w(1.0, 100.0), w(2.0, 100.0), w(3.0, 300.0), w(4.0, 300.0), w(5.0, 100.0), w(6.0, 100.0), w(7.0, 300.0)],
        )
        .unwrap();
        let mut o = opts(8);
        let tcg = build_tcg(std::slice::from_ref(&b), &gs(0.0), &o).unwrap();
        let s = |x: f64| Micros::from_secs_f64(x);
        assert_eq!(tcg.edge_window("b", "g0"), vec![(s(0.5), s(2.5)), (s(4.5), s(6.5))]);
        o.mode = ContactMode::Hull;
        let tcg = build_tcg(&[b], &gs(0.0), &o).unwrap();
        assert_eq!(tcg.edge_window("b", "g0"), vec![(s(0.5), s(6.5))]);
    }

    #[test]
    fn symmetric_and_no_self_windows() {
        let mut t = Tcg::new(["a", "b"]).unwrap();
        t.add_edge_by_label("a", "b", Window::secs(0.0, 2.0).unwrap()).unwrap();
        t.add_edge_by_label("b", "a", Window::secs(3.0, 4.0).unwrap()).unwrap();
        assert_eq!(t.edge_window("a", "b"), t.edge_window("b", "a"));
        assert_eq!(t.edge_window("a", "b").len(), 2);
        assert!(t.edge_window("a", "a").is_empty());
        assert!(t.edge_window("a", "zz").is_empty());
        assert_eq!(t.neighbors(t.node("a").unwrap()), vec![t.node("b").unwrap()]);
    }

    #[test]
    fn rejects_invalid_edges() {
        let mut t = Tcg::new(["a", "b"]).unwrap();
        let (a, b) = (t.node("a").unwrap(), t.node("b").unwrap());
        assert!(t.add_edge(a, a, Window::secs(0.0, 1.0).unwrap()).is_err());
        assert!(Window::secs(2.0, 2.0).is_err());
        t.add_edge(a, b, Window::secs(0.0, 2.0).unwrap()).unwrap();
        assert!(t.add_edge(a, b, Window::secs(1.0, 3.0).unwrap()).is_err());
        assert!(Tcg::new(["x", "x"]).is_err());
    }

    #[test]
    fn bad_options() {
        let a = [Trajectory::stationary("a", 0.0, 0.0)];
        let mut o = opts(10);
        o.dt = Micros::ZERO;
        assert!(build_tcg(&a, &gs(0.0), &o).is_err());
        let o = ContactOptions::new(0.0, Micros::ZERO, Micros::from_whole_secs(1));
        assert!(build_tcg(&a, &gs(0.0), &o).is_err());
    }
}
