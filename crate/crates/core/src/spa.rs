//! Earliest-delivery shortest paths over a [`Tcg`] under store-carry-forward.
//!
//! A packet held at `u` from time `t_rx` crosses window `[b, e]` towards `v`
//! iff `max(t_rx, b) + t_trans <= e`, arriving at `max(t_rx, b) + t_trans`.
//! The arrival function is non-decreasing in `t_rx`, so label setting in
//! order of arrival time is exact.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tcg::{NodeId, Tcg, Window};
use crate::time::{arrival_serde, Micros};

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct TransmitParams {
    /// Time to push one result packet across one hop.
    pub t_trans: Micros,
}

impl TransmitParams {
    pub fn new(t_trans: Micros) -> Result<Self> {
        if t_trans <= Micros::ZERO {
            return Err(Error::InvalidArgument("t_trans must be positive".into()));
        }
        Ok(TransmitParams { t_trans })
    }

    /// `packet_bytes / throughput`, rounded to the microsecond.
    pub fn from_link(packet_bytes: u64, throughput_bytes_per_s: u64) -> Result<Self> {
        if throughput_bytes_per_s == 0 {
            return Err(Error::InvalidArgument("link throughput must be positive".into()));
        }
        let us = (packet_bytes as u128 * 1_000_000 + throughput_bytes_per_s as u128 / 2)
            / throughput_bytes_per_s as u128;
        TransmitParams::new(Micros(us as i64))
    }
}

/// Window feasibility for a packet that is ready at `t_rx`.
#[inline]
pub fn forwardable(t_rx: Micros, window: Window, t_trans: Micros) -> bool {
    t_rx.max(window.begin) + t_trans <= window.end
}

/// Earliest send time through one window, if feasible.
#[inline]
pub fn send_time(t_rx: Micros, window: Window, t_trans: Micros) -> Option<Micros> {
    forwardable(t_rx, window, t_trans).then(|| t_rx.max(window.begin))
}

/// Earliest `(send, window)` from `from` to `to` for a packet ready at `ready`.
pub fn earliest_send(
    tcg: &Tcg,
    from: NodeId,
    to: NodeId,
    ready: Micros,
    t_trans: Micros,
) -> Option<(Micros, Window)> {
    // windows are disjoint and sorted, so the first feasible one is earliest
    tcg.windows(from, to).into_iter().find_map(|w| send_time(ready, w, t_trans).map(|s| (s, w)))
}

/// One scheduled transmission.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hop {
    pub from: NodeId,
    pub to: NodeId,
    pub window: Window,
    pub send: Micros,
    pub arrive: Micros,
}

/// Single-source result: earliest delivery time, predecessor and hop count
/// for every node.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpaTable {
    source: NodeId,
    t_gen: Micros,
    arrival: Vec<Option<Micros>>,
    prev: Vec<Option<(NodeId, Window)>>,
    hops: Vec<Option<u32>>,
}

impl SpaTable {
    pub fn source(&self) -> NodeId {
        self.source
    }

    pub fn t_gen(&self) -> Micros {
        self.t_gen
    }

    /// `None` means unreachable.
    pub fn arrival(&self, v: NodeId) -> Option<Micros> {
        self.arrival[v.index()]
    }

    pub fn hops(&self, v: NodeId) -> Option<u32> {
        self.hops[v.index()]
    }

    pub fn prev(&self, v: NodeId) -> Option<NodeId> {
        self.prev[v.index()].map(|(u, _)| u)
    }

    /// Node sequence `source ..= v`, or `None` when unreachable.
    pub fn path_nodes(&self, v: NodeId) -> Option<Vec<NodeId>> {
        self.arrival(v)?;
        let mut out = vec![v];
        let mut cur = v;
        while let Some((u, _)) = self.prev[cur.index()] {
            out.push(u);
            cur = u;
        }
        out.reverse();
        Some(out)
    }

    /// The prev-chain to `v` as scheduled hops, each sent as early as its
    /// window allows.
    pub fn path_hops(&self, v: NodeId, t_trans: Micros) -> Option<Vec<Hop>> {
        let nodes = self.path_nodes(v)?;
        let mut ready = self.t_gen;
        let mut out = Vec::with_capacity(nodes.len().saturating_sub(1));
        for pair in nodes.windows(2) {
            let (_, window) = self.prev[pair[1].index()].expect("prev set on path");
            let send = send_time(ready, window, t_trans)?;
            let arrive = send + t_trans;
            out.push(Hop { from: pair[0], to: pair[1], window, send, arrive });
            ready = arrive;
        }
        Some(out)
    }

    pub fn export(&self, tcg: &Tcg) -> SpaExport {
        SpaExport {
            schema: SpaExport::SCHEMA.into(),
            source: tcg.label(self.source).into(),
            t_gen: self.t_gen,
            rows: tcg
                .nodes()
                .map(|v| SpaRow {
                    node: tcg.label(v).into(),
                    t: self.arrival(v),
                    prev: self.prev(v).map(|p| tcg.label(p).into()),
                    h: self.hops(v),
                })
                .collect(),
        }
    }
}

/// `stat-spa/1` debugging dump of one table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaExport {
    pub schema: String,
    pub source: String,
    pub t_gen: Micros,
    pub rows: Vec<SpaRow>,
}

impl SpaExport {
    pub const SCHEMA: &'static str = "stat-spa/1";
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaRow {
    pub node: String,
    #[serde(rename = "T", with = "arrival_serde")]
    pub t: Option<Micros>,
    pub prev: Option<String>,
    #[serde(rename = "H")]
    pub h: Option<u32>,
}

/// Label-setting earliest delivery from `source` starting at `t_gen`.
///
/// `sink`, when given, is settled like any node but never relays (the ground
/// station consumes results). Frontier ties settle the smaller node id first;
/// equal relaxations keep the first predecessor found.
pub fn shortest_paths(
    tcg: &Tcg,
    source: NodeId,
    t_gen: Micros,
    params: TransmitParams,
    sink: Option<NodeId>,
) -> Result<SpaTable> {
    let n = tcg.node_count();
    if source.index() >= n {
        return Err(Error::InvalidArgument(format!("unknown source {source}")));
    }
    let mut table = SpaTable {
        source,
        t_gen,
        arrival: vec![None; n],
        prev: vec![None; n],
        hops: vec![None; n],
    };
    table.arrival[source.index()] = Some(t_gen);
    table.hops[source.index()] = Some(0);

    let mut settled = vec![false; n];
    let mut frontier = BinaryHeap::new();
    frontier.push(Reverse((t_gen, source)));
    let mut last_settled = Micros(i64::MIN);

    while let Some(Reverse((t_u, u))) = frontier.pop() {
        if settled[u.index()] || table.arrival[u.index()] != Some(t_u) {
            continue;
        }
        settled[u.index()] = true;
        debug_assert!(t_u >= last_settled, "settle order must be non-decreasing");
        last_settled = t_u;
        if Some(u) == sink {
            continue;
        }
        let h_u = table.hops[u.index()].expect("settled node has hops");
        for (v, window) in tcg.incident(u) {
            if settled[v.index()] {
                continue;
            }
            let Some(send) = send_time(t_u, window, params.t_trans) else {
                continue;
            };
            let cand = send + params.t_trans;
            if table.arrival[v.index()].is_none_or(|cur| cand < cur) {
                table.arrival[v.index()] = Some(cand);
                table.prev[v.index()] = Some((u, window));
                table.hops[v.index()] = Some(h_u + 1);
                frontier.push(Reverse((cand, v)));
            }
        }
    }
    Ok(table)
}

/// One table per target, computed in parallel.
pub fn tables_for(
    tcg: &Tcg,
    sources: &BTreeMap<NodeId, Micros>,
    params: TransmitParams,
    sink: Option<NodeId>,
) -> Result<BTreeMap<NodeId, SpaTable>> {
    sources
        .par_iter()
        .map(|(&s, &t_gen)| shortest_paths(tcg, s, t_gen, params, sink).map(|t| (s, t)))
        .collect()
}

/// Max over targets of the earliest delivery at `g0`.
pub fn user_query_delay<'a, I>(tcg: &Tcg, tables: I, g0: NodeId) -> Result<Micros>
where
    I: IntoIterator<Item = &'a SpaTable>,
{
    let mut worst = None::<Micros>;
    let mut unreachable = Vec::new();
    for t in tables {
        match t.arrival(g0) {
            Some(a) => worst = Some(worst.map_or(a, |w| w.max(a))),
            None => unreachable.push(tcg.label(t.source()).to_owned()),
        }
    }
    if !unreachable.is_empty() {
        return Err(Error::Infeasible { unreachable });
    }
    worst.ok_or_else(|| Error::InvalidArgument("user query delay needs at least one target".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(x: f64) -> Micros {
        Micros::from_secs_f64(x)
    }

    fn w(b: f64, e: f64) -> Window {
        Window::secs(b, e).unwrap()
    }

    #[test]
    fn forwardable_cases() {
        let tt = s(0.1);
        assert!(forwardable(s(0.1), w(3.0, 6.0), tt));
        assert_eq!(send_time(s(0.1), w(3.0, 6.0), tt), Some(s(3.0)));
        assert!(forwardable(s(6.4), w(4.0, 9.0), tt));
        assert!(!forwardable(s(5.95), w(3.0, 6.0), tt));
        assert!(forwardable(s(5.9), w(3.0, 6.0), tt), "exact fit");
    }

    #[test]
    fn transmit_from_link() {
        let p = TransmitParams::from_link(10_000, 125_000).unwrap();
        assert_eq!(p.t_trans, Micros(80_000));
        assert!(TransmitParams::from_link(10, 0).is_err());
        assert!(TransmitParams::new(Micros::ZERO).is_err());
    }

    #[test]
    fn source_row_and_unknown_source() {
        let mut g = Tcg::new(["a", "b"]).unwrap();
        g.add_edge_by_label("a", "b", w(1.0, 2.0)).unwrap();
        let p = TransmitParams::new(s(0.1)).unwrap();
        let t = shortest_paths(&g, NodeId(0), s(0.5), p, None).unwrap();
        assert_eq!(t.arrival(NodeId(0)), Some(s(0.5)));
        assert_eq!(t.hops(NodeId(0)), Some(0));
        assert_eq!(t.prev(NodeId(0)), None);
        assert_eq!(t.arrival(NodeId(1)), Some(s(1.1)));
        assert!(shortest_paths(&g, NodeId(7), s(0.0), p, None).is_err());
    }

    #[test]
    fn sink_does_not_relay() {
        let mut g = Tcg::new(["a", "g", "c"]).unwrap();
        g.add_edge_by_label("a", "g", w(0.0, 1.0)).unwrap();
        g.add_edge_by_label("g", "c", w(0.0, 1.0)).unwrap();
        let p = TransmitParams::new(s(0.1)).unwrap();
        let t = shortest_paths(&g, NodeId(0), s(0.0), p, Some(NodeId(1))).unwrap();
        assert_eq!(t.arrival(NodeId(1)), Some(s(0.1)));
        assert_eq!(t.arrival(NodeId(2)), None);
        let t = shortest_paths(&g, NodeId(0), s(0.0), p, None).unwrap();
        assert_eq!(t.arrival(NodeId(2)), Some(s(0.2)));
    }

    #[test]
    fn parallel_windows_pick_earliest_feasible() {
        let mut g = Tcg::new(["a", "b"]).unwrap();
        g.add_edge_by_label("a", "b", w(0.0, 1.0)).unwrap();
        g.add_edge_by_label("a", "b", w(5.0, 6.0)).unwrap();
        let p = TransmitParams::new(s(0.1)).unwrap();
        let t = shortest_paths(&g, NodeId(0), s(0.95), p, None).unwrap();
        assert_eq!(t.arrival(NodeId(1)), Some(s(5.1)));
        let hops = t.path_hops(NodeId(1), p.t_trans).unwrap();
        assert_eq!(hops[0].window, w(5.0, 6.0));
        assert_eq!(earliest_send(&g, NodeId(0), NodeId(1), s(0.2), p.t_trans), Some((s(0.2), w(0.0, 1.0))));
    }

    #[test]
    fn delay_errors() {
        let g = Tcg::new(["a", "g"]).unwrap();
        let p = TransmitParams::new(s(0.1)).unwrap();
        let t = shortest_paths(&g, NodeId(0), s(0.0), p, Some(NodeId(1))).unwrap();
        match user_query_delay(&g, [&t], NodeId(1)) {
            Err(Error::Infeasible { unreachable }) => assert_eq!(unreachable, vec!["a".to_string()]),
            other => panic!("{other:?}"),
        }
        assert!(user_query_delay(&g, [], NodeId(1)).is_err());
    }
}
