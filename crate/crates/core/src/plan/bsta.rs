//! Shortest-path baseline: every target forwards along its own
//! earliest-delivery path, and packets that meet at a node while waiting for
//! the same next hop are merged into one transmission.
//!
//! A waiting packet is only absorbed by a transmission leaving no later than
//! its own planned send, and from then on follows the absorbing packet's
//! schedule, which is itself an earliest-delivery schedule from that point.
//! Merging therefore never delays any result past its earliest delivery.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};

use crate::energy::EnergyModel;
use crate::error::{Error, Result};
use crate::plan::{Planner, Transmission, TreeExport, TreeNodeExport};
use crate::spa::{tables_for, user_query_delay, Hop, SpaTable, TransmitParams};
use crate::tcg::{NodeId, Tcg};
use crate::time::Micros;

/// Earliest-delivery hop sequence of one target.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PathPlan {
    pub target: NodeId,
    pub t_gen: Micros,
    pub hops: Vec<Hop>,
}

impl PathPlan {
    pub fn arrival(&self) -> Micros {
        self.hops.last().map_or(self.t_gen, |h| h.arrive)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BstaPlan {
    pub g0: NodeId,
    pub paths: Vec<PathPlan>,
    pub t_d: Micros,
}

impl BstaPlan {
    /// Cost without any merging: one transmission per path hop.
    pub fn independent_transmissions(&self) -> usize {
        self.paths.iter().map(|p| p.hops.len()).sum()
    }
}

pub fn plan_bsta(
    tcg: &Tcg,
    g0: NodeId,
    targets: &BTreeMap<NodeId, Micros>,
    params: TransmitParams,
) -> Result<BstaPlan> {
    let tables = tables_for(tcg, targets, params, Some(g0))?;
    plan_bsta_with_tables(tcg, g0, targets, params, &tables)
}

/// [`plan_bsta`] with precomputed per-target tables (sink `g0`).
pub fn plan_bsta_with_tables(
    tcg: &Tcg,
    g0: NodeId,
    targets: &BTreeMap<NodeId, Micros>,
    params: TransmitParams,
    tables: &BTreeMap<NodeId, SpaTable>,
) -> Result<BstaPlan> {
    if targets.contains_key(&g0) {
        return Err(Error::InvalidArgument("the ground station cannot be a target".into()));
    }
    if targets.is_empty() {
        return Ok(BstaPlan { g0, paths: Vec::new(), t_d: Micros::ZERO });
    }
    let t_d = user_query_delay(tcg, targets.keys().map(|s| &tables[s]), g0)?;
    let paths = targets
        .iter()
        .map(|(&s, &t_gen)| PathPlan {
            target: s,
            t_gen,
            hops: tables[&s].path_hops(g0, params.t_trans).expect("reachable after delay check"),
        })
        .collect();
    Ok(BstaPlan { g0, paths, t_d })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BstaReplay {
    /// In send order.
    pub transmissions: Vec<Transmission>,
    /// Delivery time of each target at the ground station.
    pub arrivals: BTreeMap<NodeId, Micros>,
    /// For every transmission, the transmissions whose contents it forwards.
    feeds: Vec<Vec<usize>>,
    /// Transmissions that end at the ground station.
    roots: Vec<usize>,
}

impl BstaReplay {
    pub fn completed(&self) -> Micros {
        self.arrivals.values().copied().max().unwrap_or(Micros::ZERO)
    }

    pub fn energy(&self, model: &EnergyModel, packet_bytes: u64) -> f64 {
        model.cost(self.transmissions.len(), packet_bytes)
    }

    /// Tree of transmissions: each vertex is the sender of one packet.
    pub fn export(&self, tcg: &Tcg, plan: &BstaPlan) -> TreeExport {
        fn go(r: &BstaReplay, tcg: &Tcg, i: usize) -> TreeNodeExport {
            let tx = &r.transmissions[i];
            let mut kids = r.feeds[i].clone();
            kids.sort_by_key(|&c| r.transmissions[c].hop.from);
            TreeNodeExport {
                node: tcg.label(tx.hop.from).to_owned(),
                deadline: tx.hop.send,
                targets: tx.carried.iter().map(|&n| tcg.label(n).to_owned()).collect(),
                children: kids.into_iter().map(|c| go(r, tcg, c)).collect(),
            }
        }
        let mut roots = self.roots.clone();
        roots.sort_by_key(|&c| self.transmissions[c].hop.from);
        TreeExport {
            schema: TreeExport::SCHEMA.into(),
            planner: Planner::Bsta,
            t_d: plan.t_d,
            t_nd: plan.t_d,
            fallback: Vec::new(),
            root: TreeNodeExport {
                node: tcg.label(plan.g0).to_owned(),
                deadline: plan.t_d,
                targets: self.arrivals.keys().map(|&n| tcg.label(n).to_owned()).collect(),
                children: roots.into_iter().map(|c| go(self, tcg, c)).collect(),
            },
        }
    }

    /// Compact structural form like the tree planner's, e.g. `g0(u8(u4(u1)))`.
    pub fn canonical(&self, tcg: &Tcg, g0: NodeId) -> String {
        fn go(r: &BstaReplay, tcg: &Tcg, i: usize, out: &mut String) {
            out.push_str(tcg.label(r.transmissions[i].hop.from));
            write_kids(r, tcg, &r.feeds[i], out);
        }
        fn write_kids(r: &BstaReplay, tcg: &Tcg, kids: &[usize], out: &mut String) {
            if kids.is_empty() {
                return;
            }
            let mut kids = kids.to_vec();
            kids.sort_by_key(|&c| r.transmissions[c].hop.from);
            out.push('(');
            for (k, c) in kids.into_iter().enumerate() {
                if k > 0 {
                    out.push(',');
                }
                go(r, tcg, c, out);
            }
            out.push(')');
        }
        let mut s = tcg.label(g0).to_owned();
        write_kids(self, tcg, &self.roots, &mut s);
        s
    }
}

struct Group {
    leader: usize,
    step: usize,
    members: BTreeSet<NodeId>,
    /// Time this group's packet became available at its current node.
    ready: Micros,
    /// Transmissions merged into the packet at its current node.
    feeds: Vec<usize>,
    alive: bool,
}

/// Executes the plan with opportunistic merging and checks that every
/// result still arrives at its earliest delivery time.
pub fn replay_bsta(plan: &BstaPlan) -> Result<BstaReplay> {
    let mut groups: Vec<Group> = plan
        .paths
        .iter()
        .enumerate()
        .map(|(i, p)| Group {
            leader: i,
            step: 0,
            members: BTreeSet::from([p.target]),
            ready: p.t_gen,
            feeds: Vec::new(),
            alive: true,
        })
        .collect();
    let mut events = BinaryHeap::new();
    for (i, p) in plan.paths.iter().enumerate() {
        if let Some(h) = p.hops.first() {
            events.push(Reverse((h.send, p.target, i)));
        }
    }
    let mut out = BstaReplay {
        transmissions: Vec::new(),
        arrivals: BTreeMap::new(),
        feeds: Vec::new(),
        roots: Vec::new(),
    };

    while let Some(Reverse((send, _, gi))) = events.pop() {
        if !groups[gi].alive {
            continue;
        }
        let hop = plan.paths[groups[gi].leader].hops[groups[gi].step];
        debug_assert_eq!(hop.send, send);

        for hi in 0..groups.len() {
            if hi == gi || !groups[hi].alive {
                continue;
            }
            let other = &plan.paths[groups[hi].leader].hops;
            let Some(next) = other.get(groups[hi].step) else { continue };
            if next.from == hop.from && next.to == hop.to && groups[hi].ready <= send {
                let absorbed = std::mem::take(&mut groups[hi].members);
                let feeds = std::mem::take(&mut groups[hi].feeds);
                groups[hi].alive = false;
                groups[gi].members.extend(absorbed);
                groups[gi].feeds.extend(feeds);
            }
        }

        let ti = out.transmissions.len();
        let g = &mut groups[gi];
        out.transmissions.push(Transmission { hop, carried: g.members.clone() });
        out.feeds.push(std::mem::take(&mut g.feeds));
        g.feeds.push(ti);
        g.ready = hop.arrive;
        g.step += 1;
        match plan.paths[g.leader].hops.get(g.step) {
            Some(h) => events.push(Reverse((h.send, plan.paths[g.leader].target, gi))),
            None => {
                out.roots.push(ti);
                g.alive = false;
                for &m in &g.members {
                    out.arrivals.insert(m, hop.arrive);
                }
            }
        }
    }

    for p in &plan.paths {
        let got = out.arrivals.get(&p.target).copied();
        if got.is_none_or(|a| a > p.arrival()) {
            return Err(Error::Consistency(format!(
                "target {} delivered at {got:?}, expected by {}",
                p.target,
                p.arrival()
            )));
        }
    }
    Ok(out)
}
