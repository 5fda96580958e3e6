//! Spatial-temporal aggregation tree (STAT) construction.
//!
//! The tree is grown breadth-first from the ground station. Each dequeued
//! vertex `u_i` owns a set of pending targets and a receive deadline:
//!
//! 1. pending targets that are direct neighbours attach as leaves;
//! 2. for every neighbour `u_j` not yet in the tree (leaves just attached
//!    included), [`dtu`] computes which remaining targets can reach `u_i`
//!    through `u_j` by the deadline;
//! 3. [`msc`] greedily picks a small family of neighbours covering them; the
//!    picked neighbours become children with deadline
//!    `min(deadline_i, t_end) - t_trans` and are enqueued. A picked leaf is
//!    turned into a relay in place.
//!
//! Targets left uncovered when the queue drains are grafted onto the tree
//! along their earliest-delivery path (see [`AggregationTree::fallback`]).

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::Write as _;

use crate::energy::EnergyModel;
use crate::error::{Error, Result};
use crate::plan::{Planner, Transmission, TreeExport, TreeNodeExport};
use crate::spa::{earliest_send, tables_for, user_query_delay, Hop, SpaTable, TransmitParams};
use crate::tcg::{NodeId, Tcg, Window};
use crate::time::Micros;

/// Targets deliverable to some node through neighbour `via` over `window`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DeliverableSet {
    pub via: NodeId,
    pub window: Window,
    pub targets: BTreeSet<NodeId>,
    /// Latest time `via` may hold all of `targets` and still forward them.
    pub deadline: Micros,
}

/// Deliverable targets of every neighbour of `node`, one set per window.
pub fn dtu(
    tcg: &Tcg,
    node: NodeId,
    targets: &BTreeSet<NodeId>,
    deadline: Micros,
    neighbors: &[NodeId],
    tables: &BTreeMap<NodeId, SpaTable>,
    params: TransmitParams,
) -> Vec<DeliverableSet> {
    let tt = params.t_trans;
    let mut out = Vec::new();
    for &via in neighbors {
        for window in tcg.windows(node, via) {
            let limit = window.end.min(deadline);
            let deliverable = targets
                .iter()
                .copied()
                .filter(|s| {
                    tables
                        .get(s)
                        .and_then(|t| t.arrival(via))
                        .is_some_and(|t_sj| t_sj.max(window.begin) + tt <= limit)
                })
                .collect();
            out.push(DeliverableSet { via, window, targets: deliverable, deadline: limit - tt });
        }
    }
    out
}

/// Keeps one set per neighbour: the largest, then the one with the latest
/// deadline.
pub fn best_per_neighbor(sets: Vec<DeliverableSet>) -> Vec<DeliverableSet> {
    let mut best: BTreeMap<NodeId, DeliverableSet> = BTreeMap::new();
    for s in sets {
        match best.get(&s.via) {
            Some(cur) if (cur.targets.len(), cur.deadline) >= (s.targets.len(), s.deadline) => {}
            _ => {
                best.insert(s.via, s);
            }
        }
    }
    best.into_values().collect()
}

/// Result of the greedy cover.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cover {
    /// Picked sets, each reduced to the targets it newly covered; pairwise
    /// disjoint.
    pub chosen: Vec<DeliverableSet>,
    pub uncovered: BTreeSet<NodeId>,
}

/// Greedy minimum set cover.
///
/// Picks the set with the most uncovered targets; ties go to the smallest
/// maximum hop count `max_hop(target, via)` over its uncovered targets, then
/// to the smaller `via`, then to the earlier candidate.
pub fn msc<H>(targets: &BTreeSet<NodeId>, candidates: &[DeliverableSet], max_hop: H) -> Cover
where
    H: Fn(NodeId, NodeId) -> u32,
{
    let mut uncovered = targets.clone();
    let mut remaining: Vec<BTreeSet<NodeId>> =
        candidates.iter().map(|c| c.targets.intersection(targets).copied().collect()).collect();
    let mut chosen = Vec::new();

    while !uncovered.is_empty() {
        let pick = remaining
            .iter()
            .enumerate()
            .filter(|(_, r)| !r.is_empty())
            .map(|(i, r)| {
                let hop = r.iter().map(|&s| max_hop(s, candidates[i].via)).max().unwrap_or(0);
                (i, (r.len(), std::cmp::Reverse(hop), std::cmp::Reverse(candidates[i].via), std::cmp::Reverse(i)))
            })
            .max_by(|a, b| a.1.cmp(&b.1));
        let Some((k, _)) = pick else { break };
        let covered = std::mem::take(&mut remaining[k]);
        for r in remaining.iter_mut() {
            r.retain(|s| !covered.contains(s));
        }
        uncovered.retain(|s| !covered.contains(s));
        chosen.push(DeliverableSet { targets: covered, ..candidates[k].clone() });
    }
    Cover { chosen, uncovered }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum VertexKind {
    Root,
    /// Forwarding child selected by the set cover.
    Relay,
    /// Target attached directly to its parent.
    Leaf,
    /// Part of a grafted earliest-delivery path.
    Fallback,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreeVertex {
    pub node: NodeId,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    /// Latest time this vertex may finish receiving its subtree.
    pub deadline: Micros,
    /// This vertex injects the node's own query result.
    pub own_target: bool,
    pub kind: VertexKind,
}

/// Tree rooted at the ground station; every non-leaf aggregates its
/// children's results into one packet for its parent.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AggregationTree {
    vertices: Vec<TreeVertex>,
    t_gen: BTreeMap<NodeId, Micros>,
    /// Earliest possible completion time (max earliest delivery).
    pub t_d: Micros,
    /// Relaxed deadline `t_d + zeta` used at the root.
    pub t_nd: Micros,
    /// Targets that were grafted because the cover could not reach them.
    pub fallback: Vec<NodeId>,
}

/// Result of replaying a tree hop by hop.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreeReplay {
    /// In send order.
    pub transmissions: Vec<Transmission>,
    /// Time the root holds every result.
    pub completed: Micros,
}

impl AggregationTree {
    pub const ROOT: usize = 0;

    pub fn vertices(&self) -> &[TreeVertex] {
        &self.vertices
    }

    pub fn root(&self) -> &TreeVertex {
        &self.vertices[Self::ROOT]
    }

    /// Number of tree edges, i.e. packet transmissions.
    pub fn edge_count(&self) -> usize {
        self.vertices.len() - 1
    }

    pub fn fallback_count(&self) -> usize {
        self.fallback.len()
    }

    pub fn targets(&self) -> BTreeSet<NodeId> {
        self.t_gen.keys().copied().collect()
    }

    /// Targets whose results flow through vertex `v`.
    pub fn assigned_targets(&self, v: usize) -> BTreeSet<NodeId> {
        let mut out = BTreeSet::new();
        let mut stack = vec![v];
        while let Some(x) = stack.pop() {
            let vx = &self.vertices[x];
            if vx.own_target {
                out.insert(vx.node);
            }
            stack.extend(&vx.children);
        }
        out
    }

    /// Vertices in breadth-first order from the root.
    pub fn bfs(&self) -> Vec<usize> {
        let mut order = vec![Self::ROOT];
        let mut i = 0;
        while i < order.len() {
            order.extend(self.vertices[order[i]].children.iter().copied());
            i += 1;
        }
        order
    }

    fn depth(&self, mut v: usize) -> usize {
        let mut d = 0;
        while let Some(p) = self.vertices[v].parent {
            v = p;
            d += 1;
        }
        d
    }

    fn ancestor_nodes(&self, v: usize) -> BTreeSet<NodeId> {
        let mut out = BTreeSet::new();
        let mut cur = self.vertices[v].parent;
        while let Some(p) = cur {
            out.insert(self.vertices[p].node);
            cur = self.vertices[p].parent;
        }
        out
    }

    /// Energy of the plan: one packet per tree edge.
    pub fn energy(&self, model: &EnergyModel, packet_bytes: u64) -> f64 {
        model.cost(self.edge_count(), packet_bytes)
    }

    /// Sends every vertex's aggregated packet as soon as its subtree has
    /// arrived and a window allows, checking every deadline on the way.
    pub fn replay(&self, tcg: &Tcg, params: TransmitParams) -> Result<TreeReplay> {
        let mut owners: Vec<NodeId> = self.vertices.iter().filter(|v| v.own_target).map(|v| v.node).collect();
        owners.sort();
        if owners != self.t_gen.keys().copied().collect::<Vec<_>>() {
            return Err(Error::Consistency("every target must inject its result exactly once".into()));
        }
        let order = self.bfs();
        let mut ready: Vec<Option<Micros>> = vec![None; self.vertices.len()];
        let mut carried: Vec<BTreeSet<NodeId>> = vec![BTreeSet::new(); self.vertices.len()];
        let mut transmissions = Vec::with_capacity(self.edge_count());
        for &v in order.iter().rev() {
            let vx = &self.vertices[v];
            let mut r = None::<Micros>;
            if vx.own_target {
                r = Some(self.t_gen[&vx.node]);
                carried[v].insert(vx.node);
            }
            for &c in &vx.children {
                let a = ready[c].ok_or_else(|| Error::Consistency("child replay missing".into()))?;
                r = Some(r.map_or(a, |x| x.max(a)));
                let sub = std::mem::take(&mut carried[c]);
                carried[v].extend(sub.iter().copied());
                carried[c] = sub;
            }
            let Some(r) = r else {
                return Err(Error::Consistency(format!("vertex {v} carries no data")));
            };
            let Some(parent) = vx.parent else {
                ready[v] = Some(r);
                continue;
            };
            let pnode = self.vertices[parent].node;
            let (send, window) = earliest_send(tcg, vx.node, pnode, r, params.t_trans).ok_or_else(|| {
                Error::Consistency(format!(
                    "{} -> {}: no window after {r}",
                    tcg.label(vx.node),
                    tcg.label(pnode)
                ))
            })?;
            let arrive = send + params.t_trans;
            if arrive > self.vertices[parent].deadline {
                return Err(Error::Consistency(format!(
                    "{} -> {} arrives {arrive} after deadline {}",
                    tcg.label(vx.node),
                    tcg.label(pnode),
                    self.vertices[parent].deadline
                )));
            }
            transmissions.push(Transmission {
                hop: Hop { from: vx.node, to: pnode, window, send, arrive },
                carried: carried[v].clone(),
            });
            ready[v] = Some(arrive);
        }
        let completed = ready[Self::ROOT].unwrap_or(self.t_d);
        transmissions.sort_by_key(|t| (t.hop.send, t.hop.from, t.hop.to));
        Ok(TreeReplay { transmissions, completed })
    }

    /// Compact structural form, children in id order:
    /// `g0(u9(u5(u1,u2)),u10(u7(u3)))`.
    pub fn canonical(&self, tcg: &Tcg) -> String {
        fn go(t: &AggregationTree, tcg: &Tcg, v: usize, out: &mut String) {
            let vx = &t.vertices[v];
            out.push_str(tcg.label(vx.node));
            if !vx.children.is_empty() {
                let mut kids = vx.children.clone();
                kids.sort_by_key(|&c| t.vertices[c].node);
                out.push('(');
                for (i, c) in kids.into_iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    go(t, tcg, c, out);
                }
                out.push(')');
            }
        }
        let mut s = String::new();
        go(self, tcg, Self::ROOT, &mut s);
        s
    }

    /// Indented human-readable rendering.
    pub fn render(&self, tcg: &Tcg) -> String {
        fn go(t: &AggregationTree, tcg: &Tcg, v: usize, depth: usize, out: &mut String) {
            let vx = &t.vertices[v];
            let targets: Vec<&str> = t.assigned_targets(v).into_iter().map(|n| tcg.label(n)).collect();
            let tag = match vx.kind {
                VertexKind::Fallback => " (fallback)",
                _ => "",
            };
            let _ = writeln!(
                out,
                "{:indent$}{} deadline={} targets=[{}]{}",
                "",
                tcg.label(vx.node),
                vx.deadline,
                targets.join(","),
                tag,
                indent = depth * 2
            );
            let mut kids = vx.children.clone();
            kids.sort_by_key(|&c| t.vertices[c].node);
            for c in kids {
                go(t, tcg, c, depth + 1, out);
            }
        }
        let mut s = String::new();
        go(self, tcg, Self::ROOT, 0, &mut s);
        s
    }

    pub fn export(&self, tcg: &Tcg) -> TreeExport {
        fn go(t: &AggregationTree, tcg: &Tcg, v: usize) -> TreeNodeExport {
            let vx = &t.vertices[v];
            let mut kids = vx.children.clone();
            kids.sort_by_key(|&c| t.vertices[c].node);
            TreeNodeExport {
                node: tcg.label(vx.node).to_owned(),
                deadline: vx.deadline,
                targets: t.assigned_targets(v).into_iter().map(|n| tcg.label(n).to_owned()).collect(),
                children: kids.into_iter().map(|c| go(t, tcg, c)).collect(),
            }
        }
        TreeExport {
            schema: TreeExport::SCHEMA.into(),
            planner: Planner::Esta,
            t_d: self.t_d,
            t_nd: self.t_nd,
            fallback: self.fallback.iter().map(|&n| tcg.label(n).to_owned()).collect(),
            root: go(self, tcg, Self::ROOT),
        }
    }

    fn push(&mut self, v: TreeVertex) -> usize {
        let ix = self.vertices.len();
        if let Some(p) = v.parent {
            self.vertices[p].children.push(ix);
        }
        self.vertices.push(v);
        ix
    }

    /// Cheapest place to hang target `s`: the vertex reachable along `s`'s
    /// earliest-delivery path with the fewest hops, among vertices whose
    /// deadline the path meets without passing through their ancestors.
    /// Ties prefer the deeper vertex, then the older one. The root always
    /// qualifies because its deadline is at least `t_d`.
    fn graft_point(&self, table: &SpaTable) -> Option<(usize, usize)> {
        let mut best: Option<((usize, std::cmp::Reverse<usize>, usize), usize)> = None;
        for (ix, vx) in self.vertices.iter().enumerate() {
            let Some(t) = table.arrival(vx.node) else { continue };
            if t > vx.deadline {
                continue;
            }
            let Some(path) = table.path_nodes(vx.node) else { continue };
            let ancestors = self.ancestor_nodes(ix);
            if path.iter().any(|n| ancestors.contains(n)) {
                continue;
            }
            let key = (path.len() - 1, std::cmp::Reverse(self.depth(ix)), ix);
            if best.as_ref().is_none_or(|(k, _)| key < *k) {
                best = Some((key, ix));
            }
        }
        best.map(|((hops, _, _), ix)| (ix, hops))
    }

    /// Adds `s`'s path from its source up to vertex `anchor` as a chain.
    fn graft(&mut self, s: NodeId, table: &SpaTable, anchor: usize) {
        let path = table.path_nodes(self.vertices[anchor].node).expect("graft point is reachable");
        self.fallback.push(s);
        if path.len() == 1 {
            // s already forwards for others; it only adds its own result
            self.vertices[anchor].own_target = true;
            return;
        }
        let mut parent = anchor;
        for (k, &n) in path.iter().enumerate().rev().skip(1) {
            parent = self.push(TreeVertex {
                node: n,
                parent: Some(parent),
                children: Vec::new(),
                deadline: table.arrival(n).expect("on path"),
                own_target: k == 0,
                kind: VertexKind::Fallback,
            });
        }
    }

    /// Grafts stranded targets in id order, so later ones can join chains
    /// laid for earlier ones.
    fn graft_all(&mut self, stranded: &BTreeSet<NodeId>, tables: &BTreeMap<NodeId, SpaTable>) -> Result<()> {
        for &s in stranded {
            let (ix, _) = self
                .graft_point(&tables[&s])
                .ok_or_else(|| Error::Consistency(format!("no graft point for target {s}")))?;
            self.graft(s, &tables[&s], ix);
        }
        Ok(())
    }

    /// Drops forwarding vertices whose subtree carries no result.
    fn prune(&mut self) {
        loop {
            let dead: Vec<usize> = (1..self.vertices.len())
                .filter(|&v| self.vertices[v].children.is_empty() && !self.vertices[v].own_target)
                .collect();
            if dead.is_empty() {
                break;
            }
            let dead: BTreeSet<usize> = dead.into_iter().collect();
            let mut remap = vec![usize::MAX; self.vertices.len()];
            let mut kept = Vec::with_capacity(self.vertices.len() - dead.len());
            for (i, v) in self.vertices.iter().enumerate() {
                if !dead.contains(&i) {
                    remap[i] = kept.len();
                    kept.push(v.clone());
                }
            }
            for v in kept.iter_mut() {
                v.parent = v.parent.map(|p| remap[p]);
                v.children = v.children.iter().filter(|c| !dead.contains(c)).map(|&c| remap[c]).collect();
            }
            self.vertices = kept;
        }
    }
}

/// Builds the aggregation tree for `targets` (target -> result generation
/// time) towards ground station `g0`, with slack `zeta` added to the
/// earliest completion time.
pub fn build_stat(
    tcg: &Tcg,
    g0: NodeId,
    targets: &BTreeMap<NodeId, Micros>,
    zeta: Micros,
    params: TransmitParams,
) -> Result<AggregationTree> {
    let tables = tables_for(tcg, targets, params, Some(g0))?;
    build_stat_with_tables(tcg, g0, targets, zeta, params, &tables)
}

/// [`build_stat`] with precomputed per-target tables (sink `g0`).
pub fn build_stat_with_tables(
    tcg: &Tcg,
    g0: NodeId,
    targets: &BTreeMap<NodeId, Micros>,
    zeta: Micros,
    params: TransmitParams,
    tables: &BTreeMap<NodeId, SpaTable>,
) -> Result<AggregationTree> {
    if zeta < Micros::ZERO {
        return Err(Error::InvalidArgument("zeta must be non-negative".into()));
    }
    if targets.contains_key(&g0) {
        return Err(Error::InvalidArgument("the ground station cannot be a target".into()));
    }
    let t_d = if targets.is_empty() {
        Micros::ZERO
    } else {
        user_query_delay(tcg, targets.keys().map(|s| &tables[s]), g0)?
    };
    let t_nd = t_d + zeta;
    let tt = params.t_trans;

    let mut tree = AggregationTree {
        vertices: vec![TreeVertex {
            node: g0,
            parent: None,
            children: Vec::new(),
            deadline: t_nd,
            own_target: false,
            kind: VertexKind::Root,
        }],
        t_gen: targets.clone(),
        t_d,
        t_nd,
        fallback: Vec::new(),
    };
    let all: BTreeSet<NodeId> = targets.keys().copied().collect();
    let mut pending: Vec<BTreeSet<NodeId>> = vec![all.clone()];
    let mut in_tree: BTreeSet<NodeId> = BTreeSet::from([g0]);
    let mut placed: BTreeSet<NodeId> = BTreeSet::new();
    let mut queue = VecDeque::from([AggregationTree::ROOT]);
    let hop = |s: NodeId, via: NodeId| tables.get(&s).and_then(|t| t.hops(via)).unwrap_or(u32::MAX);

    while placed.len() < all.len() {
        let Some(vi) = queue.pop_front() else { break };
        let (u, deadline) = (tree.vertices[vi].node, tree.vertices[vi].deadline);
        let mut mine: BTreeSet<NodeId> = std::mem::take(&mut pending[vi]);
        mine.retain(|s| !placed.contains(s));
        let neighbors: Vec<NodeId> =
            tcg.neighbors(u).into_iter().filter(|n| !in_tree.contains(n)).collect();

        // pending targets next to u attach directly when their own result fits;
        // they stay eligible as relays for the rest of u's targets
        let mut leaves: BTreeMap<NodeId, usize> = BTreeMap::new();
        for &j in &neighbors {
            if !mine.contains(&j) {
                continue;
            }
            let leaf_deadline = tcg
                .windows(u, j)
                .into_iter()
                .filter(|w| targets[&j].max(w.begin) + tt <= w.end.min(deadline))
                .map(|w| w.end.min(deadline) - tt)
                .max();
            if let Some(d) = leaf_deadline {
                let ix = tree.push(TreeVertex {
                    node: j,
                    parent: Some(vi),
                    children: Vec::new(),
                    deadline: d,
                    own_target: true,
                    kind: VertexKind::Leaf,
                });
                pending.push(BTreeSet::new());
                leaves.insert(j, ix);
                placed.insert(j);
                mine.remove(&j);
            }
        }
        in_tree.extend(leaves.keys().copied());
        if mine.is_empty() {
            continue;
        }

        let candidates: Vec<DeliverableSet> =
            best_per_neighbor(dtu(tcg, u, &mine, deadline, &neighbors, tables, params))
                .into_iter()
                .filter(|d| !d.targets.is_empty())
                .collect();
        let cover = msc(&mine, &candidates, hop);
        for set in cover.chosen {
            // a leaf picked as relay keeps its own result if it still fits
            if let Some(&ix) = leaves.get(&set.via) {
                if targets[&set.via] <= set.deadline {
                    let v = &mut tree.vertices[ix];
                    v.kind = VertexKind::Relay;
                    v.deadline = set.deadline;
                    pending[ix] = set.targets;
                    queue.push_back(ix);
                    continue;
                }
            }
            let own = targets.get(&set.via).is_some_and(|&tg| !placed.contains(&set.via) && tg <= set.deadline);
            if own {
                placed.insert(set.via);
            }
            in_tree.insert(set.via);
            let ix = tree.push(TreeVertex {
                node: set.via,
                parent: Some(vi),
                children: Vec::new(),
                deadline: set.deadline,
                own_target: own,
                kind: VertexKind::Relay,
            });
            pending.push(set.targets);
            queue.push_back(ix);
        }
    }

    tree.graft_all(&all.difference(&placed).copied().collect(), tables)?;
    tree.prune();
    Ok(tree)
}

/// Unit-model energy of a tree (number of edges), or a general model's cost.
pub fn plan_energy(tree: &AggregationTree, model: &EnergyModel, packet_bytes: u64) -> f64 {
    tree.energy(model, packet_bytes)
}
