//! Independent oracles shared by the integration tests. Nothing here calls
//! the routing or planning code under test.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stagg::plan::Transmission;
use stagg::{Micros, NodeId, Tcg, Window};

/// Earliest send over the sorted windows of one pair, by linear scan.
pub fn scan_send(windows: &[(Micros, Micros)], ready: Micros, tt: Micros) -> Option<Micros> {
    windows.iter().filter_map(|&(b, e)| {
        let s = if ready > b { ready } else { b };
        (s + tt <= e).then_some(s)
    }).min()
}

/// Earliest arrival at every node by enumerating every simple path from
/// `src`. `sink` may end a path but never relays.
pub fn brute_force_arrivals(
    g: &Tcg,
    src: NodeId,
    t_gen: Micros,
    tt: Micros,
    sink: Option<NodeId>,
) -> Vec<Option<Micros>> {
    let n = g.node_count();
    let mut best = vec![None; n];
    let mut on_path = vec![false; n];
    fn dfs(
        g: &Tcg,
        u: NodeId,
        t: Micros,
        tt: Micros,
        sink: Option<NodeId>,
        on_path: &mut [bool],
        best: &mut [Option<Micros>],
    ) {
        let b = &mut best[u.index()];
        if b.is_none_or(|x| t < x) {
            *b = Some(t);
        }
        if Some(u) == sink {
            return;
        }
        on_path[u.index()] = true;
        for v in g.nodes() {
            if on_path[v.index()] {
                continue;
            }
            let ws = g.edge_window(g.label(u), g.label(v));
            if let Some(s) = scan_send(&ws, t, tt) {
                dfs(g, v, s + tt, tt, sink, on_path, best);
            }
        }
        on_path[u.index()] = false;
    }
    dfs(g, src, t_gen, tt, sink, &mut on_path, &mut best);
    best
}

/// Random windowed graph with `n` nodes and up to `m` edges, times on a
/// 0.1 s grid in [0, 20] s.
pub fn random_graph(rng: &mut ChaCha8Rng, n: usize, m: usize) -> Tcg {
    let mut g = Tcg::new((0..n).map(|i| format!("v{i}"))).unwrap();
    let mut added = 0;
    let mut tries = 0;
    while added < m && tries < 200 {
        tries += 1;
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        let begin = rng.gen_range(0..180) as i64;
        let len = rng.gen_range(1..40) as i64;
        let w = Window::new(Micros::from_millis(begin * 100), Micros::from_millis((begin + len) * 100)).unwrap();
        if g.add_edge(NodeId(a as u32), NodeId(b as u32), w).is_ok() {
            added += 1;
        }
    }
    g
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Minimum number of sets covering every coverable element, by exhaustive
/// search over subsets.
pub fn exact_cover_size(universe: &BTreeSet<u32>, sets: &[BTreeSet<u32>]) -> usize {
    let coverable: BTreeSet<u32> = sets.iter().flatten().copied().filter(|x| universe.contains(x)).collect();
    let mut best = usize::MAX;
    for mask in 0u32..(1 << sets.len()) {
        let k = mask.count_ones() as usize;
        if k >= best {
            continue;
        }
        let mut cov = BTreeSet::new();
        for (i, s) in sets.iter().enumerate() {
            if mask & (1 << i) != 0 {
                cov.extend(s.iter().copied());
            }
        }
        if coverable.iter().all(|x| cov.contains(x)) {
            best = k;
        }
    }
    best
}

/// Checks that every transmission uses a real window and obeys the
/// forwarding rule, and that every target's result travels from its source
/// to `g0` along a time-respecting chain of transmissions. Returns the
/// arrival time at `g0` of each target.
pub fn audit_transmissions(
    g: &Tcg,
    g0: NodeId,
    tt: Micros,
    t_gen: &BTreeMap<NodeId, Micros>,
    txs: &[Transmission],
) -> Result<BTreeMap<NodeId, Micros>, String> {
    for t in txs {
        let h = t.hop;
        let ws = g.edge_window(g.label(h.from), g.label(h.to));
        if !ws.contains(&(h.window.begin, h.window.end)) {
            return Err(format!("{}->{} uses a window the graph does not have", g.label(h.from), g.label(h.to)));
        }
        let start = if h.send > h.window.begin { h.send } else { h.window.begin };
        if start != h.send || h.send + tt > h.window.end || h.arrive != h.send + tt {
            return Err(format!("{}->{} at {} breaks the forwarding rule", g.label(h.from), g.label(h.to), h.send));
        }
    }
    let mut arrivals = BTreeMap::new();
    for (&s, &tg) in t_gen {
        let mut chain: Vec<&Transmission> = txs.iter().filter(|t| t.carried.contains(&s)).collect();
        chain.sort_by_key(|t| t.hop.send);
        let mut at = s;
        let mut ready = tg;
        for t in &chain {
            if t.hop.from != at || t.hop.send < ready {
                return Err(format!("result of {} jumps or leaves early at {}", g.label(s), g.label(t.hop.from)));
            }
            at = t.hop.to;
            ready = t.hop.arrive;
        }
        if at != g0 {
            return Err(format!("result of {} ends at {}", g.label(s), g.label(at)));
        }
        arrivals.insert(s, ready);
    }
    Ok(arrivals)
}
