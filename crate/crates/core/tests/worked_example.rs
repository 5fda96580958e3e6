//! End-to-end checks on the ten-UAV example graph.

use std::collections::BTreeMap;
use std::path::Path;

use stagg::fixtures::{worked_example, worked_example_params};
use stagg::io::TcgFile;
use stagg::plan::TreeExport;
use stagg::sim::{prepare_targets, run_query, PreparedScenario, RequestModel};
use stagg::{build_stat, plan_bsta, replay_bsta, shortest_paths, Micros, NodeId, Planner, Tcg};

fn targets(g: &Tcg, labels: &[&str]) -> BTreeMap<NodeId, Micros> {
    labels.iter().map(|l| (g.require(l).unwrap(), Micros::ZERO)).collect()
}

const COLUMNS: [&str; 11] = ["u1", "u2", "u3", "u4", "u5", "u6", "u7", "u8", "u9", "u10", "g0"];

// Earliest delivery time (s) and hop count from u1, u2, u3; None = unreachable.
const DELIVERY: [[Option<f64>; 11]; 3] = [
    [Some(0.0), Some(1.1), Some(6.2), Some(0.1), Some(0.1), Some(6.1), Some(7.2), Some(3.1), Some(5.1), Some(7.1), Some(4.1)],
    [Some(1.2), Some(0.0), Some(6.2), Some(1.3), Some(1.1), Some(6.1), Some(7.2), Some(3.1), Some(5.1), Some(7.1), Some(4.1)],
    [None, Some(6.2), Some(0.0), None, Some(6.3), Some(6.1), Some(2.1), Some(6.4), Some(6.2), Some(5.1), Some(6.1)],
];
const HOPS: [[Option<u32>; 11]; 3] = [
    [Some(0), Some(2), Some(4), Some(1), Some(1), Some(3), Some(5), Some(2), Some(2), Some(4), Some(3)],
    [Some(2), Some(0), Some(2), Some(3), Some(1), Some(1), Some(3), Some(4), Some(2), Some(2), Some(5)],
    [None, Some(2), Some(0), None, Some(3), Some(1), Some(1), Some(4), Some(2), Some(2), Some(3)],
];

#[test]
fn delivery_and_hop_tables_match_published_rows() {
    let g = worked_example();
    let p = worked_example_params();
    let g0 = g.require("g0").unwrap();
    for (row, src) in ["u1", "u2", "u3"].iter().enumerate() {
        let t = shortest_paths(&g, g.require(src).unwrap(), Micros::ZERO, p, Some(g0)).unwrap();
        for (col, label) in COLUMNS.iter().enumerate() {
            let v = g.require(label).unwrap();
            assert_eq!(t.arrival(v), DELIVERY[row][col].map(Micros::from_secs_f64), "T({src},{label})");
            assert_eq!(t.hops(v), HOPS[row][col], "H({src},{label})");
        }
    }
}

#[test]
fn paths_replay_to_their_table_entries() {
    let g = worked_example();
    let p = worked_example_params();
    let g0 = g.require("g0").unwrap();
    for src in g.nodes().filter(|&n| n != g0) {
        let t = shortest_paths(&g, src, Micros::ZERO, p, Some(g0)).unwrap();
        for v in g.nodes() {
            let Some(hops) = t.path_hops(v, p.t_trans) else {
                assert!(t.arrival(v).is_none());
                continue;
            };
            assert_eq!(hops.len() as u32, t.hops(v).unwrap());
            let end = hops.last().map_or(Micros::ZERO, |h| h.arrive);
            assert_eq!(Some(end), t.arrival(v));
            assert!(hops.iter().all(|h| h.send >= h.window.begin && h.send + p.t_trans <= h.window.end));
            assert!(hops.windows(2).all(|w| w[0].to == w[1].from && w[0].arrive <= w[1].send));
        }
    }
}

#[test]
fn bundled_graph_file_matches_fixture() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/worked_example.tcg.json");
    let file = TcgFile::read(&path).unwrap();
    assert_eq!(file.ground_station_label(), "g0");
    let g = file.to_tcg().unwrap();
    let f = worked_example();
    assert_eq!(g.labels(), f.labels());
    let mut a: Vec<_> = g.edges().iter().map(|e| (e.a, e.b, e.window)).collect();
    let mut b: Vec<_> = f.edges().iter().map(|e| (e.a, e.b, e.window)).collect();
    a.sort();
    b.sort();
    assert_eq!(a, b);
}

#[test]
fn slack_trades_delay_for_energy() {
    let g = worked_example();
    let p = worked_example_params();
    let g0 = g.require("g0").unwrap();
    let t = targets(&g, &["u1", "u2", "u3"]);
    let mut last_edges = usize::MAX;
    for (zeta, shape, edges) in [
        (0.0, "g0(u9(u5(u1,u2)),u10(u7(u3)))", 7),
        (1.0, "g0(u9(u5(u1,u2),u6(u3)))", 6),
        (2.0, "g0(u9(u5(u1,u2),u6(u3)))", 6),
    ] {
        let tree = build_stat(&g, g0, &t, Micros::from_secs_f64(zeta), p).unwrap();
        assert_eq!(tree.canonical(&g), shape, "zeta={zeta}");
        assert_eq!(tree.edge_count(), edges);
        assert!(edges <= last_edges);
        last_edges = edges;
        let r = tree.replay(&g, p).unwrap();
        assert_eq!(r.transmissions.len(), edges);
        assert!(r.completed <= tree.t_nd);
    }
}

#[test]
fn baseline_merges_shared_hops() {
    let g = worked_example();
    let p = worked_example_params();
    let g0 = g.require("g0").unwrap();
    let plan = plan_bsta(&g, g0, &targets(&g, &["u1", "u2", "u3"]), p).unwrap();
    assert_eq!(plan.t_d, Micros::from_secs_f64(6.1));
    let r = replay_bsta(&plan).unwrap();
    assert_eq!(r.transmissions.len(), 9);
    assert_eq!(r.canonical(&g, g0), "g0(u8(u4(u1,u1(u5(u2)))),u10(u7(u3)))");
    assert_eq!(r.completed(), plan.t_d);
}

#[test]
fn exported_tree_round_trips_through_json() {
    let g = worked_example();
    let p = worked_example_params();
    let g0 = g.require("g0").unwrap();
    let tree = build_stat(&g, g0, &targets(&g, &["u1", "u2", "u3"]), Micros::ZERO, p).unwrap();
    let ex = tree.export(&g);
    assert_eq!(ex.schema, TreeExport::SCHEMA);
    assert_eq!(ex.root.node, "g0");
    let back: TreeExport = serde_json::from_str(&serde_json::to_string(&ex).unwrap()).unwrap();
    assert_eq!(back, ex);
}

#[test]
fn instant_requests_reproduce_example_metrics() {
    let g = worked_example();
    let g0 = g.require("g0").unwrap();
    let sc = PreparedScenario::from_tcg(g.clone(), g0, worked_example_params(), Micros::ZERO);
    let ids: Vec<NodeId> = ["u1", "u2", "u3"].iter().map(|l| g.require(l).unwrap()).collect();
    let pq = prepare_targets(&sc, &ids, Micros::ZERO, RequestModel::Instant).unwrap();
    let esta = run_query(&sc, &pq, Planner::Esta, 0).unwrap();
    let bsta = run_query(&sc, &pq, Planner::Bsta, 0).unwrap();
    assert_eq!(esta.metrics.delay_s, 6.1);
    assert_eq!(bsta.metrics.delay_s, 6.1);
    assert_eq!(esta.metrics.energy_units, 7.0);
    assert_eq!(bsta.metrics.energy_units, 9.0);
    assert_eq!(bsta.independent_transmissions, 11);
}
