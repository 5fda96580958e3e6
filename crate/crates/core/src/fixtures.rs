//! The ten-UAV contact graph used throughout the examples and tests.
//!
//! Nodes `u1..u10` then `g0`, one window per pair, results take 0.1 s per
//! hop. Four of the windows (`u9-g0`, `u5-u8`, `u2-u6`, `u3-u6`) are
//! reconstructions chosen to agree with every published earliest-delivery
//! time and hop count.

use crate::spa::TransmitParams;
use crate::tcg::{Tcg, Window};
use crate::time::Micros;

/// The first `QUOTED_EDGES` entries of [`EXAMPLE_EDGES`] are exact; the rest
/// are reconstructed.
pub const QUOTED_EDGES: usize = 11;

pub const EXAMPLE_EDGES: [(&str, &str, f64, f64); 15] = [
    ("u1", "u4", 0.0, 2.0),
    ("u4", "u8", 3.0, 6.0),
    ("u8", "g0", 4.0, 9.0),
    ("u2", "u5", 1.0, 5.0),
    ("u1", "u5", 0.0, 4.0),
    ("u3", "u7", 2.0, 6.0),
    ("u7", "u10", 5.0, 9.0),
    ("u10", "g0", 6.0, 9.0),
    ("u5", "u9", 5.0, 8.0),
    ("u6", "u9", 6.0, 10.0),
    ("u6", "u10", 7.0, 8.0),
    ("u9", "g0", 5.0, 9.0),
    ("u5", "u8", 4.0, 7.0),
    ("u2", "u6", 6.0, 7.0),
    ("u3", "u6", 6.0, 7.0),
];

pub fn worked_example() -> Tcg {
    let labels = (1..=10).map(|i| format!("u{i}")).chain(std::iter::once("g0".to_owned()));
    let mut g = Tcg::new(labels).expect("distinct labels");
    for (a, b, t0, t1) in EXAMPLE_EDGES {
        g.add_edge_by_label(a, b, Window::secs(t0, t1).expect("valid window")).expect("valid edge");
    }
    g
}

pub fn worked_example_params() -> TransmitParams {
    TransmitParams::new(Micros::from_millis(100)).expect("positive")
}

/// Only the eleven windows stated exactly in the example narrative.
pub fn worked_example_quoted() -> Tcg {
    let labels = (1..=10).map(|i| format!("u{i}")).chain(std::iter::once("g0".to_owned()));
    let mut g = Tcg::new(labels).expect("distinct labels");
    for (a, b, t0, t1) in &EXAMPLE_EDGES[..QUOTED_EDGES] {
        g.add_edge_by_label(a, b, Window::secs(*t0, *t1).expect("valid window")).expect("valid edge");
    }
    g
}
