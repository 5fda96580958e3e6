//! Forest-monitoring mobility: search UAVs sweep 200 m tiles in a zigzag and
//! ferry UAVs shuttle on straight lines through the ground station.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::sim::ScenarioConfig;
use crate::tcg::GroundStation;
use crate::trajectory::{Trajectory, Waypoint};

pub const TILE_M: f64 = 200.0;
/// Zigzag lane spacing, capped by the communication range.
pub const LANE_SPACING_M: f64 = 50.0;

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub uavs: Vec<Trajectory<f64>>,
    pub ground_station: GroundStation<f64>,
    /// Trajectories are defined over `[0, horizon]` seconds.
    pub horizon: f64,
}

/// Tile layout centred in the area: `(cols, rows, x0, y0)`.
pub fn tile_grid(cfg: &ScenarioConfig) -> Result<(usize, usize, f64, f64)> {
    let cols = (cfg.area_width / TILE_M).floor() as usize;
    let rows = (cfg.area_height / TILE_M).floor() as usize;
    if cols * rows < cfg.n_search_uavs.max(1) {
        return Err(Error::InvalidConfig(format!(
            "{}x{} m holds {} tiles of {TILE_M} m, need {}",
            cfg.area_width,
            cfg.area_height,
            cols * rows,
            cfg.n_search_uavs.max(1)
        )));
    }
    let x0 = (cfg.area_width - cols as f64 * TILE_M) / 2.0;
    let y0 = (cfg.area_height - rows as f64 * TILE_M) / 2.0;
    Ok((cols, rows, x0, y0))
}

/// Boustrophedon over a tile, then back along the same track, as a closed
/// loop of corner points.
pub fn zigzag_loop(x: f64, y: f64, side: f64, spacing: f64) -> Vec<(f64, f64)> {
    let lanes = (side / spacing).floor() as usize;
    let mut fwd = Vec::with_capacity(2 * (lanes + 1));
    for k in 0..=lanes {
        let ly = y + k as f64 * spacing;
        if k % 2 == 0 {
            fwd.push((x, ly));
            fwd.push((x + side, ly));
        } else {
            fwd.push((x + side, ly));
            fwd.push((x, ly));
        }
    }
    let mut out = fwd.clone();
    out.extend(fwd.iter().rev().skip(1));
    out
}

/// Walks the closed polyline `pts` (first == last) at `speed`, starting
/// `phase` of the way around, until past `horizon`.
pub fn looped_trajectory(
    id: impl Into<String>,
    pts: &[(f64, f64)],
    speed: f64,
    phase: f64,
    horizon: f64,
) -> Result<Trajectory<f64>> {
    let seg: Vec<f64> = pts.windows(2).map(|p| dist(p[0], p[1])).collect();
    let lap: f64 = seg.iter().sum();
    if !(lap > 0.0) || !(speed > 0.0) {
        return Err(Error::InvalidConfig("degenerate loop or speed".into()));
    }
    // locate the starting point
    let mut s = phase.rem_euclid(1.0) * lap;
    let mut k = 0;
    while k + 1 < seg.len() && s >= seg[k] {
        s -= seg[k];
        k += 1;
    }
    let f = if seg[k] > 0.0 { s / seg[k] } else { 0.0 };
    let start = lerp(pts[k], pts[k + 1], f);
    let mut wps = vec![Waypoint::new(0.0, start.0, start.1)];
    let mut t = (seg[k] - s) / speed;
    let mut i = k + 1;
    loop {
        let p = pts[i];
        if t > wps.last().expect("non-empty").t {
            wps.push(Waypoint::new(t, p.0, p.1));
        }
        if t > horizon {
            break;
        }
        if i + 1 == pts.len() {
            i = 0;
            continue; // pts[0] == pts[last]
        }
        t += seg[i] / speed;
        i += 1;
    }
    Trajectory::new(id, wps)
}

fn dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
}

fn lerp(a: (f64, f64), b: (f64, f64), f: f64) -> (f64, f64) {
    (a.0 + (b.0 - a.0) * f, a.1 + (b.1 - a.1) * f)
}

/// Clips the line through `c` with direction angle `theta` to a box.
fn clip_line(c: (f64, f64), theta: f64, lo: (f64, f64), hi: (f64, f64)) -> ((f64, f64), (f64, f64)) {
    let (dx, dy) = (theta.cos(), theta.sin());
    let (mut t0, mut t1) = (f64::NEG_INFINITY, f64::INFINITY);
    for (d, p, l, h) in [(dx, c.0, lo.0, hi.0), (dy, c.1, lo.1, hi.1)] {
        if d.abs() > 1e-12 {
            let (a, b) = ((l - p) / d, (h - p) / d);
            t0 = t0.max(a.min(b));
            t1 = t1.min(a.max(b));
        }
    }
    ((c.0 + dx * t0, c.1 + dy * t0), (c.0 + dx * t1, c.1 + dy * t1))
}

/// Search UAVs `u1..`, then ferries, then the ground station `g0` at the area
/// centre. Deterministic in `cfg.rng_seed`.
pub fn generate_scenario(cfg: &ScenarioConfig) -> Result<Scenario> {
    cfg.validate()?;
    let (cols, rows, x0, y0) = tile_grid(cfg)?;
    let horizon = cfg.horizon();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let spacing = LANE_SPACING_M.min(cfg.comm_range);
    let total = cols * rows;
    let mut uavs = Vec::with_capacity(cfg.n_search_uavs + cfg.n_ferry_uavs);

    for i in 0..cfg.n_search_uavs {
        let tile = i * total / cfg.n_search_uavs;
        let (tx, ty) = (x0 + (tile % cols) as f64 * TILE_M, y0 + (tile / cols) as f64 * TILE_M);
        let pts = zigzag_loop(tx, ty, TILE_M, spacing);
        let phase: f64 = rng.gen();
        uavs.push(looped_trajectory(format!("u{}", i + 1), &pts, cfg.uav_speed, phase, horizon)?);
    }

    let centre = (cfg.area_width / 2.0, cfg.area_height / 2.0);
    let lo = (x0, y0);
    let hi = (x0 + cols as f64 * TILE_M, y0 + rows as f64 * TILE_M);
    for k in 0..cfg.n_ferry_uavs {
        let theta = k as f64 * std::f64::consts::PI / cfg.n_ferry_uavs as f64;
        let (a, b) = clip_line(centre, theta, lo, hi);
        let phase: f64 = rng.gen();
        let id = format!("u{}", cfg.n_search_uavs + k + 1);
        uavs.push(looped_trajectory(id, &[a, b, a], cfg.uav_speed, phase, horizon)?);
    }

    Ok(Scenario {
        uavs,
        ground_station: GroundStation { uav_id: "g0".into(), x: centre.0, y: centre.1 },
        horizon,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zigzag_loop_length() {
        let pts = zigzag_loop(0.0, 0.0, 200.0, 50.0);
        assert_eq!(pts.first(), pts.last());
        let len: f64 = pts.windows(2).map(|p| dist(p[0], p[1])).sum();
        assert!((len - 2400.0).abs() < 1e-9);
    }

    #[test]
    fn looped_trajectory_keeps_speed() {
        let pts = zigzag_loop(0.0, 0.0, 200.0, 50.0);
        let tr = looped_trajectory("u", &pts, 10.0, 0.37, 600.0).unwrap();
        assert!(tr.end_time() > 600.0);
        for w in tr.waypoints().windows(2) {
            let v = dist((w[0].x, w[0].y), (w[1].x, w[1].y)) / (w[1].t - w[0].t);
            assert!((v - 10.0).abs() < 1e-6, "speed {v}");
        }
    }

    #[test]
    fn clip_through_centre() {
        let (a, b) = clip_line((5.0, 5.0), 0.0, (0.0, 0.0), (10.0, 10.0));
        assert_eq!((a, b), ((0.0, 5.0), (10.0, 5.0)));
        let (a, b) = clip_line((5.0, 5.0), std::f64::consts::FRAC_PI_2, (0.0, 0.0), (10.0, 10.0));
        assert!((a.1 - 0.0).abs() < 1e-9 && (b.1 - 10.0).abs() < 1e-9);
    }
}
