//! Pre-planned UAV trajectories, spatial-temporal queries and target
//! determination.
//!
//! A trajectory is a time-stamped polyline; position between waypoints is
//! linear in time and clamps to the first/last waypoint outside its span.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Waypoint<S = f64> {
    pub t: S,
    pub x: S,
    pub y: S,
}

impl<S: Scalar> Waypoint<S> {
    pub fn new(t: S, x: S, y: S) -> Self {
        Waypoint { t, x, y }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTrajectory<S>", bound = "S: Scalar + Serialize + for<'a> Deserialize<'a>")]
pub struct Trajectory<S = f64> {
    uav_id: String,
    waypoints: Vec<Waypoint<S>>,
}

#[derive(Deserialize)]
struct RawTrajectory<S> {
    uav_id: String,
    waypoints: Vec<Waypoint<S>>,
}

impl<S: Scalar> TryFrom<RawTrajectory<S>> for Trajectory<S> {
    type Error = Error;
    fn try_from(raw: RawTrajectory<S>) -> Result<Self> {
        Trajectory::new(raw.uav_id, raw.waypoints)
    }
}

impl<S: Scalar> Trajectory<S> {
    pub fn new(uav_id: impl Into<String>, waypoints: Vec<Waypoint<S>>) -> Result<Self> {
        let uav_id = uav_id.into();
        if waypoints.is_empty() {
            return Err(Error::InvalidArgument(format!("trajectory {uav_id:?} has no waypoints")));
        }
        for w in &waypoints {
            if !(w.t.is_finite() && w.x.is_finite() && w.y.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "trajectory {uav_id:?} has a non-finite waypoint"
                )));
            }
        }
        if waypoints.windows(2).any(|p| p[1].t <= p[0].t) {
            return Err(Error::InvalidArgument(format!(
                "trajectory {uav_id:?}: waypoint times must be strictly increasing"
            )));
        }
        Ok(Trajectory { uav_id, waypoints })
    }

    /// A UAV (or ground station) that never moves.
    pub fn stationary(uav_id: impl Into<String>, x: S, y: S) -> Self {
        Trajectory { uav_id: uav_id.into(), waypoints: vec![Waypoint::new(S::zero(), x, y)] }
    }

    pub fn uav_id(&self) -> &str {
        &self.uav_id
    }

    pub fn waypoints(&self) -> &[Waypoint<S>] {
        &self.waypoints
    }

    pub fn start_time(&self) -> S {
        self.waypoints[0].t
    }

    pub fn end_time(&self) -> S {
        self.waypoints[self.waypoints.len() - 1].t
    }

    pub fn position_at(&self, t: S) -> (S, S) {
        let w = &self.waypoints;
        let first = w[0];
        let last = w[w.len() - 1];
        if t <= first.t {
            return (first.x, first.y);
        }
        if t >= last.t {
            return (last.x, last.y);
        }
        // index of first waypoint with time > t; guaranteed in 1..len
        let hi = w.partition_point(|p| p.t <= t);
        let (a, b) = (w[hi - 1], w[hi]);
        let f = (t - a.t) / (b.t - a.t);
        (a.x + (b.x - a.x) * f, a.y + (b.y - a.y) * f)
    }

    /// Positions at `n` evenly spaced times spanning `[t_start, t_end]`.
    pub fn discretize(&self, t_start: S, t_end: S, n: usize) -> Result<Vec<(S, S)>> {
        if n < 2 {
            return Err(Error::InvalidArgument(format!("discretization needs n >= 2, got {n}")));
        }
        if !(t_start < t_end) {
            return Err(Error::InvalidArgument("discretization needs t_start < t_end".into()));
        }
        Ok(sample_times(t_start, t_end, n).map(|t| self.position_at(t)).collect())
    }
}

fn sample_times<S: Scalar>(t_start: S, t_end: S, n: usize) -> impl Iterator<Item = S> {
    let span = t_end - t_start;
    let last = S::of((n - 1) as f64);
    (0..n).map(move |j| {
        if j == n - 1 {
            t_end
        } else {
            t_start + span * S::of(j as f64) / last
        }
    })
}

/// Axis-aligned query rectangle.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Region<S = f64> {
    pub x_min: S,
    pub y_min: S,
    pub x_max: S,
    pub y_max: S,
}

impl<S: Scalar> Region<S> {
    pub fn new(x_min: S, y_min: S, x_max: S, y_max: S) -> Result<Self> {
        if !(x_min < x_max && y_min < y_max) {
            return Err(Error::InvalidArgument("region needs x_min < x_max and y_min < y_max".into()));
        }
        Ok(Region { x_min, y_min, x_max, y_max })
    }

    pub fn width(&self) -> S {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> S {
        self.y_max - self.y_min
    }

    pub fn contains(&self, x: S, y: S) -> bool {
        x >= self.x_min && x <= self.x_max && y >= self.y_min && y <= self.y_max
    }

    /// Whether the closed segment `p0`-`p1` touches the closed rectangle
    /// (Liang-Barsky clipping; boundary contact counts).
    pub fn intersects_segment(&self, p0: (S, S), p1: (S, S)) -> bool {
        let (dx, dy) = (p1.0 - p0.0, p1.1 - p0.1);
        let mut u0 = S::zero();
        let mut u1 = S::one();
        let edges = [
            (-dx, p0.0 - self.x_min),
            (dx, self.x_max - p0.0),
            (-dy, p0.1 - self.y_min),
            (dy, self.y_max - p0.1),
        ];
        for (p, q) in edges {
            if p == S::zero() {
                if q < S::zero() {
                    return false;
                }
            } else {
                let r = q / p;
                if p < S::zero() {
                    u0 = u0.max(r);
                } else {
                    u1 = u1.min(r);
                }
                if u0 > u1 {
                    return false;
                }
            }
        }
        true
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum AggregationOp {
    Max,
    Min,
    Sum,
    Count,
    Avg,
}

/// `Request(T, R, D, A)` plus the time the ground station issues it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Query<S = f64> {
    pub t_start: S,
    pub t_end: S,
    pub region: Region<S>,
    pub data_type: String,
    pub aggregation_op: AggregationOp,
    pub issue_time: S,
}

impl<S: Scalar> Query<S> {
    pub fn new(t_start: S, t_end: S, region: Region<S>, issue_time: S) -> Result<Self> {
        if !(t_start < t_end) {
            return Err(Error::InvalidArgument("query needs t_start < t_end".into()));
        }
        Ok(Query {
            t_start,
            t_end,
            region,
            data_type: "TEMP".into(),
            aggregation_op: AggregationOp::Max,
            issue_time,
        })
    }

    /// One sample per second of query period, plus the closing endpoint.
    pub fn default_sample_count(&self) -> usize {
        let span = (self.t_end - self.t_start).to_f64_lossy();
        span.ceil() as usize + 1
    }
}

/// UAVs whose discretized path over the query period touches the region.
///
/// `n` defaults to [`Query::default_sample_count`]. The result preserves the
/// order of `trajs`.
pub fn determine_targets<'a, S: Scalar>(
    trajs: &'a [Trajectory<S>],
    query: &Query<S>,
    n: Option<usize>,
) -> Result<Vec<&'a str>> {
    let n = n.unwrap_or_else(|| query.default_sample_count()).max(2);
    let mut out = Vec::new();
    for traj in trajs {
        let pts = traj.discretize(query.t_start, query.t_end, n)?;
        if pts.windows(2).any(|s| query.region.intersects_segment(s[0], s[1])) {
            out.push(traj.uav_id());
        }
    }
    Ok(out)
}

/// Same as [`determine_targets`] but collected into a set of owned ids.
pub fn target_set<S: Scalar>(
    trajs: &[Trajectory<S>],
    query: &Query<S>,
    n: Option<usize>,
) -> Result<BTreeSet<String>> {
    Ok(determine_targets(trajs, query, n)?.into_iter().map(str::to_owned).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line() -> Trajectory<f64> {
        Trajectory::new("u", vec![Waypoint::new(0.0, 0.0, 0.0), Waypoint::new(10.0, 100.0, 0.0)])
            .unwrap()
    }

    #[test]
    fn position_interpolates_and_clamps() {
        let t = line();
        assert_eq!(t.position_at(5.0), (50.0, 0.0));
        assert_eq!(t.position_at(0.0), (0.0, 0.0));
        assert_eq!(t.position_at(20.0), (100.0, 0.0));
        assert_eq!(t.position_at(-3.0), (0.0, 0.0));
    }

    #[test]
    fn position_generic_f32() {
        let t = Trajectory::<f32>::new(
            "u",
            vec![Waypoint::new(0.0, 0.0, 0.0), Waypoint::new(4.0, 0.0, 8.0)],
        )
        .unwrap();
        assert_eq!(t.position_at(1.0), (0.0, 2.0));
    }

    #[test]
    fn rejects_bad_waypoints() {
        assert!(Trajectory::<f64>::new("u", vec![]).is_err());
        let w = Waypoint::new(1.0, 0.0, 0.0);
        assert!(Trajectory::new("u", vec![w, w]).is_err());
        assert!(Trajectory::new("u", vec![Waypoint::new(f64::NAN, 0.0, 0.0)]).is_err());
    }

    #[test]
    fn discretize_endpoints_and_stationary() {
        let t = line();
        assert_eq!(t.discretize(0.0, 10.0, 2).unwrap(), vec![(0.0, 0.0), (100.0, 0.0)]);
        let s = Trajectory::stationary("s", 3.0, 4.0);
        assert_eq!(s.discretize(0.0, 9.0, 7).unwrap(), vec![(3.0, 4.0); 7]);
        assert!(t.discretize(0.0, 10.0, 1).is_err());
        assert!(t.discretize(5.0, 5.0, 3).is_err());
    }

    #[test]
    fn discretize_zigzag_follows_arc_length() {
        // 10 m/s zigzag: 100 m east, 50 m north, 100 m west, 50 m north = 300 m in 30 s.
        let w = |t: f64, x: f64, y: f64| Waypoint::new(t, x, y);
        let z = Trajectory::new(
            "z",
            vec![w(0.0, 0.0, 0.0), w(10.0, 100.0, 0.0), w(15.0, 100.0, 50.0), w(25.0, 0.0, 50.0), w(30.0, 0.0, 100.0)],
        )
        .unwrap();
        let pts = z.discretize(0.0, 30.0, 31).unwrap();
        // closed-form arc-length parametrisation s = 10 t
        let oracle = |s: f64| -> (f64, f64) {
            match s {
                s if s <= 100.0 => (s, 0.0),
                s if s <= 150.0 => (100.0, s - 100.0),
                s if s <= 250.0 => (100.0 - (s - 150.0), 50.0),
                s => (0.0, 50.0 + (s - 250.0)),
            }
        };
        for (j, p) in pts.iter().enumerate() {
            let o = oracle(10.0 * j as f64);
            assert!((p.0 - o.0).abs() < 1e-9 && (p.1 - o.1).abs() < 1e-9, "{j}: {p:?} vs {o:?}");
        }
        for s in pts.windows(2) {
            let d = ((s[1].0 - s[0].0).powi(2) + (s[1].1 - s[0].1).powi(2)).sqrt();
            // chords across a corner are shorter than the 10 m path length
            assert!(d <= 10.0 + 1e-9 && d >= 10.0 / 2f64.sqrt() - 1e-9);
        }
    }

    #[test]
    fn segment_rectangle_cases() {
        let r = Region::new(0.0, 0.0, 10.0, 10.0).unwrap();
        assert!(r.intersects_segment((5.0, 5.0), (5.0, 5.0)));
        assert!(r.intersects_segment((-5.0, 5.0), (15.0, 5.0)));
        assert!(r.intersects_segment((-1.0, 9.0), (1.0, 11.0)), "corner clip");
        assert!(r.intersects_segment((10.0, 12.0), (10.0, 20.0)) == false);
        assert!(r.intersects_segment((10.0, -5.0), (10.0, 20.0)), "boundary contact");
        assert!(!r.intersects_segment((11.0, 0.0), (20.0, 5.0)));
        assert!(!r.intersects_segment((-2.0, 9.0), (1.0, 12.5)));
    }

    #[test]
    fn targets_containment_and_miss() {
        let inside = Trajectory::stationary("in", 5.0, 5.0);
        let outside = Trajectory::stationary("out", 50.0, 50.0);
        let region = Region::new(0.0, 0.0, 10.0, 10.0).unwrap();
        let q = Query::new(0.0, 30.0, region, 30.0).unwrap();
        let trajs = [inside, outside];
        assert_eq!(determine_targets(&trajs, &q, None).unwrap(), vec!["in"]);
    }

    #[test]
    fn targets_corner_clip_between_samples() {
        // passes diagonally through the top-left corner of the region between
        // the two samples t=0 and t=10
        let t = Trajectory::new(
            "c",
            vec![Waypoint::new(0.0, -3.0, 6.0), Waypoint::new(10.0, 3.0, 12.0)],
        )
        .unwrap();
        let region = Region::new(0.0, 0.0, 10.0, 10.0).unwrap();
        let q = Query::new(0.0, 10.0, region, 10.0).unwrap();
        let trajs = [t];
        // dense sampling oracle, dt = span / 1e4
        let dense = (0..=10_000).any(|k| {
            let (x, y) = trajs[0].position_at(k as f64 * 10.0 / 1e4);
            region.contains(x, y)
        });
        assert!(dense);
        assert_eq!(determine_targets(&trajs, &q, Some(2)).unwrap(), vec!["c"]);
    }

    #[test]
    fn default_sample_count_is_one_per_second() {
        let region = Region::new(0.0, 0.0, 1.0, 1.0).unwrap();
        assert_eq!(Query::new(0.0, 30.0, region, 0.0).unwrap().default_sample_count(), 31);
        assert_eq!(Query::new(0.0, 2.5, region, 0.0).unwrap().default_sample_count(), 4);
    }
}
