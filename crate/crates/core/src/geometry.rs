//! Sphere and polyline geometry: geodesic distances, rotation extraction and
//! proximity queries between polyline segments.

use std::collections::HashMap;

use nalgebra::{Matrix3, Rotation3, Unit, Vector3};
use serde::{Deserialize, Serialize};

/// A pair of non-adjacent segments closer than the query tolerance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub first: usize,
    pub second: usize,
    /// Midpoint of the closest pair of points.
    pub point: [f64; 3],
    pub distance: f64,
}

/// Great-circle distance between two points of the sphere of radius `r`.
/// The inputs need not be normalized.
pub fn geodesic_distance(a: &Vector3<f64>, b: &Vector3<f64>, r: f64) -> f64 {
    r * a.cross(b).norm().atan2(a.dot(b))
}

/// Angle between two vectors in [0, pi].
pub fn angle_between(a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    a.cross(b).norm().atan2(a.dot(b))
}

/// Rotation angle in [0, pi] and unit axis of a rotation matrix.
///
/// The axis is taken from the skew part for small angles and from the
/// symmetric part near pi, where the skew part vanishes. Returns the x axis
/// when the rotation is the identity to working precision.
pub fn angle_axis(m: &Matrix3<f64>) -> (f64, Vector3<f64>) {
    let skew = Vector3::new(m[(2, 1)] - m[(1, 2)], m[(0, 2)] - m[(2, 0)], m[(1, 0)] - m[(0, 1)]);
    let s = 0.5 * skew.norm();
    let c = 0.5 * (m.trace() - 1.0);
    let phi = s.atan2(c);
    if phi < 1e-12 {
        return (phi, Vector3::x());
    }
    if phi < 0.5 * std::f64::consts::PI {
        return (phi, skew / skew.norm());
    }
    // (M + M^T)/2 = cos(phi) I + (1 - cos(phi)) a a^T
    let sym = 0.5 * (m + m.transpose());
    let outer = (sym - Matrix3::identity() * c) / (1.0 - c);
    let k = (0..3).max_by(|&i, &j| outer[(i, i)].total_cmp(&outer[(j, j)])).unwrap();
    let mut axis: Vector3<f64> = outer.column(k).into_owned();
    axis /= axis.norm();
    if axis.dot(&skew) < 0.0 {
        axis = -axis;
    }
    (phi, axis)
}

pub fn rotation_about(axis: &Vector3<f64>, angle: f64) -> Matrix3<f64> {
    Rotation3::from_axis_angle(&Unit::new_normalize(*axis), angle).into_inner()
}

/// Closest points between segments [p0, p1] and [q0, q1].
/// Returns (distance, point on first, point on second).
pub fn segment_distance(
    p0: &Vector3<f64>,
    p1: &Vector3<f64>,
    q0: &Vector3<f64>,
    q1: &Vector3<f64>,
) -> (f64, Vector3<f64>, Vector3<f64>) {
    let d1 = p1 - p0;
    let d2 = q1 - q0;
    let r = p0 - q0;
    let a = d1.norm_squared();
    let e = d2.norm_squared();
    let f = d2.dot(&r);
    let eps = 1e-300;
    let (s, t) = if a <= eps && e <= eps {
        (0.0, 0.0)
    } else if a <= eps {
        (0.0, (f / e).clamp(0.0, 1.0))
    } else {
        let c = d1.dot(&r);
        if e <= eps {
            ((-c / a).clamp(0.0, 1.0), 0.0)
        } else {
            let b = d1.dot(&d2);
            let denom = a * e - b * b;
            let mut s = if denom > 1e-14 * a * e { ((b * f - c * e) / denom).clamp(0.0, 1.0) } else { 0.0 };
            let mut t = (b * s + f) / e;
            if t < 0.0 {
                t = 0.0;
                s = (-c / a).clamp(0.0, 1.0);
            } else if t > 1.0 {
                t = 1.0;
                s = ((b - c) / a).clamp(0.0, 1.0);
            }
            (s, t)
        }
    };
    let cp = p0 + d1 * s;
    let cq = q0 + d2 * t;
    ((cp - cq).norm(), cp, cq)
}

type Cell = (i64, i64, i64);

fn cell_of(p: &Vector3<f64>, size: f64) -> Cell {
    (
        (p.x / size).floor() as i64,
        (p.y / size).floor() as i64,
        (p.z / size).floor() as i64,
    )
}

/// Segment indices of a polyline bucketed by midpoint cell.
struct SegmentHash {
    size: f64,
    cells: HashMap<Cell, Vec<usize>>,
}

impl SegmentHash {
    fn new(points: &[Vector3<f64>], segments: usize, size: f64) -> Self {
        let mut cells: HashMap<Cell, Vec<usize>> = HashMap::new();
        for i in 0..segments {
            let m = 0.5 * (points[i] + points[(i + 1) % points.len()]);
            cells.entry(cell_of(&m, size)).or_default().push(i);
        }
        SegmentHash { size, cells }
    }

    /// Segments whose midpoint cell neighbours that of `m`, ascending.
    fn near(&self, m: &Vector3<f64>, out: &mut Vec<usize>) {
        out.clear();
        let (cx, cy, cz) = cell_of(m, self.size);
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(v) = self.cells.get(&(cx + dx, cy + dy, cz + dz)) {
                        out.extend_from_slice(v);
                    }
                }
            }
        }
        out.sort_unstable();
    }
}

/// Index separation of two segments, cyclic when `closed`.
fn index_gap(i: usize, j: usize, segments: usize, closed: bool) -> usize {
    let d = i.abs_diff(j);
    if closed { d.min(segments - d) } else { d }
}

/// All pairs of segments `(i, j)`, `i < j`, at index separation at least
/// `min_gap` whose distance is at most `tol`, in lexicographic order.
///
/// Segments are the chords between consecutive points; `closed` adds the
/// chord from the last point back to the first. The closing point must not be
/// repeated for closed polylines.
pub fn polyline_proximity(points: &[Vector3<f64>], closed: bool, tol: f64, min_gap: usize) -> Vec<Witness> {
    let n = points.len();
    if n < 2 {
        return Vec::new();
    }
    let segments = if closed { n } else { n - 1 };
    let max_len = (0..segments)
        .map(|i| (points[(i + 1) % n] - points[i]).norm())
        .fold(0.0, f64::max);
    let hash = SegmentHash::new(points, segments, max_len + tol);
    let mut found = Vec::new();
    let mut near = Vec::new();
    for i in 0..segments {
        let (p0, p1) = (points[i], points[(i + 1) % n]);
        hash.near(&(0.5 * (p0 + p1)), &mut near);
        for &j in near.iter().filter(|&&j| j > i) {
            if index_gap(i, j, segments, closed) < min_gap {
                continue;
            }
            let (d, a, b) = segment_distance(&p0, &p1, &points[j], &points[(j + 1) % n]);
            if d <= tol {
                let m = 0.5 * (a + b);
                found.push(Witness { first: i, second: j, point: [m.x, m.y, m.z], distance: d });
            }
        }
    }
    found
}

/// Smallest distance between segments at index separation at least
/// `min_gap`, considering only pairs closer than `radius`. `None` means every
/// such pair is at least `radius` apart.
pub fn min_segment_clearance(
    points: &[Vector3<f64>],
    closed: bool,
    radius: f64,
    min_gap: usize,
) -> Option<Witness> {
    polyline_proximity(points, closed, radius, min_gap)
        .into_iter()
        .min_by(|a, b| a.distance.total_cmp(&b.distance))
}

/// Same result as [`min_segment_clearance`] for polylines sampling a curve
/// of curvature at most `kappa`, searched coarse to fine.
///
/// Every `stride`-th point forms a coarse polyline; the fine polyline stays
/// within the sagitta `kappa d^2 / 8` of each coarse chord of length `d`, so
/// coarse pairs farther than `radius` plus twice that bound cannot contain a
/// fine pair closer than `radius`. Surviving pairs are resolved on the fine
/// segments.
pub fn strided_segment_clearance(
    points: &[Vector3<f64>],
    closed: bool,
    radius: f64,
    min_gap: usize,
    stride: usize,
    kappa: f64,
) -> Option<Witness> {
    let n = points.len();
    if stride <= 1 || n < 4 * stride {
        return min_segment_clearance(points, closed, radius, min_gap);
    }
    let segments = if closed { n } else { n - 1 };
    let coarse: Vec<Vector3<f64>> = (0..n).step_by(stride).map(|i| points[i]).collect();
    let coarse = if closed || (n - 1).is_multiple_of(stride) {
        coarse
    } else {
        let mut c = coarse;
        c.push(points[n - 1]);
        c
    };
    let m = coarse.len();
    let chords = if closed { m } else { m - 1 };
    let longest = (0..chords)
        .map(|i| (coarse[(i + 1) % m] - coarse[i]).norm())
        .fold(0.0, f64::max);
    let sag = kappa * longest * longest / 8.0;
    let coarse_gap = (min_gap / stride).saturating_sub(1).max(1);
    let chunk = |c: usize| c * stride..((c + 1) * stride).min(segments);
    let mut best: Option<Witness> = None;
    for w in polyline_proximity(&coarse, closed, radius + 2.0 * sag, coarse_gap) {
        for i in chunk(w.first) {
            for j in chunk(w.second) {
                let (i, j) = (i.min(j), i.max(j));
                if i == j || index_gap(i, j, segments, closed) < min_gap {
                    continue;
                }
                let (d, a, b) = segment_distance(&points[i], &points[(i + 1) % n], &points[j], &points[(j + 1) % n]);
                if d <= radius && best.as_ref().is_none_or(|w| d < w.distance) {
                    let mid = 0.5 * (a + b);
                    best = Some(Witness { first: i, second: j, point: [mid.x, mid.y, mid.z], distance: d });
                }
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn geodesic_distance_of_antipodes() {
        let a = Vector3::new(2.0, 0.0, 0.0);
        assert!((geodesic_distance(&a, &-a, 2.0) - 2.0 * PI).abs() < 1e-15);
        let b = Vector3::new(0.0, 2.0, 0.0);
        assert!((geodesic_distance(&a, &b, 2.0) - PI).abs() < 1e-15);
    }

    #[test]
    fn angle_axis_round_trips_across_range() {
        let axis = Vector3::new(1.0, -2.0, 0.5).normalize();
        for k in 1..=100 {
            let phi = PI * k as f64 / 100.0 - 1e-9;
            let m = rotation_about(&axis, phi);
            let (got, a) = angle_axis(&m);
            assert!((got - phi).abs() < 1e-9, "{phi} {got}");
            assert!((a - axis).norm() < 1e-6, "{phi} {a:?}");
        }
    }

    #[test]
    fn identity_has_zero_angle() {
        let (phi, _) = angle_axis(&Matrix3::identity());
        assert_eq!(phi, 0.0);
    }

    #[test]
    fn skew_segments_distance() {
        let (d, a, b) = segment_distance(
            &Vector3::new(-1.0, 0.0, 0.0),
            &Vector3::new(1.0, 0.0, 0.0),
            &Vector3::new(0.0, -1.0, 0.5),
            &Vector3::new(0.0, 1.0, 0.5),
        );
        assert!((d - 0.5).abs() < 1e-15);
        assert!(a.norm() < 1e-15);
        assert!((b - Vector3::new(0.0, 0.0, 0.5)).norm() < 1e-15);
    }

    #[test]
    fn parallel_segments_distance() {
        let (d, _, _) = segment_distance(
            &Vector3::new(0.0, 0.0, 0.0),
            &Vector3::new(1.0, 0.0, 0.0),
            &Vector3::new(2.0, 1.0, 0.0),
            &Vector3::new(3.0, 1.0, 0.0),
        );
        assert!((d - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn circle_has_no_proximity() {
        let pts: Vec<_> = (0..400)
            .map(|i| {
                let t = 2.0 * PI * i as f64 / 400.0;
                Vector3::new(t.cos(), t.sin(), 0.0)
            })
            .collect();
        let h = 2.0 * PI / 400.0;
        assert!(polyline_proximity(&pts, true, 3.0 * h, 8).is_empty());
    }

    #[test]
    fn crossing_is_reported_in_index_order() {
        // open polyline crossing itself: a square spiral overlapping its first leg
        let pts = vec![
            Vector3::new(0.0, 0.0, 0.0),
            Vector3::new(2.0, 0.0, 0.0),
            Vector3::new(2.0, 1.0, 0.0),
            Vector3::new(1.0, 1.0, 0.0),
            Vector3::new(1.0, -1.0, 0.0),
        ];
        let w = polyline_proximity(&pts, false, 1e-12, 2);
        assert_eq!(w.len(), 1);
        assert_eq!((w[0].first, w[0].second), (0, 3));
        assert!((Vector3::from(w[0].point) - Vector3::new(1.0, 0.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn strided_clearance_matches_direct() {
        // two parallel circles at height +-0.05 joined into one closed loop
        let n = 2000;
        let mut pts = Vec::new();
        for i in 0..n {
            let t = 2.0 * PI * i as f64 / n as f64;
            pts.push(Vector3::new(t.cos(), t.sin(), 0.05));
        }
        for i in 0..n {
            let t = -2.0 * PI * i as f64 / n as f64;
            pts.push(Vector3::new(t.cos(), t.sin(), -0.05 + 0.02 * (3.0 * t).sin()));
        }
        // the joins pass within about pi / n of the first circle
        for radius in [0.2, 0.05, 0.002] {
            let direct = min_segment_clearance(&pts, true, radius, 40).map(|w| (w.first, w.second, w.distance));
            let strided =
                strided_segment_clearance(&pts, true, radius, 40, 16, 2.0).map(|w| (w.first, w.second, w.distance));
            assert_eq!(direct, strided, "radius {radius}");
        }
        assert!(strided_segment_clearance(&pts, true, 0.002, 40, 16, 2.0).is_none());
    }
}
