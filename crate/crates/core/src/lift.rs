//! Spherical lifts of planar curves: the trace left on a ball of radius `r`
//! rolling without slipping or pivoting along the curve.

use std::f64::consts::PI;
use std::io::{BufRead, Write};

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::curves::{PlanarCurve, TOL_DERIV};
use crate::error::{Error, Result};
use crate::geometry::{angle_axis, geodesic_distance};
use crate::numeric;

/// Largest number of integration steps accepted for one lift.
pub const MAX_LIFT_STEPS: usize = 50_000_000;

/// Tolerance on the geodesic curvature residual of a lift.
pub fn tol_lift(max_abs_curvature: f64) -> f64 {
    1e-7 * max_abs_curvature.max(1.0)
}

/// A curve sampled on a uniform arclength grid on the sphere of radius `r`.
///
/// Closed curves do not repeat their first sample at the end.
#[derive(Debug, Clone, PartialEq)]
pub struct SphericalCurve {
    radius: f64,
    step: f64,
    points: Vec<Vector3<f64>>,
    tangents: Vec<Vector3<f64>>,
    geodesic_curvature: Vec<f64>,
    knots: Vec<usize>,
    closed: bool,
    /// For closed curves, the distance between the dropped repeated endpoint
    /// and the first sample.
    closing_gap: f64,
}

impl SphericalCurve {
    /// Builds a curve from points and unit tangents, measuring its geodesic
    /// curvature. Points are projected onto the sphere and tangents onto its
    /// tangent planes.
    pub fn from_samples(
        radius: f64,
        step: f64,
        points: Vec<Vector3<f64>>,
        tangents: Vec<Vector3<f64>>,
        knots: Vec<usize>,
        closed: bool,
    ) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidRadius(radius));
        }
        if points.len() < 2 || points.len() != tangents.len() {
            return Err(Error::InvalidInput("mismatched spherical sample arrays".into()));
        }
        let mut curve = SphericalCurve {
            radius,
            step,
            points,
            tangents,
            geodesic_curvature: Vec::new(),
            knots,
            closed,
            closing_gap: 0.0,
        };
        curve.project();
        curve.geodesic_curvature = curve.measure_geodesic_curvature();
        Ok(curve)
    }

    fn project(&mut self) {
        let r = self.radius;
        for (x, t) in self.points.iter_mut().zip(self.tangents.iter_mut()) {
            *x *= r / x.norm();
            let u = *x / r;
            *t -= u * u.dot(t);
            *t /= t.norm();
        }
    }

    /// Five-point derivative of the tangent field dotted with the left normal.
    fn measure_geodesic_curvature(&self) -> Vec<f64> {
        let n = self.points.len();
        if n < 3 {
            return vec![0.0; n];
        }
        let dt = if self.closed {
            // wrap two samples on either side so the stencil stays centred
            let mut ext = Vec::with_capacity(n + 4);
            ext.extend_from_slice(&self.tangents[n - 2..]);
            ext.extend_from_slice(&self.tangents);
            ext.extend_from_slice(&self.tangents[..2]);
            let shifted: Vec<usize> = self.knots.iter().map(|k| k + 2).collect();
            numeric::derivative(&ext, self.step, &shifted)[2..n + 2].to_vec()
        } else {
            numeric::derivative(&self.tangents, self.step, &self.knots)
        };
        (0..n).map(|i| dt[i].dot(&self.left_normal(i))).collect()
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn points(&self) -> &[Vector3<f64>] {
        &self.points
    }

    pub fn tangents(&self) -> &[Vector3<f64>] {
        &self.tangents
    }

    pub fn geodesic_curvature(&self) -> &[f64] {
        &self.geodesic_curvature
    }

    pub fn knots(&self) -> &[usize] {
        &self.knots
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Arclength covered by the samples, including the closing chord when closed.
    pub fn length(&self) -> f64 {
        let segments = if self.closed { self.points.len() } else { self.points.len() - 1 };
        self.step * segments as f64
    }

    /// Geodesic distance from the end back to the start. For closed curves
    /// this is the gap that was closed when the repeated endpoint was dropped.
    pub fn closure_gap(&self) -> f64 {
        if self.closed {
            self.closing_gap
        } else {
            geodesic_distance(&self.end(), &self.start(), self.radius)
        }
    }

    pub fn start(&self) -> Vector3<f64> {
        self.points[0]
    }

    pub fn end(&self) -> Vector3<f64> {
        self.points[self.points.len() - 1]
    }

    /// `(x / r) x T`, the direction positive geodesic curvature turns toward.
    pub fn left_normal(&self, i: usize) -> Vector3<f64> {
        (self.points[i] / self.radius).cross(&self.tangents[i])
    }

    /// Orthonormal frame `[x / r, T, x / r x T]` at sample `i`, as columns.
    pub fn frame(&self, i: usize) -> Matrix3<f64> {
        Matrix3::from_columns(&[self.points[i] / self.radius, self.tangents[i], self.left_normal(i)])
    }

    /// Same curve traversed with the roles of left and right exchanged:
    /// reflection through the plane z = 0.
    pub fn mirrored(&self) -> Self {
        let flip = |v: &Vector3<f64>| Vector3::new(v.x, v.y, -v.z);
        SphericalCurve {
            radius: self.radius,
            step: self.step,
            points: self.points.iter().map(flip).collect(),
            tangents: self.tangents.iter().map(flip).collect(),
            geodesic_curvature: self.geodesic_curvature.iter().map(|k| -k).collect(),
            knots: self.knots.clone(),
            closed: self.closed,
            closing_gap: self.closing_gap,
        }
    }

    /// Applies the rotation `m` to every sample.
    pub fn rotated(&self, m: &Matrix3<f64>) -> Self {
        SphericalCurve {
            radius: self.radius,
            step: self.step,
            points: self.points.iter().map(|p| m * p).collect(),
            tangents: self.tangents.iter().map(|t| m * t).collect(),
            geodesic_curvature: self.geodesic_curvature.clone(),
            knots: self.knots.clone(),
            closed: self.closed,
            closing_gap: self.closing_gap,
        }
    }

    /// Marks an open curve whose last sample repeats its first as closed,
    /// dropping the repeated sample.
    pub(crate) fn into_closed(mut self) -> Self {
        if !self.closed {
            self.closing_gap = geodesic_distance(&self.end(), &self.start(), self.radius);
            self.points.pop();
            self.tangents.pop();
            self.geodesic_curvature.pop();
            let n = self.points.len();
            self.knots.retain(|&k| k < n);
            self.closed = true;
        }
        self
    }

    /// Largest deviation of the measured geodesic curvature from `kappa`,
    /// ignoring `skip` samples at each end of open curves and around knots,
    /// where the derivative stencil is one-sided.
    pub fn curvature_residual(&self, kappa: &[f64], skip: usize) -> f64 {
        let n = self.points.len().min(kappa.len());
        let near_knot = |i: usize| self.knots.iter().any(|&k| i.abs_diff(k) < skip);
        (0..n)
            .filter(|&i| self.closed || (i >= skip && i + skip < n))
            .filter(|&i| !near_knot(i))
            .map(|i| (self.geodesic_curvature[i] - kappa[i]).abs())
            .fold(0.0, f64::max)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "s,x,y,z,tx,ty,tz,kappa_g")?;
        for i in 0..self.points.len() {
            let (p, t) = (self.points[i], self.tangents[i]);
            writeln!(
                w,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                i as f64 * self.step,
                p.x,
                p.y,
                p.z,
                t.x,
                t.y,
                t.z,
                self.geodesic_curvature[i]
            )?;
        }
        Ok(())
    }

    /// Reads the CSV format written by [`write_csv`](Self::write_csv). The
    /// radius is taken from the first point. Closedness is not stored in the
    /// file and must be supplied.
    pub fn read_csv<R: BufRead>(r: R, closed: bool) -> Result<Self> {
        let ctx = "spherical curve CSV";
        let rows = crate::io::read_csv_rows(r, &["s", "x", "y", "z", "tx", "ty", "tz", "kappa_g"], ctx)?;
        if rows.len() < 2 {
            return Err(Error::parse(ctx, "need at least 2 rows"));
        }
        let n = rows.len();
        let step = (rows[n - 1][0] - rows[0][0]) / (n - 1) as f64;
        let points: Vec<Vector3<f64>> = rows.iter().map(|r| Vector3::new(r[1], r[2], r[3])).collect();
        let radius = points[0].norm();
        Ok(SphericalCurve {
            radius,
            step,
            tangents: rows.iter().map(|r| Vector3::new(r[4], r[5], r[6])).collect(),
            geodesic_curvature: rows.iter().map(|r| r[7]).collect(),
            points,
            knots: Vec::new(),
            closed,
            closing_gap: 0.0,
        })
    }
}

/// Right-hand side of the rolling equation
/// `x'' = kappa (x x x') / r - x / r^2`.
fn accel(x: &Vector3<f64>, v: &Vector3<f64>, kappa: f64, r: f64) -> Vector3<f64> {
    x.cross(v) * (kappa / r) - x / (r * r)
}

/// Projects `(x, v)` onto `|x| = r`, `<x, v> = 0`, `|v| = 1`.
fn project_state(x: &mut Vector3<f64>, v: &mut Vector3<f64>, r: f64) {
    *x *= r / x.norm();
    let u = *x / r;
    *v -= u * u.dot(v);
    *v /= v.norm();
}

/// Integrates the rolling equation along `c` on the grid of `c`, starting at
/// `x0 = (r, 0, 0)` with tangent `(0, 1, 0)`. Positive planar curvature turns
/// toward `+z` initially.
pub fn lift(c: &PlanarCurve, r: f64) -> Result<SphericalCurve> {
    lift_from(c, r, &Matrix3::identity())
}

/// As [`lift`], starting from the frame `[x / r, T, x / r x T] = start`.
pub fn lift_from(c: &PlanarCurve, r: f64, start: &Matrix3<f64>) -> Result<SphericalCurve> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::InvalidRadius(r));
    }
    let n = c.intervals();
    if n > MAX_LIFT_STEPS {
        return Err(Error::ResolutionExceeded(format!("{n} steps exceeds the limit {MAX_LIFT_STEPS}")));
    }
    let h = c.step();
    let mut x: Vector3<f64> = start.column(0) * r;
    let mut v: Vector3<f64> = start.column(1).into_owned();
    project_state(&mut x, &mut v, r);
    let mut points = Vec::with_capacity(n + 1);
    let mut tangents = Vec::with_capacity(n + 1);
    points.push(x);
    tangents.push(v);
    let kappa = c.curvature();
    for i in 0..n {
        let s = i as f64 * h;
        let k0 = kappa[i];
        let k1 = kappa[i + 1];
        let kh = if c.knots().contains(&(i + 1)) || c.knots().contains(&i) {
            0.5 * (k0 + k1)
        } else {
            c.curvature_at(s + 0.5 * h)
        };
        let a1 = accel(&x, &v, k0, r);
        let (x2, v2) = (x + v * (0.5 * h), v + a1 * (0.5 * h));
        let a2 = accel(&x2, &v2, kh, r);
        let (x3, v3) = (x + v2 * (0.5 * h), v + a2 * (0.5 * h));
        let a3 = accel(&x3, &v3, kh, r);
        let (x4, v4) = (x + v3 * h, v + a3 * h);
        let a4 = accel(&x4, &v4, k1, r);
        x += (v + (v2 + v3) * 2.0 + v4) * (h / 6.0);
        v += (a1 + (a2 + a3) * 2.0 + a4) * (h / 6.0);
        project_state(&mut x, &mut v, r);
        points.push(x);
        tangents.push(v);
    }
    SphericalCurve::from_samples(r, h, points, tangents, c.knots().to_vec(), false)
}

/// Geodesic distance on the sphere between the end and start of the lift.
pub fn closure_defect(c: &PlanarCurve, r: f64) -> Result<f64> {
    let l = lift(c, r)?;
    Ok(geodesic_distance(&l.end(), &l.start(), r))
}

/// Rotation carrying the frame at the start of one period of the lift to the
/// frame at its end.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Monodromy {
    /// Row-major 3x3 matrix.
    pub matrix: [f64; 9],
    /// Rotation angle in [0, pi].
    pub angle: f64,
    /// Unit rotation axis; the x axis when the angle vanishes.
    pub axis: [f64; 3],
    /// Source arclength of one period.
    #[serde(default)]
    pub period: f64,
}

impl Monodromy {
    pub fn from_matrix(m: &Matrix3<f64>, period: f64) -> Self {
        let (angle, axis) = angle_axis(m);
        let mut matrix = [0.0; 9];
        for i in 0..3 {
            for j in 0..3 {
                matrix[3 * i + j] = m[(i, j)];
            }
        }
        Monodromy {
            matrix,
            angle,
            axis: [axis.x, axis.y, axis.z],
            period,
        }
    }

    /// Monodromy of one lifted period: the end frame relative to the start frame.
    pub fn of_lift(l: &SphericalCurve) -> Self {
        let m = l.frame(l.len() - 1) * l.frame(0).transpose();
        Self::from_matrix(&orthonormalize(&m), l.step() * (l.len() - 1) as f64)
    }

    pub fn rotation(&self) -> Matrix3<f64> {
        Matrix3::from_row_slice(&self.matrix)
    }

    pub fn axis_vector(&self) -> Vector3<f64> {
        Vector3::from(self.axis)
    }

    /// `M^j`.
    pub fn power(&self, j: usize) -> Matrix3<f64> {
        let m = self.rotation();
        (0..j).fold(Matrix3::identity(), |acc, _| m * acc)
    }

    /// `max |M^T M - I|`.
    pub fn orthogonality_error(&self) -> f64 {
        let m = self.rotation();
        (m.transpose() * m - Matrix3::identity()).abs().max()
    }
}

/// Nearest rotation by Gram-Schmidt on the columns.
fn orthonormalize(m: &Matrix3<f64>) -> Matrix3<f64> {
    let a: Vector3<f64> = m.column(0).normalize();
    let mut b: Vector3<f64> = m.column(1).into_owned();
    b -= a * a.dot(&b);
    b /= b.norm();
    Matrix3::from_columns(&[a, b, a.cross(&b)])
}

/// Monodromy of one period of a C1-periodic planar curve.
pub fn monodromy(c: &PlanarCurve, r: f64) -> Result<Monodromy> {
    let mismatch = c.seam_mismatch();
    if mismatch >= TOL_DERIV {
        return Err(Error::NotC1Periodic { mismatch });
    }
    Ok(Monodromy::of_lift(&lift(c, r)?))
}

/// Latitude `arctan(r / R)` of the circle traced on a ball of radius `r`
/// rolling around a planar circle of radius `R`, and the length of that
/// spherical circle, `2 pi / sqrt(1/r^2 + 1/R^2)`.
///
/// Latitude is measured from the great circle orthogonal to the rotation
/// axis of the trace.
pub fn circle_lift_closed_form(r: f64, big_r: f64) -> Result<(f64, f64)> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::InvalidRadius(r));
    }
    if !(big_r > 0.0) || !big_r.is_finite() {
        return Err(Error::InvalidInput(format!("planar circle radius {big_r} must be positive")));
    }
    let latitude = (r / big_r).atan();
    let length = 2.0 * PI / (1.0 / (r * r) + 1.0 / (big_r * big_r)).sqrt();
    Ok((latitude, length))
}

/// Length of the circle at `latitude` on the sphere of radius `r`.
pub fn latitude_circle_length(r: f64, latitude: f64) -> f64 {
    2.0 * PI * r * latitude.cos()
}

/// Angle from the pole, the complement of the latitude.
pub fn colatitude(latitude: f64) -> f64 {
    0.5 * PI - latitude
}

/// Geodesic curvature of the circle at `latitude` on the sphere of radius `r`.
pub fn latitude_circle_curvature(r: f64, latitude: f64) -> f64 {
    latitude.tan() / r
}

/// `pi sqrt((sqrt(17) - 1) / 2)`, the fixed point ratio `l / r` of
/// [`semicircle_trace_length`].
pub fn injectivity_threshold_constant() -> f64 {
    PI * ((17f64.sqrt() - 1.0) / 2.0).sqrt()
}

/// `2 pi r / sqrt(1 + l^2 / (pi^2 r^2))`, whose fixed point in `r` is `l / a`
/// with `a` from [`injectivity_threshold_constant`]. It swaps latitude and
/// colatitude: the circle actually traced on a semicircle of arclength `l`
/// has length `circle_lift_closed_form(r, l / pi).1`, which equals `l` at
/// `r = l / (sqrt(3) pi)`.
pub fn semicircle_trace_length(r: f64, l: f64) -> f64 {
    2.0 * PI * r / (1.0 + l * l / (PI * PI * r * r)).sqrt()
}


#[cfg(test)]
mod props {
    use super::*;
    use nalgebra::Vector2;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn lift_stays_on_the_sphere(big_r in 0.3f64..5.0, r in 0.3f64..3.0, ccw in any::<bool>()) {
            let c = PlanarCurve::circle(big_r, 2.0 * PI * big_r, 400, ccw).unwrap();
            let l = lift(&c, r).unwrap();
            for (p, t) in l.points().iter().zip(l.tangents()) {
                prop_assert!((p.norm() - r).abs() < 1e-12 * r);
                prop_assert!((t.norm() - 1.0).abs() < 1e-12);
                prop_assert!(p.dot(t).abs() < 1e-12 * r);
            }
            prop_assert!(Monodromy::of_lift(&l).orthogonality_error() < 1e-12);
        }

        #[test]
        fn circle_lift_closes_after_its_trace_length(big_r in 0.3f64..5.0, r in 0.3f64..3.0) {
            let (_, trace) = circle_lift_closed_form(r, big_r).unwrap();
            let c = PlanarCurve::circle(big_r, trace, 2000, true).unwrap();
            prop_assert!(closure_defect(&c, r).unwrap() < 1e-6 * r);
        }

        #[test]
        fn segment_lift_is_a_great_circle(length in 0.01f64..20.0, r in 0.3f64..3.0) {
            // RK4 phase error is O((h/r)^4) per radian turned
            let samples = ((200.0 * length / r).ceil() as usize).max(200);
            let c = PlanarCurve::segment(Vector2::zeros(), 0.0, length, samples).unwrap();
            let turned = (length / r).rem_euclid(2.0 * PI);
            let expected = r * turned.min(2.0 * PI - turned);
            prop_assert!((closure_defect(&c, r).unwrap() - expected).abs() < 1e-8 * r);
        }
    }
}
