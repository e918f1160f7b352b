//! Closing radii: ball radii at which `n` rotated copies of a lifted period
//! join into a simple closed spherical curve.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curves::{PlanarCurve, TOL_DERIV};
use crate::error::{Error, Result};
use crate::geometry::{angle_axis, angle_between, geodesic_distance, polyline_proximity, Witness};
use crate::lift::{lift, tol_lift, Monodromy, SphericalCurve};

/// Witness lists in reports are truncated to this many entries.
pub const MAX_WITNESSES: usize = 32;

/// Required closure of a certified loop, relative to `r`.
pub const SEAM_GAP_TOL: f64 = 1e-6;

/// Required axis stationarity across the final bisection bracket, radians.
pub const AXIS_DRIFT_TOL: f64 = 1e-6;

/// Search controls for [`find_closing_radius`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosureOptions {
    /// Radius grid points over the bracket.
    pub grid: usize,
    /// Bisection target on `|angle - 2 pi / n|`.
    pub angle_tol: f64,
    /// Bisection iteration cap.
    pub max_iter: usize,
}

impl Default for ClosureOptions {
    fn default() -> Self {
        ClosureOptions {
            grid: 400,
            angle_tol: 1e-13,
            max_iter: 200,
        }
    }
}

/// Evidence that `n` rotated copies of a lifted period close up at radius `r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosureCertificate {
    pub r: f64,
    pub n: usize,
    /// Geodesic distance between the end and start of the n-copy loop.
    pub seam_gap: f64,
    pub simple: bool,
    /// Smallest geodesic distance from the apex to the lifted period.
    pub b_r: f64,
    /// Angle at the apex between the geodesics to the period's start and end.
    pub a_r: f64,
    /// Fixed point of the monodromy on the sphere of radius `r`, on the side
    /// of the lifted period.
    pub apex: [f64; 3],
    pub witnesses: Vec<Witness>,
    /// Whether the minimum defining `b_r` is attained at separated samples
    /// within `1e-9 r`.
    pub b_r_near_tie: bool,
    /// Geodesic distance from the apex to the period's start.
    pub apex_radius: f64,
    /// Closure defect of one period.
    pub f_r: f64,
    /// Unwrapped signed monodromy angle at `r`, and its target `2 pi / n`
    /// (negated for clockwise closure).
    pub angle: f64,
    pub target: f64,
    /// Final bisection bracket and the signed residuals at its ends.
    pub bracket: [f64; 2],
    pub bracket_residuals: [f64; 2],
    /// Monodromy axis motion across the final bracket, radians.
    pub axis_drift: f64,
    /// Mismatch of the unit tangents where the loop closes.
    pub seam_tangent_gap: f64,
    pub monodromy: Monodromy,
    /// Samples per period.
    pub period_samples: usize,
    pub period_length: f64,
}

/// Signed angle tracker: the monodromy angle continued through pi by keeping
/// the axis continuous.
#[derive(Debug, Clone, Copy)]
struct Branch {
    angle: f64,
    axis: Vector3<f64>,
}

impl Branch {
    fn follow(&self, m: &Matrix3<f64>) -> Branch {
        let (phi, mut axis) = angle_axis(m);
        let mut signed = phi;
        if axis.dot(&self.axis) < 0.0 {
            axis = -axis;
            signed = -phi;
        }
        let k = ((self.angle - signed) / (2.0 * PI)).round();
        Branch {
            angle: signed + 2.0 * PI * k,
            axis,
        }
    }
}

fn monodromy_matrix(k: &PlanarCurve, r: f64) -> Result<Matrix3<f64>> {
    Ok(Monodromy::of_lift(&lift(k, r)?).rotation())
}

#[derive(Debug, Clone)]
struct Crossing {
    n: usize,
    target: f64,
    lo: (f64, Branch),
    hi: (f64, Branch),
}

/// Searches `[r_lo, r_hi]` for radii where the monodromy angle of `k` equals
/// `2 pi / n`, `n <= n_max`, and returns the certificate of the largest such
/// radius (then smallest `n`) whose n-copy loop is closed and simple.
pub fn find_closing_radius(
    k: &PlanarCurve,
    r_lo: f64,
    r_hi: f64,
    n_max: usize,
    opts: &ClosureOptions,
) -> Result<ClosureCertificate> {
    let mismatch = k.seam_mismatch();
    if mismatch >= TOL_DERIV {
        return Err(Error::NotC1Periodic { mismatch });
    }
    for r in [r_lo, r_hi] {
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::InvalidRadius(r));
        }
    }
    if !(r_lo < r_hi) {
        return Err(Error::InvalidInput(format!("empty radius bracket [{r_lo}, {r_hi}]")));
    }
    if n_max == 0 || opts.grid < 2 {
        return Err(Error::InvalidInput("n_max and grid must be positive".into()));
    }

    // Log grid from large to small radius.
    let g = opts.grid;
    let ratio = (r_lo / r_hi).ln();
    let radii: Vec<f64> = (0..g)
        .map(|i| if i + 1 == g { r_lo } else { r_hi * (ratio * i as f64 / (g - 1) as f64).exp() })
        .collect();
    let mats: Vec<Matrix3<f64>> = radii
        .par_iter()
        .map(|&r| monodromy_matrix(k, r))
        .collect::<Result<_>>()?;

    // At large radius the lift is nearly a great circle about +z, turned by
    // about |v| / r; the branch nearest that estimate seeds the unwrapping.
    let (phi0, axis0) = angle_axis(&mats[0]);
    let estimate = k.translation().norm() / r_hi;
    let (signed0, axis0) = if phi0 < 1e-12 {
        (0.0, Vector3::z())
    } else if axis0.z >= 0.0 {
        (phi0, axis0)
    } else {
        (-phi0, -axis0)
    };
    let turns = ((estimate - signed0) / (2.0 * PI)).round();
    let mut branch = Branch {
        angle: signed0 + 2.0 * PI * turns,
        axis: axis0,
    };
    let mut branches = Vec::with_capacity(g);
    branches.push(branch);
    for m in &mats[1..] {
        branch = branch.follow(m);
        branches.push(branch);
    }

    let (phi_min, phi_max) = branches
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), br| (a.min(br.angle), b.max(br.angle)));

    let mut crossings = Vec::new();
    for i in 0..g - 1 {
        for n in 1..=n_max {
            for target in [2.0 * PI / n as f64, -2.0 * PI / n as f64] {
                let d0 = branches[i].angle - target;
                let d1 = branches[i + 1].angle - target;
                if d0 == 0.0 || (d0 < 0.0) != (d1 < 0.0) {
                    crossings.push(Crossing {
                        n,
                        target,
                        lo: (radii[i + 1], branches[i + 1]),
                        hi: (radii[i], branches[i]),
                    });
                }
            }
        }
    }
    if crossings.is_empty() {
        return Err(Error::NoClosureInBracket { phi_min, phi_max });
    }

    let refined: Vec<Refined> = crossings
        .par_iter()
        .map(|c| refine(k, c, opts))
        .collect::<Result<_>>()?;
    let mut order: Vec<usize> = (0..refined.len()).collect();
    order.sort_by(|&a, &b| {
        refined[b]
            .r
            .total_cmp(&refined[a].r)
            .then(crossings[a].n.cmp(&crossings[b].n))
    });

    let mut witnesses = Vec::new();
    for idx in order {
        let c = &crossings[idx];
        let rf = &refined[idx];
        // a single copy closes at the identity, where the axis is undefined
        if c.n > 1 && rf.axis_drift >= AXIS_DRIFT_TOL {
            continue;
        }
        let cert = certify(k, c, rf)?;
        if cert.seam_gap <= SEAM_GAP_TOL * cert.r && cert.simple {
            return Ok(cert);
        }
        if witnesses.len() < MAX_WITNESSES {
            witnesses.extend(cert.witnesses.into_iter().take(MAX_WITNESSES - witnesses.len()));
        }
    }
    Err(Error::NoSimpleClosure { witnesses })
}

#[derive(Debug, Clone)]
struct Refined {
    r: f64,
    branch: Branch,
    bracket: [f64; 2],
    residuals: [f64; 2],
    axis_drift: f64,
}

fn refine(k: &PlanarCurve, c: &Crossing, opts: &ClosureOptions) -> Result<Refined> {
    let (mut lo, mut blo) = c.lo;
    let (mut hi, mut bhi) = c.hi;
    let mut best = if (blo.angle - c.target).abs() <= (bhi.angle - c.target).abs() { (lo, blo) } else { (hi, bhi) };
    for _ in 0..opts.max_iter {
        if (best.1.angle - c.target).abs() <= opts.angle_tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let bm = blo.follow(&monodromy_matrix(k, mid)?);
        if (bm.angle - c.target).abs() < (best.1.angle - c.target).abs() {
            best = (mid, bm);
        }
        if ((bm.angle - c.target) < 0.0) == ((blo.angle - c.target) < 0.0) {
            lo = mid;
            blo = bm;
        } else {
            hi = mid;
            bhi = bm;
        }
    }
    Ok(Refined {
        r: best.0,
        branch: best.1,
        bracket: [lo, hi],
        residuals: [blo.angle - c.target, bhi.angle - c.target],
        axis_drift: angle_between(&blo.axis, &bhi.axis),
    })
}

fn certify(k: &PlanarCurve, c: &Crossing, rf: &Refined) -> Result<ClosureCertificate> {
    let r = rf.r;
    let piece = lift(k, r)?;
    let m = Monodromy::of_lift(&piece);
    let closed = concatenate_rotated(&piece, &m, c.n)?;
    let seam_gap = closed.closure_gap();
    let seam_tangent_gap = (closed.tangents()[0] - last_tangent(&piece, &m, c.n)).norm();
    let tol = 3.0 * piece.step();
    let witnesses = if closed.is_closed() { self_proximity(&closed, tol) } else { Vec::new() };
    let simple = closed.is_closed() && witnesses.is_empty();

    let axis = m.axis_vector();
    let apex_of = |p: Vector3<f64>| {
        let mut best = (f64::INFINITY, 0usize);
        for (i, x) in piece.points().iter().enumerate() {
            let d = geodesic_distance(&p, x, r);
            if d < best.0 {
                best = (d, i);
            }
        }
        best
    };
    let (bp, ip) = apex_of(axis * r);
    let (bm, im) = apex_of(-axis * r);
    let (apex, b_r, imin) = if bp <= bm { (axis * r, bp, ip) } else { (-axis * r, bm, im) };
    let b_r_near_tie = piece
        .points()
        .iter()
        .enumerate()
        .any(|(i, x)| i.abs_diff(imin) > 2 && geodesic_distance(&apex, x, r) <= b_r + 1e-9 * r);
    let a_r = apex_angle(&apex, &piece.start(), &piece.end());

    Ok(ClosureCertificate {
        r,
        n: c.n,
        seam_gap,
        simple,
        b_r,
        a_r,
        apex: [apex.x, apex.y, apex.z],
        witnesses: witnesses.into_iter().take(MAX_WITNESSES).collect(),
        b_r_near_tie,
        apex_radius: geodesic_distance(&apex, &piece.start(), r),
        f_r: geodesic_distance(&piece.end(), &piece.start(), r),
        angle: rf.branch.angle,
        target: c.target,
        bracket: rf.bracket,
        bracket_residuals: rf.residuals,
        axis_drift: rf.axis_drift,
        seam_tangent_gap,
        monodromy: m,
        period_samples: k.len(),
        period_length: k.length(),
    })
}

fn last_tangent(piece: &SphericalCurve, m: &Monodromy, n: usize) -> Vector3<f64> {
    m.power(n - 1) * piece.tangents()[piece.len() - 1]
}

/// Angle at `p` between the geodesics to `a` and `b`.
pub fn apex_angle(p: &Vector3<f64>, a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    let u = p.normalize();
    let ta = a - u * u.dot(a);
    let tb = b - u * u.dot(b);
    angle_between(&ta, &tb)
}

/// Concatenation of `M^j` applied to the piece, `j = 0..n`. The joint samples
/// are shared; when the result returns to its start within
/// `n * 10 * tol_lift` it is marked closed and the repeated start dropped.
pub fn concatenate_rotated(piece: &SphericalCurve, m: &Monodromy, n: usize) -> Result<SphericalCurve> {
    if n == 0 {
        return Err(Error::InvalidInput("copy count must be positive".into()));
    }
    let r = piece.radius();
    let rot = m.rotation();
    let tol = 10.0 * tol_lift(max_abs(piece.geodesic_curvature()));
    let len = piece.len();
    let mut points = Vec::with_capacity(n * (len - 1) + 1);
    let mut tangents = Vec::with_capacity(n * (len - 1) + 1);
    let mut knots: Vec<usize> = Vec::new();
    if n == 1 {
        let gap = ((piece.end() - piece.start()).norm() / r)
            .max((piece.tangents()[len - 1] - piece.tangents()[0]).norm());
        return Ok(if gap <= tol { piece.clone().into_closed() } else { piece.clone() });
    }
    let mut power = Matrix3::identity();
    let kappa = piece.geodesic_curvature();
    let jump = (kappa[0] - kappa[len - 1]).abs() > 1e-6 * max_abs(kappa).max(1.0 / r);
    for j in 0..n {
        let offset = j * (len - 1);
        if j > 0 {
            // joint: the end of copy j-1 must coincide with the start of copy j
            let end = points.last().copied().unwrap_or_else(Vector3::zeros);
            let end_t: Vector3<f64> = tangents.last().copied().unwrap_or_else(Vector3::zeros);
            let start = power * piece.start();
            let start_t = power * piece.tangents()[0];
            let gap = ((end - start).norm() / r).max((end_t - start_t).norm());
            if gap > tol {
                return Err(Error::SeamMismatch { seam: j, gap });
            }
            points.pop();
            tangents.pop();
            if jump {
                knots.push(offset);
            }
        }
        for &kn in piece.knots() {
            knots.push(offset + kn);
        }
        points.extend(piece.points().iter().map(|p| power * p));
        tangents.extend(piece.tangents().iter().map(|t| power * t));
        power = rot * power;
    }
    let step = piece.step();
    let gap = ((points[points.len() - 1] - points[0]).norm() / r)
        .max((tangents[tangents.len() - 1] - tangents[0]).norm());
    let closed = gap <= n as f64 * tol;
    let curve = SphericalCurve::from_samples(r, step, points, tangents, knots, false)?;
    Ok(if closed { curve.into_closed() } else { curve })
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// All pairs of non-adjacent chords of `l` within `tol` of each other, in
/// index order. Chords closer than `2 tol` in arclength are adjacent.
pub fn self_proximity(l: &SphericalCurve, tol: f64) -> Vec<Witness> {
    let min_gap = (2.0 * tol / l.step()).ceil() as usize + 2;
    polyline_proximity(l.points(), l.is_closed(), tol, min_gap)
}

/// Whether no two non-adjacent chords pass within `tol`; the witness is the
/// first offending pair in index order.
pub fn is_simple(l: &SphericalCurve, tol: f64) -> (bool, Option<Witness>) {
    let w = self_proximity(l, tol);
    (w.is_empty(), w.into_iter().next())
}

/// Area of the smaller region bounded by a simple closed curve, by the
/// Gauss-Bonnet relation for the geodesic polygon through its samples.
pub fn enclosed_area(l: &SphericalCurve) -> Result<f64> {
    if !l.is_closed() {
        return Err(Error::RequiresSimpleLoop);
    }
    let tol = 3.0 * l.step();
    if !is_simple(l, tol).0 {
        return Err(Error::RequiresSimpleLoop);
    }
    let left = left_area(l.points(), l.radius());
    let total = 4.0 * PI * l.radius() * l.radius();
    Ok(left.min(total - left))
}

/// Area to the left of the closed geodesic polygon through `points`.
pub fn left_area(points: &[Vector3<f64>], r: f64) -> f64 {
    let n = points.len();
    let mut turning = crate::numeric::CompensatedSum::default();
    for i in 0..n {
        let prev = points[(i + n - 1) % n];
        let cur = points[i];
        let next = points[(i + 1) % n];
        let d_in = prev.cross(&cur).cross(&cur);
        let d_out = cur.cross(&next).cross(&cur);
        let u = cur / cur.norm();
        // signed angle from d_in to d_out about the outward normal
        turning.add(u.dot(&d_in.cross(&d_out)).atan2(d_in.dot(&d_out)));
    }
    let t = turning.value();
    // fold the integer winding away so that the result lies in [0, 4 pi r^2)
    let a = (2.0 * PI - t).rem_euclid(4.0 * PI);
    a * r * r
}

/// Smallest `n >= 1` with `2 pi / n <= a`; it also satisfies
/// `2 pi / n >= a / 3` for every `a` in (0, 4 pi].
pub fn integer_gap(a: f64) -> Result<usize> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::InvalidInput(format!("angle {a} must be positive")));
    }
    let mut n = (2.0 * PI / a).ceil().max(1.0) as usize;
    // guard the ceiling against rounding
    while n > 1 && 2.0 * PI / (n - 1) as f64 <= a {
        n -= 1;
    }
    while 2.0 * PI / n as f64 > a {
        n += 1;
    }
    Ok(n)
}

/// Apex angle of the isosceles spherical triangle with legs `b` and base `f`
/// on the sphere of radius `r`, from the spherical law of cosines.
pub fn law_of_cosines_apex(f: f64, b: f64, r: f64) -> f64 {
    let (cb, sb) = ((b / r).cos(), (b / r).sin());
    (((f / r).cos() - cb * cb) / (sb * sb)).clamp(-1.0, 1.0).acos()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curves::{arclength_reparam, ClosedForm, FunctionSpec};
    use crate::geometry::rotation_about;
    use nalgebra::Vector2;

    fn great_circle(r: f64, n: usize, axis: Vector3<f64>, from: Vector3<f64>) -> SphericalCurve {
        let axis = axis.normalize();
        let pts: Vec<_> = (0..n)
            .map(|i| rotation_about(&axis, 2.0 * PI * i as f64 / n as f64) * from * r)
            .collect();
        let tans = pts.iter().map(|p| axis.cross(p).normalize()).collect();
        SphericalCurve::from_samples(r, 2.0 * PI * r / n as f64, pts, tans, vec![], true).unwrap()
    }

    #[test]
    fn great_circle_is_simple_and_splits_sphere() {
        let g = great_circle(2.0, 1000, Vector3::z(), Vector3::x());
        assert!(is_simple(&g, 3.0 * g.step()).0);
        let a = enclosed_area(&g).unwrap();
        assert!((a - 2.0 * PI * 4.0).abs() < 1e-9);
    }

    #[test]
    fn figure_eight_is_not_simple() {
        let r = 1.0;
        let n = 800;
        let a = great_circle(r, n, Vector3::z(), Vector3::x());
        let b = great_circle(r, n, Vector3::y(), Vector3::x());
        let mut pts = a.points().to_vec();
        pts.extend_from_slice(b.points());
        let mut tans = a.tangents().to_vec();
        tans.extend_from_slice(b.tangents());
        let l = SphericalCurve::from_samples(r, a.step(), pts, tans, vec![], true).unwrap();
        let (simple, w) = is_simple(&l, 3.0 * l.step());
        assert!(!simple);
        let w = w.unwrap();
        let p = Vector3::from(w.point);
        // first offending pair: the lobes touch at (1,0,0) and cross at (-1,0,0)
        assert!((p - Vector3::x()).norm() < 0.05 || (p + Vector3::x()).norm() < 0.05);
        assert!(matches!(enclosed_area(&l), Err(Error::RequiresSimpleLoop)));
    }

    #[test]
    fn latitude_cap_area() {
        // colatitude pi/3, r = 1
        let n = 4000;
        let col = PI / 3.0;
        let pts: Vec<_> = (0..n)
            .map(|i| {
                let t = 2.0 * PI * i as f64 / n as f64;
                Vector3::new(col.sin() * t.cos(), col.sin() * t.sin(), col.cos())
            })
            .collect();
        let tans = pts.iter().map(|p| Vector3::new(-p.y, p.x, 0.0).normalize()).collect();
        let l = SphericalCurve::from_samples(1.0, 2.0 * PI * col.sin() / n as f64, pts, tans, vec![], true).unwrap();
        let a = enclosed_area(&l).unwrap();
        assert!((a - PI).abs() < 1e-5, "{a}");
    }

    #[test]
    fn open_loop_has_no_area() {
        let c = PlanarCurve::segment(Vector2::zeros(), 0.0, 1.0, 100).unwrap();
        let l = lift(&c, 1.0).unwrap();
        assert!(matches!(enclosed_area(&l), Err(Error::RequiresSimpleLoop)));
    }

    #[test]
    fn single_copy_is_identity() {
        let c = PlanarCurve::circle(1.0, 1.0, 100, true).unwrap();
        let l = lift(&c, 1.0).unwrap();
        let m = Monodromy::of_lift(&l);
        assert_eq!(concatenate_rotated(&l, &m, 1).unwrap(), l);
    }

    #[test]
    fn quarter_circles_close_into_great_circle() {
        let r = 1.5;
        let c = PlanarCurve::segment(Vector2::zeros(), 0.0, PI * r / 2.0, 500).unwrap();
        let l = lift(&c, r).unwrap();
        let m = Monodromy::of_lift(&l);
        assert!((m.angle - PI / 2.0).abs() < 1e-9);
        let full = concatenate_rotated(&l, &m, 4).unwrap();
        assert!(full.is_closed());
        assert_eq!(full.len(), 2000);
        assert!(full.closure_gap() <= 1e-9 * r);
    }

    #[test]
    fn line_closes_with_one_copy() {
        let l = 2.0;
        let c = PlanarCurve::segment(Vector2::zeros(), 0.0, l, 2000).unwrap();
        let r_exact = l / (2.0 * PI);
        let cert = find_closing_radius(&c, 0.5 * r_exact, 1.5 * r_exact, 1, &ClosureOptions::default()).unwrap();
        assert_eq!(cert.n, 1);
        assert!((cert.r - r_exact).abs() < 1e-9 * r_exact);
        assert!(cert.seam_gap < 1e-9);
    }

    #[test]
    fn semicircle_cannot_close() {
        let f = FunctionSpec::from_closed_form(ClosedForm::Semicircle { radius: 1.0 }, -1.0, 2.0, 64).unwrap();
        let c = arclength_reparam(&f, 512).unwrap();
        assert!(matches!(
            find_closing_radius(&c, 1.0, 10.0, 8, &ClosureOptions::default()),
            Err(Error::NotC1Periodic { .. })
        ));
    }

    #[test]
    fn bracket_without_crossing_reports_range() {
        let c = PlanarCurve::segment(Vector2::zeros(), 0.0, 1.0, 200).unwrap();
        // angle 1/r lies in [0.5, 1] < 2 pi / 6
        match find_closing_radius(&c, 1.0, 2.0, 6, &ClosureOptions::default()) {
            Err(Error::NoClosureInBracket { phi_min, phi_max }) => {
                assert!((phi_min - 0.5).abs() < 1e-9 && (phi_max - 1.0).abs() < 1e-9);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn sine_arch_certificate() {
        let f = FunctionSpec::from_closed_form(ClosedForm::SineArch { amplitude: 0.2 }, 0.0, 1.0, 257).unwrap();
        let k = arclength_reparam(&f, 2048).unwrap();
        let l = k.length();
        let cert = find_closing_radius(&k, l, 20.0 * l, 64, &ClosureOptions::default()).unwrap();
        assert!(cert.simple);
        assert!(cert.seam_gap < 1e-6 * cert.r);
        assert!((cert.angle - cert.target).abs() <= 1e-10);
        assert!(cert.axis_drift < AXIS_DRIFT_TOL);
        assert!((cert.a_r - 2.0 * PI / cert.n as f64).abs() < 1e-6);
    }

    #[test]
    fn certificate_json_round_trip_is_exact() {
        let c = PlanarCurve::segment(Vector2::zeros(), 0.0, 2.0, 500).unwrap();
        let cert = find_closing_radius(&c, 0.2, 0.5, 2, &ClosureOptions::default()).unwrap();
        let s = serde_json::to_string(&cert).unwrap();
        let back: ClosureCertificate = serde_json::from_str(&s).unwrap();
        assert_eq!(back, cert);
    }

    #[test]
    fn integer_gap_small_cases() {
        assert_eq!(integer_gap(PI).unwrap(), 2);
        assert_eq!(integer_gap(2.0 * PI).unwrap(), 1);
        assert_eq!(integer_gap(1.0).unwrap(), 7);
        assert!(integer_gap(0.0).is_err());
    }

    #[test]
    fn law_of_cosines_right_angle_case() {
        let a = law_of_cosines_apex(PI / 2.0, PI / 2.0, 1.0);
        assert!((a - PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn apex_angle_on_equator() {
        let p = Vector3::z();
        let a = apex_angle(&p, &Vector3::x(), &Vector3::new(0.0, 1.0, 0.0));
        assert!((a - PI / 2.0).abs() < 1e-15);
    }
}
