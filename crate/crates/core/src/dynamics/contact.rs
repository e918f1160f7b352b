use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};

use super::{InclinedPlane, SimTrajectory};
use crate::carve::{GroovedBody, MeshLocator};
use crate::curves::PlanarCurve;
use crate::error::{Error, Result};

/// Contact points of a trajectory in plane coordinates, compared against the
/// target image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContactTrack {
    pub times: Vec<f64>,
    /// Barycenters of the contact sets.
    pub points: Vec<[f64; 2]>,
    /// Arclength of the nearest target point: the fitted reparametrization.
    pub u: Vec<f64>,
    /// Signed offset from the target image along its left normal.
    pub deviation: Vec<f64>,
    pub max_deviation: f64,
    /// Extent of the contact set across the target.
    pub half_widths: Vec<f64>,
    pub u_increasing: bool,
    /// Height below which a mesh vertex counts as touching the plane.
    pub tolerance: f64,
    /// Lowest vertex height seen; negative values are penetration.
    pub min_height: f64,
}

/// Height noise of a faceted groove floor: the sag of a floor edge over the
/// floor's curvature `1 / R` along the loop.
pub fn mesh_height_tolerance(body: &GroovedBody) -> f64 {
    let e = body.band_edge();
    e * e / (2.0 * body.outer_radius())
}

/// Projects the nearest point of the periodically continued `target` near
/// arclength `s_hint`. Returns `(arclength, signed left offset)`.
fn nearest_on_target(target: &PlanarCurve, p: &Vector2<f64>, s_hint: f64, window: usize) -> (f64, f64) {
    let h = target.step();
    let per = target.intervals();
    let at = |i: usize| {
        let (k, j) = (i / per, i % per);
        target.points()[j] + target.translation() * k as f64
    };
    let centre = (s_hint / h).round().max(0.0) as usize;
    let mut best = (f64::INFINITY, 0.0, 0.0);
    for i in centre.saturating_sub(window)..centre + window {
        let (a, b) = (at(i), at(i + 1));
        let d = b - a;
        let t = ((p - a).dot(&d) / d.norm_squared()).clamp(0.0, 1.0);
        let q = a + d * t;
        let dist = (p - q).norm();
        if dist < best.0 {
            let left = Vector2::new(-d.y, d.x).normalize();
            best = (dist, (i as f64 + t) * h, (p - q).dot(&left));
        }
    }
    (best.1, best.2)
}

/// Contact track of `traj`. With a mesh, the contact set at each sample is
/// the set of body vertices within [`mesh_height_tolerance`] of the plane;
/// without one, it is the segment of half-width `delta` at the reduced
/// contact point.
pub fn contact_track(
    traj: &SimTrajectory,
    plane: &InclinedPlane,
    target: &PlanarCurve,
    body: Option<&GroovedBody>,
) -> Result<ContactTrack> {
    let n = plane.normal();
    let r = traj.meta.radius;
    let locator = body.map(|b| MeshLocator::new(b.mesh()));
    let (tol, window_angle) = match body {
        Some(b) => {
            let spec = b.spec().ok_or_else(|| Error::InvalidInput("body has no groove".into()))?;
            let angle = 2.0 * spec.mouth_half_width() / spec.r + 2.0 * b.band_edge() / spec.r;
            (mesh_height_tolerance(b), angle)
        }
        None => (0.0, 0.0),
    };
    let mut out = ContactTrack {
        times: Vec::with_capacity(traj.samples.len()),
        points: Vec::with_capacity(traj.samples.len()),
        u: Vec::with_capacity(traj.samples.len()),
        deviation: Vec::with_capacity(traj.samples.len()),
        max_deviation: 0.0,
        half_widths: Vec::with_capacity(traj.samples.len()),
        u_increasing: true,
        tolerance: tol,
        min_height: f64::INFINITY,
    };
    for (k, sample) in traj.samples.iter().enumerate() {
        let centre = sample.position_vector();
        let reduced = plane.project(&centre);
        let (s_near, _) = nearest_on_target(target, &reduced, sample.s, 4);
        let tangent = tangent_at(target, s_near);
        let across = n.cross(&plane.embed(&tangent));
        let (point, half) = match (body, &locator) {
            (Some(b), Some(loc)) => {
                let u = sample.rotation();
                let down = u.transpose() * (-n);
                let mut sum = Vector3::zeros();
                let mut count = 0usize;
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                for i in loc.vertices_within(&down, window_angle) {
                    let x = u * b.mesh().vertices[i] + centre;
                    let height = plane.height(&x);
                    out.min_height = out.min_height.min(height);
                    if height <= tol {
                        sum += x;
                        count += 1;
                        let l = (x - centre).dot(&across);
                        lo = lo.min(l);
                        hi = hi.max(l);
                    }
                }
                if count == 0 {
                    return Err(Error::ContactLost { t: sample.t });
                }
                (plane.project(&(sum / count as f64)), 0.5 * (hi - lo))
            }
            _ => {
                out.min_height = out.min_height.min(plane.height(&(centre - n * r)));
                (reduced, traj.meta.delta)
            }
        };
        let (u, dev) = nearest_on_target(target, &point, sample.s, 8);
        if k > 0 && !(u > out.u[k - 1]) {
            out.u_increasing = false;
        }
        out.times.push(sample.t);
        out.points.push([point.x, point.y]);
        out.u.push(u);
        out.deviation.push(dev);
        out.max_deviation = out.max_deviation.max(dev.abs());
        out.half_widths.push(half);
    }
    Ok(out)
}

fn tangent_at(target: &PlanarCurve, s: f64) -> Vector2<f64> {
    let h = target.step();
    let per = target.intervals();
    let x = (s / h).max(0.0);
    let i = x.floor() as usize;
    let t = x - i as f64;
    let (a, b) = (target.tangents()[i % per], target.tangents()[(i + 1) % per]);
    (a * (1.0 - t) + b * t).normalize()
}
