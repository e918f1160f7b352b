//! Rolling on an inclined plane, contact tracking, and curves of prescribed
//! geodesic curvature.
//!
//! The rolling model is reduced to the arclength `s` of the contact point
//! along the target curve. The body frame is carried by the lift, so the
//! orientation is a function of `s` alone and the Lagrangian is
//! `m_eff(s) s'^2 / 2 - V(s)`.

mod contact;
mod parageodesic;

use std::io::{BufRead, Write};

use nalgebra::{Matrix3, Matrix3x2, Rotation3, UnitQuaternion, Vector2, Vector3};
use serde::{Deserialize, Serialize};

pub use contact::{contact_track, mesh_height_tolerance, ContactTrack};
pub use parageodesic::{
    constant_curvature_end_distance, mob_minimality_test, parageodesic_solve, BumpCheck, ConstantReading,
    CurvatureBoundCheck, MobOptions, MobReport, Parageodesic, ParageodesicForm, POLE_TOL,
};

use crate::carve::GroovedBody;
use crate::curves::PlanarCurve;
use crate::error::{Error, Result};
use crate::io::read_csv_rows;
use crate::lift::{lift, Monodromy, SphericalCurve};
use crate::numeric::{hermite, hermite_derivative};

/// Step count above which a simulation is refused.
pub const MAX_SIM_STEPS: usize = 10_000_000;

/// The plane through the origin with slope `alpha`, embedded by
/// `I_alpha = [(cos a, 0, -sin a), (0, 1, 0)]`. Height is `x_3`, so planar
/// motion along `+x` runs downhill.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InclinedPlane {
    alpha: f64,
}

pub fn embed_plane(alpha: f64) -> Result<InclinedPlane> {
    if !(alpha > 0.0 && alpha < 0.5 * std::f64::consts::PI) {
        return Err(Error::InvalidInput(format!("slope angle {alpha} must lie in (0, pi/2)")));
    }
    Ok(InclinedPlane { alpha })
}

impl InclinedPlane {
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn embedding(&self) -> Matrix3x2<f64> {
        let (s, c) = self.alpha.sin_cos();
        Matrix3x2::new(c, 0.0, 0.0, 1.0, -s, 0.0)
    }

    /// Unit normal on the side of the body, `e1 x e2`.
    pub fn normal(&self) -> Vector3<f64> {
        let (s, c) = self.alpha.sin_cos();
        Vector3::new(s, 0.0, c)
    }

    pub fn embed(&self, p: &Vector2<f64>) -> Vector3<f64> {
        self.embedding() * p
    }

    /// Inverse of the embedding on the plane, orthogonal projection off it.
    pub fn project(&self, x: &Vector3<f64>) -> Vector2<f64> {
        self.embedding().transpose() * x
    }

    /// Quarter turn within the plane: `I (i I^-1 x)`.
    pub fn j(&self, x: &Vector3<f64>) -> Vector3<f64> {
        let p = self.project(x);
        self.embed(&Vector2::new(-p.y, p.x))
    }

    /// Signed distance from the plane toward the body side.
    pub fn height(&self, x: &Vector3<f64>) -> f64 {
        self.normal().dot(x)
    }
}

/// Retarding force opposing the motion of the contact point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ResistanceModel {
    /// `F = N rho / r` with `N` the normal load and `r` the rolling radius.
    CoulombRolling { rho: f64 },
    /// Piecewise linear `F(v)` through `(speeds[i], forces[i])`, constant
    /// beyond the table.
    VelocityMonotone { speeds: Vec<f64>, forces: Vec<f64> },
}

impl Default for ResistanceModel {
    fn default() -> Self {
        ResistanceModel::CoulombRolling { rho: 0.0 }
    }
}

impl ResistanceModel {
    pub fn validate(&self) -> Result<()> {
        match self {
            ResistanceModel::CoulombRolling { rho } => {
                if !(*rho >= 0.0) || !rho.is_finite() {
                    return Err(Error::InvalidInput(format!("resistance coefficient {rho} must be nonnegative")));
                }
            }
            ResistanceModel::VelocityMonotone { speeds, forces } => {
                if speeds.is_empty() || speeds.len() != forces.len() {
                    return Err(Error::InvalidInput("resistance table needs matched nonempty columns".into()));
                }
                if speeds.windows(2).any(|w| !(w[1] > w[0])) || !(speeds[0] >= 0.0) {
                    return Err(Error::InvalidInput("resistance table speeds must increase from >= 0".into()));
                }
                if forces.iter().any(|f| !(*f >= 0.0) || !f.is_finite()) {
                    return Err(Error::InvalidInput("resistance forces must be finite and nonnegative".into()));
                }
                if forces.windows(2).any(|w| w[1] < w[0]) {
                    return Err(Error::InvalidInput("resistance must not decrease with speed".into()));
                }
            }
        }
        Ok(())
    }

    /// Force magnitude at speed `v >= 0`.
    pub fn force(&self, v: f64, normal: f64, lever: f64) -> f64 {
        match self {
            ResistanceModel::CoulombRolling { rho } => normal * rho / lever,
            ResistanceModel::VelocityMonotone { speeds, forces } => {
                let k = speeds.partition_point(|&x| x <= v);
                if k == 0 {
                    forces[0]
                } else if k == speeds.len() {
                    forces[k - 1]
                } else {
                    let t = (v - speeds[k - 1]) / (speeds[k] - speeds[k - 1]);
                    forces[k - 1] + t * (forces[k] - forces[k - 1])
                }
            }
        }
    }
}

/// Mass data of a homogeneous body rolling on a flat of radius `radius`
/// about its origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RollingBody {
    pub mass: f64,
    pub barycenter: Vector3<f64>,
    /// Inertia tensor about the barycenter, body frame.
    pub inertia: Matrix3<f64>,
    pub radius: f64,
    /// Half-width of the contact segment.
    pub delta: f64,
    /// Wedge opening for the tracking check.
    pub beta: f64,
}

impl RollingBody {
    /// Homogeneous ball of unit density with the exact inertia `2/5 m r^2`.
    pub fn ball(r: f64) -> Result<Self> {
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::InvalidRadius(r));
        }
        let mass = 4.0 / 3.0 * std::f64::consts::PI * r.powi(3);
        Ok(RollingBody {
            mass,
            barycenter: Vector3::zeros(),
            inertia: Matrix3::identity() * (0.4 * mass * r * r),
            radius: r,
            delta: 0.0,
            beta: 0.0,
        })
    }

    /// Mesh mass properties of a carved body.
    pub fn from_grooved(body: &GroovedBody) -> Result<Self> {
        let spec = body
            .spec()
            .ok_or_else(|| Error::InvalidInput("body has no groove to roll in".into()))?;
        Ok(RollingBody {
            mass: body.mass().volume,
            barycenter: body.mass().barycenter_vector(),
            inertia: body.mass().inertia_matrix(),
            radius: spec.r,
            delta: body.delta(),
            beta: spec.beta,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimOptions {
    pub duration: f64,
    pub step: f64,
    /// Initial speed of the contact point along the target.
    pub speed0: f64,
    pub gravity: f64,
    /// Record every k-th step; the final step is always recorded.
    pub record_every: usize,
    /// Evaluate the barycenter wedge at every step.
    pub check_wedge: bool,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            duration: 10.0,
            step: 1e-3,
            speed0: 0.0,
            gravity: 1.0,
            record_every: 1,
            check_wedge: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimMeta {
    pub alpha: f64,
    pub radius: f64,
    pub delta: f64,
    pub mass: f64,
    pub gravity: f64,
    pub step: f64,
    /// Length, mass and time unit scales of the normalized run.
    pub units: Units,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Units {
    pub length: f64,
    pub mass: f64,
    pub time: f64,
}

/// State of the reduced model at one recorded step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimSample {
    pub t: f64,
    pub s: f64,
    pub speed: f64,
    /// World position of the body origin.
    pub position: [f64; 3],
    /// Body-to-world rotation as `(w, x, y, z)`.
    pub orientation: [f64; 4],
    pub ekin: f64,
    pub epot: f64,
}

impl SimSample {
    pub fn rotation(&self) -> Matrix3<f64> {
        let [w, x, y, z] = self.orientation;
        UnitQuaternion::from_quaternion(nalgebra::Quaternion::new(w, x, y, z))
            .to_rotation_matrix()
            .into_inner()
    }

    pub fn position_vector(&self) -> Vector3<f64> {
        Vector3::from(self.position)
    }

    pub fn energy(&self) -> f64 {
        self.ekin + self.epot
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimTrajectory {
    pub meta: SimMeta,
    pub samples: Vec<SimSample>,
}

pub const TRAJECTORY_COLUMNS: [&str; 12] =
    ["t", "s", "speed", "x", "y", "z", "q0", "q1", "q2", "q3", "ekin", "epot"];

impl SimTrajectory {
    /// Contact point of sample `i` in plane coordinates.
    pub fn contact(&self, plane: &InclinedPlane, i: usize) -> Vector2<f64> {
        plane.project(&self.samples[i].position_vector())
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{}", TRAJECTORY_COLUMNS.join(","))?;
        for p in &self.samples {
            let row = [
                p.t,
                p.s,
                p.speed,
                p.position[0],
                p.position[1],
                p.position[2],
                p.orientation[0],
                p.orientation[1],
                p.orientation[2],
                p.orientation[3],
                p.ekin,
                p.epot,
            ];
            let cells: Vec<String> = row.iter().map(|x| format!("{x:e}")).collect();
            writeln!(w, "{}", cells.join(","))?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R, meta: SimMeta) -> Result<Self> {
        let rows = read_csv_rows(r, &TRAJECTORY_COLUMNS, "trajectory csv")?;
        let samples = rows
            .into_iter()
            .map(|v| SimSample {
                t: v[0],
                s: v[1],
                speed: v[2],
                position: [v[3], v[4], v[5]],
                orientation: [v[6], v[7], v[8], v[9]],
                ekin: v[10],
                epot: v[11],
            })
            .collect();
        Ok(SimTrajectory { meta, samples })
    }
}

/// Reduced-model data at one arclength node.
#[derive(Debug, Clone)]
struct Node {
    point: Vector2<f64>,
    tangent: Vector2<f64>,
    rotation: UnitQuaternion<f64>,
    potential: f64,
    dpotential: f64,
    inertia: f64,
    dinertia: f64,
}

/// The target continued periodically, with the body trace continued by the
/// monodromy of the mirrored lift.
struct Track<'a> {
    plane: InclinedPlane,
    target: &'a PlanarCurve,
    trace: SphericalCurve,
    monodromy: Matrix3<f64>,
    powers: Vec<Matrix3<f64>>,
    body: &'a RollingBody,
    gravity: f64,
    nodes: Vec<Node>,
}

impl<'a> Track<'a> {
    fn new(plane: InclinedPlane, target: &'a PlanarCurve, body: &'a RollingBody, gravity: f64) -> Result<Self> {
        // The sphere's outward normal at contact points into the plane, so the
        // trace turns opposite to the lift.
        let trace = body_trace(target, body.radius)?;
        let monodromy = Monodromy::of_lift(&trace).rotation();
        Ok(Track {
            plane,
            target,
            trace,
            monodromy,
            powers: vec![Matrix3::identity()],
            body,
            gravity,
            nodes: Vec::new(),
        })
    }

    fn step(&self) -> f64 {
        self.target.step()
    }

    fn ensure(&mut self, i: usize) {
        while self.nodes.len() <= i {
            let node = self.build(self.nodes.len());
            self.nodes.push(node);
        }
    }

    fn build(&mut self, i: usize) -> Node {
        let per = self.target.intervals();
        let (k, j) = (i / per, i % per);
        while self.powers.len() <= k {
            let next = self.monodromy * self.powers[self.powers.len() - 1];
            self.powers.push(next);
        }
        let m = self.powers[k];
        let r = self.body.radius;
        let point = self.target.points()[j] + self.target.translation() * k as f64;
        let tangent = self.target.tangents()[j];
        let kappa = self.target.curvature()[j];
        let q = m * self.trace.points()[j] / r;
        let t = m * self.trace.tangents()[j];
        let n = self.plane.normal();
        let tw = self.plane.embed(&tangent);
        let fb = Matrix3::from_columns(&[q, t, q.cross(&t)]);
        let fw = Matrix3::from_columns(&[-n, tw, (-n).cross(&tw)]);
        let u = fw * fb.transpose();
        let rotation = UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix(&u));
        let u = rotation.to_rotation_matrix().into_inner();

        let (mass, g) = (self.body.mass, self.gravity);
        let bw = u * self.body.barycenter;
        let center = self.plane.embed(&point) + n * r;
        // rolling axis, and the angular velocity per unit arclength
        let a = n.cross(&tw);
        let omega = a / r;
        let potential = mass * g * (center + bw).z;
        let dpotential = mass * g * (tw.z + omega.cross(&bw).z);

        let da = -tw * kappa;
        let ua = u.transpose() * a;
        let dua = u.transpose() * da;
        let d = -n * r - bw;
        let dd = -omega.cross(&bw);
        let ad = a.dot(&d);
        let rot = ua.dot(&(self.body.inertia * ua));
        let drot = 2.0 * ua.dot(&(self.body.inertia * dua));
        let trans = mass * (d.norm_squared() - ad * ad);
        let dtrans = mass * (2.0 * d.dot(&dd) - 2.0 * ad * (da.dot(&d) + a.dot(&dd)));
        Node {
            point,
            tangent,
            rotation,
            potential,
            dpotential,
            inertia: (rot + trans) / (r * r),
            dinertia: (drot + dtrans) / (r * r),
        }
    }

    fn locate(&mut self, s: f64) -> (usize, f64) {
        let h = self.step();
        let i = (s / h).floor().max(0.0) as usize;
        self.ensure(i + 1);
        (i, s - i as f64 * h)
    }

    /// `(m_eff, m_eff', V, V')` at arclength `s`.
    fn reduced(&mut self, s: f64) -> (f64, f64, f64, f64) {
        let (i, _) = self.locate(s);
        let h = self.step();
        let (x0, x1) = (i as f64 * h, (i + 1) as f64 * h);
        let (a, b) = (&self.nodes[i], &self.nodes[i + 1]);
        (
            hermite(x0, x1, a.inertia, b.inertia, a.dinertia, b.dinertia, s),
            hermite_derivative(x0, x1, a.inertia, b.inertia, a.dinertia, b.dinertia, s),
            hermite(x0, x1, a.potential, b.potential, a.dpotential, b.dpotential, s),
            hermite_derivative(x0, x1, a.potential, b.potential, a.dpotential, b.dpotential, s),
        )
    }

    /// Contact point, unit tangent and body rotation at arclength `s`.
    fn pose(&mut self, s: f64) -> (Vector2<f64>, Vector2<f64>, UnitQuaternion<f64>) {
        let (i, ds) = self.locate(s);
        let h = self.step();
        let (a, b) = (&self.nodes[i], &self.nodes[i + 1]);
        let tau = ds / h;
        let point = Vector2::from_fn(|k, _| {
            hermite(0.0, h, a.point[k], b.point[k], a.tangent[k], b.tangent[k], ds)
        });
        let tangent = (a.tangent * (1.0 - tau) + b.tangent * tau).normalize();
        let mut qb = b.rotation;
        if a.rotation.coords.dot(&qb.coords) < 0.0 {
            qb = UnitQuaternion::new_unchecked(-qb.into_inner());
        }
        (point, tangent, a.rotation.slerp(&qb, tau))
    }
}

/// Contact trace on the body of a ball of radius `r` rolled along `target`:
/// the lift reflected to turn the opposite way.
pub fn body_trace(target: &PlanarCurve, r: f64) -> Result<SphericalCurve> {
    Ok(lift(target, r)?.mirrored())
}

/// Integrates the reduced rolling dynamics along `target`, periodically
/// continued, with classical Runge-Kutta in time.
///
/// The body starts with the first trace sample on the plane at the target's
/// start. A carved body must be grooved along the closed [`body_trace`] of
/// the certified loop.
pub fn simulate_rolling(
    body: &RollingBody,
    plane: &InclinedPlane,
    model: &ResistanceModel,
    target: &PlanarCurve,
    opts: &SimOptions,
) -> Result<SimTrajectory> {
    model.validate()?;
    if !(opts.duration > 0.0) || !(opts.step > 0.0) || !opts.duration.is_finite() {
        return Err(Error::InvalidInput("duration and step must be positive".into()));
    }
    if !(opts.speed0 >= 0.0) || !(opts.gravity > 0.0) || opts.record_every == 0 {
        return Err(Error::InvalidInput("initial speed, gravity or recording stride out of range".into()));
    }
    let steps = (opts.duration / opts.step).round().max(1.0);
    if steps > MAX_SIM_STEPS as f64 {
        return Err(Error::ResolutionExceeded(format!("{steps} steps exceeds {MAX_SIM_STEPS}")));
    }
    let steps = steps as usize;
    let dt = opts.duration / steps as f64;
    let mut track = Track::new(*plane, target, body, opts.gravity)?;
    let r = body.radius;
    let normal_load = body.mass * opts.gravity * plane.alpha().cos();

    let accel = |track: &mut Track, s: f64, v: f64| {
        let (m, dm, _, dv) = track.reduced(s);
        // only forward rolling is modelled; reversal ends the run as a stall
        let f = model.force(v.abs(), normal_load, r);
        (-dv - 0.5 * dm * v * v - f) / m
    };

    let (mut s, mut v) = (0.0, opts.speed0);
    if v == 0.0 && accel(&mut track, 0.0, 0.0) <= 0.0 {
        return Err(Error::StallDetected { t: 0.0 });
    }
    let n = plane.normal();
    let record = |track: &mut Track, t: f64, s: f64, v: f64| -> Result<SimSample> {
        let (m, _, pot, _) = track.reduced(s);
        let (point, tangent, rot) = track.pose(s);
        let u = rot.to_rotation_matrix().into_inner();
        let position = plane.embed(&point) + n * r;
        if opts.check_wedge {
            let bw = u * body.barycenter;
            let height = r + bw.dot(&n);
            let lateral = bw.dot(&n.cross(&plane.embed(&tangent)));
            if !(height >= 0.0 && lateral.abs() <= body.delta + height * (0.5 * body.beta).tan()) {
                return Err(Error::TrackingLost { t });
            }
        }
        let q = rot.into_inner();
        Ok(SimSample {
            t,
            s,
            speed: v,
            position: [position.x, position.y, position.z],
            orientation: [q.w, q.i, q.j, q.k],
            ekin: 0.5 * m * v * v,
            epot: pot,
        })
    };

    let mut samples = vec![record(&mut track, 0.0, s, v)?];
    for k in 0..steps {
        let t = k as f64 * dt;
        let a1 = accel(&mut track, s, v);
        let (s2, v2) = (s + 0.5 * dt * v, v + 0.5 * dt * a1);
        let a2 = accel(&mut track, s2, v2);
        let (s3, v3) = (s + 0.5 * dt * v2, v + 0.5 * dt * a2);
        let a3 = accel(&mut track, s3, v3);
        let (s4, v4) = (s + dt * v3, v + dt * a3);
        let a4 = accel(&mut track, s4, v4);
        s += dt / 6.0 * (v + 2.0 * (v2 + v3) + v4);
        v += dt / 6.0 * (a1 + 2.0 * (a2 + a3) + a4);
        let t = t + dt;
        if !(v > 0.0) || s < 0.0 {
            return Err(Error::StallDetected { t });
        }
        let sample = record(&mut track, t, s, v)?;
        if (k + 1) % opts.record_every == 0 || k + 1 == steps {
            samples.push(sample);
        }
    }
    Ok(SimTrajectory {
        meta: SimMeta {
            alpha: plane.alpha(),
            radius: r,
            delta: body.delta,
            mass: body.mass,
            gravity: opts.gravity,
            step: dt,
            units: Units {
                length: 1.0,
                mass: 1.0,
                time: 1.0,
            },
        },
        samples,
    })
}


#[cfg(test)]
mod props {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn plane_embedding_is_an_isometry(alpha in 1e-3f64..1.57, x in -10.0f64..10.0, y in -10.0f64..10.0) {
            let plane = embed_plane(alpha).unwrap();
            let p = Vector2::new(x, y);
            let e = plane.embed(&p);
            prop_assert!((e.norm() - p.norm()).abs() < 1e-12 * (1.0 + p.norm()));
            prop_assert!((plane.project(&e) - p).norm() < 1e-12 * (1.0 + p.norm()));
            prop_assert!(plane.height(&e).abs() < 1e-12 * (1.0 + p.norm()));
            prop_assert!((plane.j(&plane.j(&e)) + e).norm() < 1e-12 * (1.0 + p.norm()));
        }
    }
}
