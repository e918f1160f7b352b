//! Quantitative checks of the construction, grouped into twelve criteria and
//! selectable by suite. Each check records what was expected, what was
//! measured, and the tolerance applied; nothing here asserts.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use nalgebra::{Matrix3, Vector2, Vector3};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::carve::{cap_volume, carve, shape_function, GroovedBody, GrooveSpec, MeshOptions, RadialShape, DEFAULT_MOUTH_RATIO};
use crate::closure::{
    apex_angle, concatenate_rotated, find_closing_radius, integer_gap, law_of_cosines_apex, self_proximity,
    ClosureCertificate, ClosureOptions,
};
use crate::curves::{arclength_reparam, ClosedForm, FunctionSpec, PlanarCurve};
use crate::dynamics::{
    contact_track, embed_plane, mob_minimality_test, simulate_rolling, MobOptions, ResistanceModel, RollingBody,
    SimOptions, SimTrajectory,
};
use crate::error::{Error, Result};
use crate::geometry::{geodesic_distance, rotation_about};
use crate::lift::{circle_lift_closed_form, closure_defect, injectivity_threshold_constant, lift, SphericalCurve};
use crate::numeric::gauss_legendre5;

pub const CRITERIA: u8 = 12;

/// Amplitudes of the raised-cosine arches used by the closure checks.
pub const ARCH_AMPLITUDES: [f64; 3] = [0.1, 0.2, 0.3];
/// Arch carved and rolled by the carving and dynamics checks.
pub const ROLLING_AMPLITUDE: f64 = 0.2;
pub const ARCH_INTERVALS: usize = 2048;
pub const ARCH_N_MAX: usize = 64;
/// Slope of the plane for the tracking run.
pub const TRACKING_ALPHA: f64 = 0.05;
pub const SEED: u64 = 0x5eed;

/// Named subsets of the criteria.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    /// Closed-form identities: criteria 1, 2, 7, 12.
    ClosedForms,
    /// Threshold constant and semicircle injectivity: criteria 1, 3.
    Injectivity,
    /// Closing radii, clearance and the defect bound: criteria 4, 5, 6.
    Closure,
    Carving,
    /// Rolling oracles and end-to-end tracking: criteria 9, 10.
    Dynamics,
    Mob,
    All,
}

impl Suite {
    pub const NAMES: [&'static str; 7] = ["closed-forms", "injectivity", "closure", "carving", "dynamics", "mob", "all"];

    pub fn criteria(self) -> Vec<u8> {
        match self {
            Suite::ClosedForms => vec![1, 2, 7, 12],
            Suite::Injectivity => vec![1, 3],
            Suite::Closure => vec![4, 5, 6],
            Suite::Carving => vec![8],
            Suite::Dynamics => vec![9, 10],
            Suite::Mob => vec![11],
            Suite::All => (1..=CRITERIA).collect(),
        }
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "closed-forms" => Suite::ClosedForms,
            "injectivity" => Suite::Injectivity,
            "closure" => Suite::Closure,
            "carving" => Suite::Carving,
            "dynamics" => Suite::Dynamics,
            "mob" => Suite::Mob,
            "all" => Suite::All,
            _ => {
                return Err(Error::InvalidInput(format!(
                    "unknown suite {s:?}; expected one of {}",
                    Suite::NAMES.join(", ")
                )))
            }
        })
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let i = [
            Suite::ClosedForms,
            Suite::Injectivity,
            Suite::Closure,
            Suite::Carving,
            Suite::Dynamics,
            Suite::Mob,
            Suite::All,
        ]
        .iter()
        .position(|s| s == self)
        .unwrap_or(0);
        f.write_str(Suite::NAMES[i])
    }
}

/// One measured quantity against its requirement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub criterion: u8,
    pub check: String,
    /// Stable name of the statement being checked.
    pub anchor: String,
    /// The requirement, in words.
    pub expected: String,
    pub got: f64,
    pub tol: f64,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub note: String,
}

impl Check {
    fn new(criterion: u8, check: &str, expected: impl Into<String>, got: f64, tol: f64, pass: bool) -> Self {
        Check {
            criterion,
            check: check.into(),
            anchor: anchor(criterion).into(),
            expected: expected.into(),
            got,
            tol,
            // NaN never passes
            pass: pass && !got.is_nan(),
            note: String::new(),
        }
    }

    fn note(mut self, note: impl Into<String>) -> Self {
        self.note = note.into();
        self
    }

    /// `got <= bound`.
    fn at_most(criterion: u8, check: &str, got: f64, bound: f64) -> Self {
        Check::new(criterion, check, format!("<= {bound:e}"), got, bound, got <= bound)
    }

    /// `got > bound`.
    fn above(criterion: u8, check: &str, got: f64, bound: f64) -> Self {
        Check::new(criterion, check, format!("> {bound:e}"), got, 0.0, got > bound)
    }

    fn failed(criterion: u8, err: &Error) -> Self {
        Check::new(criterion, "run", "completes", f64::NAN, 0.0, false).note(format!("{}: {err}", err.kind()))
    }
}

pub fn anchor(criterion: u8) -> &'static str {
    match criterion {
        1 => "threshold-constant",
        2 => "circle-lift",
        3 => "semicircle-injectivity",
        4 => "closure-defect-bound",
        5 => "closing-radius",
        6 => "clearance-bound",
        7 => "law-of-cosines",
        8 => "carving-bounds",
        9 => "rolling-resistance",
        10 => "tracking",
        11 => "man-over-board",
        12 => "integer-gap",
        _ => "unknown",
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub suite: Suite,
    pub checks: Vec<Check>,
    pub pass: bool,
}

impl VerifyReport {
    /// Conjunction of the checks of one criterion; `None` if it did not run.
    pub fn criterion_pass(&self, criterion: u8) -> Option<bool> {
        let mut it = self.checks.iter().filter(|c| c.criterion == criterion).peekable();
        it.peek()?;
        Some(it.all(|c| c.pass))
    }
}

/// A raised-cosine arch certified to close, with its lifted period and the
/// closed loop of rotated copies.
pub struct CertifiedArch {
    pub spec: FunctionSpec,
    pub curve: PlanarCurve,
    pub cert: ClosureCertificate,
    pub piece: SphericalCurve,
    pub loop_: SphericalCurve,
}

pub fn certify_arch(amplitude: f64, intervals: usize) -> Result<CertifiedArch> {
    let spec = FunctionSpec::from_closed_form(ClosedForm::SineArch { amplitude }, 0.0, 1.0, 257)?;
    let curve = arclength_reparam(&spec, intervals)?;
    let l = curve.length();
    let cert = find_closing_radius(&curve, l, 20.0 * l, ARCH_N_MAX, &ClosureOptions::default())?;
    let piece = lift(&curve, cert.r)?;
    let loop_ = concatenate_rotated(&piece, &cert.monodromy, cert.n)?;
    Ok(CertifiedArch { spec, curve, cert, piece, loop_ })
}

/// Largest distance between a loop sample moved by the monodromy and the
/// sample one period later.
pub fn rotational_symmetry_residual(arch: &CertifiedArch) -> f64 {
    let rot = arch.cert.monodromy.rotation();
    let pts = arch.loop_.points();
    let per = arch.piece.len() - 1;
    (0..pts.len())
        .map(|i| (rot * pts[i] - pts[(i + per) % pts.len()]).norm())
        .fold(0.0, f64::max)
}

/// Groove for the rolling checks: the body trace is the mirror of the lift.
fn rolling_spec(arch: &CertifiedArch) -> Result<GrooveSpec> {
    GrooveSpec::new(arch.cert.r, 0.05, 0.005, None, TRACKING_ALPHA * arch.spec.max_slope())
}

/// Lazily computed fixtures shared between criteria.
#[derive(Default)]
pub struct Verifier {
    arches: OnceLock<Vec<(CertifiedArch, CertifiedArch)>>,
    body: OnceLock<GroovedBody>,
    tracking: OnceLock<SimTrajectory>,
}

fn cached<T>(cell: &OnceLock<T>, make: impl FnOnce() -> Result<T>) -> Result<&T> {
    if let Some(v) = cell.get() {
        return Ok(v);
    }
    let v = make()?;
    Ok(cell.get_or_init(|| v))
}

impl Verifier {
    pub fn new() -> Self {
        Verifier::default()
    }

    /// Each arch certified at the base resolution and at twice it.
    fn arches(&self) -> Result<&[(CertifiedArch, CertifiedArch)]> {
        cached(&self.arches, || {
            ARCH_AMPLITUDES
                .iter()
                .map(|&a| Ok((certify_arch(a, ARCH_INTERVALS)?, certify_arch(a, 2 * ARCH_INTERVALS)?)))
                .collect()
        })
        .map(Vec::as_slice)
    }

    fn rolling_arch(&self) -> Result<&CertifiedArch> {
        let i = ARCH_AMPLITUDES.iter().position(|&a| a == ROLLING_AMPLITUDE).unwrap_or(0);
        Ok(&self.arches()?[i].0)
    }

    fn body(&self) -> Result<&GroovedBody> {
        cached(&self.body, || {
            let arch = self.rolling_arch()?;
            carve(&arch.loop_.mirrored(), &rolling_spec(arch)?, &MeshOptions::default())
        })
    }

    fn tracking(&self) -> Result<&SimTrajectory> {
        cached(&self.tracking, || {
            let arch = self.rolling_arch()?;
            let body = RollingBody::from_grooved(self.body()?)?;
            let plane = embed_plane(TRACKING_ALPHA)?;
            let model = ResistanceModel::CoulombRolling {
                rho: 0.2 * arch.cert.r * TRACKING_ALPHA.tan(),
            };
            let opts = SimOptions {
                duration: 9.0,
                step: 0.01,
                speed0: 0.3,
                record_every: 2,
                ..SimOptions::default()
            };
            simulate_rolling(&body, &plane, &model, &arch.curve, &opts)
        })
    }

    /// Runs one criterion; a domain error becomes a failed check.
    pub fn criterion(&self, n: u8) -> Vec<Check> {
        let out = match n {
            1 => Ok(threshold_constant()),
            2 => circle_lift(),
            3 => semicircle_injectivity(),
            4 => closure_defect_bound(),
            5 => self.closing_radius(),
            6 => self.clearance(),
            7 => Ok(law_of_cosines()),
            8 => self.carving_bounds(),
            9 => self.rolling_oracles(),
            10 => self.end_to_end(),
            11 => man_over_board(),
            12 => Ok(integer_gap_grid()),
            _ => Err(Error::InvalidInput(format!("no criterion {n}"))),
        };
        out.unwrap_or_else(|e| vec![Check::failed(n, &e)])
    }

    pub fn run(&self, suite: Suite) -> VerifyReport {
        let checks: Vec<Check> = suite.criteria().into_iter().flat_map(|n| self.criterion(n)).collect();
        let pass = checks.iter().all(|c| c.pass);
        VerifyReport { suite, checks, pass }
    }

    fn closing_radius(&self) -> Result<Vec<Check>> {
        let mut out = Vec::new();
        for (amp, (base, fine)) in ARCH_AMPLITUDES.iter().zip(self.arches()?) {
            let r = base.cert.r;
            let tag = |s: &str| format!("A={amp} {s}");
            out.push(Check::at_most(5, &tag("seam gap / r"), base.cert.seam_gap / r, 1e-6));
            let witnesses = self_proximity(&base.loop_, 0.1 * base.loop_.step()).len();
            out.push(Check::new(5, &tag("self-approaches"), "= 0", witnesses as f64, 0.0, base.cert.simple && witnesses == 0));
            out.push(Check::at_most(5, &tag("rotation residual / r"), rotational_symmetry_residual(base) / r, 1e-8));
            out.push(Check::at_most(5, &tag("resolution shift of r"), (fine.cert.r - r).abs() / r, 1e-6));
        }
        Ok(out)
    }

    fn clearance(&self) -> Result<Vec<Check>> {
        let mut out = Vec::new();
        for (amp, (base, _)) in ARCH_AMPLITUDES.iter().zip(self.arches()?) {
            let r = base.cert.r;
            let d = base.spec.c2_bound();
            let bound = r * (1.0 / (r * d)).atan();
            out.push(Check::above(6, &format!("A={amp} b_r (D={d:.6})"), base.cert.b_r, bound));
        }
        Ok(out)
    }

    fn carving_bounds(&self) -> Result<Vec<Check>> {
        let arch = self.rolling_arch()?;
        let r = arch.cert.r;
        let trace = arch.loop_.mirrored();
        let length = trace.length();
        let mut out = Vec::new();
        let mut last: Option<f64> = None;
        for div in [100.0, 200.0, 400.0] {
            let h = r / div;
            let b = (h * (2.0 * r + h)).sqrt() / DEFAULT_MOUTH_RATIO;
            let spec = GrooveSpec::new(r, b, h, None, 0.0)?;
            let big_r = spec.outer_radius();
            let tag = |s: &str| format!("h=r/{div} {s}");

            let v = cap_volume(h, big_r)?;
            let quad = gauss_legendre5(big_r - h, big_r, |z| PI * (big_r * big_r - z * z));
            out.push(Check::at_most(8, &tag("cap volume vs quadrature"), (v - quad).abs() / quad, 1e-12));

            let body = carve(&trace, &spec, &MeshOptions::default())?;
            let groove = body.reference_mass().volume - body.mass().volume;
            out.push(
                Check::new(8, &tag("groove volume / v(h) l"), "< 1", groove / (v * length), 0.0, groove < v * length)
                    .note(format!("groove {groove:e}, v(h) l {:e}", v * length)),
            );
            let shape = shape_function(Some(&trace), &spec)?;
            let (mc, sigma) = monte_carlo_groove(&shape, big_r, 50_000, SEED);
            let band = 4.0 * sigma + 0.01 * mc;
            out.push(Check::at_most(8, &tag("groove volume vs Monte Carlo"), (groove - mc).abs(), band));

            let ratio = body.drift().norm() / h;
            let bound = PI * h * r * r * length;
            out.push(Check::new(8, &tag("drift / h"), format!("< {bound:e}"), ratio, 0.0, ratio < bound));
            if let Some(prev) = last {
                out.push(Check::new(8, &tag("drift / h decreases"), format!("< {prev:e}"), ratio, 0.0, ratio < prev));
            }
            last = Some(ratio);
        }
        Ok(out)
    }

    fn rolling_oracles(&self) -> Result<Vec<Check>> {
        let mut out = Vec::new();

        let alpha = 0.2;
        let plane = embed_plane(alpha)?;
        let line = PlanarCurve::segment(Vector2::zeros(), 0.0, 10.0, 1000)?;
        let opts = SimOptions {
            duration: 2.0,
            step: 0.01,
            ..SimOptions::default()
        };
        let ball = RollingBody::ball(1.0)?;
        let traj = simulate_rolling(&ball, &plane, &ResistanceModel::default(), &line, &opts)?;
        let a = 5.0 / 7.0 * alpha.sin();
        let err = traj
            .samples
            .iter()
            .map(|p| (p.speed - a * p.t).abs() / (1.0 + p.t))
            .fold(0.0, f64::max);
        out.push(Check::at_most(9, "ball speed vs 5/7 g sin(alpha) t", err, 1e-8));

        let arch = self.rolling_arch()?;
        let body = RollingBody::from_grooved(self.body()?)?;
        let plane = embed_plane(TRACKING_ALPHA)?;
        let opts = SimOptions {
            duration: 6.0,
            step: 0.01,
            speed0: 0.3,
            ..SimOptions::default()
        };
        let free = simulate_rolling(&body, &plane, &ResistanceModel::default(), &arch.curve, &opts)?;
        let e0 = free.samples[0].energy();
        let drift = free
            .samples
            .iter()
            .map(|p| (p.energy() - e0).abs() / e0)
            .fold(0.0, f64::max);
        out.push(Check::at_most(9, "carved body, rho = 0: energy drift", drift, 1e-6));

        let rise = self
            .tracking()?
            .samples
            .windows(2)
            .map(|w| w[1].energy() - w[0].energy())
            .fold(f64::NEG_INFINITY, f64::max);
        out.push(Check::at_most(9, "carved body, rho > 0: largest energy step", rise, 0.0));
        Ok(out)
    }

    fn end_to_end(&self) -> Result<Vec<Check>> {
        let arch = self.rolling_arch()?;
        let body = self.body()?;
        let traj = self.tracking()?;
        let plane = embed_plane(TRACKING_ALPHA)?;
        let track = contact_track(traj, &plane, &arch.curve, Some(body))?;
        let periods = traj.samples.last().map_or(0.0, |p| p.s) / arch.curve.length();
        let bound = body.delta() + 0.02 * arch.cert.r;
        Ok(vec![
            Check::new(10, "periods rolled", ">= 3", periods, 0.0, periods >= 3.0),
            Check::at_most(10, "contact deviation", track.max_deviation, bound),
            Check::new(10, "u strictly increasing", "= 1", f64::from(u8::from(track.u_increasing)), 0.0, track.u_increasing),
        ])
    }
}

/// Runs the criteria of `suite` with fresh fixtures.
pub fn verify_theorems(suite: Suite) -> VerifyReport {
    Verifier::new().run(suite)
}

fn threshold_constant() -> Vec<Check> {
    let a = injectivity_threshold_constant();
    let q = (17f64.sqrt() - 1.0) / 2.0;
    vec![
        Check::new(1, "a", "in (3.9, 4)", a, 0.0, a > 3.9 && a < 4.0),
        Check::at_most(1, "A^2 + A - 4", (q * q + q - 4.0).abs(), 1e-12),
    ]
}

/// Latitude and length of the circle through lifted samples, from the plane
/// they span.
fn fitted_circle(l: &SphericalCurve) -> (f64, f64) {
    let pts = l.points();
    let mean = pts.iter().sum::<Vector3<f64>>() / pts.len() as f64;
    let cov = pts.iter().fold(Matrix3::zeros(), |m, p| {
        let d = p - mean;
        m + d * d.transpose()
    });
    let eig = cov.symmetric_eigen();
    let normal = eig.eigenvectors.column(eig.eigenvalues.imin()).into_owned();
    let r = l.radius();
    let offset = normal.dot(&mean).abs();
    ((offset / r).asin(), 2.0 * PI * (r * r - offset * offset).sqrt())
}

fn circle_lift() -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for (r, big_r) in [(1.0, 1.0), (2.0, 1.0), (1.0, 3.0)] {
        let c = PlanarCurve::circle(big_r, 2.0 * PI * big_r, 20_000, true)?;
        let (lat, len) = fitted_circle(&lift(&c, r)?);
        let (lat0, len0) = circle_lift_closed_form(r, big_r)?;
        let tag = |s: &str| format!("(r,R)=({r},{big_r}) {s}");
        out.push(Check::at_most(2, &tag("loop length rel. error"), (len - len0).abs() / len0, 1e-6));
        out.push(Check::at_most(2, &tag("latitude error"), (lat - lat0).abs(), 1e-8));
    }
    Ok(out)
}

fn semicircle_injectivity() -> Result<Vec<Check>> {
    let f = FunctionSpec::from_closed_form(ClosedForm::Semicircle { radius: 1.0 }, -1.0, 2.0, 64)?;
    let c = arclength_reparam(&f, 4096)?;
    let l = c.length();
    let approaches = |r: f64| -> Result<usize> {
        let lf = lift(&c, r)?;
        Ok(self_proximity(&lf, 0.1 * lf.step()).len())
    };
    let below = 0.95 * l / injectivity_threshold_constant();
    let above = 1.05 * l;
    // the exact trace closes up after length l at r = l / (sqrt(3) pi)
    let exact = l / (3f64.sqrt() * PI);
    let n_below = approaches(below)?;
    let n_above = approaches(above)?;
    let n_exact_below = approaches(0.95 * exact)?;
    let n_exact_above = approaches(1.05 * exact)?;
    let trace = |r: f64| circle_lift_closed_form(r, l / PI).map(|(_, len)| len);
    Ok(vec![
        Check::new(3, "self-approaches at r = 0.95 l/a", "> 0", n_below as f64, 0.0, n_below > 0)
            .note(format!("traced circle {:.6} > l = {l:.6}", trace(below)?)),
        Check::new(3, "self-approaches at r = 1.05 l", "= 0", n_above as f64, 0.0, n_above == 0),
        Check::new(3, "self-approaches at r = 0.95 l/(sqrt3 pi)", "> 0", n_exact_below as f64, 0.0, n_exact_below > 0),
        Check::new(3, "self-approaches at r = 1.05 l/(sqrt3 pi)", "= 0", n_exact_above as f64, 0.0, n_exact_above == 0),
    ])
}

/// A random C2 graph over [0, 1]: a quintic or a short sine series.
fn random_function(rng: &mut ChaCha8Rng, k: usize) -> Result<FunctionSpec> {
    let form = if k.is_multiple_of(2) {
        ClosedForm::Polynomial {
            coefficients: (0..6).map(|_| rng.random_range(-1.0..1.0)).collect(),
        }
    } else {
        ClosedForm::Sine {
            amplitude: rng.random_range(-0.5..0.5),
            wavenumber: rng.random_range(0.5..8.0),
        }
    };
    FunctionSpec::from_closed_form(form, 0.0, 1.0, 257)
}

fn closure_defect_bound() -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst = f64::INFINITY;
    for k in 0..10 {
        let c = arclength_reparam(&random_function(&mut rng, k)?, 2048)?;
        let l = c.length();
        // F scales with the curve: scaling to l = 1 divides F by l and
        // sends r = sqrt 2 to sqrt 2 l
        worst = worst.min(closure_defect(&c, 2f64.sqrt() * l)? / l);
    }
    Ok(vec![Check::above(4, "min F_r over 10 curves, l = 1, r = sqrt 2", worst, 1.0 / 3.0)])
}

fn random_unit(rng: &mut ChaCha8Rng) -> Vector3<f64> {
    let z: f64 = rng.random_range(-1.0..1.0);
    let t: f64 = rng.random_range(0.0..2.0 * PI);
    let s = (1.0 - z * z).sqrt();
    Vector3::new(s * t.cos(), s * t.sin(), z)
}

fn law_of_cosines() -> Vec<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst = 0.0f64;
    for _ in 0..500 {
        let r: f64 = rng.random_range(0.5..5.0);
        let u = random_unit(&mut rng);
        let side = u.cross(&random_unit(&mut rng)).normalize();
        let leg: f64 = rng.random_range(0.1..PI - 0.1);
        let gamma: f64 = rng.random_range(0.05..PI - 0.05);
        let a = rotation_about(&side, leg) * u;
        let b = rotation_about(&u, gamma) * a;
        let (p, a, b) = (u * r, a * r, b * r);
        let f = geodesic_distance(&a, &b, r);
        let measured = apex_angle(&p, &a, &b);
        worst = worst.max((measured - law_of_cosines_apex(f, leg * r, r)).abs());
    }
    let r = 2.0;
    let (p, a, b) = (Vector3::z() * r, Vector3::x() * r, Vector3::y() * r);
    let degenerate = law_of_cosines_apex(0.5 * PI * r, 0.5 * PI * r, r);
    vec![
        Check::at_most(7, "500 random triangles: apex error", worst, 1e-9),
        Check::at_most(7, "F/r = b/r = pi/2: formula vs pi/2", (degenerate - 0.5 * PI).abs(), 1e-9),
        Check::at_most(7, "F/r = b/r = pi/2: measured vs pi/2", (apex_angle(&p, &a, &b) - 0.5 * PI).abs(), 1e-9),
    ]
}

/// Groove volume by Monte Carlo over directions; each direction contributes
/// the exact radial integral of the removed shell. Returns the mean and its
/// standard error.
pub fn monte_carlo_groove(shape: &dyn RadialShape, big_r: f64, samples: usize, seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut sum, mut sq) = (0.0, 0.0);
    for _ in 0..samples {
        let u = random_unit(&mut rng);
        let v = 4.0 * PI * big_r.powi(3) * (1.0 - shape.value(&u).powi(3)) / 3.0;
        sum += v;
        sq += v * v;
    }
    let mean = sum / samples as f64;
    let var = (sq / samples as f64 - mean * mean).max(0.0);
    (mean, (var / samples as f64).sqrt())
}

fn man_over_board() -> Result<Vec<Check>> {
    let rep = mob_minimality_test(&MobOptions::default())?;
    Ok(vec![
        Check::new(
            11,
            "f_min_sampled - f_const",
            format!(">= -{:e}", rep.tol),
            rep.f_min_sampled - rep.f_const,
            rep.tol,
            rep.pass,
        )
        .note(format!("{} of {} controls beat the constant", rep.beating, rep.trials)),
        Check::new(
            11,
            "bump perturbations: largest change",
            "of one sign",
            rep.bump_check.max_change,
            0.0,
            rep.bump_check.pass,
        )
        .note(format!("changes in [{:e}, {:e}]", rep.bump_check.min_change, rep.bump_check.max_change)),
    ])
}

fn integer_gap_grid() -> Vec<Check> {
    let mut misses = 0usize;
    let grid = (1..=3141).map(|k| k as f64 * 1e-3).chain(std::iter::once(PI));
    for a in grid {
        match integer_gap(a) {
            Ok(n) => {
                let g = 2.0 * PI / n as f64;
                if !(g >= a / 3.0 && g <= a) {
                    misses += 1;
                }
            }
            Err(_) => misses += 1,
        }
    }
    vec![Check::new(12, "grid points without n", "= 0", misses as f64, 0.0, misses == 0)]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suites_parse_and_print() {
        for name in Suite::NAMES {
            assert_eq!(name.parse::<Suite>().unwrap().to_string(), name);
        }
        assert!("gegen".parse::<Suite>().is_err());
        assert_eq!(Suite::All.criteria().len(), CRITERIA as usize);
    }

    #[test]
    fn nan_never_passes() {
        assert!(!Check::at_most(1, "x", f64::NAN, 1.0).pass);
        assert!(!Check::failed(3, &Error::InvalidInput("x".into())).pass);
    }

    #[test]
    fn fitted_circle_recovers_a_latitude() {
        let r = 2.0;
        let lat: f64 = 0.3;
        let pts: Vec<Vector3<f64>> = (0..50)
            .map(|i| {
                let t = 0.1 * i as f64;
                Vector3::new(r * lat.cos() * t.cos(), r * lat.cos() * t.sin(), r * lat.sin())
            })
            .collect();
        let tan = (0..50)
            .map(|i| {
                let t = 0.1 * i as f64;
                Vector3::new(-t.sin(), t.cos(), 0.0)
            })
            .collect();
        let l = SphericalCurve::from_samples(r, 0.1 * r * lat.cos(), pts, tan, vec![], false).unwrap();
        let (got, len) = fitted_circle(&l);
        assert!((got - lat).abs() < 1e-12);
        assert!((len - 2.0 * PI * r * lat.cos()).abs() < 1e-12);
    }

    #[test]
    fn closed_form_suite_passes() {
        let rep = verify_theorems(Suite::ClosedForms);
        assert!(rep.pass, "{:#?}", rep.checks);
        for n in [1, 2, 7, 12] {
            assert_eq!(rep.criterion_pass(n), Some(true));
        }
        assert_eq!(rep.criterion_pass(3), None);
    }

    #[test]
    fn report_serializes_expected_fields() {
        let rep = Verifier::new().run(Suite::ClosedForms);
        let json = serde_json::to_value(&rep).unwrap();
        assert_eq!(json["suite"], "closed-forms");
        for key in ["criterion", "check", "anchor", "expected", "got", "tol", "pass"] {
            assert!(json["checks"][0].get(key).is_some(), "{key}");
        }
    }
}
