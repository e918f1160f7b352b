//! Curves of prescribed geodesic curvature in spherical coordinates
//! `(theta, phi)`, theta measured from the pole.
//!
//! Everything is integrated on the unit sphere; a curve of length `lambda`
//! and curvature `kappa` on the sphere of radius `r` becomes one of length
//! `lambda / r` and curvature `r kappa`.

use std::f64::consts::PI;

use nalgebra::Vector3;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::angle_between;

/// `sin(theta)` below which the coordinates are treated as singular.
pub const POLE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ParageodesicForm {
    /// `theta'' = -k sin(theta) sqrt(1 - theta'^2) - sin(theta) cos(theta) (1 - theta'^2)`
    /// with `phi' = sqrt(1 - theta'^2) / sin(theta)`, integrated as written.
    Printed,
    /// Heading angle `psi` from the meridian: `theta' = cos psi`,
    /// `phi' = sin psi / sin theta`, `psi' = k - cot(theta) sin psi`. Exact
    /// for geodesic curvature `k` toward the left of the outward normal.
    #[default]
    Heading,
}

/// Samples of a solution on the unit sphere, with arclength `tau` in units
/// of the original radius.
#[derive(Debug, Clone, PartialEq)]
pub struct Parageodesic {
    pub radius: f64,
    pub form: ParageodesicForm,
    /// Unit-sphere arclength step.
    pub step: f64,
    pub theta: Vec<f64>,
    pub phi: Vec<f64>,
    /// `d theta / d tau` on the unit sphere.
    pub theta_dot: Vec<f64>,
}

fn spherical(theta: f64, phi: f64) -> Vector3<f64> {
    let (st, ct) = theta.sin_cos();
    Vector3::new(st * phi.cos(), st * phi.sin(), ct)
}

impl Parageodesic {
    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    /// Point `i` on the sphere of radius `radius`.
    pub fn point(&self, i: usize) -> Vector3<f64> {
        spherical(self.theta[i], self.phi[i]) * self.radius
    }

    /// Geodesic distance between the endpoints on the sphere of radius `radius`.
    pub fn end_distance(&self) -> f64 {
        self.radius * angle_between(&self.point(0), &self.point(self.len() - 1))
    }

    /// Largest residual of the coordinate parageodesic system on the unit
    /// sphere, with derivatives from five-point differences of the samples:
    ///
    /// `theta'' - sin cos phi'^2 = -k sin(theta) phi'`,
    /// `phi'' + 2 cot(theta) theta' phi' = k theta' / sin(theta)`.
    ///
    /// `kappa` is the curvature on the sphere of radius `radius` at the
    /// original arclength.
    pub fn residual(&self, kappa: &dyn Fn(f64) -> f64) -> f64 {
        let h = self.step;
        let n = self.len();
        let mut worst: f64 = 0.0;
        for i in 2..n.saturating_sub(2) {
            let d1 = |v: &[f64]| (v[i - 2] - 8.0 * v[i - 1] + 8.0 * v[i + 1] - v[i + 2]) / (12.0 * h);
            let d2 = |v: &[f64]| {
                (-v[i - 2] + 16.0 * v[i - 1] - 30.0 * v[i] + 16.0 * v[i + 1] - v[i + 2]) / (12.0 * h * h)
            };
            let (th, k) = (self.theta[i], self.radius * kappa(i as f64 * h * self.radius));
            let (st, ct) = th.sin_cos();
            let (dt, dp) = (d1(&self.theta), d1(&self.phi));
            let rt = d2(&self.theta) - st * ct * dp * dp + k * st * dp;
            let rp = d2(&self.phi) + 2.0 * ct / st * dt * dp - k * dt / st;
            worst = worst.max(rt.abs()).max((st * rp).abs());
        }
        worst
    }
}

/// Solves for a curve of geodesic curvature `kappa(t)`, `t` in
/// `[0, length]`, on the sphere of radius `r`, starting at colatitude
/// `theta0` and longitude 0 with `d theta / d tau = theta_dot0` on the unit
/// sphere. The longitude initially increases.
pub fn parageodesic_solve(
    kappa: &dyn Fn(f64) -> f64,
    length: f64,
    r: f64,
    theta0: f64,
    theta_dot0: f64,
    steps: usize,
    form: ParageodesicForm,
) -> Result<Parageodesic> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::InvalidRadius(r));
    }
    if !(length > 0.0 && length < PI * r) {
        return Err(Error::InvalidInput(format!("length {length} must lie in (0, pi r)")));
    }
    if !(theta_dot0.abs() <= 1.0) {
        return Err(Error::InvalidInput(format!("|theta'(0)| = {} exceeds 1", theta_dot0.abs())));
    }
    if steps < 4 {
        return Err(Error::InvalidInput("need at least 4 steps".into()));
    }
    if theta0.sin() < POLE_TOL {
        return Err(Error::PoleSingularity { t: 0.0 });
    }
    let h = length / r / steps as f64;
    let k = |tau: f64| r * kappa(tau * r);
    let pole = |theta: f64, tau: f64| {
        if theta.sin() < POLE_TOL {
            Err(Error::PoleSingularity { t: tau * r })
        } else {
            Ok(())
        }
    };
    // state (theta, phi, w): w is psi for the heading form, theta' otherwise
    let rhs = |tau: f64, y: [f64; 3]| -> Result<[f64; 3]> {
        let [th, _, w] = y;
        pole(th, tau)?;
        let (st, ct) = th.sin_cos();
        Ok(match form {
            ParageodesicForm::Heading => {
                let (sp, cp) = w.sin_cos();
                [cp, sp / st, k(tau) - ct / st * sp]
            }
            ParageodesicForm::Printed => {
                let q = (1.0 - w * w).max(0.0);
                [w, q.sqrt() / st, -k(tau) * st * q.sqrt() - st * ct * q]
            }
        })
    };
    let w0 = match form {
        ParageodesicForm::Heading => theta_dot0.acos(),
        ParageodesicForm::Printed => theta_dot0,
    };
    let mut y = [theta0, 0.0, w0];
    let mut out = Parageodesic {
        radius: r,
        form,
        step: h,
        theta: Vec::with_capacity(steps + 1),
        phi: Vec::with_capacity(steps + 1),
        theta_dot: Vec::with_capacity(steps + 1),
    };
    let theta_dot = |y: &[f64; 3]| match form {
        ParageodesicForm::Heading => y[2].cos(),
        ParageodesicForm::Printed => y[2],
    };
    let add = |a: &[f64; 3], b: &[f64; 3], c: f64| [a[0] + c * b[0], a[1] + c * b[1], a[2] + c * b[2]];
    for i in 0..=steps {
        out.theta.push(y[0]);
        out.phi.push(y[1]);
        out.theta_dot.push(theta_dot(&y));
        if i == steps {
            break;
        }
        let tau = i as f64 * h;
        let k1 = rhs(tau, y)?;
        let k2 = rhs(tau + 0.5 * h, add(&y, &k1, 0.5 * h))?;
        let k3 = rhs(tau + 0.5 * h, add(&y, &k2, 0.5 * h))?;
        let k4 = rhs(tau + h, add(&y, &k3, h))?;
        for j in 0..3 {
            y[j] += h / 6.0 * (k1[j] + 2.0 * (k2[j] + k3[j]) + k4[j]);
        }
        pole(y[0], tau + h)?;
    }
    Ok(out)
}

/// Endpoint distance of an arc of constant geodesic curvature `kappa` and
/// length `length` on the sphere of radius `r`: the arc lies on a circle of
/// angular radius `acot(r kappa)`.
pub fn constant_curvature_end_distance(kappa: f64, length: f64, r: f64) -> f64 {
    let rho = (r * kappa).abs().recip().atan();
    let swept = length / r / rho.sin();
    let (s, c) = rho.sin_cos();
    let cos_d = (c * c + s * s * swept.cos()).clamp(-1.0, 1.0);
    r * cos_d.acos()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MobOptions {
    /// Bound `R` on `|g|` for controls `kappa = g'`.
    pub bound: f64,
    pub length: f64,
    pub radius: f64,
    pub trials: usize,
    pub seed: u64,
    /// Fourier modes per random control.
    pub terms: usize,
    pub steps: usize,
    pub bumps: usize,
    /// Amplitude of the bump variations.
    pub bump_size: f64,
    pub tol: f64,
}

impl Default for MobOptions {
    fn default() -> Self {
        MobOptions {
            bound: 0.3,
            length: 0.5,
            radius: 1.0,
            trials: 500,
            seed: 0x5eed,
            terms: 4,
            steps: 2000,
            bumps: 50,
            bump_size: 0.01,
            tol: 1e-9,
        }
    }
}

/// Endpoint distance of one constant control.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantReading {
    pub label: String,
    pub kappa: f64,
    /// Whether `kappa = g'` for some `|g| <= R`, i.e. `kappa lambda <= 2R`.
    pub admissible: bool,
    pub f_r: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BumpCheck {
    pub bumps: usize,
    pub size: f64,
    /// `F(kappa + bump) - F(kappa)` extremes over the bumps.
    pub min_change: f64,
    pub max_change: f64,
    /// All changes negative: more turning brings the end closer.
    pub pass: bool,
}

/// Controls bounded by `|kappa| <= 2R / lambda` pointwise, against the same
/// constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureBoundCheck {
    pub trials: usize,
    pub f_min_sampled: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MobReport {
    #[serde(rename = "R")]
    pub bound: f64,
    pub lambda: f64,
    pub r: f64,
    pub trials: usize,
    pub seed: u64,
    /// Endpoint distance of the constant control `2R / lambda`.
    pub f_const: f64,
    pub f_min_sampled: f64,
    pub f_median_sampled: f64,
    pub f_max_sampled: f64,
    pub pass: bool,
    pub kappa_const: f64,
    pub tol: f64,
    /// Samples with `F < f_const - tol`.
    pub beating: usize,
    pub best_trial: usize,
    pub retries: usize,
    pub constants: Vec<ConstantReading>,
    pub bump_check: BumpCheck,
    pub curvature_bound_check: CurvatureBoundCheck,
}

/// `g(t) = sum_k a_k cos(k pi t / lambda) + b_k sin(k pi t / lambda)`.
#[derive(Debug, Clone)]
struct Fourier {
    cos: Vec<f64>,
    sin: Vec<f64>,
    length: f64,
    scale: f64,
}

impl Fourier {
    fn random(rng: &mut ChaCha8Rng, terms: usize, length: f64) -> Self {
        let mut draw = || (0..terms).map(|_| rng.random_range(-1.0..1.0)).collect::<Vec<f64>>();
        let cos = draw();
        let sin = draw();
        Fourier {
            cos,
            sin,
            length,
            scale: 1.0,
        }
    }

    /// Derivative of order `order` at `t`.
    fn eval(&self, t: f64, order: u32) -> f64 {
        let mut acc = 0.0;
        for k in 0..self.cos.len() {
            let w = (k + 1) as f64 * PI / self.length;
            let (s, c) = (w * t).sin_cos();
            let (a, b) = (self.cos[k], self.sin[k]);
            // d/dt cycles (cos, sin) -> (-sin, cos)
            let v = match order % 4 {
                0 => a * c + b * s,
                1 => -a * s + b * c,
                2 => -a * c - b * s,
                _ => a * s - b * c,
            };
            acc += v * w.powi(order as i32);
        }
        acc * self.scale
    }

    /// Sup norm of the derivative of order `order` on `[0, length]`: grid
    /// search refined by Newton steps on the next derivative.
    fn sup(&self, order: u32) -> f64 {
        let grid = 4096;
        let mut best = (0.0, 0.0);
        for i in 0..=grid {
            let t = self.length * i as f64 / grid as f64;
            let v = self.eval(t, order).abs();
            if v > best.0 {
                best = (v, t);
            }
        }
        let mut t = best.1;
        for _ in 0..8 {
            let d2 = self.eval(t, order + 2);
            if d2 == 0.0 {
                break;
            }
            t = (t - self.eval(t, order + 1) / d2).clamp(0.0, self.length);
        }
        best.0.max(self.eval(t, order).abs())
    }

    /// Scales the sup norm of the values to `bound`.
    fn rescaled(mut self, bound: f64) -> Self {
        let s = self.sup(0);
        self.scale = if s > 0.0 { bound / s } else { 0.0 };
        self
    }
}

/// Endpoint distance of the curve with curvature `kappa`, started on the
/// equator heading east. A pole hit is retried heading south; returns the
/// distance and the number of retries.
fn end_distance(kappa: &(dyn Fn(f64) -> f64 + Sync), opts: &MobOptions) -> Result<(f64, usize)> {
    let solve = |dot: f64| {
        parageodesic_solve(kappa, opts.length, opts.radius, 0.5 * PI, dot, opts.steps, ParageodesicForm::Heading)
    };
    match solve(0.0) {
        Ok(p) => Ok((p.end_distance(), 0)),
        Err(Error::PoleSingularity { .. }) => Ok((solve(1.0)?.end_distance(), 1)),
        Err(e) => Err(e),
    }
}

/// Samples admissible controls `kappa = g'` with `sup |g| = R` and compares
/// their endpoint distances with the constant control `2R / lambda`, the
/// largest constant the bound admits. Trial `i` draws from seed `seed ^ i`.
pub fn mob_minimality_test(opts: &MobOptions) -> Result<MobReport> {
    let (big_r, lambda, r) = (opts.bound, opts.length, opts.radius);
    if !(big_r >= 0.0) || !big_r.is_finite() {
        return Err(Error::InvalidInput(format!("control bound {big_r} must be nonnegative")));
    }
    if !(r > 0.0) || !(lambda > 0.0 && lambda < PI * r) {
        return Err(Error::InvalidInput(format!("need 0 < lambda = {lambda} < pi r = {}", PI * r)));
    }
    if opts.trials < 100 {
        return Err(Error::InvalidInput(format!("{} trials; at least 100 required", opts.trials)));
    }
    if opts.terms == 0 || opts.steps < 4 {
        return Err(Error::InvalidInput("need at least one Fourier mode and 4 steps".into()));
    }
    let kappa_const = 2.0 * big_r / lambda;
    let (f_const, _) = end_distance(&|_| kappa_const, opts)?;

    // the series is g with kappa = g', or kappa itself
    let sampled = |bound: f64, series_is_kappa: bool| -> Result<Vec<(f64, usize)>> {
        (0..opts.trials)
            .into_par_iter()
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ i as u64);
                let g = Fourier::random(&mut rng, opts.terms, lambda).rescaled(bound);
                let order = if series_is_kappa { 0 } else { 1 };
                let kappa = move |t: f64| g.eval(t, order);
                end_distance(&kappa, opts)
            })
            .collect()
    };
    let results = sampled(big_r, false)?;
    let retries = results.iter().map(|x| x.1).sum();
    let mut fs: Vec<f64> = results.iter().map(|x| x.0).collect();
    let best_trial = (0..fs.len()).min_by(|&a, &b| fs[a].total_cmp(&fs[b])).unwrap_or(0);
    let beating = fs.iter().filter(|&&f| f < f_const - opts.tol).count();
    fs.sort_by(f64::total_cmp);
    let median = if fs.len() % 2 == 1 {
        fs[fs.len() / 2]
    } else {
        0.5 * (fs[fs.len() / 2 - 1] + fs[fs.len() / 2])
    };

    let constants = [
        ("2R/lambda", kappa_const),
        ("R/lambda", big_r / lambda),
        ("lambda/R", if big_r > 0.0 { lambda / big_r } else { f64::INFINITY }),
    ]
    .into_iter()
    .map(|(label, k)| {
        let f_r = if k.is_finite() {
            end_distance(&|_| k, opts).map(|x| x.0).unwrap_or(f64::NAN)
        } else {
            f64::NAN
        };
        ConstantReading {
            label: label.to_string(),
            kappa: k,
            admissible: k * lambda <= 2.0 * big_r * (1.0 + 1e-12),
            f_r,
        }
    })
    .collect();

    let bounded = sampled(kappa_const, true)?;
    let bounded_min = bounded.iter().map(|x| x.0).fold(f64::INFINITY, f64::min);

    let width = 0.2 * lambda;
    let changes: Vec<f64> = (0..opts.bumps)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ (1u64 << 32) ^ i as u64);
            let centre = rng.random_range(0.5 * width..lambda - 0.5 * width);
            let size = opts.bump_size;
            let bumped = move |t: f64| {
                let x = (t - centre) / width;
                let bump = if x.abs() < 0.5 { (PI * (x + 0.5)).sin().powi(2) } else { 0.0 };
                kappa_const + size * bump
            };
            end_distance(&bumped, opts).map(|(f, _)| f - f_const)
        })
        .collect::<Result<_>>()?;
    let min_change = changes.iter().copied().fold(f64::INFINITY, f64::min);
    let max_change = changes.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    Ok(MobReport {
        bound: big_r,
        lambda,
        r,
        trials: opts.trials,
        seed: opts.seed,
        f_const,
        f_min_sampled: fs[0],
        f_median_sampled: median,
        f_max_sampled: fs[fs.len() - 1],
        pass: beating == 0,
        kappa_const,
        tol: opts.tol,
        beating,
        best_trial,
        retries,
        constants,
        bump_check: BumpCheck {
            bumps: opts.bumps,
            size: opts.bump_size,
            min_change,
            max_change,
            pass: opts.bumps > 0 && max_change < 0.0,
        },
        curvature_bound_check: CurvatureBoundCheck {
            trials: opts.trials,
            f_min_sampled: bounded_min,
            pass: bounded_min >= f_const - opts.tol,
        },
    })
}
