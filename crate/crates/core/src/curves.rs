//! Planar target curves: graphs of functions, their arclength
//! reparametrization, signed curvature and periodic continuation.

use std::f64::consts::PI;
use std::io::{BufRead, Write};

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{self, gauss_legendre5, hermite, knot_segments, pchip_slopes};

/// Absolute tolerance on unit-tangent components when comparing seam tangents.
pub const TOL_DERIV: f64 = 1e-8;

/// Slopes beyond this are treated as vertical tangents.
pub const SLOPE_GUARD: f64 = 1e6;

pub const MIN_FUNCTION_SAMPLES: usize = 16;

/// Analytic descriptions of the function families used by the oracle tests
/// and the built-in CLI shapes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ClosedForm {
    Flat,
    /// Upper half of a circle of the given radius centred on the domain.
    Semicircle { radius: f64 },
    /// `amplitude * sin(wavenumber * (x - x0))`.
    Sine { amplitude: f64, wavenumber: f64 },
    /// One raised-cosine arch `amplitude * sin^2(pi (x - x0) / E)`, with zero
    /// slope at both ends.
    SineArch { amplitude: f64 },
    /// `sum c_k (x - x0)^k`.
    Polynomial { coefficients: Vec<f64> },
}

/// Samples of a function `f: [x0, x0 + E] -> R` on a uniform grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionSpec {
    pub x0: f64,
    pub length: f64,
    pub values: Vec<f64>,
    pub slope_start: f64,
    pub slope_end: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub closed_form: Option<ClosedForm>,
    /// Abscissae where the second derivative may jump.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub knots: Vec<f64>,
}

impl FunctionSpec {
    pub fn from_samples(
        x0: f64,
        length: f64,
        values: Vec<f64>,
        slope_start: f64,
        slope_end: f64,
    ) -> Result<Self> {
        let spec = FunctionSpec {
            x0,
            length,
            values,
            slope_start,
            slope_end,
            closed_form: None,
            knots: Vec::new(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_closed_form(form: ClosedForm, x0: f64, length: f64, samples: usize) -> Result<Self> {
        if !(length > 0.0) || !length.is_finite() {
            return Err(Error::InvalidInput(format!("domain length {length} must be positive")));
        }
        if samples < MIN_FUNCTION_SAMPLES {
            return Err(Error::InvalidInput(format!(
                "need at least {MIN_FUNCTION_SAMPLES} samples, got {samples}"
            )));
        }
        if let ClosedForm::Semicircle { radius } = form {
            if (2.0 * radius - length).abs() > 1e-12 * length {
                return Err(Error::InvalidInput(format!(
                    "semicircle of radius {radius} needs domain length {}",
                    2.0 * radius
                )));
            }
        }
        let eval = Analytic { form: form.clone(), x0, length };
        let h = length / (samples - 1) as f64;
        let values = (0..samples).map(|i| eval.value(x0 + i as f64 * h)).collect();
        let spec = FunctionSpec {
            x0,
            length,
            values,
            slope_start: eval.slope(x0),
            slope_end: eval.slope(x0 + length),
            closed_form: Some(form),
            knots: Vec::new(),
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Adds knots where the second derivative may jump.
    pub fn with_knots(mut self, knots: Vec<f64>) -> Self {
        self.knots = knots;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.length > 0.0) || !self.length.is_finite() || !self.x0.is_finite() {
            return Err(Error::InvalidInput(format!(
                "domain [{}, {} + {}] is not a positive finite interval",
                self.x0, self.x0, self.length
            )));
        }
        if self.values.len() < MIN_FUNCTION_SAMPLES {
            return Err(Error::InvalidInput(format!(
                "need at least {MIN_FUNCTION_SAMPLES} samples, got {}",
                self.values.len()
            )));
        }
        if self.closed_form.is_none() {
            if let Some(i) = self.values.iter().position(|v| !v.is_finite()) {
                return Err(Error::InvalidInput(format!("sample {i} is not finite")));
            }
            for (x, slope) in [
                (self.x0, self.slope_start),
                (self.x0 + self.length, self.slope_end),
            ] {
                if !slope.is_finite() {
                    return Err(Error::InvalidInput(format!("endpoint slope at x = {x} is not finite")));
                }
            }
        }
        Ok(())
    }

    pub fn sample_count(&self) -> usize {
        self.values.len()
    }

    pub fn sample_step(&self) -> f64 {
        self.length / (self.values.len() - 1) as f64
    }

    /// Whether the unit tangents at both ends agree, which the closure
    /// constructions require.
    pub fn is_periodic_compatible(&self) -> bool {
        tangent_of_slope(self.slope_start)
            .metric_distance(&tangent_of_slope(self.slope_end))
            < TOL_DERIV
    }

    /// Largest |f'| over the sample grid and interval midpoints.
    pub fn max_slope(&self) -> f64 {
        let graph = Graph::new(self);
        let h = self.sample_step();
        (0..2 * (self.values.len() - 1) + 1)
            .map(|k| graph.slope(self.x0 + 0.5 * k as f64 * h).abs())
            .fold(0.0, f64::max)
    }

    /// Bound on the C2 norm `max(|f|, |f'|, |f''|)` measured on a refined grid.
    pub fn c2_bound(&self) -> f64 {
        let graph = Graph::new(self);
        let h = self.sample_step();
        let mut bound = 0.0f64;
        for k in 0..4 * (self.values.len() - 1) + 1 {
            let x = self.x0 + 0.25 * k as f64 * h;
            bound = bound
                .max(graph.value(x).abs())
                .max(graph.slope(x).abs())
                .max(graph.second(x).abs());
        }
        bound
    }

    pub fn evaluate(&self, x: f64) -> f64 {
        Graph::new(self).value(x)
    }

    pub fn slope_at(&self, x: f64) -> f64 {
        Graph::new(self).slope(x)
    }
}

fn tangent_of_slope(slope: f64) -> Vector2<f64> {
    Vector2::new(1.0, slope) / (1.0 + slope * slope).sqrt()
}

struct Analytic {
    form: ClosedForm,
    x0: f64,
    length: f64,
}

impl Analytic {
    fn value(&self, x: f64) -> f64 {
        let u = x - self.x0;
        match &self.form {
            ClosedForm::Flat => 0.0,
            ClosedForm::Semicircle { radius } => {
                let d = u - radius;
                (radius * radius - d * d).max(0.0).sqrt()
            }
            ClosedForm::Sine { amplitude, wavenumber } => amplitude * (wavenumber * u).sin(),
            ClosedForm::SineArch { amplitude } => {
                let s = (PI * u / self.length).sin();
                amplitude * s * s
            }
            ClosedForm::Polynomial { coefficients } => {
                coefficients.iter().rev().fold(0.0, |acc, c| acc * u + c)
            }
        }
    }

    fn slope(&self, x: f64) -> f64 {
        let u = x - self.x0;
        match &self.form {
            ClosedForm::Flat => 0.0,
            ClosedForm::Semicircle { radius } => {
                let d = u - radius;
                let q = (radius * radius - d * d).max(0.0).sqrt();
                if q == 0.0 {
                    f64::INFINITY
                } else {
                    -d / q
                }
            }
            ClosedForm::Sine { amplitude, wavenumber } => {
                amplitude * wavenumber * (wavenumber * u).cos()
            }
            ClosedForm::SineArch { amplitude } => {
                let w = PI / self.length;
                amplitude * w * (2.0 * w * u).sin()
            }
            ClosedForm::Polynomial { coefficients } => coefficients
                .iter()
                .enumerate()
                .skip(1)
                .rev()
                .fold(0.0, |acc, (k, c)| acc * u + k as f64 * c),
        }
    }

    fn second(&self, x: f64) -> f64 {
        let u = x - self.x0;
        match &self.form {
            ClosedForm::Flat => 0.0,
            ClosedForm::Semicircle { radius } => {
                let d = u - radius;
                let q2 = (radius * radius - d * d).max(0.0);
                -radius * radius / (q2 * q2.sqrt())
            }
            ClosedForm::Sine { amplitude, wavenumber } => {
                -amplitude * wavenumber * wavenumber * (wavenumber * u).sin()
            }
            ClosedForm::SineArch { amplitude } => {
                let w = PI / self.length;
                2.0 * amplitude * w * w * (2.0 * w * u).cos()
            }
            ClosedForm::Polynomial { coefficients } => coefficients
                .iter()
                .enumerate()
                .skip(2)
                .rev()
                .fold(0.0, |acc, (k, c)| acc * u + (k * (k - 1)) as f64 * c),
        }
    }
}

/// Clamped cubic spline through uniformly spaced samples, C2 except at knots.
///
/// Each knot-free run is an independent clamped spline; the slope at an
/// interior knot is the mean of the one-sided fourth-order estimates.
struct Spline {
    x0: f64,
    h: f64,
    y: Vec<f64>,
    /// Second derivative at the left and right end of each interval.
    m: Vec<(f64, f64)>,
}

fn one_sided_slope(y: &[f64], h: f64) -> f64 {
    match y.len() {
        0 | 1 => 0.0,
        2 => (y[1] - y[0]) / h,
        3 | 4 => (-3.0 * y[0] + 4.0 * y[1] - y[2]) / (2.0 * h),
        _ => (-25.0 * y[0] + 48.0 * y[1] - 36.0 * y[2] + 16.0 * y[3] - 3.0 * y[4]) / (12.0 * h),
    }
}

fn clamped_second_derivatives(y: &[f64], h: f64, d0: f64, d1: f64) -> Vec<f64> {
    let n = y.len();
    if n == 2 {
        // the clamped cubic on a single interval
        let s = (y[1] - y[0]) / h;
        return vec![(6.0 * s - 4.0 * d0 - 2.0 * d1) / h, (4.0 * d1 + 2.0 * d0 - 6.0 * s) / h];
    }
    let mut diag = vec![4.0; n];
    let mut rhs = vec![0.0; n];
    diag[0] = 2.0;
    diag[n - 1] = 2.0;
    rhs[0] = 6.0 / h * ((y[1] - y[0]) / h - d0);
    rhs[n - 1] = 6.0 / h * (d1 - (y[n - 1] - y[n - 2]) / h);
    for i in 1..n - 1 {
        rhs[i] = 6.0 / (h * h) * (y[i + 1] - 2.0 * y[i] + y[i - 1]);
    }
    // Thomas algorithm, off-diagonals are all 1.
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = 1.0 / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let denom = diag[i] - c[i - 1];
        c[i] = 1.0 / denom;
        d[i] = (rhs[i] - d[i - 1]) / denom;
    }
    let mut m = vec![0.0; n];
    m[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        m[i] = d[i] - c[i] * m[i + 1];
    }
    m
}

impl Spline {
    fn new(spec: &FunctionSpec) -> Self {
        let n = spec.values.len();
        let h = spec.sample_step();
        let y = spec.values.clone();
        let knots: Vec<usize> = spec
            .knots
            .iter()
            .map(|&x| ((x - spec.x0) / h).round() as usize)
            .filter(|&k| k > 0 && k < n - 1)
            .collect();
        let mut m = vec![(0.0, 0.0); n - 1];
        for (a, b) in knot_segments(n, &knots) {
            let d0 = if a == 0 {
                spec.slope_start
            } else {
                let left: Vec<f64> = y[..=a].iter().rev().copied().collect();
                0.5 * (one_sided_slope(&y[a..], h) - one_sided_slope(&left, h))
            };
            let d1 = if b == n - 1 {
                spec.slope_end
            } else {
                let left: Vec<f64> = y[..=b].iter().rev().copied().collect();
                0.5 * (one_sided_slope(&y[b..], h) - one_sided_slope(&left, h))
            };
            let piece = clamped_second_derivatives(&y[a..=b], h, d0, d1);
            for i in a..b {
                m[i] = (piece[i - a], piece[i - a + 1]);
            }
        }
        Spline { x0: spec.x0, h, y, m }
    }

    fn locate(&self, x: f64) -> (usize, f64) {
        let n = self.y.len();
        let u = ((x - self.x0) / self.h).clamp(0.0, (n - 1) as f64);
        let i = (u.floor() as usize).min(n - 2);
        (i, (u - i as f64) * self.h)
    }

    fn value(&self, x: f64) -> f64 {
        let (i, t) = self.locate(x);
        let h = self.h;
        let (a, b) = (h - t, t);
        let (m0, m1) = self.m[i];
        m0 * a.powi(3) / (6.0 * h)
            + m1 * b.powi(3) / (6.0 * h)
            + (self.y[i] / h - m0 * h / 6.0) * a
            + (self.y[i + 1] / h - m1 * h / 6.0) * b
    }

    fn slope(&self, x: f64) -> f64 {
        let (i, t) = self.locate(x);
        let h = self.h;
        let (a, b) = (h - t, t);
        let (m0, m1) = self.m[i];
        -m0 * a * a / (2.0 * h) + m1 * b * b / (2.0 * h) + (self.y[i + 1] - self.y[i]) / h
            - (m1 - m0) * h / 6.0
    }

    fn second(&self, x: f64) -> f64 {
        let (i, t) = self.locate(x);
        let (m0, m1) = self.m[i];
        (m0 * (self.h - t) + m1 * t) / self.h
    }
}

enum Graph {
    Analytic(Analytic),
    Spline(Spline),
}

impl Graph {
    fn new(spec: &FunctionSpec) -> Self {
        match &spec.closed_form {
            Some(form) => Graph::Analytic(Analytic {
                form: form.clone(),
                x0: spec.x0,
                length: spec.length,
            }),
            None => Graph::Spline(Spline::new(spec)),
        }
    }

    fn value(&self, x: f64) -> f64 {
        match self {
            Graph::Analytic(a) => a.value(x),
            Graph::Spline(s) => s.value(x),
        }
    }

    fn slope(&self, x: f64) -> f64 {
        match self {
            Graph::Analytic(a) => a.slope(x),
            Graph::Spline(s) => s.slope(x),
        }
    }

    fn second(&self, x: f64) -> f64 {
        match self {
            Graph::Analytic(a) => a.second(x),
            Graph::Spline(s) => s.second(x),
        }
    }

    fn speed(&self, x: f64) -> f64 {
        let d = self.slope(x);
        (1.0 + d * d).sqrt()
    }
}

/// A planar curve sampled on a uniform arclength grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanarCurve {
    step: f64,
    points: Vec<Vector2<f64>>,
    tangents: Vec<Vector2<f64>>,
    curvature: Vec<f64>,
    knots: Vec<usize>,
    segments: Vec<(usize, usize)>,
}

impl PlanarCurve {
    /// Builds a curve from arclength samples. Tangents must be unit length;
    /// curvature is estimated with [`signed_curvature`].
    pub fn from_samples(
        step: f64,
        points: Vec<Vector2<f64>>,
        tangents: Vec<Vector2<f64>>,
        knots: Vec<usize>,
    ) -> Result<Self> {
        if points.len() < 3 || points.len() != tangents.len() {
            return Err(Error::InvalidInput(format!(
                "need at least 3 matched point/tangent samples, got {}/{}",
                points.len(),
                tangents.len()
            )));
        }
        if !(step > 0.0) || !step.is_finite() {
            return Err(Error::InvalidInput(format!("arclength step {step} must be positive")));
        }
        let segments = knot_segments(points.len(), &knots);
        let mut curve = PlanarCurve {
            step,
            points,
            tangents,
            curvature: Vec::new(),
            knots,
            segments,
        };
        curve.curvature = signed_curvature(&curve)?;
        Ok(curve)
    }

    /// Builds a curve from samples with known curvature.
    pub fn with_curvature(
        step: f64,
        points: Vec<Vector2<f64>>,
        tangents: Vec<Vector2<f64>>,
        curvature: Vec<f64>,
        knots: Vec<usize>,
    ) -> Result<Self> {
        if points.len() < 3 || points.len() != tangents.len() || points.len() != curvature.len() {
            return Err(Error::InvalidInput("mismatched sample arrays".into()));
        }
        if !(step > 0.0) || !step.is_finite() {
            return Err(Error::InvalidInput(format!("arclength step {step} must be positive")));
        }
        let segments = knot_segments(points.len(), &knots);
        Ok(PlanarCurve {
            step,
            points,
            tangents,
            curvature,
            knots,
            segments,
        })
    }

    /// Straight segment of the given length from `start` along `heading`
    /// (radians), `samples + 1` points.
    pub fn segment(start: Vector2<f64>, heading: f64, length: f64, samples: usize) -> Result<Self> {
        let dir = Vector2::new(heading.cos(), heading.sin());
        let step = length / samples as f64;
        let points = (0..=samples).map(|i| start + dir * (i as f64 * step)).collect();
        let tangents = vec![dir; samples + 1];
        Self::from_samples(step, points, tangents, Vec::new())
    }

    /// Circle of radius `radius` through the origin with initial tangent
    /// (1, 0), traversed counterclockwise (`ccw`) or clockwise over total
    /// arclength `length`.
    pub fn circle(radius: f64, length: f64, samples: usize, ccw: bool) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::InvalidInput(format!("circle radius {radius} must be positive")));
        }
        let sign = if ccw { 1.0 } else { -1.0 };
        let step = length / samples as f64;
        let mut points = Vec::with_capacity(samples + 1);
        let mut tangents = Vec::with_capacity(samples + 1);
        for i in 0..=samples {
            let a = i as f64 * step / radius;
            points.push(Vector2::new(radius * a.sin(), sign * radius * (1.0 - a.cos())));
            tangents.push(Vector2::new(a.cos(), sign * a.sin()));
        }
        Self::from_samples(step, points, tangents, Vec::new())
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// Number of intervals.
    pub fn intervals(&self) -> usize {
        self.points.len() - 1
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn length(&self) -> f64 {
        self.step * self.intervals() as f64
    }

    pub fn points(&self) -> &[Vector2<f64>] {
        &self.points
    }

    pub fn tangents(&self) -> &[Vector2<f64>] {
        &self.tangents
    }

    pub fn curvature(&self) -> &[f64] {
        &self.curvature
    }

    pub fn knots(&self) -> &[usize] {
        &self.knots
    }

    pub fn max_abs_curvature(&self) -> f64 {
        self.curvature.iter().fold(0.0, |m, k| m.max(k.abs()))
    }

    /// Arclength of sample `i`.
    pub fn arclength(&self, i: usize) -> f64 {
        i as f64 * self.step
    }

    /// Curvature at arbitrary arclength by cubic interpolation.
    pub fn curvature_at(&self, s: f64) -> f64 {
        numeric::interpolate_uniform(&self.curvature, self.step, &self.segments, s)
    }

    /// Translation `v = k(end) - k(start)` carrying one period to the next.
    pub fn translation(&self) -> Vector2<f64> {
        self.points[self.points.len() - 1] - self.points[0]
    }

    /// Mismatch of the unit tangents at the two ends.
    pub fn seam_mismatch(&self) -> f64 {
        self.tangents[0].metric_distance(&self.tangents[self.tangents.len() - 1])
    }

    pub fn is_periodic_compatible(&self) -> bool {
        self.seam_mismatch() < TOL_DERIV
    }

    /// Resamples onto `intervals` equal steps, interpolating position by cubic
    /// Hermite (points and tangents) and curvature by cubic Lagrange.
    pub fn resample(&self, intervals: usize) -> Result<Self> {
        let length = self.length();
        let step = length / intervals as f64;
        let mut points = Vec::with_capacity(intervals + 1);
        let mut tangents = Vec::with_capacity(intervals + 1);
        let mut curvature = Vec::with_capacity(intervals + 1);
        for k in 0..=intervals {
            let s = (k as f64 * step).min(length);
            let u = (s / self.step).min(self.intervals() as f64);
            let i = (u.floor() as usize).min(self.intervals() - 1);
            let (x0, x1) = (i as f64 * self.step, (i + 1) as f64 * self.step);
            let p = Vector2::new(
                hermite(x0, x1, self.points[i].x, self.points[i + 1].x, self.tangents[i].x, self.tangents[i + 1].x, s),
                hermite(x0, x1, self.points[i].y, self.points[i + 1].y, self.tangents[i].y, self.tangents[i + 1].y, s),
            );
            let kappa = self.curvature_at(s);
            // tangent by rotating the sample tangent through the integrated turning
            let turn = 0.5 * (self.curvature[i] + kappa) * (s - x0);
            let t = rotate(self.tangents[i], turn);
            points.push(p);
            tangents.push(t);
            curvature.push(kappa);
        }
        let knots = self
            .knots
            .iter()
            .map(|&k| ((k as f64 * self.step) / step).round() as usize)
            .collect();
        Self::with_curvature(step, points, tangents, curvature, knots)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "s,x,y,kappa")?;
        for i in 0..self.points.len() {
            writeln!(
                w,
                "{:.16e},{:.16e},{:.16e},{:.16e}",
                self.arclength(i),
                self.points[i].x,
                self.points[i].y,
                self.curvature[i]
            )?;
        }
        Ok(())
    }

    /// Reads the `s,x,y,kappa` format. Tangents are rebuilt from the points.
    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let rows = crate::io::read_csv_rows(r, &["s", "x", "y", "kappa"], "planar curve CSV")?;
        if rows.len() < 3 {
            return Err(Error::parse("planar curve CSV", "need at least 3 rows"));
        }
        let n = rows.len();
        let step = (rows[n - 1][0] - rows[0][0]) / (n - 1) as f64;
        let points: Vec<Vector2<f64>> = rows.iter().map(|r| Vector2::new(r[1], r[2])).collect();
        let curvature: Vec<f64> = rows.iter().map(|r| r[3]).collect();
        let tangents = tangents_from_points(&points, step, &curvature)?;
        Self::with_curvature(step, points, tangents, curvature, Vec::new())
    }
}

fn rotate(v: Vector2<f64>, angle: f64) -> Vector2<f64> {
    let (s, c) = angle.sin_cos();
    Vector2::new(c * v.x - s * v.y, s * v.x + c * v.y)
}

/// Unit tangents from positions. For curvature linear over an interval the
/// chord direction leads the start tangent by `h (2 k0 + k1) / 6`.
fn tangents_from_points(points: &[Vector2<f64>], step: f64, curvature: &[f64]) -> Result<Vec<Vector2<f64>>> {
    let n = points.len();
    let mut chords = Vec::with_capacity(n - 1);
    for i in 0..n - 1 {
        let d = points[i + 1] - points[i];
        let norm = d.norm();
        if norm <= 1e-12 * step {
            return Err(Error::DegenerateCurve { index: i + 1 });
        }
        chords.push(d / norm);
    }
    let h6 = step / 6.0;
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let k = curvature[i];
        let t = if i == 0 {
            rotate(chords[0], -h6 * (2.0 * k + curvature[1]))
        } else if i == n - 1 {
            rotate(chords[n - 2], h6 * (2.0 * k + curvature[n - 2]))
        } else {
            let a = rotate(chords[i - 1], h6 * (2.0 * k + curvature[i - 1]));
            let b = rotate(chords[i], -h6 * (2.0 * k + curvature[i + 1]));
            (a + b).normalize()
        };
        out.push(t);
    }
    Ok(out)
}

/// Reparametrizes the graph of `f` by arclength on `intervals` equal steps.
///
/// The cumulative arclength is integrated per sample interval with
/// Gauss-Legendre quadrature; each target arclength is inverted by monotone
/// cubic interpolation followed by Newton polishing.
pub fn arclength_reparam(f: &FunctionSpec, intervals: usize) -> Result<PlanarCurve> {
    f.validate()?;
    if intervals < 2 {
        return Err(Error::InvalidInput("need at least 2 arclength intervals".into()));
    }
    if let Some(ClosedForm::Semicircle { radius }) = f.closed_form {
        return semicircle_curve(radius, f.evaluate(f.x0), intervals);
    }
    let graph = Graph::new(f);

    // Quadrature grid: the sample grid, refined for closed forms.
    let nodes = if f.closed_form.is_some() {
        (f.sample_count() - 1).max(intervals).max(64)
    } else {
        f.sample_count() - 1
    };
    let hx = f.length / nodes as f64;
    let xs: Vec<f64> = (0..=nodes).map(|j| f.x0 + j as f64 * hx).collect();

    for &x in xs.iter().chain(xs.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect::<Vec<_>>().iter()) {
        let slope = graph.slope(x);
        if !slope.is_finite() || slope.abs() > SLOPE_GUARD {
            return Err(Error::NotFunctionLike { x, slope: slope.abs() });
        }
    }

    let mut cumulative = Vec::with_capacity(nodes + 1);
    let mut acc = numeric::CompensatedSum::default();
    cumulative.push(0.0);
    for w in xs.windows(2) {
        acc.add(gauss_legendre5(w[0], w[1], |x| graph.speed(x)));
        cumulative.push(acc.value());
    }
    let total = cumulative[nodes];
    let slopes = pchip_slopes(&cumulative, &xs);

    let step = total / intervals as f64;
    let mut xs_out = Vec::with_capacity(intervals + 1);
    for k in 0..=intervals {
        let s = if k == intervals { total } else { k as f64 * step };
        let j = cumulative.partition_point(|&c| c <= s).clamp(1, nodes) - 1;
        let (s0, s1) = (cumulative[j], cumulative[j + 1]);
        let mut x = hermite(s0, s1, xs[j], xs[j + 1], slopes[j], slopes[j + 1], s);
        // Newton on S(x) = s within the interval.
        for _ in 0..4 {
            let sx = s0 + gauss_legendre5(xs[j], x, |t| graph.speed(t));
            let dx = (s - sx) / graph.speed(x);
            x = (x + dx).clamp(xs[j], xs[j + 1]);
            if dx.abs() < 1e-15 * f.length.max(1.0) {
                break;
            }
        }
        xs_out.push(x);
    }

    let points: Vec<Vector2<f64>> = xs_out
        .iter()
        .map(|&x| Vector2::new(x - f.x0, graph.value(x)))
        .collect();
    let tangents: Vec<Vector2<f64>> = xs_out.iter().map(|&x| tangent_of_slope(graph.slope(x))).collect();
    let knots = f
        .knots
        .iter()
        .filter_map(|&xk| {
            let j = ((xk - f.x0) / hx).round() as usize;
            (j > 0 && j < nodes).then(|| (cumulative[j] / step).round() as usize)
        })
        .collect();
    PlanarCurve::from_samples(step, points, tangents, knots)
}

fn semicircle_curve(radius: f64, y0: f64, intervals: usize) -> Result<PlanarCurve> {
    let length = PI * radius;
    let step = length / intervals as f64;
    let mut points = Vec::with_capacity(intervals + 1);
    let mut tangents = Vec::with_capacity(intervals + 1);
    for i in 0..=intervals {
        let beta = PI - i as f64 * step / radius;
        points.push(Vector2::new(radius * (1.0 + beta.cos()), y0 + radius * beta.sin()));
        tangents.push(Vector2::new(beta.sin(), -beta.cos()));
    }
    PlanarCurve::from_samples(step, points, tangents, Vec::new())
}

/// Signed curvature (counterclockwise positive) by central differences of the
/// unwrapped tangent angle, second-order one-sided at segment ends. Knots are
/// never differenced across.
pub fn signed_curvature(c: &PlanarCurve) -> Result<Vec<f64>> {
    let n = c.points.len();
    if n < 3 {
        return Err(Error::InvalidInput("curvature needs at least 3 samples".into()));
    }
    for i in 1..n {
        if (c.points[i] - c.points[i - 1]).norm() <= 1e-12 * c.step {
            return Err(Error::DegenerateCurve { index: i });
        }
    }
    let mut angle = Vec::with_capacity(n);
    angle.push(c.tangents[0].y.atan2(c.tangents[0].x));
    for i in 1..n {
        let (a, b) = (c.tangents[i - 1], c.tangents[i]);
        let turn = (a.x * b.y - a.y * b.x).atan2(a.dot(&b));
        angle.push(angle[i - 1] + turn);
    }
    let h = c.step;
    let mut kappa = vec![0.0; n];
    for (a, b) in knot_segments(n, &c.knots) {
        let len = b - a + 1;
        for i in a..=b {
            kappa[i] = if len < 3 {
                (angle[b] - angle[a]) / ((b - a) as f64 * h)
            } else if i == a {
                (-3.0 * angle[a] + 4.0 * angle[a + 1] - angle[a + 2]) / (2.0 * h)
            } else if i == b {
                (3.0 * angle[b] - 4.0 * angle[b - 1] + angle[b - 2]) / (2.0 * h)
            } else {
                (angle[i + 1] - angle[i - 1]) / (2.0 * h)
            };
        }
    }
    Ok(kappa)
}

/// Concatenates `copies` translates of a C1-periodic curve.
///
/// Seam samples take the curvature of the period start, so the curvature
/// sequence repeats exactly; seams are recorded as knots.
pub fn periodic_extend(k: &PlanarCurve, copies: usize) -> Result<PlanarCurve> {
    if copies == 0 {
        return Err(Error::InvalidInput("copies must be positive".into()));
    }
    let mismatch = k.seam_mismatch();
    if mismatch >= TOL_DERIV {
        return Err(Error::NotC1Periodic { mismatch });
    }
    let m = k.intervals();
    let v = k.translation();
    let total = copies * m + 1;
    let mut points = Vec::with_capacity(total);
    let mut tangents = Vec::with_capacity(total);
    let mut curvature = Vec::with_capacity(total);
    let mut knots = Vec::new();
    for j in 0..copies {
        let shift = v * j as f64;
        for i in 0..m {
            points.push(k.points[i] + shift);
            tangents.push(k.tangents[i]);
            curvature.push(k.curvature[i]);
        }
        for &kn in &k.knots {
            if kn > 0 && kn < m {
                knots.push(j * m + kn);
            }
        }
        if j > 0 {
            knots.push(j * m);
        }
    }
    points.push(k.points[m] + v * (copies - 1) as f64);
    tangents.push(k.tangents[m]);
    curvature.push(k.curvature[m]);
    knots.sort_unstable();
    PlanarCurve::with_curvature(k.step, points, tangents, curvature, knots)
}


#[cfg(test)]
mod props {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn sine_arch_is_unit_speed_from_end_to_end(amplitude in -0.5f64..0.5, width in 0.5f64..3.0) {
            let f = FunctionSpec::from_closed_form(ClosedForm::SineArch { amplitude }, 0.0, width, 257).unwrap();
            let c = arclength_reparam(&f, 512).unwrap();
            let h = c.step();
            // a chord falls short of its arc by kappa^2 h^2 / 24
            let sag = c.max_abs_curvature().powi(2) * h * h / 20.0;
            for (w, t) in c.points().windows(2).zip(c.tangents()) {
                let chord = (w[1] - w[0]).norm();
                prop_assert!(chord <= h * (1.0 + 1e-9) && chord >= h * (1.0 - sag - 1e-9));
                prop_assert!((t.norm() - 1.0).abs() < 1e-12);
            }
            prop_assert!((c.translation() - Vector2::new(width, 0.0)).norm() < 1e-9 * width);
            prop_assert!(c.length() >= width);
            prop_assert!(c.seam_mismatch() < 1e-6);
        }
    }
}
