//! Small numerical kernels shared by the geometry modules.

use std::ops::{Add, Mul, Sub};

/// Neumaier-compensated running sum. Order-dependent but reproducible.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.carry += (self.sum - t) + value;
        } else {
            self.carry += (value - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = CompensatedSum::default();
    for v in values {
        acc.add(v);
    }
    acc.value()
}

const GL5_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683_1,
    0.0,
    0.538_469_310_105_683_1,
    0.906_179_845_938_664,
];
const GL5_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189_08,
    0.478_628_670_499_366_47,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_47,
    0.236_926_885_056_189_08,
];

/// Five-point Gauss-Legendre rule on `[a, b]`.
pub fn gauss_legendre5(a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    GL5_NODES
        .iter()
        .zip(GL5_WEIGHTS.iter())
        .map(|(x, w)| w * f(mid + half * x))
        .sum::<f64>()
        * half
}

/// Splits `[0, n)` into runs between knot indices. Each run is `(start, end)`
/// inclusive, consecutive runs share their boundary sample.
pub fn knot_segments(n: usize, knots: &[usize]) -> Vec<(usize, usize)> {
    let mut cuts: Vec<usize> = knots.iter().copied().filter(|&k| k > 0 && k + 1 < n).collect();
    cuts.sort_unstable();
    cuts.dedup();
    let mut out = Vec::with_capacity(cuts.len() + 1);
    let mut start = 0;
    for k in cuts {
        out.push((start, k));
        start = k;
    }
    out.push((start, n.saturating_sub(1)));
    out
}

/// First derivative of uniformly spaced samples, fourth order where five
/// points are available inside a knot segment, lower order otherwise.
/// At a knot the derivative is taken from the segment to its right.
pub fn derivative<T>(values: &[T], step: f64, knots: &[usize]) -> Vec<T>
where
    T: Copy + Add<Output = T> + Sub<Output = T> + Mul<f64, Output = T>,
{
    let n = values.len();
    let mut out: Vec<T> = values.to_vec();
    if n < 2 {
        return out;
    }
    for (a, b) in knot_segments(n, knots) {
        let seg = &values[a..=b];
        let len = seg.len();
        for (i, slot) in out[a..=b].iter_mut().enumerate() {
            *slot = local_derivative(seg, i, len, step);
        }
    }
    out
}

fn local_derivative<T>(f: &[T], i: usize, len: usize, h: f64) -> T
where
    T: Copy + Add<Output = T> + Sub<Output = T> + Mul<f64, Output = T>,
{
    let inv12 = 1.0 / (12.0 * h);
    if len >= 5 {
        if i >= 2 && i + 2 < len {
            return ((f[i + 1] - f[i - 1]) * 8.0 - (f[i + 2] - f[i - 2])) * inv12;
        }
        if i == 0 {
            return (f[1] * 48.0 - f[0] * 25.0 - f[2] * 36.0 + f[3] * 16.0 - f[4] * 3.0) * inv12;
        }
        if i == 1 {
            return (f[2] * 18.0 - f[0] * 3.0 - f[1] * 10.0 - f[3] * 6.0 + f[4]) * inv12;
        }
        let j = len - 1;
        if i == j {
            return (f[j] * 25.0 - f[j - 1] * 48.0 + f[j - 2] * 36.0 - f[j - 3] * 16.0
                + f[j - 4] * 3.0)
                * inv12;
        }
        // i == len - 2
        return (f[j] * 3.0 + f[j - 1] * 10.0 - f[j - 2] * 18.0 + f[j - 3] * 6.0 - f[j - 4])
            * inv12;
    }
    if len >= 3 {
        let inv2 = 0.5 / h;
        if i == 0 {
            return (f[1] * 4.0 - f[0] * 3.0 - f[2]) * inv2;
        }
        if i + 1 == len {
            return (f[i] * 3.0 - f[i - 1] * 4.0 + f[i - 2]) * inv2;
        }
        return (f[i + 1] - f[i - 1]) * inv2;
    }
    (f[1] - f[0]) * (1.0 / h)
}

/// Cubic Lagrange interpolation of uniformly spaced samples at parameter `s`
/// (origin at sample 0). `segments` comes from [`knot_segments`]; stencils
/// never cross a segment boundary.
pub fn interpolate_uniform(values: &[f64], step: f64, segments: &[(usize, usize)], s: f64) -> f64 {
    let n = values.len();
    if n == 1 {
        return values[0];
    }
    let u = (s / step).clamp(0.0, (n - 1) as f64);
    let i = (u.floor() as usize).min(n - 2);
    // segment containing [i, i+1]
    let (a, b) = match segments.len() {
        0 | 1 => (0, n - 1),
        _ => {
            let k = segments.partition_point(|&(_, b)| b <= i);
            segments.get(k).copied().unwrap_or((0, n - 1))
        }
    };
    let len = b - a + 1;
    if len < 4 {
        let t = u - i as f64;
        return values[i] * (1.0 - t) + values[i + 1] * t;
    }
    let start = i.saturating_sub(1).max(a).min(b + 1 - 4);
    let x = u - start as f64;
    let (f0, f1, f2, f3) = (
        values[start],
        values[start + 1],
        values[start + 2],
        values[start + 3],
    );
    let l0 = -(x - 1.0) * (x - 2.0) * (x - 3.0) / 6.0;
    let l1 = x * (x - 2.0) * (x - 3.0) / 2.0;
    let l2 = -x * (x - 1.0) * (x - 3.0) / 2.0;
    let l3 = x * (x - 1.0) * (x - 2.0) / 6.0;
    f0 * l0 + f1 * l1 + f2 * l2 + f3 * l3
}

/// Monotone (Fritsch-Carlson) cubic Hermite slopes for strictly increasing
/// abscissae `x`.
pub fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut d = vec![0.0; n];
    if n < 2 {
        return d;
    }
    let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / (x[i + 1] - x[i])).collect();
    if n == 2 {
        d[0] = delta[0];
        d[1] = delta[0];
        return d;
    }
    for i in 1..n - 1 {
        if delta[i - 1] * delta[i] <= 0.0 {
            d[i] = 0.0;
        } else {
            let h0 = x[i] - x[i - 1];
            let h1 = x[i + 1] - x[i];
            let w1 = 2.0 * h1 + h0;
            let w2 = h1 + 2.0 * h0;
            d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
        }
    }
    d[0] = end_slope(x[1] - x[0], x[2] - x[1], delta[0], delta[1]);
    d[n - 1] = end_slope(x[n - 1] - x[n - 2], x[n - 2] - x[n - 3], delta[n - 2], delta[n - 3]);
    d
}

fn end_slope(h0: f64, h1: f64, del0: f64, del1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * del0 - h0 * del1) / (h0 + h1);
    if d.signum() != del0.signum() {
        0.0
    } else if del0.signum() != del1.signum() && d.abs() > 3.0 * del0.abs() {
        3.0 * del0
    } else {
        d
    }
}

/// Evaluates a cubic Hermite segment on `[x0, x1]`.
pub fn hermite(x0: f64, x1: f64, y0: f64, y1: f64, d0: f64, d1: f64, x: f64) -> f64 {
    let h = x1 - x0;
    let t = (x - x0) / h;
    let t2 = t * t;
    let t3 = t2 * t;
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h10 = t3 - 2.0 * t2 + t;
    let h01 = -2.0 * t3 + 3.0 * t2;
    let h11 = t3 - t2;
    h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1
}

/// Derivative of [`hermite`] with respect to `x`.
pub fn hermite_derivative(x0: f64, x1: f64, y0: f64, y1: f64, d0: f64, d1: f64, x: f64) -> f64 {
    let h = x1 - x0;
    let t = (x - x0) / h;
    let t2 = t * t;
    let dh00 = 6.0 * t2 - 6.0 * t;
    let dh10 = 3.0 * t2 - 4.0 * t + 1.0;
    let dh01 = -6.0 * t2 + 6.0 * t;
    let dh11 = 3.0 * t2 - 2.0 * t;
    (dh00 * y0 + dh01 * y1) / h + dh10 * d0 + dh11 * d1
}

/// Bisection on a sign change of `f` over `[lo, hi]`; returns the final
/// bracket. Stops once `|f(mid)| <= ftol` or the bracket stops shrinking.
pub fn bisect(
    mut lo: f64,
    mut hi: f64,
    ftol: f64,
    max_iter: usize,
    mut f: impl FnMut(f64) -> f64,
) -> (f64, f64, f64) {
    let mut flo = f(lo);
    let mut mid = 0.5 * (lo + hi);
    for _ in 0..max_iter {
        mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm.abs() <= ftol {
            return (lo, hi, mid);
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    (lo, hi, mid)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let values = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(compensated_sum(values), 2.0);
    }

    #[test]
    fn gauss_legendre_is_exact_for_degree_nine() {
        let v = gauss_legendre5(-1.0, 2.0, |x| x.powi(9) + x.powi(4));
        let exact = (2f64.powi(10) - 1.0) / 10.0 + (2f64.powi(5) + 1.0) / 5.0;
        assert!((v - exact).abs() < 1e-10);
    }

    #[test]
    fn derivative_is_fourth_order() {
        let err = |n: usize| {
            let h = 1.0 / n as f64;
            let f: Vec<f64> = (0..=n).map(|i| (i as f64 * h).sin()).collect();
            let d = derivative(&f, h, &[]);
            d.iter()
                .enumerate()
                .map(|(i, v)| (v - (i as f64 * h).cos()).abs())
                .fold(0.0, f64::max)
        };
        let order = (err(32) / err(64)).log2();
        assert!(order > 3.5, "observed order {order}");
    }

    #[test]
    fn derivative_respects_knots() {
        // |x - 0.5| has a kink at the knot; both sides must be exact.
        let n = 20;
        let h = 1.0 / n as f64;
        let f: Vec<f64> = (0..=n).map(|i| (i as f64 * h - 0.5).abs()).collect();
        let d = derivative(&f, h, &[10]);
        for (i, v) in d.iter().enumerate() {
            let expect = if i < 10 { -1.0 } else { 1.0 };
            assert!((v - expect).abs() < 1e-9, "i={i} v={v}");
        }
    }

    #[test]
    fn cubic_interpolation_reproduces_cubics() {
        let h = 0.1;
        let f: Vec<f64> = (0..12).map(|i| (i as f64 * h).powi(3) - i as f64 * h).collect();
        for s in [0.0, 0.03, 0.55, 1.07, 1.1] {
            let v = interpolate_uniform(&f, h, &knot_segments(f.len(), &[]), s);
            assert!((v - (s.powi(3) - s)).abs() < 1e-12, "s={s}");
        }
    }

    #[test]
    fn pchip_stays_monotone() {
        let x = [0.0, 1.0, 2.0, 3.0, 4.0];
        let y = [0.0, 0.1, 0.2, 5.0, 5.1];
        let d = pchip_slopes(&x, &y);
        let mut prev = f64::NEG_INFINITY;
        for k in 0..400 {
            let t = k as f64 / 100.0;
            let i = (t.floor() as usize).min(3);
            let v = hermite(x[i], x[i + 1], y[i], y[i + 1], d[i], d[i + 1], t);
            assert!(v >= prev - 1e-12);
            prev = v;
        }
    }

    #[test]
    fn bisection_finds_root() {
        let (_, _, r) = bisect(0.0, 2.0, 1e-14, 200, |x| x * x - 2.0);
        assert!((r - 2f64.sqrt()).abs() < 1e-12);
    }
}

#[cfg(test)]
mod props {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn compensated_sum_is_exact_on_integers(values in prop::collection::vec(-1_000_000i64..1_000_000, 0..200)) {
            let exact: i64 = values.iter().sum();
            prop_assert_eq!(compensated_sum(values.iter().map(|&v| v as f64)), exact as f64);
        }

        #[test]
        fn hermite_reproduces_cubics(c in prop::array::uniform4(-3.0f64..3.0), x0 in -2.0f64..2.0, h in 0.1f64..3.0, t in 0.0f64..1.0) {
            let p = |x: f64| ((c[3] * x + c[2]) * x + c[1]) * x + c[0];
            let dp = |x: f64| (3.0 * c[3] * x + 2.0 * c[2]) * x + c[1];
            let x1 = x0 + h;
            let x = x0 + t * h;
            let got = hermite(x0, x1, p(x0), p(x1), dp(x0), dp(x1), x);
            prop_assert!((got - p(x)).abs() < 1e-10 * (1.0 + p(x).abs()));
        }
    }
}
