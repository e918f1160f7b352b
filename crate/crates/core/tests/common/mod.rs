//! Shared fixtures for the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;
use std::sync::OnceLock;

use nalgebra::Vector3;
use trajectoid_forge::closure::{concatenate_rotated, find_closing_radius, ClosureCertificate, ClosureOptions};
use trajectoid_forge::curves::{arclength_reparam, ClosedForm, FunctionSpec, PlanarCurve};
use trajectoid_forge::lift::{lift, SphericalCurve};

pub const SINE_ARCH_AMPLITUDES: [f64; 3] = [0.1, 0.2, 0.3];
pub const N_MAX: usize = 64;

/// A sine arch over one unit period, its closing certificate and the closed
/// loop of rotated copies.
pub struct Certified {
    pub spec: FunctionSpec,
    pub curve: PlanarCurve,
    pub cert: ClosureCertificate,
    pub piece: SphericalCurve,
    pub loop_: SphericalCurve,
}

pub fn certify_sine_arch(amplitude: f64, intervals: usize) -> Certified {
    let spec = FunctionSpec::from_closed_form(ClosedForm::SineArch { amplitude }, 0.0, 1.0, 257).unwrap();
    let curve = arclength_reparam(&spec, intervals).unwrap();
    let l = curve.length();
    let cert = find_closing_radius(&curve, l, 20.0 * l, N_MAX, &ClosureOptions::default()).unwrap();
    let piece = lift(&curve, cert.r).unwrap();
    let loop_ = concatenate_rotated(&piece, &cert.monodromy, cert.n).unwrap();
    Certified { spec, curve, cert, piece, loop_ }
}

/// The amplitude 0.2 arch at 2048 intervals, computed once per test binary.
pub fn sine_arch() -> &'static Certified {
    static CELL: OnceLock<Certified> = OnceLock::new();
    CELL.get_or_init(|| certify_sine_arch(0.2, 2048))
}

/// Closed circle of colatitude `theta` about +z on the sphere of radius `r`.
pub fn latitude_loop(r: f64, theta: f64, samples: usize) -> SphericalCurve {
    let (s, c) = theta.sin_cos();
    let points = (0..samples)
        .map(|i| {
            let t = 2.0 * PI * i as f64 / samples as f64;
            Vector3::new(r * s * t.cos(), r * s * t.sin(), r * c)
        })
        .collect();
    let tangents = (0..samples)
        .map(|i| {
            let t = 2.0 * PI * i as f64 / samples as f64;
            Vector3::new(-t.sin(), t.cos(), 0.0)
        })
        .collect();
    let step = 2.0 * PI * r * s / samples as f64;
    SphericalCurve::from_samples(r, step, points, tangents, vec![], true).unwrap()
}
