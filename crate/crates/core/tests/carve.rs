mod common;

use std::f64::consts::PI;

use nalgebra::Vector3;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use trajectoid_forge::carve::*;
use trajectoid_forge::Error;

fn random_direction(rng: &mut ChaCha8Rng) -> Vector3<f64> {
    let z: f64 = rng.random_range(-1.0..1.0);
    let t: f64 = rng.random_range(0.0..2.0 * PI);
    let s = (1.0 - z * z).sqrt();
    Vector3::new(s * t.cos(), s * t.sin(), z)
}

/// Groove volume by Monte Carlo over directions: each direction contributes
/// the exact radial integral of the removed shell.
fn monte_carlo_groove(shape: &dyn RadialShape, big_r: f64, samples: usize, seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut sum, mut sq) = (0.0, 0.0);
    for _ in 0..samples {
        let u = random_direction(&mut rng);
        let v = 4.0 * PI * big_r.powi(3) * (1.0 - shape.value(&u).powi(3)) / 3.0;
        sum += v;
        sq += v * v;
    }
    let mean = sum / samples as f64;
    let var = (sq / samples as f64 - mean * mean).max(0.0);
    (mean, (var / samples as f64).sqrt())
}

/// Area of the circular segment cut from a disc of radius `big_r` by a
/// chord at depth `h`.
fn segment_area(big_r: f64, h: f64) -> f64 {
    big_r * big_r * (1.0 - h / big_r).acos() - (big_r - h) * (h * (2.0 * big_r - h)).sqrt()
}

#[test]
fn sine_arch_groove_volume_matches_prism_and_monte_carlo() {
    let c = common::sine_arch();
    let r = c.cert.r;
    let length = c.loop_.length();
    for div in [100.0, 400.0] {
        let h = r / div;
        let b = (h * (2.0 * r + h)).sqrt() / DEFAULT_MOUTH_RATIO;
        let spec = GrooveSpec::new(r, b, h, None, 0.0).unwrap();
        let body = carve(&c.loop_, &spec, &MeshOptions::default()).unwrap();
        body.mesh().check_watertight().unwrap();
        let big_r = spec.outer_radius();
        let groove = body.reference_mass().volume - body.mass().volume;
        let prism = segment_area(big_r, h) * length;
        assert!((groove / prism - 1.0).abs() < 0.05, "h = r/{div}: {groove} vs {prism}");
        let shape = shape_function(Some(&c.loop_), &spec).unwrap();
        let (mc, sigma) = monte_carlo_groove(&shape, big_r, 200_000, 7);
        assert!((groove - mc).abs() < 4.0 * sigma + 0.01 * mc, "{groove} vs {mc} +- {sigma}");
    }
}

#[test]
fn floor_is_flat_at_random_loop_points() {
    let c = common::sine_arch();
    let r = c.cert.r;
    let spec = GrooveSpec::new(r, 0.05, 0.005, None, 0.0).unwrap();
    let shape = shape_function(Some(&c.loop_), &spec).unwrap();
    let body = carve(&c.loop_, &spec, &MeshOptions::default()).unwrap();
    assert!((body.delta() - spec.b).abs() < 1e-12 * spec.b);
    let big_r = spec.outer_radius();
    let locator = MeshLocator::new(body.mesh());
    let tol = body.band_edge().powi(2) / (2.0 * big_r);
    let pts = c.loop_.points();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let i = rng.random_range(0..pts.len());
        let (a, b) = (pts[i].normalize(), pts[(i + 1) % pts.len()].normalize());
        // arc midpoint: the nearest loop point of its cross-section
        let m = (a + b).normalize();
        let across = a.cross(&b).normalize();
        let along = across.cross(&m);
        // shape function along the cross-section, both sides
        for side in [1.0, -1.0] {
            let dev = |phi: f64| {
                let u = m * phi.cos() + across * (side * phi.sin());
                big_r * shape.value(&u) * phi.cos() - r
            };
            let on = |phi: f64| dev(phi).abs() <= 1e-12 * big_r;
            let (mut lo, mut hi) = (0.0, 2.0 * (spec.b / r).atan());
            assert!(on(lo) && !on(hi));
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if on(mid) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let half_width = r * lo.tan();
            assert!((half_width - spec.b).abs() < 0.02 * spec.b, "{half_width}");
        }
        // mesh floor vertices near the cross-section lie on the plane
        let flat = (spec.b / r).atan();
        let mut seen = 0;
        for v in locator.vertices_within(&m, flat) {
            let u = body.directions()[v];
            if shape.loop_distance(&u).is_none_or(|d| d > flat) || (u - m).dot(&along).abs() > 0.25 * body.band_edge() / big_r {
                continue;
            }
            let p = body.mesh().vertices[v];
            assert!((p.dot(&m) - r).abs() <= tol, "{} > {tol}", (p.dot(&m) - r).abs());
            seen += 1;
        }
        let _ = seen;
    }
}

#[test]
fn carved_body_is_star_shaped() {
    let c = common::sine_arch();
    let spec = GrooveSpec::new(c.cert.r, 0.05, 0.005, None, 0.0).unwrap();
    let body = carve(&c.loop_, &spec, &MeshOptions { level: 3, across: 8, ..Default::default() }).unwrap();
    let locator = MeshLocator::new(body.mesh());
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..2_000 {
        let u = random_direction(&mut rng);
        assert_eq!(locator.hits(&u).len(), 1);
    }
    // every vertex sits at R S(u)
    let shape = shape_function(Some(&c.loop_), &spec).unwrap();
    for (p, u) in body.mesh().vertices.iter().zip(body.directions()) {
        assert!((p.norm() - spec.outer_radius() * shape.value(u)).abs() < 1e-12 * spec.outer_radius());
    }
}

#[test]
fn removed_volume_grows_with_depth() {
    // the floor stays on the loop and the outer radius is r + h, so compare
    // the removed volume against the uncarved ball on the same mesh
    let lp = common::latitude_loop(1.0, 0.9, 2000);
    let mut last = 0.0;
    for h in [0.002, 0.004, 0.008, 0.016] {
        let spec = GrooveSpec::new(1.0, 0.05, h, Some(0.2), 0.0).unwrap();
        let body = carve(&lp, &spec, &MeshOptions::default()).unwrap();
        let removed = body.reference_mass().volume - body.mass().volume;
        assert!(removed > last, "{h}: {removed} <= {last}");
        last = removed;
    }
}

#[test]
fn one_sided_groove_pushes_barycenter_away() {
    let r = 1.0;
    let h = r / 10.0;
    let lp = common::latitude_loop(r, 0.5, 2000);
    let b = (h * (2.0 * r + h)).sqrt() / DEFAULT_MOUTH_RATIO;
    let spec = GrooveSpec::new(r, b, h, None, 0.0).unwrap();
    let body = carve(&lp, &spec, &MeshOptions::default()).unwrap();
    let groove_dir = Vector3::z();
    assert!(body.drift().dot(&groove_dir) < 0.0);
    // the drift of a body of revolution lies on its axis
    assert!(body.drift().xy().norm() < 1e-3 * body.drift().norm());
}

#[test]
fn wedge_check_on_ungrooved_ball() {
    let body = mesh_body(&FnShape(|_: &Vector3<f64>| 1.0), 2.0, &MeshOptions::default()).unwrap();
    let seg = ContactSegment { center: [0.0, 0.0, -2.0], direction: [1.0, 0.0, 0.0], half_width: 0.1 };
    let w = barycenter_wedge_check(&body, &seg, 0.1).unwrap();
    assert!(w.drift < 1e-12);
    assert!(w.inside_wedge);
    assert!((w.height - 2.0).abs() < 1e-12);
}

#[test]
fn wedge_check_rejects_open_mesh() {
    let body = mesh_body(&FnShape(|_: &Vector3<f64>| 1.0), 1.0, &MeshOptions::default()).unwrap();
    let mut mesh = body.mesh().clone();
    mesh.faces.pop();
    assert!(matches!(mesh.check_watertight(), Err(Error::MeshInvalid(_))));
}

#[test]
fn coarse_mesh_is_refused() {
    let lp = common::latitude_loop(1.0, 0.9, 2000);
    let spec = GrooveSpec::new(1.0, 0.01, GrooveSpec::default_depth(1.0, 0.01), None, 0.0).unwrap();
    let opts = MeshOptions { level: 2, max_refine: 0, across: 16 };
    assert!(matches!(carve(&lp, &spec, &opts), Err(Error::ResolutionExceeded(_))));
}

#[test]
fn stl_export_round_trips_carved_body() {
    let lp = common::latitude_loop(1.0, 0.9, 1000);
    let spec = GrooveSpec::new(1.0, 0.05, GrooveSpec::default_depth(1.0, 0.05), None, 0.0).unwrap();
    let body = carve(&lp, &spec, &MeshOptions { level: 3, ..Default::default() }).unwrap();
    let mut bytes = Vec::new();
    write_stl(&mut bytes, body.mesh()).unwrap();
    assert_eq!(bytes.len(), 84 + 50 * body.mesh().faces.len());
    let tris = read_stl(&mut bytes.as_slice()).unwrap();
    for (f, t) in tris.iter().enumerate() {
        let v = body.mesh().triangle(f);
        for (got, want) in t.vertices.iter().zip(&v) {
            assert_eq!(*got, [want.x as f32, want.y as f32, want.z as f32]);
        }
    }
    let side: BodySidecar = serde_json::from_str(&serde_json::to_string(&BodySidecar::of(&body)).unwrap()).unwrap();
    assert_eq!(side, BodySidecar::of(&body));
}
