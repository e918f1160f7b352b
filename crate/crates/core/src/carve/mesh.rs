//! Star-shaped triangle meshes: icosphere refinement around a carved band,
//! radial displacement and mass properties.

use std::collections::HashMap;

use kiddo::{ImmutableKdTree, SquaredEuclidean};
use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{GrooveSpec, RadialShape};
use crate::error::{Error, Result};
use crate::numeric::CompensatedSum;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshOptions {
    /// Uniform subdivisions of the icosahedron.
    pub level: usize,
    /// Extra refinement levels allowed inside the band.
    pub max_refine: usize,
    /// Target vertex count across the band.
    pub across: usize,
}

impl Default for MeshOptions {
    fn default() -> Self {
        MeshOptions {
            level: 4,
            max_refine: 8,
            across: 16,
        }
    }
}

/// Fewest vertices across the band accepted by [`mesh_body`].
pub const MIN_ACROSS: usize = 4;

/// Indexed triangle mesh with outward counterclockwise faces.
#[derive(Debug, Clone, PartialEq)]
pub struct TriMesh {
    pub vertices: Vec<Vector3<f64>>,
    pub faces: Vec<[u32; 3]>,
}

impl TriMesh {
    /// Every edge shared by exactly two faces, in opposite directions, and
    /// Euler characteristic 2.
    pub fn check_watertight(&self) -> Result<()> {
        let mut edges: HashMap<(u32, u32), i32> = HashMap::with_capacity(3 * self.faces.len());
        for f in &self.faces {
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                if a == b {
                    return Err(Error::MeshInvalid(format!("degenerate face {f:?}")));
                }
                *edges.entry((a, b)).or_insert(0) += 1;
            }
        }
        for (&(a, b), &count) in &edges {
            if count != 1 || edges.get(&(b, a)) != Some(&1) {
                return Err(Error::MeshInvalid(format!("edge ({a}, {b}) is not shared by exactly two faces")));
            }
        }
        let chi = self.vertices.len() as i64 - (edges.len() / 2) as i64 + self.faces.len() as i64;
        if chi != 2 {
            return Err(Error::MeshInvalid(format!("Euler characteristic {chi}, expected 2")));
        }
        Ok(())
    }

    pub fn triangle(&self, f: usize) -> [Vector3<f64>; 3] {
        let [a, b, c] = self.faces[f];
        [self.vertices[a as usize], self.vertices[b as usize], self.vertices[c as usize]]
    }

    pub fn max_edge(&self) -> f64 {
        self.faces
            .iter()
            .map(|f| {
                (0..3)
                    .map(|k| (self.vertices[f[k] as usize] - self.vertices[f[(k + 1) % 3] as usize]).norm())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }
}

/// Volume, barycenter and inertia of a homogeneous solid of unit density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MassProperties {
    pub volume: f64,
    pub barycenter: [f64; 3],
    /// Inertia tensor about the barycenter, row-major.
    pub inertia: [f64; 9],
}

impl MassProperties {
    pub fn barycenter_vector(&self) -> Vector3<f64> {
        Vector3::from(self.barycenter)
    }

    pub fn inertia_matrix(&self) -> Matrix3<f64> {
        Matrix3::from_row_slice(&self.inertia)
    }

    /// Inertia about the point `p`, by the parallel-axis theorem.
    pub fn inertia_about(&self, p: &Vector3<f64>) -> Matrix3<f64> {
        let d = p - self.barycenter_vector();
        self.inertia_matrix() + (Matrix3::identity() * d.norm_squared() - d * d.transpose()) * self.volume
    }
}

/// Mass properties by signed tetrahedra from the origin, with compensated
/// sums in face order.
pub fn mass_properties(mesh: &TriMesh) -> MassProperties {
    let mut vol = CompensatedSum::default();
    let mut first = [CompensatedSum::default(), CompensatedSum::default(), CompensatedSum::default()];
    let mut second: [CompensatedSum; 6] = Default::default();
    const PAIRS: [(usize, usize); 6] = [(0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2)];
    for f in 0..mesh.faces.len() {
        let [a, b, c] = mesh.triangle(f);
        let det = a.dot(&b.cross(&c));
        vol.add(det / 6.0);
        let s = a + b + c;
        for k in 0..3 {
            first[k].add(det / 24.0 * s[k]);
        }
        for (slot, &(i, j)) in second.iter_mut().zip(PAIRS.iter()) {
            let v = a[i] * a[j] + b[i] * b[j] + c[i] * c[j] + s[i] * s[j];
            slot.add(det / 120.0 * v);
        }
    }
    let volume = vol.value();
    let m1 = Vector3::new(first[0].value(), first[1].value(), first[2].value());
    let cm = m1 / volume;
    let mut cov = Matrix3::zeros();
    for (slot, &(i, j)) in second.iter().zip(PAIRS.iter()) {
        cov[(i, j)] = slot.value();
        cov[(j, i)] = slot.value();
    }
    let inertia_origin = Matrix3::identity() * cov.trace() - cov;
    let shift = (Matrix3::identity() * cm.norm_squared() - cm * cm.transpose()) * volume;
    let inertia = inertia_origin - shift;
    let mut flat = [0.0; 9];
    for i in 0..3 {
        for j in 0..3 {
            flat[3 * i + j] = inertia[(i, j)];
        }
    }
    MassProperties {
        volume,
        barycenter: [cm.x, cm.y, cm.z],
        inertia: flat,
    }
}

/// Unit icosahedron subdivided `level` times, vertices on the unit sphere.
pub fn icosphere(level: usize) -> TriMesh {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut vertices: Vec<Vector3<f64>> = [
        (-1.0, t, 0.0),
        (1.0, t, 0.0),
        (-1.0, -t, 0.0),
        (1.0, -t, 0.0),
        (0.0, -1.0, t),
        (0.0, 1.0, t),
        (0.0, -1.0, -t),
        (0.0, 1.0, -t),
        (t, 0.0, -1.0),
        (t, 0.0, 1.0),
        (-t, 0.0, -1.0),
        (-t, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Vector3::new(x, y, z).normalize())
    .collect();
    let mut faces: Vec<[u32; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..level {
        let mut mids = Midpoints::default();
        let mut next = Vec::with_capacity(4 * faces.len());
        for f in &faces {
            next.extend(mids.red(f, &mut vertices));
        }
        faces = next;
    }
    TriMesh { vertices, faces }
}

#[derive(Default)]
struct Midpoints {
    map: HashMap<(u32, u32), u32>,
}

impl Midpoints {
    fn edge(a: u32, b: u32) -> (u32, u32) {
        (a.min(b), a.max(b))
    }

    fn get(&self, a: u32, b: u32) -> Option<u32> {
        self.map.get(&Self::edge(a, b)).copied()
    }

    fn make(&mut self, a: u32, b: u32, vertices: &mut Vec<Vector3<f64>>) -> u32 {
        *self.map.entry(Self::edge(a, b)).or_insert_with(|| {
            vertices.push((vertices[a as usize] + vertices[b as usize]).normalize());
            (vertices.len() - 1) as u32
        })
    }

    fn red(&mut self, f: &[u32; 3], vertices: &mut Vec<Vector3<f64>>) -> [[u32; 3]; 4] {
        let [a, b, c] = *f;
        let ab = self.make(a, b, vertices);
        let bc = self.make(b, c, vertices);
        let ca = self.make(c, a, vertices);
        [[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]
    }
}

fn edge_angle(vertices: &[Vector3<f64>], f: &[u32; 3]) -> f64 {
    (0..3)
        .map(|k| {
            let (a, b) = (&vertices[f[k] as usize], &vertices[f[(k + 1) % 3] as usize]);
            a.cross(b).norm().atan2(a.dot(b))
        })
        .fold(0.0, f64::max)
}

/// Intersection parameter of the ray `t dir`, `t > 0`, with triangle
/// `[a, b, c]`, by the Moller-Trumbore test.
pub fn ray_triangle(dir: &Vector3<f64>, tri: &[Vector3<f64>; 3]) -> Option<f64> {
    let e1 = tri[1] - tri[0];
    let e2 = tri[2] - tri[0];
    let p = dir.cross(&e2);
    let det = e1.dot(&p);
    if det.abs() < 1e-300 {
        return None;
    }
    let s = -tri[0];
    let u = s.dot(&p) / det;
    // closed barycentric range so rays through shared edges still hit
    let eps = 1e-12;
    if !(-eps..=1.0 + eps).contains(&u) {
        return None;
    }
    let q = s.cross(&e1);
    let v = dir.dot(&q) / det;
    if v < -eps || u + v > 1.0 + eps {
        return None;
    }
    let t = e2.dot(&q) / det;
    (t > 0.0).then_some(t)
}

/// Nearest-vertex and ray queries on a star-shaped mesh about the origin.
pub struct MeshLocator<'a> {
    mesh: &'a TriMesh,
    tree: ImmutableKdTree<f64, 3>,
    incident: Vec<Vec<u32>>,
}

/// Vertices whose incident faces are searched for a ray hit.
const RAY_CANDIDATES: usize = 12;

impl<'a> MeshLocator<'a> {
    pub fn new(mesh: &'a TriMesh) -> Self {
        let keys: Vec<[f64; 3]> = mesh.vertices.iter().map(locator_key).collect();
        let tree = ImmutableKdTree::new_from_slice(&keys);
        let mut incident = vec![Vec::new(); mesh.vertices.len()];
        for (f, face) in mesh.faces.iter().enumerate() {
            for &v in face {
                incident[v as usize].push(f as u32);
            }
        }
        MeshLocator { mesh, tree, incident }
    }

    /// Vertices whose direction lies within angle `angle` of `dir`.
    pub fn vertices_within(&self, dir: &Vector3<f64>, angle: f64) -> Vec<usize> {
        let chord = 2.0 * (0.5 * angle.min(std::f64::consts::PI)).sin();
        let mut out: Vec<usize> = self
            .tree
            .within_unsorted::<SquaredEuclidean>(&locator_key(dir), chord * chord)
            .into_iter()
            .map(|n| n.item as usize)
            .collect();
        out.sort_unstable();
        out
    }

    /// Distance from the origin to the surface along `dir`.
    pub fn radius(&self, dir: &Vector3<f64>) -> Option<f64> {
        let u = dir.normalize();
        let near = self.tree.nearest_n::<SquaredEuclidean>(&locator_key(&u), RAY_CANDIDATES);
        let hit = near
            .iter()
            .flat_map(|n| self.incident[n.item as usize].iter())
            .filter_map(|&f| ray_triangle(&u, &self.mesh.triangle(f as usize)))
            .reduce(f64::min);
        hit.or_else(|| self.hits(&u).into_iter().reduce(f64::min))
    }

    /// Distinct intersections of the ray along `dir` with the mesh, by brute
    /// force, ascending. Hits through shared edges or vertices count once.
    pub fn hits(&self, dir: &Vector3<f64>) -> Vec<f64> {
        let u = dir.normalize();
        let mut t: Vec<f64> = (0..self.mesh.faces.len())
            .filter_map(|f| ray_triangle(&u, &self.mesh.triangle(f)))
            .collect();
        t.sort_by(f64::total_cmp);
        t.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * b.abs());
        t
    }
}

fn locator_key(v: &Vector3<f64>) -> [f64; 3] {
    super::tree_key(&v.normalize())
}

/// A star-shaped body: mesh, mass accounting and groove metadata.
#[derive(Debug, Clone)]
pub struct GroovedBody {
    mesh: TriMesh,
    directions: Vec<Vector3<f64>>,
    in_band: Vec<bool>,
    mass: MassProperties,
    reference: MassProperties,
    outer_radius: f64,
    band_edge: f64,
    spec: Option<GrooveSpec>,
    delta: f64,
}

impl GroovedBody {
    pub fn mesh(&self) -> &TriMesh {
        &self.mesh
    }

    /// Unit direction of every vertex.
    pub fn directions(&self) -> &[Vector3<f64>] {
        &self.directions
    }

    /// Whether each vertex lies in the refined band.
    pub fn in_band(&self) -> &[bool] {
        &self.in_band
    }

    pub fn mass(&self) -> &MassProperties {
        &self.mass
    }

    /// Mass properties of the uncarved sphere on the same topology.
    pub fn reference_mass(&self) -> &MassProperties {
        &self.reference
    }

    pub fn outer_radius(&self) -> f64 {
        self.outer_radius
    }

    /// Longest edge among faces touching the band; the whole mesh when there
    /// is no band.
    pub fn band_edge(&self) -> f64 {
        self.band_edge
    }

    pub fn spec(&self) -> Option<&GrooveSpec> {
        self.spec.as_ref()
    }

    /// Half-width of the flat contact segment; zero without a groove.
    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// `B(h) - B(0)` against the uncarved reference.
    pub fn drift(&self) -> Vector3<f64> {
        self.mass.barycenter_vector() - self.reference.barycenter_vector()
    }

    pub(super) fn set_groove(&mut self, spec: GrooveSpec, delta: f64) {
        self.spec = Some(spec);
        self.delta = delta;
    }
}

/// Meshes the star-shaped body `{ t u : 0 <= t <= radius S(u) }`.
///
/// Starts from an icosphere and red-refines triangles near the shape's band
/// until the band is crossed by `opts.across` vertices, then closes hanging
/// nodes by bisection so the mesh stays watertight.
pub fn mesh_body(shape: &dyn RadialShape, radius: f64, opts: &MeshOptions) -> Result<GroovedBody> {
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::InvalidRadius(radius));
    }
    let base = icosphere(opts.level);
    let mut vertices = base.vertices;
    let mut leaves = base.faces;
    let mut mids = Midpoints::default();
    let band = shape.band();

    if let Some(band) = band {
        let target = 2.0 * band / opts.across as f64;
        // a leaf that declined refinement keeps declining until it is split
        let mut settled: std::collections::HashSet<[u32; 3]> = Default::default();
        for _ in 0..=opts.max_refine {
            let wants: Vec<bool> = leaves
                .par_iter()
                .map(|f| {
                    if settled.contains(f) {
                        return false;
                    }
                    let size = edge_angle(&vertices, f);
                    size > target && {
                        let c = (vertices[f[0] as usize] + vertices[f[1] as usize] + vertices[f[2] as usize]).normalize();
                        shape.feature_distance(&c, band + size).is_some()
                    }
                })
                .collect();
            let mut next = Vec::with_capacity(leaves.len());
            for (f, &w) in leaves.iter().zip(&wants) {
                if w {
                    next.extend(mids.red(f, &mut vertices));
                } else {
                    settled.insert(*f);
                    next.push(*f);
                }
            }
            leaves = next;
            close_hanging(&mut leaves, &mut mids, &mut vertices);
            if !wants.contains(&true) {
                break;
            }
        }
    }
    let faces = conform(&leaves, &mids);

    let directions = vertices.clone();
    let radial: Vec<f64> = directions.par_iter().map(|u| shape.value(u)).collect();
    if let Some(i) = radial.iter().position(|s| !(*s > 0.0 && *s <= 1.0 + 1e-12)) {
        return Err(Error::InvalidInput(format!(
            "shape value {} at vertex {i} outside (0, 1]",
            radial[i]
        )));
    }
    let in_band: Vec<bool> = match band {
        Some(band) => directions
            .par_iter()
            .map(|u| shape.feature_distance(u, band).is_some())
            .collect(),
        None => vec![false; directions.len()],
    };
    let displaced: Vec<Vector3<f64>> = directions
        .iter()
        .zip(&radial)
        .map(|(u, s)| u * (radius * s))
        .collect();
    let sphere: Vec<Vector3<f64>> = directions.iter().map(|u| u * radius).collect();

    let mesh = TriMesh { vertices: displaced, faces };
    mesh.check_watertight()?;
    let reference = mass_properties(&TriMesh {
        vertices: sphere,
        faces: mesh.faces.clone(),
    });
    let mass = mass_properties(&mesh);

    let band_edge = match band {
        Some(band) => {
            let mut worst = 0.0f64;
            for f in &mesh.faces {
                if f.iter().any(|&v| in_band[v as usize]) {
                    let size = edge_angle(&directions, f);
                    worst = worst.max(size);
                }
            }
            let across = (2.0 * band / worst).floor() as usize;
            if across < MIN_ACROSS {
                return Err(Error::ResolutionExceeded(format!(
                    "only {across} vertices across the groove band; raise the mesh level or refinement"
                )));
            }
            worst * radius
        }
        None => mesh.max_edge(),
    };

    Ok(GroovedBody {
        mesh,
        directions,
        in_band,
        mass,
        reference,
        outer_radius: radius,
        band_edge,
        spec: None,
        delta: 0.0,
    })
}

/// Red-refines leaves until every leaf has at most one split edge and no
/// split edge is split again.
fn close_hanging(leaves: &mut Vec<[u32; 3]>, mids: &mut Midpoints, vertices: &mut Vec<Vector3<f64>>) {
    loop {
        let mut changed = false;
        let mut next = Vec::with_capacity(leaves.len());
        for f in leaves.iter() {
            let mut split = 0;
            let mut deep = false;
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                if let Some(m) = mids.get(a, b) {
                    split += 1;
                    deep |= mids.get(a, m).is_some() || mids.get(m, b).is_some();
                }
            }
            if split >= 2 || deep {
                next.extend(mids.red(f, vertices));
                changed = true;
            } else {
                next.push(*f);
            }
        }
        *leaves = next;
        if !changed {
            break;
        }
    }
}

/// Bisects leaves with one split edge.
fn conform(leaves: &[[u32; 3]], mids: &Midpoints) -> Vec<[u32; 3]> {
    let mut out = Vec::with_capacity(leaves.len() + leaves.len() / 4);
    for f in leaves {
        let split = (0..3).find_map(|k| {
            let (a, b) = (f[k], f[(k + 1) % 3]);
            mids.get(a, b).map(|m| (k, m))
        });
        match split {
            None => out.push(*f),
            Some((k, m)) => {
                let (a, b, c) = (f[k], f[(k + 1) % 3], f[(k + 2) % 3]);
                out.push([a, m, c]);
                out.push([m, b, c]);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::super::FnShape;
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn icosphere_counts() {
        for level in 0..4 {
            let m = icosphere(level);
            assert_eq!(m.faces.len(), 20 * 4usize.pow(level as u32));
            m.check_watertight().unwrap();
        }
    }

    #[test]
    fn icosahedron_faces_point_outward() {
        let m = icosphere(0);
        for f in 0..m.faces.len() {
            let [a, b, c] = m.triangle(f);
            assert!((b - a).cross(&(c - a)).dot(&(a + b + c)) > 0.0);
        }
    }

    #[test]
    fn unit_ball_volume() {
        let body = mesh_body(&FnShape(|_: &Vector3<f64>| 1.0), 2.0, &MeshOptions { level: 5, ..Default::default() }).unwrap();
        let exact = 4.0 / 3.0 * PI * 8.0;
        assert!((body.mass().volume - exact).abs() < 0.005 * exact);
        assert!(body.mass().barycenter_vector().norm() < 1e-12);
        // inertia of a ball: 2/5 m r^2
        let i = body.mass().inertia_matrix();
        let expect = 0.4 * body.mass().volume * 4.0;
        for k in 0..3 {
            assert!((i[(k, k)] - expect).abs() < 0.01 * expect);
        }
    }

    #[test]
    fn half_radius_scales_volume() {
        let body = mesh_body(&FnShape(|_: &Vector3<f64>| 0.5), 1.0, &MeshOptions { level: 5, ..Default::default() }).unwrap();
        let exact = 4.0 / 3.0 * PI / 8.0;
        assert!((body.mass().volume - exact).abs() < 0.005 * exact);
    }

    #[test]
    fn hemispheric_step_shifts_barycenter() {
        // S = 1 for z > 0, 0.9 for z < 0, smoothed over a thin band
        let w = 0.02;
        let shape = FnShape(move |u: &Vector3<f64>| {
            let t = (u.z / w).clamp(-1.0, 1.0);
            0.95 + 0.05 * (1.5 * t - 0.5 * t.powi(3))
        });
        let body = mesh_body(&shape, 1.0, &MeshOptions { level: 6, ..Default::default() }).unwrap();
        // two half-balls of radii 1 and 0.9: centroids at +-3R/8
        let (r1, r2) = (1.0f64, 0.9f64);
        let v1 = 2.0 * PI / 3.0 * r1.powi(3);
        let v2 = 2.0 * PI / 3.0 * r2.powi(3);
        let z = (v1 * 3.0 * r1 / 8.0 - v2 * 3.0 * r2 / 8.0) / (v1 + v2);
        let got = body.mass().barycenter[2];
        assert!((got - z).abs() < 0.02 * z, "{got} {z}");
    }

    #[test]
    fn mass_of_unit_cube() {
        // cube [0,1]^3 off the origin exercises the origin-apex decomposition
        let v: Vec<Vector3<f64>> = (0..8)
            .map(|i| Vector3::new((i & 1) as f64, ((i >> 1) & 1) as f64, ((i >> 2) & 1) as f64) + Vector3::new(2.0, -1.0, 0.5))
            .collect();
        let faces = vec![
            [0, 2, 1], [1, 2, 3], [4, 5, 6], [5, 7, 6],
            [0, 1, 4], [1, 5, 4], [2, 6, 3], [3, 6, 7],
            [0, 4, 2], [2, 4, 6], [1, 3, 5], [3, 7, 5],
        ];
        let m = TriMesh { vertices: v, faces };
        m.check_watertight().unwrap();
        let p = mass_properties(&m);
        assert!((p.volume - 1.0).abs() < 1e-14);
        assert!((p.barycenter_vector() - Vector3::new(2.5, -0.5, 1.0)).norm() < 1e-14);
        let i = p.inertia_matrix();
        for k in 0..3 {
            assert!((i[(k, k)] - 1.0 / 6.0).abs() < 1e-13);
        }
        assert!(i[(0, 1)].abs() < 1e-13);
    }

    #[test]
    fn locator_radius_matches_shape() {
        let shape = FnShape(|u: &Vector3<f64>| 0.8 + 0.2 * u.z * u.z);
        let body = mesh_body(&shape, 1.5, &MeshOptions { level: 5, ..Default::default() }).unwrap();
        let loc = MeshLocator::new(body.mesh());
        for (i, u) in body.directions().iter().enumerate().step_by(97) {
            let got = loc.radius(u).unwrap();
            assert!((got - body.mesh().vertices[i].norm()).abs() < 1e-12);
            assert_eq!(loc.hits(u).len(), 1);
        }
        let near = loc.vertices_within(&Vector3::z(), 0.1);
        assert!(!near.is_empty());
        assert!(near.iter().all(|&i| body.directions()[i].z > 0.1f64.cos() - 1e-12));
    }

    #[test]
    fn open_mesh_is_invalid() {
        let mut m = icosphere(1);
        m.faces.pop();
        assert!(matches!(m.check_watertight(), Err(Error::MeshInvalid(_))));
    }
}
