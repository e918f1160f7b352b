//! Binary STL in little-endian single precision.

use std::io::{Read, Write};

use nalgebra::Vector3;

use super::TriMesh;
use crate::error::{Error, Result};

/// 80-byte header, zero padded.
pub const STL_HEADER: &[u8] = b"trajectoid-forge v1";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StlTriangle {
    pub normal: [f32; 3],
    pub vertices: [[f32; 3]; 3],
}

fn f32x3(v: &Vector3<f64>) -> [f32; 3] {
    [v.x as f32, v.y as f32, v.z as f32]
}

/// Writes `mesh` as binary STL. Facet normals are unit face normals in
/// double precision, zero for degenerate faces.
pub fn write_stl<W: Write>(w: &mut W, mesh: &TriMesh) -> std::io::Result<()> {
    let mut header = [0u8; 80];
    header[..STL_HEADER.len()].copy_from_slice(STL_HEADER);
    w.write_all(&header)?;
    w.write_all(&(mesh.faces.len() as u32).to_le_bytes())?;
    let mut buf = Vec::with_capacity(50);
    for f in 0..mesh.faces.len() {
        let [a, b, c] = mesh.triangle(f);
        let n = (b - a).cross(&(c - a));
        let n = if n.norm() > 0.0 { n.normalize() } else { n };
        buf.clear();
        for v in [f32x3(&n), f32x3(&a), f32x3(&b), f32x3(&c)] {
            for x in v {
                buf.extend_from_slice(&x.to_le_bytes());
            }
        }
        buf.extend_from_slice(&0u16.to_le_bytes());
        w.write_all(&buf)?;
    }
    Ok(())
}

/// Reads binary STL triangles. The header is not checked.
pub fn read_stl<R: Read>(r: &mut R) -> Result<Vec<StlTriangle>> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)
        .map_err(|e| Error::parse("stl", e.to_string()))?;
    if bytes.len() < 84 {
        return Err(Error::parse("stl", "shorter than the 84-byte preamble"));
    }
    let count = u32::from_le_bytes(bytes[80..84].try_into().unwrap()) as usize;
    if bytes.len() != 84 + 50 * count {
        return Err(Error::parse(
            "stl",
            format!("{} bytes for {count} triangles", bytes.len()),
        ));
    }
    let word = |o: usize| f32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let triple = |o: usize| [word(o), word(o + 4), word(o + 8)];
    Ok((0..count)
        .map(|i| {
            let o = 84 + 50 * i;
            StlTriangle {
                normal: triple(o),
                vertices: [triple(o + 12), triple(o + 24), triple(o + 36)],
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::super::icosphere;
    use super::*;

    #[test]
    fn sizes_match_face_count() {
        for (level, size) in [(0, 1084), (3, 64084)] {
            let mut out = Vec::new();
            write_stl(&mut out, &icosphere(level)).unwrap();
            assert_eq!(out.len(), size);
            assert_eq!(&out[..STL_HEADER.len()], STL_HEADER);
            assert!(out[STL_HEADER.len()..80].iter().all(|&b| b == 0));
        }
    }

    #[test]
    fn round_trip() {
        let mesh = icosphere(1);
        let mut out = Vec::new();
        write_stl(&mut out, &mesh).unwrap();
        let tris = read_stl(&mut out.as_slice()).unwrap();
        assert_eq!(tris.len(), mesh.faces.len());
        for (f, t) in tris.iter().enumerate() {
            let v = mesh.triangle(f);
            for (got, want) in t.vertices.iter().zip(&v) {
                assert_eq!(*got, f32x3(want));
            }
            let n = Vector3::new(t.normal[0] as f64, t.normal[1] as f64, t.normal[2] as f64);
            assert!((n.norm() - 1.0).abs() < 1e-6);
            assert!(n.dot(&(v[0] + v[1] + v[2])) > 0.0);
        }
    }

    #[test]
    fn truncated_file_is_rejected() {
        let mut out = Vec::new();
        write_stl(&mut out, &icosphere(0)).unwrap();
        out.pop();
        assert!(read_stl(&mut out.as_slice()).is_err());
    }
}
