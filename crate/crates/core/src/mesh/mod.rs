//! Triangle meshes: marching-cubes extraction, parametric sign surfaces and
//! OBJ / binary STL / ASCII PLY export.

mod parametric;
mod tables;

use std::collections::HashMap;
use std::io::{self, Write};

use rayon::prelude::*;
use thiserror::Error;

use crate::field::ScalarField;

pub use parametric::{sample_parametric_sign, ParametricError, ParametricSpec};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeshError {
    #[error("triangle {triangle} references vertex {index}, mesh has {len}")]
    IndexOutOfRange { triangle: usize, index: u32, len: usize },
    #[error("triangle {0} repeats a vertex index")]
    Degenerate(usize),
    #[error("vertex {0} has a non-finite coordinate")]
    NonFinite(usize),
}

/// Indexed triangle mesh.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TriangleMesh {
    pub vertices: Vec<[f64; 3]>,
    pub triangles: Vec<[u32; 3]>,
}

impl TriangleMesh {
    pub fn new(vertices: Vec<[f64; 3]>, triangles: Vec<[u32; 3]>) -> Result<TriangleMesh, MeshError> {
        let mesh = TriangleMesh { vertices, triangles };
        mesh.validate()?;
        Ok(mesh)
    }

    pub fn validate(&self) -> Result<(), MeshError> {
        if let Some(i) = self.vertices.iter().position(|v| v.iter().any(|c| !c.is_finite())) {
            return Err(MeshError::NonFinite(i));
        }
        for (t, tri) in self.triangles.iter().enumerate() {
            for &index in tri {
                if index as usize >= self.vertices.len() {
                    return Err(MeshError::IndexOutOfRange {
                        triangle: t,
                        index,
                        len: self.vertices.len(),
                    });
                }
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(MeshError::Degenerate(t));
            }
        }
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    /// Number of triangles using each undirected edge.
    pub fn edge_uses(&self) -> HashMap<(u32, u32), usize> {
        let mut uses = HashMap::new();
        for t in &self.triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                *uses.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
        uses
    }

    /// Every edge is shared by exactly two triangles.
    pub fn is_watertight(&self) -> bool {
        !self.triangles.is_empty() && self.edge_uses().values().all(|&n| n == 2)
    }

    /// `V − E + F`, counting only vertices referenced by a triangle.
    pub fn euler_characteristic(&self) -> i64 {
        let mut used = vec![false; self.vertices.len()];
        for t in &self.triangles {
            for &i in t {
                used[i as usize] = true;
            }
        }
        let v = used.iter().filter(|u| **u).count() as i64;
        let e = self.edge_uses().len() as i64;
        v - e + self.triangles.len() as i64
    }

    /// Right-handed unit normal of triangle `t`, zero when degenerate.
    pub fn triangle_normal(&self, t: usize) -> [f64; 3] {
        let [a, b, c] = self.triangles[t].map(|i| self.vertices[i as usize]);
        let u = sub(b, a);
        let v = sub(c, a);
        let n = [
            u[1] * v[2] - u[2] * v[1],
            u[2] * v[0] - u[0] * v[2],
            u[0] * v[1] - u[1] * v[0],
        ];
        let len = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
        if len > 0.0 {
            n.map(|c| c / len)
        } else {
            [0.0; 3]
        }
    }
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

/// Key of a lattice edge: flat index of its lower endpoint times 3 plus axis.
type EdgeKey = u64;

fn corner_defined(v: f64) -> bool {
    v.is_finite()
}

/// Case index of the cell whose lowest corner is `(ix, iy, iz)`, or `None`
/// when a corner is undefined.
fn cell_case(field: &ScalarField, iso: f64, ix: usize, iy: usize, iz: usize) -> Option<u8> {
    let mut case = 0u8;
    for (bit, off) in tables::CORNERS.iter().enumerate() {
        let v = field.get(ix + off[0], iy + off[1], iz + off[2]);
        if !corner_defined(v) {
            return None;
        }
        if v <= iso {
            case |= 1 << bit;
        }
    }
    Some(case)
}

/// Cells with all corners defined and corners on both sides of `iso`.
///
/// Zero exactly when [`marching_cubes`] returns an empty mesh.
pub fn surface_cells(field: &ScalarField, iso: f64) -> usize {
    let [nx, ny, nz] = field.spec().counts();
    (0..nz - 1)
        .into_par_iter()
        .map(|iz| {
            let mut n = 0;
            for iy in 0..ny - 1 {
                for ix in 0..nx - 1 {
                    if matches!(cell_case(field, iso, ix, iy, iz), Some(c) if c != 0 && c != 255) {
                        n += 1;
                    }
                }
            }
            n
        })
        .sum()
}

fn slab_triangles(field: &ScalarField, iso: f64, iz: usize) -> Vec<[EdgeKey; 3]> {
    let spec = field.spec();
    let [nx, ny, _] = spec.counts();
    let mut tris = Vec::new();
    for iy in 0..ny - 1 {
        for ix in 0..nx - 1 {
            let Some(case) = cell_case(field, iso, ix, iy, iz) else {
                continue;
            };
            let row = &tables::TRIANGLES[case as usize];
            for tri in row.chunks_exact(3).take_while(|t| t[0] >= 0) {
                let key = |edge: i8| -> EdgeKey {
                    let [a, b] = tables::EDGES[edge as usize];
                    let (ca, cb) = (tables::CORNERS[a], tables::CORNERS[b]);
                    let lower = [0, 1, 2].map(|k| ca[k].min(cb[k]));
                    let axis = (0..3).find(|&k| ca[k] != cb[k]).unwrap();
                    let flat = spec.index(ix + lower[0], iy + lower[1], iz + lower[2]);
                    flat as EdgeKey * 3 + axis as EdgeKey
                };
                // The table winds triangles clockwise seen from outside;
                // swap to get outward right-handed normals.
                tris.push([key(tri[0]), key(tri[2]), key(tri[1])]);
            }
        }
    }
    tris
}

fn edge_vertex(field: &ScalarField, iso: f64, key: EdgeKey) -> [f64; 3] {
    let spec = field.spec();
    let axis = (key % 3) as usize;
    let (ix, iy, iz) = spec.unindex((key / 3) as usize);
    let mut hi = [ix, iy, iz];
    hi[axis] += 1;
    let v0 = field.get(ix, iy, iz);
    let v1 = field.get(hi[0], hi[1], hi[2]);
    let t = (iso - v0) / (v1 - v0);
    let mut p = spec.point_unchecked(ix, iy, iz);
    let q = spec.point_unchecked(hi[0], hi[1], hi[2]);
    p[axis] += t * (q[axis] - p[axis]);
    p
}

/// Extracts the `iso` level set of a field with marching cubes.
///
/// Corners with `value <= iso` are inside; cells with any undefined corner
/// produce nothing. Vertices on shared lattice edges are welded by edge
/// identity. Output order follows the x-fastest cell scan and does not depend
/// on the number of worker threads.
pub fn marching_cubes(field: &ScalarField, iso: f64) -> TriangleMesh {
    let nz = field.spec().z.count;
    let slabs: Vec<Vec<[EdgeKey; 3]>> = (0..nz - 1)
        .into_par_iter()
        .map(|iz| slab_triangles(field, iso, iz))
        .collect();

    let mut index: HashMap<EdgeKey, u32> = HashMap::new();
    let mut mesh = TriangleMesh::default();
    for tri in slabs.into_iter().flatten() {
        let ids = tri.map(|key| {
            *index.entry(key).or_insert_with(|| {
                mesh.vertices.push(edge_vertex(field, iso, key));
                (mesh.vertices.len() - 1) as u32
            })
        });
        mesh.triangles.push(ids);
    }
    mesh
}

/// Wavefront OBJ: `v x y z` lines then 1-based `f a b c` lines, LF endings.
/// Coordinates use the shortest decimal that round-trips.
pub fn export_obj<W: Write>(mesh: &TriangleMesh, sink: W) -> io::Result<()> {
    let mut out = io::BufWriter::new(sink);
    for [x, y, z] in &mesh.vertices {
        writeln!(out, "v {x} {y} {z}")?;
    }
    for [a, b, c] in &mesh.triangles {
        writeln!(out, "f {} {} {}", a + 1, b + 1, c + 1)?;
    }
    out.flush()
}

pub const STL_HEADER_TEXT: &[u8] = b"implicitforge";

/// Binary STL, little-endian: 80-byte header, `u32` count, then per triangle
/// the normal and three vertices as `f32` and a zero `u16` attribute.
pub fn export_stl<W: Write>(mesh: &TriangleMesh, sink: W) -> io::Result<()> {
    let mut out = io::BufWriter::new(sink);
    let mut header = [0u8; 80];
    header[..STL_HEADER_TEXT.len()].copy_from_slice(STL_HEADER_TEXT);
    out.write_all(&header)?;
    let count = u32::try_from(mesh.triangles.len())
        .map_err(|_| io::Error::new(io::ErrorKind::InvalidInput, "too many triangles for STL"))?;
    out.write_all(&count.to_le_bytes())?;
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let normal = mesh.triangle_normal(t);
        let corners = tri.map(|i| mesh.vertices[i as usize]);
        for p in std::iter::once(&normal).chain(corners.iter()) {
            for c in p {
                out.write_all(&(*c as f32).to_le_bytes())?;
            }
        }
        out.write_all(&0u16.to_le_bytes())?;
    }
    out.flush()
}

/// Minimal ASCII PLY with double-precision vertices.
pub fn export_ply<W: Write>(mesh: &TriangleMesh, sink: W) -> io::Result<()> {
    let mut out = io::BufWriter::new(sink);
    writeln!(out, "ply")?;
    writeln!(out, "format ascii 1.0")?;
    writeln!(out, "element vertex {}", mesh.vertices.len())?;
    for axis in ["x", "y", "z"] {
        writeln!(out, "property double {axis}")?;
    }
    writeln!(out, "element face {}", mesh.triangles.len())?;
    writeln!(out, "property list uchar int vertex_indices")?;
    writeln!(out, "end_header")?;
    for [x, y, z] in &mesh.vertices {
        writeln!(out, "{x} {y} {z}")?;
    }
    for [a, b, c] in &mesh.triangles {
        writeln!(out, "3 {a} {b} {c}")?;
    }
    out.flush()
}
