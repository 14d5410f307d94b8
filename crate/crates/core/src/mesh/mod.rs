//! Triangle meshes: the measurable surface, its file formats, the ray-query
//! index and a band slicer that turns point clouds into meshes.

mod bvh;
mod io;
mod obj;
mod ply;
mod ray;
mod slice;

pub use bvh::{raycast_brute_force, Aabb, Bvh, BvhNode};
pub use io::{load_mesh, mesh_from_bytes, mesh_to_ply_bytes, save_mesh, MeshFormat};
pub use ply::{read_ply, write_ply, PlyData, PlyEncoding};
pub use ray::{intersect_triangle, Ray, RayHit, PARAMETRIC_EPSILON};
pub use slice::{slice_mesh, SLICE_CONTOUR_CAP};

use crate::error::{Error, Result};
use crate::geom::{Point, Vector};

/// Triangles with an area below this (cm²) are dropped on construction.
pub const MIN_TRIANGLE_AREA: f64 = 1e-10;

/// Indexed triangle mesh in centimeters.
///
/// Construct through [`TriangleMesh::new`], which validates indices and
/// coordinates and drops degenerate triangles. Meshes are immutable once
/// built.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh {
    vertices: Vec<Point>,
    triangles: Vec<[u32; 3]>,
    normals: Option<Vec<Vector>>,
    dropped_degenerate: usize,
}

impl TriangleMesh {
    pub fn new(vertices: Vec<Point>, triangles: Vec<[u32; 3]>) -> Result<Self> {
        Self::with_normals(vertices, triangles, None)
    }

    pub fn with_normals(
        vertices: Vec<Point>,
        triangles: Vec<[u32; 3]>,
        normals: Option<Vec<Vector>>,
    ) -> Result<Self> {
        if let Some(i) = vertices.iter().position(|p| !p.coords.iter().all(|c| c.is_finite())) {
            return Err(Error::InvalidParam(format!("vertex {i} has a non-finite coordinate")));
        }
        if let Some(normals) = &normals {
            if normals.len() != vertices.len() {
                return Err(Error::InvalidParam(format!(
                    "{} normals for {} vertices",
                    normals.len(),
                    vertices.len()
                )));
            }
        }
        let n = vertices.len();
        let mut kept = Vec::with_capacity(triangles.len());
        let mut dropped = 0;
        for (t, tri) in triangles.into_iter().enumerate() {
            if let Some(&bad) = tri.iter().find(|&&i| i as usize >= n) {
                return Err(Error::InvalidParam(format!(
                    "triangle {t} references vertex {bad} but the mesh has {n} vertices"
                )));
            }
            let [a, b, c] = tri.map(|i| vertices[i as usize]);
            if 0.5 * (b - a).cross(&(c - a)).norm() < MIN_TRIANGLE_AREA {
                dropped += 1;
            } else {
                kept.push(tri);
            }
        }
        if dropped > 0 {
            log::warn!("dropped {dropped} degenerate triangles");
        }
        Ok(Self {
            vertices,
            triangles: kept,
            normals,
            dropped_degenerate: dropped,
        })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[u32; 3]] {
        &self.triangles
    }

    pub fn normals(&self) -> Option<&[Vector]> {
        self.normals.as_deref()
    }

    /// Number of degenerate triangles removed at construction.
    pub fn dropped_degenerate(&self) -> usize {
        self.dropped_degenerate
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn triangle(&self, index: usize) -> [Point; 3] {
        self.triangles[index].map(|i| self.vertices[i as usize])
    }

    /// Axis-aligned bounds `(min, max)`, or `None` for a mesh without vertices.
    pub fn bounds(&self) -> Option<(Point, Point)> {
        let first = *self.vertices.first()?;
        Some(self.vertices.iter().fold((first, first), |(lo, hi), p| {
            (lo.inf(p), hi.sup(p))
        }))
    }

    /// Center and radius of the bounding-box sphere.
    pub fn bounding_sphere(&self) -> Option<(Point, f64)> {
        let (lo, hi) = self.bounds()?;
        let center = nalgebra::center(&lo, &hi);
        let radius = self
            .vertices
            .iter()
            .map(|p| (p - center).norm())
            .fold(0.0, f64::max);
        Some((center, radius))
    }

    /// Enclosed volume by the divergence theorem (sum of signed tetrahedra).
    /// Only meaningful for closed, consistently oriented meshes.
    pub fn signed_volume(&self) -> f64 {
        self.triangles
            .iter()
            .map(|tri| {
                let [a, b, c] = tri.map(|i| self.vertices[i as usize].coords);
                a.dot(&b.cross(&c))
            })
            .sum::<f64>()
            / 6.0
    }

    pub fn surface_area(&self) -> f64 {
        (0..self.triangles.len())
            .map(|t| {
                let [a, b, c] = self.triangle(t);
                0.5 * (b - a).cross(&(c - a)).norm()
            })
            .sum()
    }

    /// Applies `f` to every vertex (and `g` to every normal), keeping topology.
    pub fn map_vertices(
        &self,
        f: impl Fn(&Point) -> Point,
        g: impl Fn(&Vector) -> Vector,
    ) -> Result<Self> {
        Self::with_normals(
            self.vertices.iter().map(f).collect(),
            self.triangles.clone(),
            self.normals.as_ref().map(|n| n.iter().map(g).collect()),
        )
    }

    /// True when every undirected edge is shared by exactly two triangles.
    pub fn is_watertight(&self) -> bool {
        let mut edges = std::collections::HashMap::new();
        for tri in &self.triangles {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                *edges.entry((a.min(b), a.max(b))).or_insert(0usize) += 1;
            }
        }
        !edges.is_empty() && edges.values().all(|&c| c == 2)
    }
}
