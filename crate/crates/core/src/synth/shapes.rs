use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Point;
use crate::mesh::TriangleMesh;

pub const DEFAULT_SEGMENTS: usize = 512;
pub const MIN_SEGMENTS: usize = 16;

/// Solid centered at the origin with its axis along +z, spanning
/// `z ∈ [-height/2, height/2]`. Cones and pyramids have their base at the
/// bottom and apex at the top.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Shape {
    Cube { side: f64 },
    Cylinder { radius: f64, height: f64 },
    Cone { radius: f64, height: f64 },
    Pyramid { side: f64, height: f64 },
    Sphere { radius: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapeSpec {
    #[serde(flatten)]
    pub shape: Shape,
    /// Angular segments for curved shapes; ignored by cubes and pyramids.
    #[serde(default = "default_segments")]
    pub segments: usize,
}

fn default_segments() -> usize {
    DEFAULT_SEGMENTS
}

impl From<Shape> for ShapeSpec {
    fn from(shape: Shape) -> Self {
        ShapeSpec {
            shape,
            segments: DEFAULT_SEGMENTS,
        }
    }
}

impl ShapeSpec {
    pub fn cube(side: f64) -> Self {
        Shape::Cube { side }.into()
    }

    pub fn cylinder(radius: f64, height: f64) -> Self {
        Shape::Cylinder { radius, height }.into()
    }

    pub fn cone(radius: f64, height: f64) -> Self {
        Shape::Cone { radius, height }.into()
    }

    pub fn pyramid(side: f64, height: f64) -> Self {
        Shape::Pyramid { side, height }.into()
    }

    pub fn sphere(radius: f64) -> Self {
        Shape::Sphere { radius }.into()
    }

    pub fn with_segments(mut self, segments: usize) -> Self {
        self.segments = segments;
        self
    }

    /// Short label such as `cube-15` or `cylinder-r25-h50`.
    pub fn name(&self) -> String {
        match self.shape {
            Shape::Cube { side } => format!("cube-{side}"),
            Shape::Cylinder { radius, height } => format!("cylinder-r{radius}-h{height}"),
            Shape::Cone { radius, height } => format!("cone-r{radius}-h{height}"),
            Shape::Pyramid { side, height } => format!("pyramid-s{side}-h{height}"),
            Shape::Sphere { radius } => format!("sphere-r{radius}"),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let dims: &[f64] = match &self.shape {
            Shape::Cube { side } => &[*side],
            Shape::Cylinder { radius, height } | Shape::Cone { radius, height } => &[*radius, *height],
            Shape::Pyramid { side, height } => &[*side, *height],
            Shape::Sphere { radius } => &[*radius],
        };
        if dims.iter().any(|d| !(*d > 0.0) || !d.is_finite()) {
            return Err(Error::InvalidParam(format!("{}: dimensions must be positive", self.name())));
        }
        let curved = matches!(self.shape, Shape::Cylinder { .. } | Shape::Cone { .. } | Shape::Sphere { .. });
        if curved && self.segments < MIN_SEGMENTS {
            return Err(Error::InvalidParam(format!(
                "{}: need at least {MIN_SEGMENTS} segments, got {}",
                self.name(),
                self.segments
            )));
        }
        Ok(())
    }

    pub fn height(&self) -> f64 {
        match self.shape {
            Shape::Cube { side } => side,
            Shape::Cylinder { height, .. } | Shape::Cone { height, .. } | Shape::Pyramid { height, .. } => height,
            Shape::Sphere { radius } => 2.0 * radius,
        }
    }

    /// Height of the reference section: mid-height, which is `z = 0`.
    pub fn reference_height(&self) -> f64 {
        0.0
    }

    /// Fraction of the base size left at height `z` for tapered shapes.
    fn taper(&self, z: f64) -> f64 {
        (0.5 - z / self.height()).clamp(0.0, 1.0)
    }

    fn inside(&self, z: f64) -> bool {
        z.abs() <= self.height() / 2.0
    }

    /// Exact perimeter of the horizontal section at height `z`.
    pub fn perimeter(&self, z: f64) -> f64 {
        if !self.inside(z) {
            return 0.0;
        }
        match self.shape {
            Shape::Cube { side } => 4.0 * side,
            Shape::Cylinder { radius, .. } => TAU * radius,
            Shape::Cone { radius, .. } => TAU * radius * self.taper(z),
            Shape::Pyramid { side, .. } => 4.0 * side * self.taper(z),
            Shape::Sphere { radius } => TAU * (radius * radius - z * z).max(0.0).sqrt(),
        }
    }

    /// Exact area of the horizontal section at height `z`.
    pub fn area(&self, z: f64) -> f64 {
        if !self.inside(z) {
            return 0.0;
        }
        match self.shape {
            Shape::Cube { side } => side * side,
            Shape::Cylinder { radius, .. } => PI * radius * radius,
            Shape::Cone { radius, .. } => PI * (radius * self.taper(z)).powi(2),
            Shape::Pyramid { side, .. } => (side * self.taper(z)).powi(2),
            Shape::Sphere { radius } => PI * (radius * radius - z * z).max(0.0),
        }
    }

    /// Exact volume between the horizontal planes `z0` and `z1`.
    pub fn volume_between(&self, z0: f64, z1: f64) -> f64 {
        let half = self.height() / 2.0;
        let (a, b) = (z0.min(z1).max(-half), z0.max(z1).min(half));
        if a >= b {
            return 0.0;
        }
        let h = self.height();
        match self.shape {
            Shape::Cube { .. } | Shape::Cylinder { .. } => self.area(0.0) * (b - a),
            Shape::Cone { .. } | Shape::Pyramid { .. } => {
                // base area times ∫ taper² dz
                let base = self.area(-half);
                base * h / 3.0 * (self.taper(a).powi(3) - self.taper(b).powi(3))
            }
            Shape::Sphere { radius } => {
                let f = |z: f64| PI * (radius * radius * z - z * z * z / 3.0);
                f(b) - f(a)
            }
        }
    }

    pub fn volume(&self) -> f64 {
        let half = self.height() / 2.0;
        self.volume_between(-half, half)
    }
}

/// Closed, outward-oriented triangle mesh of the shape.
pub fn gen_shape(spec: &ShapeSpec) -> Result<TriangleMesh> {
    spec.validate()?;
    let n = spec.segments;
    let (vertices, triangles) = match spec.shape {
        Shape::Cube { side } => cube(side),
        Shape::Cylinder { radius, height } => cylinder(radius, height, n),
        Shape::Cone { radius, height } => cone(radius, height, n),
        Shape::Pyramid { side, height } => pyramid(side, height),
        Shape::Sphere { radius } => sphere(radius, n),
    };
    TriangleMesh::new(vertices, triangles)
}

type Parts = (Vec<Point>, Vec<[u32; 3]>);

fn cube(side: f64) -> Parts {
    let h = side / 2.0;
    let vertices = (0..8)
        .map(|i| {
            let s = |bit: usize| if i & bit != 0 { h } else { -h };
            Point::new(s(1), s(2), s(4))
        })
        .collect();
    // each face as two triangles, counter-clockwise seen from outside
    let triangles = vec![
        [0, 2, 3], [0, 3, 1], // -z
        [4, 5, 7], [4, 7, 6], // +z
        [0, 1, 5], [0, 5, 4], // -y
        [2, 6, 7], [2, 7, 3], // +y
        [0, 4, 6], [0, 6, 2], // -x
        [1, 3, 7], [1, 7, 5], // +x
    ];
    (vertices, triangles)
}

fn ring(radius: f64, z: f64, n: usize) -> impl Iterator<Item = Point> {
    (0..n).map(move |k| {
        let a = TAU * k as f64 / n as f64;
        Point::new(radius * a.cos(), radius * a.sin(), z)
    })
}

fn cylinder(radius: f64, height: f64, n: usize) -> Parts {
    let h = height / 2.0;
    let mut vertices: Vec<Point> = ring(radius, -h, n).chain(ring(radius, h, n)).collect();
    let (bottom, top) = (2 * n as u32, 2 * n as u32 + 1);
    vertices.push(Point::new(0.0, 0.0, -h));
    vertices.push(Point::new(0.0, 0.0, h));
    let mut triangles = Vec::with_capacity(4 * n);
    for k in 0..n as u32 {
        let next = (k + 1) % n as u32;
        let (b0, b1, t0, t1) = (k, next, k + n as u32, next + n as u32);
        triangles.push([b0, b1, t1]);
        triangles.push([b0, t1, t0]);
        triangles.push([bottom, b1, b0]);
        triangles.push([top, t0, t1]);
    }
    (vertices, triangles)
}

fn cone(radius: f64, height: f64, n: usize) -> Parts {
    let h = height / 2.0;
    let mut vertices: Vec<Point> = ring(radius, -h, n).collect();
    let (bottom, apex) = (n as u32, n as u32 + 1);
    vertices.push(Point::new(0.0, 0.0, -h));
    vertices.push(Point::new(0.0, 0.0, h));
    let mut triangles = Vec::with_capacity(2 * n);
    for k in 0..n as u32 {
        let next = (k + 1) % n as u32;
        triangles.push([k, next, apex]);
        triangles.push([bottom, next, k]);
    }
    (vertices, triangles)
}

fn pyramid(side: f64, height: f64) -> Parts {
    let (s, h) = (side / 2.0, height / 2.0);
    let vertices = vec![
        Point::new(-s, -s, -h),
        Point::new(s, -s, -h),
        Point::new(s, s, -h),
        Point::new(-s, s, -h),
        Point::new(0.0, 0.0, h),
    ];
    let triangles = vec![[0, 1, 4], [1, 2, 4], [2, 3, 4], [3, 0, 4], [0, 2, 1], [0, 3, 2]];
    (vertices, triangles)
}

/// UV sphere: `n` longitudes and `n / 2` latitude bands.
fn sphere(radius: f64, n: usize) -> Parts {
    let bands = n / 2;
    let mut vertices = vec![Point::new(0.0, 0.0, -radius)];
    for i in 1..bands {
        let polar = PI * i as f64 / bands as f64;
        vertices.extend(ring(radius * polar.sin(), -radius * polar.cos(), n));
    }
    let north = vertices.len() as u32;
    vertices.push(Point::new(0.0, 0.0, radius));
    let ring_start = |i: usize| 1 + ((i - 1) * n) as u32;
    let mut triangles = Vec::new();
    for k in 0..n as u32 {
        let next = (k + 1) % n as u32;
        triangles.push([0, ring_start(1) + next, ring_start(1) + k]);
        let last = ring_start(bands - 1);
        triangles.push([north, last + k, last + next]);
    }
    for i in 1..bands - 1 {
        let (lo, hi) = (ring_start(i), ring_start(i + 1));
        for k in 0..n as u32 {
            let next = (k + 1) % n as u32;
            triangles.push([lo + k, lo + next, hi + next]);
            triangles.push([lo + k, hi + next, hi + k]);
        }
    }
    (vertices, triangles)
}
