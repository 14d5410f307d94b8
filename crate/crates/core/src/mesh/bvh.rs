//! Axis-aligned bounding volume hierarchy over the triangles of a mesh.

use std::sync::Arc;

use super::ray::{intersect_triangle, Ray, RayHit};
use super::TriangleMesh;
use crate::error::{Error, Result};
use crate::geom::Point;

const LEAF_SIZE: usize = 4;
/// Relative slack on slab-test exits; covers rounding in the box tests so
/// that pruning never discards a triangle the exact test would hit.
const SLAB_SLACK: f64 = 4.0 * f64::EPSILON;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Point,
    pub max: Point,
}

impl Aabb {
    fn empty() -> Self {
        Self {
            min: Point::new(f64::INFINITY, f64::INFINITY, f64::INFINITY),
            max: Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY),
        }
    }

    fn grow(&mut self, p: &Point) {
        self.min = self.min.inf(p);
        self.max = self.max.sup(p);
    }

    fn merge(&self, other: &Aabb) -> Aabb {
        Aabb {
            min: self.min.inf(&other.min),
            max: self.max.sup(&other.max),
        }
    }

    pub fn contains(&self, p: &Point) -> bool {
        (0..3).all(|i| p[i] >= self.min[i] && p[i] <= self.max[i])
    }

    /// Entry parameter of the ray into the box, if it enters before `t_max`.
    fn entry(&self, ray: &Ray, inv_dir: &[f64; 3], t_max: f64) -> Option<f64> {
        let mut near = 0.0_f64;
        let mut far = t_max;
        for i in 0..3 {
            let o = ray.origin[i];
            if ray.direction[i] == 0.0 {
                if o < self.min[i] || o > self.max[i] {
                    return None;
                }
                continue;
            }
            let mut t0 = (self.min[i] - o) * inv_dir[i];
            let mut t1 = (self.max[i] - o) * inv_dir[i];
            if t0 > t1 {
                std::mem::swap(&mut t0, &mut t1);
            }
            near = near.max(t0);
            far = far.min(t1 * (1.0 + SLAB_SLACK));
            if near > far {
                return None;
            }
        }
        Some(near)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BvhNode {
    Leaf { bounds: Aabb, start: usize, count: usize },
    Inner { bounds: Aabb, left: usize, right: usize },
}

impl BvhNode {
    pub fn bounds(&self) -> &Aabb {
        match self {
            BvhNode::Leaf { bounds, .. } | BvhNode::Inner { bounds, .. } => bounds,
        }
    }
}

/// Ray-query index over an immutable mesh. Cheap to clone (shares the mesh).
#[derive(Debug, Clone)]
pub struct Bvh {
    mesh: Arc<TriangleMesh>,
    nodes: Vec<BvhNode>,
    /// Triangle indices, permuted so every leaf owns a contiguous range.
    order: Vec<usize>,
}

impl Bvh {
    /// Builds the hierarchy with median splits along the longest centroid
    /// axis. Boxes are padded by a tiny margin so flat (axis-aligned) faces
    /// keep a non-degenerate slab.
    pub fn build(mesh: impl Into<Arc<TriangleMesh>>) -> Result<Self> {
        let mesh = mesh.into();
        if mesh.is_empty() {
            return Err(Error::EmptyMesh);
        }
        let n = mesh.triangles().len();
        let mut boxes = Vec::with_capacity(n);
        let mut centroids = Vec::with_capacity(n);
        for t in 0..n {
            let tri = mesh.triangle(t);
            let mut b = Aabb::empty();
            tri.iter().for_each(|p| b.grow(p));
            let extent = (b.max - b.min).amax();
            let pad = 1e-9 * (1.0 + extent + b.min.coords.amax().max(b.max.coords.amax()));
            b.min -= nalgebra::Vector3::repeat(pad);
            b.max += nalgebra::Vector3::repeat(pad);
            boxes.push(b);
            centroids.push(Point::from((tri[0].coords + tri[1].coords + tri[2].coords) / 3.0));
        }
        let mut bvh = Bvh {
            mesh,
            nodes: Vec::with_capacity(2 * n / LEAF_SIZE + 1),
            order: (0..n).collect(),
        };
        bvh.build_node(0, n, &boxes, &centroids);
        Ok(bvh)
    }

    fn build_node(&mut self, start: usize, end: usize, boxes: &[Aabb], centroids: &[Point]) -> usize {
        let bounds = self.order[start..end]
            .iter()
            .fold(Aabb::empty(), |acc, &t| acc.merge(&boxes[t]));
        let index = self.nodes.len();
        let count = end - start;
        if count <= LEAF_SIZE {
            self.nodes.push(BvhNode::Leaf { bounds, start, count });
            return index;
        }
        let mut cbox = Aabb::empty();
        self.order[start..end].iter().for_each(|&t| cbox.grow(&centroids[t]));
        let axis = (cbox.max - cbox.min).imax();
        let mid = start + count / 2;
        self.order[start..end].select_nth_unstable_by(count / 2, |&a, &b| {
            centroids[a][axis]
                .total_cmp(&centroids[b][axis])
                .then(a.cmp(&b))
        });
        // placeholder, patched once both children exist
        self.nodes.push(BvhNode::Leaf { bounds, start, count: 0 });
        let left = self.build_node(start, mid, boxes, centroids);
        let right = self.build_node(mid, end, boxes, centroids);
        self.nodes[index] = BvhNode::Inner { bounds, left, right };
        index
    }

    pub fn mesh(&self) -> &TriangleMesh {
        &self.mesh
    }

    pub fn shared_mesh(&self) -> Arc<TriangleMesh> {
        Arc::clone(&self.mesh)
    }

    pub fn nodes(&self) -> &[BvhNode] {
        &self.nodes
    }

    /// Triangle indices owned by a leaf node.
    pub fn leaf_triangles(&self, start: usize, count: usize) -> &[usize] {
        &self.order[start..start + count]
    }

    /// Nearest intersection with distance `<= t_max`. Equal distances are
    /// resolved towards the lower triangle index, matching a linear scan.
    pub fn raycast(&self, ray: &Ray, t_max: f64) -> Option<RayHit> {
        let inv_dir = [
            1.0 / ray.direction.x,
            1.0 / ray.direction.y,
            1.0 / ray.direction.z,
        ];
        let mut best: Option<(f64, usize)> = None;
        let mut limit = t_max;
        let mut stack = Vec::with_capacity(64);
        stack.push(0usize);
        while let Some(node) = stack.pop() {
            match &self.nodes[node] {
                BvhNode::Leaf { bounds, start, count } => {
                    if bounds.entry(ray, &inv_dir, limit).is_none() {
                        continue;
                    }
                    for &t in &self.order[*start..start + count] {
                        if let Some(d) = intersect_triangle(ray, &self.mesh.triangle(t), limit) {
                            let better = match best {
                                None => true,
                                Some((bd, bt)) => d < bd || (d == bd && t < bt),
                            };
                            if better {
                                best = Some((d, t));
                                limit = d;
                            }
                        }
                    }
                }
                BvhNode::Inner { bounds, left, right } => {
                    if bounds.entry(ray, &inv_dir, limit).is_none() {
                        continue;
                    }
                    let tl = self.nodes[*left].bounds().entry(ray, &inv_dir, limit);
                    let tr = self.nodes[*right].bounds().entry(ray, &inv_dir, limit);
                    match (tl, tr) {
                        (Some(a), Some(b)) => {
                            // visit the nearer child first
                            if a <= b {
                                stack.push(*right);
                                stack.push(*left);
                            } else {
                                stack.push(*left);
                                stack.push(*right);
                            }
                        }
                        (Some(_), None) => stack.push(*left),
                        (None, Some(_)) => stack.push(*right),
                        (None, None) => {}
                    }
                }
            }
        }
        best.map(|(distance, triangle)| RayHit {
            point: ray.at(distance),
            distance,
            triangle,
        })
    }
}

/// Linear scan over every triangle; the reference the hierarchy must match.
pub fn raycast_brute_force(mesh: &TriangleMesh, ray: &Ray, t_max: f64) -> Option<RayHit> {
    let mut best: Option<(f64, usize)> = None;
    for t in 0..mesh.triangles().len() {
        if let Some(d) = intersect_triangle(ray, &mesh.triangle(t), t_max) {
            if best.map_or(true, |(bd, _)| d < bd) {
                best = Some((d, t));
            }
        }
    }
    best.map(|(distance, triangle)| RayHit {
        point: ray.at(distance),
        distance,
        triangle,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Vector;

    fn single() -> TriangleMesh {
        TriangleMesh::new(
            vec![Point::origin(), Point::new(1.0, 0.0, 0.0), Point::new(0.0, 1.0, 0.0)],
            vec![[0, 1, 2]],
        )
        .unwrap()
    }

    #[test]
    fn single_triangle_is_one_leaf() {
        let bvh = Bvh::build(single()).unwrap();
        assert_eq!(bvh.nodes().len(), 1);
        assert!(matches!(bvh.nodes()[0], BvhNode::Leaf { count: 1, .. }));
    }

    #[test]
    fn empty_mesh_is_rejected() {
        let mesh = TriangleMesh::new(vec![], vec![]).unwrap();
        assert!(matches!(Bvh::build(mesh), Err(Error::EmptyMesh)));
    }

    #[test]
    fn ray_along_flat_box_face() {
        let bvh = Bvh::build(single()).unwrap();
        let hit = bvh
            .raycast(&Ray::new(Point::new(0.2, 0.2, 3.0), -Vector::z()), 10.0)
            .unwrap();
        assert!((hit.distance - 3.0).abs() < 1e-12);
    }
}
