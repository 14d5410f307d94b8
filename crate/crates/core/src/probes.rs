//! Section probes: perimeter, area and volume of a mesh cut by a plane.
//!
//! A [`CircleProbe`] fires `ray_count` coplanar rays from points on its circle
//! toward the circle center. The first hit of every ray is kept, in angular
//! order, and the resulting polygon gives the section perimeter and area.
//! A [`CylinderProbe`] stacks circle probes below a top circle and integrates
//! the section areas into a volume.

use std::f64::consts::TAU;

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::geom::{all_finite, is_unit, plane_basis, plane_basis_with_reference, Point, Vector};
use crate::mesh::{Bvh, Ray};

pub const DEFAULT_RAY_COUNT: usize = 10_000;
pub const DEFAULT_SLICE_STEP_CM: f64 = 1.0;
pub const MIN_RAY_COUNT: usize = 8;

const AUTOFIT_RAY_COUNT: usize = 64;
const AUTOFIT_MARGIN: f64 = 1.2;

/// Probe circle radius: fixed in cm, or fitted to the surrounding mesh.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Radius {
    Fixed(f64),
    #[default]
    Auto,
}

impl Serialize for Radius {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Radius::Fixed(r) => s.serialize_f64(*r),
            Radius::Auto => s.serialize_str("auto"),
        }
    }
}

impl<'de> Deserialize<'de> for Radius {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Number(r) => Ok(Radius::Fixed(r)),
            Raw::Text(t) if t.eq_ignore_ascii_case("auto") => Ok(Radius::Auto),
            Raw::Text(t) => Err(serde::de::Error::custom(format!("radius must be a number or \"auto\", got {t:?}"))),
        }
    }
}

/// Whether the segment from the last hit back to the first counts toward the
/// perimeter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PerimeterClosure {
    #[default]
    Closed,
    /// Sum of consecutive-hit distances only, without the wraparound segment.
    Open,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircleProbe {
    pub center: Point,
    pub normal: Vector,
    #[serde(default)]
    pub radius: Radius,
    #[serde(default = "default_ray_count")]
    pub ray_count: usize,
    /// In-plane direction of the first ray origin. Defaults to [`plane_basis`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<Vector>,
    #[serde(default)]
    pub closure: PerimeterClosure,
}

fn default_ray_count() -> usize {
    DEFAULT_RAY_COUNT
}

impl CircleProbe {
    pub fn new(center: Point, normal: Vector) -> Self {
        CircleProbe {
            center,
            normal,
            radius: Radius::Auto,
            ray_count: DEFAULT_RAY_COUNT,
            reference: None,
            closure: PerimeterClosure::Closed,
        }
    }

    pub fn with_radius(mut self, radius: Radius) -> Self {
        self.radius = radius;
        self
    }

    pub fn with_rays(mut self, ray_count: usize) -> Self {
        self.ray_count = ray_count;
        self
    }

    pub fn with_reference(mut self, reference: Vector) -> Self {
        self.reference = Some(reference);
        self
    }

    pub fn with_closure(mut self, closure: PerimeterClosure) -> Self {
        self.closure = closure;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !all_finite(&self.center.coords) {
            return Err(Error::InvalidParam("probe center must be finite".into()));
        }
        if !all_finite(&self.normal) || !is_unit(&self.normal, 1e-9) {
            return Err(Error::InvalidParam(format!(
                "probe normal must be a unit vector, got length {}",
                self.normal.norm()
            )));
        }
        if let Radius::Fixed(r) = self.radius {
            if !(r > 0.0) || !r.is_finite() {
                return Err(Error::InvalidParam(format!("probe radius must be positive, got {r}")));
            }
        }
        if self.ray_count < MIN_RAY_COUNT {
            return Err(Error::InvalidParam(format!(
                "ray_count must be at least {MIN_RAY_COUNT}, got {}",
                self.ray_count
            )));
        }
        if let Some(r) = &self.reference {
            if !all_finite(r) {
                return Err(Error::InvalidParam("probe reference axis must be finite".into()));
            }
        }
        Ok(())
    }

    /// Orthonormal in-plane basis `(u, v)` with `u × v = normal`.
    pub fn basis(&self) -> (Vector, Vector) {
        match &self.reference {
            Some(r) => plane_basis_with_reference(&self.normal, r),
            None => plane_basis(&self.normal),
        }
    }

    fn translated(&self, offset: Vector) -> CircleProbe {
        CircleProbe {
            center: self.center + offset,
            ..self.clone()
        }
    }
}

/// A stack of circle probes: `base` is the top circle and slices proceed
/// along `-base.normal` for `height` cm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CylinderProbe {
    pub base: CircleProbe,
    pub height: f64,
    #[serde(default = "default_slice_step")]
    pub slice_step: f64,
}

fn default_slice_step() -> f64 {
    DEFAULT_SLICE_STEP_CM
}

impl CylinderProbe {
    pub fn new(base: CircleProbe, height: f64) -> Self {
        CylinderProbe {
            base,
            height,
            slice_step: DEFAULT_SLICE_STEP_CM,
        }
    }

    pub fn with_slice_step(mut self, h: f64) -> Self {
        self.slice_step = h;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        if !(self.height > 0.0) || !self.height.is_finite() {
            return Err(Error::InvalidParam(format!("cylinder height must be positive, got {}", self.height)));
        }
        if !(self.slice_step > 0.0) || !self.slice_step.is_finite() {
            return Err(Error::InvalidParam(format!("slice step must be positive, got {}", self.slice_step)));
        }
        Ok(())
    }

    /// Slab `(offset of the sampled slice from the top circle, thickness)`.
    pub fn slabs(&self) -> Vec<(f64, f64)> {
        let h = self.slice_step;
        // tolerate heights that are a whole number of steps up to rounding
        let count = ((self.height / h) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        (0..count)
            .map(|i| {
                let top = i as f64 * h;
                let thickness = if i + 1 == count { self.height - top } else { h };
                (top + thickness / 2.0, thickness)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectionMeasurement {
    pub perimeter: f64,
    pub area: f64,
    pub hits: Vec<Point>,
    pub rays_fired: usize,
    pub rays_missed: usize,
    /// Radius actually used, after resolving [`Radius::Auto`].
    pub radius: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SliceArea {
    pub offset_cm: f64,
    pub thickness_cm: f64,
    pub area_cm2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolumeMeasurement {
    pub volume: f64,
    pub slice_areas: Vec<SliceArea>,
    pub rays_fired: usize,
    pub rays_missed: usize,
}

/// Radius that encloses the section of the mesh around `center`.
pub fn autofit_radius(bvh: &Bvh, center: &Point, normal: &Vector) -> Result<f64> {
    let mesh = bvh.mesh();
    let (sphere_center, sphere_radius) = mesh.bounding_sphere().ok_or(Error::EmptyMesh)?;
    let (u, v) = plane_basis(normal);
    let hits: Vec<f64> = (0..AUTOFIT_RAY_COUNT)
        .filter_map(|k| {
            let theta = TAU * k as f64 / AUTOFIT_RAY_COUNT as f64;
            let dir = u * theta.cos() + v * theta.sin();
            bvh.raycast(&Ray::new(*center, dir), f64::INFINITY).map(|h| h.distance)
        })
        .collect();
    if hits.len() >= 3 {
        return Ok(AUTOFIT_MARGIN * hits.iter().copied().fold(0.0, f64::max));
    }
    // circle around center that encloses the sphere's shadow on the plane
    let offset = sphere_center - center;
    let in_plane = offset - normal * offset.dot(normal);
    Ok(AUTOFIT_MARGIN * (in_plane.norm() + sphere_radius))
}

fn resolve_radius(bvh: &Bvh, probe: &CircleProbe) -> Result<f64> {
    match probe.radius {
        Radius::Fixed(r) => Ok(r),
        Radius::Auto => autofit_radius(bvh, &probe.center, &probe.normal),
    }
}

pub fn measure_section(bvh: &Bvh, probe: &CircleProbe) -> Result<SectionMeasurement> {
    probe.validate()?;
    if bvh.mesh().is_empty() {
        return Err(Error::EmptyMesh);
    }
    let radius = resolve_radius(bvh, probe)?;
    let (u, v) = probe.basis();
    let n = probe.ray_count;
    let hits: Vec<Point> = (0..n)
        .into_par_iter()
        .filter_map(|k| {
            let theta = TAU * k as f64 / n as f64;
            let radial = u * theta.cos() + v * theta.sin();
            let ray = Ray::new(probe.center + radial * radius, -radial);
            bvh.raycast(&ray, 2.0 * radius).map(|h| h.point)
        })
        .collect();
    if hits.len() < 3 {
        return Err(Error::NoSection { hits: hits.len() });
    }
    let perimeter = polyline_length(&hits, probe.closure);
    let area = pivot_area(&hits, &probe.center, &probe.normal).abs();
    Ok(SectionMeasurement {
        perimeter,
        area,
        rays_fired: n,
        rays_missed: n - hits.len(),
        hits,
        radius,
    })
}

pub fn measure_volume(bvh: &Bvh, probe: &CylinderProbe) -> Result<VolumeMeasurement> {
    probe.validate()?;
    if bvh.mesh().is_empty() {
        return Err(Error::EmptyMesh);
    }
    let slabs = probe.slabs();
    let sections: Vec<Result<Option<SectionMeasurement>>> = slabs
        .par_iter()
        .map(|&(offset, _)| {
            let slice = probe.base.translated(-probe.base.normal * offset);
            match measure_section(bvh, &slice) {
                Ok(m) => Ok(Some(m)),
                Err(Error::NoSection { .. }) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect();
    let mut slice_areas = Vec::with_capacity(slabs.len());
    let (mut volume, mut fired, mut missed, mut any) = (0.0, 0, 0, false);
    for (&(offset, thickness), section) in slabs.iter().zip(sections) {
        let area = match section? {
            Some(m) => {
                any = true;
                fired += m.rays_fired;
                missed += m.rays_missed;
                m.area
            }
            None => {
                fired += probe.base.ray_count;
                missed += probe.base.ray_count;
                0.0
            }
        };
        volume += area * thickness;
        slice_areas.push(SliceArea {
            offset_cm: offset,
            thickness_cm: thickness,
            area_cm2: area,
        });
    }
    if !any {
        return Err(Error::NoSection { hits: 0 });
    }
    Ok(VolumeMeasurement {
        volume,
        slice_areas,
        rays_fired: fired,
        rays_missed: missed,
    })
}

fn polyline_length(points: &[Point], closure: PerimeterClosure) -> f64 {
    let open: f64 = points.windows(2).map(|w| (w[1] - w[0]).norm()).sum();
    match closure {
        PerimeterClosure::Closed => open + (points[0] - points[points.len() - 1]).norm(),
        PerimeterClosure::Open => open,
    }
}

/// Signed area of the closed polygon, accumulated as triangles fanned from
/// `pivot` and projected on `normal`.
pub fn pivot_area(points: &[Point], pivot: &Point, normal: &Vector) -> f64 {
    let n = points.len();
    (0..n)
        .map(|i| {
            let a = points[i] - pivot;
            let b = points[(i + 1) % n] - pivot;
            a.cross(&b).dot(normal)
        })
        .sum::<f64>()
        / 2.0
}

/// Requested probe, echoed back in a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeEcho {
    pub center: Point,
    pub normal: Vector,
    pub radius: Radius,
    pub rays: usize,
    pub radius_cm: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub height_cm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h_cm: Option<f64>,
}

/// Section (and optional volume) measurement in its serialized form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementReport {
    pub probe: ProbeEcho,
    pub perimeter_cm: f64,
    pub area_cm2: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub volume_cm3: Option<f64>,
    pub rays_fired: usize,
    pub rays_missed: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slice_areas: Option<Vec<SliceArea>>,
    pub hits: Vec<Point>,
}

/// Measures the section at `probe` and, when `volume` is given as
/// `(height, slice_step)`, the volume of the cylinder hanging below it.
pub fn measure_report(bvh: &Bvh, probe: &CircleProbe, volume: Option<(f64, f64)>) -> Result<MeasurementReport> {
    let request = volume;
    let section = measure_section(bvh, probe)?;
    let volume = volume
        .map(|(height, h)| measure_volume(bvh, &CylinderProbe::new(probe.clone(), height).with_slice_step(h)))
        .transpose()?;
    Ok(MeasurementReport {
        probe: ProbeEcho {
            center: probe.center,
            normal: probe.normal,
            radius: probe.radius,
            rays: probe.ray_count,
            radius_cm: section.radius,
            height_cm: request.map(|(height, _)| height),
            h_cm: request.map(|(_, h)| h),
        },
        perimeter_cm: section.perimeter,
        area_cm2: section.area,
        volume_cm3: volume.as_ref().map(|v| v.volume),
        rays_fired: section.rays_fired,
        rays_missed: section.rays_missed,
        slice_areas: volume.map(|v| v.slice_areas),
        hits: section.hits,
    })
}
