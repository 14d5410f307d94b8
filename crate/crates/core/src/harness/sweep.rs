use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::report::SCHEMA_VERSION;
use crate::error::{Error, Result};
use crate::geom::{plane_basis, Point, Vector};
use crate::mesh::Bvh;
use crate::probes::{measure_section, measure_volume, CircleProbe, CylinderProbe, Radius, MIN_RAY_COUNT};
use crate::synth::{gen_shape, ShapeSpec};

pub const MAX_SWEEP_RAYS: usize = 1_000_000;

/// Cubes 15 and 50, cylinder and cone r = 25 h = 50, pyramid 30/30.
pub fn standard_suite() -> Vec<ShapeSpec> {
    vec![
        ShapeSpec::cube(15.0),
        ShapeSpec::cube(50.0),
        ShapeSpec::cylinder(25.0, 50.0),
        ShapeSpec::cone(25.0, 50.0),
        ShapeSpec::pyramid(30.0, 30.0),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub shapes: Vec<ShapeSpec>,
    pub ray_counts: Vec<usize>,
    #[serde(default = "default_h")]
    pub h_cm: f64,
    #[serde(default)]
    pub seed: u64,
    /// Record per-row wall time. Off by default so that reports are
    /// reproducible byte for byte.
    #[serde(default)]
    pub record_wall_time: bool,
}

fn default_h() -> f64 {
    crate::probes::DEFAULT_SLICE_STEP_CM
}

impl SweepConfig {
    pub fn new(shapes: Vec<ShapeSpec>, ray_counts: Vec<usize>, h_cm: f64, seed: u64) -> Self {
        SweepConfig {
            shapes,
            ray_counts,
            h_cm,
            seed,
            record_wall_time: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.shapes.is_empty() {
            return Err(Error::InvalidParam("sweep needs at least one shape".into()));
        }
        for s in &self.shapes {
            s.validate()?;
        }
        if let Some(&n) = self.ray_counts.iter().find(|&&n| !(MIN_RAY_COUNT..=MAX_SWEEP_RAYS).contains(&n)) {
            return Err(Error::InvalidParam(format!(
                "ray counts must lie in [{MIN_RAY_COUNT}, {MAX_SWEEP_RAYS}], got {n}"
            )));
        }
        if !(self.h_cm > 0.0) || !self.h_cm.is_finite() {
            return Err(Error::InvalidParam(format!("slice step must be positive, got {}", self.h_cm)));
        }
        Ok(())
    }
}

/// An estimate against its analytic ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub est: f64,
    #[serde(rename = "true")]
    pub truth: f64,
    /// `|est - true| / true`, a fraction.
    pub rel_error: f64,
}

impl Estimate {
    pub fn new(est: f64, truth: f64) -> Self {
        Estimate {
            est,
            truth,
            rel_error: (est - truth).abs() / truth,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRow {
    pub shape: String,
    pub ray_count: usize,
    pub perimeter_cm: Estimate,
    pub area_cm2: Estimate,
    pub volume_cm3: Estimate,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_ms: Option<f64>,
}

/// Mean relative errors over all shapes at one ray count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RayCountSummary {
    pub ray_count: usize,
    pub shapes: usize,
    pub perimeter_rel_error: f64,
    pub area_rel_error: f64,
    pub volume_rel_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub schema_version: u32,
    pub h_cm: f64,
    pub seed: u64,
    pub rows: Vec<BenchmarkRow>,
    pub summary: Vec<RayCountSummary>,
}

impl BenchmarkReport {
    /// Per-ray-count averages of `rows`, ray counts ascending.
    pub fn summarize(rows: &[BenchmarkRow]) -> Vec<RayCountSummary> {
        let mut counts: Vec<usize> = rows.iter().map(|r| r.ray_count).collect();
        counts.sort_unstable();
        counts.dedup();
        counts
            .into_iter()
            .map(|ray_count| {
                let at: Vec<&BenchmarkRow> = rows.iter().filter(|r| r.ray_count == ray_count).collect();
                let n = at.len() as f64;
                let mean = |f: fn(&BenchmarkRow) -> f64| at.iter().map(|r| f(r)).sum::<f64>() / n;
                RayCountSummary {
                    ray_count,
                    shapes: at.len(),
                    perimeter_rel_error: mean(|r| r.perimeter_cm.rel_error),
                    area_rel_error: mean(|r| r.area_cm2.rel_error),
                    volume_rel_error: mean(|r| r.volume_cm3.rel_error),
                }
            })
            .collect()
    }

    pub fn summary_for(&self, ray_count: usize) -> Option<&RayCountSummary> {
        self.summary.iter().find(|s| s.ray_count == ray_count)
    }
}

/// In-plane direction of the first ray. Seed 0 keeps the default basis;
/// other seeds rotate it by a seeded angle.
fn ray_reference(seed: u64) -> Option<Vector> {
    if seed == 0 {
        return None;
    }
    let angle = ChaCha8Rng::seed_from_u64(seed).random_range(0.0..std::f64::consts::TAU);
    let (u, v) = plane_basis(&Vector::z());
    Some(u * angle.cos() + v * angle.sin())
}

/// Measures every shape at every ray count: the section at the reference
/// height with an automatically fitted radius, and the volume of a cylinder
/// probe spanning the whole shape with slice step `h_cm`. Rows are ordered
/// by shape (input order), then by ray count ascending.
pub fn run_measurement_sweep(config: &SweepConfig) -> Result<BenchmarkReport> {
    config.validate()?;
    let mut ray_counts = config.ray_counts.clone();
    ray_counts.sort_unstable();
    ray_counts.dedup();
    let meshes = config
        .shapes
        .par_iter()
        .map(|s| Ok(Bvh::build(gen_shape(s)?)?))
        .collect::<Result<Vec<_>>>()?;
    let jobs: Vec<(usize, usize)> = (0..config.shapes.len())
        .flat_map(|s| ray_counts.iter().map(move |&n| (s, n)))
        .collect();
    let reference = ray_reference(config.seed);
    let rows = jobs
        .par_iter()
        .map(|&(s, ray_count)| {
            let spec = &config.shapes[s];
            let bvh = &meshes[s];
            let start = Instant::now();
            let mut section = CircleProbe::new(Point::new(0.0, 0.0, spec.reference_height()), Vector::z())
                .with_radius(Radius::Auto)
                .with_rays(ray_count);
            section.reference = reference;
            let m = measure_section(bvh, &section)?;
            let top = CircleProbe {
                center: Point::new(0.0, 0.0, spec.height() / 2.0),
                ..section
            };
            let v = measure_volume(bvh, &CylinderProbe::new(top, spec.height()).with_slice_step(config.h_cm))?;
            let z = spec.reference_height();
            Ok(BenchmarkRow {
                shape: spec.name(),
                ray_count,
                perimeter_cm: Estimate::new(m.perimeter, spec.perimeter(z)),
                area_cm2: Estimate::new(m.area, spec.area(z)),
                volume_cm3: Estimate::new(v.volume, spec.volume()),
                wall_time_ms: config.record_wall_time.then(|| start.elapsed().as_secs_f64() * 1e3),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BenchmarkReport {
        schema_version: SCHEMA_VERSION,
        h_cm: config.h_cm,
        seed: config.seed,
        summary: BenchmarkReport::summarize(&rows),
        rows,
    })
}
