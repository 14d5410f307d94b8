use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    fit_cube_marker, procrustes, ransac_align, score_view_pair_weighted, CameraRig, CameraSlot, CaptureSet,
    CubeMarkerModel, RigCamera, RigidTransform, DEFAULT_EDGE_LENGTH_CM, DEFAULT_INLIER_THRESHOLD_CM,
    DEFAULT_RANSAC_ITERATIONS, DEFAULT_VIEW_SCORE_LAMBDA,
};
use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::geom::Vector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrationConfig {
    pub edge_length_cm: f64,
    pub inlier_threshold_cm: f64,
    pub ransac_iterations: usize,
    pub seed: u64,
    /// Weight of the center distance in the view score, rad/cm.
    pub view_score_lambda: f64,
    /// Marker positions scoring above this after alignment are left out of
    /// the final fit.
    pub max_view_score: f64,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        CalibrationConfig {
            edge_length_cm: DEFAULT_EDGE_LENGTH_CM,
            inlier_threshold_cm: DEFAULT_INLIER_THRESHOLD_CM,
            ransac_iterations: DEFAULT_RANSAC_ITERATIONS,
            seed: 0,
            view_score_lambda: DEFAULT_VIEW_SCORE_LAMBDA,
            max_view_score: 0.25,
        }
    }
}

impl CalibrationConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("edge_length_cm", self.edge_length_cm),
            ("inlier_threshold_cm", self.inlier_threshold_cm),
            ("max_view_score", self.max_view_score),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParam(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.view_score_lambda >= 0.0) {
            return Err(Error::InvalidParam("view_score_lambda must be non-negative".into()));
        }
        if self.ransac_iterations == 0 {
            return Err(Error::InvalidParam("ransac_iterations must be at least 1".into()));
        }
        Ok(())
    }
}

/// Marker model for every capture that yields a valid fit, keyed by
/// `(camera, position)`. Invalid captures are skipped with a log message.
pub fn fit_capture_markers(
    captures: &CaptureSet,
    edge_length: f64,
) -> Result<BTreeMap<(u32, usize), CubeMarkerModel>> {
    let jobs: Vec<(usize, u32, &PointCloud)> = captures.iter().collect();
    let fits: Vec<Result<Option<CubeMarkerModel>>> = jobs
        .par_iter()
        .map(|&(k, id, cloud)| match fit_cube_marker(cloud, edge_length) {
            Ok(m) => Ok(Some(m)),
            Err(e @ (Error::InvalidCapture(_) | Error::NonConvergent { .. })) => {
                log::info!("camera {id}, position {k}: capture skipped ({e})");
                Ok(None)
            }
            Err(e) => Err(e),
        })
        .collect();
    let mut models = BTreeMap::new();
    for (&(k, id, _), fit) in jobs.iter().zip(fits) {
        if let Some(m) = fit? {
            models.insert((id, k), m);
        }
    }
    Ok(models)
}

type Models = BTreeMap<(u32, usize), CubeMarkerModel>;

fn positions_of(models: &Models, camera: u32) -> BTreeSet<usize> {
    models.range((camera, 0)..=(camera, usize::MAX)).map(|(&(_, k), _)| k).collect()
}

/// Transform taking the first model of each pair onto the second: RANSAC
/// on centers, then a refit restricted to pairs whose view score agrees.
fn robust_align(
    pairs: &[(CubeMarkerModel, CubeMarkerModel)],
    config: &CalibrationConfig,
    seed: u64,
) -> Result<RigidTransform> {
    let src: Vec<_> = pairs.iter().map(|(a, _)| a.center).collect();
    let dst: Vec<_> = pairs.iter().map(|(_, b)| b.center).collect();
    let (t, inliers) = ransac_align(&src, &dst, config.inlier_threshold_cm, config.ransac_iterations, seed)?;
    let selected: Vec<usize> = inliers
        .iter()
        .copied()
        .filter(|&i| {
            let (a, b) = &pairs[i];
            score_view_pair_weighted(&a.transformed(&t), b, config.view_score_lambda) <= config.max_view_score
        })
        .collect();
    if selected.len() >= 3 && selected != inliers {
        let s: Vec<_> = selected.iter().map(|&i| src[i]).collect();
        let d: Vec<_> = selected.iter().map(|&i| dst[i]).collect();
        return procrustes(&s, &d);
    }
    Ok(t)
}

fn pair_seed(seed: u64, a: u32, b: u32) -> u64 {
    seed ^ ((a as u64) << 32 | b as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Calibrates every camera of `topology` into the frame of the lowest camera
/// id. Cameras are first aligned within their row (height level), then
/// rows are aligned to each other through cameras sharing a mast.
pub fn calibrate_rig(captures: &CaptureSet, topology: &[CameraSlot], config: &CalibrationConfig) -> Result<CameraRig> {
    config.validate()?;
    if topology.is_empty() {
        return Err(Error::InvalidParam("rig topology lists no cameras".into()));
    }
    let known: BTreeSet<u32> = topology.iter().map(|s| s.id).collect();
    if known.len() != topology.len() {
        return Err(Error::InvalidParam("camera ids must be unique".into()));
    }
    if let Some((_, id, _)) = captures.iter().find(|(_, id, _)| !known.contains(id)) {
        return Err(Error::UnknownCamera(id));
    }
    let models = fit_capture_markers(captures, config.edge_length_cm)?;

    let mut rows: BTreeMap<u32, Vec<&CameraSlot>> = BTreeMap::new();
    for slot in topology {
        rows.entry(slot.row).or_default().push(slot);
    }
    for members in rows.values_mut() {
        members.sort_by_key(|s| s.id);
    }

    // stage 1: every camera into its row reference frame
    let mut to_row: BTreeMap<u32, RigidTransform> = BTreeMap::new();
    for members in rows.values() {
        let row_ref = members[0].id;
        to_row.insert(row_ref, RigidTransform::identity());
        let mut pending: Vec<u32> = members[1..].iter().map(|s| s.id).collect();
        while !pending.is_empty() {
            let mut best: Option<(usize, u32, u32)> = None;
            for &c in &pending {
                let pc = positions_of(&models, c);
                for &p in to_row.keys().filter(|p| members.iter().any(|s| s.id == **p)) {
                    let shared = pc.intersection(&positions_of(&models, p)).count();
                    // strict: ties keep the lowest camera ids
                    if best.is_none_or(|(s, _, _)| shared > s) {
                        best = Some((shared, c, p));
                    }
                }
            }
            let (shared, c, p) = best.expect("row reference is placed");
            if shared < 3 {
                return Err(Error::InsufficientCorrespondence { camera: c, shared });
            }
            let pairs: Vec<_> = positions_of(&models, c)
                .intersection(&positions_of(&models, p))
                .map(|&k| (models[&(c, k)].clone(), models[&(p, k)].clone()))
                .collect();
            let t = robust_align(&pairs, config, pair_seed(config.seed, c, p))?;
            to_row.insert(c, to_row[&p].compose(&t));
            pending.retain(|&x| x != c);
        }
    }

    // stage 2: row reference frames into the global frame
    let global_ref = *known.first().unwrap();
    let root_row = topology.iter().find(|s| s.id == global_ref).unwrap().row;
    let mut row_to_global: BTreeMap<u32, RigidTransform> = BTreeMap::new();
    row_to_global.insert(root_row, RigidTransform::identity());
    let slot_of = |id: u32| topology.iter().find(|s| s.id == id).unwrap();
    while row_to_global.len() < rows.len() {
        let mut best: Option<(u32, Vec<(CubeMarkerModel, CubeMarkerModel)>)> = None;
        for (&row, members) in rows.iter().filter(|(r, _)| !row_to_global.contains_key(r)) {
            let mut pairs = Vec::new();
            for a in members {
                for (&placed_row, placed) in &rows {
                    let Some(row_t) = row_to_global.get(&placed_row) else { continue };
                    for b in placed.iter().filter(|b| b.mast == a.mast) {
                        let b_global = row_t.compose(&to_row[&b.id]);
                        for k in positions_of(&models, a.id).intersection(&positions_of(&models, b.id)) {
                            pairs.push((
                                models[&(a.id, *k)].transformed(&to_row[&a.id]),
                                models[&(b.id, *k)].transformed(&b_global),
                            ));
                        }
                    }
                }
            }
            if best.as_ref().is_none_or(|(_, p)| pairs.len() > p.len()) {
                best = Some((row, pairs));
            }
        }
        let (row, pairs) = best.unwrap();
        let row_ref = rows[&row][0].id;
        if pairs.len() < 3 {
            return Err(Error::InsufficientCorrespondence {
                camera: row_ref,
                shared: pairs.len(),
            });
        }
        let t = robust_align(&pairs, config, pair_seed(config.seed, row_ref, global_ref))?;
        row_to_global.insert(row, t);
    }

    let cameras = topology
        .iter()
        .map(|s| RigCamera {
            id: s.id,
            row: s.row,
            mast: s.mast,
            intrinsics: s.intrinsics,
            extrinsic: if s.id == global_ref {
                RigidTransform::identity()
            } else {
                row_to_global[&slot_of(s.id).row].compose(&to_row[&s.id])
            },
        })
        .collect();
    CameraRig::new(global_ref, cameras)
}

/// Maps every camera's cloud into the rig reference frame and concatenates
/// the valid points. Normals are kept only when every input carries them.
pub fn fuse(clouds: &[(u32, PointCloud)], rig: &CameraRig) -> Result<PointCloud> {
    let mut points = Vec::new();
    let mut normals: Option<Vec<Vector>> = clouds.iter().all(|(_, c)| c.normals.is_some()).then(Vec::new);
    for (id, cloud) in clouds {
        let camera = rig.camera(*id)?;
        let mapped = cloud.transformed(&camera.extrinsic).compacted();
        points.extend(mapped.points);
        if let (Some(all), Some(n)) = (normals.as_mut(), mapped.normals) {
            all.extend(n);
        }
    }
    let fused = PointCloud::unorganized(points);
    match normals {
        Some(n) => fused.with_normals(n),
        None => Ok(fused),
    }
}
