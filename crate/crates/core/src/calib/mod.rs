//! Extrinsic calibration of a multi-camera rig from cube-marker captures,
//! and fusion of per-camera clouds into the reference frame.

mod align;
mod calibrate;
mod capture;
mod marker;
mod rig;
mod transform;

pub use align::{procrustes, ransac_align, DEFAULT_INLIER_THRESHOLD_CM, DEFAULT_RANSAC_ITERATIONS};
pub use calibrate::{calibrate_rig, fit_capture_markers, fuse, CalibrationConfig};
pub use capture::CaptureSet;
pub use marker::{
    fit_cube_marker, score_view_pair, score_view_pair_weighted, CubeMarkerModel, DEFAULT_EDGE_LENGTH_CM,
    DEFAULT_VIEW_SCORE_LAMBDA,
};
pub use rig::{CameraRig, CameraSlot, RigCamera};
pub use transform::RigidTransform;
