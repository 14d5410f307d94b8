//! Ground-truth generators: parametric solids with closed-form section
//! measurements, a pinhole depth-camera simulator and the preset camera rigs.

mod depth;
mod marker;
mod rig;
mod shapes;

pub use depth::{look_at, simulate_depth, Scene, VirtualCamera, MAX_RANGE_CM};
pub use marker::{marker_poses, simulate_marker_captures};
pub use rig::{
    camera_heights, mast_camera_pose, rig_preset, rig_preset_with_world, AIM_HEIGHT_CM, MAST_DISTANCE_CM, PRESETS,
};
pub use shapes::{gen_shape, Shape, ShapeSpec, DEFAULT_SEGMENTS, MIN_SEGMENTS};
