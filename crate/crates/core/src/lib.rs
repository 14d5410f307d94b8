//! Contactless girth, cross-section and volume measurement from depth scans.
//!
//! Meshes are probed with coplanar orbiting rays to obtain section
//! perimeters, areas and slab-integrated volumes. Multi-view depth captures
//! are calibrated with a cube marker, filtered, fused and meshed. Synthetic
//! generators and a benchmark harness reproduce the accuracy experiments.
//! All lengths are in centimeters.

pub mod calib;
pub mod camera;
pub mod cloud;
pub mod error;
pub mod geom;
pub mod harness;
pub mod mesh;
pub mod pipeline;
pub mod probes;
pub mod synth;

pub use error::{Error, Result};
