use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::RigidTransform;
use crate::camera::Intrinsics;
use crate::error::{Error, Result};
use crate::geom::{Point, Vector};

/// Where a camera sits in the rig: its height level (row) and mast.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraSlot {
    pub id: u32,
    pub row: u32,
    pub mast: u32,
    #[serde(default)]
    pub intrinsics: Intrinsics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RigCamera {
    pub id: u32,
    pub row: u32,
    pub mast: u32,
    pub intrinsics: Intrinsics,
    /// Camera frame to reference frame.
    #[serde(flatten)]
    pub extrinsic: RigidTransform,
}

impl RigCamera {
    pub fn slot(&self) -> CameraSlot {
        CameraSlot {
            id: self.id,
            row: self.row,
            mast: self.mast,
            intrinsics: self.intrinsics,
        }
    }

    /// Optical center in the reference frame.
    pub fn center(&self) -> Point {
        Point::from(*self.extrinsic.translation())
    }
}

/// Calibrated camera network. Serialized as the rig file:
/// `{reference_id, cameras: [{id, row, mast, intrinsics, rotation, translation_cm}]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawRig")]
pub struct CameraRig {
    pub reference_id: u32,
    pub cameras: Vec<RigCamera>,
}

#[derive(Deserialize)]
struct RawRig {
    reference_id: u32,
    cameras: Vec<RigCamera>,
}

impl TryFrom<RawRig> for CameraRig {
    type Error = Error;

    fn try_from(raw: RawRig) -> Result<Self> {
        CameraRig::new(raw.reference_id, raw.cameras)
    }
}

impl CameraRig {
    /// Checks that ids are unique, the reference exists and carries the
    /// identity extrinsic.
    pub fn new(reference_id: u32, mut cameras: Vec<RigCamera>) -> Result<Self> {
        cameras.sort_by_key(|c| c.id);
        let ids: BTreeSet<u32> = cameras.iter().map(|c| c.id).collect();
        if ids.len() != cameras.len() {
            return Err(Error::InvalidParam("camera ids must be unique".into()));
        }
        let reference = cameras
            .iter()
            .find(|c| c.id == reference_id)
            .ok_or(Error::UnknownCamera(reference_id))?;
        if !reference.extrinsic.is_identity(1e-9) {
            return Err(Error::InvalidParam(format!(
                "reference camera {reference_id} must have the identity extrinsic"
            )));
        }
        for c in &cameras {
            c.intrinsics.validate()?;
        }
        Ok(CameraRig { reference_id, cameras })
    }

    pub fn camera(&self, id: u32) -> Result<&RigCamera> {
        self.cameras.iter().find(|c| c.id == id).ok_or(Error::UnknownCamera(id))
    }

    pub fn ids(&self) -> Vec<u32> {
        self.cameras.iter().map(|c| c.id).collect()
    }

    pub fn topology(&self) -> Vec<CameraSlot> {
        self.cameras.iter().map(RigCamera::slot).collect()
    }

    /// Mean direction from the lowest to the highest camera of every mast
    /// holding at least two rows, in the reference frame. Masts are vertical,
    /// so this is the rig's up axis.
    pub fn vertical_axis(&self) -> Option<Vector> {
        let masts: BTreeSet<u32> = self.cameras.iter().map(|c| c.mast).collect();
        let mut sum = Vector::zeros();
        for mast in masts {
            let on_mast: Vec<&RigCamera> = self.cameras.iter().filter(|c| c.mast == mast).collect();
            // rows count down from the top level
            let top = on_mast.iter().min_by_key(|c| (c.row, c.id));
            let bottom = on_mast.iter().max_by_key(|c| (c.row, std::cmp::Reverse(c.id)));
            if let (Some(top), Some(bottom)) = (top, bottom) {
                if top.row != bottom.row {
                    sum += (top.center() - bottom.center()).normalize();
                }
            }
        }
        (sum.norm() > 0.0).then(|| sum.normalize())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::parse(path, e.to_string()))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self).expect("rig serializes");
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }
}
