use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cloud::{load_cloud_ply, save_cloud_ply, PointCloud};
use crate::error::{Error, Result};
use crate::mesh::PlyEncoding;

const MANIFEST: &str = "manifest.json";

/// Marker captures: for every marker position, the cloud each camera
/// recorded, in that camera's frame.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CaptureSet {
    captures: BTreeMap<usize, BTreeMap<u32, PointCloud>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    positions: Vec<ManifestPosition>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ManifestPosition {
    index: usize,
    cameras: Vec<u32>,
}

impl CaptureSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, position: usize, camera: u32, cloud: PointCloud) -> Result<()> {
        let slot = self.captures.entry(position).or_default();
        if slot.contains_key(&camera) {
            return Err(Error::InvalidParam(format!(
                "position {position} already holds a capture from camera {camera}"
            )));
        }
        slot.insert(camera, cloud);
        Ok(())
    }

    pub fn get(&self, position: usize, camera: u32) -> Option<&PointCloud> {
        self.captures.get(&position)?.get(&camera)
    }

    pub fn positions(&self) -> Vec<usize> {
        self.captures.keys().copied().collect()
    }

    pub fn len(&self) -> usize {
        self.captures.values().map(BTreeMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `(position, camera, cloud)` in ascending position then camera order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, u32, &PointCloud)> {
        self.captures
            .iter()
            .flat_map(|(&k, cams)| cams.iter().map(move |(&id, c)| (k, id, c)))
    }

    /// Writes `position_<k>/<camera>.ply` files and `manifest.json`.
    pub fn save_dir(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        let mut manifest = Manifest { positions: Vec::new() };
        for (&k, cams) in &self.captures {
            let sub = dir.join(format!("position_{k}"));
            std::fs::create_dir_all(&sub).map_err(|e| Error::io(&sub, e))?;
            for (id, cloud) in cams {
                save_cloud_ply(cloud, sub.join(format!("{id}.ply")), PlyEncoding::BinaryLittleEndian)?;
            }
            manifest.positions.push(ManifestPosition {
                index: k,
                cameras: cams.keys().copied().collect(),
            });
        }
        let path = dir.join(MANIFEST);
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        std::fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))
    }

    pub fn load_dir(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let path = dir.join(MANIFEST);
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let manifest: Manifest = serde_json::from_str(&text).map_err(|e| Error::parse(&path, e.to_string()))?;
        let mut set = CaptureSet::new();
        for pos in manifest.positions {
            for id in pos.cameras {
                let cloud = load_cloud_ply(dir.join(format!("position_{}", pos.index)).join(format!("{id}.ply")))?;
                set.insert(pos.index, id, cloud)?;
            }
        }
        Ok(set)
    }
}
