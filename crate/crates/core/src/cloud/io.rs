//! Cloud files: PLY (points and optional normals) and a raw organized depth
//! format.
//!
//! The raw format is one line of JSON ([`RawHeader`]) terminated by `\n`,
//! followed by `width * height` little-endian `f32` depths in row-major
//! pixel order. Invalid pixels are stored as NaN.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::PointCloud;
use crate::camera::Intrinsics;
use crate::error::{Error, Result};
use crate::geom::Point;
use crate::mesh::{read_ply, write_ply, PlyData, PlyEncoding};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RawHeader {
    pub width: u32,
    pub height: u32,
    pub intrinsics: Intrinsics,
    pub sensor_origin: [f64; 3],
}

pub fn load_cloud_ply(path: impl AsRef<Path>) -> Result<PointCloud> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let data = read_ply(BufReader::new(file), path)?;
    let mut cloud = PointCloud::unorganized(data.vertices);
    if let Some(normals) = data.normals {
        cloud = cloud.with_normals(normals)?;
    }
    Ok(cloud)
}

/// Writes the valid points (and normals) of a cloud.
pub fn save_cloud_ply(cloud: &PointCloud, path: impl AsRef<Path>, encoding: PlyEncoding) -> Result<()> {
    let path = path.as_ref();
    let compact = cloud.compacted();
    let data = PlyData {
        vertices: compact.points,
        normals: compact.normals,
        triangles: Vec::new(),
        comments: vec!["units cm".to_string()],
    };
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_ply(BufWriter::new(file), &data, encoding).map_err(|e| Error::io(path, e))
}

pub fn save_organized_raw(cloud: &PointCloud, intrinsics: &Intrinsics, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let grid = cloud.require_grid()?;
    if grid.width != intrinsics.width as usize || grid.height != intrinsics.height as usize {
        return Err(Error::InvalidParam("grid does not match intrinsics resolution".into()));
    }
    let header = RawHeader {
        width: intrinsics.width,
        height: intrinsics.height,
        intrinsics: *intrinsics,
        sensor_origin: cloud.sensor_origin.coords.into(),
    };
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let write = |w: &mut BufWriter<File>| -> std::io::Result<()> {
        serde_json::to_writer(&mut *w, &header)?;
        w.write_all(b"\n")?;
        for i in 0..cloud.len() {
            let d = if cloud.is_valid(i) { cloud.depth(i) as f32 } else { f32::NAN };
            w.write_all(&d.to_le_bytes())?;
        }
        w.flush()
    };
    write(&mut w).map_err(|e| Error::io(path, e))
}

pub fn load_organized_raw(path: impl AsRef<Path>) -> Result<(PointCloud, Intrinsics)> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = BufReader::new(file);
    let mut line = String::new();
    reader.read_line(&mut line).map_err(|e| Error::io(path, e))?;
    let header: RawHeader =
        serde_json::from_str(&line).map_err(|e| Error::parse(path, format!("bad header: {e}")))?;
    let k = header.intrinsics;
    k.validate()?;
    if header.width != k.width || header.height != k.height {
        return Err(Error::parse(path, "header size disagrees with intrinsics"));
    }
    let n = k.pixel_count();
    let mut bytes = vec![0u8; 4 * n];
    reader.read_exact(&mut bytes).map_err(|_| Error::parse(path, "truncated depth payload"))?;
    let origin = Point::from(nalgebra::Vector3::from(header.sensor_origin));
    let points = bytes
        .chunks_exact(4)
        .enumerate()
        .map(|(i, b)| {
            let z = f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64;
            if z.is_finite() && z > 0.0 {
                let (u, v) = ((i % k.width as usize) as u32, (i / k.width as usize) as u32);
                origin + k.pixel_ray(u, v) * z
            } else {
                PointCloud::INVALID
            }
        })
        .collect();
    let cloud = PointCloud::organized(k.width as usize, k.height as usize, points)?.with_sensor_origin(origin);
    Ok((cloud, k))
}
