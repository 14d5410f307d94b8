use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use super::obj::{read_obj, write_obj};
use super::ply::{read_ply, write_ply, PlyData, PlyEncoding};
use super::TriangleMesh;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFormat {
    /// PLY; the encoding only matters when writing.
    Ply(PlyEncoding),
    Obj,
}

impl MeshFormat {
    /// Guesses from the file extension (`.ply` writes binary).
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "ply" => Some(MeshFormat::Ply(PlyEncoding::BinaryLittleEndian)),
            "obj" => Some(MeshFormat::Obj),
            _ => None,
        }
    }
}

/// Loads a triangle mesh. Polygons are fan-triangulated and degenerate
/// triangles dropped; a file without triangles is [`Error::EmptyMesh`].
pub fn load_mesh(path: impl AsRef<Path>, format: MeshFormat) -> Result<TriangleMesh> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    mesh_from_bytes(&bytes, format, &path.display().to_string())
}

pub fn save_mesh(mesh: &TriangleMesh, path: impl AsRef<Path>, format: MeshFormat) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let writer = BufWriter::new(file);
    match format {
        MeshFormat::Ply(encoding) => {
            let data = PlyData {
                vertices: mesh.vertices().to_vec(),
                normals: mesh.normals().map(<[_]>::to_vec),
                triangles: mesh.triangles().to_vec(),
                comments: vec!["units cm".to_string()],
            };
            write_ply(writer, &data, encoding)
        }
        MeshFormat::Obj => write_obj(writer, mesh.vertices(), mesh.triangles()),
    }
    .map_err(|e| Error::io(path, e))
}

/// Serializes a mesh as binary PLY into memory.
pub fn mesh_to_ply_bytes(mesh: &TriangleMesh) -> Vec<u8> {
    let data = PlyData {
        vertices: mesh.vertices().to_vec(),
        normals: mesh.normals().map(<[_]>::to_vec),
        triangles: mesh.triangles().to_vec(),
        comments: vec!["units cm".to_string()],
    };
    let mut out = Vec::new();
    write_ply(&mut out, &data, PlyEncoding::BinaryLittleEndian).expect("writing to memory");
    out
}

/// Parses a PLY or OBJ mesh from memory.
pub fn mesh_from_bytes(bytes: &[u8], format: MeshFormat, label: &str) -> Result<TriangleMesh> {
    let path = Path::new(label);
    let mesh = match format {
        MeshFormat::Ply(_) => {
            let data = read_ply(bytes, path)?;
            TriangleMesh::with_normals(data.vertices, data.triangles, data.normals)
        }
        MeshFormat::Obj => {
            let (v, t) = read_obj(bytes, path)?;
            TriangleMesh::new(v, t)
        }
    }
    .map_err(|e| match e {
        Error::InvalidParam(m) => Error::parse(path, m),
        other => other,
    })?;
    if mesh.is_empty() {
        return Err(Error::EmptyMesh);
    }
    Ok(mesh)
}
