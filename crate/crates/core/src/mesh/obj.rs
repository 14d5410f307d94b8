//! Wavefront OBJ: `v` and `f` records only.

use std::io::{BufRead, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::geom::Point;

pub(crate) fn read_obj<R: BufRead>(reader: R, path: &Path) -> Result<(Vec<Point>, Vec<[u32; 3]>)> {
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for (line_no, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let line_no = line_no + 1;
        let mut tokens = line.split_whitespace();
        match tokens.next() {
            Some("v") => {
                let coords: Vec<f64> = tokens
                    .take(3)
                    .map(|t| t.parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| Error::parse(path, format!("bad vertex on line {line_no}")))?;
                if coords.len() != 3 {
                    return Err(Error::parse(path, format!("vertex on line {line_no} needs 3 coordinates")));
                }
                vertices.push(Point::new(coords[0], coords[1], coords[2]));
            }
            Some("f") => {
                let idx: Vec<u32> = tokens
                    .map(|t| resolve_index(t, vertices.len()))
                    .collect::<Option<_>>()
                    .ok_or_else(|| Error::parse(path, format!("bad face index on line {line_no}")))?;
                if idx.len() < 3 {
                    return Err(Error::parse(path, format!("face on line {line_no} has fewer than 3 vertices")));
                }
                for j in 1..idx.len() - 1 {
                    triangles.push([idx[0], idx[j], idx[j + 1]]);
                }
            }
            _ => {}
        }
    }
    Ok((vertices, triangles))
}

/// Resolves `i`, `i/t`, `i//n` or `i/t/n` (1-based, negative = relative).
fn resolve_index(token: &str, vertex_count: usize) -> Option<u32> {
    let raw: i64 = token.split('/').next()?.parse().ok()?;
    let idx = match raw {
        0 => return None,
        r if r > 0 => r - 1,
        r => vertex_count as i64 + r,
    };
    u32::try_from(idx).ok()
}

pub(crate) fn write_obj<W: Write>(mut w: W, vertices: &[Point], triangles: &[[u32; 3]]) -> std::io::Result<()> {
    for p in vertices {
        writeln!(w, "v {} {} {}", p.x, p.y, p.z)?;
    }
    for t in triangles {
        writeln!(w, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1)?;
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    #[test]
    fn quad_becomes_two_triangles() {
        let text = "# square\nv 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nvn 0 0 1\nf 1//1 2//1 3//1 4//1\n";
        let (v, t) = read_obj(Cursor::new(text), Path::new("q.obj")).unwrap();
        assert_eq!(v.len(), 4);
        assert_eq!(t, vec![[0, 1, 2], [0, 2, 3]]);
    }

    #[test]
    fn negative_indices() {
        let text = "v 0 0 0\nv 1 0 0\nv 0 1 0\nf -3 -2 -1\n";
        let (_, t) = read_obj(Cursor::new(text), Path::new("n.obj")).unwrap();
        assert_eq!(t, vec![[0, 1, 2]]);
    }

    #[test]
    fn garbage_vertex_is_parse_error() {
        let err = read_obj(Cursor::new("v 0 zero 0\n"), Path::new("g.obj")).unwrap_err();
        assert!(matches!(err, Error::Parse { .. }));
    }
}
