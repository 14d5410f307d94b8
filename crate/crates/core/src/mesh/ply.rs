//! PLY 1.0 reader and writer (`ascii` and `binary_little_endian`).
//!
//! Reads `vertex` elements (x, y, z and optional nx, ny, nz) and `face`
//! elements with a `vertex_indices`/`vertex_index` list. Other elements and
//! properties are skipped. Polygons are fan-triangulated.

use std::io::{BufRead, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::geom::{Point, Vector};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlyEncoding {
    Ascii,
    BinaryLittleEndian,
}

/// Raw contents of a PLY file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PlyData {
    pub vertices: Vec<Point>,
    pub normals: Option<Vec<Vector>>,
    pub triangles: Vec<[u32; 3]>,
    pub comments: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Scalar {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl Scalar {
    fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "char" | "int8" => Scalar::I8,
            "uchar" | "uint8" => Scalar::U8,
            "short" | "int16" => Scalar::I16,
            "ushort" | "uint16" => Scalar::U16,
            "int" | "int32" => Scalar::I32,
            "uint" | "uint32" => Scalar::U32,
            "float" | "float32" => Scalar::F32,
            "double" | "float64" => Scalar::F64,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            Scalar::I8 | Scalar::U8 => 1,
            Scalar::I16 | Scalar::U16 => 2,
            Scalar::I32 | Scalar::U32 | Scalar::F32 => 4,
            Scalar::F64 => 8,
        }
    }

    fn decode(self, b: &[u8]) -> f64 {
        match self {
            Scalar::I8 => b[0] as i8 as f64,
            Scalar::U8 => b[0] as f64,
            Scalar::I16 => i16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::U16 => u16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::I32 => i32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Scalar::U32 => u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Scalar::F32 => f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Scalar::F64 => f64::from_le_bytes(b[..8].try_into().unwrap()),
        }
    }
}

#[derive(Debug, Clone)]
enum PropertyKind {
    Scalar(Scalar),
    List { count: Scalar, item: Scalar },
}

#[derive(Debug, Clone)]
struct Property {
    name: String,
    kind: PropertyKind,
}

#[derive(Debug, Clone)]
struct Element {
    name: String,
    count: usize,
    properties: Vec<Property>,
}

struct Header {
    encoding: PlyEncoding,
    elements: Vec<Element>,
    comments: Vec<String>,
}

fn read_header<R: BufRead>(reader: &mut R, path: &Path) -> Result<Header> {
    let err = |m: String| Error::parse(path, m);
    let mut line = String::new();
    let next_line = |reader: &mut R, line: &mut String| -> Result<bool> {
        line.clear();
        let n = reader.read_line(line).map_err(|e| Error::io(path, e))?;
        Ok(n > 0)
    };
    if !next_line(reader, &mut line)? || line.trim_end() != "ply" {
        return Err(err("missing 'ply' magic".into()));
    }
    let mut encoding = None;
    let mut elements: Vec<Element> = Vec::new();
    let mut comments = Vec::new();
    loop {
        if !next_line(reader, &mut line)? {
            return Err(err("header not terminated by end_header".into()));
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        match tokens.as_slice() {
            [] => continue,
            ["end_header"] => break,
            ["comment", rest @ ..] => comments.push(rest.join(" ")),
            ["obj_info", ..] => {}
            ["format", fmt, version] => {
                if *version != "1.0" {
                    return Err(err(format!("unsupported PLY version {version}")));
                }
                encoding = Some(match *fmt {
                    "ascii" => PlyEncoding::Ascii,
                    "binary_little_endian" => PlyEncoding::BinaryLittleEndian,
                    other => return Err(err(format!("unsupported PLY format {other}"))),
                });
            }
            ["element", name, count] => {
                let count = count
                    .parse()
                    .map_err(|_| err(format!("bad element count {count:?}")))?;
                elements.push(Element {
                    name: name.to_string(),
                    count,
                    properties: Vec::new(),
                });
            }
            ["property", "list", count, item, name] => {
                let element = elements
                    .last_mut()
                    .ok_or_else(|| err("property before element".into()))?;
                let (Some(count), Some(item)) = (Scalar::parse(count), Scalar::parse(item)) else {
                    return Err(err(format!("bad list property types in {:?}", line.trim())));
                };
                element.properties.push(Property {
                    name: name.to_string(),
                    kind: PropertyKind::List { count, item },
                });
            }
            ["property", ty, name] => {
                let element = elements
                    .last_mut()
                    .ok_or_else(|| err("property before element".into()))?;
                let ty = Scalar::parse(ty).ok_or_else(|| err(format!("unknown property type {ty}")))?;
                element.properties.push(Property {
                    name: name.to_string(),
                    kind: PropertyKind::Scalar(ty),
                });
            }
            _ => return Err(err(format!("unrecognized header line {:?}", line.trim()))),
        }
    }
    let encoding = encoding.ok_or_else(|| err("missing format line".into()))?;
    Ok(Header { encoding, elements, comments })
}

/// Source of property values, independent of the encoding.
trait ValueSource {
    fn scalar(&mut self, ty: Scalar) -> Result<f64>;
    fn end_record(&mut self) -> Result<()>;
}

struct AsciiSource<'a, R: BufRead> {
    reader: R,
    path: &'a Path,
    tokens: std::vec::IntoIter<String>,
    line_no: usize,
}

impl<R: BufRead> AsciiSource<'_, R> {
    fn fill(&mut self) -> Result<()> {
        loop {
            let mut line = String::new();
            let n = self.reader.read_line(&mut line).map_err(|e| Error::io(self.path, e))?;
            if n == 0 {
                return Err(Error::parse(self.path, "unexpected end of file in element data"));
            }
            self.line_no += 1;
            let tokens: Vec<String> = line.split_whitespace().map(str::to_string).collect();
            if !tokens.is_empty() {
                self.tokens = tokens.into_iter();
                return Ok(());
            }
        }
    }
}

impl<R: BufRead> ValueSource for AsciiSource<'_, R> {
    fn scalar(&mut self, _ty: Scalar) -> Result<f64> {
        if self.tokens.len() == 0 {
            self.fill()?;
        }
        let token = self.tokens.next().unwrap();
        token.parse::<f64>().map_err(|_| {
            Error::parse(self.path, format!("bad number {token:?} on data line {}", self.line_no))
        })
    }

    fn end_record(&mut self) -> Result<()> {
        if self.tokens.len() != 0 {
            return Err(Error::parse(
                self.path,
                format!("trailing values on data line {}", self.line_no),
            ));
        }
        Ok(())
    }
}

struct BinarySource<'a, R: Read> {
    reader: R,
    path: &'a Path,
}

impl<R: Read> ValueSource for BinarySource<'_, R> {
    fn scalar(&mut self, ty: Scalar) -> Result<f64> {
        let mut buf = [0u8; 8];
        self.reader.read_exact(&mut buf[..ty.size()]).map_err(|e| {
            if e.kind() == std::io::ErrorKind::UnexpectedEof {
                Error::parse(self.path, "unexpected end of file in binary element data")
            } else {
                Error::io(self.path, e)
            }
        })?;
        Ok(ty.decode(&buf))
    }

    fn end_record(&mut self) -> Result<()> {
        Ok(())
    }
}

fn read_body(header: &Header, source: &mut dyn ValueSource, path: &Path) -> Result<PlyData> {
    let mut data = PlyData {
        comments: header.comments.clone(),
        ..PlyData::default()
    };
    for element in &header.elements {
        match element.name.as_str() {
            "vertex" => read_vertices(element, source, path, &mut data)?,
            "face" => read_faces(element, source, path, &mut data)?,
            _ => {
                for _ in 0..element.count {
                    skip_record(element, source)?;
                }
            }
        }
    }
    Ok(data)
}

fn skip_record(element: &Element, source: &mut dyn ValueSource) -> Result<()> {
    for p in &element.properties {
        match p.kind {
            PropertyKind::Scalar(ty) => {
                source.scalar(ty)?;
            }
            PropertyKind::List { count, item } => {
                let n = source.scalar(count)? as usize;
                for _ in 0..n {
                    source.scalar(item)?;
                }
            }
        }
    }
    source.end_record()
}

fn read_vertices(
    element: &Element,
    source: &mut dyn ValueSource,
    path: &Path,
    data: &mut PlyData,
) -> Result<()> {
    let slot = |name: &str| element.properties.iter().position(|p| p.name == name);
    let (Some(ix), Some(iy), Some(iz)) = (slot("x"), slot("y"), slot("z")) else {
        return Err(Error::parse(path, "vertex element lacks x, y, z"));
    };
    let normal_slots = match (slot("nx"), slot("ny"), slot("nz")) {
        (Some(a), Some(b), Some(c)) => Some([a, b, c]),
        _ => None,
    };
    let mut normals = normal_slots.map(|_| Vec::with_capacity(element.count));
    data.vertices.reserve(element.count);
    let mut values = vec![0.0; element.properties.len()];
    for _ in 0..element.count {
        for (k, p) in element.properties.iter().enumerate() {
            values[k] = match p.kind {
                PropertyKind::Scalar(ty) => source.scalar(ty)?,
                PropertyKind::List { count, item } => {
                    let n = source.scalar(count)? as usize;
                    for _ in 0..n {
                        source.scalar(item)?;
                    }
                    0.0
                }
            };
        }
        source.end_record()?;
        data.vertices.push(Point::new(values[ix], values[iy], values[iz]));
        if let (Some(normals), Some([a, b, c])) = (normals.as_mut(), normal_slots) {
            normals.push(Vector::new(values[a], values[b], values[c]));
        }
    }
    data.normals = normals;
    Ok(())
}

fn read_faces(
    element: &Element,
    source: &mut dyn ValueSource,
    path: &Path,
    data: &mut PlyData,
) -> Result<()> {
    let index_slot = element
        .properties
        .iter()
        .position(|p| {
            matches!(p.kind, PropertyKind::List { .. })
                && (p.name == "vertex_indices" || p.name == "vertex_index")
        })
        .ok_or_else(|| Error::parse(path, "face element lacks a vertex_indices list"))?;
    let mut polygon = Vec::new();
    for face in 0..element.count {
        for (k, p) in element.properties.iter().enumerate() {
            match p.kind {
                PropertyKind::Scalar(ty) => {
                    source.scalar(ty)?;
                }
                PropertyKind::List { count, item } => {
                    let n = source.scalar(count)? as usize;
                    polygon.clear();
                    for _ in 0..n {
                        polygon.push(source.scalar(item)?);
                    }
                    if k == index_slot {
                        if n < 3 {
                            return Err(Error::parse(path, format!("face {face} has {n} vertices")));
                        }
                        let idx: Vec<u32> = polygon
                            .iter()
                            .map(|&v| {
                                if v < 0.0 || v.fract() != 0.0 || v > u32::MAX as f64 {
                                    Err(Error::parse(path, format!("bad vertex index {v} in face {face}")))
                                } else {
                                    Ok(v as u32)
                                }
                            })
                            .collect::<Result<_>>()?;
                        for j in 1..idx.len() - 1 {
                            data.triangles.push([idx[0], idx[j], idx[j + 1]]);
                        }
                    }
                }
            }
        }
        source.end_record()?;
    }
    Ok(())
}

/// Reads a PLY stream. `path` is used for diagnostics only.
pub fn read_ply<R: BufRead>(mut reader: R, path: &Path) -> Result<PlyData> {
    let header = read_header(&mut reader, path)?;
    let data = match header.encoding {
        PlyEncoding::Ascii => {
            let mut source = AsciiSource {
                reader: &mut reader,
                path,
                tokens: Vec::new().into_iter(),
                line_no: 0,
            };
            let data = read_body(&header, &mut source, path)?;
            source.end_record()?;
            data
        }
        PlyEncoding::BinaryLittleEndian => {
            let mut source = BinarySource { reader: &mut reader, path };
            read_body(&header, &mut source, path)?
        }
    };
    Ok(data)
}

/// Writes vertices (as doubles), optional normals and triangles.
pub fn write_ply<W: Write>(mut w: W, data: &PlyData, encoding: PlyEncoding) -> std::io::Result<()> {
    let format = match encoding {
        PlyEncoding::Ascii => "ascii",
        PlyEncoding::BinaryLittleEndian => "binary_little_endian",
    };
    writeln!(w, "ply")?;
    writeln!(w, "format {format} 1.0")?;
    for c in &data.comments {
        writeln!(w, "comment {c}")?;
    }
    writeln!(w, "element vertex {}", data.vertices.len())?;
    for axis in ["x", "y", "z"] {
        writeln!(w, "property double {axis}")?;
    }
    if data.normals.is_some() {
        for axis in ["nx", "ny", "nz"] {
            writeln!(w, "property double {axis}")?;
        }
    }
    if !data.triangles.is_empty() {
        writeln!(w, "element face {}", data.triangles.len())?;
        writeln!(w, "property list uchar int vertex_indices")?;
    }
    writeln!(w, "end_header")?;
    let normals = data.normals.as_deref();
    match encoding {
        PlyEncoding::Ascii => {
            for (i, p) in data.vertices.iter().enumerate() {
                write!(w, "{} {} {}", p.x, p.y, p.z)?;
                if let Some(n) = normals {
                    write!(w, " {} {} {}", n[i].x, n[i].y, n[i].z)?;
                }
                writeln!(w)?;
            }
            for t in &data.triangles {
                writeln!(w, "3 {} {} {}", t[0], t[1], t[2])?;
            }
        }
        PlyEncoding::BinaryLittleEndian => {
            for (i, p) in data.vertices.iter().enumerate() {
                for c in p.iter() {
                    w.write_all(&c.to_le_bytes())?;
                }
                if let Some(n) = normals {
                    for c in n[i].iter() {
                        w.write_all(&c.to_le_bytes())?;
                    }
                }
            }
            for t in &data.triangles {
                w.write_all(&[3u8])?;
                for &i in t {
                    w.write_all(&(i as i32).to_le_bytes())?;
                }
            }
        }
    }
    w.flush()
}
