//! PLY point clouds: ASCII and binary little-endian.

use std::path::Path;

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::pointcloud::PointCloud;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlyFormat {
    Ascii,
    BinaryLittleEndian,
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

    fn read_le(self, b: &[u8]) -> f64 {
        match self {
            Scalar::I8 => b[0] as i8 as f64,
            Scalar::U8 => b[0] as f64,
            Scalar::I16 => i16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::U16 => u16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::I32 => i32::from_le_bytes(b[..4].try_into().unwrap()) as f64,
            Scalar::U32 => u32::from_le_bytes(b[..4].try_into().unwrap()) as f64,
            Scalar::F32 => f32::from_le_bytes(b[..4].try_into().unwrap()) as f64,
            Scalar::F64 => f64::from_le_bytes(b[..8].try_into().unwrap()),
        }
    }
}

#[derive(Debug, Clone)]
enum Property {
    Scalar { name: String, ty: Scalar },
    List { count: Scalar, item: Scalar },
}

#[derive(Debug, Clone)]
struct Element {
    name: String,
    count: usize,
    properties: Vec<Property>,
}

#[derive(Debug)]
struct Header {
    format: PlyFormat,
    elements: Vec<Element>,
    /// Byte offset of the body.
    body_start: usize,
    /// Number of header lines, including `end_header`.
    lines: usize,
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn parse_header(bytes: &[u8]) -> Result<Header> {
    let mut pos = 0;
    let mut line_no = 0;
    let mut format = None;
    let mut elements: Vec<Element> = Vec::new();
    loop {
        let Some(nl) = bytes[pos..].iter().position(|&b| b == b'\n') else {
            return Err(parse_err(line_no + 1, "header ends before end_header"));
        };
        line_no += 1;
        let raw = &bytes[pos..pos + nl];
        pos += nl + 1;
        let line = std::str::from_utf8(raw)
            .map_err(|_| parse_err(line_no, "header line is not valid UTF-8"))?
            .trim_end_matches('\r');
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if line_no == 1 {
            if line.trim() != "ply" {
                return Err(parse_err(1, "missing ply magic"));
            }
            continue;
        }
        match tokens.first().copied() {
            None | Some("comment") | Some("obj_info") => {}
            Some("format") => {
                format = Some(match tokens.get(1).copied() {
                    Some("ascii") => PlyFormat::Ascii,
                    Some("binary_little_endian") => PlyFormat::BinaryLittleEndian,
                    Some("binary_big_endian") => {
                        return Err(Error::UnsupportedFormat("big-endian PLY".into()));
                    }
                    other => return Err(parse_err(line_no, format!("unknown format {other:?}"))),
                });
            }
            Some("element") => {
                let (Some(name), Some(count)) = (tokens.get(1), tokens.get(2)) else {
                    return Err(parse_err(line_no, "element needs a name and a count"));
                };
                let count = count
                    .parse()
                    .map_err(|_| parse_err(line_no, format!("bad element count {count:?}")))?;
                elements.push(Element {
                    name: name.to_string(),
                    count,
                    properties: Vec::new(),
                });
            }
            Some("property") => {
                let Some(el) = elements.last_mut() else {
                    return Err(parse_err(line_no, "property before any element"));
                };
                let prop = if tokens.get(1) == Some(&"list") {
                    let (Some(c), Some(i), Some(_)) = (tokens.get(2), tokens.get(3), tokens.get(4)) else {
                        return Err(parse_err(line_no, "list property needs count type, item type and name"));
                    };
                    let count = Scalar::parse(c).ok_or_else(|| parse_err(line_no, format!("unknown type {c:?}")))?;
                    let item = Scalar::parse(i).ok_or_else(|| parse_err(line_no, format!("unknown type {i:?}")))?;
                    Property::List { count, item }
                } else {
                    let (Some(t), Some(name)) = (tokens.get(1), tokens.get(2)) else {
                        return Err(parse_err(line_no, "property needs a type and a name"));
                    };
                    let ty = Scalar::parse(t).ok_or_else(|| parse_err(line_no, format!("unknown type {t:?}")))?;
                    Property::Scalar {
                        name: name.to_string(),
                        ty,
                    }
                };
                el.properties.push(prop);
            }
            Some("end_header") => break,
            Some(other) => return Err(parse_err(line_no, format!("unexpected header keyword {other:?}"))),
        }
    }
    let format = format.ok_or_else(|| parse_err(line_no, "header has no format line"))?;
    Ok(Header {
        format,
        elements,
        body_start: pos,
        lines: line_no,
    })
}

/// Column positions of x, y, z within the vertex properties.
fn xyz_slots(el: &Element, line: usize) -> Result<[usize; 3]> {
    let find = |axis: &str| {
        el.properties
            .iter()
            .position(|p| matches!(p, Property::Scalar { name, .. } if name == axis))
            .ok_or_else(|| parse_err(line, format!("vertex element has no {axis} property")))
    };
    Ok([find("x")?, find("y")?, find("z")?])
}

fn read_ascii(text: &str, header: &Header) -> Result<Vec<Vector3<f64>>> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (header.lines + i + 1, l));
    let mut points = Vec::new();
    for el in &header.elements {
        let slots = if el.name == "vertex" {
            Some(xyz_slots(el, header.lines)?)
        } else {
            None
        };
        for _ in 0..el.count {
            let (line_no, line) = lines
                .next()
                .ok_or_else(|| parse_err(header.lines, format!("body ends inside element {:?}", el.name)))?;
            let mut tokens = line.split_whitespace();
            let mut values = Vec::with_capacity(el.properties.len());
            for prop in &el.properties {
                let mut next = || {
                    tokens
                        .next()
                        .ok_or_else(|| parse_err(line_no, "too few values"))?
                        .parse::<f64>()
                        .map_err(|e| parse_err(line_no, e.to_string()))
                };
                match prop {
                    Property::Scalar { .. } => values.push(next()?),
                    Property::List { .. } => {
                        let n = next()? as usize;
                        for _ in 0..n {
                            next()?;
                        }
                        values.push(f64::NAN);
                    }
                }
            }
            if let Some([x, y, z]) = slots {
                points.push(Vector3::new(values[x], values[y], values[z]));
            }
        }
    }
    Ok(points)
}

fn read_binary(body: &[u8], header: &Header) -> Result<Vec<Vector3<f64>>> {
    let mut pos = 0;
    let mut points = Vec::new();
    let truncated = |expected: usize| {
        parse_err(
            header.lines,
            format!(
                "binary payload truncated: expected at least {expected} bytes, found {}",
                body.len()
            ),
        )
    };
    for el in &header.elements {
        let fixed: Option<usize> = el
            .properties
            .iter()
            .map(|p| match p {
                Property::Scalar { ty, .. } => Some(ty.size()),
                Property::List { .. } => None,
            })
            .sum();
        if let Some(stride) = fixed {
            let expected = pos + stride * el.count;
            if body.len() < expected {
                return Err(truncated(expected));
            }
        }
        let slots = if el.name == "vertex" {
            Some(xyz_slots(el, header.lines)?)
        } else {
            None
        };
        for _ in 0..el.count {
            let mut values = [0.0; 3];
            for (k, prop) in el.properties.iter().enumerate() {
                match prop {
                    Property::Scalar { ty, .. } => {
                        let end = pos + ty.size();
                        if body.len() < end {
                            return Err(truncated(end));
                        }
                        if let Some(s) = slots {
                            if let Some(axis) = s.iter().position(|&c| c == k) {
                                values[axis] = ty.read_le(&body[pos..end]);
                            }
                        }
                        pos = end;
                    }
                    Property::List { count, item } => {
                        let end = pos + count.size();
                        if body.len() < end {
                            return Err(truncated(end));
                        }
                        let n = count.read_le(&body[pos..end]) as usize;
                        pos = end + n * item.size();
                        if body.len() < pos {
                            return Err(truncated(pos));
                        }
                    }
                }
            }
            if slots.is_some() {
                points.push(Vector3::from(values));
            }
        }
    }
    Ok(points)
}

pub fn parse_ply(bytes: &[u8]) -> Result<PointCloud> {
    let header = parse_header(bytes)?;
    if !header.elements.iter().any(|e| e.name == "vertex") {
        return Err(parse_err(header.lines, "no vertex element"));
    }
    let body = &bytes[header.body_start..];
    let points = match header.format {
        PlyFormat::Ascii => {
            let text = std::str::from_utf8(body).map_err(|_| parse_err(header.lines, "ASCII body is not UTF-8"))?;
            read_ascii(text, &header)?
        }
        PlyFormat::BinaryLittleEndian => read_binary(body, &header)?,
    };
    PointCloud::new(points)
}

pub fn load_ply(path: &Path) -> Result<PointCloud> {
    parse_ply(&std::fs::read(path)?)
}

/// Serializes with `double` coordinates so binary round trips are exact.
/// ASCII output uses the shortest representation that parses back exactly.
pub fn encode_ply(cloud: &PointCloud, format: PlyFormat) -> Vec<u8> {
    let fmt = match format {
        PlyFormat::Ascii => "ascii",
        PlyFormat::BinaryLittleEndian => "binary_little_endian",
    };
    let mut out = format!(
        "ply\nformat {fmt} 1.0\nelement vertex {}\nproperty double x\nproperty double y\nproperty double z\nend_header\n",
        cloud.len()
    )
    .into_bytes();
    for p in cloud.points() {
        match format {
            PlyFormat::Ascii => out.extend_from_slice(format!("{} {} {}\n", p.x, p.y, p.z).as_bytes()),
            PlyFormat::BinaryLittleEndian => {
                for v in p.iter() {
                    out.extend_from_slice(&v.to_le_bytes());
                }
            }
        }
    }
    out
}

pub fn write_ply(path: &Path, cloud: &PointCloud, format: PlyFormat) -> Result<()> {
    super::write_atomic(path, &encode_ply(cloud, format))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_written_ascii() {
        let text = "ply\nformat ascii 1.0\ncomment made by hand\nelement vertex 3\nproperty float x\nproperty float y\nproperty float z\nproperty uchar red\nend_header\n0 0 0 255\n1.5 -2 3 0\n0.25 0.5 0.75 7\n";
        let c = parse_ply(text.as_bytes()).unwrap();
        assert_eq!(c.len(), 3);
        assert_eq!(c.point(1), &Vector3::new(1.5, -2.0, 3.0));
        assert_eq!(c.point(2), &Vector3::new(0.25, 0.5, 0.75));
    }

    #[test]
    fn faces_after_vertices_are_skipped() {
        let text = "ply\nformat ascii 1.0\nelement vertex 3\nproperty double x\nproperty double y\nproperty double z\nelement face 1\nproperty list uchar int vertex_indices\nend_header\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n";
        assert_eq!(parse_ply(text.as_bytes()).unwrap().len(), 3);
    }

    #[test]
    fn binary_float_vertices_with_extra_property() {
        let mut bytes =
            b"ply\nformat binary_little_endian 1.0\nelement vertex 2\nproperty float x\nproperty float y\nproperty float z\nproperty float intensity\nend_header\n"
                .to_vec();
        for v in [1.0f32, 2.0, 3.0, 9.0, -1.0, -2.0, -3.0, 9.0] {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        let c = parse_ply(&bytes).unwrap();
        assert_eq!(c.point(1), &Vector3::new(-1.0, -2.0, -3.0));
    }

    #[test]
    fn round_trips() {
        let c = PointCloud::from_arrays(&[[0.1, 0.2, 0.3], [1e-300, -7.25, 1.0 / 3.0]]).unwrap();
        for f in [PlyFormat::Ascii, PlyFormat::BinaryLittleEndian] {
            let back = parse_ply(&encode_ply(&c, f)).unwrap();
            assert_eq!(back.points(), c.points());
        }
    }

    #[test]
    fn errors() {
        let big = b"ply\nformat binary_big_endian 1.0\nelement vertex 0\nend_header\n";
        assert!(matches!(parse_ply(big), Err(Error::UnsupportedFormat(_))));

        let bad = b"ply\nformat ascii 1.0\nelement vertex x\nend_header\n";
        assert!(matches!(parse_ply(bad), Err(Error::Parse { line: 3, .. })));

        let c = PointCloud::from_arrays(&[[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]]).unwrap();
        let mut bytes = encode_ply(&c, PlyFormat::BinaryLittleEndian);
        bytes.truncate(bytes.len() - 5);
        let err = parse_ply(&bytes).unwrap_err();
        let msg = err.to_string();
        assert!(
            msg.contains("expected at least 48 bytes") && msg.contains("found 43"),
            "{msg}"
        );
    }
}
