//! OBJ / STL / PLY readers.

use std::path::Path;
use std::str::FromStr;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::SurfaceModel;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeshFormat {
    Obj,
    Stl,
    Ply,
}

impl MeshFormat {
    pub fn from_path(path: &Path) -> Option<Self> {
        let ext = path.extension()?.to_str()?.to_ascii_lowercase();
        match ext.as_str() {
            "obj" => Some(MeshFormat::Obj),
            "stl" => Some(MeshFormat::Stl),
            "ply" => Some(MeshFormat::Ply),
            _ => None,
        }
    }
}

impl FromStr for MeshFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "obj" => Ok(MeshFormat::Obj),
            "stl" => Ok(MeshFormat::Stl),
            "ply" => Ok(MeshFormat::Ply),
            other => Err(Error::Parameter(format!("unknown mesh format '{other}'"))),
        }
    }
}

/// Geometry as read from disk, before deduplication and centring.
#[derive(Debug, Clone, Default)]
pub struct RawMesh {
    pub positions: Vec<Vector3<f64>>,
    pub triangles: Vec<[usize; 3]>,
    /// Per-position normals, when the file provides them.
    pub normals: Option<Vec<Vector3<f64>>>,
}

pub fn load_mesh(path: impl AsRef<Path>, format: MeshFormat) -> Result<SurfaceModel> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    SurfaceModel::from_raw(parse_mesh(&bytes, format)?)
}

pub fn parse_mesh(bytes: &[u8], format: MeshFormat) -> Result<RawMesh> {
    match format {
        MeshFormat::Obj => parse_obj(as_text("OBJ", bytes)?),
        MeshFormat::Ply => parse_ply(as_text("PLY", bytes)?),
        MeshFormat::Stl => parse_stl(bytes),
    }
}

fn as_text<'a>(format: &'static str, bytes: &'a [u8]) -> Result<&'a str> {
    std::str::from_utf8(bytes).map_err(|e| Error::parse(format, format!("byte {}", e.valid_up_to()), "invalid UTF-8"))
}

fn num<T: FromStr>(format: &'static str, line: usize, tok: Option<&str>, what: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| Error::parse(format, format!("line {line}"), format!("missing {what}")))?;
    tok.parse()
        .map_err(|_| Error::parse(format, format!("line {line}"), format!("bad {what} '{tok}'")))
}

fn vec3<'a>(format: &'static str, line: usize, it: &mut impl Iterator<Item = &'a str>) -> Result<Vector3<f64>> {
    Ok(Vector3::new(
        num(format, line, it.next(), "x")?,
        num(format, line, it.next(), "y")?,
        num(format, line, it.next(), "z")?,
    ))
}

fn parse_obj(text: &str) -> Result<RawMesh> {
    let mut positions = Vec::new();
    let mut file_normals = Vec::new();
    let mut corners: Vec<Vec<(usize, Option<usize>)>> = Vec::new();

    let resolve = |line: usize, raw: &str, len: usize, what: &str| -> Result<usize> {
        let i: i64 = raw
            .parse()
            .map_err(|_| Error::parse("OBJ", format!("line {line}"), format!("bad {what} index '{raw}'")))?;
        let idx = if i > 0 { i - 1 } else { len as i64 + i };
        if i == 0 || idx < 0 || idx as usize >= len {
            return Err(Error::parse(
                "OBJ",
                format!("line {line}"),
                format!("{what} index {i} out of range"),
            ));
        }
        Ok(idx as usize)
    };

    for (ln, raw_line) in text.lines().enumerate() {
        let line = ln + 1;
        let content = raw_line.split('#').next().unwrap_or("");
        let mut it = content.split_whitespace();
        match it.next() {
            Some("v") => positions.push(vec3("OBJ", line, &mut it)?),
            Some("vn") => file_normals.push(vec3("OBJ", line, &mut it)?),
            Some("f") => {
                let mut face = Vec::new();
                for tok in it {
                    let mut parts = tok.split('/');
                    let v = resolve(line, parts.next().unwrap_or(""), positions.len(), "vertex")?;
                    let _tex = parts.next();
                    let n = match parts.next() {
                        Some(s) if !s.is_empty() => Some(resolve(line, s, file_normals.len(), "normal")?),
                        _ => None,
                    };
                    face.push((v, n));
                }
                if face.len() < 3 {
                    return Err(Error::parse(
                        "OBJ",
                        format!("line {line}"),
                        "face with fewer than 3 vertices",
                    ));
                }
                corners.push(face);
            }
            _ => {}
        }
    }

    let mut triangles = Vec::new();
    let mut normals = vec![Vector3::zeros(); positions.len()];
    let mut any_normal = false;
    for face in &corners {
        for k in 1..face.len() - 1 {
            triangles.push([face[0].0, face[k].0, face[k + 1].0]);
        }
        for &(v, n) in face {
            if let Some(n) = n {
                normals[v] += file_normals[n];
                any_normal = true;
            }
        }
    }
    Ok(RawMesh {
        positions,
        triangles,
        normals: any_normal.then_some(normals),
    })
}

fn parse_stl(bytes: &[u8]) -> Result<RawMesh> {
    if bytes.len() >= 84 {
        let count = u32::from_le_bytes([bytes[80], bytes[81], bytes[82], bytes[83]]) as usize;
        if bytes.len() == 84 + count * 50 {
            return parse_stl_binary(bytes, count);
        }
    }
    let text = as_text("STL", bytes)?;
    if text.trim_start().starts_with("solid") {
        parse_stl_ascii(text)
    } else {
        Err(Error::parse(
            "STL",
            "byte 0",
            "neither ASCII ('solid' header) nor a binary file of consistent length",
        ))
    }
}

fn parse_stl_binary(bytes: &[u8], count: usize) -> Result<RawMesh> {
    let mut positions = Vec::with_capacity(count * 3);
    let mut triangles = Vec::with_capacity(count);
    let f = |off: usize| f32::from_le_bytes([bytes[off], bytes[off + 1], bytes[off + 2], bytes[off + 3]]) as f64;
    for t in 0..count {
        let base = 84 + t * 50 + 12;
        for k in 0..3 {
            let o = base + k * 12;
            let p = Vector3::new(f(o), f(o + 4), f(o + 8));
            if !p.iter().all(|c| c.is_finite()) {
                return Err(Error::parse("STL", format!("byte {o}"), "non-finite coordinate"));
            }
            positions.push(p);
        }
        triangles.push([3 * t, 3 * t + 1, 3 * t + 2]);
    }
    Ok(RawMesh {
        positions,
        triangles,
        normals: None,
    })
}

fn parse_stl_ascii(text: &str) -> Result<RawMesh> {
    let mut positions = Vec::new();
    let mut triangles = Vec::new();
    let mut pending = 0usize;
    for (ln, raw_line) in text.lines().enumerate() {
        let line = ln + 1;
        let mut it = raw_line.split_whitespace();
        match it.next() {
            Some("vertex") => {
                positions.push(vec3("STL", line, &mut it)?);
                pending += 1;
            }
            Some("endloop") => {
                if pending != 3 {
                    return Err(Error::parse(
                        "STL",
                        format!("line {line}"),
                        format!("facet with {pending} vertices"),
                    ));
                }
                let n = positions.len();
                triangles.push([n - 3, n - 2, n - 1]);
                pending = 0;
            }
            _ => {}
        }
    }
    Ok(RawMesh {
        positions,
        triangles,
        normals: None,
    })
}

#[derive(Debug)]
struct PlyElement {
    name: String,
    count: usize,
    props: Vec<String>,
    list_prop: Option<String>,
}

fn parse_ply(text: &str) -> Result<RawMesh> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, l)) if l.trim() == "ply" => {}
        _ => return Err(Error::parse("PLY", "line 1", "missing 'ply' magic")),
    }
    let mut elements: Vec<PlyElement> = Vec::new();
    let mut header_done = false;
    for (ln, l) in lines.by_ref() {
        let line = ln + 1;
        let toks: Vec<&str> = l.split_whitespace().collect();
        match toks.as_slice() {
            ["format", fmt, ..] => {
                if *fmt != "ascii" {
                    return Err(Error::parse(
                        "PLY",
                        format!("line {line}"),
                        format!("unsupported format '{fmt}'"),
                    ));
                }
            }
            ["element", name, count] => elements.push(PlyElement {
                name: name.to_string(),
                count: num("PLY", line, Some(count), "element count")?,
                props: Vec::new(),
                list_prop: None,
            }),
            ["property", "list", _, _, name] => {
                let el = elements
                    .last_mut()
                    .ok_or_else(|| Error::parse("PLY", format!("line {line}"), "property before element"))?;
                el.list_prop = Some(name.to_string());
            }
            ["property", _, name] => {
                let el = elements
                    .last_mut()
                    .ok_or_else(|| Error::parse("PLY", format!("line {line}"), "property before element"))?;
                el.props.push(name.to_string());
            }
            ["end_header"] => {
                header_done = true;
                break;
            }
            _ => {}
        }
    }
    if !header_done {
        return Err(Error::parse("PLY", "header", "missing end_header"));
    }

    let mut positions = Vec::new();
    let mut normals = Vec::new();
    let mut has_normals = false;
    let mut triangles = Vec::new();
    for el in &elements {
        let col = |name: &str| el.props.iter().position(|p| p == name);
        for _ in 0..el.count {
            let (ln, l) = lines
                .next()
                .ok_or_else(|| Error::parse("PLY", "end of file", format!("truncated '{}' element", el.name)))?;
            let line = ln + 1;
            let vals: Vec<&str> = l.split_whitespace().collect();
            match el.name.as_str() {
                "vertex" => {
                    let get = |name: &str| -> Result<f64> {
                        let c = col(name).ok_or_else(|| {
                            Error::parse("PLY", format!("line {line}"), format!("no '{name}' property"))
                        })?;
                        num("PLY", line, vals.get(c).copied(), name)
                    };
                    positions.push(Vector3::new(get("x")?, get("y")?, get("z")?));
                    if col("nx").is_some() {
                        has_normals = true;
                        normals.push(Vector3::new(get("nx")?, get("ny")?, get("nz")?));
                    }
                }
                "face" => {
                    let n: usize = num("PLY", line, vals.first().copied(), "face size")?;
                    if n < 3 || vals.len() < n + 1 {
                        return Err(Error::parse("PLY", format!("line {line}"), "malformed face"));
                    }
                    let idx: Vec<usize> = (0..n)
                        .map(|k| num("PLY", line, Some(vals[k + 1]), "vertex index"))
                        .collect::<Result<_>>()?;
                    for k in 1..n - 1 {
                        triangles.push([idx[0], idx[k], idx[k + 1]]);
                    }
                }
                _ => {}
            }
        }
    }
    Ok(RawMesh {
        positions,
        triangles,
        normals: has_normals.then_some(normals),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn obj_negative_indices_and_quads() {
        let src = "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf -4 -3 -2 -1\n";
        let m = parse_obj(src).unwrap();
        assert_eq!(m.triangles, vec![[0, 1, 2], [0, 2, 3]]);
        assert!(m.normals.is_none());
    }

    #[test]
    fn obj_errors_carry_line_numbers() {
        let err = parse_obj("v 0 0 0\nv 1 0 0\nv 1 x 0\n").unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
        let err = parse_obj("v 0 0 0\nf 1 2 3\n").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn ply_binary_is_rejected() {
        let err = parse_ply("ply\nformat binary_little_endian 1.0\nend_header\n").unwrap_err();
        assert!(err.to_string().contains("line 2"));
    }

    #[test]
    fn stl_garbage_is_rejected() {
        assert!(parse_stl(b"not an stl").is_err());
    }
}
