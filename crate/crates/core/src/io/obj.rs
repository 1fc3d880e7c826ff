use std::fs;
use std::io::Write;
use std::path::Path;

use super::io_error;
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::mesh::SurfaceMesh;

struct ObjData {
    vertices: Vec<[f64; 3]>,
    faces: Vec<(usize, Vec<usize>)>,
    lines: Vec<(usize, Vec<usize>)>,
}

fn parse(text: &str, path: &str) -> Result<ObjData> {
    let err = |line: usize, message: String| Error::Parse { path: path.to_string(), line, message };
    let mut data = ObjData { vertices: Vec::new(), faces: Vec::new(), lines: Vec::new() };
    for (k, raw) in text.lines().enumerate() {
        let line_no = k + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        let mut tokens = line.split_whitespace();
        let Some(tag) = tokens.next() else { continue };
        match tag {
            "v" => {
                let coords: Vec<f64> = tokens
                    .take(3)
                    .map(|t| t.parse::<f64>().map_err(|e| err(line_no, format!("bad coordinate {t:?}: {e}"))))
                    .collect::<Result<_>>()?;
                if coords.len() < 2 {
                    return Err(err(line_no, "vertex needs at least two coordinates".into()));
                }
                data.vertices.push([coords[0], coords[1], coords.get(2).copied().unwrap_or(0.0)]);
            }
            "f" | "l" => {
                let n = data.vertices.len() as i64;
                let ids: Vec<usize> = tokens
                    .map(|t| {
                        let head = t.split('/').next().unwrap_or("");
                        let i: i64 = head.parse().map_err(|e| err(line_no, format!("bad index {t:?}: {e}")))?;
                        let idx = if i < 0 { n + i } else { i - 1 };
                        if idx < 0 || idx >= n {
                            return Err(err(line_no, format!("index {i} out of range")));
                        }
                        Ok(idx as usize)
                    })
                    .collect::<Result<_>>()?;
                if tag == "f" {
                    data.faces.push((line_no, ids));
                } else {
                    data.lines.push((line_no, ids));
                }
            }
            _ => {}
        }
    }
    Ok(data)
}

/// Parse OBJ text as a `D`-dimensional surface: triangles (`f`) in 3D,
/// polyline records (`l`) in 2D.
pub fn parse_obj<const D: usize>(text: &str, path: &str) -> Result<SurfaceMesh<D>> {
    let data = parse(text, path)?;
    let err = |line: usize, message: String| Error::Parse { path: path.to_string(), line, message };
    let vertices: Vec<Point<D>> = data.vertices.iter().map(|v| Point::<D>::from_fn(|k, _| v[k])).collect();
    let mut elements: Vec<[usize; D]> = Vec::new();
    // What an empty mesh writes.
    if vertices.is_empty() && data.faces.is_empty() && data.lines.is_empty() {
        return Ok(SurfaceMesh::default());
    }
    if D == 3 {
        if data.faces.is_empty() {
            return Err(err(0, "no triangle faces".into()));
        }
        for (line, ids) in &data.faces {
            if ids.len() != 3 {
                return Err(err(*line, format!("only triangles are supported, got {} vertices", ids.len())));
            }
            elements.push(std::array::from_fn(|k| ids[k]));
        }
    } else {
        if data.lines.is_empty() {
            return Err(err(0, "no polyline records".into()));
        }
        for (line, ids) in &data.lines {
            if ids.len() < 2 {
                return Err(err(*line, "polyline needs at least two vertices".into()));
            }
            for w in ids.windows(2) {
                elements.push(std::array::from_fn(|k| w[k]));
            }
        }
    }
    Ok(SurfaceMesh::new(vertices, elements))
}

/// 3 if the file holds faces, 2 if it only holds polylines.
pub fn obj_dimension(path: &Path) -> Result<usize> {
    let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    let data = parse(&text, &path.display().to_string())?;
    if !data.faces.is_empty() {
        Ok(3)
    } else if !data.lines.is_empty() {
        Ok(2)
    } else {
        Err(Error::Parse { path: path.display().to_string(), line: 0, message: "no faces or polylines".into() })
    }
}

pub fn read_mesh<const D: usize>(path: &Path) -> Result<SurfaceMesh<D>> {
    let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    parse_obj(&text, &path.display().to_string())
}

/// OBJ text; 2D meshes get `z = 0` and one `l` record per segment.
pub fn write_mesh_to<const D: usize>(out: &mut impl Write, mesh: &SurfaceMesh<D>) -> std::io::Result<()> {
    for v in &mesh.vertices {
        if D == 2 {
            writeln!(out, "v {} {} 0", v[0], v[1])?;
        } else {
            writeln!(out, "v {} {} {}", v[0], v[1], v[2])?;
        }
    }
    let tag = if D == 2 { "l" } else { "f" };
    for el in &mesh.elements {
        write!(out, "{tag}")?;
        for &i in el {
            write!(out, " {}", i + 1)?;
        }
        writeln!(out)?;
    }
    Ok(())
}

pub fn write_mesh<const D: usize>(path: &Path, mesh: &SurfaceMesh<D>) -> Result<()> {
    let mut buf = Vec::new();
    write_mesh_to(&mut buf, mesh).map_err(|e| io_error(path, e))?;
    fs::write(path, buf).map_err(|e| io_error(path, e))
}
