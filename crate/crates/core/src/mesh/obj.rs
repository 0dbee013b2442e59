//! Wavefront OBJ reading and writing.
//!
//! Only `v` and `f` records are interpreted. Texture coordinates, normals, groups and
//! materials are skipped. Polygons are fan-triangulated. Written files use fixed
//! 8-decimal formatting so output is byte-stable across runs.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{Point, TriMesh};
use crate::error::{Error, Result};

pub fn parse_obj(bytes: &[u8]) -> Result<TriMesh> {
    let text = std::str::from_utf8(bytes).map_err(|e| {
        let line = bytes[..e.valid_up_to()].iter().filter(|&&b| b == b'\n').count() + 1;
        Error::parse(line, "input is not valid UTF-8/ASCII")
    })?;
    let mut vertices = Vec::new();
    // (face, line number) so out-of-range references can be reported
    let mut faces: Vec<([i64; 3], usize)> = Vec::new();

    for (lineno, raw) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        let mut tokens = line.split_whitespace();
        match tokens.next() {
            Some("v") => {
                let coords: Vec<f64> = tokens
                    .map(|t| {
                        t.parse::<f64>()
                            .map_err(|_| Error::parse(lineno, format!("bad vertex coordinate `{t}`")))
                    })
                    .collect::<Result<_>>()?;
                // x y z, optionally w or r g b
                if !matches!(coords.len(), 3 | 4 | 6 | 7) {
                    return Err(Error::parse(
                        lineno,
                        format!("vertex record has {} numbers", coords.len()),
                    ));
                }
                let p = Point::new(coords[0], coords[1], coords[2]);
                if !p.iter().all(|c| c.is_finite()) {
                    return Err(Error::parse(lineno, "vertex coordinate is not finite"));
                }
                vertices.push(p);
            }
            Some("f") => {
                let idx: Vec<i64> = tokens
                    .map(|t| {
                        let first = t.split('/').next().unwrap_or("");
                        first
                            .parse::<i64>()
                            .map_err(|_| Error::parse(lineno, format!("bad face index `{t}`")))
                    })
                    .collect::<Result<_>>()?;
                if idx.len() < 3 {
                    return Err(Error::parse(lineno, "face has fewer than 3 vertices"));
                }
                let resolved: Vec<i64> = idx
                    .iter()
                    .map(|&i| match i {
                        0 => Err(Error::parse(lineno, "OBJ indices are 1-based; found 0")),
                        i if i < 0 => Ok(vertices.len() as i64 + i),
                        i => Ok(i - 1),
                    })
                    .collect::<Result<_>>()?;
                for k in 1..resolved.len() - 1 {
                    faces.push(([resolved[0], resolved[k], resolved[k + 1]], lineno));
                }
            }
            _ => {}
        }
    }

    let n = vertices.len() as i64;
    let faces = faces
        .into_iter()
        .map(|(f, lineno)| {
            if let Some(&bad) = f.iter().find(|&&i| i < 0 || i >= n) {
                Err(Error::Structure(format!(
                    "line {lineno}: face index {} out of range for {n} vertices",
                    bad + 1
                )))
            } else {
                Ok([f[0] as usize, f[1] as usize, f[2] as usize])
            }
        })
        .collect::<Result<Vec<_>>>()?;
    TriMesh::new(vertices, faces)
}

pub fn read_obj(path: impl AsRef<Path>) -> Result<TriMesh> {
    let bytes = fs::read(path.as_ref())?;
    parse_obj(&bytes)
}

fn fmt_coord(out: &mut String, x: f64) {
    // collapse -0.0 so equal meshes print identically
    let x = if x == 0.0 { 0.0 } else { x };
    let _ = write!(out, " {x:.8}");
}

/// Serializes the mesh. With `vertex_scalars`, every `v` line gets an RGB colour from a
/// blue (low) to red (high) linear map normalized by the scalar maximum.
pub fn write_obj(mesh: &TriMesh, vertex_scalars: Option<&[f64]>) -> Result<Vec<u8>> {
    if let Some(s) = vertex_scalars {
        if s.len() != mesh.num_vertices() {
            return Err(Error::argument(format!(
                "{} vertex scalars for {} vertices",
                s.len(),
                mesh.num_vertices()
            )));
        }
    }
    let max = vertex_scalars
        .map(|s| s.iter().cloned().fold(0.0_f64, f64::max))
        .unwrap_or(0.0);
    let mut out = String::with_capacity(mesh.num_vertices() * 40 + mesh.num_faces() * 20);
    for (i, v) in mesh.vertices().iter().enumerate() {
        out.push('v');
        for c in v.iter() {
            fmt_coord(&mut out, *c);
        }
        if let Some(s) = vertex_scalars {
            let t = if max > 0.0 { (s[i] / max).clamp(0.0, 1.0) } else { 0.0 };
            fmt_coord(&mut out, t);
            fmt_coord(&mut out, 0.0);
            fmt_coord(&mut out, 1.0 - t);
        }
        out.push('\n');
    }
    for f in mesh.faces() {
        let _ = writeln!(out, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
    }
    Ok(out.into_bytes())
}

pub fn write_obj_file(path: impl AsRef<Path>, mesh: &TriMesh, vertex_scalars: Option<&[f64]>) -> Result<()> {
    fs::write(path, write_obj(mesh, vertex_scalars)?)?;
    Ok(())
}
