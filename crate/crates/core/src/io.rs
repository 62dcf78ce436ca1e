//! ASCII point cloud files: whitespace-separated XYZ and ASCII PLY.
//!
//! Values are written with Rust's shortest round-trip float formatting, so a
//! write followed by a read reproduces every coordinate exactly.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use nalgebra::Unit;

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::geom::{angle_unoriented, Point3, UnitVec3, Vec3};

/// Normals whose norm deviates from 1 by more than this are rejected.
pub const NORMAL_TOLERANCE: f64 = 1e-3;

/// Angle error mapped to pure red in colored PLY output.
pub const COLOR_RAMP_MAX_DEG: f64 = 45.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CloudFormat {
    Xyz,
    PlyAscii,
}

impl CloudFormat {
    /// `.ply` selects PLY; anything else is treated as XYZ.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("ply") => CloudFormat::PlyAscii,
            _ => CloudFormat::Xyz,
        }
    }
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

fn parse_f64(tok: &str, line: usize) -> Result<f64> {
    let v: f64 = tok
        .parse()
        .map_err(|_| parse_err(line, format!("invalid number '{tok}'")))?;
    if !v.is_finite() {
        return Err(parse_err(line, format!("non-finite value '{tok}'")));
    }
    Ok(v)
}

fn checked_normal(v: Vec3, line: usize) -> Result<UnitVec3> {
    let norm = v.norm();
    if (norm - 1.0).abs() > NORMAL_TOLERANCE {
        return Err(Error::NormalNotUnit { line, norm });
    }
    Ok(Unit::new_normalize(v))
}

fn assemble(points: Vec<Point3>, normals: Vec<UnitVec3>) -> Result<PointCloud> {
    if normals.is_empty() {
        PointCloud::new(points)
    } else {
        PointCloud::with_normals(points, normals)
    }
}

pub fn parse_xyz(text: &str) -> Result<PointCloud> {
    let mut points = Vec::new();
    let mut normals = Vec::new();
    let mut width = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("");
        let toks: Vec<&str> = content.split_whitespace().collect();
        if toks.is_empty() {
            continue;
        }
        if toks.len() != 3 && toks.len() != 6 {
            return Err(parse_err(line, format!("expected 3 or 6 values, found {}", toks.len())));
        }
        match width {
            None => width = Some(toks.len()),
            Some(w) if w != toks.len() => {
                return Err(parse_err(line, format!("expected {w} values like the first line, found {}", toks.len())))
            }
            _ => {}
        }
        let v = toks
            .iter()
            .map(|t| parse_f64(t, line))
            .collect::<Result<Vec<f64>>>()?;
        points.push(Point3::new(v[0], v[1], v[2]));
        if v.len() == 6 {
            normals.push(checked_normal(Vec3::new(v[3], v[4], v[5]), line)?);
        }
    }
    assemble(points, normals)
}

struct PlyElement {
    name: String,
    count: usize,
    properties: Vec<String>,
    has_list: bool,
}

pub fn parse_ply(text: &str) -> Result<PointCloud> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    match lines.next() {
        Some((_, "ply")) => {}
        _ => return Err(parse_err(1, "missing 'ply' magic")),
    }
    let mut elements: Vec<PlyElement> = Vec::new();
    let mut saw_format = false;
    loop {
        let (line, l) = lines
            .next()
            .ok_or_else(|| parse_err(0, "unterminated PLY header"))?;
        let toks: Vec<&str> = l.split_whitespace().collect();
        match toks.first().copied() {
            Some("format") => {
                if toks.get(1) != Some(&"ascii") {
                    return Err(parse_err(line, format!("unsupported PLY format '{}'", toks.get(1).unwrap_or(&""))));
                }
                saw_format = true;
            }
            Some("comment") | Some("obj_info") | None => {}
            Some("element") => {
                let (name, count) = match toks.as_slice() {
                    [_, name, count] => (*name, *count),
                    _ => return Err(parse_err(line, "malformed element line")),
                };
                let count = count
                    .parse()
                    .map_err(|_| parse_err(line, format!("invalid element count '{count}'")))?;
                elements.push(PlyElement {
                    name: name.to_string(),
                    count,
                    properties: Vec::new(),
                    has_list: false,
                });
            }
            Some("property") => {
                let el = elements
                    .last_mut()
                    .ok_or_else(|| parse_err(line, "property before any element"))?;
                if toks.get(1) == Some(&"list") {
                    el.has_list = true;
                    el.properties.push(toks.last().unwrap_or(&"").to_string());
                } else if toks.len() == 3 {
                    el.properties.push(toks[2].to_string());
                } else {
                    return Err(parse_err(line, "malformed property line"));
                }
            }
            Some("end_header") => break,
            Some(other) => return Err(parse_err(line, format!("unexpected header keyword '{other}'"))),
        }
    }
    if !saw_format {
        return Err(parse_err(0, "PLY header lacks a format line"));
    }

    let mut points = Vec::new();
    let mut normals = Vec::new();
    for el in &elements {
        if el.name != "vertex" {
            for _ in 0..el.count {
                lines
                    .next()
                    .ok_or_else(|| parse_err(0, format!("truncated '{}' element", el.name)))?;
            }
            continue;
        }
        if el.has_list {
            return Err(parse_err(0, "list properties on vertices are not supported"));
        }
        let find = |n: &str| el.properties.iter().position(|p| p == n);
        let (xi, yi, zi) = match (find("x"), find("y"), find("z")) {
            (Some(x), Some(y), Some(z)) => (x, y, z),
            _ => return Err(parse_err(0, "vertex element lacks x, y, z")),
        };
        let normal_idx = match (find("nx"), find("ny"), find("nz")) {
            (Some(a), Some(b), Some(c)) => Some((a, b, c)),
            _ => None,
        };
        for _ in 0..el.count {
            let (line, l) = lines
                .next()
                .ok_or_else(|| parse_err(0, "truncated vertex data"))?;
            let toks: Vec<&str> = l.split_whitespace().collect();
            if toks.len() != el.properties.len() {
                return Err(parse_err(
                    line,
                    format!("expected {} values, found {}", el.properties.len(), toks.len()),
                ));
            }
            let get = |i: usize| parse_f64(toks[i], line);
            points.push(Point3::new(get(xi)?, get(yi)?, get(zi)?));
            if let Some((a, b, c)) = normal_idx {
                normals.push(checked_normal(Vec3::new(get(a)?, get(b)?, get(c)?), line)?);
            }
        }
    }
    assemble(points, normals)
}

pub fn read_cloud(path: &Path) -> Result<PointCloud> {
    let text = fs::read_to_string(path)?;
    match CloudFormat::from_path(path) {
        CloudFormat::Xyz => parse_xyz(&text),
        CloudFormat::PlyAscii => parse_ply(&text),
    }
}

/// Blue for zero error, shading to red at [`COLOR_RAMP_MAX_DEG`].
pub fn error_color(angle_deg: f64) -> [u8; 3] {
    let t = (angle_deg / COLOR_RAMP_MAX_DEG).clamp(0.0, 1.0);
    [(255.0 * t).round() as u8, 0, (255.0 * (1.0 - t)).round() as u8]
}

pub fn write_xyz<W: Write>(cloud: &PointCloud, out: &mut W) -> Result<()> {
    let normals = cloud.normals();
    for (i, p) in cloud.points().iter().enumerate() {
        write!(out, "{} {} {}", p.x, p.y, p.z)?;
        if let Some(ns) = normals {
            let n = &ns[i];
            write!(out, " {} {} {}", n.x, n.y, n.z)?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Writes ASCII PLY. With `reference` normals, each vertex also carries an
/// RGB color encoding its unoriented angle error.
pub fn write_ply<W: Write>(cloud: &PointCloud, reference: Option<&[UnitVec3]>, out: &mut W) -> Result<()> {
    let normals = cloud.normals();
    let colors: Option<Vec<[u8; 3]>> = match (normals, reference) {
        (Some(est), Some(gt)) => {
            if est.len() != gt.len() {
                return Err(Error::LengthMismatch {
                    left: est.len(),
                    right: gt.len(),
                });
            }
            Some(est.iter().zip(gt).map(|(a, b)| error_color(angle_unoriented(a, b))).collect())
        }
        _ => None,
    };
    writeln!(out, "ply")?;
    writeln!(out, "format ascii 1.0")?;
    writeln!(out, "element vertex {}", cloud.len())?;
    for name in ["x", "y", "z"] {
        writeln!(out, "property double {name}")?;
    }
    if normals.is_some() {
        for name in ["nx", "ny", "nz"] {
            writeln!(out, "property double {name}")?;
        }
    }
    if colors.is_some() {
        for name in ["red", "green", "blue"] {
            writeln!(out, "property uchar {name}")?;
        }
    }
    writeln!(out, "end_header")?;
    for (i, p) in cloud.points().iter().enumerate() {
        write!(out, "{} {} {}", p.x, p.y, p.z)?;
        if let Some(ns) = normals {
            write!(out, " {} {} {}", ns[i].x, ns[i].y, ns[i].z)?;
        }
        if let Some(cs) = &colors {
            let [r, g, b] = cs[i];
            write!(out, " {r} {g} {b}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

pub fn write_cloud(cloud: &PointCloud, path: &Path, reference: Option<&[UnitVec3]>) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    match CloudFormat::from_path(path) {
        CloudFormat::Xyz => write_xyz(cloud, &mut out)?,
        CloudFormat::PlyAscii => write_ply(cloud, reference, &mut out)?,
    }
    out.flush()?;
    Ok(())
}
