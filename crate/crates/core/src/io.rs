//! ASCII OFF / OBJ / PLY readers and a minimal OBJ writer.

use std::io::{BufRead, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{TriangleMesh, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MeshFormat {
    Off,
    Obj,
    Ply,
}

impl MeshFormat {
    pub fn from_path(path: &Path) -> Option<Self> {
        let ext = path.extension()?.to_str()?.to_ascii_lowercase();
        match ext.as_str() {
            "off" => Some(Self::Off),
            "obj" => Some(Self::Obj),
            "ply" => Some(Self::Ply),
            _ => None,
        }
    }
}

impl FromStr for MeshFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "off" => Ok(Self::Off),
            "obj" => Ok(Self::Obj),
            "ply" => Ok(Self::Ply),
            other => Err(Error::InvalidArgument(format!("unknown mesh format '{other}'"))),
        }
    }
}

pub fn load_mesh<R: BufRead>(source: R, format: MeshFormat) -> Result<TriangleMesh> {
    let (vertices, polygons) = match format {
        MeshFormat::Off => parse_off(source)?,
        MeshFormat::Obj => parse_obj(source)?,
        MeshFormat::Ply => parse_ply(source)?,
    };
    build(vertices, polygons)
}

pub fn load_mesh_file(path: &Path) -> Result<TriangleMesh> {
    let format = MeshFormat::from_path(path).ok_or_else(|| {
        Error::InvalidArgument(format!("cannot infer mesh format from '{}'", path.display()))
    })?;
    let file = std::fs::File::open(path)?;
    load_mesh(std::io::BufReader::new(file), format)
}

/// Fan-triangulates polygons and drops unreferenced vertices.
fn build(vertices: Vec<Vec3>, polygons: Vec<Vec<usize>>) -> Result<TriangleMesh> {
    let mut faces = Vec::with_capacity(polygons.len());
    for (pi, poly) in polygons.iter().enumerate() {
        if poly.len() < 3 {
            return Err(Error::Parse { line: 0, message: format!("polygon {pi} has fewer than 3 vertices") });
        }
        for &v in poly {
            if v >= vertices.len() {
                return Err(Error::Parse {
                    line: 0,
                    message: format!("polygon {pi} references missing vertex {v}"),
                });
            }
        }
        for k in 1..poly.len() - 1 {
            faces.push([poly[0], poly[k], poly[k + 1]]);
        }
    }
    let mut used = vec![false; vertices.len()];
    for f in &faces {
        for &v in f {
            used[v] = true;
        }
    }
    if used.iter().all(|&u| u) {
        return TriangleMesh::new(vertices, faces);
    }
    let mut remap = vec![usize::MAX; vertices.len()];
    let mut kept = Vec::with_capacity(vertices.len());
    for (i, v) in vertices.iter().enumerate() {
        if used[i] {
            remap[i] = kept.len();
            kept.push(*v);
        }
    }
    for f in &mut faces {
        for v in f.iter_mut() {
            *v = remap[*v];
        }
    }
    TriangleMesh::new(kept, faces)
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

fn parse_f64(tok: Option<&str>, line: usize) -> Result<f64> {
    let tok = tok.ok_or_else(|| parse_err(line, "missing coordinate"))?;
    tok.parse().map_err(|_| parse_err(line, format!("bad number '{tok}'")))
}

fn parse_usize(tok: &str, line: usize) -> Result<usize> {
    tok.parse().map_err(|_| parse_err(line, format!("bad index '{tok}'")))
}

/// Non-empty, comment-stripped lines with their 1-based line numbers.
fn content_lines<R: BufRead>(source: R) -> Result<Vec<(usize, String)>> {
    let mut out = Vec::new();
    for (i, line) in source.lines().enumerate() {
        let line = line?;
        let line = match line.find('#') {
            Some(p) => &line[..p],
            None => &line[..],
        };
        let line = line.trim();
        if !line.is_empty() {
            out.push((i + 1, line.to_string()));
        }
    }
    Ok(out)
}

type Parsed = (Vec<Vec3>, Vec<Vec<usize>>);

fn parse_off<R: BufRead>(source: R) -> Result<Parsed> {
    let lines = content_lines(source)?;
    let mut it = lines.iter();
    let (ln, first) = it.next().ok_or_else(|| parse_err(1, "empty file"))?;
    let mut header: Vec<&str> = first.split_whitespace().collect();
    if !header[0].ends_with("OFF") {
        return Err(parse_err(*ln, "missing OFF header"));
    }
    header.remove(0);
    let counts_line;
    let counts: Vec<&str> = if header.is_empty() {
        let (l, c) = it.next().ok_or_else(|| parse_err(*ln, "missing counts"))?;
        counts_line = (*l, c.as_str());
        counts_line.1.split_whitespace().collect()
    } else {
        header
    };
    if counts.len() < 2 {
        return Err(parse_err(*ln, "expected vertex and face counts"));
    }
    let nv = parse_usize(counts[0], *ln)?;
    let nf = parse_usize(counts[1], *ln)?;
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (l, s) = it.next().ok_or_else(|| parse_err(0, "unexpected end of vertex list"))?;
        let mut t = s.split_whitespace();
        vertices.push(Vec3::new(parse_f64(t.next(), *l)?, parse_f64(t.next(), *l)?, parse_f64(t.next(), *l)?));
    }
    let mut polygons = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (l, s) = it.next().ok_or_else(|| parse_err(0, "unexpected end of face list"))?;
        let toks: Vec<&str> = s.split_whitespace().collect();
        let k = parse_usize(toks[0], *l)?;
        if toks.len() < k + 1 {
            return Err(parse_err(*l, "face has fewer indices than declared"));
        }
        polygons.push(toks[1..=k].iter().map(|t| parse_usize(t, *l)).collect::<Result<_>>()?);
    }
    Ok((vertices, polygons))
}

fn parse_obj<R: BufRead>(source: R) -> Result<Parsed> {
    let mut vertices = Vec::new();
    let mut polygons = Vec::new();
    for (l, s) in content_lines(source)? {
        let mut t = s.split_whitespace();
        match t.next() {
            Some("v") => {
                vertices.push(Vec3::new(parse_f64(t.next(), l)?, parse_f64(t.next(), l)?, parse_f64(t.next(), l)?));
            }
            Some("f") => {
                let mut poly = Vec::new();
                for tok in t {
                    let idx = tok.split('/').next().unwrap_or("");
                    let i: i64 = idx.parse().map_err(|_| parse_err(l, format!("bad face index '{tok}'")))?;
                    let resolved = if i > 0 {
                        i - 1
                    } else if i < 0 {
                        vertices.len() as i64 + i
                    } else {
                        return Err(parse_err(l, "face index 0 is invalid in OBJ"));
                    };
                    if resolved < 0 {
                        return Err(parse_err(l, format!("face index {i} out of range")));
                    }
                    poly.push(resolved as usize);
                }
                polygons.push(poly);
            }
            _ => {}
        }
    }
    Ok((vertices, polygons))
}

fn parse_ply<R: BufRead>(source: R) -> Result<Parsed> {
    let mut lines = source.lines().enumerate().map(|(i, l)| l.map(|s| (i + 1, s)));
    let mut next_line = || -> Result<(usize, String)> {
        lines.next().ok_or_else(|| parse_err(0, "unexpected end of file"))?.map_err(Error::from)
    };
    let (l, magic) = next_line()?;
    if magic.trim() != "ply" {
        return Err(parse_err(l, "missing ply magic"));
    }
    struct Element {
        name: String,
        count: usize,
        props: Vec<String>,
    }
    let mut elements: Vec<Element> = Vec::new();
    loop {
        let (l, s) = next_line()?;
        let toks: Vec<&str> = s.split_whitespace().collect();
        match toks.first().copied() {
            Some("format") => {
                if toks.get(1) != Some(&"ascii") {
                    return Err(parse_err(l, "only ASCII PLY is supported"));
                }
            }
            Some("element") => {
                if toks.len() < 3 {
                    return Err(parse_err(l, "malformed element line"));
                }
                elements.push(Element { name: toks[1].to_string(), count: parse_usize(toks[2], l)?, props: Vec::new() });
            }
            Some("property") => {
                let el = elements.last_mut().ok_or_else(|| parse_err(l, "property before element"))?;
                el.props.push(toks.last().unwrap_or(&"").to_string());
            }
            Some("end_header") => break,
            _ => {}
        }
    }
    let mut vertices = Vec::new();
    let mut polygons = Vec::new();
    for el in &elements {
        for _ in 0..el.count {
            let (l, s) = next_line()?;
            let toks: Vec<&str> = s.split_whitespace().collect();
            match el.name.as_str() {
                "vertex" => {
                    let coord = |name: &str| -> Result<f64> {
                        let i = el.props.iter().position(|p| p == name).ok_or_else(|| parse_err(l, format!("vertex has no '{name}'")))?;
                        parse_f64(toks.get(i).copied(), l)
                    };
                    vertices.push(Vec3::new(coord("x")?, coord("y")?, coord("z")?));
                }
                "face" => {
                    let k = parse_usize(toks.first().ok_or_else(|| parse_err(l, "empty face"))?, l)?;
                    if toks.len() < k + 1 {
                        return Err(parse_err(l, "face has fewer indices than declared"));
                    }
                    polygons.push(toks[1..=k].iter().map(|t| parse_usize(t, l)).collect::<Result<_>>()?);
                }
                _ => {}
            }
        }
    }
    Ok((vertices, polygons))
}

pub fn write_off<W: Write>(mesh: &TriangleMesh, mut out: W) -> Result<()> {
    writeln!(out, "OFF")?;
    writeln!(out, "{} {} 0", mesh.num_vertices(), mesh.num_faces())?;
    for v in mesh.vertices() {
        writeln!(out, "{} {} {}", v.x, v.y, v.z)?;
    }
    for f in mesh.faces() {
        writeln!(out, "3 {} {} {}", f[0], f[1], f[2])?;
    }
    Ok(())
}

/// Writes an OBJ, optionally with one texture coordinate per vertex.
pub fn write_obj<W: Write>(mesh: &TriangleMesh, uv: Option<&[[f64; 2]]>, mut out: W) -> Result<()> {
    for v in mesh.vertices() {
        writeln!(out, "v {} {} {}", v.x, v.y, v.z)?;
    }
    if let Some(uv) = uv {
        for t in uv {
            writeln!(out, "vt {} {}", t[0], t[1])?;
        }
        for f in mesh.faces() {
            writeln!(out, "f {0}/{0} {1}/{1} {2}/{2}", f[0] + 1, f[1] + 1, f[2] + 1)?;
        }
    } else {
        for f in mesh.faces() {
            writeln!(out, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1)?;
        }
    }
    Ok(())
}
