use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use super::{Point3, TriMesh};
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MeshFormat {
    Obj,
    StlAscii,
}

impl MeshFormat {
    /// Guesses the format from a file extension (`.obj` / `.stl`).
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "obj" => Some(MeshFormat::Obj),
            "stl" => Some(MeshFormat::StlAscii),
            _ => None,
        }
    }
}

impl FromStr for MeshFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "obj" => Ok(MeshFormat::Obj),
            "stl" | "stl-ascii" => Ok(MeshFormat::StlAscii),
            other => Err(Error::Config(format!("unknown mesh format `{other}`"))),
        }
    }
}

/// Reads a mesh. With `validate`, non-finite coordinates and zero-area
/// triangles are rejected.
pub fn load_mesh<T: Real>(path: &Path, format: MeshFormat, validate: bool) -> Result<TriMesh<T>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mesh = match format {
        MeshFormat::Obj => parse_obj(&text)?,
        MeshFormat::StlAscii => parse_stl(&text)?,
    };
    if validate {
        mesh.validate()?;
    }
    Ok(mesh)
}

pub fn save_mesh<T: Real>(mesh: &TriMesh<T>, path: &Path, format: MeshFormat) -> Result<()> {
    let text = mesh_to_string(mesh, format)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Serialized mesh text, refusing non-finite vertices.
pub fn mesh_to_string<T: Real>(mesh: &TriMesh<T>, format: MeshFormat) -> Result<String> {
    if let Some(i) = mesh
        .vertices()
        .iter()
        .position(|p| p.iter().any(|c| !c.is_finite()))
    {
        return Err(Error::NonFinite(format!(
            "refusing to write vertex {i} with a non-finite coordinate"
        )));
    }
    Ok(match format {
        MeshFormat::Obj => write_obj(mesh),
        MeshFormat::StlAscii => write_stl(mesh),
    })
}

/// Reads a `vertex_index,value` sidecar CSV (0-based indices) into a dense field.
pub fn load_scalar_field_csv<T: Real>(path: &Path, num_vertices: usize) -> Result<Vec<T>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut values = vec![None; num_vertices];
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if n == 0 || line.is_empty() {
            if n == 0 && line != "vertex_index,value" {
                return Err(Error::parse(1, "expected header `vertex_index,value`"));
            }
            continue;
        }
        let (idx, val) = line
            .split_once(',')
            .ok_or_else(|| Error::parse(n + 1, "expected `vertex_index,value`"))?;
        let idx: usize = idx
            .trim()
            .parse()
            .map_err(|_| Error::parse(n + 1, format!("bad vertex index `{idx}`")))?;
        let val = parse_real::<T>(val.trim(), n + 1)?;
        if idx >= num_vertices {
            return Err(Error::IndexOutOfRange(format!(
                "line {}: vertex {idx} on a {num_vertices}-vertex mesh",
                n + 1
            )));
        }
        values[idx] = Some(val);
    }
    values
        .into_iter()
        .enumerate()
        .map(|(i, v)| v.ok_or_else(|| Error::MissingField(format!("value for vertex {i}"))))
        .collect()
}

fn parse_real<T: Real>(tok: &str, line: usize) -> Result<T> {
    tok.parse::<f64>()
        .map(T::lit)
        .map_err(|_| Error::parse(line, format!("bad number `{tok}`")))
}

fn parse_obj<T: Real>(text: &str) -> Result<TriMesh<T>> {
    if text.trim().is_empty() {
        return Err(Error::parse(1, "empty file"));
    }
    let mut vertices: Vec<Point3<T>> = Vec::new();
    let mut triangles: Vec<[usize; 3]> = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line_no = n + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        let mut toks = line.split_whitespace();
        match toks.next() {
            Some("v") => {
                let mut c = [T::zero(); 3];
                for slot in &mut c {
                    let tok = toks
                        .next()
                        .ok_or_else(|| Error::parse(line_no, "vertex needs three coordinates"))?;
                    *slot = parse_real(tok, line_no)?;
                }
                vertices.push(Point3::new(c[0], c[1], c[2]));
            }
            Some("f") => {
                let mut idx = Vec::new();
                for tok in toks {
                    let head = tok.split('/').next().unwrap_or("");
                    let i: i64 = head
                        .parse()
                        .map_err(|_| Error::parse(line_no, format!("bad face index `{tok}`")))?;
                    let resolved = match i {
                        0 => return Err(Error::parse(line_no, "face index 0 (OBJ is 1-based)")),
                        i if i > 0 => {
                            let i = (i - 1) as usize;
                            if i >= vertices.len() {
                                return Err(Error::IndexOutOfRange(format!(
                                    "line {line_no}: vertex {} but only {} defined",
                                    i + 1,
                                    vertices.len()
                                )));
                            }
                            i
                        }
                        i => {
                            let back = (-i) as usize;
                            if back > vertices.len() {
                                return Err(Error::IndexOutOfRange(format!(
                                    "line {line_no}: relative index {i}"
                                )));
                            }
                            vertices.len() - back
                        }
                    };
                    idx.push(resolved);
                }
                if idx.len() < 3 {
                    return Err(Error::parse(line_no, "face needs at least three vertices"));
                }
                // fan triangulation for polygons
                for w in 1..idx.len() - 1 {
                    triangles.push([idx[0], idx[w], idx[w + 1]]);
                }
            }
            _ => {}
        }
    }
    TriMesh::new(vertices, triangles)
}

fn write_obj<T: Real>(mesh: &TriMesh<T>) -> String {
    let mut out = String::with_capacity(32 * (mesh.num_vertices() + mesh.num_triangles()) + 64);
    let _ = writeln!(
        out,
        "# morphreduce mesh: {} vertices, {} triangles",
        mesh.num_vertices(),
        mesh.num_triangles()
    );
    for p in mesh.vertices() {
        let _ = writeln!(out, "v {} {} {}", p.x.as_f64(), p.y.as_f64(), p.z.as_f64());
    }
    for &[a, b, c] in mesh.triangles() {
        let _ = writeln!(out, "f {} {} {}", a + 1, b + 1, c + 1);
    }
    out
}

fn parse_stl<T: Real>(text: &str) -> Result<TriMesh<T>> {
    if text.trim().is_empty() {
        return Err(Error::parse(1, "empty file"));
    }
    #[derive(PartialEq)]
    enum State {
        Start,
        Solid,
        Facet,
        Loop(usize),
        EndLoop,
        Done,
    }
    let mut state = State::Start;
    let mut vertices: Vec<Point3<T>> = Vec::new();
    let mut lookup: HashMap<[u64; 3], usize> = HashMap::new();
    let mut triangles = Vec::new();
    let mut current = [0usize; 3];
    for (n, raw) in text.lines().enumerate() {
        let line_no = n + 1;
        let mut toks = raw.split_whitespace();
        let Some(head) = toks.next() else { continue };
        state = match (state, head) {
            (State::Start, "solid") => State::Solid,
            (State::Solid, "facet") => State::Facet,
            (State::Solid, "endsolid") => State::Done,
            (State::Facet, "outer") => State::Loop(0),
            (State::Loop(k), "vertex") if k < 3 => {
                let mut c = [0.0f64; 3];
                for slot in &mut c {
                    let tok = toks
                        .next()
                        .ok_or_else(|| Error::parse(line_no, "vertex needs three coordinates"))?;
                    *slot = tok
                        .parse()
                        .map_err(|_| Error::parse(line_no, format!("bad number `{tok}`")))?;
                }
                let key = c.map(f64::to_bits);
                let idx = *lookup.entry(key).or_insert_with(|| {
                    vertices.push(Point3::new(T::lit(c[0]), T::lit(c[1]), T::lit(c[2])));
                    vertices.len() - 1
                });
                current[k] = idx;
                State::Loop(k + 1)
            }
            (State::Loop(3), "endloop") => State::EndLoop,
            (State::EndLoop, "endfacet") => {
                triangles.push(current);
                State::Solid
            }
            (State::Done, _) => return Err(Error::parse(line_no, "content after endsolid")),
            (_, tok) => return Err(Error::parse(line_no, format!("unexpected `{tok}`"))),
        };
    }
    if state != State::Done {
        return Err(Error::parse(text.lines().count(), "missing endsolid"));
    }
    TriMesh::new(vertices, triangles)
}

fn write_stl<T: Real>(mesh: &TriMesh<T>) -> String {
    let mut out = String::from("solid morphreduce\n");
    for t in 0..mesh.num_triangles() {
        let a = mesh.area_vector(t);
        let norm = a.norm();
        let n = if norm > T::zero() { a / norm } else { a };
        let _ = writeln!(
            out,
            "facet normal {} {} {}",
            n.x.as_f64(),
            n.y.as_f64(),
            n.z.as_f64()
        );
        out.push_str("  outer loop\n");
        for p in mesh.corners(t) {
            let _ = writeln!(
                out,
                "    vertex {} {} {}",
                p.x.as_f64(),
                p.y.as_f64(),
                p.z.as_f64()
            );
        }
        out.push_str("  endloop\nendfacet\n");
    }
    out.push_str("endsolid morphreduce\n");
    out
}
