//! Gmsh ASCII `.msh` reader (format versions 2.2 and 4.1) and a version 2.2 writer.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{SurfaceTag, TetMesh};
use crate::error::{Error, Result};
use crate::geometry::Vec3;

const TRIANGLE: u32 = 2;
const TETRAHEDRON: u32 = 4;

/// Physical-group names (or numeric tags) identifying the two boundary surfaces.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GmshOptions {
    pub object_names: Vec<String>,
    pub farfield_names: Vec<String>,
}

impl Default for GmshOptions {
    fn default() -> Self {
        GmshOptions {
            object_names: vec!["object".into()],
            farfield_names: vec!["farfield".into()],
        }
    }
}

impl GmshOptions {
    fn classify(&self, tag: i64, names: &HashMap<i64, String>) -> Option<SurfaceTag> {
        let matches = |list: &[String]| {
            list.iter().any(|want| {
                want.trim().parse::<i64>().ok() == Some(tag)
                    || names
                        .get(&tag)
                        .is_some_and(|n| n.eq_ignore_ascii_case(want.trim()))
            })
        };
        if matches(&self.object_names) {
            Some(SurfaceTag::Object)
        } else if matches(&self.farfield_names) {
            Some(SurfaceTag::Farfield)
        } else {
            None
        }
    }
}

pub fn load_gmsh(path: impl AsRef<Path>, options: &GmshOptions) -> Result<TetMesh> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_gmsh(&text, path, options)
}

struct Cursor<'a> {
    lines: std::iter::Enumerate<std::str::Lines<'a>>,
    path: PathBuf,
    line: usize,
}

impl<'a> Cursor<'a> {
    fn new(text: &'a str, path: &Path) -> Self {
        Cursor {
            lines: text.lines().enumerate(),
            path: path.to_path_buf(),
            line: 0,
        }
    }

    fn err(&self, message: impl Into<String>) -> Error {
        Error::Parse {
            path: self.path.clone(),
            line: self.line,
            message: message.into(),
        }
    }

    fn next(&mut self) -> Option<&'a str> {
        for (i, l) in self.lines.by_ref() {
            self.line = i + 1;
            let l = l.trim();
            if !l.is_empty() {
                return Some(l);
            }
        }
        None
    }

    fn expect_line(&mut self) -> Result<&'a str> {
        self.next()
            .ok_or_else(|| self.err("unexpected end of file"))
    }

    fn expect_end(&mut self, section: &str) -> Result<()> {
        let l = self.expect_line()?;
        if l == format!("$End{section}") {
            Ok(())
        } else {
            Err(self.err(format!("expected $End{section}, found '{l}'")))
        }
    }

    fn skip_section(&mut self, section: &str) -> Result<()> {
        let end = format!("$End{section}");
        loop {
            if self.expect_line()? == end {
                return Ok(());
            }
        }
    }

    fn next_numbers<T: std::str::FromStr>(&mut self) -> Result<Vec<T>> {
        let line = self.expect_line()?;
        self.numbers(line)
    }

    fn numbers<T: std::str::FromStr>(&self, line: &str) -> Result<Vec<T>> {
        line.split_whitespace()
            .map(|t| {
                t.parse::<T>()
                    .map_err(|_| self.err(format!("invalid number '{t}'")))
            })
            .collect()
    }
}

#[derive(Default)]
struct RawMesh {
    nodes: BTreeMap<i64, Vec3>,
    tets: Vec<[i64; 4]>,
    triangles: Vec<([i64; 3], Vec<i64>)>,
    names: HashMap<i64, String>,
}

/// Parse the text of a `.msh` file; `path` is used for diagnostics only.
pub fn parse_gmsh(text: &str, path: &Path, options: &GmshOptions) -> Result<TetMesh> {
    let mut cur = Cursor::new(text, path);
    let mut raw = RawMesh::default();
    let mut version: Option<u32> = None;
    let mut surface_physicals: HashMap<i64, Vec<i64>> = HashMap::new();
    while let Some(line) = cur.next() {
        match line {
            "$MeshFormat" => {
                let l = cur.expect_line()?;
                let parts: Vec<&str> = l.split_whitespace().collect();
                if parts.len() < 3 {
                    return Err(cur.err("malformed $MeshFormat header"));
                }
                if parts[1] != "0" {
                    return Err(cur.err("binary .msh files are not supported"));
                }
                version = Some(match parts[0] {
                    v if v.starts_with("2.") => 2,
                    "4.1" => 4,
                    v => return Err(cur.err(format!("unsupported .msh version {v}"))),
                });
                cur.expect_end("MeshFormat")?;
            }
            "$PhysicalNames" => {
                let n: usize = cur.next_numbers::<usize>()?.first().copied().unwrap_or(0);
                for _ in 0..n {
                    let l = cur.expect_line()?;
                    let mut it = l.splitn(3, char::is_whitespace);
                    let _dim = it.next();
                    let tag = it
                        .next()
                        .and_then(|t| t.parse::<i64>().ok())
                        .ok_or_else(|| cur.err("malformed physical name"))?;
                    let name = it.next().unwrap_or("").trim().trim_matches('"').to_string();
                    raw.names.insert(tag, name);
                }
                cur.expect_end("PhysicalNames")?;
            }
            "$Entities" if version == Some(4) => {
                surface_physicals = parse_entities_v4(&mut cur)?;
            }
            "$Nodes" => match version {
                Some(2) => parse_nodes_v2(&mut cur, &mut raw)?,
                Some(4) => parse_nodes_v4(&mut cur, &mut raw)?,
                _ => return Err(cur.err("$Nodes before $MeshFormat")),
            },
            "$Elements" => match version {
                Some(2) => parse_elements_v2(&mut cur, &mut raw)?,
                Some(4) => parse_elements_v4(&mut cur, &mut raw, &surface_physicals)?,
                _ => return Err(cur.err("$Elements before $MeshFormat")),
            },
            s if s.starts_with('$') && !s.starts_with("$End") => {
                let name = s[1..].to_string();
                cur.skip_section(&name)?;
            }
            other => return Err(cur.err(format!("unexpected line '{other}'"))),
        }
    }
    if version.is_none() {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 0,
            message: "missing $MeshFormat section".into(),
        });
    }
    assemble(raw, options)
}

fn parse_nodes_v2(cur: &mut Cursor, raw: &mut RawMesh) -> Result<()> {
    let n = cur.next_numbers::<usize>()?.first().copied().unwrap_or(0);
    for _ in 0..n {
        let l = cur.expect_line()?;
        let v: Vec<f64> = cur.numbers(l)?;
        if v.len() < 4 {
            return Err(cur.err("node line needs an id and three coordinates"));
        }
        raw.nodes.insert(v[0] as i64, Vec3::new(v[1], v[2], v[3]));
    }
    cur.expect_end("Nodes")
}

fn parse_elements_v2(cur: &mut Cursor, raw: &mut RawMesh) -> Result<()> {
    let n = cur.next_numbers::<usize>()?.first().copied().unwrap_or(0);
    for _ in 0..n {
        let l = cur.expect_line()?;
        let v: Vec<i64> = cur.numbers(l)?;
        if v.len() < 3 {
            return Err(cur.err("element line too short"));
        }
        let etype = v[1] as u32;
        let ntags = v[2] as usize;
        if v.len() < 3 + ntags {
            return Err(cur.err("element tag list truncated"));
        }
        let tags = v[3..3 + ntags].to_vec();
        let nodes = &v[3 + ntags..];
        match etype {
            TRIANGLE => {
                let f: [i64; 3] = nodes
                    .try_into()
                    .map_err(|_| cur.err("triangle needs 3 nodes"))?;
                raw.triangles
                    .push((f, tags.first().copied().into_iter().collect()));
            }
            TETRAHEDRON => {
                let t: [i64; 4] = nodes
                    .try_into()
                    .map_err(|_| cur.err("tetrahedron needs 4 nodes"))?;
                raw.tets.push(t);
            }
            _ => {}
        }
    }
    cur.expect_end("Elements")
}

/// Physical tags of each surface entity.
fn parse_entities_v4(cur: &mut Cursor) -> Result<HashMap<i64, Vec<i64>>> {
    let counts: Vec<usize> = cur.next_numbers()?;
    if counts.len() < 4 {
        return Err(cur.err("malformed $Entities header"));
    }
    let mut surfaces = HashMap::new();
    for _ in 0..counts[0] {
        cur.expect_line()?;
    }
    for _ in 0..counts[1] {
        cur.expect_line()?;
    }
    for _ in 0..counts[2] {
        let l = cur.expect_line()?;
        let v: Vec<f64> = cur.numbers(l)?;
        if v.len() < 8 {
            return Err(cur.err("malformed surface entity"));
        }
        let nphys = v[7] as usize;
        if v.len() < 8 + nphys {
            return Err(cur.err("surface entity physical tags truncated"));
        }
        surfaces.insert(
            v[0] as i64,
            v[8..8 + nphys].iter().map(|t| *t as i64).collect(),
        );
    }
    for _ in 0..counts[3] {
        cur.expect_line()?;
    }
    cur.expect_end("Entities")?;
    Ok(surfaces)
}

fn parse_nodes_v4(cur: &mut Cursor, raw: &mut RawMesh) -> Result<()> {
    let header: Vec<usize> = cur.next_numbers()?;
    if header.len() < 2 {
        return Err(cur.err("malformed $Nodes header"));
    }
    for _ in 0..header[0] {
        let b: Vec<i64> = cur.next_numbers()?;
        if b.len() < 4 {
            return Err(cur.err("malformed node block header"));
        }
        let parametric = b[2] != 0;
        let count = b[3] as usize;
        let mut tags = Vec::with_capacity(count);
        for _ in 0..count {
            let l = cur.expect_line()?;
            tags.push(
                cur.numbers::<i64>(l)?
                    .first()
                    .copied()
                    .ok_or_else(|| cur.err("missing node tag"))?,
            );
        }
        for tag in tags {
            let l = cur.expect_line()?;
            let v: Vec<f64> = cur.numbers(l)?;
            if v.len() < 3 || (parametric && v.len() < 4) {
                return Err(cur.err("node coordinates truncated"));
            }
            raw.nodes.insert(tag, Vec3::new(v[0], v[1], v[2]));
        }
    }
    cur.expect_end("Nodes")
}

fn parse_elements_v4(
    cur: &mut Cursor,
    raw: &mut RawMesh,
    surfaces: &HashMap<i64, Vec<i64>>,
) -> Result<()> {
    let header: Vec<usize> = cur.next_numbers()?;
    if header.len() < 2 {
        return Err(cur.err("malformed $Elements header"));
    }
    for _ in 0..header[0] {
        let b: Vec<i64> = cur.next_numbers()?;
        if b.len() < 4 {
            return Err(cur.err("malformed element block header"));
        }
        let (dim, entity, etype, count) = (b[0], b[1], b[2] as u32, b[3] as usize);
        let physicals = if dim == 2 {
            surfaces.get(&entity).cloned().unwrap_or_default()
        } else {
            Vec::new()
        };
        for _ in 0..count {
            let v: Vec<i64> = cur.next_numbers()?;
            let nodes = v.get(1..).unwrap_or(&[]);
            match etype {
                TRIANGLE => {
                    let f: [i64; 3] = nodes
                        .try_into()
                        .map_err(|_| cur.err("triangle needs 3 nodes"))?;
                    raw.triangles.push((f, physicals.clone()));
                }
                TETRAHEDRON => {
                    let t: [i64; 4] = nodes
                        .try_into()
                        .map_err(|_| cur.err("tetrahedron needs 4 nodes"))?;
                    raw.tets.push(t);
                }
                _ => {}
            }
        }
    }
    cur.expect_end("Elements")
}

fn assemble(raw: RawMesh, options: &GmshOptions) -> Result<TetMesh> {
    // Keep only nodes referenced by tetrahedra, in ascending node-id order.
    let mut used: Vec<i64> = raw.tets.iter().flatten().copied().collect();
    used.sort_unstable();
    used.dedup();
    let mut index = HashMap::with_capacity(used.len());
    let mut vertices = Vec::with_capacity(used.len());
    for id in used {
        let x = raw.nodes.get(&id).ok_or_else(|| {
            Error::Topology(format!("tetrahedron references nonexistent node {id}"))
        })?;
        index.insert(id, vertices.len());
        vertices.push(*x);
    }
    let tets = raw.tets.iter().map(|t| t.map(|id| index[&id])).collect();
    let mut tagged = Vec::new();
    for (f, physicals) in &raw.triangles {
        let Some(tag) = physicals
            .iter()
            .find_map(|p| options.classify(*p, &raw.names))
        else {
            continue;
        };
        let mut face = [0usize; 3];
        for (slot, id) in face.iter_mut().zip(f) {
            *slot = *index.get(id).ok_or_else(|| {
                Error::Topology(format!(
                    "boundary triangle node {id} is not a vertex of any tetrahedron"
                ))
            })?;
        }
        tagged.push((face, tag));
    }
    TetMesh::new(vertices, tets, &tagged)
}

/// Serialize as a Gmsh 2.2 ASCII file with physical groups 1 = "object",
/// 2 = "farfield", 3 = "domain".
pub fn to_gmsh_v2(mesh: &TetMesh) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "$MeshFormat\n2.2 0 8\n$EndMeshFormat");
    let _ = writeln!(
        s,
        "$PhysicalNames\n3\n2 1 \"object\"\n2 2 \"farfield\"\n3 3 \"domain\"\n$EndPhysicalNames"
    );
    let _ = writeln!(s, "$Nodes\n{}", mesh.vertices.len());
    for (i, v) in mesh.vertices.iter().enumerate() {
        let _ = writeln!(s, "{} {:.17e} {:.17e} {:.17e}", i + 1, v[0], v[1], v[2]);
    }
    let _ = writeln!(
        s,
        "$EndNodes\n$Elements\n{}",
        mesh.boundary_faces.len() + mesh.tets.len()
    );
    let mut id = 1;
    for f in &mesh.boundary_faces {
        let phys = match f.tag {
            SurfaceTag::Object => 1,
            SurfaceTag::Farfield => 2,
        };
        let [a, b, c] = f.vertices.map(|v| v + 1);
        let _ = writeln!(s, "{id} 2 2 {phys} {phys} {a} {b} {c}");
        id += 1;
    }
    for t in &mesh.tets {
        let [a, b, c, d] = t.map(|v| v + 1);
        let _ = writeln!(s, "{id} 4 2 3 3 {a} {b} {c} {d}");
        id += 1;
    }
    s.push_str("$EndElements\n");
    s
}

pub fn write_gmsh_v2(mesh: &TetMesh, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, to_gmsh_v2(mesh)).map_err(|e| Error::io(path, e))
}
