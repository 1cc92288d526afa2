//! Line-oriented mesh files.
//!
//! ```text
//! lorfv-mesh 1
//! vertex <id> <t> <x>
//! face <id> <inflow|outflow|lateral> <v0> <v1>
//! element <id> <inflow> <outflow> <lat0> [<lat1> ...]
//! slice <n> <element ids...>
//! ```
//! Blank lines and lines starting with `#` are ignored. Ids of each record kind must
//! be exactly `0..count` in any order.

use std::fmt::Write as _;
use std::path::Path;

use super::{FaceKind, Mesh, MeshSpec};
use crate::error::{Error, Result};
use crate::geometry::{ChartPoint, MetricChart, QuadratureRule};

pub const HEADER: &str = "lorfv-mesh 1";

pub fn write_mesh(mesh: &Mesh) -> String {
    let mut s = String::new();
    writeln!(s, "{HEADER}").unwrap();
    for (i, v) in mesh.vertices.iter().enumerate() {
        writeln!(s, "vertex {i} {:?} {:?}", v.t, v.x).unwrap();
    }
    for f in &mesh.faces {
        writeln!(
            s,
            "face {} {} {} {}",
            f.id,
            f.kind.as_str(),
            f.vertices[0],
            f.vertices[1]
        )
        .unwrap();
    }
    for e in &mesh.elements {
        write!(s, "element {} {} {}", e.id, e.inflow, e.outflow).unwrap();
        for l in &e.laterals {
            write!(s, " {}", l.face).unwrap();
        }
        s.push('\n');
    }
    for (n, slice) in mesh.slices.iter().enumerate() {
        write!(s, "slice {n}").unwrap();
        for k in slice {
            write!(s, " {k}").unwrap();
        }
        s.push('\n');
    }
    s
}

pub fn save_mesh(mesh: &Mesh, path: &Path) -> Result<()> {
    std::fs::write(path, write_mesh(mesh))?;
    Ok(())
}

/// Parses a mesh file into a description; geometry is not checked here.
pub fn parse_mesh(text: &str) -> Result<MeshSpec> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    match lines.next() {
        Some((_, h)) if h == HEADER => {}
        Some((line, _)) => {
            return Err(Error::MeshParse {
                line,
                msg: format!("expected header '{HEADER}'"),
            })
        }
        None => {
            return Err(Error::MeshParse {
                line: 0,
                msg: "empty file".into(),
            })
        }
    }
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    let mut elements = Vec::new();
    let mut slices = Vec::new();
    for (line, l) in lines {
        let err = |msg: String| Error::MeshParse { line, msg };
        let mut tok = l.split_whitespace();
        let tag = tok.next().unwrap_or_default();
        let rest: Vec<&str> = tok.collect();
        let int = |s: &str| s.parse::<usize>().map_err(|_| err(format!("bad integer '{s}'")));
        let real = |s: &str| {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| err(format!("bad number '{s}'")))
        };
        match tag {
            "vertex" => {
                if rest.len() != 3 {
                    return Err(err("vertex needs <id> <t> <x>".into()));
                }
                vertices.push((int(rest[0])?, ChartPoint::new(real(rest[1])?, real(rest[2])?)));
            }
            "face" => {
                if rest.len() != 4 {
                    return Err(err("face needs <id> <kind> <v0> <v1>".into()));
                }
                let kind = FaceKind::parse(rest[1]).ok_or_else(|| err(format!("unknown face kind '{}'", rest[1])))?;
                faces.push((int(rest[0])?, (kind, int(rest[2])?, int(rest[3])?)));
            }
            "element" => {
                if rest.len() < 4 {
                    return Err(err("element needs <id> <inflow> <outflow> <lateral>...".into()));
                }
                let lats = rest[3..].iter().map(|s| int(s)).collect::<Result<Vec<_>>>()?;
                elements.push((int(rest[0])?, (int(rest[1])?, int(rest[2])?, lats)));
            }
            "slice" => {
                if rest.len() < 2 {
                    return Err(err("slice needs <n> and at least one element".into()));
                }
                let ids = rest[1..].iter().map(|s| int(s)).collect::<Result<Vec<_>>>()?;
                slices.push((int(rest[0])?, ids));
            }
            other => return Err(err(format!("unknown record '{other}'"))),
        }
    }
    Ok(MeshSpec {
        vertices: dense("vertex", vertices)?,
        faces: dense("face", faces)?,
        elements: dense("element", elements)?,
        slices: dense("slice", slices)?,
    })
}

fn dense<T>(what: &str, mut items: Vec<(usize, T)>) -> Result<Vec<T>> {
    items.sort_by_key(|(i, _)| *i);
    for (pos, (id, _)) in items.iter().enumerate() {
        if *id != pos {
            return Err(Error::MeshParse {
                line: 0,
                msg: format!(
                    "{what} ids must be 0..{} without gaps or repeats (found {id})",
                    items.len()
                ),
            });
        }
    }
    Ok(items.into_iter().map(|(_, t)| t).collect())
}

pub fn read_mesh(text: &str, g: &MetricChart, quad: QuadratureRule) -> Result<Mesh> {
    Mesh::assemble(*g, quad, parse_mesh(text)?)
}

pub fn load_mesh(path: &Path, g: &MetricChart, quad: QuadratureRule) -> Result<Mesh> {
    read_mesh(&std::fs::read_to_string(path)?, g, quad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_nonuniform_time, build_sheared};

    #[test]
    fn round_trip() {
        let g = MetricChart::flrw_linear(1.0);
        let m = build_sheared(&g, 6, 3, 0.3, 0.2, true).unwrap();
        let back = read_mesh(&write_mesh(&m), &g, QuadratureRule::default()).unwrap();
        assert_eq!(back.elements.len(), m.elements.len());
        for (a, b) in m.elements.iter().zip(&back.elements) {
            assert_eq!(a.inflow, b.inflow);
            assert!((a.volume - b.volume).abs() < 1e-14);
        }
        assert_eq!(m.slices, back.slices);
    }

    #[test]
    fn parse_errors_carry_lines() {
        let g = MetricChart::minkowski(1.0);
        let q = QuadratureRule::default();
        assert!(matches!(
            read_mesh("nonsense\n", &g, q.clone()),
            Err(Error::MeshParse { line: 1, .. })
        ));
        let bad = "lorfv-mesh 1\nvertex 0 0 0\nface 0 sideways 0 0\n";
        assert!(matches!(
            read_mesh(bad, &g, q.clone()),
            Err(Error::MeshParse { line: 3, .. })
        ));
        let bad = "lorfv-mesh 1\nvertex 0 zero 0\n";
        assert!(matches!(read_mesh(bad, &g, q), Err(Error::MeshParse { line: 2, .. })));
    }

    #[test]
    fn declared_kind_is_cross_checked() {
        let g = MetricChart::minkowski(1.0);
        let m = build_nonuniform_time(&g, 4, &[0.0, 0.1]).unwrap();
        let text = write_mesh(&m).replacen("face 0 inflow", "face 0 lateral", 1);
        assert!(matches!(
            read_mesh(&text, &g, QuadratureRule::default()),
            Err(Error::InvalidMesh(_))
        ));
    }
}
