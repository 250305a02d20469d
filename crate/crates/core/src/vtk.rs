//! Legacy ASCII VTK output: an unstructured grid of polygon cells with one
//! point vector field per mode.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::mesh::{Point2, PolygonalMesh};

/// VTK cell type id of a general polygon.
pub const VTK_POLYGON: u8 = 7;

#[derive(Debug, Error)]
pub enum VtkError {
    #[error("field `{name}` has {got} values but the mesh has {expected} vertices")]
    FieldLength {
        name: String,
        got: usize,
        expected: usize,
    },
    #[error("malformed VTK file: {0}")]
    Parse(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

/// A named point vector field.
#[derive(Debug, Clone, PartialEq)]
pub struct PointField {
    pub name: String,
    pub values: Vec<[f64; 2]>,
}

fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

/// Escapes whitespace, `%` and non-printable bytes as `%XX`, the encoding
/// VTK readers apply to string arrays.
fn encode(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for b in s.bytes() {
        if b.is_ascii_graphic() && b != b'%' {
            out.push(b as char);
        } else {
            let _ = write!(out, "%{b:02X}");
        }
    }
    out
}

fn decode(s: &str) -> Result<String, VtkError> {
    let bytes = s.as_bytes();
    let mut out = Vec::with_capacity(bytes.len());
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'%' {
            let hex = s
                .get(i + 1..i + 3)
                .ok_or_else(|| VtkError::Parse("truncated escape".into()))?;
            let v = u8::from_str_radix(hex, 16).map_err(|e| VtkError::Parse(e.to_string()))?;
            out.push(v);
            i += 3;
        } else {
            out.push(bytes[i]);
            i += 1;
        }
    }
    String::from_utf8(out).map_err(|e| VtkError::Parse(e.to_string()))
}

/// Renders the mesh and its fields. `metadata` entries become dataset-level
/// string arrays (e.g. the run configuration and the tool version).
pub fn to_vtk(
    mesh: &PolygonalMesh,
    fields: &[PointField],
    title: &str,
    metadata: &[(&str, String)],
) -> Result<String, VtkError> {
    let nv = mesh.num_vertices();
    for f in fields {
        if f.values.len() != nv {
            return Err(VtkError::FieldLength {
                name: f.name.clone(),
                got: f.values.len(),
                expected: nv,
            });
        }
    }
    let title: String = title.chars().filter(|c| *c != '\n').take(255).collect();
    let mut s = String::new();
    let _ = writeln!(s, "# vtk DataFile Version 3.0\n{title}\nASCII\nDATASET UNSTRUCTURED_GRID");
    if !metadata.is_empty() {
        let _ = writeln!(s, "FIELD FieldData {}", metadata.len());
        for (name, value) in metadata {
            let _ = writeln!(s, "{} 1 1 string\n{}", encode(name), encode(value));
        }
    }
    let _ = writeln!(s, "POINTS {nv} double");
    for p in &mesh.vertices {
        let _ = writeln!(s, "{} {} 0", fmt(p.x), fmt(p.y));
    }
    let size: usize = mesh.cells.iter().map(|c| c.len() + 1).sum();
    let _ = writeln!(s, "CELLS {} {size}", mesh.num_cells());
    for c in &mesh.cells {
        let ids: Vec<String> = c.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(s, "{} {}", c.len(), ids.join(" "));
    }
    let _ = writeln!(s, "CELL_TYPES {}", mesh.num_cells());
    for _ in &mesh.cells {
        let _ = writeln!(s, "{VTK_POLYGON}");
    }
    if !fields.is_empty() {
        let _ = writeln!(s, "POINT_DATA {nv}");
        for f in fields {
            let _ = writeln!(s, "VECTORS {} double", f.name);
            for v in &f.values {
                let _ = writeln!(s, "{} {} 0", fmt(v[0]), fmt(v[1]));
            }
        }
    }
    Ok(s)
}

pub fn write_vtk(
    path: impl AsRef<Path>,
    mesh: &PolygonalMesh,
    fields: &[PointField],
    title: &str,
    metadata: &[(&str, String)],
) -> Result<(), VtkError> {
    fs::write(path, to_vtk(mesh, fields, title, metadata)?)?;
    Ok(())
}

/// Scales each displacement so the largest vertex magnitude is one. A zero
/// field is returned unchanged.
pub fn normalize_max(values: &mut [[f64; 2]]) {
    let m = values
        .iter()
        .map(|v| v[0].hypot(v[1]))
        .fold(0.0, f64::max);
    if m > 0.0 {
        for v in values {
            v[0] /= m;
            v[1] /= m;
        }
    }
}

/// Contents of a file written by [`to_vtk`].
#[derive(Debug, Clone, PartialEq)]
pub struct VtkDocument {
    pub points: Vec<Point2>,
    pub cells: Vec<Vec<usize>>,
    pub fields: Vec<PointField>,
    pub metadata: Vec<(String, String)>,
}

fn parse<T: std::str::FromStr>(tok: Option<&str>, what: &str) -> Result<T, VtkError> {
    tok.and_then(|t| t.parse().ok())
        .ok_or_else(|| VtkError::Parse(format!("expected {what}")))
}

/// Reads back the subset of legacy VTK produced by [`to_vtk`].
pub fn read_vtk_str(text: &str) -> Result<VtkDocument, VtkError> {
    let mut lines = text.lines();
    if !lines.next().is_some_and(|l| l.starts_with("# vtk DataFile")) {
        return Err(VtkError::Parse("missing VTK header".into()));
    }
    lines.next();
    if lines.next() != Some("ASCII") {
        return Err(VtkError::Parse("only ASCII files are supported".into()));
    }
    let mut doc = VtkDocument {
        points: Vec::new(),
        cells: Vec::new(),
        fields: Vec::new(),
        metadata: Vec::new(),
    };
    let mut npoints = 0;
    while let Some(line) = lines.next() {
        let mut tok = line.split_whitespace();
        match tok.next() {
            None | Some("DATASET") | Some("CELL_TYPES") | Some("POINT_DATA") => {}
            Some("FIELD") => {
                tok.next();
                let count: usize = parse(tok.next(), "array count")?;
                for _ in 0..count {
                    let head = lines.next().ok_or_else(|| VtkError::Parse("eof".into()))?;
                    let name = head.split_whitespace().next().unwrap_or_default();
                    let value = lines.next().ok_or_else(|| VtkError::Parse("eof".into()))?;
                    doc.metadata.push((decode(name)?, decode(value.trim())?));
                }
            }
            Some("POINTS") => {
                npoints = parse(tok.next(), "point count")?;
                for _ in 0..npoints {
                    let l = lines.next().ok_or_else(|| VtkError::Parse("eof".into()))?;
                    let mut t = l.split_whitespace();
                    doc.points.push(Point2::new(
                        parse(t.next(), "x")?,
                        parse(t.next(), "y")?,
                    ));
                }
            }
            Some("CELLS") => {
                let nc: usize = parse(tok.next(), "cell count")?;
                for _ in 0..nc {
                    let l = lines.next().ok_or_else(|| VtkError::Parse("eof".into()))?;
                    let ids: Vec<usize> = l
                        .split_whitespace()
                        .skip(1)
                        .map(|t| parse(Some(t), "vertex id"))
                        .collect::<Result<_, _>>()?;
                    doc.cells.push(ids);
                }
            }
            Some("VECTORS") => {
                let name = tok.next().unwrap_or_default().to_string();
                let mut values = Vec::with_capacity(npoints);
                for _ in 0..npoints {
                    let l = lines.next().ok_or_else(|| VtkError::Parse("eof".into()))?;
                    let mut t = l.split_whitespace();
                    values.push([parse(t.next(), "u")?, parse(t.next(), "v")?]);
                }
                doc.fields.push(PointField { name, values });
            }
            Some(t) if t.parse::<f64>().is_ok() => {}
            Some(other) => return Err(VtkError::Parse(format!("unexpected `{other}`"))),
        }
    }
    Ok(doc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_square_mesh, MeshFamily};

    #[test]
    fn roundtrip_is_bitwise() {
        let mesh = generate_square_mesh(3, MeshFamily::DeformedSquares { seed: 7 }).unwrap();
        let values: Vec<[f64; 2]> = mesh
            .vertices
            .iter()
            .map(|p| [p.x.sin() / 3.0, p.y.exp()])
            .collect();
        let field = PointField {
            name: "mode_1".into(),
            values,
        };
        let meta = [("config", "{\"a\": 1, \"b\": \"x y%\"}".to_string())];
        let text = to_vtk(&mesh, &[field.clone()], "demo", &meta).unwrap();
        let doc = read_vtk_str(&text).unwrap();
        assert_eq!(doc.points, mesh.vertices);
        assert_eq!(doc.cells, mesh.cells);
        assert_eq!(doc.fields, vec![field]);
        assert_eq!(doc.metadata[0].0, "config");
        assert_eq!(doc.metadata[0].1, meta[0].1);
    }

    #[test]
    fn structure_counts() {
        let mesh = generate_square_mesh(2, MeshFamily::Squares).unwrap();
        let text = to_vtk(&mesh, &[], "t", &[]).unwrap();
        assert!(text.contains("POINTS 9 double"));
        assert!(text.contains("CELLS 4 20"));
        assert_eq!(text.lines().filter(|l| *l == "7").count(), 4);
    }

    #[test]
    fn field_length_checked() {
        let mesh = generate_square_mesh(1, MeshFamily::Squares).unwrap();
        let bad = PointField {
            name: "m".into(),
            values: vec![[0.0, 0.0]],
        };
        assert!(matches!(
            to_vtk(&mesh, &[bad], "t", &[]),
            Err(VtkError::FieldLength { expected: 4, .. })
        ));
    }

    #[test]
    fn max_norm_scaling() {
        let mut v = vec![[3.0, 4.0], [0.0, -1.0], [0.0, 0.0]];
        normalize_max(&mut v);
        assert_eq!(v, vec![[0.6, 0.8], [0.0, -0.2], [0.0, 0.0]]);
        let mut z = vec![[0.0, 0.0]];
        normalize_max(&mut z);
        assert_eq!(z, vec![[0.0, 0.0]]);
    }
}
