//! Mesh JSON documents:
//! `{"vertices":[[x,y],...], "cells":[[i0,i1,...],...], "boundary":[{"edge":[i,j],"tag":"dirichlet"},...]}`
//!
//! Coordinates are written with 17 significant digits so that a write/read
//! cycle reproduces every vertex bit for bit.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Deserialize;

use super::{BoundaryEdge, BoundaryTag, MeshError, Point2, PolygonalMesh};

const DUPLICATE_TOL: f64 = 1e-12;

#[derive(Deserialize)]
struct MeshDoc {
    vertices: Vec<[f64; 2]>,
    cells: Vec<Vec<usize>>,
    #[serde(default)]
    boundary: Option<Vec<BoundaryEdge>>,
}

pub(crate) fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Serializes a mesh; `meta` (provenance) is stored under a `"meta"` key that
/// readers ignore.
pub fn mesh_to_json(mesh: &PolygonalMesh, meta: Option<&serde_json::Value>) -> String {
    let mut s = String::from("{\n  \"vertices\": [");
    for (i, p) in mesh.vertices.iter().enumerate() {
        let sep = if i == 0 { "\n    " } else { ",\n    " };
        let _ = write!(s, "{sep}[{}, {}]", fmt_f64(p.x), fmt_f64(p.y));
    }
    s.push_str("\n  ],\n  \"cells\": [");
    for (i, c) in mesh.cells.iter().enumerate() {
        let sep = if i == 0 { "\n    " } else { ",\n    " };
        let ids: Vec<String> = c.iter().map(|v| v.to_string()).collect();
        let _ = write!(s, "{sep}[{}]", ids.join(", "));
    }
    s.push_str("\n  ],\n  \"boundary\": [");
    for (i, b) in mesh.boundary.iter().enumerate() {
        let sep = if i == 0 { "\n    " } else { ",\n    " };
        let tag = match b.tag {
            BoundaryTag::Dirichlet => "dirichlet",
            BoundaryTag::Neumann => "neumann",
        };
        let _ = write!(
            s,
            "{sep}{{\"edge\": [{}, {}], \"tag\": \"{tag}\"}}",
            b.edge[0], b.edge[1]
        );
    }
    s.push_str("\n  ]");
    if let Some(meta) = meta {
        let _ = write!(s, ",\n  \"meta\": {meta}");
    }
    s.push_str("\n}\n");
    s
}

pub fn write_mesh(mesh: &PolygonalMesh, path: impl AsRef<Path>) -> Result<(), MeshError> {
    fs::write(path, mesh_to_json(mesh, None))?;
    Ok(())
}

pub fn write_mesh_with_meta(
    mesh: &PolygonalMesh,
    path: impl AsRef<Path>,
    meta: &serde_json::Value,
) -> Result<(), MeshError> {
    fs::write(path, mesh_to_json(mesh, Some(meta)))?;
    Ok(())
}

pub fn read_mesh(path: impl AsRef<Path>) -> Result<PolygonalMesh, MeshError> {
    read_mesh_str(&fs::read_to_string(path)?)
}

/// Parses and validates a mesh document. Clockwise loops are re-oriented; a
/// missing `boundary` array tags every boundary edge Dirichlet.
pub fn read_mesh_str(text: &str) -> Result<PolygonalMesh, MeshError> {
    let doc: MeshDoc = serde_json::from_str(text)?;
    let vertices: Vec<Point2> = doc
        .vertices
        .iter()
        .map(|&[x, y]| Point2::new(x, y))
        .collect();
    for (i, p) in vertices.iter().enumerate() {
        if !p.x.is_finite() || !p.y.is_finite() {
            return Err(MeshError::NonFinite(i));
        }
    }
    check_duplicates(&vertices)?;
    let mut mesh = PolygonalMesh::from_cells(vertices, doc.cells, BoundaryTag::Dirichlet)?;
    if let Some(tags) = doc.boundary {
        // stored orientation follows the (possibly flipped) cells
        let mut by_key = std::collections::HashMap::new();
        for b in &tags {
            let [a, c] = b.edge;
            by_key.insert((a.min(c), a.max(c)), b.tag);
        }
        for b in &tags {
            let [a, c] = b.edge;
            if !mesh
                .boundary
                .iter()
                .any(|e| (e.edge[0].min(e.edge[1]), e.edge[0].max(e.edge[1])) == (a.min(c), a.max(c)))
            {
                return Err(MeshError::NotABoundaryEdge(a, c));
            }
        }
        for e in &mut mesh.boundary {
            let key = (e.edge[0].min(e.edge[1]), e.edge[0].max(e.edge[1]));
            match by_key.get(&key) {
                Some(&tag) => e.tag = tag,
                None => return Err(MeshError::UntaggedBoundary(e.edge[0], e.edge[1])),
            }
        }
    }
    mesh.validate()?;
    Ok(mesh)
}

fn check_duplicates(vertices: &[Point2]) -> Result<(), MeshError> {
    let mut order: Vec<usize> = (0..vertices.len()).collect();
    order.sort_by(|&a, &b| vertices[a].x.total_cmp(&vertices[b].x));
    for (k, &a) in order.iter().enumerate() {
        for &b in &order[k + 1..] {
            if vertices[b].x - vertices[a].x > DUPLICATE_TOL {
                break;
            }
            if vertices[a].dist(vertices[b]) <= DUPLICATE_TOL {
                return Err(MeshError::DuplicateVertex(a.min(b), a.max(b)));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_square_mesh, MeshFamily};

    #[test]
    fn roundtrip_is_identity() {
        let m = generate_square_mesh(3, MeshFamily::DeformedTrianglesMidpoint { seed: 9 })
            .unwrap()
            .with_bottom_dirichlet();
        let back = read_mesh_str(&mesh_to_json(&m, None)).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn file_roundtrip_with_meta() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        let m = generate_square_mesh(2, MeshFamily::Squares).unwrap();
        write_mesh_with_meta(&m, &path, &serde_json::json!({"version": "x"})).unwrap();
        assert_eq!(read_mesh(&path).unwrap(), m);
    }

    #[test]
    fn out_of_range_index() {
        let doc = r#"{"vertices":[[0,0],[1,0],[1,1],[0,1]],"cells":[[0,1,99]]}"#;
        assert!(matches!(
            read_mesh_str(doc),
            Err(MeshError::VertexIndex { index: 99, .. })
        ));
    }

    #[test]
    fn clockwise_loop_is_reoriented() {
        let doc = r#"{"vertices":[[0,0],[1,0],[1,1],[0,1]],"cells":[[0,3,2,1]],
            "boundary":[{"edge":[0,3],"tag":"dirichlet"},{"edge":[3,2],"tag":"neumann"},
                        {"edge":[2,1],"tag":"neumann"},{"edge":[1,0],"tag":"neumann"}]}"#;
        let m = read_mesh_str(doc).unwrap();
        assert_eq!(m.cell_area(0), 1.0);
        let d = m
            .boundary
            .iter()
            .find(|b| b.tag == BoundaryTag::Dirichlet)
            .unwrap();
        assert_eq!(d.edge, [3, 0]);
    }

    #[test]
    fn duplicate_vertices_rejected() {
        let doc = r#"{"vertices":[[0,0],[1,0],[1,1],[0,1],[1e-13,0]],"cells":[[0,1,2,3]]}"#;
        assert!(matches!(
            read_mesh_str(doc),
            Err(MeshError::DuplicateVertex(0, 4))
        ));
    }

    #[test]
    fn self_intersecting_rejected() {
        let doc = r#"{"vertices":[[0,0],[2,0],[0,1],[4,4]],"cells":[[0,1,2,3]]}"#;
        assert!(matches!(
            read_mesh_str(doc),
            Err(MeshError::SelfIntersecting(0))
        ));
    }
}
