//! Polygonal meshes of the unit square and the L-shaped domain.
//!
//! Cells are stored as counter-clockwise vertex loops. Collinear vertices are
//! legal and never removed: they are how small edges enter the mesh.

mod generate;
pub(crate) mod io;
pub mod polygon;
mod quality;
mod voronoi;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use generate::{generate_lshape_mesh, generate_square_mesh, MeshFamily};
pub use io::{mesh_to_json, read_mesh, read_mesh_str, write_mesh, write_mesh_with_meta};
pub use quality::{cell_kernel, quality_report, CellQuality, MeshQualityReport};

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("mesh refinement must be at least 1 (got {0})")]
    ZeroSubdivisions(usize),
    #[error("unknown mesh family `{0}`")]
    UnknownFamily(String),
    #[error("family `{family}` is not available on domain `{domain}`")]
    UnsupportedFamily { family: String, domain: String },
    #[error("voronoi meshes need at least one cell")]
    EmptyVoronoi,
    #[error("cell {cell} references vertex {index} but the mesh has {count} vertices")]
    VertexIndex { cell: usize, index: usize, count: usize },
    #[error("cell {0} has fewer than 3 vertices")]
    TooFewVertices(usize),
    #[error("cell {cell} is degenerate (area {area:e})")]
    DegenerateCell { cell: usize, area: f64 },
    #[error("cell {0} is self-intersecting")]
    SelfIntersecting(usize),
    #[error("vertices {0} and {1} coincide")]
    DuplicateVertex(usize, usize),
    #[error("vertex {0} has a non-finite coordinate")]
    NonFinite(usize),
    #[error("edge ({0}, {1}) is used by more than two cells or twice with the same orientation")]
    NonManifoldEdge(usize, usize),
    #[error("boundary edge ({0}, {1}) has no tag")]
    UntaggedBoundary(usize, usize),
    #[error("tagged edge ({0}, {1}) is not on the mesh boundary")]
    NotABoundaryEdge(usize, usize),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed mesh document: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dist(self, other: Point2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn midpoint(self, other: Point2) -> Point2 {
        Point2::new(0.5 * (self.x + other.x), 0.5 * (self.y + other.y))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryTag {
    Dirichlet,
    Neumann,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundaryEdge {
    pub edge: [usize; 2],
    pub tag: BoundaryTag,
}

/// Which region a mesh discretizes. Used for area checks and output labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Square,
    Lshape,
}

impl Domain {
    pub fn area(self) -> f64 {
        match self {
            Domain::Square => 1.0,
            Domain::Lshape => 3.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Domain::Square => "square",
            Domain::Lshape => "lshape",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolygonalMesh {
    pub vertices: Vec<Point2>,
    pub cells: Vec<Vec<usize>>,
    pub boundary: Vec<BoundaryEdge>,
}

impl PolygonalMesh {
    /// Builds a mesh, orienting every cell counter-clockwise and tagging all
    /// boundary edges with `tag`, then validates it.
    pub fn from_cells(
        vertices: Vec<Point2>,
        cells: Vec<Vec<usize>>,
        tag: BoundaryTag,
    ) -> Result<Self, MeshError> {
        let mut mesh = PolygonalMesh {
            vertices,
            cells,
            boundary: Vec::new(),
        };
        mesh.orient_cells()?;
        mesh.boundary = mesh
            .untagged_boundary_edges()?
            .into_iter()
            .map(|edge| BoundaryEdge { edge, tag })
            .collect();
        mesh.validate()?;
        Ok(mesh)
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn cell_points(&self, cell: usize) -> Vec<Point2> {
        self.cells[cell].iter().map(|&v| self.vertices[v]).collect()
    }

    pub fn cell_area(&self, cell: usize) -> f64 {
        polygon::signed_area(&self.cell_points(cell))
    }

    pub fn total_area(&self) -> f64 {
        (0..self.cells.len()).map(|c| self.cell_area(c)).sum()
    }

    /// Re-tags every boundary edge with the tag returned by `f(a, b)`.
    pub fn retag_boundary<F>(&mut self, mut f: F)
    where
        F: FnMut(Point2, Point2) -> BoundaryTag,
    {
        for b in &mut self.boundary {
            b.tag = f(self.vertices[b.edge[0]], self.vertices[b.edge[1]]);
        }
    }

    /// Dirichlet on the bottom side `y = 0`, Neumann elsewhere.
    pub fn with_bottom_dirichlet(mut self) -> Self {
        self.retag_boundary(|a, b| {
            if a.y.abs() < 1e-12 && b.y.abs() < 1e-12 {
                BoundaryTag::Dirichlet
            } else {
                BoundaryTag::Neumann
            }
        });
        self
    }

    /// Vertices touched by at least one boundary edge, in ascending order.
    pub fn boundary_vertices(&self) -> Vec<usize> {
        let mut on = vec![false; self.vertices.len()];
        for b in &self.boundary {
            on[b.edge[0]] = true;
            on[b.edge[1]] = true;
        }
        (0..on.len()).filter(|&v| on[v]).collect()
    }

    fn orient_cells(&mut self) -> Result<(), MeshError> {
        for (c, cell) in self.cells.iter_mut().enumerate() {
            if cell.len() < 3 {
                return Err(MeshError::TooFewVertices(c));
            }
            if let Some(&index) = cell.iter().find(|&&v| v >= self.vertices.len()) {
                return Err(MeshError::VertexIndex {
                    cell: c,
                    index,
                    count: self.vertices.len(),
                });
            }
            let pts: Vec<Point2> = cell.iter().map(|&v| self.vertices[v]).collect();
            if polygon::signed_area(&pts) < 0.0 {
                cell.reverse();
            }
        }
        Ok(())
    }

    /// Directed edge usage: map from undirected key to the directed copies seen.
    fn edge_usage(&self) -> Result<BTreeMap<(usize, usize), Vec<(usize, usize)>>, MeshError> {
        let mut usage: BTreeMap<(usize, usize), Vec<(usize, usize)>> = BTreeMap::new();
        for cell in &self.cells {
            let n = cell.len();
            for k in 0..n {
                let (a, b) = (cell[k], cell[(k + 1) % n]);
                let key = (a.min(b), a.max(b));
                let uses = usage.entry(key).or_default();
                if uses.len() == 2 || uses.contains(&(a, b)) {
                    return Err(MeshError::NonManifoldEdge(a, b));
                }
                uses.push((a, b));
            }
        }
        Ok(usage)
    }

    fn untagged_boundary_edges(&self) -> Result<Vec<[usize; 2]>, MeshError> {
        Ok(self
            .edge_usage()?
            .into_values()
            .filter(|u| u.len() == 1)
            .map(|u| [u[0].0, u[0].1])
            .collect())
    }

    /// Checks every structural invariant: index ranges, finite coordinates,
    /// simple positively oriented cells, edge manifoldness, boundary tags.
    pub fn validate(&self) -> Result<(), MeshError> {
        for (i, p) in self.vertices.iter().enumerate() {
            if !p.x.is_finite() || !p.y.is_finite() {
                return Err(MeshError::NonFinite(i));
            }
        }
        for (c, cell) in self.cells.iter().enumerate() {
            if cell.len() < 3 {
                return Err(MeshError::TooFewVertices(c));
            }
            if let Some(&index) = cell.iter().find(|&&v| v >= self.vertices.len()) {
                return Err(MeshError::VertexIndex {
                    cell: c,
                    index,
                    count: self.vertices.len(),
                });
            }
            let pts = self.cell_points(c);
            let area = polygon::signed_area(&pts);
            let scale = polygon::diameter(&pts).powi(2);
            if !(area > 1e-14 * scale) {
                return Err(MeshError::DegenerateCell { cell: c, area });
            }
            if !polygon::is_simple(&pts) {
                return Err(MeshError::SelfIntersecting(c));
            }
        }
        let usage = self.edge_usage()?;
        let mut tagged: BTreeMap<(usize, usize), BoundaryTag> = BTreeMap::new();
        for b in &self.boundary {
            let [a, c] = b.edge;
            let key = (a.min(c), a.max(c));
            match usage.get(&key) {
                Some(u) if u.len() == 1 => {
                    tagged.insert(key, b.tag);
                }
                _ => return Err(MeshError::NotABoundaryEdge(a, c)),
            }
        }
        for (key, u) in &usage {
            if u.len() == 1 && !tagged.contains_key(key) {
                return Err(MeshError::UntaggedBoundary(u[0].0, u[0].1));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square() -> PolygonalMesh {
        PolygonalMesh::from_cells(
            vec![
                Point2::new(0.0, 0.0),
                Point2::new(1.0, 0.0),
                Point2::new(1.0, 1.0),
                Point2::new(0.0, 1.0),
            ],
            vec![vec![0, 1, 2, 3]],
            BoundaryTag::Dirichlet,
        )
        .unwrap()
    }

    #[test]
    fn clockwise_cells_are_reoriented() {
        let m = PolygonalMesh::from_cells(
            unit_square().vertices,
            vec![vec![0, 3, 2, 1]],
            BoundaryTag::Dirichlet,
        )
        .unwrap();
        assert_eq!(m.cell_area(0), 1.0);
        assert_eq!(m.boundary.len(), 4);
    }

    #[test]
    fn bottom_dirichlet_tags_one_edge() {
        let m = unit_square().with_bottom_dirichlet();
        let d: Vec<_> = m
            .boundary
            .iter()
            .filter(|b| b.tag == BoundaryTag::Dirichlet)
            .collect();
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].edge, [0, 1]);
    }

    #[test]
    fn bad_index_is_reported() {
        let err = PolygonalMesh::from_cells(
            unit_square().vertices,
            vec![vec![0, 1, 99]],
            BoundaryTag::Dirichlet,
        )
        .unwrap_err();
        assert!(matches!(err, MeshError::VertexIndex { index: 99, .. }));
    }

    #[test]
    fn degenerate_cell_is_rejected() {
        let err = PolygonalMesh::from_cells(
            vec![
                Point2::new(0.0, 0.0),
                Point2::new(1.0, 0.0),
                Point2::new(2.0, 0.0),
            ],
            vec![vec![0, 1, 2]],
            BoundaryTag::Dirichlet,
        )
        .unwrap_err();
        assert!(matches!(err, MeshError::DegenerateCell { .. }));
    }

    #[test]
    fn bow_tie_is_rejected() {
        let err = PolygonalMesh::from_cells(
            vec![
                Point2::new(0.0, 0.0),
                Point2::new(2.0, 0.0),
                Point2::new(0.0, 1.0),
                Point2::new(4.0, 4.0),
            ],
            vec![vec![0, 1, 2, 3]],
            BoundaryTag::Dirichlet,
        )
        .unwrap_err();
        assert!(matches!(err, MeshError::SelfIntersecting(0)), "{err:?}");
    }
}
