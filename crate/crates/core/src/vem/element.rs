use crate::mesh::polygon::{centroid, diameter, signed_area};
use crate::mesh::Point2;

use super::VemError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub length: f64,
    /// Outward unit normal.
    pub normal: [f64; 2],
    /// Unit tangent in counter-clockwise direction.
    pub tangent: [f64; 2],
}

/// Geometric data of one polygonal element. Edge `i` joins vertex `i` to
/// vertex `i + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementGeometry {
    pub vertices: Vec<Point2>,
    pub area: f64,
    pub centroid: Point2,
    pub diameter: f64,
    pub edges: Vec<Edge>,
}

impl ElementGeometry {
    pub fn new(vertices: &[Point2]) -> Result<Self, VemError> {
        let area = signed_area(vertices);
        if vertices.len() < 3 || !(area > 0.0) {
            return Err(VemError::Degenerate(area));
        }
        let n = vertices.len();
        let edges = (0..n)
            .map(|i| {
                let (a, b) = (vertices[i], vertices[(i + 1) % n]);
                let length = a.dist(b);
                let t = [(b.x - a.x) / length, (b.y - a.y) / length];
                Edge {
                    length,
                    normal: [t[1], -t[0]],
                    tangent: t,
                }
            })
            .collect();
        Ok(ElementGeometry {
            vertices: vertices.to_vec(),
            area,
            centroid: centroid(vertices),
            diameter: diameter(vertices),
            edges,
        })
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    /// Trapezoid weight of vertex `i` on the boundary: half the lengths of
    /// its two incident edges.
    pub fn boundary_weight(&self, i: usize) -> f64 {
        let n = self.num_vertices();
        0.5 * (self.edges[i].length + self.edges[(i + n - 1) % n].length)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_square() {
        let g = ElementGeometry::new(&[
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(0.0, 1.0),
        ])
        .unwrap();
        assert_eq!(g.area, 1.0);
        assert_eq!(g.centroid, Point2::new(0.5, 0.5));
        assert_eq!(g.diameter, 2f64.sqrt());
        assert_eq!(g.edges[0].normal, [0.0, -1.0]);
        let closure = g.edges.iter().fold([0.0, 0.0], |acc, e| {
            [acc[0] + e.length * e.normal[0], acc[1] + e.length * e.normal[1]]
        });
        assert_eq!(closure, [0.0, 0.0]);
    }

    #[test]
    fn reference_triangle() {
        let g = ElementGeometry::new(&[
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(0.0, 1.0),
        ])
        .unwrap();
        assert_eq!(g.area, 0.5);
        assert!((g.centroid.x - 1.0 / 3.0).abs() < 1e-16);
        assert!((g.centroid.y - 1.0 / 3.0).abs() < 1e-16);
    }

    #[test]
    fn collinear_vertex_changes_nothing() {
        let sq = [
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(0.0, 1.0),
        ];
        let mut with_mid = sq.to_vec();
        with_mid.insert(1, Point2::new(0.5, 0.0));
        let (a, b) = (
            ElementGeometry::new(&sq).unwrap(),
            ElementGeometry::new(&with_mid).unwrap(),
        );
        assert_eq!(a.area, b.area);
        assert_eq!(a.centroid, b.centroid);
        assert_eq!(a.diameter, b.diameter);
    }

    #[test]
    fn clockwise_is_degenerate() {
        let err = ElementGeometry::new(&[
            Point2::new(0.0, 0.0),
            Point2::new(0.0, 1.0),
            Point2::new(1.0, 0.0),
        ])
        .unwrap_err();
        assert!(matches!(err, VemError::Degenerate(_)));
    }
}
