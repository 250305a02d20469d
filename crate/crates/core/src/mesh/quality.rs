//! Shape-regularity measures: star-shapedness radius `rho_E` of each cell's
//! kernel, edge counts and the small-edge constant `c(h)`.

use serde::Serialize;

use super::polygon::{centroid, clip_left_of, diameter, signed_area};
use super::{MeshError, Point2, PolygonalMesh};

#[derive(Debug, Clone, Serialize)]
pub struct CellQuality {
    pub diameter: f64,
    /// Radius of the largest disc inside the kernel of the cell.
    pub rho: f64,
    pub edge_count: usize,
    pub min_edge: f64,
    pub kernel_area: f64,
    /// Whether the area centroid lies inside the kernel (the cell is
    /// star-shaped with respect to it).
    pub centroid_in_kernel: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct MeshQualityReport {
    pub cells: Vec<CellQuality>,
    pub h_max: f64,
    /// `min_E rho_E / h_E`
    pub gamma_min: f64,
    /// `max_E N(E)`
    pub n_max: usize,
    /// `min_E min_{e in E} |e| / h_E`
    pub min_edge_ratio: f64,
    /// `max_E log(1 + h_E / h_m(E))`, `h_m(E)` the shortest edge of `E`
    pub c_h: f64,
}

impl MeshQualityReport {
    /// Cells whose centroid falls outside their kernel.
    pub fn centroid_violations(&self) -> Vec<usize> {
        self.cells
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.centroid_in_kernel)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Kernel of a simple counter-clockwise polygon: the intersection of the
/// left half-planes of its edges. Empty when the polygon is not star-shaped.
pub fn cell_kernel(pts: &[Point2]) -> Vec<Point2> {
    let (mut x0, mut y0, mut x1, mut y1) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
    for p in pts {
        x0 = x0.min(p.x);
        y0 = y0.min(p.y);
        x1 = x1.max(p.x);
        y1 = y1.max(p.y);
    }
    let pad = (x1 - x0).max(y1 - y0);
    let mut kernel = vec![
        Point2::new(x0 - pad, y0 - pad),
        Point2::new(x1 + pad, y0 - pad),
        Point2::new(x1 + pad, y1 + pad),
        Point2::new(x0 - pad, y1 + pad),
    ];
    let n = pts.len();
    for i in 0..n {
        kernel = clip_left_of(&kernel, pts[i], pts[(i + 1) % n]);
        if kernel.len() < 3 {
            return Vec::new();
        }
    }
    simplify_convex(&kernel, diameter(pts))
}

/// Drops repeated and collinear vertices of a convex loop.
fn simplify_convex(poly: &[Point2], scale: f64) -> Vec<Point2> {
    let tol = 1e-13 * scale;
    let mut out: Vec<Point2> = Vec::with_capacity(poly.len());
    for &p in poly {
        if out.last().is_none_or(|q| q.dist(p) > tol) {
            out.push(p);
        }
    }
    while out.len() > 1 && out[0].dist(*out.last().unwrap()) <= tol {
        out.pop();
    }
    loop {
        let n = out.len();
        if n < 3 {
            return out;
        }
        let drop = (0..n).find(|&i| {
            let (a, b, c) = (out[(i + n - 1) % n], out[i], out[(i + 1) % n]);
            let cross = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
            cross.abs() <= tol * scale
        });
        match drop {
            Some(i) => {
                out.remove(i);
            }
            None => return out,
        }
    }
}

/// Radius of the largest disc inside a convex counter-clockwise polygon.
///
/// The optimum of `max r s.t. n_i . x + r <= c_i` sits where three edge lines
/// are active, so all triples are enumerated.
fn inscribed_radius(poly: &[Point2]) -> f64 {
    let n = poly.len();
    if n < 3 {
        return 0.0;
    }
    let lines: Vec<(f64, f64, f64)> = (0..n)
        .map(|i| {
            let (a, b) = (poly[i], poly[(i + 1) % n]);
            let len = a.dist(b);
            let (nx, ny) = ((b.y - a.y) / len, -(b.x - a.x) / len);
            (nx, ny, nx * a.x + ny * a.y)
        })
        .collect();
    let scale = diameter(poly);
    let mut best: f64 = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let m = nalgebra::Matrix3::new(
                    lines[i].0, lines[i].1, 1.0, lines[j].0, lines[j].1, 1.0, lines[k].0,
                    lines[k].1, 1.0,
                );
                let rhs = nalgebra::Vector3::new(lines[i].2, lines[j].2, lines[k].2);
                let Some(sol) = m.lu().solve(&rhs) else {
                    continue;
                };
                let r = sol[2];
                if !r.is_finite() || r <= best {
                    continue;
                }
                let feasible = lines
                    .iter()
                    .all(|&(nx, ny, c)| nx * sol[0] + ny * sol[1] + r <= c + 1e-12 * scale);
                if feasible {
                    best = r;
                }
            }
        }
    }
    best
}

fn point_in_convex(poly: &[Point2], p: Point2) -> bool {
    let n = poly.len();
    n >= 3
        && (0..n).all(|i| {
            let (a, b) = (poly[i], poly[(i + 1) % n]);
            (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x) >= -1e-14
        })
}

pub fn quality_report(mesh: &PolygonalMesh) -> Result<MeshQualityReport, MeshError> {
    let mut cells = Vec::with_capacity(mesh.num_cells());
    for c in 0..mesh.num_cells() {
        let pts = mesh.cell_points(c);
        let area = signed_area(&pts);
        let h = diameter(&pts);
        if !(area > 1e-14 * h * h) {
            return Err(MeshError::DegenerateCell { cell: c, area });
        }
        let n = pts.len();
        let min_edge = (0..n)
            .map(|i| pts[i].dist(pts[(i + 1) % n]))
            .fold(f64::INFINITY, f64::min);
        let kernel = cell_kernel(&pts);
        let kernel_area = if kernel.len() >= 3 {
            signed_area(&kernel)
        } else {
            0.0
        };
        cells.push(CellQuality {
            diameter: h,
            rho: inscribed_radius(&kernel),
            edge_count: n,
            min_edge,
            kernel_area,
            centroid_in_kernel: point_in_convex(&kernel, centroid(&pts)),
        });
    }
    let h_max = cells.iter().map(|c| c.diameter).fold(0.0, f64::max);
    let gamma_min = cells
        .iter()
        .map(|c| c.rho / c.diameter)
        .fold(f64::INFINITY, f64::min);
    let n_max = cells.iter().map(|c| c.edge_count).max().unwrap_or(0);
    let min_edge_ratio = cells
        .iter()
        .map(|c| c.min_edge / c.diameter)
        .fold(f64::INFINITY, f64::min);
    let c_h = cells
        .iter()
        .map(|c| (1.0 + c.diameter / c.min_edge).ln())
        .fold(0.0, f64::max);
    Ok(MeshQualityReport {
        cells,
        h_max,
        gamma_min,
        n_max,
        min_edge_ratio,
        c_h,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_square_mesh, BoundaryTag, MeshFamily};

    #[test]
    fn unit_square_cell() {
        let m = generate_square_mesh(1, MeshFamily::Squares).unwrap();
        let r = quality_report(&m).unwrap();
        let c = &r.cells[0];
        assert!((c.diameter - 2f64.sqrt()).abs() < 1e-15);
        assert!((c.rho - 0.5).abs() < 1e-14);
        assert!((r.gamma_min - 0.353553).abs() < 1e-6);
        assert!((c.kernel_area - 1.0).abs() < 1e-14);
        assert!(c.centroid_in_kernel);
    }

    #[test]
    fn midpoint_triangles_brute_force_edge_ratio() {
        let m = generate_square_mesh(2, MeshFamily::TrianglesMidpoint).unwrap();
        let r = quality_report(&m).unwrap();
        let mut brute = f64::INFINITY;
        for c in 0..m.num_cells() {
            let p = m.cell_points(c);
            let h = diameter(&p);
            for i in 0..p.len() {
                brute = brute.min(p[i].dist(p[(i + 1) % p.len()]) / h);
            }
        }
        assert_eq!(r.min_edge_ratio, brute);
        // leg half-length 0.25 over hypotenuse sqrt(0.5)
        assert!((r.min_edge_ratio - 0.25 / 0.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(r.n_max, 6);
    }

    #[test]
    fn midpoint_insertion_keeps_gamma() {
        let t = quality_report(&generate_square_mesh(4, MeshFamily::Triangles).unwrap()).unwrap();
        let h = quality_report(&generate_square_mesh(4, MeshFamily::TrianglesMidpoint).unwrap())
            .unwrap();
        assert!((t.gamma_min - h.gamma_min).abs() < 1e-13);
    }

    #[test]
    fn nonconvex_cell_kernel_is_smaller() {
        // L-shaped hexagon: the kernel is the lower-left unit square
        let pts = vec![
            Point2::new(0.0, 0.0),
            Point2::new(2.0, 0.0),
            Point2::new(2.0, 1.0),
            Point2::new(1.0, 1.0),
            Point2::new(1.0, 2.0),
            Point2::new(0.0, 2.0),
        ];
        let k = cell_kernel(&pts);
        assert!((signed_area(&k) - 1.0).abs() < 1e-14);
        assert!((inscribed_radius(&k) - 0.5).abs() < 1e-14);
        let m = PolygonalMesh::from_cells(pts, vec![vec![0, 1, 2, 3, 4, 5]], BoundaryTag::Dirichlet)
            .unwrap();
        let r = quality_report(&m).unwrap();
        assert!(r.cells[0].rho <= r.cells[0].diameter / 2.0);
    }

    #[test]
    fn rectangle_inradius() {
        let pts = vec![
            Point2::new(0.0, 0.0),
            Point2::new(3.0, 0.0),
            Point2::new(3.0, 1.0),
            Point2::new(0.0, 1.0),
        ];
        assert!((inscribed_radius(&pts) - 0.5).abs() < 1e-14);
    }
}
