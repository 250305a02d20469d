//! Bounded Voronoi tessellation of the unit square with Lloyd relaxation.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::polygon::{centroid, clip_left_of};
use super::{BoundaryTag, MeshError, Point2, PolygonalMesh};

const LLOYD_SWEEPS: usize = 2;
const MERGE_TOL: f64 = 1e-10;

pub(super) fn voronoi_square(seed: u64, cell_count: usize) -> Result<PolygonalMesh, MeshError> {
    if cell_count == 0 {
        return Err(MeshError::EmptyVoronoi);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sites: Vec<Point2> = (0..cell_count)
        .map(|_| Point2::new(rng.random::<f64>(), rng.random::<f64>()))
        .collect();
    for _ in 0..LLOYD_SWEEPS {
        let cells = voronoi_cells(&sites);
        sites = cells.iter().map(|c| centroid(c)).collect();
    }
    let cells = voronoi_cells(&sites);
    stitch(&cells)
}

struct SiteGrid {
    width: f64,
    dim: usize,
    buckets: Vec<Vec<usize>>,
}

impl SiteGrid {
    fn new(sites: &[Point2]) -> Self {
        let dim = ((sites.len() as f64).sqrt().ceil() as usize).max(1);
        let width = 1.0 / dim as f64;
        let mut buckets = vec![Vec::new(); dim * dim];
        for (s, p) in sites.iter().enumerate() {
            let (i, j) = Self::locate(p, dim);
            buckets[j * dim + i].push(s);
        }
        SiteGrid {
            width,
            dim,
            buckets,
        }
    }

    fn locate(p: &Point2, dim: usize) -> (usize, usize) {
        let f = |t: f64| ((t * dim as f64).floor().max(0.0) as usize).min(dim - 1);
        (f(p.x), f(p.y))
    }

    /// Sites in the square ring at Chebyshev distance `r` around bucket `(i, j)`.
    fn ring(&self, i: usize, j: usize, r: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let (i, j, r) = (i as i64, j as i64, r as i64);
        for bj in j - r..=j + r {
            for bi in i - r..=i + r {
                if (bi - i).abs() != r && (bj - j).abs() != r {
                    continue;
                }
                if bi < 0 || bj < 0 || bi >= self.dim as i64 || bj >= self.dim as i64 {
                    continue;
                }
                out.extend_from_slice(&self.buckets[bj as usize * self.dim + bi as usize]);
            }
        }
        out
    }
}

fn voronoi_cells(sites: &[Point2]) -> Vec<Vec<Point2>> {
    let grid = SiteGrid::new(sites);
    let square = vec![
        Point2::new(0.0, 0.0),
        Point2::new(1.0, 0.0),
        Point2::new(1.0, 1.0),
        Point2::new(0.0, 1.0),
    ];
    sites
        .iter()
        .enumerate()
        .map(|(s, &p)| {
            let mut cell = square.clone();
            let (i, j) = SiteGrid::locate(&p, grid.dim);
            for r in 0.. {
                // every site in ring r is at least (r - 1) * width away
                let reach = cell.iter().map(|q| p.dist(*q)).fold(0.0, f64::max);
                if r >= 2 && (r as f64 - 1.0) * grid.width > 2.0 * reach {
                    break;
                }
                if r > grid.dim {
                    break;
                }
                let mut others = grid.ring(i, j, r);
                others.sort_unstable();
                for o in others {
                    if o == s {
                        continue;
                    }
                    let q = sites[o];
                    let mid = p.midpoint(q);
                    // bisector directed so that p lies on its left
                    let dir = Point2::new(-(q.y - p.y), q.x - p.x);
                    let a = mid;
                    let b = Point2::new(mid.x + dir.x, mid.y + dir.y);
                    cell = clip_left_of(&cell, a, b);
                }
            }
            cell
        })
        .collect()
}

/// Merges coincident vertices of independently clipped cells into one mesh.
fn stitch(cells: &[Vec<Point2>]) -> Result<PolygonalMesh, MeshError> {
    let bucket = 1e-7;
    let mut lookup: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    let mut vertices: Vec<Point2> = Vec::new();
    let mut loops = Vec::with_capacity(cells.len());
    for cell in cells {
        let mut loop_: Vec<usize> = Vec::with_capacity(cell.len());
        for &p in cell {
            let key = ((p.x / bucket).floor() as i64, (p.y / bucket).floor() as i64);
            let mut found = None;
            'search: for dj in -1..=1 {
                for di in -1..=1 {
                    if let Some(ids) = lookup.get(&(key.0 + di, key.1 + dj)) {
                        for &id in ids {
                            if vertices[id].dist(p) < MERGE_TOL {
                                found = Some(id);
                                break 'search;
                            }
                        }
                    }
                }
            }
            let id = found.unwrap_or_else(|| {
                vertices.push(p);
                lookup.entry(key).or_default().push(vertices.len() - 1);
                vertices.len() - 1
            });
            if loop_.last() != Some(&id) {
                loop_.push(id);
            }
        }
        while loop_.len() > 1 && loop_.first() == loop_.last() {
            loop_.pop();
        }
        loops.push(loop_);
    }
    PolygonalMesh::from_cells(vertices, loops, BoundaryTag::Dirichlet)
}
