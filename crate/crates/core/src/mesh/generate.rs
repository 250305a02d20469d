use std::collections::BTreeMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{voronoi, BoundaryTag, Domain, MeshError, Point2, PolygonalMesh};

/// Relative jitter amplitude (fraction of the cell width) for deformed families.
const JITTER: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MeshFamily {
    Squares,
    Triangles,
    /// Structured triangles with every edge midpoint inserted as a vertex.
    TrianglesMidpoint,
    DeformedSquares { seed: u64 },
    DeformedTrianglesMidpoint { seed: u64 },
    /// Seeded Voronoi tessellation with two Lloyd sweeps.
    Voronoi { seed: u64, cell_count: usize },
}

impl MeshFamily {
    pub const NAMES: [&'static str; 6] = [
        "squares",
        "triangles",
        "triangles_midpoint",
        "deformed_squares",
        "deformed_triangles_midpoint",
        "voronoi",
    ];

    /// Parses a family name. `voronoi_cells` is only used by `voronoi`.
    pub fn from_name(name: &str, seed: u64, voronoi_cells: usize) -> Result<Self, MeshError> {
        Ok(match name {
            "squares" => MeshFamily::Squares,
            "triangles" => MeshFamily::Triangles,
            "triangles_midpoint" => MeshFamily::TrianglesMidpoint,
            "deformed_squares" => MeshFamily::DeformedSquares { seed },
            "deformed_triangles_midpoint" => MeshFamily::DeformedTrianglesMidpoint { seed },
            "voronoi" => MeshFamily::Voronoi {
                seed,
                cell_count: voronoi_cells,
            },
            other => return Err(MeshError::UnknownFamily(other.to_string())),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            MeshFamily::Squares => "squares",
            MeshFamily::Triangles => "triangles",
            MeshFamily::TrianglesMidpoint => "triangles_midpoint",
            MeshFamily::DeformedSquares { .. } => "deformed_squares",
            MeshFamily::DeformedTrianglesMidpoint { .. } => "deformed_triangles_midpoint",
            MeshFamily::Voronoi { .. } => "voronoi",
        }
    }
}

impl fmt::Display for MeshFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Mesh of `(0,1)^2` with `n` cells per side (`n` is ignored for Voronoi,
/// which uses its own cell count).
pub fn generate_square_mesh(n: usize, family: MeshFamily) -> Result<PolygonalMesh, MeshError> {
    if let MeshFamily::Voronoi { seed, cell_count } = family {
        return voronoi::voronoi_square(seed, cell_count);
    }
    if n == 0 {
        return Err(MeshError::ZeroSubdivisions(n));
    }
    let blocks: Vec<(i64, i64)> = (0..n as i64)
        .flat_map(|j| (0..n as i64).map(move |i| (i, j)))
        .collect();
    structured(n, &blocks, family)
}

/// Mesh of `(0,2)^2 \ [1,2)^2` with `n` cells per unit length.
pub fn generate_lshape_mesh(n: usize, family: MeshFamily) -> Result<PolygonalMesh, MeshError> {
    if let MeshFamily::Voronoi { .. } = family {
        return Err(MeshError::UnsupportedFamily {
            family: family.name().to_string(),
            domain: Domain::Lshape.name().to_string(),
        });
    }
    if n == 0 {
        return Err(MeshError::ZeroSubdivisions(n));
    }
    let m = n as i64;
    let blocks: Vec<(i64, i64)> = (0..2 * m)
        .flat_map(|j| (0..2 * m).map(move |i| (i, j)))
        .filter(|&(i, j)| !(i >= m && j >= m))
        .collect();
    structured(n, &blocks, family)
}

/// Blocks with odd `i + j` are split along the anti-diagonal, giving the
/// alternating (checkerboard) pattern, which is invariant under rotations by
/// a quarter turn.
fn anti_diagonal(i: i64, j: i64) -> bool {
    (i + j).rem_euclid(2) == 1
}

/// Vertex keys live on a doubled lattice: corners at even coordinates,
/// edge midpoints at odd ones.
type Key = (i64, i64);

fn structured(
    n: usize,
    blocks: &[(i64, i64)],
    family: MeshFamily,
) -> Result<PolygonalMesh, MeshError> {
    let (split, midpoints, seed) = match family {
        MeshFamily::Squares => (false, false, None),
        MeshFamily::Triangles => (true, false, None),
        MeshFamily::TrianglesMidpoint => (true, true, None),
        MeshFamily::DeformedSquares { seed } => (false, false, Some(seed)),
        MeshFamily::DeformedTrianglesMidpoint { seed } => (true, true, Some(seed)),
        MeshFamily::Voronoi { .. } => unreachable!("handled by the callers"),
    };

    let mut key_cells: Vec<Vec<Key>> = Vec::new();
    for &(i, j) in blocks {
        let (x0, y0, x1, y1) = (2 * i, 2 * j, 2 * i + 2, 2 * j + 2);
        let corners: Vec<Vec<Key>> = if split && anti_diagonal(i, j) {
            vec![
                vec![(x0, y0), (x1, y0), (x0, y1)],
                vec![(x1, y0), (x1, y1), (x0, y1)],
            ]
        } else if split {
            vec![
                vec![(x0, y0), (x1, y0), (x1, y1)],
                vec![(x0, y0), (x1, y1), (x0, y1)],
            ]
        } else {
            vec![vec![(x0, y0), (x1, y0), (x1, y1), (x0, y1)]]
        };
        for loop_ in corners {
            if midpoints {
                let k = loop_.len();
                let mut with_mid = Vec::with_capacity(2 * k);
                for s in 0..k {
                    let (a, b) = (loop_[s], loop_[(s + 1) % k]);
                    with_mid.push(a);
                    with_mid.push(((a.0 + b.0) / 2, (a.1 + b.1) / 2));
                }
                key_cells.push(with_mid);
            } else {
                key_cells.push(loop_);
            }
        }
    }

    // row-major vertex numbering
    let mut ids: BTreeMap<(i64, i64), usize> = BTreeMap::new();
    for cell in &key_cells {
        for &(x, y) in cell {
            ids.insert((y, x), 0);
        }
    }
    let keys: Vec<Key> = ids.keys().map(|&(y, x)| (x, y)).collect();
    for (id, v) in ids.values_mut().enumerate() {
        *v = id;
    }
    let cells: Vec<Vec<usize>> = key_cells
        .iter()
        .map(|c| c.iter().map(|&(x, y)| ids[&(y, x)]).collect())
        .collect();

    let scale = 1.0 / (2 * n) as f64;
    let lattice = |k: Key| Point2::new(k.0 as f64 * scale, k.1 as f64 * scale);
    let vertices: Vec<Point2> = keys.iter().map(|&k| lattice(k)).collect();
    let mesh = PolygonalMesh::from_cells(vertices, cells, BoundaryTag::Dirichlet)?;

    let Some(seed) = seed else {
        return Ok(mesh);
    };

    let mut on_boundary = vec![false; keys.len()];
    for v in mesh.boundary_vertices() {
        on_boundary[v] = true;
    }
    let amplitude = JITTER / n as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut vertices = mesh.vertices.clone();
    let is_corner = |k: Key| k.0 % 2 == 0 && k.1 % 2 == 0;
    for (v, &k) in keys.iter().enumerate() {
        if is_corner(k) && !on_boundary[v] {
            let dx: f64 = rng.random_range(-amplitude..=amplitude);
            let dy: f64 = rng.random_range(-amplitude..=amplitude);
            vertices[v].x += dx;
            vertices[v].y += dy;
        }
    }
    for (v, &k) in keys.iter().enumerate() {
        if is_corner(k) {
            continue;
        }
        // midpoint of a horizontal, vertical or diagonal lattice edge
        let (dx, mut dy) = (k.0.rem_euclid(2), k.1.rem_euclid(2));
        if dx == 1 && dy == 1 && anti_diagonal((k.0 - 1) / 2, (k.1 - 1) / 2) {
            dy = -1;
        }
        let a = ids[&(k.1 - dy, k.0 - dx)];
        let b = ids[&(k.1 + dy, k.0 + dx)];
        vertices[v] = vertices[a].midpoint(vertices[b]);
    }
    let mut deformed = mesh;
    deformed.vertices = vertices;
    deformed.validate()?;
    Ok(deformed)
}
