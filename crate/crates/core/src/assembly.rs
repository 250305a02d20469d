//! Global DOF numbering, homogeneous Dirichlet elimination and sparse
//! assembly of the stiffness and mass matrices.
//!
//! Scatter contributions are summed in a canonical order (sorted by target
//! and value), so the assembled matrices do not depend on cell ordering and
//! `K[i][j]` and `K[j][i]` are bitwise equal.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mesh::io::fmt_f64;
use crate::mesh::{BoundaryTag, PolygonalMesh};
use crate::vem::{local_matrices, ElementGeometry, Material, Stabilization, VemError};

#[derive(Debug, Error)]
pub enum AssemblyError {
    #[error("cell {cell}: {source}")]
    Element { cell: usize, source: VemError },
    #[error("mesh has no Dirichlet-tagged boundary edges")]
    NoDirichletTags,
    #[error("no free degrees of freedom remain after applying boundary conditions")]
    NoFreeDofs,
    #[error("connected mesh component containing vertex {0} has no Dirichlet vertex")]
    FloatingComponent(usize),
    #[error("stabilization multiplier must be positive (got {0})")]
    Beta(f64),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Which boundary vertices are clamped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BcKind {
    /// Every boundary vertex, regardless of tags.
    ClampedAll,
    /// Vertices on edges tagged Dirichlet; the remainder is traction free.
    DirichletOnTagged,
}

/// Global numbering: DOF `c` of vertex `v` is `dofs[v][c]`, `None` when
/// constrained. Free ids follow vertex order, component-interleaved.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DofMap {
    pub dofs: Vec<[Option<usize>; 2]>,
    pub free_count: usize,
}

impl DofMap {
    /// Numbering with every vertex free.
    pub fn unconstrained(num_vertices: usize) -> Self {
        DofMap {
            dofs: (0..num_vertices)
                .map(|v| [Some(2 * v), Some(2 * v + 1)])
                .collect(),
            free_count: 2 * num_vertices,
        }
    }

    pub fn num_vertices(&self) -> usize {
        self.dofs.len()
    }

    pub fn constrained_count(&self) -> usize {
        2 * self.num_vertices() - self.free_count
    }

    pub fn is_constrained(&self, vertex: usize) -> bool {
        self.dofs[vertex][0].is_none()
    }

    /// Per-vertex displacement from a free-DOF vector; constrained vertices
    /// get zero.
    pub fn expand(&self, free: &[f64]) -> Vec<[f64; 2]> {
        self.dofs
            .iter()
            .map(|d| [d[0].map_or(0.0, |i| free[i]), d[1].map_or(0.0, |i| free[i])])
            .collect()
    }
}

pub fn build_dof_map(mesh: &PolygonalMesh, bc: BcKind) -> Result<DofMap, AssemblyError> {
    let nv = mesh.num_vertices();
    let mut fixed = vec![false; nv];
    let mut any = false;
    for b in &mesh.boundary {
        if bc == BcKind::ClampedAll || b.tag == BoundaryTag::Dirichlet {
            fixed[b.edge[0]] = true;
            fixed[b.edge[1]] = true;
            any = true;
        }
    }
    if !any {
        return Err(AssemblyError::NoDirichletTags);
    }
    check_components(mesh, &fixed)?;
    let mut next = 0;
    let dofs = fixed
        .iter()
        .map(|&f| {
            if f {
                [None, None]
            } else {
                next += 2;
                [Some(next - 2), Some(next - 1)]
            }
        })
        .collect();
    Ok(DofMap {
        dofs,
        free_count: next,
    })
}

fn check_components(mesh: &PolygonalMesh, fixed: &[bool]) -> Result<(), AssemblyError> {
    fn find(parent: &mut [usize], mut v: usize) -> usize {
        while parent[v] != v {
            parent[v] = parent[parent[v]];
            v = parent[v];
        }
        v
    }
    let nv = mesh.num_vertices();
    let mut parent: Vec<usize> = (0..nv).collect();
    for cell in &mesh.cells {
        for w in cell.windows(2) {
            let (a, b) = (find(&mut parent, w[0]), find(&mut parent, w[1]));
            parent[a.max(b)] = a.min(b);
        }
    }
    let mut anchored = vec![false; nv];
    let mut used = vec![false; nv];
    for cell in &mesh.cells {
        for &v in cell {
            used[v] = true;
        }
    }
    for v in 0..nv {
        if fixed[v] {
            let r = find(&mut parent, v);
            anchored[r] = true;
        }
    }
    for v in 0..nv {
        if used[v] && !anchored[find(&mut parent, v)] {
            return Err(AssemblyError::FloatingComponent(v));
        }
    }
    Ok(())
}

/// Square sparse matrix in compressed-row form with full (both triangles)
/// storage and sorted column indices.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl CsrMatrix {
    /// Sums duplicate triplets. Contributions to one entry are added in
    /// ascending value order, which makes the result independent of the
    /// input order.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_by(|a, b| {
            (a.0, a.1)
                .cmp(&(b.0, b.1))
                .then_with(|| a.2.total_cmp(&b.2))
        });
        let mut row_ptr = vec![0; n + 1];
        let mut col_idx = Vec::new();
        let mut values: Vec<f64> = Vec::new();
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in triplets {
            assert!(i < n && j < n, "triplet ({i}, {j}) outside {n}x{n}");
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(j);
                values.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        CsrMatrix {
            n,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()]
            .iter()
            .copied()
            .zip(self.values[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[r.clone()].binary_search(&j) {
            Ok(k) => self.values[r.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.row(i).map(|(j, v)| v * x[j]).sum())
            .collect()
    }

    /// `max |A - A^T|` over stored entries.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                d[(i, j)] = v;
            }
        }
        d
    }

    /// Matrix Market coordinate file, `symmetric` storage (lower triangle).
    pub fn to_matrix_market(&self) -> String {
        let lower: Vec<(usize, usize, f64)> = (0..self.n)
            .flat_map(|i| self.row(i).filter(move |&(j, _)| j <= i).map(move |(j, v)| (i, j, v)))
            .collect();
        let mut s = String::from("%%MatrixMarket matrix coordinate real symmetric\n");
        let _ = writeln!(s, "{} {} {}", self.n, self.n, lower.len());
        for (i, j, v) in lower {
            let _ = writeln!(s, "{} {} {}", i + 1, j + 1, fmt_f64(v));
        }
        s
    }

    pub fn write_matrix_market(&self, path: impl AsRef<Path>) -> Result<(), AssemblyError> {
        fs::write(path, self.to_matrix_market())?;
        Ok(())
    }
}

/// Stiffness and mass restricted to the free DOFs.
#[derive(Debug, Clone)]
pub struct GlobalSystem {
    pub k: CsrMatrix,
    pub m: CsrMatrix,
    pub dof_map: DofMap,
}

impl GlobalSystem {
    pub fn num_free(&self) -> usize {
        self.dof_map.free_count
    }
}

pub fn assemble(
    mesh: &PolygonalMesh,
    material: &Material,
    scheme: Stabilization,
    beta: f64,
    bc: BcKind,
) -> Result<GlobalSystem, AssemblyError> {
    let dof_map = build_dof_map(mesh, bc)?;
    if dof_map.free_count == 0 {
        return Err(AssemblyError::NoFreeDofs);
    }
    assemble_with(mesh, material, scheme, beta, dof_map)
}

/// Assembles over an arbitrary numbering; DOFs mapped to `None` are
/// eliminated.
pub fn assemble_with(
    mesh: &PolygonalMesh,
    material: &Material,
    scheme: Stabilization,
    beta: f64,
    dof_map: DofMap,
) -> Result<GlobalSystem, AssemblyError> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(AssemblyError::Beta(beta));
    }
    let mut kt = Vec::new();
    let mut mt = Vec::new();
    for (c, cell) in mesh.cells.iter().enumerate() {
        let geo = ElementGeometry::new(&mesh.cell_points(c))
            .map_err(|source| AssemblyError::Element { cell: c, source })?;
        let local = local_matrices(&geo, material, scheme, beta)
            .map_err(|source| AssemblyError::Element { cell: c, source })?;
        let global: Vec<Option<usize>> = cell
            .iter()
            .flat_map(|&v| dof_map.dofs[v])
            .collect();
        for (a, ga) in global.iter().enumerate() {
            let Some(i) = *ga else { continue };
            for (b, gb) in global.iter().enumerate() {
                let Some(j) = *gb else { continue };
                kt.push((i, j, local.k[(a, b)]));
                mt.push((i, j, local.m[(a, b)]));
            }
        }
    }
    let n = dof_map.free_count;
    Ok(GlobalSystem {
        k: CsrMatrix::from_triplets(n, kt),
        m: CsrMatrix::from_triplets(n, mt),
        dof_map,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_square_mesh, MeshFamily};

    fn steel_free() -> Material {
        Material::from_young_poisson(1.0, 0.35, 1.0).unwrap()
    }

    #[test]
    fn dof_counts() {
        let one = generate_square_mesh(1, MeshFamily::Squares).unwrap();
        assert_eq!(build_dof_map(&one, BcKind::ClampedAll).unwrap().free_count, 0);
        let two = generate_square_mesh(2, MeshFamily::Squares).unwrap();
        assert_eq!(build_dof_map(&two, BcKind::ClampedAll).unwrap().free_count, 2);
        let bottom = one.clone().with_bottom_dirichlet();
        let map = build_dof_map(&bottom, BcKind::DirichletOnTagged).unwrap();
        assert_eq!(map.free_count, 4);
        assert_eq!(map.constrained_count() + map.free_count, 8);
    }

    #[test]
    fn zero_free_dofs_is_an_error() {
        let one = generate_square_mesh(1, MeshFamily::Squares).unwrap();
        let err = assemble(&one, &steel_free(), Stabilization::DofiDofi, 1.0, BcKind::ClampedAll)
            .unwrap_err();
        assert!(matches!(err, AssemblyError::NoFreeDofs));
    }

    #[test]
    fn missing_dirichlet_tags() {
        let mut m = generate_square_mesh(2, MeshFamily::Squares).unwrap();
        m.retag_boundary(|_, _| BoundaryTag::Neumann);
        assert!(matches!(
            build_dof_map(&m, BcKind::DirichletOnTagged),
            Err(AssemblyError::NoDirichletTags)
        ));
    }

    #[test]
    fn triplet_sum_is_order_independent() {
        let a = vec![(0, 0, 0.1), (0, 0, 0.2), (0, 0, 0.3), (1, 0, 1.0)];
        let mut b = a.clone();
        b.reverse();
        let (ca, cb) = (CsrMatrix::from_triplets(2, a), CsrMatrix::from_triplets(2, b));
        assert_eq!(ca, cb);
        assert_eq!(ca.get(0, 1), 0.0);
        assert_eq!(ca.nnz(), 2);
    }

    #[test]
    fn matrix_market_lower_triangle() {
        let c = CsrMatrix::from_triplets(2, vec![(0, 0, 2.0), (0, 1, -1.0), (1, 0, -1.0), (1, 1, 2.0)]);
        let mm = c.to_matrix_market();
        let lines: Vec<&str> = mm.lines().collect();
        assert_eq!(lines[1], "2 2 3");
        assert_eq!(lines[3], "2 1 -1.0000000000000000e0");
    }

    #[test]
    fn symmetric_and_cell_order_independent() {
        let mesh = generate_square_mesh(4, MeshFamily::DeformedSquares { seed: 3 }).unwrap();
        let sys = assemble(&mesh, &steel_free(), Stabilization::Trace, 2.0, BcKind::ClampedAll)
            .unwrap();
        assert_eq!(sys.k.asymmetry(), 0.0);
        assert_eq!(sys.m.asymmetry(), 0.0);
        let mut rev = mesh.clone();
        rev.cells.reverse();
        let sys2 = assemble(&rev, &steel_free(), Stabilization::Trace, 2.0, BcKind::ClampedAll)
            .unwrap();
        assert_eq!(sys.k, sys2.k);
        assert_eq!(sys.m, sys2.m);
    }

    #[test]
    fn additive_over_submeshes() {
        let mesh = generate_square_mesh(3, MeshFamily::TrianglesMidpoint).unwrap();
        let map = DofMap::unconstrained(mesh.num_vertices());
        let mat = steel_free();
        let full = assemble_with(&mesh, &mat, Stabilization::DofiDofi, 1.0, map.clone()).unwrap();
        let (mut left, mut right) = (mesh.clone(), mesh.clone());
        let half = mesh.num_cells() / 2;
        left.cells.truncate(half);
        right.cells.drain(..half);
        let l = assemble_with(&left, &mat, Stabilization::DofiDofi, 1.0, map.clone()).unwrap();
        let r = assemble_with(&right, &mat, Stabilization::DofiDofi, 1.0, map).unwrap();
        let sum = l.k.to_dense() + r.k.to_dense();
        let diff = (sum - full.k.to_dense()).abs().max();
        assert!(diff <= 1e-14 * full.k.to_dense().abs().max());
    }

    #[test]
    fn constant_field_mass() {
        let mesh = generate_square_mesh(5, MeshFamily::DeformedTrianglesMidpoint { seed: 1 }).unwrap();
        let rho = 2.5;
        let mat = Material::from_young_poisson(1.0, 0.3, rho).unwrap();
        let map = DofMap::unconstrained(mesh.num_vertices());
        let sys = assemble_with(&mesh, &mat, Stabilization::DofiDofi, 1.0, map).unwrap();
        let c = [0.6, -0.8];
        let x: Vec<f64> = (0..sys.num_free()).map(|i| c[i % 2]).collect();
        let mx = sys.m.mul_vec(&x);
        let q: f64 = x.iter().zip(&mx).map(|(a, b)| a * b).sum();
        assert!((q - rho * 1.0 * 1.0).abs() < 1e-13);
    }

    #[test]
    fn clamped_stiffness_is_positive_definite() {
        let mesh = generate_square_mesh(4, MeshFamily::Squares).unwrap();
        let sys = assemble(&mesh, &steel_free(), Stabilization::DofiDofi, 1.0, BcKind::ClampedAll)
            .unwrap();
        assert_eq!(sys.num_free(), 18);
        assert!(sys.k.to_dense().cholesky().is_some());
    }

    #[test]
    fn expand_zeroes_constrained() {
        let mesh = generate_square_mesh(2, MeshFamily::Squares).unwrap();
        let map = build_dof_map(&mesh, BcKind::ClampedAll).unwrap();
        let u = map.expand(&[1.0, 2.0]);
        assert_eq!(u[4], [1.0, 2.0]);
        assert_eq!(u.iter().filter(|d| **d == [0.0, 0.0]).count(), 8);
    }
}
