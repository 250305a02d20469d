//! Smallest eigenpairs of `K w = kappa M w` with `K` symmetric positive
//! definite and `M` symmetric positive semidefinite.
//!
//! `K` is factored once. The problem is recast as the largest eigenvalues
//! `theta = 1 / kappa` of `K^{-1} M`, which is self-adjoint in the `K` inner
//! product. Small systems use the dense reduction `L^{-1} M L^{-T}`; larger
//! ones a block Krylov (Lanczos) iteration with full reorthogonalization,
//! restarted from the leading Ritz vectors. Directions with
//! `theta <= 1e-10 theta_max` belong to the null space of `M` and are
//! discarded as infinite eigenvalues.

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::{MatMut, Side};
use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::assembly::{CsrMatrix, GlobalSystem};

pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_MODES: usize = 10;
/// Relative cutoff below which `theta` counts as zero.
pub const RANK_CUTOFF: f64 = 1e-10;

const DENSE_LIMIT: usize = 400;
const BLOCK: usize = 4;
const MAX_RESTARTS: usize = 200;
const START_SEED: u64 = 0x5eed_cafe;
/// Residuals within this multiple of the rounding floor count as converged.
const FLOOR_FACTOR: f64 = 100.0;

#[derive(Debug, Error)]
pub enum EigenError {
    #[error("stiffness matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("requested {requested} eigenvalues but only {available} are finite")]
    Insufficient {
        requested: usize,
        available: usize,
        partial: Box<Spectrum>,
    },
    #[error("no convergence after {0} restarts")]
    NoConvergence(usize),
    #[error("invalid request: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Method {
    /// Dense below a few hundred unknowns, Lanczos above.
    #[default]
    Auto,
    Dense,
    Lanczos,
}

/// Ascending eigenpairs; eigenvectors live on the free DOFs and are
/// `M`-orthonormal with the first significant entry positive.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub frequencies: Vec<f64>,
    pub eigenvectors: Vec<Vec<f64>>,
    /// `|K w - kappa M w| / |K w|`
    pub residuals: Vec<f64>,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }
}

pub fn solve_smallest(system: &GlobalSystem, m: usize, tol: f64) -> Result<Spectrum, EigenError> {
    solve_pencil(&system.k, &system.m, m, tol, Method::Auto)
}

pub fn solve_pencil(
    k: &CsrMatrix,
    mass: &CsrMatrix,
    m: usize,
    tol: f64,
    method: Method,
) -> Result<Spectrum, EigenError> {
    if m == 0 {
        return Err(EigenError::Invalid("at least one eigenvalue must be requested".into()));
    }
    if !(tol > 0.0) {
        return Err(EigenError::Invalid(format!("tolerance must be positive (got {tol})")));
    }
    if k.n != mass.n || k.n == 0 {
        return Err(EigenError::Invalid("K and M must be square of equal nonzero size".into()));
    }
    let dense = match method {
        Method::Auto => k.n <= DENSE_LIMIT,
        Method::Dense => true,
        Method::Lanczos => false,
    };
    let pairs = if dense {
        dense_pairs(k, mass)?
    } else {
        lanczos_pairs(k, mass, m, tol)?
    };
    finish(k, mass, pairs, m)
}

/// `(kappa, w)` with `w^T K w = 1`, ascending in `kappa`.
type Pairs = Vec<(f64, Vec<f64>)>;

fn dense_pairs(k: &CsrMatrix, mass: &CsrMatrix) -> Result<Pairs, EigenError> {
    let chol = k
        .to_dense()
        .cholesky()
        .ok_or(EigenError::NotPositiveDefinite)?;
    let l = chol.l();
    let mut c = mass.to_dense();
    // C = L^{-1} M L^{-T}
    if !l.solve_lower_triangular_mut(&mut c) {
        return Err(EigenError::NotPositiveDefinite);
    }
    let mut ct = c.transpose();
    if !l.solve_lower_triangular_mut(&mut ct) {
        return Err(EigenError::NotPositiveDefinite);
    }
    let c = (&ct + ct.transpose()) * 0.5;
    let eig = SymmetricEigen::new(c);
    let theta_max = eig.eigenvalues.max();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let lt = l.transpose();
    let mut pairs = Vec::new();
    for i in order {
        let theta = eig.eigenvalues[i];
        if !(theta > RANK_CUTOFF * theta_max) {
            break;
        }
        let y = eig.eigenvectors.column(i).into_owned();
        let x = lt
            .solve_upper_triangular(&y)
            .ok_or(EigenError::NotPositiveDefinite)?;
        pairs.push((1.0 / theta, x.as_slice().to_vec()));
    }
    Ok(pairs)
}

struct Factor {
    llt: faer::sparse::linalg::solvers::Llt<usize, f64>,
}

impl Factor {
    fn new(k: &CsrMatrix) -> Result<Self, EigenError> {
        let lower: Vec<Triplet<usize, usize, f64>> = (0..k.n)
            .flat_map(|i| {
                k.row(i)
                    .filter(move |&(j, _)| j <= i)
                    .map(move |(j, v)| Triplet::new(i, j, v))
            })
            .collect();
        let a = SparseColMat::<usize, f64>::try_new_from_triplets(k.n, k.n, &lower)
            .map_err(|e| EigenError::Invalid(format!("{e:?}")))?;
        let llt = a
            .sp_cholesky(Side::Lower)
            .map_err(|_| EigenError::NotPositiveDefinite)?;
        Ok(Factor { llt })
    }

    fn solve(&self, rhs: &mut [f64]) {
        let n = rhs.len();
        self.llt
            .solve_in_place(MatMut::from_column_major_slice_mut(rhs, n, 1));
    }
}

/// Size of the rounding error committed when forming `K x - kappa M x`,
/// relative to `|K x|`. Residuals cannot be resolved below this level.
fn rounding_floor(k: &CsrMatrix, mass: &CsrMatrix, kappa: f64, x: &[f64], kx: &[f64]) -> f64 {
    let abs_mul = |a: &CsrMatrix| -> Vec<f64> {
        (0..a.n)
            .map(|i| a.row(i).map(|(j, v)| (v * x[j]).abs()).sum())
            .collect()
    };
    let (ak, am) = (abs_mul(k), abs_mul(mass));
    f64::EPSILON * (norm(&ak) + kappa * norm(&am)) / norm(kx)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// `K`-orthonormal basis `v` together with `K v` and `M v`.
struct Basis<'a> {
    k: &'a CsrMatrix,
    mass: &'a CsrMatrix,
    v: Vec<Vec<f64>>,
    kv: Vec<Vec<f64>>,
    mv: Vec<Vec<f64>>,
}

impl<'a> Basis<'a> {
    fn new(k: &'a CsrMatrix, mass: &'a CsrMatrix) -> Self {
        Basis {
            k,
            mass,
            v: Vec::new(),
            kv: Vec::new(),
            mv: Vec::new(),
        }
    }

    fn len(&self) -> usize {
        self.v.len()
    }

    /// Orthogonalizes `w` against the basis (two Gram-Schmidt passes) and
    /// appends it unless it is numerically dependent.
    fn push(&mut self, mut w: Vec<f64>) -> bool {
        let mut kw = self.k.mul_vec(&w);
        let start = dot(&w, &kw).max(0.0).sqrt();
        if !(start > 0.0) {
            return false;
        }
        for _ in 0..2 {
            for (v, kv) in self.v.iter().zip(&self.kv) {
                let c = dot(kv, &w);
                axpy(-c, v, &mut w);
            }
            kw = self.k.mul_vec(&w);
        }
        let nk = dot(&w, &kw).max(0.0).sqrt();
        if !(nk > 1e-10 * start) {
            return false;
        }
        w.iter_mut().for_each(|x| *x /= nk);
        kw.iter_mut().for_each(|x| *x /= nk);
        self.mv.push(self.mass.mul_vec(&w));
        self.v.push(w);
        self.kv.push(kw);
        true
    }

    /// Rayleigh-Ritz for `V^T M V y = theta V^T K V y`. The Gram matrix
    /// `V^T K V` is kept instead of assumed to be the identity, so rounding
    /// in the orthogonalization does not limit the attainable residual.
    fn ritz(&self) -> Result<(Vec<f64>, DMatrix<f64>), EigenError> {
        let p = self.len();
        let sym = |a: &[Vec<f64>]| {
            DMatrix::from_fn(p, p, |i, j| 0.5 * (dot(&self.v[i], &a[j]) + dot(&self.v[j], &a[i])))
        };
        let (gram, h) = (sym(&self.kv), sym(&self.mv));
        let l = gram.cholesky().ok_or(EigenError::NotPositiveDefinite)?.unpack();
        let mut c = h;
        l.solve_lower_triangular_mut(&mut c);
        let mut ct = c.transpose();
        l.solve_lower_triangular_mut(&mut ct);
        let eig = SymmetricEigen::new((&ct + ct.transpose()) * 0.5);
        let mut ys = eig.eigenvectors;
        l.transpose().solve_upper_triangular_mut(&mut ys);
        Ok((eig.eigenvalues.as_slice().to_vec(), ys))
    }

    fn combine(cols: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; cols[0].len()];
        for (c, &yi) in cols.iter().zip(y) {
            axpy(yi, c, &mut out);
        }
        out
    }
}

fn lanczos_pairs(k: &CsrMatrix, mass: &CsrMatrix, nev: usize, tol: f64) -> Result<Pairs, EigenError> {
    let n = k.n;
    let factor = Factor::new(k)?;
    let op = |x: &[f64]| {
        let mut y = mass.mul_vec(x);
        factor.solve(&mut y);
        y
    };
    let mut rng = ChaCha8Rng::seed_from_u64(START_SEED);
    let mut random_block = |count: usize| -> Vec<Vec<f64>> {
        (0..count)
            .map(|_| op(&(0..n).map(|_| rng.random::<f64>() - 0.5).collect::<Vec<_>>()))
            .collect()
    };
    let max_basis = n.min((4 * nev + 4 * BLOCK).max(60));
    let keep = (max_basis / 2).max(nev + BLOCK).min(max_basis.saturating_sub(BLOCK)).max(1);

    let mut basis = Basis::new(k, mass);
    let mut pending = random_block(BLOCK.min(n));
    for restart in 0..=MAX_RESTARTS {
        // extend the Krylov space
        let mut exhausted = false;
        while basis.len() < max_basis {
            let before = basis.len();
            for w in pending.drain(..) {
                if basis.len() < max_basis {
                    basis.push(w);
                }
            }
            if basis.len() == before {
                // invariant subspace; probe with fresh directions
                for w in random_block(BLOCK) {
                    basis.push(w);
                }
                if basis.len() == before {
                    exhausted = true;
                    break;
                }
            }
            pending = basis.v[before..].iter().map(|v| op(v)).collect();
        }
        if basis.len() == n {
            exhausted = true;
        }

        // Rayleigh-Ritz in the K inner product
        let p = basis.len();
        let (thetas, ys) = basis.ritz()?;
        let mut order: Vec<usize> = (0..p).collect();
        order.sort_by(|&a, &b| thetas[b].total_cmp(&thetas[a]));
        let theta_max = thetas[order[0]];
        let finite: Vec<usize> = order
            .iter()
            .copied()
            .filter(|&i| thetas[i] > RANK_CUTOFF * theta_max)
            .collect();

        let mut pairs = Vec::new();
        let mut unconverged = Vec::new();
        for &i in finite.iter().take(nev) {
            let y: Vec<f64> = ys.column(i).iter().copied().collect();
            let kappa = 1.0 / thetas[i];
            let x = Basis::combine(&basis.v, &y);
            let kx = k.mul_vec(&x);
            let mx = mass.mul_vec(&x);
            let mut r = kx.clone();
            axpy(-kappa, &mx, &mut r);
            let res = norm(&r) / norm(&kx);
            let floor = rounding_floor(k, mass, kappa, &x, &kx);
            if !(res <= tol || res <= FLOOR_FACTOR * floor) {
                unconverged.push(x.clone());
            }
            pairs.push((kappa, x));
        }
        let done = unconverged.is_empty() && (pairs.len() == nev || exhausted);
        if done || (exhausted && basis.len() == n) {
            return Ok(pairs);
        }
        if restart == MAX_RESTARTS {
            break;
        }

        // restart from the leading Ritz vectors and their images under the operator
        let kept: Vec<Vec<f64>> = finite
            .iter()
            .take(keep)
            .map(|&i| {
                let y: Vec<f64> = ys.column(i).iter().copied().collect();
                Basis::combine(&basis.v, &y)
            })
            .collect();
        basis = Basis::new(k, mass);
        for x in kept {
            basis.push(x);
        }
        pending = basis.v.iter().map(|v| op(v)).collect();
    }
    Err(EigenError::NoConvergence(MAX_RESTARTS))
}

fn finish(k: &CsrMatrix, mass: &CsrMatrix, pairs: Pairs, m: usize) -> Result<Spectrum, EigenError> {
    let mut spectrum = Spectrum {
        eigenvalues: Vec::new(),
        frequencies: Vec::new(),
        eigenvectors: Vec::new(),
        residuals: Vec::new(),
    };
    for (kappa, mut x) in pairs.into_iter().take(m) {
        let mx = mass.mul_vec(&x);
        let scale = dot(&x, &mx).sqrt();
        let big = x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let sign = x
            .iter()
            .find(|v| v.abs() > 1e-8 * big)
            .map_or(1.0, |v| v.signum());
        x.iter_mut().for_each(|v| *v *= sign / scale);
        let kx = k.mul_vec(&x);
        let mut r = kx.clone();
        axpy(-kappa, &mass.mul_vec(&x), &mut r);
        spectrum.residuals.push(norm(&r) / norm(&kx));
        spectrum.eigenvalues.push(kappa);
        spectrum.frequencies.push(kappa.sqrt());
        spectrum.eigenvectors.push(x);
    }
    if spectrum.len() < m {
        return Err(EigenError::Insufficient {
            requested: m,
            available: spectrum.len(),
            partial: Box::new(spectrum),
        });
    }
    Ok(spectrum)
}

/// `x^T A y`
pub fn bilinear(a: &CsrMatrix, x: &[f64], y: &[f64]) -> f64 {
    dot(x, &a.mul_vec(y))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(d: &[f64]) -> CsrMatrix {
        CsrMatrix::from_triplets(d.len(), d.iter().enumerate().map(|(i, &v)| (i, i, v)).collect())
    }

    #[test]
    fn decoupled_pencil() {
        for method in [Method::Dense, Method::Lanczos] {
            let s = solve_pencil(&diag(&[2.0, 8.0]), &diag(&[1.0, 2.0]), 2, 1e-10, method).unwrap();
            assert!((s.eigenvalues[0] - 2.0).abs() < 1e-14);
            assert!((s.eigenvalues[1] - 4.0).abs() < 1e-14);
            assert!((s.frequencies[1] - 2.0).abs() < 1e-14);
        }
    }

    #[test]
    fn singular_mass_discards_infinite_mode() {
        for method in [Method::Dense, Method::Lanczos] {
            let err = solve_pencil(&diag(&[2.0, 8.0]), &diag(&[1.0, 0.0]), 2, 1e-10, method)
                .unwrap_err();
            match err {
                EigenError::Insufficient {
                    requested,
                    available,
                    partial,
                } => {
                    assert_eq!((requested, available), (2, 1));
                    assert!((partial.eigenvalues[0] - 2.0).abs() < 1e-14);
                }
                other => panic!("unexpected {other:?}"),
            }
            let one = solve_pencil(&diag(&[2.0, 8.0]), &diag(&[1.0, 0.0]), 1, 1e-10, method).unwrap();
            assert_eq!(one.len(), 1);
        }
    }

    #[test]
    fn indefinite_stiffness_rejected() {
        for method in [Method::Dense, Method::Lanczos] {
            let err = solve_pencil(&diag(&[2.0, -1.0]), &diag(&[1.0, 1.0]), 1, 1e-10, method)
                .unwrap_err();
            assert!(matches!(err, EigenError::NotPositiveDefinite));
        }
    }

    #[test]
    fn stiffness_scaling() {
        let n = 30;
        let mut kt = Vec::new();
        let mut mt = Vec::new();
        for i in 0..n {
            kt.push((i, i, 2.0));
            mt.push((i, i, 4.0 / 6.0));
            if i + 1 < n {
                for (a, b) in [(i, i + 1), (i + 1, i)] {
                    kt.push((a, b, -1.0));
                    mt.push((a, b, 1.0 / 6.0));
                }
            }
        }
        let k = CsrMatrix::from_triplets(n, kt.clone());
        let m = CsrMatrix::from_triplets(n, mt);
        let k3 = CsrMatrix::from_triplets(n, kt.iter().map(|&(i, j, v)| (i, j, 3.0 * v)).collect());
        for method in [Method::Dense, Method::Lanczos] {
            let a = solve_pencil(&k, &m, 5, 1e-10, method).unwrap();
            let b = solve_pencil(&k3, &m, 5, 1e-10, method).unwrap();
            for (x, y) in a.eigenvalues.iter().zip(&b.eigenvalues) {
                assert!((3.0 * x - y).abs() <= 1e-12 * y);
            }
            // closed form for the 1D pencil
            let h = std::f64::consts::PI / (n + 1) as f64;
            let exact = (2.0 - 2.0 * h.cos()) / ((4.0 + 2.0 * h.cos()) / 6.0);
            assert!((a.eigenvalues[0] - exact).abs() < 1e-12 * exact);
            for (i, w) in a.eigenvectors.iter().enumerate() {
                assert!((bilinear(&m, w, w) - 1.0).abs() < 1e-12);
                assert!(a.residuals[i] <= 1e-10);
                let first = w.iter().find(|v| v.abs() > 1e-8).unwrap();
                assert!(*first > 0.0);
            }
        }
    }

    #[test]
    fn invalid_requests() {
        assert!(matches!(
            solve_pencil(&diag(&[1.0]), &diag(&[1.0]), 0, 1e-8, Method::Auto),
            Err(EigenError::Invalid(_))
        ));
        assert!(matches!(
            solve_pencil(&diag(&[1.0]), &diag(&[1.0]), 1, 0.0, Method::Auto),
            Err(EigenError::Invalid(_))
        ));
    }
}
