//! Projector, consistency, stabilization and mass matrices of one element.
//!
//! Local DOFs are vertex values interleaved by component: DOF `2 i + c` is
//! component `c` at vertex `i`. The polynomial basis of `[P_1]^2` uses the
//! scaled monomials `xi = (x - x_E) / h_E`, `eta = (y - y_E) / h_E`:
//!
//! | index | field        |
//! |-------|--------------|
//! | 0     | `(1, 0)`     |
//! | 1     | `(0, 1)`     |
//! | 2     | `(xi, 0)`    |
//! | 3     | `(eta, 0)`   |
//! | 4     | `(0, xi)`    |
//! | 5     | `(0, eta)`   |

use nalgebra::{DMatrix, Matrix2};

use crate::mesh::Point2;

use super::{ElementGeometry, Material, Stabilization, VemError};

pub const POLY_DIM: usize = 6;

/// Constant gradient `(d u_i / d x_j)` of basis field `a`, in units of `1 / h_E`.
fn unit_gradient(a: usize) -> Matrix2<f64> {
    match a {
        2 => Matrix2::new(1.0, 0.0, 0.0, 0.0),
        3 => Matrix2::new(0.0, 1.0, 0.0, 0.0),
        4 => Matrix2::new(0.0, 0.0, 1.0, 0.0),
        5 => Matrix2::new(0.0, 0.0, 0.0, 1.0),
        _ => Matrix2::zeros(),
    }
}

fn strain(a: usize, h: f64) -> Matrix2<f64> {
    let g = unit_gradient(a) / h;
    (g + g.transpose()) * 0.5
}

fn rot(a: usize, h: f64) -> f64 {
    let g = unit_gradient(a) / h;
    g[(1, 0)] - g[(0, 1)]
}

fn eval_basis(a: usize, geo: &ElementGeometry, p: Point2) -> [f64; 2] {
    let xi = (p.x - geo.centroid.x) / geo.diameter;
    let eta = (p.y - geo.centroid.y) / geo.diameter;
    match a {
        0 => [1.0, 0.0],
        1 => [0.0, 1.0],
        2 => [xi, 0.0],
        3 => [eta, 0.0],
        4 => [0.0, xi],
        _ => [0.0, eta],
    }
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in i + 1..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// `D` and `PiStar` of an element.
#[derive(Debug, Clone)]
pub struct Projection {
    /// DOF values of the six basis fields (`2n x 6`).
    pub d: DMatrix<f64>,
    /// Polynomial coefficients of the projection of each DOF basis function (`6 x 2n`).
    pub pi_star: DMatrix<f64>,
}

/// Energy projector onto `[P_1]^2`.
///
/// The energy conditions fix the strain of the projection to the boundary
/// average `(1/|E|) int_{dE} sym(v (x) n)`; the rigid-body part is fixed by
/// matching `int_E rot` (via `int_{dE} v . t`) and `int_{dE} v`. Both are
/// solved together as one saddle-point system.
pub fn projector(geo: &ElementGeometry) -> Result<Projection, VemError> {
    let n = geo.num_vertices();
    let h = geo.diameter;
    let ndof = 2 * n;

    let mut d = DMatrix::zeros(ndof, POLY_DIM);
    for (i, &v) in geo.vertices.iter().enumerate() {
        for a in 0..POLY_DIM {
            let val = eval_basis(a, geo, v);
            d[(2 * i, a)] = val[0];
            d[(2 * i + 1, a)] = val[1];
        }
    }

    let strains: Vec<Matrix2<f64>> = (0..POLY_DIM).map(|a| strain(a, h)).collect();
    let size = POLY_DIM + 3;
    let mut sys = DMatrix::zeros(size, size);
    for a in 0..POLY_DIM {
        for b in 0..POLY_DIM {
            sys[(b, a)] = geo.area * strains[a].dot(&strains[b]);
        }
    }
    // constraint rows, scaled by 1/h_E to match the energy block
    for a in 0..POLY_DIM {
        let c_rot = geo.area * rot(a, h) / h;
        let mut c_mean = [0.0; 2];
        for i in 0..n {
            let w = geo.boundary_weight(i);
            c_mean[0] += w * d[(2 * i, a)];
            c_mean[1] += w * d[(2 * i + 1, a)];
        }
        let col = [c_rot, c_mean[0] / h, c_mean[1] / h];
        for (r, &v) in col.iter().enumerate() {
            sys[(POLY_DIM + r, a)] = v;
            sys[(a, POLY_DIM + r)] = v;
        }
    }

    let mut rhs = DMatrix::zeros(size, ndof);
    for (e, edge) in geo.edges.iter().enumerate() {
        let half = 0.5 * edge.length;
        for &i in &[e, (e + 1) % n] {
            for c in 0..2 {
                let dof = 2 * i + c;
                for b in 0..POLY_DIM {
                    let eps = strains[b];
                    let traction = eps[(c, 0)] * edge.normal[0] + eps[(c, 1)] * edge.normal[1];
                    rhs[(b, dof)] += half * traction;
                }
                rhs[(POLY_DIM, dof)] += half * edge.tangent[c] / h;
                rhs[(POLY_DIM + 1 + c, dof)] += half / h;
            }
        }
    }

    let lu = sys.lu();
    let sol = lu.solve(&rhs).ok_or(VemError::SingularProjector)?;
    if sol.iter().any(|v| !v.is_finite()) {
        return Err(VemError::SingularProjector);
    }
    let pi_star = sol.rows(0, POLY_DIM).into_owned();
    Ok(Projection { d, pi_star })
}

/// `int_E xi^p eta^q` for `(p, q)` in `[(0,0), (1,0), (0,1), (2,0), (1,1), (0,2)]`,
/// exact by fanning from the centroid and a degree-2 rule on each triangle.
pub fn monomial_integrals(geo: &ElementGeometry) -> [f64; 6] {
    let n = geo.num_vertices();
    let c = geo.centroid;
    let h = geo.diameter;
    let scaled = |p: Point2| ((p.x - c.x) / h, (p.y - c.y) / h);
    let mut out = [0.0; 6];
    for i in 0..n {
        let a = (0.0, 0.0);
        let b = scaled(geo.vertices[i]);
        let d = scaled(geo.vertices[(i + 1) % n]);
        // signed area in physical units
        let area = 0.5 * (b.0 * d.1 - d.0 * b.1) * h * h;
        // edge-midpoint rule, exact for quadratics
        let mids = [
            ((a.0 + b.0) / 2.0, (a.1 + b.1) / 2.0),
            ((b.0 + d.0) / 2.0, (b.1 + d.1) / 2.0),
            ((d.0 + a.0) / 2.0, (d.1 + a.1) / 2.0),
        ];
        for (x, y) in mids {
            let w = area / 3.0;
            out[0] += w;
            out[1] += w * x;
            out[2] += w * y;
            out[3] += w * x * x;
            out[4] += w * x * y;
            out[5] += w * y * y;
        }
    }
    out
}

/// All local matrices of one element.
#[derive(Debug, Clone)]
pub struct LocalOperators {
    pub d: DMatrix<f64>,
    pub pi_star: DMatrix<f64>,
    /// Consistency stiffness `a^E(Pi u, Pi v)`.
    pub kc: DMatrix<f64>,
    /// Stabilization acting on `(I - D PiStar)`.
    pub s: DMatrix<f64>,
    pub m: DMatrix<f64>,
    /// `trace(kc) / 2`
    pub alpha: f64,
    pub beta: f64,
    /// `kc + beta * alpha * s`
    pub k: DMatrix<f64>,
}

/// Gram matrix `a^E(p_a, p_b)` of the polynomial basis.
pub fn polynomial_stiffness(geo: &ElementGeometry, mat: &Material) -> DMatrix<f64> {
    let h = geo.diameter;
    let strains: Vec<Matrix2<f64>> = (0..POLY_DIM).map(|a| strain(a, h)).collect();
    DMatrix::from_fn(POLY_DIM, POLY_DIM, |a, b| {
        let (ea, eb) = (strains[a], strains[b]);
        geo.area * (2.0 * mat.mu_s * ea.dot(&eb) + mat.lambda_s * ea.trace() * eb.trace())
    })
}

/// Gram matrix `rho int_E p_a . p_b` of the polynomial basis.
pub fn polynomial_mass(geo: &ElementGeometry, mat: &Material) -> DMatrix<f64> {
    let [i00, i10, i01, i20, i11, i02] = monomial_integrals(geo);
    // scalar factor of each basis field: 1, xi or eta
    let scalar = |a: usize| match a {
        0 | 1 => 0,
        2 | 4 => 1,
        _ => 2,
    };
    let comp = |a: usize| match a {
        0 | 2 | 3 => 0,
        _ => 1,
    };
    let table = [[i00, i10, i01], [i10, i20, i11], [i01, i11, i02]];
    DMatrix::from_fn(POLY_DIM, POLY_DIM, |a, b| {
        if comp(a) == comp(b) {
            mat.rho * table[scalar(a)][scalar(b)]
        } else {
            0.0
        }
    })
}

/// Stabilization matrix before restriction to the non-polynomial part.
pub(crate) fn raw_stabilization(geo: &ElementGeometry, scheme: Stabilization) -> DMatrix<f64> {
    let n = geo.num_vertices();
    let ndof = 2 * n;
    match scheme {
        Stabilization::DofiDofi => DMatrix::identity(ndof, ndof),
        Stabilization::Trace => {
            // h_E int_e |d_s v|^2 = (h_E / |e|) |v(b) - v(a)|^2 for linear traces
            let mut raw = DMatrix::zeros(ndof, ndof);
            for (e, edge) in geo.edges.iter().enumerate() {
                let w = geo.diameter / edge.length;
                let (i, j) = (e, (e + 1) % n);
                for c in 0..2 {
                    let (p, q) = (2 * i + c, 2 * j + c);
                    raw[(p, p)] += w;
                    raw[(q, q)] += w;
                    raw[(p, q)] -= w;
                    raw[(q, p)] -= w;
                }
            }
            raw
        }
    }
}

pub fn local_matrices(
    geo: &ElementGeometry,
    mat: &Material,
    scheme: Stabilization,
    beta: f64,
) -> Result<LocalOperators, VemError> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(VemError::Beta(beta));
    }
    let Projection { d, pi_star } = projector(geo)?;
    let ndof = d.nrows();

    let mut kc = pi_star.transpose() * polynomial_stiffness(geo, mat) * &pi_star;
    symmetrize(&mut kc);

    let residual = DMatrix::<f64>::identity(ndof, ndof) - &d * &pi_star;
    let raw = raw_stabilization(geo, scheme);
    let mut s = residual.transpose() * raw * &residual;
    symmetrize(&mut s);

    let mut m = pi_star.transpose() * polynomial_mass(geo, mat) * &pi_star;
    symmetrize(&mut m);

    let alpha = 0.5 * kc.trace();
    let k = &kc + &s * (beta * alpha);
    Ok(LocalOperators {
        d,
        pi_star,
        kc,
        s,
        m,
        alpha,
        beta,
        k,
    })
}
