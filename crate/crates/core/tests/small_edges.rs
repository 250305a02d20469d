//! Element behaviour as one edge of a polygon shrinks toward zero.

use nalgebra::DVector;

use polyvem::mesh::Point2;
use polyvem::vem::{local_matrices, ElementGeometry, Material, Stabilization};

/// Unit-size pentagon with an extra collinear vertex at distance `t` from a
/// corner, so the shortest edge has relative length `t`.
fn pentagon_with_short_edge(t: f64) -> Vec<Point2> {
    vec![
        Point2::new(0.0, 0.0),
        Point2::new(t, 0.0),
        Point2::new(1.0, 0.0),
        Point2::new(1.2, 0.7),
        Point2::new(0.5, 1.1),
        Point2::new(-0.2, 0.6),
    ]
}

fn material() -> Material {
    Material::from_young_poisson(1.0, 0.35, 1.0).unwrap()
}

/// `a_h(p, p)` for the pure shear `p = (y, x)`, which has exact energy
/// `4 mu |E|` (strain `[[0, 1], [1, 0]]`), and `a_h` of a translation.
fn energies(poly: &[Point2], scheme: Stabilization) -> (f64, f64, f64) {
    let geo = ElementGeometry::new(poly).unwrap();
    let k = local_matrices(&geo, &material(), scheme, 1.0).unwrap().k;
    let shear = DVector::from_iterator(2 * poly.len(), poly.iter().flat_map(|p| [p.y, p.x]));
    let shift = DVector::from_iterator(2 * poly.len(), poly.iter().flat_map(|_| [1.0, 0.0]));
    let exact = 4.0 * material().mu_s * geo.area;
    (shear.dot(&(&k * &shear)), shift.dot(&(&k * &shift)), exact)
}

#[test]
fn dofi_patch_test_independent_of_edge_ratio() {
    for t in [1e-2, 1e-4, 1e-6, 1e-8] {
        let (shear, shift, exact) = energies(&pentagon_with_short_edge(t), Stabilization::DofiDofi);
        assert!(((shear - exact) / exact).abs() <= 1e-12, "t = {t}");
        assert!(shift.abs() <= 1e-12 * exact, "t = {t}");
    }
}

/// The trace stabilization carries weights `h_E / |e|`, so rounding in the
/// projector residual is amplified by the edge ratio: the error is bounded
/// by a small multiple of `eps h_E / h_min` rather than by a fixed tolerance.
#[test]
fn trace_patch_error_bounded_by_edge_ratio() {
    for t in [1e-2, 1e-4, 1e-6, 1e-8] {
        let poly = pentagon_with_short_edge(t);
        let h = ElementGeometry::new(&poly).unwrap().diameter;
        let bound = 64.0 * f64::EPSILON * h / t;
        let (shear, shift, exact) = energies(&poly, Stabilization::Trace);
        assert!(((shear - exact) / exact).abs() <= bound.max(1e-12), "t = {t}");
        assert!(shift.abs() <= bound.max(1e-12) * exact, "t = {t}");
    }
}

#[test]
fn trace_stabilization_stiffens_as_edge_shrinks() {
    let largest = |t: f64| {
        let poly = pentagon_with_short_edge(t);
        let geo = ElementGeometry::new(&poly).unwrap();
        let k = local_matrices(&geo, &material(), Stabilization::Trace, 1.0).unwrap().k;
        k.symmetric_eigenvalues().max()
    };
    let (a, b) = (largest(1e-3), largest(1e-5));
    assert!(b / a > 50.0 && b / a < 200.0, "{a} {b}");
}

#[test]
fn dofi_stabilization_bounded_as_edge_shrinks() {
    let largest = |t: f64| {
        let poly = pentagon_with_short_edge(t);
        let geo = ElementGeometry::new(&poly).unwrap();
        let k = local_matrices(&geo, &material(), Stabilization::DofiDofi, 1.0).unwrap().k;
        k.symmetric_eigenvalues().max()
    };
    let (a, b) = (largest(1e-3), largest(1e-8));
    assert!((b / a - 1.0).abs() < 1e-2, "{a} {b}");
}
