//! Element matrices on a pentagon with a collinear vertex: projector
//! consistency, rigid-body kernel and the effect of the stabilization choice.
//!
//! `cargo run --example local_operators`

use nalgebra::DVector;

use polyvem::mesh::Point2;
use polyvem::vem::{local_matrices, ElementGeometry, Material, Stabilization};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let pts = [
        Point2::new(0.0, 0.0),
        Point2::new(0.5, 0.0),
        Point2::new(1.0, 0.0),
        Point2::new(1.2, 0.8),
        Point2::new(0.4, 1.1),
        Point2::new(-0.1, 0.5),
    ];
    let geo = ElementGeometry::new(&pts)?;
    let mat = Material::from_young_poisson(1.0, 0.35, 1.0)?;
    println!(
        "area {:.6}, diameter {:.6}, {} vertices",
        geo.area,
        geo.diameter,
        geo.num_vertices()
    );

    let rotation = DVector::from_iterator(2 * pts.len(), pts.iter().flat_map(|p| [-p.y, p.x]));
    let shear = DVector::from_iterator(2 * pts.len(), pts.iter().flat_map(|p| [p.y, p.x]));
    for scheme in [Stabilization::DofiDofi, Stabilization::Trace] {
        let ops = local_matrices(&geo, &mat, scheme, 1.0)?;
        let eig = ops.k.clone().symmetric_eigenvalues();
        let zero = eig.iter().filter(|v| v.abs() < 1e-12 * eig.max()).count();
        println!("\n{scheme}: alpha_E = {:.6}", ops.alpha);
        println!("  zero eigenvalues of K_E: {zero} (rigid motions)");
        println!("  |K_E r| for the rotation r: {:.2e}", (&ops.k * &rotation).norm());
        println!(
            "  a_h(shear, shear) = {:.15}, exact 4 mu |E| = {:.15}",
            shear.dot(&(&ops.k * &shear)),
            4.0 * mat.mu_s * geo.area
        );
        println!("  trace of M_E = {:.6}", ops.m.trace());
    }
    Ok(())
}
