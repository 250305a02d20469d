//! Lowest frequencies of the clamped unit square for several mesh families.
//!
//! `cargo run --release --example square_eigenvalues -- [n] [scheme]`

use std::time::Instant;

use polyvem::assembly::{assemble, BcKind};
use polyvem::eigsolve::{solve_smallest, DEFAULT_TOL};
use polyvem::mesh::{generate_square_mesh, MeshFamily};
use polyvem::vem::{Material, Stabilization};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().collect();
    let n: usize = args.get(1).map_or(Ok(32), |s| s.parse())?;
    let scheme: Stabilization = args.get(2).map_or(Ok(Stabilization::DofiDofi), |s| s.parse())?;
    let material = Material::from_young_poisson(1.0, 0.35, 1.0)?;
    for family in [
        MeshFamily::Triangles,
        MeshFamily::TrianglesMidpoint,
        MeshFamily::Squares,
        MeshFamily::DeformedSquares { seed: 0 },
        MeshFamily::Voronoi { seed: 0, cell_count: n * n },
    ] {
        let t = Instant::now();
        let mesh = generate_square_mesh(n, family)?;
        let system = assemble(&mesh, &material, scheme, 1.0, BcKind::ClampedAll)?;
        let spectrum = solve_smallest(&system, 4, DEFAULT_TOL)?;
        let w: Vec<String> = spectrum.frequencies.iter().map(|w| format!("{w:.5}")).collect();
        println!(
            "{:<28} dofs {:>6}  {}  ({:.2?})",
            family.to_string(),
            system.num_free(),
            w.join("  "),
            t.elapsed()
        );
    }
    Ok(())
}
