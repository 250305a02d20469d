//! Refinement study on the clamped unit square: the four lowest frequencies
//! per refinement with fitted order and extrapolated limit.
//!
//! `cargo run --release --example convergence_study -- [family] [poisson] [scheme]`

use polyvem::mesh::MeshFamily;
use polyvem::study::{convergence_study, Problem};
use polyvem::vem::{Material, Stabilization};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().collect();
    let family = MeshFamily::from_name(args.get(1).map_or("triangles", |s| s), 0, 0)?;
    let poisson: f64 = args.get(2).map_or(Ok(0.35), |s| s.parse())?;
    let scheme: Stabilization = args.get(3).map_or(Ok(Stabilization::DofiDofi), |s| s.parse())?;

    let problem = Problem {
        family,
        material: Material::from_young_poisson(1.0, poisson, 1.0)?,
        scheme,
        modes: 4,
        ..Problem::unit_square()
    };
    let table = convergence_study(&problem, &[16, 32, 64])?;
    println!("{family}, nu = {poisson}, {scheme}");
    print!("{}", table.to_csv());
    Ok(())
}
