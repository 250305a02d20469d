//! Steel plate (E = 1.44e11 Pa, nu = 0.35, rho = 7.7e3 kg/m^3) fixed at its
//! bottom edge: refinement study of the four lowest frequencies.
//!
//! `cargo run --release --example steel_mixed -- [family]`

use polyvem::mesh::MeshFamily;
use polyvem::study::{convergence_study, Boundary, Problem};
use polyvem::vem::Material;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().collect();
    let family = MeshFamily::from_name(args.get(1).map_or("deformed_squares", |s| s), 0, 0)?;
    let problem = Problem {
        family,
        material: Material::from_young_poisson(1.44e11, 0.35, 7.7e3)?,
        boundary: Boundary::BottomDirichlet,
        modes: 4,
        ..Problem::unit_square()
    };
    let table = convergence_study(&problem, &[16, 32, 64])?;
    print!("{}", table.to_csv());
    Ok(())
}
