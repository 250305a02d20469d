//! Clamped L-shaped domain: the reentrant corner lowers the observed order of
//! the lowest frequency below two.
//!
//! `cargo run --release --example lshape_study`

use polyvem::mesh::{Domain, MeshFamily};
use polyvem::study::{convergence_study, Problem};
use polyvem::vem::Stabilization;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for (family, scheme) in [
        (MeshFamily::Triangles, Stabilization::DofiDofi),
        (MeshFamily::TrianglesMidpoint, Stabilization::DofiDofi),
        (MeshFamily::TrianglesMidpoint, Stabilization::Trace),
    ] {
        let problem = Problem {
            domain: Domain::Lshape,
            family,
            scheme,
            modes: 4,
            ..Problem::unit_square()
        };
        let table = convergence_study(&problem, &[8, 16, 32])?;
        println!("{family} / {scheme}");
        for row in &table.rows {
            let fit = row.fit.expect("three refinements");
            println!(
                "  w{} {:?}  order {:.2}  extrapolated {:.5}",
                row.mode,
                row.frequencies.iter().map(|w| format!("{w:.5}")).collect::<Vec<_>>(),
                fit.alpha,
                fit.omega_ext
            );
        }
    }
    Ok(())
}
