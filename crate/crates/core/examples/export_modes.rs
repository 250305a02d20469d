//! Solves on a Voronoi mesh and writes the first modes, normalized to unit
//! maximum displacement, as legacy VTK for ParaView or VisIt.
//!
//! `cargo run --release --example export_modes -- [n] [out.vtk]`

use polyvem::eigsolve::{solve_smallest, DEFAULT_TOL};
use polyvem::mesh::MeshFamily;
use polyvem::study::{Boundary, Problem};
use polyvem::vtk::{normalize_max, write_vtk, PointField};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().collect();
    let n: usize = args.get(1).map_or(Ok(16), |s| s.parse())?;
    let path = args.get(2).map_or("voronoi_modes.vtk", |s| s);

    let problem = Problem {
        family: MeshFamily::Voronoi { seed: 0, cell_count: n * n },
        boundary: Boundary::BottomDirichlet,
        ..Problem::unit_square()
    };
    let mesh = problem.mesh(n)?;
    let system = problem.system(&mesh, n)?;
    let spectrum = solve_smallest(&system, 4, DEFAULT_TOL)?;
    let fields: Vec<PointField> = spectrum
        .eigenvectors
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let mut values = system.dof_map.expand(x);
            normalize_max(&mut values);
            PointField {
                name: format!("mode_{}", i + 1),
                values,
            }
        })
        .collect();
    write_vtk(path, &mesh, &fields, "voronoi modes", &[])?;
    for (i, w) in spectrum.frequencies.iter().enumerate() {
        println!("mode_{} frequency {w:.6}", i + 1);
    }
    println!("wrote {path}");
    Ok(())
}
