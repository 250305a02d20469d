//! Stabilization scan on the unit square fixed at its bottom edge: frequencies
//! for beta = 4^k, k = -3..3, with entries flagged `*` when no frequency of
//! the beta = 1 spectrum lies within 10 %.
//!
//! `cargo run --release --example spurious_scan -- [family] [n,n,...]`

use polyvem::mesh::MeshFamily;
use polyvem::study::{default_betas, spurious_scan, Boundary, Problem};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().collect();
    let family = MeshFamily::from_name(args.get(1).map_or("deformed_squares", |s| s), 0, 0)?;
    let n_list: Vec<usize> = args
        .get(2)
        .map_or("8,16,32", |s| s)
        .split(',')
        .map(str::parse)
        .collect::<Result<_, _>>()?;

    let problem = Problem {
        family,
        boundary: Boundary::BottomDirichlet,
        ..Problem::unit_square()
    };
    let report = spurious_scan(&problem, &default_betas(), &n_list, 1.0, 0.1)?;
    print!("{}", report.to_csv());
    for &n in &n_list {
        let counts: Vec<usize> = report
            .betas
            .iter()
            .map(|&b| report.cell(b, n).map_or(0, |c| c.flag_count()))
            .collect();
        println!("N = {n}: flags per beta {counts:?}");
    }
    Ok(())
}
