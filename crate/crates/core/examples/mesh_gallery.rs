//! Quality measures of every mesh family on both domains, and a JSON mesh
//! file for each.
//!
//! `cargo run --release --example mesh_gallery -- [n] [out_dir]`

use std::path::PathBuf;

use polyvem::mesh::{
    generate_lshape_mesh, generate_square_mesh, quality_report, write_mesh, MeshFamily,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().collect();
    let n: usize = args.get(1).map_or(Ok(8), |s| s.parse())?;
    let out = args.get(2).map(PathBuf::from);
    if let Some(dir) = &out {
        std::fs::create_dir_all(dir)?;
    }

    println!(
        "{:<8} {:<28} {:>6} {:>6} {:>10} {:>5} {:>10} {:>8}",
        "domain", "family", "cells", "verts", "gamma_min", "N_max", "min_edge", "c(h)"
    );
    for name in MeshFamily::NAMES {
        let family = MeshFamily::from_name(name, 1, n * n)?;
        let mut meshes = vec![("square", generate_square_mesh(n, family)?)];
        if !matches!(family, MeshFamily::Voronoi { .. }) {
            meshes.push(("lshape", generate_lshape_mesh(n, family)?));
        }
        for (domain, mesh) in meshes {
            let q = quality_report(&mesh)?;
            println!(
                "{domain:<8} {name:<28} {:>6} {:>6} {:>10.4} {:>5} {:>10.4} {:>8.4}",
                mesh.num_cells(),
                mesh.num_vertices(),
                q.gamma_min,
                q.n_max,
                q.min_edge_ratio,
                q.c_h
            );
            if let Some(dir) = &out {
                write_mesh(&mesh, dir.join(format!("{domain}_{name}_{n}.json")))?;
            }
        }
    }
    Ok(())
}
