//! Global conformal parametrization by integrating a holomorphic form.
//!
//! Cuts the surface along a homology basis into a topological disk and
//! integrates the real and imaginary parts of a holomorphic 1-form over
//! the cut mesh, producing a flat uv-chart whose seams differ by lattice
//! translations.  Writes `flatten.obj` (uv in the texture channel) and
//! `flatten.svg` (triangulation with seams highlighted), then locates the
//! zeros of the form on a genus-2 surface.

use conformal_atlas::homology::fundamental_domain;
use conformal_atlas::mesh::all_charts;
use conformal_atlas::meshgen;
use conformal_atlas::param::{export_uv, integrate_over_domain, UvFormat};
use conformal_atlas::pipeline::{run_pipeline, Config};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = Config::default();

    let mesh = meshgen::torus_of_revolution(2.0, 0.8, 16, 12)?;
    let result = run_pipeline(&mesh, &config)?;
    let basis = result.basis.as_ref().expect("positive genus");
    let charts = all_charts(&result.mesh);
    let fd = fundamental_domain(&result.mesh, basis)?;
    println!(
        "cut system: {} seam edges, {} faces in the domain",
        fd.edges.len(),
        result.mesh.n_faces()
    );

    let zeta = &result.pairs[result.selected[0]];
    let flat = integrate_over_domain(&result.mesh, &charts, &fd, zeta)?;
    println!("flattened {} cut vertices", flat.uv.len());
    if let Some(zeros) = &flat.zeros {
        println!(
            "zeros: {:?} (total index {})",
            zeros.zeros, zeros.total_index
        );
    }
    export_uv(&result.mesh, &fd, &flat, "flatten.obj", UvFormat::Obj)?;
    export_uv(&result.mesh, &fd, &flat, "flatten.svg", UvFormat::Svg)?;
    println!("wrote flatten.obj and flatten.svg");

    // Higher genus forces 2g - 2 zeros (counted with multiplicity).
    let mesh2 = meshgen::genus2_plate(2, 0.25)?;
    let result2 = run_pipeline(&mesh2, &config)?;
    let charts2 = all_charts(&result2.mesh);
    let fd2 = fundamental_domain(&result2.mesh, result2.basis.as_ref().unwrap())?;
    let zeta2 = &result2.pairs[result2.selected[0]];
    let flat2 = integrate_over_domain(&result2.mesh, &charts2, &fd2, zeta2)?;
    if let Some(zeros) = &flat2.zeros {
        println!(
            "genus-2 zeros: {:?} (total index {}, expected 2)",
            zeros.zeros, zeros.total_index
        );
    }
    Ok(())
}
