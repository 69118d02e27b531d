//! Canonical homology basis of a genus-2 surface.
//!
//! Computes a homology basis on the double-handle plate, shortens the
//! generators, canonicalizes them so the intersection matrix becomes the
//! standard symplectic form, and classifies a couple of test loops against
//! the basis.

use conformal_atlas::homology::{
    canonicalize_basis, curve_class, homology_basis, intersection_matrix,
    perturb_transversal, shorten_cycle,
};
use conformal_atlas::meshgen;
use conformal_atlas::simplicial::{boundary_of_faces, Chain};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mesh = meshgen::genus2_plate(2, 0.25)?;
    let basis = homology_basis(&mesh)?;
    println!(
        "genus {} surface: {} vertices, {} faces, {} generators",
        basis.genus,
        mesh.n_vertices(),
        mesh.n_faces(),
        basis.cycles.len()
    );

    let loops: Vec<_> = basis
        .cycles
        .iter()
        .map(|c| shorten_cycle(&mesh, c, &basis.annotations))
        .collect();
    for (i, cycle) in loops.iter().enumerate() {
        println!("generator {i}: {} edges after shortening", cycle.len());
    }

    let perturbed = perturb_transversal(&mesh, &loops)?;
    let raw = intersection_matrix(&mesh, &perturbed)?;
    println!("intersection matrix (shortened basis):");
    for row in &raw {
        println!("  {row:?}");
    }

    let canonical = canonicalize_basis(&mesh, &loops, &raw)?;
    println!("canonical intersection matrix:");
    for row in &canonical.intersection {
        println!("  {row:?}");
    }

    // A face boundary is null-homologous; a canonical generator is a unit
    // coordinate vector.
    let mut sigma = Chain::new(2);
    sigma.add(0, 1);
    let face_chain = boundary_of_faces(&mesh, &sigma);
    println!(
        "face boundary class: {:?}",
        curve_class(&mesh, &basis.annotations, &face_chain)?
    );
    println!(
        "first canonical class: {:?}",
        curve_class(&mesh, &basis.annotations, &canonical.chains[0])?
    );
    Ok(())
}
