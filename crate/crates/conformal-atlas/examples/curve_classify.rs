//! Classify closed curves against a homology basis.
//!
//! Builds random closed loops on a genus-2 surface by walking the 1-skeleton,
//! projects each onto the basis with the annotation vectors, and confirms
//! the classifier's two invariants: face boundaries map to zero, and the
//! canonical generators map to unit coordinate vectors.  Also floods a
//! null-homologous chain back to the 2-chain it bounds.

use conformal_atlas::homology::{curve_class, flood_bounded_domain, homology_basis};
use conformal_atlas::meshgen;
use conformal_atlas::simplicial::{boundary_of_faces, Chain};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mesh = meshgen::genus2_plate(2, 0.25)?;
    let basis = homology_basis(&mesh)?;
    println!("genus: {}", basis.genus);

    // Random 2-chains give random null-homologous 1-chains.
    let mut rng = StdRng::seed_from_u64(7);
    for trial in 0..4 {
        let mut faces = Chain::new(2);
        for f in 0..mesh.n_faces() {
            if rng.random_bool(0.3) {
                faces.add(f, if rng.random_bool(0.5) { 1 } else { -1 });
            }
        }
        let boundary = boundary_of_faces(&mesh, &faces);
        let class = curve_class(&mesh, &basis.annotations, &boundary)?;
        println!("random boundary {trial}: class {class:?}");
        assert!(class.iter().all(|&x| x == 0));
    }

    // Generators classify as the coordinate vectors.
    for (i, cycle) in basis.cycles.iter().enumerate() {
        let chain = cycle.to_chain(&mesh);
        let class = curve_class(&mesh, &basis.annotations, &chain)?;
        println!("generator {i}: class {class:?}");
    }

    // Flooding recovers a 2-chain whose boundary is the given null class.
    let mut sigma = Chain::new(2);
    sigma.add(0, 1);
    sigma.add(1, 1);
    let r = boundary_of_faces(&mesh, &sigma);
    let recovered = flood_bounded_domain(&mesh, &basis.annotations, &r)?;
    let back = boundary_of_faces(&mesh, &recovered);
    println!(
        "flood: recovered 2-chain with {} faces, boundary matches: {}",
        recovered.support().count(),
        back == r
    );
    Ok(())
}
