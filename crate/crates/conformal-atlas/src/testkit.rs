//! Shared fixtures for tests: runs the topology and harmonic stages on a
//! mesh so later-stage tests can start from a canonical homology basis and
//! its harmonic dual forms.

use crate::cohomology::dual_basis;
use crate::harmonic::{diffuse_to_harmonic, DiffuseOptions};
use crate::homology::{
    canonicalize_basis, homology_basis, intersection_matrix, perturb_transversal, shorten_cycle,
    CanonicalBasis, Cycle, HomologyBasis,
};
use crate::mesh::{all_charts, cotan_weights, EdgeWeights, LocalChart, Mesh};
use crate::simplicial::OneForm;

#[allow(dead_code)]
pub(crate) struct Setup {
    pub mesh: Mesh,
    pub charts: Vec<LocalChart>,
    pub weights: EdgeWeights,
    pub basis: HomologyBasis,
    pub loops: Vec<Cycle>,
    pub canonical: CanonicalBasis,
    pub harmonic: Vec<OneForm>,
}

pub(crate) fn conformal_setup(mesh: Mesh) -> Setup {
    let charts = all_charts(&mesh);
    let weights = cotan_weights(&mesh);
    let basis = homology_basis(&mesh).unwrap();
    let loops: Vec<Cycle> = basis
        .cycles
        .iter()
        .map(|c| shorten_cycle(&mesh, c, &basis.annotations))
        .collect();
    let perturbed = perturb_transversal(&mesh, &loops).unwrap();
    let c = intersection_matrix(&mesh, &perturbed).unwrap();
    let canonical = canonicalize_basis(&mesh, &loops, &c).unwrap();
    let dual = dual_basis(&mesh, &canonical.chains, &loops).unwrap();
    assert!(dual.duality_gap < 1e-6, "duality gap {}", dual.duality_gap);
    let harmonic: Vec<OneForm> = dual
        .forms
        .iter()
        .map(|f| {
            diffuse_to_harmonic(&mesh, &weights, f, &DiffuseOptions::default())
                .unwrap()
                .0
        })
        .collect();
    Setup {
        mesh,
        charts,
        weights,
        basis,
        loops,
        canonical,
        harmonic,
    }
}
