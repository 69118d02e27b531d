//! Fundamental domains, curve classification and bounded-domain recovery.

use super::{Annotations, HomologyBasis};
use crate::cut::{cut_along_edges, CutMesh};
use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::simplicial::{boundary_of_edges, boundary_of_faces, Chain};
use std::collections::{BTreeMap, BTreeSet, VecDeque};

/// A cut system together with the disk obtained by cutting along it.
#[derive(Debug, Clone)]
pub struct CutSystem {
    pub edges: BTreeSet<usize>,
    pub cut: CutMesh,
}

/// Cut the surface into a single disk: take every edge outside the dual
/// spanning cotree (the primal tree plus the `2g` generators) and prune
/// dangling branches. A sphere prunes to nothing, so one arbitrary edge is
/// kept to produce a two-triangle-rim disk.
pub fn fundamental_domain(mesh: &Mesh, basis: &HomologyBasis) -> Result<CutSystem> {
    let mut edges: BTreeSet<usize> = (0..mesh.n_edges())
        .filter(|e| !basis.cotree_edges.contains(e))
        .collect();

    // Iteratively strip edges ending in degree-one vertices.
    let mut degree: BTreeMap<usize, usize> = BTreeMap::new();
    for &e in &edges {
        let (u, v) = mesh.edge_endpoints(e);
        *degree.entry(u).or_insert(0) += 1;
        *degree.entry(v).or_insert(0) += 1;
    }
    let mut leaves: VecDeque<usize> = degree
        .iter()
        .filter(|(_, &d)| d == 1)
        .map(|(&v, _)| v)
        .collect();
    while let Some(v) = leaves.pop_front() {
        if degree.get(&v) != Some(&1) {
            continue;
        }
        let Some(&e) = edges
            .iter()
            .find(|&&e| {
                let (a, b) = mesh.edge_endpoints(e);
                a == v || b == v
            })
        else {
            continue;
        };
        edges.remove(&e);
        let (a, b) = mesh.edge_endpoints(e);
        for w in [a, b] {
            let d = degree.entry(w).or_insert(0);
            *d = d.saturating_sub(1);
            if *d == 1 {
                leaves.push_back(w);
            }
        }
    }

    if edges.is_empty() {
        edges.insert(0);
    }
    let cut = cut_along_edges(mesh, &edges);
    let chi = cut.euler_characteristic();
    if chi != 1 || cut.boundary_loops.len() != 1 {
        return Err(Error::NotADisk { chi });
    }
    Ok(CutSystem { edges, cut })
}

/// Express a closed edge chain in generator coordinates. Fails when the
/// chain has a boundary.
pub fn curve_class(mesh: &Mesh, annotations: &Annotations, chain: &Chain) -> Result<Vec<i64>> {
    let rim = boundary_of_edges(mesh, chain);
    if let Some((vertex, _)) = rim.iter().next() {
        return Err(Error::NotACycle { vertex });
    }
    Ok(annotations.class_of_chain(chain))
}

/// Recover the face chain bounded by a null-homologous cycle: flood-fill
/// the faces on the left of the curve without crossing it, then verify
/// `boundary(sigma) = r` exactly. Coefficients of `r` must be in
/// `{-1, 0, 1}`.
pub fn flood_bounded_domain(mesh: &Mesh, annotations: &Annotations, r: &Chain) -> Result<Chain> {
    assert_eq!(r.dim, 1);
    let class = curve_class(mesh, annotations, r)?;
    if class.iter().any(|&c| c != 0) {
        return Err(Error::NotNullHomologous {
            class: class.iter().map(|&c| c as f64).collect(),
        });
    }
    if r.iter().any(|(_, c)| c.abs() > 1) {
        return Err(Error::Unsupported {
            context: "flood".into(),
            msg: "flooding expects a curve with unit multiplicities".into(),
        });
    }
    if r.is_zero() {
        return Ok(Chain::new(2));
    }

    // Seed with the face on the left of the first curve edge: for the
    // halfedge running along the curve direction, that is its own face.
    let (e0, c0) = r.iter().next().expect("nonzero");
    let h0 = if c0 > 0 {
        mesh.edge_halfedge(e0)
    } else {
        mesh.twin(mesh.edge_halfedge(e0))
    };
    let seed = mesh.face_of(h0);
    let support: BTreeSet<usize> = r.support().collect();
    let mut inside = vec![false; mesh.n_faces()];
    let mut queue = VecDeque::from([seed]);
    inside[seed] = true;
    while let Some(f) = queue.pop_front() {
        for c in 0..3 {
            let h = 3 * f + c;
            if support.contains(&mesh.edge_of(h)) {
                continue;
            }
            let g = mesh.face_of(mesh.twin(h));
            if !inside[g] {
                inside[g] = true;
                queue.push_back(g);
            }
        }
    }
    let sigma = Chain::from_entries(
        2,
        (0..mesh.n_faces()).filter(|&f| inside[f]).map(|f| (f, 1)),
    );
    let achieved = boundary_of_faces(mesh, &sigma);
    let mut negated = achieved.clone();
    negated.add_chain(r, 1); // achieved == -r  <=>  achieved + r == 0
    let mut diff = achieved.clone();
    diff.add_chain(r, -1);
    if diff.is_zero() {
        Ok(sigma)
    } else if negated.is_zero() {
        let mut flipped = Chain::new(2);
        flipped.add_chain(&sigma, -1);
        Ok(flipped)
    } else {
        Err(Error::NotNullHomologous {
            class: class.iter().map(|&c| c as f64).collect(),
        })
    }
}
