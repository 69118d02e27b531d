//! Algebraic intersection numbers of transversal loops and reduction of a
//! homology basis to canonical symplectic form.

use super::Cycle;
use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::simplicial::Chain;
use std::collections::{BTreeMap, BTreeSet};

/// Reroute loops around face boundaries until no two loops share an edge.
/// Each detour subtracts an exact face boundary, so every homology class is
/// preserved. Loops may lose simplicity; only their classes and crossings
/// matter downstream.
pub fn perturb_transversal(mesh: &Mesh, cycles: &[Cycle]) -> Result<Vec<Cycle>> {
    let mut work: Vec<Vec<usize>> = cycles.iter().map(|c| c.halfedges.clone()).collect();
    let users = |work: &[Vec<usize>]| -> BTreeMap<usize, BTreeSet<usize>> {
        let mut m: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
        for (i, hes) in work.iter().enumerate() {
            for &h in hes {
                m.entry(mesh.edge_of(h)).or_default().insert(i);
            }
        }
        m
    };
    let max_rounds = 100 * (1 + work.iter().map(Vec::len).sum::<usize>());
    for _ in 0..max_rounds {
        let usage = users(&work);
        let Some((&edge, shared_by)) = usage.iter().find(|(_, s)| s.len() > 1) else {
            return work
                .into_iter()
                .map(|hes| Cycle::new(mesh, hes))
                .collect();
        };
        let j = *shared_by.iter().max().expect("nonempty");
        let k = work[j]
            .iter()
            .position(|&h| mesh.edge_of(h) == edge)
            .expect("user has the edge");
        let h = work[j][k];
        // Detour around either incident face: u -> w -> v instead of u -> v.
        let left = [mesh.twin(mesh.prev(h)), mesh.twin(mesh.next(h))];
        let t = mesh.twin(h);
        let right = [mesh.next(t), mesh.prev(t)];
        let score = |detour: &[usize; 2]| -> usize {
            detour
                .iter()
                .filter(|&&d| {
                    usage
                        .get(&mesh.edge_of(d))
                        .is_some_and(|s| s.iter().any(|&i| i != j))
                })
                .count()
        };
        let detour = if score(&left) <= score(&right) { left } else { right };
        work[j].splice(k..=k, detour);
    }
    let usage = users(&work);
    let shared = usage.values().filter(|s| s.len() > 1).count();
    Err(Error::PerturbationFailed {
        rounds: max_rounds,
        shared,
    })
}

/// One traversal of a loop through a vertex: the spoke it arrived from
/// (pointing back) and the spoke it leaves along.
struct Passage {
    entry: usize,
    exit: usize,
}

fn passages(mesh: &Mesh, hes: &[usize]) -> BTreeMap<usize, Vec<Passage>> {
    let n = hes.len();
    let mut map: BTreeMap<usize, Vec<Passage>> = BTreeMap::new();
    for k in 0..n {
        let h = hes[k];
        let h_prev = hes[(k + n - 1) % n];
        map.entry(mesh.tail(h)).or_default().push(Passage {
            entry: mesh.twin(h_prev),
            exit: h,
        });
    }
    map
}

/// Crossing sign of strand `a -> b` against strand `c -> d` in a vertex fan
/// of `n` spokes with counterclockwise positions `pos`: positive when the
/// second strand crosses the first left-to-right seen along it (so the
/// tangent pair is positively oriented), negative for the opposite side,
/// zero when the strands do not interleave.
fn crossing_sign(pos: &BTreeMap<usize, usize>, n: usize, p: &Passage, q: &Passage) -> i64 {
    let pa = pos[&p.entry];
    let pb = pos[&p.exit];
    let span = (pa + n - pb) % n;
    let in_left = |x: usize| {
        let rel = (x + n - pb) % n;
        rel > 0 && rel < span
    };
    let c_left = in_left(pos[&q.entry]);
    let d_left = in_left(pos[&q.exit]);
    match (c_left, d_left) {
        (false, true) => 1,
        (true, false) => -1,
        _ => 0,
    }
}

/// Algebraic intersection numbers of pairwise edge-disjoint loops; entry
/// `(i, j)` counts signed crossings of loop `j` across loop `i`.
pub fn intersection_matrix(mesh: &Mesh, cycles: &[Cycle]) -> Result<Vec<Vec<i64>>> {
    let n = cycles.len();
    for i in 0..n {
        let ei = cycles[i].edge_set(mesh);
        for (j, cj) in cycles.iter().enumerate().skip(i + 1) {
            if cj.halfedges.iter().any(|&h| ei.contains(&mesh.edge_of(h))) {
                return Err(Error::Unsupported {
                    context: "intersection".into(),
                    msg: format!("loops {i} and {j} share an edge; perturb to transversal first"),
                });
            }
        }
    }
    let pass: Vec<BTreeMap<usize, Vec<Passage>>> = cycles
        .iter()
        .map(|c| passages(mesh, &c.halfedges))
        .collect();
    let mut c = vec![vec![0i64; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let mut total = 0i64;
            for (v, pi) in &pass[i] {
                let Some(pj) = pass[j].get(v) else {
                    continue;
                };
                let spokes = mesh.outgoing_halfedges(*v);
                let count = spokes.len();
                let pos: BTreeMap<usize, usize> =
                    spokes.into_iter().enumerate().map(|(k, h)| (h, k)).collect();
                for p in pi {
                    for q in pj {
                        total += crossing_sign(&pos, count, p, q);
                    }
                }
            }
            c[i][j] = total;
            c[j][i] = -total;
        }
    }
    Ok(c)
}

/// A homology basis arranged in canonical order `a_1..a_g, b_1..b_g` with
/// intersection matrix `[[0, I], [-I, 0]]`.
#[derive(Debug, Clone)]
pub struct CanonicalBasis {
    pub genus: usize,
    /// Canonical classes as integer edge chains, `a` cycles then `b` cycles.
    pub chains: Vec<Chain>,
    /// Unimodular change of basis: canonical class `k` is
    /// `sum_i transform[i][k] * cycles[i]`.
    pub transform: Vec<Vec<i64>>,
    /// Intersection matrix in the new basis (the standard symplectic form).
    pub intersection: Vec<Vec<i64>>,
}

/// The standard symplectic form in `a`-then-`b` ordering.
pub fn standard_symplectic(genus: usize) -> Vec<Vec<i64>> {
    let n = 2 * genus;
    let mut j = vec![vec![0i64; n]; n];
    for i in 0..genus {
        j[i][genus + i] = 1;
        j[genus + i][i] = -1;
    }
    j
}

/// Bring a basis with intersection matrix `c` to canonical symplectic form
/// by an integer congruence, tracking the transform.
pub fn canonicalize_basis(mesh: &Mesh, cycles: &[Cycle], c: &[Vec<i64>]) -> Result<CanonicalBasis> {
    let n = cycles.len();
    assert!(n % 2 == 0 && c.len() == n);
    let genus = n / 2;
    let mut w: Vec<Vec<i128>> = c
        .iter()
        .map(|row| row.iter().map(|&v| v as i128).collect())
        .collect();
    let mut nmat: Vec<Vec<i128>> = (0..n)
        .map(|i| (0..n).map(|j| i128::from(i == j)).collect())
        .collect();

    // Congruence operations: always apply the same move to rows and columns
    // of w (keeping it skew-symmetric) and to the columns of the transform.
    let swap = |w: &mut Vec<Vec<i128>>, nmat: &mut Vec<Vec<i128>>, i: usize, j: usize| {
        w.swap(i, j);
        for row in w.iter_mut() {
            row.swap(i, j);
        }
        for row in nmat.iter_mut() {
            row.swap(i, j);
        }
    };
    let axpy = |w: &mut Vec<Vec<i128>>, nmat: &mut Vec<Vec<i128>>, l: usize, m: usize, q: i128| {
        // col_l += q * col_m, mirrored on rows.
        for row in w.iter_mut() {
            row[l] += q * row[m];
        }
        for k in 0..w.len() {
            let add = q * w[m][k];
            w[l][k] += add;
        }
        for row in nmat.iter_mut() {
            row[l] += q * row[m];
        }
    };
    let negate = |w: &mut Vec<Vec<i128>>, nmat: &mut Vec<Vec<i128>>, l: usize| {
        for row in w.iter_mut() {
            row[l] = -row[l];
        }
        for v in w[l].iter_mut() {
            *v = -*v;
        }
        for row in nmat.iter_mut() {
            row[l] = -row[l];
        }
    };

    let mut t = 0;
    while t < n {
        // Smallest nonzero pairing in the active block.
        let mut best: Option<(usize, usize)> = None;
        for i in t..n {
            for j in i + 1..n {
                if w[i][j] != 0
                    && best.is_none_or(|(bi, bj)| w[i][j].abs() < w[bi][bj].abs())
                {
                    best = Some((i, j));
                }
            }
        }
        let Some((i, j)) = best else {
            return Err(Error::SingularPairing);
        };
        swap(&mut w, &mut nmat, t, i);
        swap(&mut w, &mut nmat, t + 1, j); // j > i >= t, so j is untouched by the first swap


        // Euclidean descent: shrink the pivot until it divides both rows.
        loop {
            let d = w[t][t + 1];
            debug_assert!(d != 0);
            let mut shrunk = false;
            for l in t + 2..n {
                if w[t][l] % d != 0 {
                    let q = w[t][l] / d;
                    axpy(&mut w, &mut nmat, l, t + 1, -q);
                    swap(&mut w, &mut nmat, t + 1, l);
                    shrunk = true;
                    break;
                }
                if w[t + 1][l] % d != 0 {
                    let q = w[t + 1][l] / w[t + 1][t];
                    axpy(&mut w, &mut nmat, l, t, -q);
                    swap(&mut w, &mut nmat, t, l);
                    shrunk = true;
                    break;
                }
            }
            if !shrunk {
                break;
            }
        }
        let d = w[t][t + 1];
        for l in t + 2..n {
            let top = w[t][l];
            if top != 0 {
                axpy(&mut w, &mut nmat, l, t + 1, -top / d);
            }
            let bottom = w[t + 1][l];
            if bottom != 0 {
                axpy(&mut w, &mut nmat, l, t, bottom / d);
            }
        }
        if w[t][t + 1] < 0 {
            negate(&mut w, &mut nmat, t + 1);
        }
        if w[t][t + 1] != 1 {
            return Err(Error::NotUnimodular {
                det: w[t][t + 1].to_string(),
            });
        }
        t += 2;
    }

    // Interleaved (a1, b1, a2, b2, ...) -> grouped (a..., b...).
    let perm: Vec<usize> = (0..genus)
        .map(|k| 2 * k)
        .chain((0..genus).map(|k| 2 * k + 1))
        .collect();
    let transform: Vec<Vec<i64>> = (0..n)
        .map(|i| {
            perm.iter()
                .map(|&p| i64::try_from(nmat[i][p]).expect("transform entries stay small"))
                .collect()
        })
        .collect();
    let intersection: Vec<Vec<i64>> = (0..n)
        .map(|k| {
            (0..n)
                .map(|l| i64::try_from(w[perm[k]][perm[l]]).expect("small"))
                .collect()
        })
        .collect();
    assert_eq!(
        intersection,
        standard_symplectic(genus),
        "congruence reduction must reach the standard form"
    );

    let chains: Vec<Chain> = (0..n)
        .map(|k| {
            let mut chain = Chain::new(1);
            for (i, cycle) in cycles.iter().enumerate() {
                if transform[i][k] != 0 {
                    chain.add_chain(&cycle.to_chain(mesh), transform[i][k]);
                }
            }
            chain
        })
        .collect();

    Ok(CanonicalBasis {
        genus,
        chains,
        transform,
        intersection,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::homology::{homology_basis, shorten_cycle};
    use crate::meshgen;
    use crate::snf::det_dense;
    use num_bigint::BigInt;

    fn check_surface(mesh: &crate::mesh::Mesh, genus: usize) {
        let basis = homology_basis(mesh).unwrap();
        assert_eq!(basis.genus, genus);
        let shortened: Vec<Cycle> = basis
            .cycles
            .iter()
            .map(|c| shorten_cycle(mesh, c, &basis.annotations))
            .collect();
        let transversal = perturb_transversal(mesh, &shortened).unwrap();
        // Classes survive the perturbation exactly.
        for (i, cyc) in transversal.iter().enumerate() {
            let mut expected = vec![0i64; 2 * genus];
            expected[i] = 1;
            assert_eq!(basis.annotations.class_of_cycle(mesh, cyc), expected);
        }
        let c = intersection_matrix(mesh, &transversal).unwrap();
        for i in 0..2 * genus {
            assert_eq!(c[i][i], 0);
            for j in 0..2 * genus {
                assert_eq!(c[i][j], -c[j][i], "skew symmetry at ({i},{j})");
            }
        }
        let det = det_dense(&c);
        assert!(
            det == BigInt::from(1) || det == BigInt::from(-1),
            "intersection form of a basis is unimodular, got det {det}"
        );

        let canon = canonicalize_basis(mesh, &transversal, &c).unwrap();
        assert_eq!(canon.intersection, standard_symplectic(genus));
        let det_n = det_dense(&canon.transform);
        assert!(
            det_n == BigInt::from(1) || det_n == BigInt::from(-1),
            "transform must be unimodular, det {det_n}"
        );
        // Check N^T C N = J directly.
        let n = 2 * genus;
        let mut ntcn = vec![vec![0i64; n]; n];
        for k in 0..n {
            for l in 0..n {
                let mut acc = 0i64;
                for i in 0..n {
                    for jj in 0..n {
                        acc += canon.transform[i][k] * c[i][jj] * canon.transform[jj][l];
                    }
                }
                ntcn[k][l] = acc;
            }
        }
        assert_eq!(ntcn, standard_symplectic(genus));
    }

    #[test]
    fn torus_basis_canonicalizes() {
        check_surface(&meshgen::flat_torus(4, 1.0).unwrap(), 1);
        check_surface(&meshgen::torus_of_revolution(2.0, 0.8, 10, 8).unwrap(), 1);
    }

    #[test]
    fn genus_two_basis_canonicalizes() {
        check_surface(&meshgen::genus2_plate(1, 0.0).unwrap(), 2);
        check_surface(&meshgen::genus2_plate(1, 0.3).unwrap(), 2);
    }

    #[test]
    fn crossing_sign_orientation() {
        // Six spokes in counterclockwise order. Strand from spoke 3 to
        // spoke 0 runs "eastward"; a strand from spoke 4 to spoke 2 cuts it
        // from its right to its left: positive frame.
        let pos: BTreeMap<usize, usize> = (0..6).map(|k| (k, k)).collect();
        let p = Passage { entry: 3, exit: 0 };
        let q = Passage { entry: 4, exit: 2 };
        assert_eq!(crossing_sign(&pos, 6, &p, &q), 1);
        let q_rev = Passage { entry: 2, exit: 4 };
        assert_eq!(crossing_sign(&pos, 6, &p, &q_rev), -1);
        // Non-interleaved strands (both endpoints on one side) do not cross.
        let q_left = Passage { entry: 1, exit: 2 };
        assert_eq!(crossing_sign(&pos, 6, &p, &q_left), 0);
        let q_right = Passage { entry: 4, exit: 5 };
        assert_eq!(crossing_sign(&pos, 6, &p, &q_right), 0);
    }
}
