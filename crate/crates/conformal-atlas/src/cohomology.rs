//! Closed 1-forms spanning first cohomology, built from handle slices.
//!
//! For a simple loop `a`, a conjugate loop `b` crossing it exactly once is
//! found by cutting along `a` and connecting the two copies of a vertex of
//! `a` through the interior. Slicing along `a` and `b` opens the handle
//! into a surface with one boundary loop reading `a b a^-1 b^-1`; mapping
//! that boundary onto the unit square rim and extending inward with
//! mean-value weights yields two coordinate functions whose coboundaries
//! are closed 1-forms on the original mesh (the two copies of every cut
//! edge receive identical differences by construction). A genus-`g`
//! surface provides `g` such slices and `2g` forms; a final linear
//! correction makes them exactly dual to the homology basis.

use crate::cut::{cut_along_edges, CutMesh};
use crate::error::{Error, Result};
use crate::homology::Cycle;
use crate::mesh::Mesh;
use crate::simplicial::{integrate_chain, Chain, OneForm};
use crate::sparse::{bicgstab_solve, CooBuilder};
use nalgebra::{DMatrix, Vector2};
use std::collections::{BTreeMap, BTreeSet};

/// Tolerance for the two copies of a cut edge to agree in the square map.
const COPY_AGREEMENT_TOL: f64 = 1e-9;

/// Relative residual for the mean-value interior solve.
const EMBED_TOL: f64 = 1e-10;

/// Find a simple loop crossing the given simple loop exactly once: cut
/// along `a` and run a shortest path between the two copies of one of its
/// vertices, keeping away from every other boundary copy.
pub fn conjugate_loop(mesh: &Mesh, a: &Cycle) -> Result<Cycle> {
    let cut = cut_along_edges(mesh, &a.edge_set(mesh));
    for &v in &a.vertices(mesh) {
        let copies = cut.copies_of(v);
        if copies.len() != 2 {
            return Err(Error::Unsupported {
                context: "conjugate".into(),
                msg: format!("vertex {v} has {} copies; loop must be simple", copies.len()),
            });
        }
        let (from, to) = (copies[0], copies[1]);
        if let Some(path) = interior_path(&cut, from, to) {
            let cycle = Cycle::new(mesh, path)?;
            if cycle.is_simple(mesh) {
                return Ok(cycle);
            }
        }
    }
    Err(Error::NotSingleCrossing { count: 0 })
}

/// Shortest path between two boundary copies through interior vertices
/// only. Halfedge ids carry over to the original mesh unchanged.
fn interior_path(cut: &CutMesh, from: usize, to: usize) -> Option<Vec<usize>> {
    let boundary: BTreeSet<usize> = cut
        .boundary_loops
        .iter()
        .flat_map(|l| l.iter().map(|&h| cut.tail(h)))
        .collect();
    let n = cut.n_vertices();
    let mut dist = vec![f64::INFINITY; n];
    let mut arrival: Vec<Option<usize>> = vec![None; n];
    let mut done = vec![false; n];
    let mut heap = std::collections::BinaryHeap::new();
    dist[from] = 0.0;
    heap.push(std::cmp::Reverse((ordered(0.0), from)));
    while let Some(std::cmp::Reverse((_, v))) = heap.pop() {
        if done[v] {
            continue;
        }
        done[v] = true;
        if v == to {
            break;
        }
        for h in cut.outgoing_halfedges(v) {
            let w = cut.head(h);
            // Interior vertices only, except the target.
            if w != to && boundary.contains(&w) {
                continue;
            }
            let cand = dist[v] + (cut.positions[w] - cut.positions[v]).norm();
            if !done[w] && cand < dist[w] {
                dist[w] = cand;
                arrival[w] = Some(h);
                heap.push(std::cmp::Reverse((ordered(cand), w)));
            }
        }
    }
    if !dist[to].is_finite() {
        return None;
    }
    let mut path = Vec::new();
    let mut v = to;
    while let Some(h) = arrival[v] {
        path.push(h);
        v = cut.tail(h);
    }
    path.reverse();
    Some(path)
}

/// Total order on finite floats for the priority queue.
fn ordered(x: f64) -> u64 {
    debug_assert!(x >= 0.0 && x.is_finite());
    x.to_bits()
}

/// One side of the cut-open handle: which loop the run follows and whether
/// it runs along or against that loop's orientation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunKind {
    AForward,
    BForward,
    ABackward,
    BBackward,
}

/// A handle sliced open along a transversal pair, with its single boundary
/// loop organized into the four runs of the relation word.
pub struct SlicedHandle {
    pub cut: CutMesh,
    /// Boundary halfedges per run, in word order: the loops traversed
    /// forward, then each traversed backward.
    pub runs: [Vec<usize>; 4],
    /// Whether the second loop had to be reversed to read the word in its
    /// standard form.
    pub b_flipped: bool,
}

/// Cut the surface open along two simple loops crossing exactly once. The
/// result has one boundary loop spelling the commutator word of the pair.
pub fn slice_along_pair(mesh: &Mesh, a: &Cycle, b: &Cycle) -> Result<SlicedHandle> {
    let mut edges = a.edge_set(mesh);
    edges.extend(b.edge_set(mesh));
    let cut = cut_along_edges(mesh, &edges);
    if cut.boundary_loops.len() != 1 {
        return Err(Error::BadBoundaryWord {
            runs: cut.boundary_loops.len(),
        });
    }
    let walk = cut.boundary_loops[0].clone();

    // Classify each boundary halfedge: which loop and which direction.
    let a_dirs = chain_directions(mesh, a);
    let b_dirs = chain_directions(mesh, b);
    let classify = |h: usize| -> RunKind {
        let e = mesh.edge_of(h);
        let canonical = mesh.is_canonical(h);
        if let Some(&sign) = a_dirs.get(&e) {
            if canonical == (sign > 0) {
                RunKind::AForward
            } else {
                RunKind::ABackward
            }
        } else if let Some(&sign) = b_dirs.get(&e) {
            if canonical == (sign > 0) {
                RunKind::BForward
            } else {
                RunKind::BBackward
            }
        } else {
            unreachable!("boundary edges come from the two loops")
        }
    };

    // Split the walk into maximal runs of one kind.
    let kinds: Vec<RunKind> = walk.iter().map(|&h| classify(h)).collect();
    let n = walk.len();
    let mut starts: Vec<usize> = (0..n)
        .filter(|&k| kinds[k] != kinds[(k + n - 1) % n])
        .collect();
    if starts.len() != 4 {
        return Err(Error::BadBoundaryWord { runs: starts.len() });
    }
    // Rotate so the word begins with a forward run of `a`; then relabel
    // `b`'s orientation so the word is exactly a b a^-1 b^-1.
    let Some(first) = starts
        .iter()
        .position(|&s| kinds[s] == RunKind::AForward)
    else {
        return Err(Error::BadBoundaryWord { runs: 4 });
    };
    starts.rotate_left(first);
    let run_of = |idx: usize| -> Vec<usize> {
        let s = starts[idx];
        let e = starts[(idx + 1) % 4];
        if s < e {
            walk[s..e].to_vec()
        } else {
            walk[s..].iter().chain(&walk[..e]).copied().collect()
        }
    };
    let runs = [run_of(0), run_of(1), run_of(2), run_of(3)];
    let word: Vec<RunKind> = runs.iter().map(|r| classify(r[0])).collect();
    let b_flipped = match word.as_slice() {
        [RunKind::AForward, RunKind::BForward, RunKind::ABackward, RunKind::BBackward] => false,
        [RunKind::AForward, RunKind::BBackward, RunKind::ABackward, RunKind::BForward] => true,
        _ => return Err(Error::BadBoundaryWord { runs: 4 }),
    };
    if runs[0].len() != a.len()
        || runs[2].len() != a.len()
        || runs[1].len() != b.len()
        || runs[3].len() != b.len()
    {
        return Err(Error::BadBoundaryWord { runs: 4 });
    }
    Ok(SlicedHandle {
        cut,
        runs,
        b_flipped,
    })
}

/// Lay the sliced handle's boundary word on the unit square rim: the first
/// loop spans the bottom and (reversed) top sides, the second the right
/// and left. Arc-length parameters along each loop are computed once per
/// original vertex, so the two copies of each cut edge receive equal
/// coordinate differences and the coboundaries descend to the closed
/// surface.
pub fn square_boundary_map(
    mesh: &Mesh,
    handle: &SlicedHandle,
    a: &Cycle,
    b: &Cycle,
) -> Result<BTreeMap<usize, Vector2<f64>>> {
    let cut = &handle.cut;
    let runs = &handle.runs;
    // Arc-length parameter per original vertex along each loop, measured
    // from the basepoint the word starts at.
    let base = cut.orig_vertex[cut.tail(runs[0][0])];
    let t_params = loop_params(mesh, a, base)?;
    let s_params = loop_params_directed(mesh, b, base, handle.b_flipped)?;

    let mut coords: BTreeMap<usize, Vector2<f64>> = BTreeMap::new();
    for (idx, run) in runs.iter().enumerate() {
        // Pin the run's starting corner explicitly (the basepoint has four
        // copies whose loop parameters are ambiguous).
        let corner = match idx {
            0 => Vector2::new(0.0, 0.0),
            1 => Vector2::new(1.0, 0.0),
            2 => Vector2::new(1.0, 1.0),
            _ => Vector2::new(0.0, 1.0),
        };
        coords.insert(cut.tail(run[0]), corner);
        for &h in &run[1..] {
            let copy = cut.tail(h);
            let orig = cut.orig_vertex[copy];
            let p = match idx {
                0 => Vector2::new(t_params[&orig], 0.0),
                1 => Vector2::new(1.0, s_params[&orig]),
                2 => Vector2::new(t_params[&orig], 1.0),
                _ => Vector2::new(0.0, s_params[&orig]),
            };
            coords.insert(copy, p);
        }
    }
    Ok(coords)
}

/// Direction (+/-1) in which a simple loop traverses each of its edges,
/// relative to the canonical edge orientation.
fn chain_directions(mesh: &Mesh, c: &Cycle) -> BTreeMap<usize, i64> {
    let mut m = BTreeMap::new();
    for &h in &c.halfedges {
        m.insert(mesh.edge_of(h), if mesh.is_canonical(h) { 1 } else { -1 });
    }
    m
}

/// Normalized arc-length position of every vertex of a loop, measured from
/// `base` along the loop direction. The basepoint maps to 0.
fn loop_params(mesh: &Mesh, c: &Cycle, base: usize) -> Result<BTreeMap<usize, f64>> {
    let verts = c.vertices(mesh);
    let Some(k0) = verts.iter().position(|&v| v == base) else {
        return Err(Error::Unsupported {
            context: "slice".into(),
            msg: "word basepoint must lie on both loops".into(),
        });
    };
    let n = verts.len();
    let total = c.length(mesh);
    let mut out = BTreeMap::new();
    let mut acc = 0.0;
    for j in 0..n {
        let k = (k0 + j) % n;
        out.insert(verts[k], acc / total);
        acc += mesh.edge_length(mesh.edge_of(c.halfedges[k]));
    }
    Ok(out)
}

fn loop_params_directed(
    mesh: &Mesh,
    c: &Cycle,
    base: usize,
    flipped: bool,
) -> Result<BTreeMap<usize, f64>> {
    if !flipped {
        return loop_params(mesh, c, base);
    }
    let reversed = Cycle {
        halfedges: c.halfedges.iter().rev().map(|&h| mesh.twin(h)).collect(),
    };
    loop_params(mesh, &reversed, base)
}

/// Extend square-rim boundary values into the interior with mean-value
/// weights, solving one nonsymmetric sparse system per coordinate.
pub fn floater_embed(cut: &CutMesh, boundary: &BTreeMap<usize, Vector2<f64>>) -> Result<Vec<Vector2<f64>>> {
    let n = cut.n_vertices();
    let mut builder = CooBuilder::new(n, n);
    let mut rhs_x = vec![0.0; n];
    let mut rhs_y = vec![0.0; n];
    for v in 0..n {
        if let Some(p) = boundary.get(&v) {
            builder.add(v, v, 1.0);
            rhs_x[v] = p.x;
            rhs_y[v] = p.y;
            continue;
        }
        let spokes = cut.outgoing_halfedges(v);
        let d = spokes.len();
        let pv = cut.positions[v];
        // Corner angle of face k at v, between spokes k and k+1.
        let angle = |k: usize| -> f64 {
            let u = cut.positions[cut.head(spokes[k])] - pv;
            let w = cut.positions[cut.head(spokes[(k + 1) % d])] - pv;
            u.cross(&w).norm().atan2(u.dot(&w))
        };
        let mut wsum = 0.0;
        let mut weights = Vec::with_capacity(d);
        for k in 0..d {
            let r = (cut.positions[cut.head(spokes[k])] - pv).norm();
            let w = ((angle((k + d - 1) % d) / 2.0).tan() + (angle(k) / 2.0).tan()) / r;
            weights.push(w);
            wsum += w;
        }
        builder.add(v, v, 1.0);
        for (k, &h) in spokes.iter().enumerate() {
            builder.add(v, cut.head(h), -weights[k] / wsum);
        }
    }
    let a = builder.build();
    let guess = vec![0.5; n];
    let (x, sx) = bicgstab_solve(&a, &rhs_x, Some(&guess), EMBED_TOL, 40 * n.max(100));
    let (y, sy) = bicgstab_solve(&a, &rhs_y, Some(&guess), EMBED_TOL, 40 * n.max(100));
    for stats in [&sx, &sy] {
        if !stats.converged {
            return Err(Error::SolverStalled {
                target: EMBED_TOL,
                achieved: stats.relative_residual,
                iterations: stats.iterations,
            });
        }
    }
    Ok((0..n).map(|v| Vector2::new(x[v], y[v])).collect())
}

/// The two closed 1-forms of one sliced handle: coboundaries of the square
/// coordinates, read back onto the closed mesh.
pub fn dual_pair_forms(mesh: &Mesh, a: &Cycle, b: &Cycle) -> Result<(OneForm, OneForm)> {
    let handle = slice_along_pair(mesh, a, b)?;
    let boundary = square_boundary_map(mesh, &handle, a, b)?;
    let coords = floater_embed(&handle.cut, &boundary)?;
    let cut = &handle.cut;
    let mut dx = OneForm::zeros(mesh);
    let mut dy = OneForm::zeros(mesh);
    for e in 0..mesh.n_edges() {
        let h = mesh.edge_halfedge(e);
        let delta = coords[cut.head(h)] - coords[cut.tail(h)];
        // The opposite halfedge sees the other copies of the endpoints;
        // the per-vertex parameterization makes both sides agree.
        let t = mesh.twin(h);
        let delta_other = coords[cut.tail(t)] - coords[cut.head(t)];
        let gap = (delta - delta_other).norm();
        assert!(
            gap <= COPY_AGREEMENT_TOL,
            "cut copies disagree on edge {e}: {gap}"
        );
        dx.set_on_edge(e, delta.x);
        dy.set_on_edge(e, delta.y);
    }
    Ok((dx, dy))
}

/// A set of closed 1-forms dual to a homology basis.
#[derive(Debug, Clone)]
pub struct DualBasis {
    /// The corrected forms, one per basis slot.
    pub forms: Vec<OneForm>,
    /// Candidate form index chosen for each basis slot before correction.
    pub chosen: Vec<usize>,
    /// Pairing matrix after correction (identity up to `duality_gap`).
    pub residual: DMatrix<f64>,
    /// Largest deviation of the corrected pairing matrix from identity.
    pub duality_gap: f64,
}

/// Build `2g` closed forms exactly dual to the target basis chains: slice
/// every loop with a conjugate loop, collect candidate forms, select an
/// independent subset by pivoted elimination on the period pairing and
/// multiply by the inverse pairing.
pub fn dual_basis(mesh: &Mesh, target: &[Chain], loops: &[Cycle]) -> Result<DualBasis> {
    let g2 = target.len();
    if g2 == 0 {
        return Ok(DualBasis {
            forms: Vec::new(),
            chosen: Vec::new(),
            residual: DMatrix::zeros(0, 0),
            duality_gap: 0.0,
        });
    }
    let mut candidates: Vec<OneForm> = Vec::new();
    for a in loops {
        let b = conjugate_loop(mesh, a)?;
        let (dx, dy) = dual_pair_forms(mesh, a, &b)?;
        candidates.push(dx);
        candidates.push(dy);
    }
    let pairing = DMatrix::from_fn(g2, candidates.len(), |i, j| {
        integrate_chain(mesh, &candidates[j], &target[i])
    });

    // Column selection by partial-pivot elimination.
    let mut work = pairing.clone();
    let mut chosen = Vec::with_capacity(g2);
    let mut available: Vec<usize> = (0..candidates.len()).collect();
    for row in 0..g2 {
        let (pick_pos, best) = available
            .iter()
            .enumerate()
            .map(|(pos, &j)| (pos, work.column(j).rows(row, g2 - row).amax()))
            .max_by(|x, y| x.1.partial_cmp(&y.1).expect("finite"))
            .ok_or(Error::SingularPairing)?;
        if best < 1e-8 {
            return Err(Error::SingularPairing);
        }
        let j = available.remove(pick_pos);
        chosen.push(j);
        // Move the largest entry of this column into the pivot row, then
        // eliminate it from the remaining rows.
        let rel = (row..g2)
            .max_by(|&x, &y| {
                work[(x, j)]
                    .abs()
                    .partial_cmp(&work[(y, j)].abs())
                    .expect("finite")
            })
            .expect("nonempty");
        work.swap_rows(row, rel);
        for r in row + 1..g2 {
            let factor = work[(r, j)] / work[(row, j)];
            for &c in &available {
                let v = work[(row, c)];
                work[(r, c)] -= factor * v;
            }
            work[(r, j)] = 0.0;
        }
    }
    chosen.sort_unstable();

    let m = DMatrix::from_fn(g2, g2, |i, k| pairing[(i, chosen[k])]);
    let m_inv = m.clone().try_inverse().ok_or(Error::SingularPairing)?;
    let picked: Vec<OneForm> = chosen.iter().map(|&c| candidates[c].clone()).collect();
    let forms: Vec<OneForm> = (0..g2)
        .map(|j| {
            let coeffs: Vec<f64> = (0..g2).map(|k| m_inv[(k, j)]).collect();
            OneForm::linear_combination(&picked, &coeffs)
        })
        .collect();
    let residual = DMatrix::from_fn(g2, g2, |i, j| integrate_chain(mesh, &forms[j], &target[i]));
    let gap = (0..g2)
        .flat_map(|i| (0..g2).map(move |j| (i, j)))
        .map(|(i, j)| (residual[(i, j)] - f64::from(u8::from(i == j))).abs())
        .fold(0.0f64, f64::max);
    Ok(DualBasis {
        forms,
        chosen,
        residual,
        duality_gap: gap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::homology::{homology_basis, intersection_matrix, shorten_cycle, HomologyBasis};
    use crate::meshgen;
    use crate::simplicial::face_circulation;

    fn shortened_generators(mesh: &Mesh) -> (HomologyBasis, Vec<Cycle>) {
        let basis = homology_basis(mesh).unwrap();
        let loops: Vec<Cycle> = basis
            .cycles
            .iter()
            .map(|c| shorten_cycle(mesh, c, &basis.annotations))
            .collect();
        (basis, loops)
    }

    #[test]
    fn conjugate_crosses_exactly_once() {
        let mesh = meshgen::flat_torus(4, 1.0).unwrap();
        let (_, loops) = shortened_generators(&mesh);
        for a in &loops {
            let b = conjugate_loop(&mesh, a).unwrap();
            assert!(b.is_simple(&mesh));
            let c = intersection_matrix(&mesh, &[a.clone(), b.clone()]).unwrap();
            assert_eq!(c[0][1].abs(), 1, "single transversal crossing");
        }
    }

    #[test]
    fn slice_boundary_word_is_commutator() {
        let mesh = meshgen::torus_of_revolution(2.0, 0.8, 10, 8).unwrap();
        let (_, loops) = shortened_generators(&mesh);
        let a = &loops[0];
        let b = conjugate_loop(&mesh, a).unwrap();
        let handle = slice_along_pair(&mesh, a, &b).unwrap();
        assert_eq!(handle.runs[0].len(), a.len());
        assert_eq!(handle.runs[2].len(), a.len());
        assert_eq!(handle.runs[1].len(), b.len());
        assert_eq!(handle.runs[3].len(), b.len());
        let coords = square_boundary_map(&mesh, &handle, a, &b).unwrap();
        // Corners sit at the four square corners.
        let c0 = coords[&handle.cut.tail(handle.runs[0][0])];
        assert_eq!((c0.x, c0.y), (0.0, 0.0));
        let c1 = coords[&handle.cut.tail(handle.runs[1][0])];
        assert_eq!((c1.x, c1.y), (1.0, 0.0));
    }

    #[test]
    fn square_map_forms_are_closed_with_unit_period() {
        let mesh = meshgen::flat_torus(6, 1.0).unwrap();
        let (basis, loops) = shortened_generators(&mesh);
        let a = &loops[0];
        let b = conjugate_loop(&mesh, a).unwrap();
        let (dx, dy) = dual_pair_forms(&mesh, a, &b).unwrap();
        for f in 0..mesh.n_faces() {
            assert!(face_circulation(&mesh, &dx, f).abs() < 1e-10);
            assert!(face_circulation(&mesh, &dy, f).abs() < 1e-10);
        }
        // The x coordinate increases by exactly one around loop a.
        let period = integrate_chain(&mesh, &dx, &a.to_chain(&mesh));
        assert!((period - 1.0).abs() < 1e-12);
        // dy has zero period around a.
        let period_y = integrate_chain(&mesh, &dy, &a.to_chain(&mesh));
        assert!(period_y.abs() < 1e-12);
        let _ = basis;
    }

    #[test]
    fn disk_slice_embeds_without_flips() {
        // Genus one: the slice is a disk and the mean-value extension of a
        // convex boundary is injective, so every face keeps positive
        // orientation in the square.
        let mesh = meshgen::flat_torus(6, 1.0).unwrap();
        let (_, loops) = shortened_generators(&mesh);
        let a = &loops[0];
        let b = conjugate_loop(&mesh, a).unwrap();
        let handle = slice_along_pair(&mesh, a, &b).unwrap();
        assert_eq!(handle.cut.euler_characteristic(), 1);
        let boundary = square_boundary_map(&mesh, &handle, a, &b).unwrap();
        let coords = floater_embed(&handle.cut, &boundary).unwrap();
        let mut neg = 0;
        for f in 0..handle.cut.n_faces() {
            let [i, j, k] = handle.cut.faces[f];
            let e1 = coords[j] - coords[i];
            let e2 = coords[k] - coords[i];
            if e1.x * e2.y - e1.y * e2.x <= 0.0 {
                neg += 1;
            }
        }
        assert_eq!(neg, 0, "{neg} flipped faces in square embedding");
    }

    #[test]
    fn dual_basis_pairs_with_generators() {
        for (mesh, genus) in [
            (meshgen::flat_torus(4, 1.0).unwrap(), 1usize),
            (meshgen::torus_of_revolution(2.0, 0.8, 10, 8).unwrap(), 1),
            (meshgen::genus2_plate(1, 0.25).unwrap(), 2),
        ] {
            let (basis, loops) = shortened_generators(&mesh);
            assert_eq!(basis.genus, genus);
            let chains: Vec<Chain> = basis.cycles.iter().map(|c| c.to_chain(&mesh)).collect();
            let dual = dual_basis(&mesh, &chains, &loops).unwrap();
            assert_eq!(dual.forms.len(), 2 * genus);
            assert!(
                dual.duality_gap < 1e-6,
                "duality gap {} on genus {genus}",
                dual.duality_gap
            );
            for form in &dual.forms {
                for f in 0..mesh.n_faces() {
                    assert!(face_circulation(&mesh, form, f).abs() < 1e-9);
                }
            }
        }
    }
}
