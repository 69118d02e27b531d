//! Cycle shortening: spike removal plus Dijkstra shortcuts that are only
//! accepted when they strictly reduce length, preserve the exact homology
//! class (checked through edge annotations) and keep the loop simple.

use super::{Annotations, Cycle};
use crate::mesh::Mesh;
use std::cmp::Ordering;
use std::collections::{BinaryHeap, BTreeSet};

/// Max-heap entry ordered so the smallest (distance, vertex) pops first;
/// the vertex id tie-break keeps traversal order deterministic.
#[derive(PartialEq)]
struct QueueItem {
    dist: f64,
    vertex: usize,
}

impl Eq for QueueItem {}

impl Ord for QueueItem {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .partial_cmp(&self.dist)
            .expect("finite distances")
            .then_with(|| other.vertex.cmp(&self.vertex))
    }
}

impl PartialOrd for QueueItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct ShortestPaths {
    dist: Vec<f64>,
    /// Halfedge arriving at each vertex on its shortest path, if reached.
    arrival: Vec<Option<usize>>,
}

fn dijkstra(mesh: &Mesh, source: usize) -> ShortestPaths {
    let n = mesh.n_vertices();
    let mut dist = vec![f64::INFINITY; n];
    let mut arrival: Vec<Option<usize>> = vec![None; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(QueueItem {
        dist: 0.0,
        vertex: source,
    });
    while let Some(QueueItem { vertex: v, .. }) = heap.pop() {
        if done[v] {
            continue;
        }
        done[v] = true;
        for h in mesh.outgoing_halfedges(v) {
            let w = mesh.head(h);
            let cand = dist[v] + mesh.edge_length(mesh.edge_of(h));
            // Strictly-better relaxation with id tie-break keeps the
            // shortest-path tree unique and deterministic.
            let better = cand < dist[w]
                || (cand == dist[w]
                    && arrival[w].is_some_and(|prev| mesh.tail(prev) > v));
            if !done[w] && better {
                dist[w] = cand;
                arrival[w] = Some(h);
                heap.push(QueueItem {
                    dist: cand,
                    vertex: w,
                });
            }
        }
    }
    ShortestPaths { dist, arrival }
}

/// Halfedge path `source -> target` along the shortest-path tree.
fn extract_path(mesh: &Mesh, sp: &ShortestPaths, target: usize) -> Vec<usize> {
    let mut path = Vec::new();
    let mut v = target;
    while let Some(h) = sp.arrival[v] {
        path.push(h);
        v = mesh.tail(h);
    }
    path.reverse();
    path
}

fn remove_spikes(mesh: &Mesh, halfedges: &mut Vec<usize>) {
    loop {
        let n = halfedges.len();
        if n < 2 {
            return;
        }
        let Some(k) = (0..n).find(|&k| mesh.twin(halfedges[k]) == halfedges[(k + 1) % n]) else {
            return;
        };
        if k + 1 < n {
            halfedges.drain(k..=k + 1);
        } else {
            halfedges.remove(n - 1);
            halfedges.remove(0);
        }
    }
}

/// Shorten a loop while preserving its homology class exactly.
///
/// Each pass launches Dijkstra from a few evenly spaced loop vertices and
/// replaces one arc of the loop by a strictly shorter shortest path whenever
/// the exchange keeps the class (annotation-checked) and the loop stays
/// simple. Passes repeat until no acceptable shortcut remains.
pub fn shorten_cycle(mesh: &Mesh, cycle: &Cycle, annotations: &Annotations) -> Cycle {
    let mut hes = cycle.halfedges.clone();
    remove_spikes(mesh, &mut hes);
    if hes.is_empty() {
        return Cycle { halfedges: hes };
    }
    let eps = 1e-12 * mesh.bbox_diag();
    let max_passes = 24;
    let mut stalled = 0;
    for pass in 0..max_passes {
        let n = hes.len();
        let loop_vertices: Vec<usize> = hes.iter().map(|&h| mesh.tail(h)).collect();
        let position: std::collections::BTreeMap<usize, usize> = loop_vertices
            .iter()
            .enumerate()
            .map(|(k, &v)| (v, k))
            .collect();
        // Prefix arc lengths: arc from position 0 to position k.
        let mut prefix = vec![0.0f64; n + 1];
        for k in 0..n {
            prefix[k + 1] = prefix[k] + mesh.edge_length(mesh.edge_of(hes[k]));
        }
        let total = prefix[n];

        let n_sources = if n <= 16 { n } else { 8 };
        let mut best: Option<(f64, Vec<usize>)> = None;
        for s_idx in 0..n_sources {
            // Rotate the source offset each pass so stalled loops get new
            // exchange opportunities instead of a fixed point.
            let k_s = (s_idx * n / n_sources + pass) % n;
            let s = loop_vertices[k_s];
            let sp = dijkstra(mesh, s);
            for (&t, &k_t) in &position {
                if t == s || !sp.dist[t].is_finite() {
                    continue;
                }
                // Arc s..t in loop direction; skip targets whose shortest
                // path cannot shorten the loop even before cancellation.
                let arc_len = if k_t >= k_s {
                    prefix[k_t] - prefix[k_s]
                } else {
                    total - (prefix[k_s] - prefix[k_t])
                };
                if arc_len - sp.dist[t] <= eps {
                    continue;
                }
                let path = extract_path(mesh, &sp, t);
                if let Some(candidate) = try_exchange(mesh, annotations, &hes, k_s, k_t, &path) {
                    let len: f64 = candidate
                        .iter()
                        .map(|&h| mesh.edge_length(mesh.edge_of(h)))
                        .sum();
                    if len < total - eps && best.as_ref().is_none_or(|(bl, _)| len < *bl) {
                        best = Some((len, candidate));
                    }
                }
            }
        }
        let Some((_, next)) = best else {
            stalled += 1;
            if stalled >= 3 {
                break;
            }
            continue;
        };
        stalled = 0;
        hes = next;
        if hes.is_empty() {
            break;
        }
    }
    let mut out = Cycle { halfedges: hes };
    out.normalize_start();
    out
}

/// Replace the loop arc from position `k_s` to `k_t` by `path`, returning
/// the new loop (spikes removed) if it preserves class and simplicity.
fn try_exchange(
    mesh: &Mesh,
    annotations: &Annotations,
    hes: &[usize],
    k_s: usize,
    k_t: usize,
    path: &[usize],
) -> Option<Vec<usize>> {
    let arc: Vec<usize> = if k_t >= k_s {
        hes[k_s..k_t].to_vec()
    } else {
        hes[k_s..].iter().chain(&hes[..k_t]).copied().collect()
    };
    if annotations.class_of_path(mesh, path) != annotations.class_of_path(mesh, &arc) {
        return None;
    }
    let rest: Vec<usize> = if k_t >= k_s {
        hes[k_t..].iter().chain(&hes[..k_s]).copied().collect()
    } else {
        hes[k_t..k_s].to_vec()
    };
    let mut candidate = path.to_vec();
    candidate.extend(&rest);
    // Spike removal may cancel stretches where the path doubles back along
    // the kept arc; it changes neither the chain nor the class.
    remove_spikes(mesh, &mut candidate);
    if candidate.is_empty() {
        return None;
    }
    let verts: Vec<usize> = candidate.iter().map(|&h| mesh.tail(h)).collect();
    let distinct: BTreeSet<usize> = verts.iter().copied().collect();
    if distinct.len() != verts.len() {
        return None;
    }
    Some(candidate)
}
