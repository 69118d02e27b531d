//! End-to-end driver: from a closed mesh to its conformal invariants.
//!
//! Genus zero dispatches to the spherical embedding; positive genus runs the
//! full chain — homology basis, dual cohomology basis, harmonic diffusion,
//! Hodge star, holomorphic pairing, periods.  Every stage's residuals are
//! collected into [`Diagnostics`], failures are wrapped with the stage name,
//! and the dominant harmonic stage can be cached to a working directory
//! keyed by a content hash of mesh and configuration.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cohomology::{dual_basis, DualBasis};
use crate::error::{Error, Result};
use crate::harmonic::{diffuse_to_harmonic, DiffuseOptions, HarmonicSolver};
use crate::hodge::{
    holomorphic_pairs, select_complex_independent, star_operator, HolomorphicForm,
    StarOperator,
};
use crate::homology::{
    canonicalize_basis, homology_basis, intersection_matrix, perturb_transversal,
    shorten_cycle, CanonicalBasis, Cycle, HomologyBasis,
};
use crate::mesh::{
    all_charts, cotan_weights, preprocess_negative_weights, Mesh, PreprocessMode,
};
use crate::period::{compute_periods, reduce_genus_one_basis, PeriodData};
use crate::simplicial::OneForm;
use crate::sphere::{conformal_embed, map_degree, FlowOptions, SphereMap};

/// Run configuration; every field has a default, so partial TOML or JSON
/// files work.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct Config {
    /// Gate for verification-style residuals (duality pairing, period
    /// comparisons).  Solver-internal tolerances stay at their own,
    /// tighter defaults.
    pub tol: f64,
    /// Harmonic-stage solver.
    pub solver: HarmonicSolver,
    /// Repair strategy for non-positive cotangent weights.
    pub preprocess: PreprocessMode,
    /// Rayon worker count; `None` keeps the library default.
    pub threads: Option<usize>,
    /// Cache directory for intermediate artifacts; falls back to the
    /// `CONFORMAL_ATLAS_WORKDIR` environment variable, and caching is
    /// disabled when neither is set.
    pub workdir: Option<PathBuf>,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            tol: 1e-6,
            solver: HarmonicSolver::Direct,
            preprocess: PreprocessMode::Swap,
            threads: None,
            workdir: None,
        }
    }
}

impl Config {
    /// Load a configuration from a TOML (`.toml`) or JSON (`.json`) file.
    pub fn from_path(path: impl AsRef<Path>) -> Result<Config> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        let is_json = path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("json"));
        if is_json {
            Ok(serde_json::from_str(&text)?)
        } else {
            toml::from_str(&text)
                .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
        }
    }
}

/// Element counts and topology of the working mesh.
#[derive(Debug, Clone, Serialize)]
pub struct MeshStats {
    pub vertices: usize,
    pub edges: usize,
    pub faces: usize,
    pub euler_characteristic: i64,
    pub genus: usize,
}

impl MeshStats {
    pub fn of(mesh: &Mesh) -> Self {
        let (chi, genus) = mesh.euler_genus();
        MeshStats {
            vertices: mesh.n_vertices(),
            edges: mesh.n_edges(),
            faces: mesh.n_faces(),
            euler_characteristic: chi,
            genus,
        }
    }
}

/// What the weight-repair pass did.
#[derive(Debug, Clone, Serialize)]
pub struct PreprocessSummary {
    pub initial_negative: usize,
    pub swaps: usize,
    pub splits: usize,
    pub residual_non_positive: usize,
}

/// Slim per-form convergence record for the harmonic stage.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HarmonicDiag {
    pub solver: HarmonicSolver,
    pub iterations: usize,
    pub relative_residual: f64,
    pub final_energy: f64,
}

/// Convergence record for the genus-zero spherical embedding.
#[derive(Debug, Clone, Serialize)]
pub struct SphereDiag {
    pub energy: f64,
    pub iterations: usize,
    pub max_norm_deviation: f64,
    pub centroid_norm: f64,
    pub degree: f64,
}

/// All residuals gathered along the run.  Wall-clock timings are kept for
/// callers but excluded from serialized output so identical inputs always
/// produce identical JSON.
#[derive(Debug, Clone, Default, Serialize)]
pub struct Diagnostics {
    pub preprocess: Option<PreprocessSummary>,
    pub duality_gap: Option<f64>,
    pub wedge_gap: Option<f64>,
    pub harmonic: Vec<HarmonicDiag>,
    pub sphere: Option<SphereDiag>,
    /// Seconds per stage; not serialized.
    #[serde(skip)]
    pub timings: BTreeMap<&'static str, f64>,
}

/// Everything the pipeline produced.  Stage outputs are `None`/empty when
/// the stage does not apply to the mesh's genus.
#[derive(Debug, Clone)]
pub struct PipelineResult {
    /// The mesh the stages actually ran on (post-preprocessing).
    pub mesh: Mesh,
    pub stats: MeshStats,
    pub sphere: Option<SphereMap>,
    pub basis: Option<HomologyBasis>,
    pub loops: Vec<Cycle>,
    pub canonical: Option<CanonicalBasis>,
    pub dual: Option<DualBasis>,
    pub harmonic: Vec<OneForm>,
    pub star: Option<StarOperator>,
    pub pairs: Vec<HolomorphicForm>,
    pub selected: Vec<usize>,
    pub periods: Option<PeriodData>,
    pub diagnostics: Diagnostics,
}

#[derive(Serialize)]
struct SummaryDoc<'a> {
    stats: &'a MeshStats,
    intersection: Option<&'a Vec<Vec<i64>>>,
    selected: &'a [usize],
    star_coefficients: Option<Vec<Vec<f64>>>,
    periods: Option<&'a PeriodData>,
    diagnostics: &'a Diagnostics,
}

impl PipelineResult {
    /// Deterministic JSON summary of the run: stats, residuals, periods.
    pub fn to_json(&self) -> Result<String> {
        let star_coefficients = self.star.as_ref().map(|s| {
            (0..s.coeffs.nrows())
                .map(|i| s.coeffs.row(i).iter().copied().collect())
                .collect()
        });
        let doc = SummaryDoc {
            stats: &self.stats,
            intersection: self.canonical.as_ref().map(|c| &c.intersection),
            selected: &self.selected,
            star_coefficients,
            periods: self.periods.as_ref(),
            diagnostics: &self.diagnostics,
        };
        Ok(serde_json::to_string_pretty(&doc)? + "\n")
    }

    /// The complex-independent holomorphic forms chosen by the run.
    pub fn holomorphic(&self) -> Vec<&HolomorphicForm> {
        self.selected.iter().map(|&k| &self.pairs[k]).collect()
    }
}

/// Directory for cached artifacts, if any.
pub fn resolve_workdir(config: &Config) -> Option<PathBuf> {
    config
        .workdir
        .clone()
        .or_else(|| std::env::var_os("CONFORMAL_ATLAS_WORKDIR").map(PathBuf::from))
}

/// Content hash of the working mesh plus the configuration fields that
/// influence computed values.
fn content_hash(mesh: &Mesh, config: &Config) -> String {
    let mut hasher = Sha256::new();
    for p in mesh.positions() {
        for k in 0..3 {
            hasher.update(p[k].to_bits().to_le_bytes());
        }
    }
    for f in mesh.faces() {
        for &v in f {
            hasher.update((v as u64).to_le_bytes());
        }
    }
    hasher.update([config.solver as u8, config.preprocess as u8]);
    let digest = hasher.finalize();
    let mut hex = String::with_capacity(64);
    for byte in digest {
        hex.push_str(&format!("{byte:02x}"));
    }
    hex
}

#[derive(Serialize, Deserialize)]
struct HarmonicCache {
    values: Vec<Vec<f64>>,
    reports: Vec<HarmonicDiag>,
}

fn load_harmonic_cache(path: &Path, n_edges: usize, n_forms: usize) -> Option<HarmonicCache> {
    let text = std::fs::read_to_string(path).ok()?;
    let cache: HarmonicCache = serde_json::from_str(&text).ok()?;
    let shape_ok = cache.values.len() == n_forms
        && cache.reports.len() == n_forms
        && cache.values.iter().all(|v| v.len() == n_edges);
    shape_ok.then_some(cache)
}

/// Run the full conformal-structure pipeline on a closed mesh.
pub fn run_pipeline(mesh: &Mesh, config: &Config) -> Result<PipelineResult> {
    let mut diagnostics = Diagnostics::default();
    if let Some(threads) = config.threads {
        // Best effort; the global pool can only be configured once.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }

    // Weight repair.
    let clock = Instant::now();
    let probe = cotan_weights(mesh);
    let work = if probe.non_positive.is_empty() || config.preprocess == PreprocessMode::None
    {
        mesh.clone()
    } else {
        let (fixed, report) = preprocess_negative_weights(mesh, config.preprocess)
            .map_err(Error::at_stage("preprocess"))?;
        diagnostics.preprocess = Some(PreprocessSummary {
            initial_negative: report.initial_negative.len(),
            swaps: report.swaps,
            splits: report.splits,
            residual_non_positive: report.residual.len(),
        });
        fixed
    };
    diagnostics
        .timings
        .insert("preprocess", clock.elapsed().as_secs_f64());

    let stats = MeshStats::of(&work);
    let genus = stats.genus;

    if genus == 0 {
        let clock = Instant::now();
        let map = conformal_embed(&work, &FlowOptions::default())
            .map_err(Error::at_stage("sphere"))?;
        diagnostics.sphere = Some(SphereDiag {
            energy: map.energy(),
            iterations: map.iterations,
            max_norm_deviation: map.max_norm_deviation(),
            centroid_norm: map.weighted_centroid(&work).norm(),
            degree: map_degree(&work, &map.positions),
        });
        diagnostics
            .timings
            .insert("sphere", clock.elapsed().as_secs_f64());
        return Ok(PipelineResult {
            mesh: work,
            stats,
            sphere: Some(map),
            basis: None,
            loops: Vec::new(),
            canonical: None,
            dual: None,
            harmonic: Vec::new(),
            star: None,
            pairs: Vec::new(),
            selected: Vec::new(),
            periods: None,
            diagnostics,
        });
    }

    // Homology: generators, shortened and made transversal, then brought to
    // canonical symplectic form.
    let clock = Instant::now();
    let stage = Error::at_stage("homology");
    let basis = homology_basis(&work).map_err(&stage)?;
    let loops: Vec<Cycle> = basis
        .cycles
        .iter()
        .map(|c| shorten_cycle(&work, c, &basis.annotations))
        .collect();
    let perturbed = perturb_transversal(&work, &loops).map_err(&stage)?;
    let cmat = intersection_matrix(&work, &perturbed).map_err(&stage)?;
    let mut canonical = canonicalize_basis(&work, &loops, &cmat).map_err(&stage)?;
    diagnostics
        .timings
        .insert("homology", clock.elapsed().as_secs_f64());

    // Cohomology: closed dual cochains with exact unit periods.
    let clock = Instant::now();
    let dual = dual_basis(&work, &canonical.chains, &loops)
        .map_err(Error::at_stage("cohomology"))?;
    diagnostics.duality_gap = Some(dual.duality_gap);
    if dual.duality_gap > config.tol {
        return Err(Error::at_stage("cohomology")(Error::Unsupported {
            context: "duality pairing".into(),
            msg: format!(
                "gap {:.3e} exceeds configured tolerance {:.3e}",
                dual.duality_gap, config.tol
            ),
        }));
    }
    diagnostics
        .timings
        .insert("cohomology", clock.elapsed().as_secs_f64());

    // Harmonic diffusion, the dominant stage; cached by content hash.
    let clock = Instant::now();
    let weights = cotan_weights(&work);
    let cache_file = resolve_workdir(config).map(|dir| {
        dir.join(format!("{}.harmonic.json", content_hash(&work, config)))
    });
    let cached = cache_file.as_deref().and_then(|p| {
        load_harmonic_cache(p, work.n_edges(), dual.forms.len())
    });
    let mut harmonic: Vec<OneForm>;
    match cached {
        Some(cache) => {
            harmonic = cache.values.into_iter().map(OneForm::from_values).collect();
            diagnostics.harmonic = cache.reports;
        }
        None => {
            let opts = DiffuseOptions {
                solver: config.solver,
                ..DiffuseOptions::default()
            };
            harmonic = Vec::with_capacity(dual.forms.len());
            for omega in &dual.forms {
                let (form, report) = diffuse_to_harmonic(&work, &weights, omega, &opts)
                    .map_err(Error::at_stage("harmonic"))?;
                diagnostics.harmonic.push(HarmonicDiag {
                    solver: report.solver,
                    iterations: report.iterations,
                    relative_residual: report.relative_residual,
                    final_energy: report.final_energy,
                });
                harmonic.push(form);
            }
            if let Some(path) = cache_file.as_deref() {
                // Caching is best effort; a read-only workdir is not an error.
                let cache = HarmonicCache {
                    values: harmonic.iter().map(|f| f.values().to_vec()).collect(),
                    reports: diagnostics.harmonic.clone(),
                };
                if let Some(parent) = path.parent() {
                    let _ = std::fs::create_dir_all(parent);
                }
                if let Ok(text) = serde_json::to_string(&cache) {
                    let _ = std::fs::write(path, text);
                }
            }
        }
    }
    diagnostics
        .timings
        .insert("harmonic", clock.elapsed().as_secs_f64());

    // Hodge star on the harmonic span; genus one gets its canonical basis
    // reduced so the period lattice is as square as possible.
    let clock = Instant::now();
    let charts = all_charts(&work);
    let mut star = star_operator(&work, &charts, &harmonic, &canonical.intersection)
        .map_err(Error::at_stage("hodge"))?;
    diagnostics.wedge_gap = Some(star.wedge_gap);
    if genus == 1 {
        reduce_genus_one_basis(&work, &mut canonical.chains, &mut harmonic, &mut star);
    }
    let pairs = holomorphic_pairs(&harmonic, &star);
    let selected =
        select_complex_independent(&star, genus).map_err(Error::at_stage("hodge"))?;
    diagnostics
        .timings
        .insert("hodge", clock.elapsed().as_secs_f64());

    // Periods of the holomorphic span over the canonical chains.
    let clock = Instant::now();
    let periods = compute_periods(
        &work,
        &canonical.chains,
        &canonical.intersection,
        &harmonic,
        &star,
        &pairs,
        &selected,
    )
    .map_err(Error::at_stage("period"))?;
    diagnostics
        .timings
        .insert("period", clock.elapsed().as_secs_f64());

    Ok(PipelineResult {
        mesh: work,
        stats,
        sphere: None,
        basis: Some(basis),
        loops,
        canonical: Some(canonical),
        dual: Some(dual),
        harmonic,
        star: Some(star),
        pairs,
        selected,
        periods: Some(periods),
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::meshgen;

    #[test]
    fn flat_torus_pipeline_reaches_square_modulus() {
        let mesh = meshgen::flat_torus(8, 1.0).unwrap();
        let result = run_pipeline(&mesh, &Config::default()).unwrap();
        assert_eq!(result.stats.genus, 1);
        assert_eq!(result.selected.len(), 1);
        assert_eq!(result.harmonic.len(), 2);
        let periods = result.periods.as_ref().unwrap();
        let tau = periods.tau.unwrap();
        assert!((tau - num_complex::Complex64::new(0.0, 1.0)).norm() < 0.02);
        assert!(result.diagnostics.duality_gap.unwrap() < 1e-6);
        assert!(periods.residuals.s_min_eigenvalue > 0.0);
        assert!(result.diagnostics.timings.contains_key("period"));
    }

    #[test]
    fn genus_zero_routes_to_the_sphere() {
        let mesh = meshgen::icosphere(2).unwrap();
        let result = run_pipeline(&mesh, &Config::default()).unwrap();
        let sphere = result.sphere.as_ref().unwrap();
        assert!(sphere.max_norm_deviation() < 1e-9);
        assert!(result.periods.is_none());
        assert!(result.basis.is_none());
        let diag = result.diagnostics.sphere.as_ref().unwrap();
        assert!((diag.degree - 1.0).abs() < 1e-6);
        assert!(diag.centroid_norm <= 1e-4);
    }

    #[test]
    fn genus_two_pipeline_selects_two_forms() {
        let mesh = meshgen::genus2_plate(2, 0.25).unwrap();
        let result = run_pipeline(&mesh, &Config::default()).unwrap();
        assert_eq!(result.stats.genus, 2);
        assert_eq!(result.selected.len(), 2);
        assert_eq!(result.harmonic.len(), 4);
        let periods = result.periods.as_ref().unwrap();
        assert!(periods.residuals.s_min_eigenvalue > 0.0);
        assert!(periods.residuals.s_asymmetry < 1e-6);
        assert_eq!(periods.tau, None);
    }

    #[test]
    fn reruns_serialize_identically() {
        let mesh = meshgen::flat_torus(6, 1.0).unwrap();
        let a = run_pipeline(&mesh, &Config::default()).unwrap();
        let b = run_pipeline(&mesh, &Config::default()).unwrap();
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
    }

    #[test]
    fn harmonic_cache_round_trips_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        let mesh = meshgen::flat_torus(6, 1.0).unwrap();
        let config = Config {
            workdir: Some(dir.path().to_path_buf()),
            ..Config::default()
        };
        let first = run_pipeline(&mesh, &config).unwrap();
        let cached: Vec<_> = std::fs::read_dir(dir.path())
            .unwrap()
            .map(|e| e.unwrap().file_name())
            .collect();
        assert_eq!(cached.len(), 1);
        assert!(cached[0].to_string_lossy().ends_with(".harmonic.json"));
        let second = run_pipeline(&mesh, &config).unwrap();
        assert_eq!(first.to_json().unwrap(), second.to_json().unwrap());
        for (a, b) in first.harmonic.iter().zip(&second.harmonic) {
            assert_eq!(a.values(), b.values());
        }
    }

    #[test]
    fn config_files_parse_from_toml_and_json() {
        let dir = tempfile::tempdir().unwrap();
        let toml_path = dir.path().join("run.toml");
        std::fs::write(&toml_path, "tol = 1e-5\nsolver = \"descent\"\npreprocess = \"split\"\n")
            .unwrap();
        let config = Config::from_path(&toml_path).unwrap();
        assert_eq!(config.tol, 1e-5);
        assert_eq!(config.solver, HarmonicSolver::Descent);
        assert_eq!(config.preprocess, PreprocessMode::Split);
        assert_eq!(config.threads, None);

        let json_path = dir.path().join("run.json");
        std::fs::write(&json_path, "{\"threads\": 2}").unwrap();
        let config = Config::from_path(&json_path).unwrap();
        assert_eq!(config.threads, Some(2));
        assert_eq!(config.solver, HarmonicSolver::Direct);

        assert!(Config::from_path(dir.path().join("absent.toml")).is_err());
    }

    #[test]
    fn stage_failures_name_the_failing_stage() {
        let mesh = meshgen::ellipsoid(2.0, 1.0, 1.0, 1).unwrap();
        let config = Config {
            preprocess: PreprocessMode::None,
            ..Config::default()
        };
        match run_pipeline(&mesh, &config) {
            Err(Error::Stage { stage, source }) => {
                assert_eq!(stage, "sphere");
                assert!(matches!(*source, Error::Unsupported { .. }));
            }
            other => panic!("expected a staged error, got {other:?}"),
        }
        let err = run_pipeline(&mesh, &config).unwrap_err();
        let json = err.to_json();
        assert_eq!(json["error"]["stage"], "sphere");
        assert_eq!(json["error"]["kind"], "unsupported");
    }
}
