//! Command-line frontend.
//!
//! One subcommand per capability, shared flags for tolerances, solver and
//! preprocessing choices, and a working directory for cached artifacts.
//! Human-readable summaries go to stdout; machine-readable documents are
//! written where `--json`/`--out` point.  Failures print a JSON error object
//! to stderr and exit nonzero.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hodge::HolomorphicForm;
use crate::homology::{curve_class, fundamental_domain, homology_basis};
use crate::mesh::io::{load_mesh, save_obj};
use crate::mesh::Mesh;
use crate::param::{
    export_uv, form_avoiding_vertex, integrate_over_domain, FlatParam, UvFormat,
    ZeroReport,
};
use crate::period::{verify_equivalence, PeriodData};
use crate::pipeline::{run_pipeline, Config, MeshStats, PipelineResult};
use crate::simplicial::Chain;

/// Compute conformal structure of closed oriented triangle meshes.
#[derive(Debug, Parser)]
#[command(name = "conformal-atlas", version, disable_help_subcommand = true)]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonOpts,
    #[command(subcommand)]
    pub command: Command,
}

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Args, Default)]
pub struct CommonOpts {
    /// Configuration file (TOML or JSON); flags below override its fields.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Verification tolerance for residual gates.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Harmonic solver: "direct" or "descent".
    #[arg(long, global = true)]
    pub solver: Option<String>,
    /// Negative-weight repair: "swap", "split" or "none".
    #[arg(long, global = true)]
    pub preprocess: Option<String>,
    /// Worker threads for parallel stages.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Cache directory (defaults to $CONFORMAL_ATLAS_WORKDIR).
    #[arg(long, global = true)]
    pub workdir: Option<PathBuf>,
    /// Write the machine-readable result document here.
    #[arg(long, global = true)]
    pub json: Option<PathBuf>,
    /// Write the subcommand's artifact (OBJ/SVG) here.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print element counts, Euler characteristic and genus.
    Info { mesh: PathBuf },
    /// Conformal embedding onto the unit sphere (genus zero).
    SphereMap { mesh: PathBuf },
    /// Canonical homology basis and intersection matrix.
    Basis { mesh: PathBuf },
    /// Harmonic 1-form basis dual to the canonical cycles.
    Harmonic { mesh: PathBuf },
    /// Holomorphic form pairs and the complex-independent subset.
    Holomorphic { mesh: PathBuf },
    /// Period matrices and derived conformal invariants.
    Period { mesh: PathBuf },
    /// Flatten a fundamental domain by integrating a holomorphic form.
    Flatten {
        mesh: PathBuf,
        /// Which of the g independent forms to integrate.
        #[arg(long, default_value_t = 0)]
        form: usize,
        /// Recombine the basis so no zero lands on this vertex's star.
        #[arg(long)]
        avoid_vertex: Option<usize>,
    },
    /// Homology class of a closed vertex loop (JSON array of vertex ids).
    CurveClass {
        mesh: PathBuf,
        #[arg(long = "loop")]
        loop_file: PathBuf,
    },
    /// Check whether an integer basis change identifies two period files.
    VerifyEquivalence {
        periods_a: PathBuf,
        periods_b: PathBuf,
        /// JSON 2g x 2g integer matrix; identity when omitted.
        #[arg(long)]
        matrix: Option<PathBuf>,
    },
}

/// Entry point for the binary: parse, dispatch, render errors as JSON.
pub fn main_entry() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e)
            if matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp
                    | clap::error::ErrorKind::DisplayVersion
            ) =>
        {
            print!("{e}");
            return 0;
        }
        Err(e) => {
            let err = Error::Config(e.to_string());
            eprintln!("{}", err.to_json());
            return 2;
        }
    };
    match run(cli) {
        Ok(stdout) => {
            print!("{stdout}");
            0
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            1
        }
    }
}

/// Parse an argv (including program name) and run it; returns the stdout
/// text.  This is the testable core behind [`main_entry`].
pub fn run_from<I, T>(args: I) -> Result<String>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| Error::Config(e.to_string()))?;
    run(cli)
}

fn effective_config(common: &CommonOpts) -> Result<Config> {
    let mut config = match &common.config {
        Some(path) => Config::from_path(path)?,
        None => Config::default(),
    };
    if let Some(tol) = common.tol {
        config.tol = tol;
    }
    if let Some(solver) = &common.solver {
        config.solver = solver.parse()?;
    }
    if let Some(mode) = &common.preprocess {
        config.preprocess = mode.parse().map_err(Error::Config)?;
    }
    if let Some(threads) = common.threads {
        config.threads = Some(threads);
    }
    if let Some(workdir) = &common.workdir {
        config.workdir = Some(workdir.clone());
    }
    Ok(config)
}

fn write_json(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path.display().to_string(), e))
}

fn maybe_write_json(common: &CommonOpts, text: &str) -> Result<()> {
    match &common.json {
        Some(path) => write_json(path, text),
        None => Ok(()),
    }
}

/// Dispatch a parsed command line; returns what to print on stdout.
pub fn run(cli: Cli) -> Result<String> {
    let common = &cli.common;
    match cli.command {
        Command::Info { mesh } => info(&mesh, common),
        Command::SphereMap { mesh } => sphere_map(&mesh, common),
        Command::Basis { mesh } => basis(&mesh, common),
        Command::Harmonic { mesh } => harmonic(&mesh, common),
        Command::Holomorphic { mesh } => holomorphic(&mesh, common),
        Command::Period { mesh } => period(&mesh, common),
        Command::Flatten {
            mesh,
            form,
            avoid_vertex,
        } => flatten(&mesh, form, avoid_vertex, common),
        Command::CurveClass { mesh, loop_file } => {
            curve_class_cmd(&mesh, &loop_file, common)
        }
        Command::VerifyEquivalence {
            periods_a,
            periods_b,
            matrix,
        } => verify_equivalence_cmd(&periods_a, &periods_b, matrix.as_deref(), common),
    }
}

fn load(path: &Path) -> Result<Mesh> {
    load_mesh(path)
}

fn info(path: &Path, common: &CommonOpts) -> Result<String> {
    let mesh = load(path)?;
    let stats = MeshStats::of(&mesh);
    let mut out = String::new();
    let _ = writeln!(out, "vertices: {}", stats.vertices);
    let _ = writeln!(out, "edges: {}", stats.edges);
    let _ = writeln!(out, "faces: {}", stats.faces);
    let _ = writeln!(out, "euler_characteristic: {}", stats.euler_characteristic);
    let _ = writeln!(out, "genus: {}", stats.genus);
    maybe_write_json(common, &(serde_json::to_string_pretty(&stats)? + "\n"))?;
    Ok(out)
}

fn pipeline_for(path: &Path, common: &CommonOpts) -> Result<PipelineResult> {
    let mesh = load(path)?;
    let config = effective_config(common)?;
    run_pipeline(&mesh, &config)
}

fn sphere_map(path: &Path, common: &CommonOpts) -> Result<String> {
    let result = pipeline_for(path, common)?;
    let Some(map) = &result.sphere else {
        return Err(Error::GenusMismatch {
            expected: 0,
            actual: result.stats.genus,
        });
    };
    if let Some(out) = &common.out {
        let sphere_mesh = Mesh::new(map.positions.clone(), result.mesh.faces().to_vec())?;
        save_obj(&sphere_mesh, out, None)?;
    }
    maybe_write_json(common, &result.to_json()?)?;
    let diag = result.diagnostics.sphere.as_ref().expect("sphere diagnostics");
    let mut out = String::new();
    let _ = writeln!(out, "energy: {}", diag.energy);
    let _ = writeln!(out, "iterations: {}", diag.iterations);
    let _ = writeln!(out, "degree: {}", diag.degree);
    let _ = writeln!(out, "centroid_norm: {}", diag.centroid_norm);
    Ok(out)
}

#[derive(Serialize)]
struct BasisDoc {
    genus: usize,
    cycles: Vec<Vec<usize>>,
    intersection: Vec<Vec<i64>>,
}

fn basis(path: &Path, common: &CommonOpts) -> Result<String> {
    let result = pipeline_for(path, common)?;
    let canonical = result.canonical.as_ref().ok_or(Error::GenusMismatch {
        expected: 1,
        actual: 0,
    })?;
    let doc = BasisDoc {
        genus: canonical.genus,
        cycles: result
            .loops
            .iter()
            .map(|c| c.vertices(&result.mesh))
            .collect(),
        intersection: canonical.intersection.clone(),
    };
    maybe_write_json(common, &(serde_json::to_string_pretty(&doc)? + "\n"))?;
    let mut out = String::new();
    let _ = writeln!(out, "genus: {}", doc.genus);
    for (i, cycle) in doc.cycles.iter().enumerate() {
        let _ = writeln!(out, "cycle {i}: {} vertices", cycle.len());
    }
    Ok(out)
}

#[derive(Serialize)]
struct HarmonicDoc<'a> {
    forms: Vec<&'a [f64]>,
    diagnostics: &'a [crate::pipeline::HarmonicDiag],
}

fn harmonic(path: &Path, common: &CommonOpts) -> Result<String> {
    let result = pipeline_for(path, common)?;
    let doc = HarmonicDoc {
        forms: result.harmonic.iter().map(|f| f.values()).collect(),
        diagnostics: &result.diagnostics.harmonic,
    };
    maybe_write_json(common, &(serde_json::to_string_pretty(&doc)? + "\n"))?;
    let mut out = String::new();
    for (i, diag) in result.diagnostics.harmonic.iter().enumerate() {
        let _ = writeln!(
            out,
            "form {i}: residual {:.3e} after {} iterations",
            diag.relative_residual, diag.iterations
        );
    }
    Ok(out)
}

#[derive(Serialize)]
struct FormDoc<'a> {
    re: &'a [f64],
    im: &'a [f64],
    alpha: &'a [f64],
}

#[derive(Serialize)]
struct HolomorphicDoc<'a> {
    selected: &'a [usize],
    pairs: Vec<FormDoc<'a>>,
}

fn holomorphic(path: &Path, common: &CommonOpts) -> Result<String> {
    let result = pipeline_for(path, common)?;
    let doc = HolomorphicDoc {
        selected: &result.selected,
        pairs: result
            .pairs
            .iter()
            .map(|p| FormDoc {
                re: p.re.values(),
                im: p.im.values(),
                alpha: &p.alpha,
            })
            .collect(),
    };
    maybe_write_json(common, &(serde_json::to_string_pretty(&doc)? + "\n"))?;
    Ok(format!(
        "pairs: {}\nselected: {:?}\n",
        result.pairs.len(),
        result.selected
    ))
}

fn period(path: &Path, common: &CommonOpts) -> Result<String> {
    let result = pipeline_for(path, common)?;
    let periods = result.periods.as_ref().ok_or(Error::GenusMismatch {
        expected: 1,
        actual: result.stats.genus,
    })?;
    maybe_write_json(common, &(serde_json::to_string_pretty(periods)? + "\n"))?;
    let mut out = String::new();
    match periods.tau {
        Some(tau) => {
            let _ = writeln!(out, "tau: {} + {}i", tau.re, tau.im);
        }
        None => {
            let _ = writeln!(out, "genus: {}", periods.genus);
        }
    }
    let _ = writeln!(
        out,
        "r_squared_gap: {:.3e}",
        periods.residuals.r_squared_gap
    );
    let _ = writeln!(out, "duality_gap: {:.3e}", periods.residuals.duality_gap);
    Ok(out)
}

#[derive(Serialize)]
struct FlattenDoc<'a> {
    form: usize,
    seams: usize,
    zeros: Option<&'a ZeroReport>,
}

fn flatten(
    path: &Path,
    form_index: usize,
    avoid_vertex: Option<usize>,
    common: &CommonOpts,
) -> Result<String> {
    let result = pipeline_for(path, common)?;
    let basis = result.basis.as_ref().ok_or(Error::GenusMismatch {
        expected: 1,
        actual: 0,
    })?;
    let charts = crate::mesh::all_charts(&result.mesh);
    let fd = fundamental_domain(&result.mesh, basis)?;

    let zeta: HolomorphicForm = match avoid_vertex {
        Some(v) => {
            form_avoiding_vertex(&result.mesh, &charts, &result.harmonic, &result.pairs, v)?
                .0
        }
        None => {
            let &k = result.selected.get(form_index).ok_or_else(|| {
                Error::Config(format!(
                    "--form {form_index} out of range ({} independent forms)",
                    result.selected.len()
                ))
            })?;
            result.pairs[k].clone()
        }
    };

    let fp: FlatParam = integrate_over_domain(&result.mesh, &charts, &fd, &zeta)?;
    if let Some(out) = &common.out {
        let format = match out.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("obj") => UvFormat::Obj,
            Some(ext) if ext.eq_ignore_ascii_case("svg") => UvFormat::Svg,
            _ => {
                return Err(Error::Config(format!(
                    "--out must end in .obj or .svg, got {}",
                    out.display()
                )))
            }
        };
        export_uv(&result.mesh, &fd, &fp, out, format)?;
    }
    let doc = FlattenDoc {
        form: form_index,
        seams: fp.seams.len(),
        zeros: fp.zeros.as_ref(),
    };
    maybe_write_json(common, &(serde_json::to_string_pretty(&doc)? + "\n"))?;
    let mut out = String::new();
    let _ = writeln!(out, "cut vertices: {}", fp.uv.len());
    let _ = writeln!(out, "seam edges: {}", fp.seams.len());
    if let Some(zeros) = &fp.zeros {
        let _ = writeln!(out, "total zero index: {}", zeros.total_index);
    }
    Ok(out)
}

fn chain_from_loop(mesh: &Mesh, vertices: &[usize]) -> Result<Chain> {
    if vertices.len() < 3 {
        return Err(Error::Config(format!(
            "loop needs at least 3 vertices, got {}",
            vertices.len()
        )));
    }
    let mut chain = Chain::new(1);
    for i in 0..vertices.len() {
        let (u, v) = (vertices[i], vertices[(i + 1) % vertices.len()]);
        let edge = mesh.edge_between(u, v).ok_or_else(|| {
            Error::Config(format!("vertices {u} and {v} are not adjacent"))
        })?;
        let h = mesh.edge_halfedge(edge);
        let sign = if mesh.tail(h) == u { 1 } else { -1 };
        chain.add(edge, sign);
    }
    Ok(chain)
}

#[derive(Serialize)]
struct CurveClassDoc {
    class: Vec<i64>,
}

fn curve_class_cmd(path: &Path, loop_file: &Path, common: &CommonOpts) -> Result<String> {
    let mesh = load(path)?;
    let text = std::fs::read_to_string(loop_file)
        .map_err(|e| Error::io(loop_file.display().to_string(), e))?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    let array = value
        .get("vertices")
        .unwrap_or(&value)
        .as_array()
        .ok_or_else(|| {
            Error::Config("loop file must be a JSON array of vertex ids".into())
        })?;
    let vertices: Vec<usize> = array
        .iter()
        .map(|v| {
            v.as_u64().map(|x| x as usize).ok_or_else(|| {
                Error::Config(format!("non-integer vertex id {v} in loop file"))
            })
        })
        .collect::<Result<_>>()?;

    let chain = chain_from_loop(&mesh, &vertices)?;
    let basis = homology_basis(&mesh)?;
    let class = curve_class(&mesh, &basis.annotations, &chain)?;
    let doc = CurveClassDoc { class };
    maybe_write_json(common, &(serde_json::to_string_pretty(&doc)? + "\n"))?;
    Ok(format!("class: {:?}\n", doc.class))
}

fn verify_equivalence_cmd(
    a: &Path,
    b: &Path,
    matrix: Option<&Path>,
    common: &CommonOpts,
) -> Result<String> {
    let read = |path: &Path| -> Result<PeriodData> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        Ok(serde_json::from_str(&text)?)
    };
    let pa = read(a)?;
    let pb = read(b)?;
    let n = pa.c.len();
    let n_mat: Vec<Vec<i64>> = match matrix {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::io(path.display().to_string(), e))?;
            serde_json::from_str(&text)?
        }
        None => (0..n)
            .map(|i| (0..n).map(|j| i64::from(i == j)).collect())
            .collect(),
    };
    let report = verify_equivalence(&pa, &pb, &n_mat)?;
    maybe_write_json(common, &(serde_json::to_string_pretty(&report)? + "\n"))?;
    Ok(format!(
        "equivalent: {}\nr_residual: {:.3e}\nc_residual: {:.3e}\n",
        report.equivalent, report.r_residual, report.c_residual
    ))
}
