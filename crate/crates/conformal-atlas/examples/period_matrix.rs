//! Period matrices and conformal invariants.
//!
//! Runs the full pipeline on three surfaces with known or checkable
//! invariants: the unit square torus (modulus τ = i), a 2:1 rectangular
//! torus (τ = 2i), and a torus of revolution whose modulus has the closed
//! form √((R/r)² − 1)·i.  A genus-2 surface demonstrates the general
//! period data: C, S ≻ 0 and R with R² ≈ −I.

use conformal_atlas::meshgen;
use conformal_atlas::pipeline::{run_pipeline, Config};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = Config::default();

    for (label, mesh, expect) in [
        ("unit square torus", meshgen::flat_torus(16, 1.0)?, 1.0),
        ("2:1 rectangle torus", meshgen::flat_torus(16, 2.0)?, 2.0),
        (
            "torus of revolution R=2 r=0.8",
            meshgen::torus_of_revolution(2.0, 0.8, 24, 20)?,
            ((2.0f64 / 0.8).powi(2) - 1.0).sqrt(),
        ),
    ] {
        let result = run_pipeline(&mesh, &config)?;
        let periods = result.periods.as_ref().expect("genus 1");
        let tau = periods.tau.expect("genus-1 modulus");
        println!("{label}: tau = {:+.6} {:+.6}i (expect ~{expect:.6}i)", tau.re, tau.im);
    }

    let mesh = meshgen::genus2_plate(3, 0.25)?;
    let result = run_pipeline(&mesh, &config)?;
    let periods = result.periods.as_ref().expect("genus 2");
    println!("genus-2 plate:");
    println!("  intersection matrix C:");
    for row in &periods.c {
        println!("    {row:?}");
    }
    println!("  S symmetry gap: {:.3e}", periods.residuals.s_asymmetry);
    println!(
        "  S min eigenvalue: {:.6}",
        periods.residuals.s_min_eigenvalue
    );
    println!("  |R^2 + I|_F: {:.3e}", periods.residuals.r_squared_gap);
    println!("  duality gap: {:.3e}", periods.residuals.duality_gap);
    Ok(())
}
