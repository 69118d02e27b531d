//! Conformal structure of closed oriented triangle meshes.
//!
//! This crate computes the conformal invariants of a closed oriented surface
//! given as a triangle mesh:
//!
//! * homology bases as edge cycles, with intersection pairings and canonical
//!   (symplectic) arrangement ([`homology`]),
//! * a dual basis of closed one-forms built by slicing the surface along
//!   handle loops and solving a convex boundary-value embedding ([`cohomology`]),
//! * harmonic representatives of those classes by heat diffusion or a direct
//!   sparse solve ([`harmonic`]),
//! * the Hodge star on piecewise-linear one-forms and a basis of holomorphic
//!   one-forms ([`hodge`]),
//! * period matrices and the conformal-equivalence test ([`period`]),
//! * genus-zero conformal maps onto the unit sphere ([`sphere`]),
//! * global conformal parametrizations with branch-point detection ([`param`]).
//!
//! The [`pipeline`] module chains the stages together with caching, and
//! [`cli`] exposes everything as subcommands behind a thin binary. Test
//! surfaces (flat tori, tori of revolution, spheres, genus-2 plates) are
//! generated by [`meshgen`].
//!
//! # Example
//!
//! ```
//! use conformal_atlas::{meshgen, pipeline};
//!
//! // Flat 8x8 unit-square torus; the full pipeline reports its period data.
//! let mesh = meshgen::flat_torus(8, 1.0).unwrap();
//! let result = pipeline::run_pipeline(&mesh, &pipeline::Config::default()).unwrap();
//! let periods = result.periods.unwrap();
//! let tau = periods.tau.unwrap();
//! assert!((tau.re.abs()) < 0.05 && (tau.im - 1.0).abs() < 0.05);
//! ```

pub mod cli;
pub mod cohomology;
pub mod cut;
pub mod error;
pub mod harmonic;
pub mod hodge;
#[path = "homology/mod.rs"]
pub mod homology;
pub mod mesh;
pub mod meshgen;
pub mod param;
pub mod period;
pub mod pipeline;
pub mod simplicial;
pub mod snf;
pub mod sparse;
pub mod sphere;
#[cfg(test)]
pub(crate) mod testkit;

pub use error::{Error, Result};
pub use mesh::Mesh;
