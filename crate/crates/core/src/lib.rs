//! Raviart–Thomas enriched Scott–Vogelius finite elements for the stationary
//! Stokes equations on 2D simplicial meshes.
//!
//! The crate is organised bottom-up:
//!
//! * [`mesh`] – triangulations, facet topology and uniform refinement,
//! * [`quadrature`] – positive Gauss-type rules on the reference triangle and edge,
//! * [`elements`] – Lagrange, pressure, RT0 and interior RT bubble bases,
//! * [`sparse`] – CSR matrices and the sparse direct solver wrapper,
//! * [`assembly`] – global block assembly of the saddle-point system,
//! * [`schemes`] – the full scheme, the condensed `P_k x P_0` scheme and RT0 condensation,
//! * [`harness`] – manufactured solutions, error norms, convergence studies and diagnostics.
//!
//! Per-cell work is data parallel. With the default `parallel` feature it runs on
//! the rayon thread pool; without it every loop runs sequentially with identical
//! results.

pub mod assembly;
pub mod elements;
pub mod error;
pub mod harness;
pub mod mesh;
mod par;
pub mod quadrature;
pub mod schemes;
pub mod sparse;

pub use error::{Error, Result};
pub use mesh::Mesh;
pub use schemes::{Scheme, Solution, SolverConfig};
