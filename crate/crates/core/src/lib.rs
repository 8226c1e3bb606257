//! Dynamic mode decomposition for snapshots computed on adaptive meshes.
//!
//! Snapshots produced on time-varying simplicial meshes are transferred to a
//! fixed reference mesh by L²-projection (`M u_proj = P u`), stacked into a
//! snapshot matrix and fitted with exact DMD. The crate also ships the
//! generators used to exercise the pipeline: a 1D SEIRD reaction-diffusion
//! solver with adaptive refinement/coarsening, the 2D indicator-function
//! projection demo and synthetic linear-dynamics series.

pub mod dmd;
pub mod error;
pub mod fem;
pub mod io;
pub mod l2projection;
pub mod linalg;
pub mod mesh;
pub mod qoi;
pub mod seird;
pub mod series;
mod text;

pub use error::{Error, Result};
