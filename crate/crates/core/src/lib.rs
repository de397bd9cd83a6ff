//! Vertical-innermost degree-of-freedom numbering and column iteration for
//! extruded (layered prismatic) meshes.
//!
//! The horizontal mesh is an unstructured triangulation; the vertical
//! direction is structured. Degrees of freedom are numbered column by
//! column so that a kernel moving one layer up a column reaches its data
//! by adding a constant offset per stencil slot. Only the bottom-layer
//! maps are stored.
//!
//! Modules, bottom up:
//!
//! * [`mesh`]: base meshes, adjacency, loaders and a unit-square generator.
//! * [`ordering`]: reverse Cuthill-McKee and random renumbering.
//! * [`extrusion`]: extruded entity types, counts and coordinates.
//! * [`fspace`]: DoF layouts, numbering, bottom-layer maps and offsets.
//! * [`iterate`]: column iteration with sequential or colored schedules.
//! * [`kernels`]: prism quadrature, the `∫ f v dx` residual kernel and FLOP
//!   profiles.
//! * [`perfbench`]: timing, STREAM triad and the performance model.
//! * [`verify`]: brute-force oracles used by the `verify` subcommand.

pub mod error;
pub mod extrusion;
pub mod fspace;
pub mod iterate;
pub mod kernels;
pub mod mesh;
pub mod ordering;
pub mod perfbench;
pub mod verify;

pub use error::{Error, Result};
