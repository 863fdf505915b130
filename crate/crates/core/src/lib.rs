//! Discrete Laplacians iterated modulo eventually periodic modulus schedules on
//! the unbounded square lattice, with the observables used to study them:
//! densities and entropies, replication events, outline geometry, and the
//! rug / quasi-carpet / carpet taxonomy.

pub mod dynamics;
pub mod experiments;
pub mod geometry;
pub mod lattice;
pub mod masks;
pub mod metrics;
pub mod periodicity;
pub mod render;
pub mod seeds;
pub mod taxonomy;

pub use dynamics::{run, step, Observer, Schedule, Simulation, Trajectory, UpdateRule};
pub use lattice::{BoundingBox, LatticeState, Point};
pub use masks::{Mask, SymmetryClass, SymmetrySignature};
pub use seeds::{Seed, SizeClass};
