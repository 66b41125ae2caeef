//! Pairwise interaction energies of Bravais lattices and the optimisation
//! problems built on them.

// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod descent;
pub mod error;
pub mod family;
pub mod lattice;
pub mod shells;
pub mod potential;
pub mod special;
pub mod split;
pub mod structure;
pub mod sweep;
pub mod threshold;

pub use error::{Error, Result};
pub use lattice::{build_lattice, canonical, in_constraint_class, BondConstraint, Canonical, Lattice};
pub use shells::{minimal_vectors, shells, Shell, ShellDecomposition};
pub use potential::{energy, epstein_zeta, theta, EnergyResult, PotentialSpec, SumMethod};
