//! Discrete lattice models of brittle cleavage: Bravais lattices, pair
//! potentials and cell energies, the continuum elastic and fracture
//! constants derived from them, and finite-ε energy minimization.
//!
//! The crate is `no_std` with `alloc`; file formats, the command line and
//! parallel sweeps live in the `cleavelab` companion crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod cleavage;
pub mod elastic;
pub mod error;
pub mod fracture;
pub mod lattice;
pub mod linalg;
pub mod potentials;
pub mod simulate;

pub use cleavage::{BoundaryVariant, Branch, CleavageLaw, Configuration, CrackPlane};
pub use elastic::ElasticConstants;
pub use error::{Error, Result};
pub use fracture::FractureConstants;
pub use lattice::{
    BravaisBasis, DirectionSets, DomainBox, LatticeInstance, NormalSet, Preset, Shift,
};
pub use linalg::Mat;
pub use potentials::{CellEnergyModel, PairPotential, PotentialForm, Shell, ShellClass};
pub use simulate::{MinimizeOptions, MinimizeReport, SweepTable};
