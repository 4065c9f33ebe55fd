//! Harmonic measure, hitting times and spectral quantities for reversible
//! finite Markov chains, with a DLA simulator on finite graphs.
//!
//! Everything is computed on dense kernels. Chains are built from weighted
//! edges or from an explicit kernel with its stationary law, and are made
//! lazy automatically when the spectrum touches `-1`.

pub mod chain;
pub mod dla;
pub mod error;
pub mod families;
pub mod graph;
pub mod harmonic;
pub mod harness;
pub mod hitting;
pub mod io;
pub mod linalg;
pub mod rng;
pub mod set;
pub mod spectral;
pub mod stats;

pub use chain::{BuildOptions, Chain, WalkPath};
pub use error::{Error, Result};
pub use families::{generate, FamilyKind, FamilySpec};
pub use harmonic::{harmonic_from, harmonic_stationary, HarmonicMeasure, Start};
pub use hitting::{uniform_transience, EscapeTable, UMode};
pub use set::{MeasureOnSet, VertexSet};
pub use spectral::{spectrum, CheegerMode, SpectralSummary};
