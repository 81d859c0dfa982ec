//! Executable laboratory for level sets of harmonic functions on annular
//! ends and for minimal-surface ends built from Weierstrass data.

pub mod annulus;
pub mod conformal;
pub mod error;
pub mod field;
pub mod lab;
pub mod levelset;
pub mod meromorphic;
pub mod weierstrass;

pub use annulus::{AnnulusDomain, CircleSamples, LaurentSeries, PolarGrid};
pub use error::{LabError, Result};
pub use field::{HarmonicField, OneForm, SampledField};
pub use levelset::LevelSetComplex;
pub use num_complex::Complex64;
