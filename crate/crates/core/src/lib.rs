//! Kusuoka measures on the one-sided full shift, built from a finite family
//! of matrices, with exact and floating-point evaluation.

pub mod builtin;
pub mod error;
pub mod field;
pub mod gasket;
pub mod io;
pub mod linalg;
pub mod matsys;
pub mod measure;
pub mod poly;
pub mod procspace;
pub mod spectral;
pub mod surd;
pub mod symbolic;

pub use error::{Error, Result};
pub use field::{Backend, Field, Scalar};
pub use linalg::Matrix;
pub use matsys::{MatrixSystem, Part, SchattenP, ValidationReport};
pub use measure::{KusuokaMeasure, MixingRow, Sampler};
pub use procspace::{FiniteProcess, MartingaleRep};
pub use spectral::{IrreducibilityConstant, Renormalized, SpectralReport, Theta1, Theta2};
pub use surd::Surd;
pub use symbolic::{Alphabet, Budget, CylinderFunction, Word};
