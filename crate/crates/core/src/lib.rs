//! Bases of rotation-equivariant and permutation-invariant coupling
//! coefficients (generalized Clebsch–Gordan coefficients) for SO(3), SU(2)
//! and O(3), computed as kernels of sparse Lie-algebra constraint matrices.

pub mod dims;
pub mod error;
pub mod generic;
pub mod halfint;
pub mod index;
pub mod io;
pub mod linalg;
pub mod recursion;
pub mod solver;
pub mod sparse;
pub mod verify;
pub mod wigner;

pub use error::{Error, Result};
pub use halfint::HalfInt;
pub use index::{ClassRep, LChannel, LVector, MTuple};
pub use solver::{CouplingBasis, Group, Kind, Parity};

pub type C64 = num_complex::Complex64;
