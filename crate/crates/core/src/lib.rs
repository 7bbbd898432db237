//! Jensen measures, plurisubharmonic envelopes and Dirichlet problems on
//! finite discretizations of compact sets in C and C^2.

pub mod cone;
pub mod error;
pub mod grid;
pub mod gridfn;
pub mod jensen;
pub mod lp;
pub mod stencil;
pub mod boundary;
pub mod envelope;
pub mod dirichlet;
pub mod maximal;
pub mod verdict;
pub mod disc;
pub mod cli;

pub use error::{Error, Result};
