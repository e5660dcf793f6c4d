pub mod cli;
pub mod error;
pub mod lattice;
pub mod moebius;
pub mod schottky;
pub mod thermo;
pub mod trace_formula;
pub mod words;
pub mod zeta;

pub use error::{Error, Result};
