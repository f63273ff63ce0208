//! Translational states of an atom in a surface-induced potential and the
//! weak-field optical excitation spectra they produce.

pub mod error;
pub mod model;
pub mod roots;
pub mod potential;
pub mod grid;
pub mod numerov;
pub mod eigensolver;
pub mod system;
pub mod franck_condon;
pub mod rates;
pub mod spectrum;
pub mod dynamics;
pub mod cache;

pub use error::{Error, Result};
