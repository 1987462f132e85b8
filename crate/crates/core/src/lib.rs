//! Quasi-projection operators, framelet expansions and the Gibbs
//! phenomenon for compactly supported scaling functions.

pub mod catalog;
pub mod construct;
pub mod error;
pub mod framelet;
pub mod funcmodel;
pub mod gibbs;
pub mod linalg;
pub mod quasiproj;
pub mod sequences;

pub use error::{GibbsError, Result};
