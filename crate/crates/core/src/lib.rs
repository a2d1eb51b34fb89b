//! Pseudo-spectral solver and analysis toolkit for the reduced-order
//! approximate deconvolution model (RADM) on the periodic box, covering
//! Navier-Stokes, NS-Voigt and RADM with van Cittert deconvolution, plus
//! exact pulsatile-flow solutions used as independent oracles.

pub mod checkpoint;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod filter;
pub mod pulsatile;
pub mod rng;
pub mod run;
pub mod solver;
pub mod spectral;
pub mod verify;

pub use error::{RadmError, Result};
