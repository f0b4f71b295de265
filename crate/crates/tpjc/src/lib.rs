//! Numerical and analytic toolkit for the driven-dissipative extended
//! nondegenerate two-photon Jaynes-Cummings model: steady-state photon
//! blockade, purity/brightness observables, scaling laws, and reduced-model
//! validation.

pub mod error;
pub mod hilbert;
pub mod krylov;
pub mod lindblad;
pub mod model;
pub mod rme;
pub mod sparse_lu;
pub mod sweep;
pub mod weakdrive;

pub use error::{Error, Result};

// Keep the guide's code snippets compiling: every chapter runs as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/model.md")]
    mod model {}
    #[doc = include_str!("../../../book/src/master-equation.md")]
    mod master_equation {}
    #[doc = include_str!("../../../book/src/weak-driving.md")]
    mod weak_driving {}
    #[doc = include_str!("../../../book/src/reduced-model.md")]
    mod reduced_model {}
    #[doc = include_str!("../../../book/src/sweeps.md")]
    mod sweeps {}
}
