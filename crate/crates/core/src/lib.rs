//! Nonlinear discrete-time quantum walk on one- and two-dimensional lattices.
//!
//! The coin angle at each site depends on the local walker state,
//! `theta = theta0 + alpha Im(u conj(d))`. Besides the stepping kernels the crate carries the
//! continuum-limit closed forms (stationary soliton, phase drift, linear stability of the
//! homogeneous states) used to check the lattice dynamics.

pub mod continuum;
pub mod dynamics;
pub mod dynamics2d;
pub mod error;
pub mod field2d;
pub mod fit;
pub mod initial;
pub mod io;
pub mod lattice;
pub mod stability;

pub use continuum::ContinuumParams;
pub use dynamics::{evolve, step, Boundary, EvolveOptions, Evolution, WalkParams, Walker};
pub use dynamics2d::{evolve2d, step2d, Walker2D};
pub use error::{Error, Result};
pub use field2d::SpinorField2D;
pub use fit::{fit_sech2, SolitonFit};
pub use initial::GridSpec;
pub use lattice::{ObservableRecord, ObservableSeries, Spinor, SpinorField1D, C64};
