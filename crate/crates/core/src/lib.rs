//! Numerical laboratory for propagating terraces of one-dimensional,
//! spatially periodic reaction-diffusion equations
//!
//! ```text
//! u_t = (a(x) u_x)_x + f(x, u),      a, f  L-periodic in x,  f(x, 0) = 0
//! ```
//!
//! The crate is `no_std` (it only needs `alloc`). Everything here is a pure
//! function of its inputs; file formats, the command line and thread pools
//! live in the companion `terrace-lab` crate.
//!
//! Module map:
//!
//! * [`model`]: coefficients, nonlinearities, grids and profiles.
//! * [`stationary`]: periodic steady states, principal eigenvalues, the
//!   equilibria ladder and the stability assumptions.
//! * [`evolve`]: a comparison-preserving IMEX stepper and recorded runs.
//! * [`steepness`]: sign-change counting and the steepness relation.
//! * [`terrace`]: crossing times, speeds, platforms and the terrace pipeline.
//! * [`waves`]: pulsating wave extraction and the speed/steepness relation.
#![cfg_attr(not(test), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod evolve;
pub mod linalg;
pub mod model;
pub mod stationary;
pub mod steepness;
pub mod terrace;
pub mod waves;

mod stats;

pub use evolve::{BoundaryMode, EvolveError, Run, Stepper, StepperConfig};
pub use model::{
    build_nonlinearity, make_heaviside, Grid, IntervalShape, IntervalSpec, ModelError,
    Nonlinearity, NonlinearitySpec, PeriodicCoefficient, Preset, Profile, TrigSeries,
};
pub use stationary::{
    check_assumptions, enumerate_equilibria, principal_eigenvalue, solve_stationary,
    EquilibriaLadder, Stability, StationaryConfig, StationaryError, StationarySolution,
};
pub use steepness::{is_steeper, sign_change_count, zero_number_monitor, IntersectionReport};
pub use terrace::{extract_terrace, Terrace, TerraceConfig, TerraceError};
pub use waves::{extract_wave, PulsatingWave};
