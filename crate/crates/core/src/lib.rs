//! Numerical toolkit for the Fokker-Planck evolutions that stochastic
//! mechanics attaches to quantum states.
//!
//! The library covers four layers:
//!
//! - closed forms for the harmonic oscillator: eigenfunctions, energies,
//!   singular velocity fields, Ornstein-Uhlenbeck and first-excited-state
//!   transition kernels ([`ho`], [`oracles`]);
//! - solvers: a Sturm-Liouville spectral decomposition of the FP operator on
//!   node-partitioned domains ([`spectral`]) and a conservative
//!   exponentially-fitted finite-difference integrator ([`fpsolver`]);
//! - the inverse problem: synthesis of the phase `S(x,t)` and of the
//!   time-dependent controlling potential `V(x,t)` that turn a prescribed
//!   `(f, v)` evolution into a genuine quantum evolution, certified by the
//!   Hamilton-Jacobi-Madelung residual ([`control`], [`hjm`]);
//! - a particle-level Monte-Carlo check of the underlying Ito diffusion
//!   ([`sde`]).
//!
//! All solver internals work in adimensional variables (`x/sigma0`,
//! `omega*t`); physical units enter and leave at the API boundary through
//! [`params::PhysicalParams`], which also covers the beam-dynamics mode where
//! the transverse emittance plays the role of the Planck constant.

pub mod config;
pub mod control;
pub mod error;
pub mod fpsolver;
pub mod grid;
pub mod hjm;
pub mod ho;
pub mod oracles;
pub mod params;
pub mod sde;
pub mod spectral;
pub mod velocity;

pub use error::{Error, Result};
pub use grid::{GridFunction, Partition};
pub use params::{Mode, PhysicalParams};
pub use velocity::VelocityField;
