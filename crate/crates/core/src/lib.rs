//! Undercompressive shock surfaces for three-phase flow with Corey quadratic
//! relative permeabilities.
//!
//! The crate is organised bottom-up:
//!
//! * [`corey`]: fractional flows, eigenstructure, umbilic point.
//! * [`capillarity`]: the capillarity diffusion matrix and the
//!   traveling-wave vector field whose saddle connections define admissible
//!   shocks.
//! * [`reduced`] and [`uc_identity`]: the scalar problem on the invariant
//!   lines and the closed-form undercompressive surface for identity diffusion.
//! * [`hugoniot`]: Hugoniot locus tracing, shock classification, extensions.
//! * [`tw`]: invariant-manifold integration and the connection-finding drivers
//!   that build the surface for the capillarity matrix.
//! * [`simulator`]: a Crank–Nicolson solver for the parabolic system used to
//!   cross-check Riemann solutions.
//!
//! Data-parallel loops go through [`exec::Execution`]; with the default
//! `parallel` feature they run on rayon.

pub mod capillarity;
pub mod corey;
pub mod error;
pub mod exec;
pub mod hugoniot;
pub mod linalg;
pub mod ode;
pub mod reduced;
pub mod shock;
pub mod simulator;
pub mod tw;
pub mod uc_identity;

pub use capillarity::{TwField, ViscosityMode};
pub use corey::{FluidParams, State};
pub use error::{Error, Result};
pub use exec::Execution;
pub use reduced::{InvariantLine, Vertex};
pub use shock::{LaxTag, ShockTriple};
