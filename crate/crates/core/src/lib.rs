//! Point-vortex and vortex-blob dynamics for the 2D incompressible Euler
//! equations, with the diagnostics used to study how concentrated vorticity
//! stays concentrated.
//!
//! - [`kernel`]: Biot-Savart kernel, direct and treecode summation, and the
//!   velocity and Lipschitz bounds.
//! - [`pointvortex`]: the Helmholtz point-vortex ODE and its invariants.
//! - [`profiles`]: radial vorticity profiles, core/tail decomposition and
//!   grid sampling into labeled particles.
//! - [`simulator`]: vortex-blob time stepping of labeled particle clouds.
//! - [`diagnostics`]: centers, moments, cutoff masses, support radii and the
//!   theoretical bounds they are compared with.

pub mod diagnostics;
pub mod error;
pub mod fit;
pub mod kernel;
pub mod particles;
pub mod pointvortex;
pub mod profiles;
pub mod quadrature;
pub mod simulator;
pub mod vector;

pub use error::{Error, Result};
pub use particles::{Label, LabelFilter, ParticleCloud, VortexParticle};
pub use vector::PlaneVector;
