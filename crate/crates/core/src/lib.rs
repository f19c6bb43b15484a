//! Numerical laboratory for solitons: the FPU lattice, split-step spectral
//! solvers, KdV direct and inverse scattering, and the ZS-AKNS hierarchy with
//! loop-group dressing.

pub mod error;
pub mod experiments;
pub mod fourier;
pub mod fpu;
pub mod glm;
pub mod pde;
pub mod scattering;
pub mod zs_akns;

pub use error::{Error, Result};
