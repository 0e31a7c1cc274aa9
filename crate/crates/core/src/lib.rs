//! Fischer-Tropsch catalyst pellet modelling: CO-insertion microkinetics,
//! the vacant-site balance, an asymptotics-preserving surrogate transform,
//! and a robust finite-difference solver for the pellet reaction-diffusion
//! problem.

pub mod error;
pub mod kinetics;
pub mod numerics;
pub mod params;
pub mod pellet;
pub mod site;
pub mod surrogate;
pub mod toy;
pub mod analysis;
pub mod validate;

pub use error::{Error, Result};
pub use params::{Conditions, KineticParameters, PressureUnit};
