//! Pseudo-spectral simulation of the defocusing Klein–Gordon equation
//! `u_tt − Δu + u = −|u|^α u` on `ℝᵈ × 𝕋`, with `ℝᵈ` periodized to `[−L, L)ᵈ`
//! and the torus of circumference `2π`.

pub mod diagnostics;
pub mod error;
pub mod exponents;
pub mod grid;
pub mod initial;
pub mod profiles;
pub mod propagator;
pub mod scattering;
pub mod stepper;

pub use diagnostics::{DiagnosticsSeries, Probes};
pub use error::{Error, Result};
pub use grid::{make_grid, FieldState, SpectralPair, TorusWaveguideGrid};
pub use propagator::Propagator;
pub use stepper::{Model, Schedule, Stepper, StepperConfig};
