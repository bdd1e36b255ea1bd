//! Numerical laboratory for bivector fields and cotangent paths.
//!
//! Bivector fields with polynomial coefficients, local functionals on sampled
//! path spaces with their variational gradients, the canonical bracket of
//! functionals, and constructions of cotangent paths and loops.

pub mod algebra;
pub mod bivector;
pub mod bracket;
pub mod cotangent;
pub mod error;
pub mod functionals;
pub mod ode;
pub mod pathspace;
pub mod sampling;
pub mod suite;

pub use algebra::Polynomial;
pub use bivector::{presets, BivectorField, Jacobiator, PoissonVerdict};
pub use error::{Error, Result};
pub use functionals::{GradientResult, LocalFunctional, Profile};
pub use pathspace::{BoundaryKind, Grid, PathSample, TangentVector};
pub use suite::VerificationReport;
