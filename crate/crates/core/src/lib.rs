//! Core library for synthesizing codimension-one dissipative vector fields
//! from conserved/dissipated data, computing characteristic (Floquet)
//! multipliers of their periodic orbits both in closed form and through the
//! monodromy matrix, and classifying orbital stability.

pub mod dual;
pub mod expr;
pub mod exterior;
pub mod field;
pub mod floquet;
pub mod linalg;
pub mod ode;
pub mod orbit;
pub mod scenarios;
pub mod specfun;
pub mod system;

pub use num_complex::Complex64;
