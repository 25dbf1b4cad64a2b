//! Analysis of holomorphic flows `ẋ = F(x)` on the complex plane.

pub mod equilibria;
pub mod expr;
pub mod geometry;
pub mod integrator;
pub mod quadrature;
pub mod report;
pub mod separatrix;
pub mod transit;

pub use num_complex::Complex64;
