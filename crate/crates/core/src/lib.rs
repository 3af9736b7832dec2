//! Windowed modular exponentiation: table precomputation, gate-level circuit
//! synthesis, exact sparse simulation, Toffoli cost formulas and a physical
//! resource estimator.

pub mod builders;
pub mod circuit_ir;
pub mod cost_model;
pub mod estimator;
pub mod numerics;
