//! Spectral flow and bifurcation certification for two-component strongly
//! indefinite elliptic systems with Dirichlet boundary conditions.
//!
//! The spectral flow of the linearized path is computed three independent
//! ways: a closed-form index for constant coefficients ([`index_engine`]),
//! Morse-index differences of Galerkin truncations ([`galerkin`]) and a sum
//! of crossing-form signatures found by shooting ([`ode_crossings`]).
//! [`comparison`] turns coefficient bounds into bifurcation certificates and
//! [`nonlinear_probe`] checks predictions on the discretized nonlinear system.

pub mod coefficients;
pub mod comparison;
pub mod error;
pub mod expr;
pub mod galerkin;
pub mod index_engine;
pub mod linalg;
pub mod nonlinear_probe;
pub mod ode_crossings;
pub mod spectrum;

pub use coefficients::{CoefficientPath, FormBounds, SymMat2};
pub use comparison::{Certificate, CountBound, Direction, Verdict};
pub use error::{Error, Result};
pub use expr::Expr;
pub use galerkin::{GalerkinConfig, SflowResult, TruncatedOperator};
pub use index_engine::{Block, ConstCrossing, HalfInt};
pub use ode_crossings::{CrossingRecord, EndMatrix, OdeConfig};
pub use spectrum::{DomainSpec, Spectrum};
