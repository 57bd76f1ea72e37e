//! Numerical laboratory for singular hermitian metrics on trivial
//! holomorphic vector bundles over polydiscs: weighted-integrability
//! invariants (singularity exponents, capacities, tail curves, the
//! effectiveness threshold θ), plurisubharmonic-function diagnostics, and
//! convergence experiments, all backed by deterministic adaptive quadrature
//! with closed-form model oracles in the test suite.

pub mod domain;
pub mod expr;
pub mod metric;
pub mod openness;
pub mod psh;
pub mod quad;
pub mod special;
pub mod stability;

pub use domain::{ExtReal, Polydisc};
pub use expr::{eval_expr, parse_expr, EvalPoint, Expr, Value};
pub use metric::{Polynomial, Section, SingularMetric};
pub use quad::{IntegralEstimate, Integrability, IntegrabilityVerdict, QuadConfig, QuadStatus};
