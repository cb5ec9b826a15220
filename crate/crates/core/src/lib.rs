//! Numerical toolkit for weak parabolic Fokker-Planck equations on truncated
//! domains: a conservative finite-volume solver for
//! `d/dt rho = d_i d_j (a^{ij} rho) - d_i (b^i rho)`, mixed space-time norms,
//! entropy / Fisher-information functionals, Gaussian mollification, Moser
//! exponent ladders in exact rational arithmetic, Lyapunov drift diagnostics,
//! and a registry of named inequality checks driven by the `fb` CLI.
//!
//! Every check evaluates both sides of one explicit a-priori inequality on a
//! solved (or synthetic) density field and reports lhs, rhs, margin and a
//! quadrature error bar; closed-form Gaussian solutions in [`oracle`] serve as
//! ground truth in the test suite.

pub mod bounds;
pub mod checks;
pub mod coeff;
pub mod coeff_table;
pub mod error;
pub mod field;
pub mod grid;
pub mod ladder;
pub mod linalg;
pub mod lyapunov;
pub mod mollifier;
pub mod oracle;
pub mod report;
pub mod solver;
pub mod special;
pub mod testfn;

pub use error::{Error, Result};
pub use grid::SpaceTimeGrid;
pub use report::{BoundReport, LedgerRow, Verdict};
