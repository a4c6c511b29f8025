//! Optimal flux fields under balance constraints on structured grids.
//!
//! A [`BalanceProblem`] prescribes a density rate inside a gridded region and
//! a normal flux on its boundary. The solvers find the balancing flux of least
//! 2-norm ([`solve_l2`]), least `a`-norm ([`solve_lq`]), least dissipation
//! ([`solve_dissipation_classical`]) or least norm in the Hessian pairing
//! ([`solve_dissipation_dual`]), each with a dual certificate. [`capacity_l2`]
//! bounds the optimum over all data of a given size.
//!
//! The guide in `book/` walks through the model with runnable examples.

pub mod capacity;
pub mod cli;
pub mod error;
pub mod field;
pub mod grid;
pub mod linalg;
pub mod operators;
pub mod problem;
pub mod report;
pub mod solver_dissipation;
pub mod solver_l2;
pub mod solver_lq;

#[cfg(test)]
mod testutil;

pub use capacity::{
    admissible, capacity_l2, extremal_pattern, sensitivity, Admissibility, CapacityOptions,
    CapacityReport, InputPattern,
};
pub use error::{Error, Result};
pub use field::{BoundaryValues, FaceField, ScalarField};
pub use grid::{BoundaryFace, BoundaryFaceSet, FaceIndex, FaceKind, Grid, InteriorFace};
pub use problem::{manufacture, BalanceProblem, LoadVector};
pub use report::SolveReport;
pub use solver_dissipation::{
    classical_dissipation, classical_dual_value, el_residual, solve_dissipation_classical,
    solve_dissipation_dual, w22_dual_objective, ClassicalDissipationSolution, DissipationOptions,
    DualDissipationOptions, DualDissipationSolution, ElReport, StressEntry,
};
pub use solver_l2::{l2_dual_value, l2_orthogonality_certificate, solve_l2, L2Options, L2Solution};
pub use solver_lq::{dual_exponent, lq_dual_objective, solve_lq, LqOptions, LqSolution};

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/introduction.md")]
mod guide_introduction {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/grid.md")]
mod guide_grid {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/balance.md")]
mod guide_balance {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/minimum_norm.md")]
mod guide_minimum_norm {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/dissipation.md")]
mod guide_dissipation {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/capacity.md")]
mod guide_capacity {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/cli.md")]
mod guide_cli {}

#[cfg(doctest)]
#[doc = include_str!("../../../README.md")]
mod readme {}
