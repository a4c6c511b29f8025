//! Convergence summary shared by the solvers.

/// Outcome of one solve.
///
/// `objective` is the primal value reached and `dual_value` a certified lower
/// bound on the optimum (or, for the quadratic solvers, the value of the
/// dual functional at the returned potential). `gap` is their difference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveReport {
    pub objective: f64,
    pub dual_value: f64,
    pub gap: f64,
    /// Relative balance residual of the returned flux.
    pub constraint_residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl SolveReport {
    /// `gap / objective`, or zero when the objective vanishes.
    pub fn relative_gap(&self) -> f64 {
        if self.objective == 0.0 {
            0.0
        } else {
            self.gap / self.objective
        }
    }

    pub(crate) fn new(
        objective: f64,
        dual_value: f64,
        constraint_residual: f64,
        iterations: usize,
        converged: bool,
    ) -> Self {
        Self {
            objective,
            dual_value,
            gap: objective - dual_value,
            constraint_residual,
            iterations,
            converged,
        }
    }
}
