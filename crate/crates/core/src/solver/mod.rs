//! Ridge-regularized entropy maximization.
//!
//! Maximizes `z(p) = -sum p log p - beta * sum p^2` over the probability matrix `p`
//! subject to row sums `s_out / G`, column sums `s_in / G`, group block sums `Q / G`
//! and `p = 0` on forbidden cells. The objective is strictly concave for every
//! `beta >= 0`, so the maximizer is unique.
//!
//! [`solve_ridge`] works on the dual: for multipliers `lambda` each free cell solves
//! the scalar stationarity equation `log p + 1 + 2 beta p = (A^T lambda)_cell`
//! exactly, and the convex dual is minimized by damped Newton steps.
//! [`oracle_grid_search`] is an independent brute-force reference for tiny instances.

mod dual;
mod kkt;
pub(crate) mod linalg;
mod oracle;
pub(crate) mod structure;

use serde::Serialize;
use thiserror::Error;

use crate::model::{FlowMatrix, Marginals, ModelError, NodeInfo, ReconstructionProblem};
use crate::scalar::{compensated_sum, Scalar};

pub use dual::solve_ridge;
pub use kkt::{constraint_residual, kkt_residual};
pub use oracle::{oracle_grid_search, OracleSolution, MAX_ORACLE_DOF};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("grand total G must be positive")]
    NonPositiveTotal,
    #[error("infeasible constraints ({aggregate}): {detail}")]
    Infeasible { aggregate: String, detail: String },
    #[error("{dof} free dimensions after elimination, oracle supports at most {max}")]
    TooManyFreeDimensions { dof: usize, max: usize },
    #[error("point violates the constraints: {0}")]
    InvalidPoint(String),
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(bound = "T: Scalar")]
pub struct SolverConfig<T> {
    /// Bound on both the KKT residual and the constraint residual.
    pub tolerance: T,
    pub max_iterations: usize,
}

impl<T: Scalar> Default for SolverConfig<T> {
    fn default() -> Self {
        Self {
            tolerance: T::lit(1e-8).max(T::tolerance_floor()),
            max_iterations: 10_000,
        }
    }
}

impl<T: Scalar> SolverConfig<T> {
    pub fn validate(&self) -> Result<(), SolveError> {
        if !(self.tolerance > T::zero()) || !self.tolerance.is_finite() {
            return Err(SolveError::InvalidConfig("tolerance must be positive".into()));
        }
        if self.max_iterations == 0 {
            return Err(SolveError::InvalidConfig("max_iterations must be at least 1".into()));
        }
        Ok(())
    }
}

/// Outcome of a solve. `p` sums to one; `t = G * p`.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionReport<T> {
    pub p: FlowMatrix<T>,
    pub t: FlowMatrix<T>,
    pub objective: T,
    pub kkt_residual: T,
    pub constraint_residual: T,
    pub iterations: usize,
    pub converged: bool,
    pub beta: T,
}

impl<T: Scalar> SolutionReport<T> {
    /// Scalar fields only, for JSON reports.
    pub fn summary(&self) -> SolutionSummary {
        SolutionSummary {
            n: self.p.n(),
            beta: self.beta.to_f64_lossy(),
            objective: self.objective.to_f64_lossy(),
            kkt_residual: self.kkt_residual.to_f64_lossy(),
            constraint_residual: self.constraint_residual.to_f64_lossy(),
            iterations: self.iterations,
            converged: self.converged,
            total: self.t.total().to_f64_lossy(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolutionSummary {
    pub n: usize,
    pub beta: f64,
    pub objective: f64,
    pub kkt_residual: f64,
    pub constraint_residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub total: f64,
}

/// `z(p) = -sum p log p - beta sum p^2` with `0 log 0 = 0`.
pub fn objective<T: Scalar>(p: &[T], beta: T) -> T {
    compensated_sum(p.iter().map(|&x| {
        if x > T::zero() {
            -x * x.ln() - beta * x * x
        } else {
            T::zero()
        }
    }))
}

/// Closed-form entropy-only estimate `t_ij = s_out_i * s_in_j / G`.
pub fn maxent_baseline<T: Scalar>(
    nodes: Vec<NodeInfo>,
    marginals: &Marginals<T>,
) -> Result<FlowMatrix<T>, SolveError> {
    let g = marginals.total;
    if !(g > T::zero()) {
        return Err(SolveError::NonPositiveTotal);
    }
    let n = marginals.len();
    let mut w = Vec::with_capacity(n * n);
    for &so in &marginals.out_strength {
        for &si in &marginals.in_strength {
            w.push(so * si / g);
        }
    }
    Ok(FlowMatrix::new(nodes, w)?)
}

fn report_from_cells<T: Scalar>(
    problem: &ReconstructionProblem<T>,
    p_dense: Vec<T>,
    iterations: usize,
    tolerance: T,
) -> Result<SolutionReport<T>, SolveError> {
    let g = problem.marginals.total;
    let p = FlowMatrix::new(problem.nodes.clone(), p_dense)?;
    let t = p.scaled(g)?;
    let objective = objective(p.weights(), problem.beta);
    let constraint_residual = constraint_residual(problem, &p)?;
    let kkt = kkt_residual(problem, &p).unwrap_or(T::infinity());
    Ok(SolutionReport {
        converged: kkt <= tolerance && constraint_residual <= tolerance,
        p,
        t,
        objective,
        kkt_residual: kkt,
        constraint_residual,
        iterations,
        beta: problem.beta,
    })
}
