//! Reconstruction of weighted directed networks from node aggregates by
//! ridge-regularized entropy maximization, with tools to analyze the result as a
//! binary network and to score it against observed data.
//!
//! The numeric core is generic over [`scalar::Scalar`] (`f32` or `f64`); the
//! aliases below fix the precision for the common cases.
//!
//! ```
//! use entrenet_core::{Marginals64, Problem64, SolverConfig64, NodeInfo};
//! use entrenet_core::solver::solve_ridge;
//!
//! let nodes = (0..3).map(|i| NodeInfo::generic(format!("n{i}"))).collect();
//! let m = Marginals64::new(vec![2.0, 1.0, 1.0], vec![1.0, 1.0, 2.0]).unwrap();
//! let problem = Problem64::new(nodes, m, vec![], Default::default(), 10.0, true).unwrap();
//! let sol = solve_ridge(&problem, &SolverConfig64::default()).unwrap();
//! assert!(sol.converged);
//! assert_eq!(sol.t.get(0, 0), 0.0);
//! ```

pub mod evaluation;
pub mod io;
pub mod model;
pub mod netanalysis;
pub mod scalar;
pub mod solver;

use thiserror::Error;

pub use model::{Category, NodeInfo};

pub type FlowMatrix64 = model::FlowMatrix<f64>;
pub type FlowMatrix32 = model::FlowMatrix<f32>;
pub type Marginals64 = model::Marginals<f64>;
pub type Marginals32 = model::Marginals<f32>;
pub type Problem64 = model::ReconstructionProblem<f64>;
pub type Problem32 = model::ReconstructionProblem<f32>;
pub type SolverConfig64 = solver::SolverConfig<f64>;
pub type SolverConfig32 = solver::SolverConfig<f32>;
pub type Solution64 = solver::SolutionReport<f64>;
pub type Solution32 = solver::SolutionReport<f32>;
pub type TradeDataset64 = io::TradeDataset<f64>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Model(#[from] model::ModelError),
    #[error(transparent)]
    Solve(#[from] solver::SolveError),
    #[error(transparent)]
    Net(#[from] netanalysis::NetError),
    #[error(transparent)]
    Io(#[from] io::IoError),
    #[error(transparent)]
    Eval(#[from] evaluation::EvalError),
}
