//! Reconstruction quality against observed data: normalized RMSE, log-log fit,
//! beta sweeps and marginal reproduction.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::model::{FlowMatrix, Marginals, ModelError, ReconstructionProblem};
use crate::scalar::Scalar;
use crate::solver::{solve_ridge, SolutionReport, SolveError, SolverConfig};

pub const DEFAULT_BETA_GRID: [f64; 8] = [0.0, 1.0, 5.0, 10.0, 25.0, 50.0, 100.0, 200.0];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("matrices have sizes {0} and {1}")]
    ShapeMismatch(usize, usize),
    #[error("no cells with positive data")]
    NoPositiveData,
    #[error("need at least two cells positive in both matrices, found {0}")]
    TooFewPairs(usize),
    #[error("data values have no variance on the log scale")]
    ZeroVariance,
    #[error("empty beta grid")]
    EmptyGrid,
    #[error("empty problem")]
    Empty,
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn same_shape<T: Scalar>(a: &FlowMatrix<T>, b: &FlowMatrix<T>) -> Result<(), EvalError> {
    if a.n() != b.n() {
        return Err(EvalError::ShapeMismatch(a.n(), b.n()));
    }
    Ok(())
}

/// `sqrt(mean(((rec - data) / data)^2))` over cells with positive data.
pub fn rmse<T: Scalar>(reconstructed: &FlowMatrix<T>, data: &FlowMatrix<T>) -> Result<f64, EvalError> {
    same_shape(reconstructed, data)?;
    let (mut sum, mut count) = (0.0, 0usize);
    for (&r, &d) in reconstructed.weights().iter().zip(data.weights()) {
        let d = d.to_f64_lossy();
        if d > 0.0 {
            sum += ((r.to_f64_lossy() - d) / d).powi(2);
            count += 1;
        }
    }
    if count == 0 {
        return Err(EvalError::NoPositiveData);
    }
    Ok((sum / count as f64).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogLogFit {
    pub slope_a: f64,
    pub intercept_b: f64,
    pub n_pairs: usize,
}

/// Ordinary least squares `log10(rec) = a * log10(data) + b` over cells positive
/// in both matrices.
pub fn loglog_fit<T: Scalar>(reconstructed: &FlowMatrix<T>, data: &FlowMatrix<T>) -> Result<LogLogFit, EvalError> {
    same_shape(reconstructed, data)?;
    let pairs: Vec<(f64, f64)> = reconstructed
        .weights()
        .iter()
        .zip(data.weights())
        .map(|(&r, &d)| (d.to_f64_lossy(), r.to_f64_lossy()))
        .filter(|&(d, r)| d > 0.0 && r > 0.0)
        .map(|(d, r)| (d.log10(), r.log10()))
        .collect();
    let k = pairs.len();
    if k < 2 {
        return Err(EvalError::TooFewPairs(k));
    }
    let mx = pairs.iter().map(|p| p.0).sum::<f64>() / k as f64;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / k as f64;
    let sxx: f64 = pairs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pairs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx <= f64::EPSILON * k as f64 * (1.0 + mx * mx) {
        return Err(EvalError::ZeroVariance);
    }
    let a = sxy / sxx;
    Ok(LogLogFit {
        slope_a: a,
        intercept_b: my - a * mx,
        n_pairs: k,
    })
}

/// One point of a beta sweep. Metrics are NaN when the solve failed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitReport {
    pub beta: f64,
    pub objective: f64,
    pub rmse: f64,
    pub slope_a: f64,
    pub intercept_b: f64,
    pub n_pairs: usize,
    pub density_data: f64,
    pub density_reconstructed: f64,
    pub converged: bool,
    pub kkt_residual: f64,
    pub error: Option<String>,
}

impl FitReport {
    pub fn from_solution<T: Scalar>(solution: &SolutionReport<T>, data: &FlowMatrix<T>) -> Result<Self, EvalError> {
        let fit = loglog_fit(&solution.t, data)?;
        Ok(Self {
            beta: solution.beta.to_f64_lossy(),
            objective: solution.objective.to_f64_lossy(),
            rmse: rmse(&solution.t, data)?,
            slope_a: fit.slope_a,
            intercept_b: fit.intercept_b,
            n_pairs: fit.n_pairs,
            density_data: data.support_density(),
            density_reconstructed: solution.t.support_density(),
            converged: solution.converged,
            kkt_residual: solution.kkt_residual.to_f64_lossy(),
            error: None,
        })
    }

    fn failed(beta: f64, data_density: f64, err: impl std::fmt::Display) -> Self {
        Self {
            beta,
            objective: f64::NAN,
            rmse: f64::NAN,
            slope_a: f64::NAN,
            intercept_b: f64::NAN,
            n_pairs: 0,
            density_data: data_density,
            density_reconstructed: f64::NAN,
            converged: false,
            kkt_residual: f64::NAN,
            error: Some(err.to_string()),
        }
    }
}

/// Solves `template` at every beta of `grid` in parallel and scores each solution
/// against `data`. Results are sorted by beta; a failed solve yields a row with
/// `converged = false` and the error message.
pub fn beta_sweep<T: Scalar>(
    template: &ReconstructionProblem<T>,
    grid: &[T],
    data: &FlowMatrix<T>,
    config: &SolverConfig<T>,
) -> Result<Vec<FitReport>, EvalError> {
    if grid.is_empty() {
        return Err(EvalError::EmptyGrid);
    }
    same_shape(&FlowMatrix::zeros(template.nodes.clone())?, data)?;
    let problems = grid
        .iter()
        .map(|&b| template.with_beta(b))
        .collect::<Result<Vec<_>, _>>()?;
    let density = data.support_density();
    let mut reports: Vec<FitReport> = problems
        .par_iter()
        .map(|p| {
            let beta = p.beta.to_f64_lossy();
            match solve_ridge(p, config) {
                Ok(sol) => FitReport::from_solution(&sol, data)
                    .unwrap_or_else(|e| FitReport::failed(beta, density, e)),
                Err(e) => FitReport::failed(beta, density, e),
            }
        })
        .collect();
    reports.sort_by(|a, b| a.beta.total_cmp(&b.beta));
    Ok(reports)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarginalRow {
    pub id: String,
    pub out_data: f64,
    pub out_reconstructed: f64,
    pub in_data: f64,
    pub in_reconstructed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarginalReport {
    pub rows: Vec<MarginalRow>,
    /// Largest `|rec - data| / data` over nodes with a positive data aggregate.
    pub max_relative_deviation: f64,
    /// Largest `|rec - data| / G` over all nodes.
    pub max_scaled_deviation: f64,
    /// Sum of reconstructed minus data aggregates, out side then in side.
    pub total_shift: (f64, f64),
}

/// Per-node data vs. reconstructed row and column sums.
pub fn marginal_report<T: Scalar>(
    reconstructed: &FlowMatrix<T>,
    marginals: &Marginals<T>,
) -> Result<MarginalReport, EvalError> {
    let n = reconstructed.n();
    if n == 0 || marginals.is_empty() {
        return Err(EvalError::Empty);
    }
    if marginals.len() != n {
        return Err(EvalError::ShapeMismatch(n, marginals.len()));
    }
    let g = marginals.total.to_f64_lossy();
    let rows_rec = reconstructed.row_sums();
    let cols_rec = reconstructed.col_sums();
    let (mut rel, mut scaled) = (0.0_f64, 0.0_f64);
    let (mut shift_out, mut shift_in) = (0.0, 0.0);
    let rows = (0..n)
        .map(|k| {
            let row = MarginalRow {
                id: reconstructed.nodes()[k].id.clone(),
                out_data: marginals.out_strength[k].to_f64_lossy(),
                out_reconstructed: rows_rec[k].to_f64_lossy(),
                in_data: marginals.in_strength[k].to_f64_lossy(),
                in_reconstructed: cols_rec[k].to_f64_lossy(),
            };
            for (d, r) in [(row.out_data, row.out_reconstructed), (row.in_data, row.in_reconstructed)] {
                let dev = (r - d).abs();
                if d > 0.0 {
                    rel = rel.max(dev / d);
                }
                if g > 0.0 {
                    scaled = scaled.max(dev / g);
                }
            }
            shift_out += row.out_reconstructed - row.out_data;
            shift_in += row.in_reconstructed - row.in_data;
            row
        })
        .collect();
    Ok(MarginalReport {
        rows,
        max_relative_deviation: rel,
        max_scaled_deviation: scaled,
        total_shift: (shift_out, shift_in),
    })
}
