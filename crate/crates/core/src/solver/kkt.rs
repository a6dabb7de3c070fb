use crate::model::{FlowMatrix, ReconstructionProblem};
use crate::scalar::{compensated_sum, Scalar};

use super::linalg::{SemiDefiniteCholesky, SymMatrix};
use super::structure::Structure;
use super::SolveError;

/// Points further than this from the feasible set are rejected by [`kkt_residual`].
const FEASIBILITY_GATE: f64 = 1e-6;

/// Largest absolute violation of the row, column and group targets (in units of
/// `p`), of `sum p = 1`, and of the zero cells.
pub fn constraint_residual<T: Scalar>(
    problem: &ReconstructionProblem<T>,
    p: &FlowMatrix<T>,
) -> Result<T, SolveError> {
    let n = problem.n();
    if p.n() != n {
        return Err(SolveError::InvalidPoint(format!(
            "matrix is {}x{}, problem has {n} nodes",
            p.n(),
            p.n()
        )));
    }
    let g = problem.marginals.total;
    let mut worst = (p.total() - T::one()).abs();
    for (i, s) in p.row_sums().into_iter().enumerate() {
        worst = worst.max((s - problem.marginals.out_strength[i] / g).abs());
    }
    for (j, s) in p.col_sums().into_iter().enumerate() {
        worst = worst.max((s - problem.marginals.in_strength[j] / g).abs());
    }
    for group in &problem.group_constraints {
        let s = compensated_sum(group.cells().map(|(i, j)| p.get(i, j)));
        worst = worst.max((s - group.amount / g).abs());
    }
    for &(i, j) in &problem.zero_cells {
        worst = worst.max(p.get(i, j).abs());
    }
    Ok(worst)
}

/// Stationarity residual of `p` for the ridge entropy program.
///
/// Multipliers are fitted by least squares to the objective gradient over the free
/// cells; the result is the largest remaining gradient component. It is zero at the
/// exact optimum and `+inf` if a free cell sits on the boundary `p = 0`.
pub fn kkt_residual<T: Scalar>(
    problem: &ReconstructionProblem<T>,
    p: &FlowMatrix<T>,
) -> Result<T, SolveError> {
    let violation = constraint_residual(problem, p)?;
    if violation > T::lit(FEASIBILITY_GATE) {
        return Err(SolveError::InvalidPoint(format!(
            "constraint violation {violation} exceeds {FEASIBILITY_GATE}"
        )));
    }
    let structure = Structure::build(problem)?;
    let beta = problem.beta;
    let mut gradient = Vec::with_capacity(structure.free.len());
    for &cell in &structure.free {
        let x = p.weights()[cell];
        if x <= T::zero() {
            return Ok(T::infinity());
        }
        gradient.push(-x.ln() - T::one() - (beta + beta) * x);
    }

    let m = structure.m();
    let mut normal = SymMatrix::zeros(m);
    let mut rhs = vec![T::zero(); m];
    for (k, cons) in structure.membership.iter().enumerate() {
        for &a in cons {
            rhs[a] = rhs[a] + gradient[k];
            for &b in cons {
                normal.add(a, b, T::one());
            }
        }
    }
    let lambda = SemiDefiniteCholesky::factor(&normal).solve(&rhs);
    let fitted = structure.transpose_apply(&lambda);
    Ok(gradient
        .iter()
        .zip(&fitted)
        .fold(T::zero(), |worst, (&g, &f)| worst.max((g - f).abs())))
}
