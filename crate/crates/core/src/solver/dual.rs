use crate::model::ReconstructionProblem;
use crate::scalar::{compensated_sum, Scalar};

use super::linalg::{SemiDefiniteCholesky, SymMatrix};
use super::structure::{ConstraintKind, Structure};
use super::{report_from_cells, SolutionReport, SolveError, SolverConfig};

/// Solves `log p + 2 beta p = a` for `p > 0`.
///
/// Works in `u = log p`, where `h(u) = u + 2 beta e^u - a` is increasing and convex;
/// Newton iterates are kept inside a sign-change bracket.
pub(crate) fn cell_response<T: Scalar>(a: T, beta: T) -> T {
    if beta == T::zero() {
        return a.exp();
    }
    let two_beta = beta + beta;
    let h = |u: T| u + two_beta * u.exp() - a;
    // h(a) >= 0 always; walk left until the sign changes
    let mut hi = a;
    let mut step = T::one();
    let mut lo = a - step;
    while h(lo) > T::zero() {
        hi = lo;
        step = step + step;
        lo = a - step;
    }
    // good start: root of the dominant term
    let mut u = if a > T::one() {
        (a / two_beta).ln().min(a)
    } else {
        a - two_beta * a.exp().min(T::one())
    };
    if !(u > lo && u < hi) {
        u = (lo + hi) / T::lit(2.0);
    }
    for _ in 0..200 {
        let e = two_beta * u.exp();
        let f = u + e - a;
        if f > T::zero() {
            hi = u;
        } else {
            lo = u;
        }
        let mut next = u - f / (T::one() + e);
        if !(next > lo && next < hi) {
            next = (lo + hi) / T::lit(2.0);
        }
        if (next - u).abs() <= T::epsilon() * T::lit(4.0) * (T::one() + u.abs()) || hi - lo <= T::epsilon() * (T::one() + u.abs()) {
            u = next;
            break;
        }
        u = next;
    }
    u.exp()
}

struct DualState<T> {
    lambda: Vec<T>,
    p: Vec<T>,
    value: T,
    gradient: Vec<T>,
    residual: T,
}

fn evaluate<T: Scalar>(structure: &Structure<T>, beta: T, lambda: Vec<T>) -> DualState<T> {
    let theta = structure.transpose_apply(&lambda);
    let p: Vec<T> = theta
        .iter()
        .map(|&t| cell_response(t - T::one(), beta))
        .collect();
    // max_p [f(p) + theta p] = p + beta p^2 at the stationary p
    let primal = compensated_sum(p.iter().map(|&x| x + beta * x * x));
    let linear = compensated_sum(lambda.iter().zip(&structure.targets).map(|(&l, &b)| l * b));
    let ap = structure.apply(&p);
    let gradient: Vec<T> = ap.iter().zip(&structure.targets).map(|(&a, &b)| a - b).collect();
    let residual = gradient.iter().fold(T::zero(), |m, g| m.max(g.abs()));
    DualState {
        lambda,
        p,
        value: primal - linear,
        gradient,
        residual,
    }
}

fn initial_multipliers<T: Scalar>(structure: &Structure<T>) -> Vec<T> {
    // product-form start: theta_ij = log(r_i c_j) + 1
    structure
        .kinds
        .iter()
        .zip(&structure.targets)
        .map(|(kind, &b)| match kind {
            ConstraintKind::Row(_) => b.ln() + T::one(),
            ConstraintKind::Col(_) => b.ln(),
            ConstraintKind::Group(_) => T::zero(),
        })
        .collect()
}

fn newton_direction<T: Scalar>(structure: &Structure<T>, state: &DualState<T>, beta: T) -> Vec<T> {
    let m = structure.m();
    let mut hessian = SymMatrix::zeros(m);
    for (k, cons) in structure.membership.iter().enumerate() {
        let p = state.p[k];
        let w = p / (T::one() + (beta + beta) * p);
        for &a in cons {
            for &b in cons {
                hessian.add(a, b, w);
            }
        }
    }
    let chol = SemiDefiniteCholesky::factor(&hessian);
    chol.solve(&state.gradient).into_iter().map(|d| -d).collect()
}

/// Maximizes the ridge entropy objective subject to the problem's constraints.
///
/// Cells that are forbidden, or whose row or column target is zero, are eliminated
/// and returned as exact zeros. An infeasible constraint system is rejected by a
/// presolve; hitting `max_iterations` returns the last iterate with
/// `converged = false`.
pub fn solve_ridge<T: Scalar>(
    problem: &ReconstructionProblem<T>,
    config: &SolverConfig<T>,
) -> Result<SolutionReport<T>, SolveError> {
    config.validate()?;
    let structure = Structure::build(problem)?;
    structure.presolve(problem)?;
    let beta = problem.beta;
    // stop well inside the contract so the independent residual check has room
    let target = (config.tolerance * T::lit(1e-3)).max(T::tolerance_floor());

    let mut state = evaluate(&structure, beta, initial_multipliers(&structure));
    let mut iterations = 0;
    let mut stalls = 0;
    while state.residual > target && iterations < config.max_iterations {
        iterations += 1;
        let direction = newton_direction(&structure, &state, beta);
        let slope = compensated_sum(state.gradient.iter().zip(&direction).map(|(&g, &d)| g * d));
        let noise = T::epsilon() * T::lit(16.0) * (T::one() + state.value.abs());
        let mut step = T::one();
        let mut accepted = None;
        for _ in 0..60 {
            let lambda: Vec<T> = state
                .lambda
                .iter()
                .zip(&direction)
                .map(|(&l, &d)| l + step * d)
                .collect();
            let trial = evaluate(&structure, beta, lambda);
            let armijo = trial.value <= state.value + T::lit(1e-4) * step * slope + noise;
            if trial.value.is_finite() && (armijo || trial.residual < state.residual * T::lit(0.5)) {
                accepted = Some(trial);
                break;
            }
            step = step / T::lit(2.0);
        }
        match accepted {
            Some(trial) => {
                stalls = if trial.residual >= state.residual { stalls + 1 } else { 0 };
                state = trial;
            }
            None => stalls += 1,
        }
        if stalls >= 5 {
            break;
        }
    }

    let n = structure.n;
    let mut dense = vec![T::zero(); n * n];
    for (&cell, &p) in structure.free.iter().zip(&state.p) {
        dense[cell] = p;
    }
    report_from_cells(problem, dense, iterations, config.tolerance)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cell_response_solves_stationarity() {
        for &beta in &[0.0, 1e-3, 1.0, 100.0, 1e6] {
            for &a in &[-700.0, -40.0, -5.0, -1.0, 0.0, 0.5, 3.0, 30.0, 300.0] {
                let p: f64 = cell_response(a, beta);
                assert!(p > 0.0 && p.is_finite(), "beta {beta} a {a} -> {p}");
                let lhs = p.ln() + 2.0 * beta * p;
                assert!((lhs - a).abs() <= 1e-12 * (1.0 + a.abs()), "beta {beta} a {a}: {lhs}");
            }
        }
    }

    #[test]
    fn cell_response_single_precision() {
        let p: f32 = cell_response(-3.0, 10.0);
        assert!((p.ln() + 20.0 * p + 3.0).abs() < 1e-5);
    }
}
