//! Brute-force reference solver for problems with at most three free dimensions.
//!
//! The feasible set is written as `x0 + Z y` with an orthonormal nullspace basis `Z`
//! of the equality system, enumerated on a grid in `y`, and refined around the best
//! grid point. Nothing here shares code with the dual solver.

use crate::model::ReconstructionProblem;
use crate::scalar::{compensated_sum, Scalar};

use super::{objective, report_from_cells, SolutionReport, SolveError};

pub const MAX_ORACLE_DOF: usize = 3;

#[derive(Debug, Clone)]
pub struct OracleSolution<T> {
    pub report: SolutionReport<T>,
    /// Dimension of the feasible affine set.
    pub dof: usize,
    /// For one free dimension: the dense `p` matrices at the two grid points
    /// neighbouring the best one, which bracket the maximizer.
    pub bracket: Option<(Vec<T>, Vec<T>)>,
    /// Number of objective evaluations.
    pub evaluations: usize,
}

struct Affine<T> {
    cells: Vec<usize>,
    origin: Vec<T>,
    basis: Vec<Vec<T>>,
}

impl<T: Scalar> Affine<T> {
    fn point(&self, y: &[T]) -> Vec<T> {
        let mut x = self.origin.clone();
        for (dir, &c) in self.basis.iter().zip(y) {
            for (xi, &d) in x.iter_mut().zip(dir) {
                *xi = *xi + c * d;
            }
        }
        x
    }
}

/// Dense equality system over the cells that are not forced to zero.
fn equality_system<T: Scalar>(problem: &ReconstructionProblem<T>) -> (Vec<usize>, Vec<Vec<T>>, Vec<T>) {
    let n = problem.n();
    let g = problem.marginals.total;
    let rows: Vec<T> = problem.marginals.out_strength.iter().map(|&s| s / g).collect();
    let cols: Vec<T> = problem.marginals.in_strength.iter().map(|&s| s / g).collect();
    let cells: Vec<usize> = (0..n * n)
        .filter(|&k| {
            let (i, j) = (k / n, k % n);
            rows[i] != T::zero() && cols[j] != T::zero() && !problem.zero_cells.contains(&(i, j))
        })
        .collect();
    let mut a = Vec::new();
    let mut b = Vec::new();
    for i in 0..n {
        a.push(cells.iter().map(|&k| if k / n == i { T::one() } else { T::zero() }).collect());
        b.push(rows[i]);
    }
    for j in 0..n {
        a.push(cells.iter().map(|&k| if k % n == j { T::one() } else { T::zero() }).collect());
        b.push(cols[j]);
    }
    for group in &problem.group_constraints {
        a.push(
            cells
                .iter()
                .map(|&k| {
                    if group.source.contains(&(k / n)) && group.target.contains(&(k % n)) {
                        T::one()
                    } else {
                        T::zero()
                    }
                })
                .collect(),
        );
        b.push(group.amount / g);
    }
    (cells, a, b)
}

/// Reduced row echelon form; returns the feasible affine set or an infeasibility.
fn affine_solution_set<T: Scalar>(
    cells: Vec<usize>,
    mut a: Vec<Vec<T>>,
    mut b: Vec<T>,
) -> Result<Affine<T>, SolveError> {
    let vars = cells.len();
    let tol = T::lit(1e-11).max(T::tolerance_floor());
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..vars {
        if row == a.len() {
            break;
        }
        let best = (row..a.len())
            .max_by(|&x, &y| a[x][col].abs().partial_cmp(&a[y][col].abs()).unwrap())
            .unwrap();
        if a[best][col].abs() <= tol {
            continue;
        }
        a.swap(row, best);
        b.swap(row, best);
        let scale = a[row][col];
        for v in a[row].iter_mut() {
            *v = *v / scale;
        }
        b[row] = b[row] / scale;
        for r in 0..a.len() {
            if r != row && a[r][col] != T::zero() {
                let f = a[r][col];
                for c in 0..vars {
                    a[r][c] = a[r][c] - f * a[row][c];
                }
                b[r] = b[r] - f * b[row];
            }
        }
        pivots.push(col);
        row += 1;
    }
    if let Some(r) = (row..a.len()).find(|&r| b[r].abs() > tol) {
        return Err(SolveError::Infeasible {
            aggregate: "equality system".into(),
            detail: format!("inconsistent equation, residual {}", b[r]),
        });
    }

    let mut origin = vec![T::zero(); vars];
    for (r, &c) in pivots.iter().enumerate() {
        origin[c] = b[r];
    }
    let mut basis: Vec<Vec<T>> = Vec::new();
    for f in (0..vars).filter(|c| !pivots.contains(c)) {
        let mut v = vec![T::zero(); vars];
        v[f] = T::one();
        for (r, &c) in pivots.iter().enumerate() {
            v[c] = -a[r][f];
        }
        // modified Gram-Schmidt
        for u in &basis {
            let dot = compensated_sum(v.iter().zip(u).map(|(&x, &y)| x * y));
            for (x, &y) in v.iter_mut().zip(u) {
                *x = *x - dot * y;
            }
        }
        let norm = compensated_sum(v.iter().map(|&x| x * x)).sqrt();
        for x in v.iter_mut() {
            *x = *x / norm;
        }
        basis.push(v);
    }
    // min-norm particular solution
    for u in &basis {
        let dot = compensated_sum(origin.iter().zip(u).map(|(&x, &y)| x * y));
        for (x, &y) in origin.iter_mut().zip(u) {
            *x = *x - dot * y;
        }
    }
    Ok(Affine {
        cells,
        origin,
        basis,
    })
}

/// Grid search ground truth for tiny instances.
///
/// `resolution` is the grid spacing along each nullspace direction. With one
/// free dimension the whole feasible segment is enumerated and the best point
/// refined by golden-section search; with two or three, the grid is refined by
/// repeated zooming and a final compass search.
pub fn oracle_grid_search<T: Scalar>(
    problem: &ReconstructionProblem<T>,
    resolution: T,
) -> Result<OracleSolution<T>, SolveError> {
    if !(resolution > T::zero()) {
        return Err(SolveError::InvalidConfig("resolution must be positive".into()));
    }
    if !(problem.marginals.total > T::zero()) {
        return Err(SolveError::NonPositiveTotal);
    }
    let (cells, a, b) = equality_system(problem);
    let affine = affine_solution_set(cells, a, b)?;
    let dof = affine.basis.len();
    if dof > MAX_ORACLE_DOF {
        return Err(SolveError::TooManyFreeDimensions {
            dof,
            max: MAX_ORACLE_DOF,
        });
    }
    let beta = problem.beta;
    let slack = T::lit(1e-12);
    let feasible = |x: &[T]| x.iter().all(|&v| v >= -slack);
    let score = |y: &[T]| -> Option<T> {
        let x = affine.point(y);
        feasible(&x).then(|| objective(&clamp(x), beta))
    };
    let mut evaluations = 0usize;
    let mut bracket = None;

    let best_y: Vec<T> = match dof {
        0 => {
            if !feasible(&affine.origin) {
                return Err(SolveError::Infeasible {
                    aggregate: "nonnegativity".into(),
                    detail: "the only solution of the equalities has a negative cell".into(),
                });
            }
            vec![]
        }
        1 => {
            let (lo, hi) = segment(&affine)?;
            let steps = ((hi - lo) / resolution).floor().to_usize().unwrap_or(0);
            let mut best = (lo, T::neg_infinity());
            for k in 0..=steps {
                let y = (lo + T::from_usize(k).unwrap() * resolution).min(hi);
                evaluations += 1;
                if let Some(z) = score(&[y]) {
                    if z > best.1 {
                        best = (y, z);
                    }
                }
            }
            let left = (best.0 - resolution).max(lo);
            let right = (best.0 + resolution).min(hi);
            bracket = Some((dense(problem, &affine, &[left]), dense(problem, &affine, &[right])));
            let (y, evals) = golden_section(|y| score(&[y]).unwrap_or(T::neg_infinity()), left, right);
            evaluations += evals;
            vec![y]
        }
        _ => {
            let (y, evals) = zoom_search(&score, &affine, resolution)?;
            evaluations += evals;
            y
        }
    };

    let x = clamp(affine.point(&best_y));
    let mut p = vec![T::zero(); problem.n() * problem.n()];
    for (&cell, &v) in affine.cells.iter().zip(&x) {
        p[cell] = v;
    }
    let report = report_from_cells(problem, p, evaluations, T::lit(1e-6))?;
    Ok(OracleSolution {
        report,
        dof,
        bracket,
        evaluations,
    })
}

fn clamp<T: Scalar>(x: Vec<T>) -> Vec<T> {
    x.into_iter().map(|v| v.max(T::zero())).collect()
}

fn dense<T: Scalar>(problem: &ReconstructionProblem<T>, affine: &Affine<T>, y: &[T]) -> Vec<T> {
    let mut p = vec![T::zero(); problem.n() * problem.n()];
    for (&cell, v) in affine.cells.iter().zip(clamp(affine.point(y))) {
        p[cell] = v;
    }
    p
}

/// Exact feasible interval of `y` for a one-dimensional affine set.
fn segment<T: Scalar>(affine: &Affine<T>) -> Result<(T, T), SolveError> {
    let dir = &affine.basis[0];
    let (mut lo, mut hi) = (T::neg_infinity(), T::infinity());
    for (&x0, &d) in affine.origin.iter().zip(dir) {
        if d > T::zero() {
            lo = lo.max(-x0 / d);
        } else if d < T::zero() {
            hi = hi.min(-x0 / d);
        } else if x0 < T::zero() {
            lo = T::infinity();
        }
    }
    if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(SolveError::Infeasible {
            aggregate: "nonnegativity".into(),
            detail: "no nonnegative point satisfies the equalities".into(),
        });
    }
    Ok((lo, hi))
}

fn golden_section<T: Scalar>(f: impl Fn(T) -> T, mut a: T, mut b: T) -> (T, usize) {
    let ratio = T::lit(0.618_033_988_749_894_9);
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    let mut evals = 2;
    while (b - a).abs() > T::epsilon() * T::lit(8.0) * (T::one() + a.abs().max(b.abs())) && evals < 400 {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f(d);
        }
        evals += 1;
    }
    let mid = (a + b) / T::lit(2.0);
    let best = [(a, f(a)), (mid, f(mid)), (b, f(b))]
        .into_iter()
        .fold((mid, T::neg_infinity()), |acc, (y, v)| if v > acc.1 { (y, v) } else { acc });
    (best.0, evals + 3)
}

fn grid_points<T: Scalar>(center: &[T], half: T, per_dim: usize) -> Vec<Vec<T>> {
    let dof = center.len();
    let total = per_dim.pow(dof as u32);
    let spacing = if per_dim > 1 {
        (half + half) / T::from_usize(per_dim - 1).unwrap()
    } else {
        T::zero()
    };
    (0..total)
        .map(|mut idx| {
            (0..dof)
                .map(|d| {
                    let k = idx % per_dim;
                    idx /= per_dim;
                    center[d] - half + T::from_usize(k).unwrap() * spacing
                })
                .collect()
        })
        .collect()
}

fn zoom_search<T: Scalar>(
    score: &impl Fn(&[T]) -> Option<T>,
    affine: &Affine<T>,
    resolution: T,
) -> Result<(Vec<T>, usize), SolveError> {
    let dof = affine.basis.len();
    // origin is orthogonal to Z, so y = Z^T x; x lies in the simplex, hence each
    // y_d ranges over the convex hull of column d of Z
    let bounds: Vec<(T, T)> = affine
        .basis
        .iter()
        .map(|dir| {
            dir.iter()
                .fold((T::zero(), T::zero()), |(lo, hi), &v| (lo.min(v), hi.max(v)))
        })
        .collect();
    let per_dim: Vec<usize> = bounds
        .iter()
        .map(|&(lo, hi)| ((hi - lo) / resolution).ceil().to_usize().unwrap_or(usize::MAX).saturating_add(1))
        .collect();
    let budget: usize = 2_000_000;
    let count = per_dim.iter().try_fold(1usize, |acc, &k| acc.checked_mul(k));
    if count.is_none_or(|c| c > budget) {
        return Err(SolveError::InvalidConfig(format!(
            "resolution {resolution} needs more than {budget} grid points in {dof} dimensions"
        )));
    }
    let mut evaluations = 0;
    let mut best: Option<(Vec<T>, T)> = None;
    for mut idx in 0..count.unwrap() {
        let y: Vec<T> = bounds
            .iter()
            .zip(&per_dim)
            .map(|(&(lo, hi), &k)| {
                let pick = idx % k;
                idx /= k;
                (lo + T::from_usize(pick).unwrap() * resolution).min(hi)
            })
            .collect();
        evaluations += 1;
        if let Some(z) = score(&y) {
            if best.as_ref().is_none_or(|b| z > b.1) {
                best = Some((y, z));
            }
        }
    }
    let (mut center, mut value) = best.ok_or_else(|| SolveError::Infeasible {
        aggregate: "nonnegativity".into(),
        detail: "no grid point is feasible; the polytope may be empty or thinner than the resolution".into(),
    })?;

    // zoom: halve the window around the incumbent each level
    let mut half = resolution * T::lit(2.0);
    let floor = T::epsilon().sqrt() * T::lit(1e-3);
    while half > floor {
        for y in grid_points(&center, half, 11) {
            evaluations += 1;
            if let Some(z) = score(&y) {
                if z > value {
                    center = y;
                    value = z;
                }
            }
        }
        half = half / T::lit(2.0);
    }

    // compass search polish along the coordinate directions
    let mut step = half * T::lit(8.0);
    let stop = T::epsilon() * T::lit(16.0);
    while step > stop {
        let mut improved = false;
        for d in 0..dof {
            for sign in [T::one(), -T::one()] {
                let mut y = center.clone();
                y[d] = y[d] + sign * step;
                evaluations += 1;
                if let Some(z) = score(&y) {
                    if z > value {
                        center = y;
                        value = z;
                        improved = true;
                    }
                }
            }
        }
        if !improved {
            step = step / T::lit(2.0);
        }
    }
    Ok((center, evaluations))
}
