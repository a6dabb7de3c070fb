//! Small dense linear algebra helpers.

use crate::scalar::Scalar;

/// Row-major dense symmetric matrix.
#[derive(Debug, Clone)]
pub(crate) struct SymMatrix<T> {
    pub m: usize,
    pub data: Vec<T>,
}

impl<T: Scalar> SymMatrix<T> {
    pub fn zeros(m: usize) -> Self {
        Self {
            m,
            data: vec![T::zero(); m * m],
        }
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.m + j] = self.data[i * self.m + j] + v;
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.m + j]
    }
}

/// Cholesky factor of a positive semidefinite matrix. Pivots that collapse to
/// (numerically) zero mark linearly dependent rows; those unknowns are pinned to 0,
/// which yields an exact solution whenever the right-hand side is in the range.
pub(crate) struct SemiDefiniteCholesky<T> {
    m: usize,
    lower: Vec<T>,
    dependent: Vec<bool>,
}

impl<T: Scalar> SemiDefiniteCholesky<T> {
    pub fn factor(a: &SymMatrix<T>) -> Self {
        let m = a.m;
        let rel = T::epsilon().powf(T::lit(2.0 / 3.0));
        let mut lower = vec![T::zero(); m * m];
        let mut dependent = vec![false; m];
        for k in 0..m {
            let mut d = a.get(k, k);
            for j in 0..k {
                let l = lower[k * m + j];
                d = d - l * l;
            }
            if d <= rel * a.get(k, k) || d <= T::zero() {
                dependent[k] = true;
                continue;
            }
            let pivot = d.sqrt();
            lower[k * m + k] = pivot;
            for i in k + 1..m {
                let mut s = a.get(i, k);
                for j in 0..k {
                    s = s - lower[i * m + j] * lower[k * m + j];
                }
                lower[i * m + k] = s / pivot;
            }
        }
        Self {
            m,
            lower,
            dependent,
        }
    }

    #[cfg(test)]
    pub fn rank(&self) -> usize {
        self.dependent.iter().filter(|d| !**d).count()
    }

    pub fn solve(&self, rhs: &[T]) -> Vec<T> {
        let m = self.m;
        let mut y = vec![T::zero(); m];
        for i in 0..m {
            if self.dependent[i] {
                continue;
            }
            let mut s = rhs[i];
            for j in 0..i {
                s = s - self.lower[i * m + j] * y[j];
            }
            y[i] = s / self.lower[i * m + i];
        }
        let mut x = vec![T::zero(); m];
        for i in (0..m).rev() {
            if self.dependent[i] {
                continue;
            }
            let mut s = y[i];
            for j in i + 1..m {
                s = s - self.lower[j * m + i] * x[j];
            }
            x[i] = s / self.lower[i * m + i];
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_singular_consistent_system() {
        // rows 0 and 1 identical; rhs in range
        let mut a = SymMatrix::<f64>::zeros(3);
        let vals = [[2.0, 2.0, 1.0], [2.0, 2.0, 1.0], [1.0, 1.0, 3.0]];
        for i in 0..3 {
            for j in 0..3 {
                a.add(i, j, vals[i][j]);
            }
        }
        let chol = SemiDefiniteCholesky::factor(&a);
        assert_eq!(chol.rank(), 2);
        let rhs = [3.0, 3.0, 4.0];
        let x = chol.solve(&rhs);
        for i in 0..3 {
            let ax: f64 = (0..3).map(|j| vals[i][j] * x[j]).sum();
            assert!((ax - rhs[i]).abs() < 1e-12);
        }
    }
}
