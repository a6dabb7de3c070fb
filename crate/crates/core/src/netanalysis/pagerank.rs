use crate::scalar::{compensated_sum, Scalar};

use super::network::BinaryNetwork;
use super::NetError;

pub const DEFAULT_DAMPING: f64 = 0.85;
pub const DEFAULT_TOLERANCE: f64 = 1e-12;
const MAX_ITERATIONS: usize = 100_000;

/// PageRank by power iteration on the directed adjacency, with uniform teleport
/// and the mass of dangling nodes spread uniformly. Iterates until the L1 change
/// drops below `tol`; the result sums to one.
pub fn pagerank<T: Scalar>(net: &BinaryNetwork, damping: T, tol: T) -> Result<Vec<T>, NetError> {
    if !(damping > T::zero() && damping < T::one()) {
        return Err(NetError::InvalidParameter(format!(
            "damping must lie in (0, 1), got {damping}"
        )));
    }
    if !(tol > T::zero()) {
        return Err(NetError::InvalidParameter("tolerance must be positive".into()));
    }
    let n = net.n();
    if n == 0 {
        return Ok(Vec::new());
    }
    let nf = T::from_usize(n).unwrap();
    let out_deg = net.out_degrees();
    let edges = net.edges();
    let mut rank = vec![T::one() / nf; n];
    let mut next = vec![T::zero(); n];
    for _ in 0..MAX_ITERATIONS {
        let dangling = compensated_sum((0..n).filter(|&i| out_deg[i] == 0).map(|i| rank[i]));
        let base = (T::one() - damping) / nf + damping * dangling / nf;
        next.iter_mut().for_each(|x| *x = base);
        for &(i, j) in &edges {
            next[j] = next[j] + damping * rank[i] / T::from_usize(out_deg[i]).unwrap();
        }
        let total = compensated_sum(next.iter().copied());
        next.iter_mut().for_each(|x| *x = *x / total);
        let change = compensated_sum(rank.iter().zip(&next).map(|(&a, &b)| (a - b).abs()));
        std::mem::swap(&mut rank, &mut next);
        if change < tol {
            return Ok(rank);
        }
    }
    Err(NetError::NotConverged("pagerank"))
}
