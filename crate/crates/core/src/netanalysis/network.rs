use serde::Serialize;

use crate::model::{FlowMatrix, ModelError, NodeInfo};
use crate::scalar::Scalar;

use super::NetError;

/// Directed, unweighted network without self-loops. The undirected projection
/// (an edge wherever either direction exists) is cached as neighbour lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryNetwork {
    nodes: Vec<NodeInfo>,
    adjacency: Vec<bool>,
    undirected: Vec<Vec<usize>>,
}

impl BinaryNetwork {
    /// Builds a network from a row-major adjacency. Diagonal entries are dropped.
    pub fn from_adjacency(nodes: Vec<NodeInfo>, mut adjacency: Vec<bool>) -> Result<Self, NetError> {
        let n = nodes.len();
        if adjacency.len() != n * n {
            return Err(NetError::Model(ModelError::Shape {
                n,
                got: adjacency.len(),
            }));
        }
        for i in 0..n {
            adjacency[i * n + i] = false;
        }
        let undirected = (0..n)
            .map(|i| {
                (0..n)
                    .filter(|&j| adjacency[i * n + j] || adjacency[j * n + i])
                    .collect()
            })
            .collect();
        Ok(Self {
            nodes,
            adjacency,
            undirected,
        })
    }

    pub fn from_edges(nodes: Vec<NodeInfo>, edges: &[(usize, usize)]) -> Result<Self, NetError> {
        let n = nodes.len();
        let mut adjacency = vec![false; n * n];
        for &(i, j) in edges {
            if i >= n || j >= n {
                return Err(NetError::Model(ModelError::CellOutOfRange(i, j)));
            }
            adjacency[i * n + j] = true;
        }
        Self::from_adjacency(nodes, adjacency)
    }

    /// Convenience constructor with generic node labels `0..n`.
    pub fn with_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self, NetError> {
        let nodes = (0..n).map(|k| NodeInfo::generic(k.to_string())).collect();
        Self::from_edges(nodes, edges)
    }

    /// Undirected graph: both directions of every listed pair.
    pub fn undirected_with_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self, NetError> {
        let both: Vec<_> = edges.iter().flat_map(|&(a, b)| [(a, b), (b, a)]).collect();
        Self::with_edges(n, &both)
    }

    /// Every off-diagonal cell with a strictly positive weight becomes a link.
    pub fn support<T: Scalar>(weights: &FlowMatrix<T>) -> Self {
        let adjacency = weights.weights().iter().map(|&w| w > T::zero()).collect();
        Self::from_adjacency(weights.nodes().to_vec(), adjacency).expect("square matrix")
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[NodeInfo] {
        &self.nodes
    }

    #[inline]
    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adjacency[i * self.n() + j]
    }

    pub fn adjacency(&self) -> &[bool] {
        &self.adjacency
    }

    /// Directed edges in row-major order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let n = self.n();
        (0..n * n)
            .filter(|&k| self.adjacency[k])
            .map(|k| (k / n, k % n))
            .collect()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().filter(|&&a| a).count()
    }

    pub fn out_degrees(&self) -> Vec<usize> {
        let n = self.n();
        (0..n)
            .map(|i| (0..n).filter(|&j| self.has_edge(i, j)).count())
            .collect()
    }

    pub fn in_degrees(&self) -> Vec<usize> {
        let n = self.n();
        (0..n)
            .map(|j| (0..n).filter(|&i| self.has_edge(i, j)).count())
            .collect()
    }

    /// Neighbours in the undirected projection, ascending.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.undirected[i]
    }

    pub fn undirected_degrees(&self) -> Vec<usize> {
        self.undirected.iter().map(Vec::len).collect()
    }

    /// Undirected edges `(a, b)` with `a < b`.
    pub fn undirected_edges(&self) -> Vec<(usize, usize)> {
        self.undirected
            .iter()
            .enumerate()
            .flat_map(|(a, nb)| nb.iter().filter(move |&&b| b > a).map(move |&b| (a, b)))
            .collect()
    }

    /// Zeroes every weight whose link is absent from this network.
    pub fn mask<T: Scalar>(&self, weights: &FlowMatrix<T>) -> Result<FlowMatrix<T>, NetError> {
        if weights.n() != self.n() {
            return Err(NetError::Model(ModelError::Shape {
                n: self.n(),
                got: weights.n() * weights.n(),
            }));
        }
        Ok(weights.map_cells(|i, j, w| if self.has_edge(i, j) { w } else { T::zero() })?)
    }
}

/// Share of the `n (n - 1)` possible directed links that are present.
pub fn density(net: &BinaryNetwork) -> f64 {
    let n = net.n();
    if n < 2 {
        return 0.0;
    }
    net.edge_count() as f64 / (n * (n - 1)) as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Truncation {
    pub threshold: f64,
    pub positive_links: usize,
    pub kept_links: usize,
}

fn positive_population<T: Scalar>(weights: &FlowMatrix<T>) -> Result<Vec<T>, NetError> {
    let positives = weights.positive_off_diagonal();
    if positives.is_empty() {
        return Err(NetError::NoPositiveWeights);
    }
    Ok(positives)
}

/// Keeps links strictly above the `percentile`-th percentile of the strictly
/// positive off-diagonal weights.
///
/// The threshold is the `k`-th smallest positive weight with
/// `k = floor(percentile / 100 * N)`; with `k = 0` every positive link survives.
pub fn truncate_percentile<T: Scalar>(
    weights: &FlowMatrix<T>,
    percentile: f64,
) -> Result<(BinaryNetwork, Truncation), NetError> {
    if !(percentile > 0.0 && percentile < 100.0) {
        return Err(NetError::InvalidParameter(format!(
            "percentile must lie in (0, 100), got {percentile}"
        )));
    }
    let mut positives = positive_population(weights)?;
    positives.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let count = positives.len();
    let rank = ((percentile / 100.0) * count as f64 + 1e-9).floor() as usize;
    let threshold = if rank == 0 { T::zero() } else { positives[rank - 1] };
    let adjacency = weights.weights().iter().map(|&w| w > threshold).collect();
    let net = BinaryNetwork::from_adjacency(weights.nodes().to_vec(), adjacency)?;
    let kept = net.edge_count();
    Ok((
        net,
        Truncation {
            threshold: threshold.to_f64_lossy(),
            positive_links: count,
            kept_links: kept,
        },
    ))
}

/// Keeps links with weight at least `fraction` times the largest off-diagonal weight.
pub fn truncate_relative<T: Scalar>(
    weights: &FlowMatrix<T>,
    fraction: f64,
) -> Result<(BinaryNetwork, Truncation), NetError> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(NetError::InvalidParameter(format!(
            "fraction must lie in (0, 1), got {fraction}"
        )));
    }
    let positives = positive_population(weights)?;
    let max = positives.iter().copied().fold(T::zero(), T::max);
    let threshold = max * T::lit(fraction);
    let n = weights.n();
    let adjacency = weights
        .weights()
        .iter()
        .enumerate()
        .map(|(k, &w)| k / n != k % n && w > T::zero() && w >= threshold)
        .collect();
    let net = BinaryNetwork::from_adjacency(weights.nodes().to_vec(), adjacency)?;
    let kept = net.edge_count();
    Ok((
        net,
        Truncation {
            threshold: threshold.to_f64_lossy(),
            positive_links: positives.len(),
            kept_links: kept,
        },
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RelativeFit {
    pub fraction: f64,
    pub target_density: f64,
    pub achieved_density: f64,
    pub kept_links: usize,
    pub target_links: f64,
}

/// Bisects the relative-to-maximum threshold so the truncated network's density
/// comes as close as possible to `target_density`.
pub fn fit_relative_threshold<T: Scalar>(
    weights: &FlowMatrix<T>,
    target_density: f64,
) -> Result<(BinaryNetwork, RelativeFit), NetError> {
    let n = weights.n();
    if n < 2 || !(target_density > 0.0 && target_density <= 1.0) {
        return Err(NetError::InvalidParameter(format!(
            "target density must lie in (0, 1], got {target_density}"
        )));
    }
    let positives = positive_population(weights)?;
    let max = positives
        .iter()
        .copied()
        .fold(T::zero(), T::max)
        .to_f64_lossy();
    let slots = (n * (n - 1)) as f64;
    let target_links = target_density * slots;
    let kept = |f: f64| {
        positives
            .iter()
            .filter(|&&w| w.to_f64_lossy() >= f * max)
            .count()
    };
    // kept(f) is non-increasing in f
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if kept(mid) as f64 >= target_links {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let candidates = [lo, hi]
        .into_iter()
        .filter(|&f| f > 0.0 && f < 1.0)
        .map(|f| (f, kept(f)));
    let (fraction, _) = candidates
        .min_by(|a, b| {
            let da = (a.1 as f64 - target_links).abs();
            let db = (b.1 as f64 - target_links).abs();
            da.partial_cmp(&db).unwrap()
        })
        .ok_or_else(|| NetError::InvalidParameter("no admissible threshold".into()))?;
    let (net, truncation) = truncate_relative(weights, fraction)?;
    let fit = RelativeFit {
        fraction,
        target_density,
        achieved_density: density(&net),
        kept_links: truncation.kept_links,
        target_links,
    };
    Ok((net, fit))
}
