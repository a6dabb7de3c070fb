//! Binary-network analysis of reconstructed flow matrices: truncation,
//! classic graph metrics, communities, PageRank and a degree-preserving null model.
//!
//! Path length, clustering, assortativity and communities use the undirected
//! projection; PageRank and degrees use the directed links.

mod ccdf;
mod community;
mod metrics;
mod network;
mod pagerank;
mod randomize;

use serde::Serialize;
use thiserror::Error;

use crate::model::ModelError;

pub use ccdf::{ccdf, degree_ccdf, CcdfPoint, CcdfTables};
pub use community::{detect_communities, modularity, LOUVAIN_RESTARTS};
pub use metrics::{avg_shortest_path, clustering_transitivity, degree_assortativity, PathLength};
pub use network::{
    density, fit_relative_threshold, truncate_percentile, truncate_relative, BinaryNetwork,
    RelativeFit, Truncation,
};
pub use pagerank::{pagerank, DEFAULT_DAMPING, DEFAULT_TOLERANCE};
pub use randomize::{
    degree_preserved_randomize, randomize_once, randomized_samples, EnsembleStats, MetricStats,
    DEFAULT_SWAPS_PER_EDGE,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NetError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("no strictly positive off-diagonal weights")]
    NoPositiveWeights,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("{0} did not converge")]
    NotConverged(&'static str),
}

/// Summary metrics of one binary network.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub n: usize,
    pub links: usize,
    pub density: f64,
    pub avg_shortest_path: Option<f64>,
    pub reachable_pairs: usize,
    /// Ordered pairs in different components; excluded from the path-length mean.
    pub disconnected_pairs: usize,
    pub clustering: f64,
    pub assortativity: Option<f64>,
    pub modularity: f64,
    pub communities: usize,
}

pub fn compute_metrics(net: &BinaryNetwork) -> MetricsReport {
    let pl = avg_shortest_path(net);
    let (labels, q) = detect_communities(net);
    MetricsReport {
        n: net.n(),
        links: net.edge_count(),
        density: density(net),
        avg_shortest_path: pl.mean,
        reachable_pairs: pl.reachable_pairs,
        disconnected_pairs: pl.disconnected_pairs,
        clustering: clustering_transitivity(net),
        assortativity: degree_assortativity(net),
        modularity: q,
        communities: labels.iter().max().map_or(0, |m| m + 1),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_on_two_triangles() {
        let g = BinaryNetwork::undirected_with_edges(6, &[(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3)])
            .unwrap();
        let r = compute_metrics(&g);
        assert_eq!(r.links, 12);
        assert_eq!(r.communities, 2);
        assert_eq!(r.clustering, 1.0);
        assert_eq!(r.avg_shortest_path, Some(1.0));
        assert_eq!(r.disconnected_pairs, 18);
        assert!((r.density - 0.4).abs() < 1e-15);
    }
}
