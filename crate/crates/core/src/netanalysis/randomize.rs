//! Degree-preserving null model via directed double-edge swaps.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::metrics::{avg_shortest_path, clustering_transitivity, degree_assortativity};
use super::network::BinaryNetwork;
use super::NetError;

pub const DEFAULT_SWAPS_PER_EDGE: usize = 10;

fn sample_rng(seed: u64, sample: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(sample as u64);
    rng
}

/// One randomized copy of `net`: `swaps_per_edge * |E|` attempts of
/// `(u->v, x->y) => (u->y, x->v)`, rejecting self-loops and duplicate links.
pub fn randomize_once<R: Rng>(net: &BinaryNetwork, swaps_per_edge: usize, rng: &mut R) -> BinaryNetwork {
    let n = net.n();
    let mut edges = net.edges();
    let mut present = net.adjacency().to_vec();
    let m = edges.len();
    if m >= 2 {
        for _ in 0..swaps_per_edge * m {
            let a = rng.gen_range(0..m);
            let b = rng.gen_range(0..m);
            let ((u, v), (x, y)) = (edges[a], edges[b]);
            if u == x || v == y || u == y || x == v {
                continue;
            }
            if present[u * n + y] || present[x * n + v] {
                continue;
            }
            present[u * n + v] = false;
            present[x * n + y] = false;
            present[u * n + y] = true;
            present[x * n + v] = true;
            edges[a] = (u, y);
            edges[b] = (x, v);
        }
    }
    BinaryNetwork::from_adjacency(net.nodes().to_vec(), present).expect("same shape")
}

/// `n_samples` randomized networks. Sample `k` draws from its own RNG stream of
/// `seed`, so the output is reproducible and independent of thread count.
pub fn randomized_samples(
    net: &BinaryNetwork,
    n_samples: usize,
    swaps_per_edge: usize,
    seed: u64,
) -> Result<Vec<BinaryNetwork>, NetError> {
    if n_samples == 0 {
        return Err(NetError::InvalidParameter("n_samples must be at least 1".into()));
    }
    if net.edge_count() < 2 {
        return Err(NetError::InvalidParameter(
            "degree-preserving swaps need at least two directed edges".into(),
        ));
    }
    Ok((0..n_samples)
        .into_par_iter()
        .map(|k| randomize_once(net, swaps_per_edge, &mut sample_rng(seed, k)))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricStats {
    pub observed: Option<f64>,
    pub mean: Option<f64>,
    /// Sample standard deviation; `None` with fewer than two defined values.
    pub sd: Option<f64>,
    pub z_score: Option<f64>,
    /// Samples where the metric was undefined.
    pub undefined: usize,
    pub values: Vec<Option<f64>>,
}

impl MetricStats {
    fn from_samples(observed: Option<f64>, values: Vec<Option<f64>>) -> Self {
        let defined: Vec<f64> = values.iter().flatten().copied().collect();
        let k = defined.len();
        let constant = defined.windows(2).all(|w| w[0] == w[1]);
        let mean = match (k, constant) {
            (0, _) => None,
            (_, true) => Some(defined[0]),
            _ => Some(defined.iter().sum::<f64>() / k as f64),
        };
        let sd = (k > 1).then(|| {
            if constant {
                return 0.0;
            }
            let mu = mean.unwrap();
            (defined.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (k - 1) as f64).sqrt()
        });
        // a spread at rounding level carries no information
        let z_score = match (observed, mean, sd) {
            (Some(o), Some(mu), Some(s)) if s > 1e-12 * (1.0 + mu.abs()) => Some((o - mu) / s),
            _ => None,
        };
        Self {
            observed,
            mean,
            sd,
            z_score,
            undefined: values.len() - k,
            values,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleStats {
    pub n_samples: usize,
    pub swaps_per_edge: usize,
    pub seed: u64,
    pub avg_shortest_path: MetricStats,
    pub clustering: MetricStats,
    pub assortativity: MetricStats,
}

/// Metric distributions over a degree-preserving randomized ensemble, with the
/// observed values and z-scores of `net` against it.
pub fn degree_preserved_randomize(
    net: &BinaryNetwork,
    n_samples: usize,
    swaps_per_edge: usize,
    seed: u64,
) -> Result<EnsembleStats, NetError> {
    let samples = randomized_samples(net, n_samples, swaps_per_edge, seed)?;
    let per_sample: Vec<(Option<f64>, f64, Option<f64>)> = samples
        .par_iter()
        .map(|s| {
            (
                avg_shortest_path(s).mean,
                clustering_transitivity(s),
                degree_assortativity(s),
            )
        })
        .collect();
    Ok(EnsembleStats {
        n_samples,
        swaps_per_edge,
        seed,
        avg_shortest_path: MetricStats::from_samples(
            avg_shortest_path(net).mean,
            per_sample.iter().map(|s| s.0).collect(),
        ),
        clustering: MetricStats::from_samples(
            Some(clustering_transitivity(net)),
            per_sample.iter().map(|s| Some(s.1)).collect(),
        ),
        assortativity: MetricStats::from_samples(
            degree_assortativity(net),
            per_sample.iter().map(|s| s.2).collect(),
        ),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ring_with_chords(n: usize) -> BinaryNetwork {
        let edges: Vec<_> = (0..n)
            .flat_map(|i| [(i, (i + 1) % n), (i, (i + 3) % n), ((i * 7) % n, (i * 7 + 2) % n)])
            .collect();
        BinaryNetwork::with_edges(n, &edges).unwrap()
    }

    #[test]
    fn swaps_preserve_degrees() {
        let net = ring_with_chords(12);
        for sample in randomized_samples(&net, 20, 10, 7).unwrap() {
            assert_eq!(sample.in_degrees(), net.in_degrees());
            assert_eq!(sample.out_degrees(), net.out_degrees());
            assert!((0..12).all(|i| !sample.has_edge(i, i)));
        }
    }

    #[test]
    fn seeds_reproduce_and_differ() {
        let net = ring_with_chords(12);
        let a = randomized_samples(&net, 4, 10, 1).unwrap();
        let b = randomized_samples(&net, 4, 10, 1).unwrap();
        let c = randomized_samples(&net, 4, 10, 2).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn no_legal_swap_leaves_network_unchanged() {
        // 0->1, 1->0: every swap would create a self-loop
        let net = BinaryNetwork::with_edges(3, &[(0, 1), (1, 0)]).unwrap();
        for s in randomized_samples(&net, 5, 10, 3).unwrap() {
            assert_eq!(s, net);
        }
    }

    #[test]
    fn single_sample_has_no_spread() {
        let stats = degree_preserved_randomize(&ring_with_chords(10), 1, 10, 0).unwrap();
        assert_eq!(stats.clustering.sd, None);
        assert_eq!(stats.clustering.z_score, None);
        assert!(stats.clustering.mean.is_some());
    }

    #[test]
    fn rejects_degenerate_input() {
        let net = BinaryNetwork::with_edges(3, &[(0, 1)]).unwrap();
        assert!(randomized_samples(&net, 5, 10, 0).is_err());
        assert!(randomized_samples(&ring_with_chords(6), 0, 10, 0).is_err());
    }

    #[test]
    fn constant_ensemble_has_zero_spread() {
        let s = MetricStats::from_samples(Some(0.1), vec![Some(0.1 + 0.2); 4]);
        assert_eq!(s.mean, Some(0.1 + 0.2));
        assert_eq!(s.sd, Some(0.0));
        assert_eq!(s.z_score, None);
        let s = MetricStats::from_samples(Some(3.0), vec![Some(1.0), Some(2.0), None]);
        assert_eq!(s.undefined, 1);
        assert_eq!(s.mean, Some(1.5));
        assert!((s.z_score.unwrap() - 1.5 / 0.5_f64.sqrt()).abs() < 1e-12);
    }
}
