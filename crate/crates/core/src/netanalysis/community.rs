//! Modularity and deterministic Louvain community detection on the undirected
//! projection.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::network::BinaryNetwork;

/// Louvain passes run per detection: one in natural node order, the rest in
/// seeded random orders.
pub const LOUVAIN_RESTARTS: usize = 16;
const LOUVAIN_SEED: u64 = 0x5eed;

/// Newman modularity of `partition` (community label per node).
pub fn modularity(net: &BinaryNetwork, partition: &[usize]) -> f64 {
    let edges = net.undirected_edges();
    if edges.is_empty() {
        return 0.0;
    }
    let two_m = (2 * edges.len()) as f64;
    let deg = net.undirected_degrees();
    let mut internal: BTreeMap<usize, f64> = BTreeMap::new();
    let mut totals: BTreeMap<usize, f64> = BTreeMap::new();
    for &(a, b) in &edges {
        if partition[a] == partition[b] {
            *internal.entry(partition[a]).or_default() += 2.0;
        }
    }
    for (v, &d) in deg.iter().enumerate() {
        *totals.entry(partition[v]).or_default() += d as f64;
    }
    totals
        .iter()
        .map(|(c, &tot)| internal.get(c).copied().unwrap_or(0.0) / two_m - (tot / two_m).powi(2))
        .sum()
}

/// Weighted undirected graph used between Louvain levels. `loops[v]` holds the
/// weight of edges internal to the aggregated node, counted from both ends.
struct LevelGraph {
    adj: Vec<Vec<(usize, f64)>>,
    loops: Vec<f64>,
    two_m: f64,
}

impl LevelGraph {
    fn from_network(net: &BinaryNetwork) -> Self {
        let adj: Vec<Vec<(usize, f64)>> = (0..net.n())
            .map(|v| net.neighbors(v).iter().map(|&u| (u, 1.0)).collect())
            .collect();
        let two_m = adj.iter().map(Vec::len).sum::<usize>() as f64;
        Self {
            loops: vec![0.0; net.n()],
            adj,
            two_m,
        }
    }

    fn n(&self) -> usize {
        self.adj.len()
    }

    fn strength(&self, v: usize) -> f64 {
        self.loops[v] + self.adj[v].iter().map(|&(_, w)| w).sum::<f64>()
    }

    /// Single-node moves until no move improves modularity. Returns whether
    /// anything moved.
    fn local_moves(&self, community: &mut [usize], order: &[usize]) -> bool {
        let n = self.n();
        let k: Vec<f64> = (0..n).map(|v| self.strength(v)).collect();
        let mut tot = vec![0.0; n];
        for v in 0..n {
            tot[community[v]] += k[v];
        }
        let mut moved_any = false;
        let mut links: BTreeMap<usize, f64> = BTreeMap::new();
        loop {
            let mut moved = false;
            for &v in order {
                let own = community[v];
                links.clear();
                for &(u, w) in &self.adj[v] {
                    *links.entry(community[u]).or_default() += w;
                }
                tot[own] -= k[v];
                let gain = |c: usize, kin: f64| kin - tot[c] * k[v] / self.two_m;
                let mut best = (own, gain(own, links.get(&own).copied().unwrap_or(0.0)));
                for (&c, &kin) in &links {
                    let g = gain(c, kin);
                    if g > best.1 + 1e-12 {
                        best = (c, g);
                    }
                }
                tot[best.0] += k[v];
                if best.0 != own {
                    community[v] = best.0;
                    moved = true;
                    moved_any = true;
                }
            }
            if !moved {
                return moved_any;
            }
        }
    }

    fn aggregate(&self, community: &[usize]) -> (Self, Vec<usize>) {
        let mut relabel = BTreeMap::new();
        for &c in community {
            let next = relabel.len();
            relabel.entry(c).or_insert(next);
        }
        let labels: Vec<usize> = community.iter().map(|c| relabel[c]).collect();
        let m = relabel.len();
        let mut weights: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); m];
        let mut loops = vec![0.0; m];
        for v in 0..self.n() {
            let cv = labels[v];
            loops[cv] += self.loops[v];
            for &(u, w) in &self.adj[v] {
                let cu = labels[u];
                if cu == cv {
                    loops[cv] += w;
                } else {
                    *weights[cv].entry(cu).or_default() += w;
                }
            }
        }
        let adj = weights.into_iter().map(|m| m.into_iter().collect()).collect();
        (
            Self {
                adj,
                loops,
                two_m: self.two_m,
            },
            labels,
        )
    }
}

fn louvain(net: &BinaryNetwork, mut rng: Option<&mut ChaCha8Rng>) -> Vec<usize> {
    let mut assignment: Vec<usize> = (0..net.n()).collect();
    let mut graph = LevelGraph::from_network(net);
    if graph.two_m > 0.0 {
        loop {
            let mut order: Vec<usize> = (0..graph.n()).collect();
            if let Some(r) = rng.as_deref_mut() {
                order.shuffle(r);
            }
            let mut community: Vec<usize> = (0..graph.n()).collect();
            if !graph.local_moves(&mut community, &order) {
                break;
            }
            let (next, labels) = graph.aggregate(&community);
            for a in assignment.iter_mut() {
                *a = labels[*a];
            }
            graph = next;
        }
    }
    let mut relabel = BTreeMap::new();
    assignment
        .iter()
        .map(|&c| {
            let next = relabel.len();
            *relabel.entry(c).or_insert(next)
        })
        .collect()
}

/// Greedy modularity maximization (Louvain). The best of [`LOUVAIN_RESTARTS`]
/// passes with fixed node orders is returned, so the result is deterministic.
/// Labels are numbered by first appearance.
pub fn detect_communities(net: &BinaryNetwork) -> (Vec<usize>, f64) {
    let mut labels = louvain(net, None);
    let mut best = modularity(net, &labels);
    let mut rng = ChaCha8Rng::seed_from_u64(LOUVAIN_SEED);
    for _ in 1..LOUVAIN_RESTARTS {
        let candidate = louvain(net, Some(&mut rng));
        let q = modularity(net, &candidate);
        if q > best + 1e-12 {
            best = q;
            labels = candidate;
        }
    }
    (labels, best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn und(n: usize, edges: &[(usize, usize)]) -> BinaryNetwork {
        BinaryNetwork::undirected_with_edges(n, edges).unwrap()
    }

    #[test]
    fn single_community_has_zero_modularity() {
        let g = und(4, &[(0, 1), (1, 2), (2, 3)]);
        assert!(modularity(&g, &[0, 0, 0, 0]).abs() < 1e-15);
    }

    #[test]
    fn two_triangles_split_cleanly() {
        let g = und(6, &[(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3)]);
        assert!((modularity(&g, &[0, 0, 0, 1, 1, 1]) - 0.5).abs() < 1e-15);
        let (labels, q) = detect_communities(&g);
        assert_eq!(labels, vec![0, 0, 0, 1, 1, 1]);
        assert!((q - 0.5).abs() < 1e-15);
    }

    #[test]
    fn edgeless_graph_stays_singleton() {
        let (labels, q) = detect_communities(&und(3, &[]));
        assert_eq!(labels, vec![0, 1, 2]);
        assert_eq!(q, 0.0);
    }

    #[test]
    fn barbell_found_after_aggregation() {
        // two K4 joined by one bridge
        let mut edges = vec![];
        for block in [0, 4] {
            for a in 0..4 {
                for b in a + 1..4 {
                    edges.push((block + a, block + b));
                }
            }
        }
        edges.push((3, 4));
        let g = und(8, &edges);
        let (labels, q) = detect_communities(&g);
        assert_eq!(labels, vec![0, 0, 0, 0, 1, 1, 1, 1]);
        assert!((q - modularity(&g, &labels)).abs() < 1e-15);
        assert!(q > 0.4);
    }

    #[test]
    fn restarts_escape_poor_first_pass() {
        // triangle 0-1-4 plus path 1-2-3-0; best split {0,1,4} {2,3} has Q = 1/9
        let g = und(5, &[(0, 1), (0, 3), (0, 4), (1, 2), (1, 4), (2, 3)]);
        let (labels, q) = detect_communities(&g);
        assert!((q - 1.0 / 9.0).abs() < 1e-12, "{q} {labels:?}");
        assert_eq!(detect_communities(&g), (labels, q));
    }
}
