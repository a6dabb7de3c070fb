//! Classic metrics on the undirected projection of a binary network.

use std::collections::VecDeque;

use super::network::BinaryNetwork;

/// Mean shortest-path length over ordered pairs with a path between them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathLength {
    /// `None` when no pair of distinct nodes is connected.
    pub mean: Option<f64>,
    pub reachable_pairs: usize,
    /// Ordered pairs left out of the mean because they lie in different components.
    pub disconnected_pairs: usize,
}

pub fn avg_shortest_path(net: &BinaryNetwork) -> PathLength {
    let n = net.n();
    let mut total = 0u64;
    let mut pairs = 0usize;
    let mut dist = vec![usize::MAX; n];
    let mut queue = VecDeque::new();
    for s in 0..n {
        dist.iter_mut().for_each(|d| *d = usize::MAX);
        dist[s] = 0;
        queue.push_back(s);
        while let Some(u) = queue.pop_front() {
            for &v in net.neighbors(u) {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    total += dist[v] as u64;
                    pairs += 1;
                    queue.push_back(v);
                }
            }
        }
    }
    PathLength {
        mean: (pairs > 0).then(|| total as f64 / pairs as f64),
        reachable_pairs: pairs,
        disconnected_pairs: n * n.saturating_sub(1) - pairs,
    }
}

/// Global transitivity `3 * triangles / connected triples`; zero without triples.
pub fn clustering_transitivity(net: &BinaryNetwork) -> f64 {
    let n = net.n();
    let mut closed = 0u64;
    let mut triples = 0u64;
    let mut mark = vec![false; n];
    for v in 0..n {
        let nb = net.neighbors(v);
        let d = nb.len() as u64;
        triples += d * d.saturating_sub(1) / 2;
        for &a in nb {
            mark[a] = true;
        }
        // each triangle through v counted once per unordered neighbour pair
        for &a in nb {
            closed += net.neighbors(a).iter().filter(|&&b| b > a && mark[b]).count() as u64;
        }
        for &a in nb {
            mark[a] = false;
        }
    }
    if triples == 0 {
        0.0
    } else {
        closed as f64 / triples as f64
    }
}

/// Pearson correlation of the degrees at either end of each undirected edge,
/// taken in both orientations. `None` when the degrees have no variance.
pub fn degree_assortativity(net: &BinaryNetwork) -> Option<f64> {
    let deg = net.undirected_degrees();
    let edges = net.undirected_edges();
    if edges.is_empty() {
        return None;
    }
    let m = (2 * edges.len()) as f64;
    let (mut sx, mut sxx, mut sxy) = (0.0, 0.0, 0.0);
    for &(a, b) in &edges {
        let (x, y) = (deg[a] as f64, deg[b] as f64);
        sx += x + y;
        sxx += x * x + y * y;
        sxy += 2.0 * x * y;
    }
    let mean = sx / m;
    let var = sxx / m - mean * mean;
    if var <= 1e-12 * (1.0 + mean * mean) {
        return None;
    }
    Some((sxy / m - mean * mean) / var)
}
