//! Shared generators and brute-force reference implementations for the
//! integration tests. The references are deliberately naive and share no code
//! with the library.

#![allow(dead_code)]

use std::collections::BTreeSet;

use entrenet_core::model::{FlowMatrix, GroupConstraint, Marginals, NodeInfo, ReconstructionProblem};
use entrenet_core::netanalysis::BinaryNetwork;
use rand::Rng;

pub fn nodes(n: usize) -> Vec<NodeInfo> {
    (0..n).map(|k| NodeInfo::generic(format!("v{k}"))).collect()
}

/// Random positive matrix on the complement of `zeros`; its sums are strictly feasible marginals.
pub fn random_support_matrix<R: Rng>(rng: &mut R, n: usize, zeros: &BTreeSet<(usize, usize)>) -> Vec<f64> {
    (0..n * n)
        .map(|k| {
            if zeros.contains(&(k / n, k % n)) {
                0.0
            } else {
                rng.gen_range(0.05..1.0)
            }
        })
        .collect()
}

pub fn marginals_of(n: usize, w: &[f64]) -> Marginals<f64> {
    let m = FlowMatrix::new(nodes(n), w.to_vec()).unwrap();
    Marginals::from_matrix(&m).unwrap()
}

/// Random balanced marginals without zero cells, strengths spanning two decades.
pub fn random_balanced<R: Rng>(rng: &mut R, n: usize) -> Marginals<f64> {
    let out: Vec<f64> = (0..n).map(|_| 10f64.powf(rng.gen_range(0.0..2.0))).collect();
    let raw: Vec<f64> = (0..n).map(|_| 10f64.powf(rng.gen_range(0.0..2.0))).collect();
    let scale = out.iter().sum::<f64>() / raw.iter().sum::<f64>();
    let mut inn: Vec<f64> = raw.iter().map(|x| x * scale).collect();
    // absorb rounding so the totals agree to the last bit
    let diff = out.iter().sum::<f64>() - inn.iter().sum::<f64>();
    inn[0] += diff;
    Marginals::new(out, inn).unwrap()
}

/// A problem with at most three free dimensions.
pub fn random_small_problem<R: Rng>(rng: &mut R, beta: f64) -> ReconstructionProblem<f64> {
    match rng.gen_range(0..3) {
        0 => {
            let k = rng.gen_range(1..=3);
            let zeros: BTreeSet<_> = (0..k).map(|i| (i, i)).collect();
            let w = random_support_matrix(rng, 3, &zeros);
            ReconstructionProblem::new(nodes(3), marginals_of(3, &w), vec![], zeros, beta, false).unwrap()
        }
        1 => {
            let mut zeros: BTreeSet<_> = (0..4).map(|i| (i, i)).collect();
            let extra = rng.gen_range(2..=3);
            while zeros.len() < 4 + extra {
                let (i, j) = (rng.gen_range(0..4), rng.gen_range(0..4));
                if i != j {
                    zeros.insert((i, j));
                }
            }
            let w = random_support_matrix(rng, 4, &zeros);
            ReconstructionProblem::new(nodes(4), marginals_of(4, &w), vec![], zeros, beta, true).unwrap()
        }
        _ => {
            let zeros: BTreeSet<_> = [(0, 0)].into_iter().collect();
            let w = random_support_matrix(rng, 3, &zeros);
            let amount = w[2] + w[5];
            let group = GroupConstraint {
                source: vec![0, 1],
                target: vec![2],
                amount,
            };
            ReconstructionProblem::new(nodes(3), marginals_of(3, &w), vec![group], zeros, beta, false).unwrap()
        }
    }
}

pub fn random_graph<R: Rng>(rng: &mut R, max_n: usize) -> BinaryNetwork {
    let n = rng.gen_range(2..=max_n);
    let p: f64 = rng.gen_range(0.1..0.7);
    let edges: Vec<_> = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .filter(|&(i, j)| i != j)
        .filter(|_| rng.gen_bool(p))
        .collect();
    BinaryNetwork::with_edges(n, &edges).unwrap()
}

fn sym(net: &BinaryNetwork) -> Vec<Vec<bool>> {
    let n = net.n();
    (0..n)
        .map(|i| (0..n).map(|j| i != j && (net.has_edge(i, j) || net.has_edge(j, i))).collect())
        .collect()
}

pub fn ref_density(net: &BinaryNetwork) -> f64 {
    let n = net.n();
    let mut ones = 0;
    for i in 0..n {
        for j in 0..n {
            if i != j && net.has_edge(i, j) {
                ones += 1;
            }
        }
    }
    ones as f64 / (n * (n - 1)) as f64
}

/// Floyd-Warshall on the undirected projection; mean over connected ordered pairs.
pub fn ref_avg_path(net: &BinaryNetwork) -> Option<f64> {
    let a = sym(net);
    let n = a.len();
    let inf = f64::INFINITY;
    let mut d: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 0.0 } else if a[i][j] { 1.0 } else { inf }).collect())
        .collect();
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if d[i][k] + d[k][j] < d[i][j] {
                    d[i][j] = d[i][k] + d[k][j];
                }
            }
        }
    }
    let finite: Vec<f64> = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .filter(|&(i, j)| i != j)
        .map(|(i, j)| d[i][j])
        .filter(|x| x.is_finite())
        .collect();
    (!finite.is_empty()).then(|| finite.iter().sum::<f64>() / finite.len() as f64)
}

/// Enumerates node triples: each triangle closes three connected triples.
pub fn ref_transitivity(net: &BinaryNetwork) -> f64 {
    let a = sym(net);
    let n = a.len();
    let (mut triangles, mut triples) = (0.0, 0.0);
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let e = [a[i][j], a[j][k], a[i][k]];
                let count = e.iter().filter(|&&x| x).count();
                if count == 3 {
                    triangles += 1.0;
                    triples += 3.0;
                } else if count == 2 {
                    triples += 1.0;
                }
            }
        }
    }
    if triples == 0.0 {
        0.0
    } else {
        3.0 * triangles / triples
    }
}

pub fn ref_assortativity(net: &BinaryNetwork) -> Option<f64> {
    let a = sym(net);
    let n = a.len();
    let deg: Vec<f64> = a.iter().map(|r| r.iter().filter(|&&x| x).count() as f64).collect();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if a[i][j] {
                xs.push(deg[i]);
                ys.push(deg[j]);
            }
        }
    }
    if xs.is_empty() {
        return None;
    }
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let vx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let vy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if vx < 1e-12 || vy < 1e-12 {
        return None;
    }
    let cov: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    Some(cov / (vx * vy).sqrt())
}

/// `Q = 1/2m sum_ij (A_ij - k_i k_j / 2m) [c_i = c_j]`.
pub fn ref_modularity(net: &BinaryNetwork, part: &[usize]) -> f64 {
    let a = sym(net);
    let n = a.len();
    let deg: Vec<f64> = a.iter().map(|r| r.iter().filter(|&&x| x).count() as f64).collect();
    let two_m: f64 = deg.iter().sum();
    if two_m == 0.0 {
        return 0.0;
    }
    let mut q = 0.0;
    for i in 0..n {
        for j in 0..n {
            if part[i] == part[j] {
                q += if a[i][j] { 1.0 } else { 0.0 } - deg[i] * deg[j] / two_m;
            }
        }
    }
    q / two_m
}

/// Best modularity over all set partitions (restricted growth strings).
pub fn ref_best_modularity(net: &BinaryNetwork) -> f64 {
    let n = net.n();
    let mut best = f64::NEG_INFINITY;
    let mut part = vec![0usize; n];
    fn rec(k: usize, max: usize, part: &mut Vec<usize>, net: &BinaryNetwork, best: &mut f64) {
        if k == part.len() {
            *best = best.max(ref_modularity(net, part));
            return;
        }
        for c in 0..=max + 1 {
            part[k] = c;
            rec(k + 1, max.max(c), part, net, best);
        }
    }
    if n == 0 {
        return 0.0;
    }
    rec(1, 0, &mut part, net, &mut best);
    best
}

/// Solves `(I - d M) x = (1 - d) / n` by Gaussian elimination, with dangling
/// columns of `M` replaced by the uniform distribution.
pub fn ref_pagerank(net: &BinaryNetwork, d: f64) -> Vec<f64> {
    let n = net.n();
    let out: Vec<usize> = (0..n).map(|i| (0..n).filter(|&j| net.has_edge(i, j)).count()).collect();
    let mut a = vec![vec![0.0; n + 1]; n];
    for j in 0..n {
        for i in 0..n {
            let m_ij = if out[j] == 0 {
                1.0 / n as f64
            } else if net.has_edge(j, i) {
                1.0 / out[j] as f64
            } else {
                0.0
            };
            a[i][j] = if i == j { 1.0 } else { 0.0 } - d * m_ij;
        }
        a[j][n] = (1.0 - d) / n as f64;
    }
    for c in 0..n {
        let piv = (c..n).max_by(|&x, &y| a[x][c].abs().total_cmp(&a[y][c].abs())).unwrap();
        a.swap(c, piv);
        for r in 0..n {
            if r != c {
                let f = a[r][c] / a[c][c];
                for k in c..=n {
                    a[r][k] -= f * a[c][k];
                }
            }
        }
    }
    (0..n).map(|i| a[i][n] / a[i][i]).collect()
}

/// `(value, fraction of values >= value)` for each distinct value, by counting.
pub fn ref_ccdf(values: &[f64]) -> Vec<(f64, f64)> {
    let distinct: BTreeSet<u64> = values.iter().map(|v| v.to_bits()).collect();
    let mut xs: Vec<f64> = distinct.into_iter().map(f64::from_bits).collect();
    xs.sort_by(|a, b| a.total_cmp(b));
    xs.iter()
        .map(|&x| (x, values.iter().filter(|&&v| v >= x).count() as f64 / values.len() as f64))
        .collect()
}
