//! Complementary cumulative distribution tables.

use serde::Serialize;

use super::network::BinaryNetwork;

/// One step of an empirical CCDF: the fraction of observations `>= value`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CcdfPoint {
    pub value: f64,
    pub fraction: f64,
}

/// Empirical CCDF `P(X >= x)` at each distinct observed value, ascending.
pub fn ccdf(values: &[f64]) -> Vec<CcdfPoint> {
    let mut sorted: Vec<f64> = values.iter().copied().filter(|v| !v.is_nan()).collect();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len() as f64;
    let mut out: Vec<CcdfPoint> = Vec::new();
    for (i, &v) in sorted.iter().enumerate() {
        if out.last().is_none_or(|p| p.value != v) {
            out.push(CcdfPoint {
                value: v,
                fraction: (sorted.len() - i) as f64 / n,
            });
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CcdfTables {
    pub in_degree: Vec<CcdfPoint>,
    pub out_degree: Vec<CcdfPoint>,
    pub total_degree: Vec<CcdfPoint>,
    pub pagerank: Vec<CcdfPoint>,
}

fn as_f64(xs: &[usize]) -> Vec<f64> {
    xs.iter().map(|&x| x as f64).collect()
}

pub fn degree_ccdf(net: &BinaryNetwork, pagerank: &[f64]) -> CcdfTables {
    let ins = net.in_degrees();
    let outs = net.out_degrees();
    let total: Vec<usize> = ins.iter().zip(&outs).map(|(a, b)| a + b).collect();
    CcdfTables {
        in_degree: ccdf(&as_f64(&ins)),
        out_degree: ccdf(&as_f64(&outs)),
        total_degree: ccdf(&as_f64(&total)),
        pagerank: ccdf(pagerank),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regular_graph_single_step() {
        let edges: Vec<_> = (0..5).map(|i| (i, (i + 1) % 5)).collect();
        let net = BinaryNetwork::with_edges(5, &edges).unwrap();
        let t = degree_ccdf(&net, &[0.2; 5]);
        assert_eq!(t.out_degree, vec![CcdfPoint { value: 1.0, fraction: 1.0 }]);
        assert_eq!(t.pagerank.len(), 1);
    }

    #[test]
    fn star_two_steps() {
        let net = BinaryNetwork::undirected_with_edges(5, &[(0, 1), (0, 2), (0, 3), (0, 4)]).unwrap();
        let t = degree_ccdf(&net, &[0.2; 5]);
        assert_eq!(
            t.in_degree,
            vec![
                CcdfPoint { value: 1.0, fraction: 1.0 },
                CcdfPoint { value: 4.0, fraction: 0.2 }
            ]
        );
    }

    #[test]
    fn empty_input() {
        assert!(ccdf(&[]).is_empty());
    }
}
