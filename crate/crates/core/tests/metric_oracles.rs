mod common;

use common::*;
use entrenet_core::netanalysis::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn arb_graph() -> impl Strategy<Value = BinaryNetwork> {
    (2usize..=8).prop_flat_map(|n| {
        proptest::collection::vec(any::<bool>(), n * n).prop_map(move |bits| {
            let nodes = nodes(n);
            BinaryNetwork::from_adjacency(nodes, bits).unwrap()
        })
    })
}

fn close(a: Option<f64>, b: Option<f64>) -> bool {
    match (a, b) {
        (Some(x), Some(y)) => (x - y).abs() <= 1e-9,
        (None, None) => true,
        _ => false,
    }
}

proptest! {
    #[test]
    fn metrics_match_brute_force(net in arb_graph()) {
        prop_assert!((density(&net) - ref_density(&net)).abs() <= 1e-12);
        prop_assert!(close(avg_shortest_path(&net).mean, ref_avg_path(&net)));
        prop_assert!((clustering_transitivity(&net) - ref_transitivity(&net)).abs() <= 1e-9);
        prop_assert!(close(degree_assortativity(&net), ref_assortativity(&net)));
    }

    #[test]
    fn pagerank_matches_linear_solve(net in arb_graph()) {
        let pr: Vec<f64> = pagerank(&net, DEFAULT_DAMPING, DEFAULT_TOLERANCE).unwrap();
        let exact = ref_pagerank(&net, DEFAULT_DAMPING);
        for (a, b) in pr.iter().zip(&exact) {
            prop_assert!((a - b).abs() <= 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn pagerank_is_permutation_equivariant(net in arb_graph(), shift in 1usize..8) {
        let n = net.n();
        let perm: Vec<usize> = (0..n).map(|i| (i + shift) % n).collect();
        let moved: Vec<_> = net.edges().iter().map(|&(i, j)| (perm[i], perm[j])).collect();
        let other = BinaryNetwork::with_edges(n, &moved).unwrap();
        let a: Vec<f64> = pagerank(&net, 0.85, 1e-13).unwrap();
        let b: Vec<f64> = pagerank(&other, 0.85, 1e-13).unwrap();
        for i in 0..n {
            prop_assert!((a[i] - b[perm[i]]).abs() <= 1e-10);
        }
    }

    #[test]
    fn modularity_formula_and_louvain_bound(net in arb_graph()) {
        let (labels, q) = detect_communities(&net);
        prop_assert!((q - ref_modularity(&net, &labels)).abs() <= 1e-12);
        let best = ref_best_modularity(&net);
        prop_assert!(q <= best + 1e-9);
        prop_assert!(best - q <= 0.05, "gap {}", best - q);
    }

    #[test]
    fn ccdf_matches_counting(net in arb_graph()) {
        let pr: Vec<f64> = pagerank(&net, 0.85, 1e-12).unwrap();
        let t = degree_ccdf(&net, &pr);
        let total: Vec<f64> = net.in_degrees().iter().zip(net.out_degrees()).map(|(a, b)| (a + b) as f64).collect();
        for (table, values) in [(&t.total_degree, total), (&t.pagerank, pr)] {
            let expect = ref_ccdf(&values);
            prop_assert_eq!(table.len(), expect.len());
            for (p, (v, f)) in table.iter().zip(expect) {
                prop_assert_eq!(p.value, v);
                prop_assert!((p.fraction - f).abs() <= 1e-15);
            }
        }
    }
}

#[test]
fn truncation_keeps_top_fifth() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for n in [5, 10, 25] {
        let w = random_support_matrix(&mut rng, n, &(0..n).map(|i| (i, i)).collect());
        let m = entrenet_core::FlowMatrix64::new(nodes(n), w).unwrap();
        let (net, t) = truncate_percentile(&m, 80.0).unwrap();
        let expect = 0.2 * t.positive_links as f64;
        assert!((net.edge_count() as f64 - expect).abs() <= 1.0);
    }
}

#[test]
fn relative_threshold_hits_target_within_a_link() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let n = 20;
    let w = random_support_matrix(&mut rng, n, &(0..n).map(|i| (i, i)).collect());
    let m = entrenet_core::FlowMatrix64::new(nodes(n), w).unwrap();
    let (net, fit) = fit_relative_threshold(&m, 0.488).unwrap();
    assert!((net.edge_count() as f64 - fit.target_links).abs() <= 1.0);
}
