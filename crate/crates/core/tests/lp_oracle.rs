mod common;

use common::{brute_maximal_stable_sets, floyd_warshall, graph, oracle_fractional_chromatic, random_corpus};
use graphmix::graph::all_pairs_distances;
use graphmix::partitions::{
    exact_fractional_chromatic, maximal_stable_sets, rational, validate_partition, weight_sum, Rational,
};

#[test]
fn oracle_agrees_on_named_graphs() {
    let cases = [
        ("cycle:5", 2, Rational::new(5.into(), 2.into())),
        ("cycle:7", 3, Rational::new(7.into(), 2.into())),
        ("complete:4", 1, rational(1)),
        ("complete:4", 2, rational(4)),
        ("path:9", 3, rational(3)),
        ("grid:3x3", 2, rational(2)),
        ("edgeless:6", 3, rational(1)),
    ];
    for (spec, d, expected) in cases {
        let g = graph(spec);
        assert_eq!(oracle_fractional_chromatic(&g, d), expected, "oracle on {spec} d={d}");
        let (value, fam) = exact_fractional_chromatic(&g, d, 16).unwrap();
        assert_eq!(value, expected, "solver on {spec} d={d}");
        assert_eq!(weight_sum(&fam), value);
    }
}

#[test]
fn solver_matches_oracle_on_random_corpus() {
    for (i, g) in random_corpus().iter().enumerate() {
        for d in 1..=3 {
            let oracle = oracle_fractional_chromatic(g, d);
            let (value, fam) = exact_fractional_chromatic(g, d, 16).unwrap();
            assert_eq!(value, oracle, "graph {i} d={d}: {}", g.to_edge_list());
            let report = validate_partition(g, &fam).unwrap();
            assert!(report.valid, "graph {i} d={d}: {:?}", report.violations);
            assert_eq!(report.weight_sum, value);
        }
    }
}

#[test]
fn bron_kerbosch_matches_subset_scan() {
    for g in random_corpus() {
        for d in 1..=3u32 {
            let h = if d == 1 {
                graphmix::graph::Graph::edgeless(g.order())
            } else {
                graphmix::graph::power_graph(&g, d - 1).unwrap()
            };
            let mut fast: Vec<u32> = maximal_stable_sets(&h, 10_000)
                .unwrap()
                .iter()
                .map(|s| s.iter().map(|&v| 1u32 << v).sum())
                .collect();
            let mut slow = brute_maximal_stable_sets(&g, d);
            fast.sort_unstable();
            slow.sort_unstable();
            assert_eq!(fast, slow);
        }
    }
}

#[test]
fn bfs_distances_match_floyd_warshall() {
    for g in random_corpus() {
        let fw = floyd_warshall(&g);
        for row in all_pairs_distances(&g).unwrap() {
            for (v, &expect) in fw[row.source].iter().enumerate() {
                let got = row.get(v).value().unwrap_or(u32::MAX);
                assert_eq!(got, expect);
            }
        }
    }
}
