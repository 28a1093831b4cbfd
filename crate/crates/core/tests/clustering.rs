use darcm::clustering::{
    average_friend_cc, average_interest_cc, clustering_summary, count_bowties, global_friend_cc,
    global_interest_cc, limit_average_friend_cc, local_interest_cc, Statistic,
};
use darcm::generator::generate_torus;
use darcm::marking::replicate_seed;
use darcm::stats::batch_ci;
use darcm::validation::compare_with_oracle;
use darcm::{ArcKind, Digraph, Metric, ModelParams, SampleMode, Seed, TorusSpec, Vertex};
use proptest::prelude::*;

fn digraph(n: usize, bits: &[bool]) -> Digraph {
    let mut arcs = Vec::new();
    for s in 0..n {
        for t in 0..n {
            if s != t && bits[s * n + t] {
                arcs.push((s, t));
            }
        }
    }
    Digraph::from_plain_arcs(n, &arcs).unwrap()
}

fn small_graph() -> impl Strategy<Value = Digraph> {
    (2usize..8).prop_flat_map(|n| prop::collection::vec(any::<bool>(), n * n).prop_map(move |b| digraph(n, &b)))
}

/// Same graph with vertex `i` renamed `perm[i]`.
fn relabel(g: &Digraph, perm: &[usize]) -> Digraph {
    let mut vertices: Vec<Vertex> = g.vertices().to_vec();
    for (i, v) in g.vertices().iter().enumerate() {
        vertices[perm[i]] = Vertex { id: perm[i], ..v.clone() };
    }
    let arcs: Vec<(usize, usize, ArcKind)> = g.arcs().map(|(s, a)| (perm[s], perm[a.target], a.kind)).collect();
    Digraph::from_arcs(vertices, &arcs, g.metric()).unwrap()
}

proptest! {
    #[test]
    fn fast_counters_match_enumeration(g in small_graph(), floor in 0.0f64..0.6) {
        let bad = compare_with_oracle(&g, &[0.0, floor]).unwrap();
        prop_assert!(bad.is_empty(), "{:?}", bad);
    }

    #[test]
    fn coefficients_stay_in_range(g in small_graph()) {
        let n = g.vertex_count();
        for x in 0..n {
            for y in 0..n {
                if x != y {
                    let v = local_interest_cc(&g, x, y).unwrap();
                    prop_assert!((0.0..=2.0).contains(&v));
                }
            }
        }
        prop_assert!((0.0..=1.0).contains(&average_friend_cc(&g)));
        prop_assert!((0.0..=1.0).contains(&global_friend_cc(&g)));
        prop_assert!((0.0..=2.0).contains(&average_interest_cc(&g)));
        prop_assert!((0.0..=2.0).contains(&global_interest_cc(&g)));
    }

    #[test]
    fn statistics_ignore_labels(seed in any::<u64>(), shuffle in any::<u64>()) {
        let p = ModelParams::finite(0.6, 0.5, 2.5, 0.5, 1).unwrap();
        let spec = TorusSpec::with_volume(300.0, 1).unwrap();
        let g = generate_torus(&p, &spec, SampleMode::PoissonCount, Seed(seed)).unwrap();
        let n = g.vertex_count();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut s = shuffle;
        for i in (1..n).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            perm.swap(i, (s >> 33) as usize % (i + 1));
        }
        let h = relabel(&g, &perm);
        prop_assert_eq!(count_bowties(&g, 0.0).unwrap(), count_bowties(&h, 0.0).unwrap());
        prop_assert_eq!(global_friend_cc(&g), global_friend_cc(&h));
        prop_assert_eq!(global_interest_cc(&g), global_interest_cc(&h));
        prop_assert!((average_friend_cc(&g) - average_friend_cc(&h)).abs() < 1e-12);
        prop_assert!((average_interest_cc(&g) - average_interest_cc(&h)).abs() < 1e-12);
    }
}

#[test]
fn bowtie_counts_shrink_with_the_floor() {
    let p = ModelParams::finite(0.5, 0.6, 2.5, 0.3, 1).unwrap();
    let spec = TorusSpec::with_volume(2000.0, 1).unwrap();
    let g = generate_torus(&p, &spec, SampleMode::PoissonCount, Seed(21)).unwrap();
    let mut last = (u64::MAX, u64::MAX);
    for floor in [0.0, 0.1, 0.3, 0.6, 0.9] {
        let (open, closed) = count_bowties(&g, floor).unwrap();
        assert!(closed <= open);
        assert!(open <= last.0 && closed <= last.1);
        last = (open, closed);
    }
    let summary = clustering_summary(&g, Some(p));
    let gi = summary.iter().find(|r| r.statistic == Statistic::GlobalInterest).unwrap();
    assert_eq!((gi.open, gi.closed), count_bowties(&g, 0.0).unwrap());
    assert_eq!(gi.value, global_interest_cc(&g));
}

#[test]
fn empty_and_euclidean_graphs() {
    let g = Digraph::from_arcs(vec![], &[], Metric::Euclidean).unwrap();
    assert_eq!(average_friend_cc(&g), 0.0);
    assert_eq!(global_interest_cc(&g), 0.0);
    assert!(count_bowties(&g, 1.0).is_err());
}

/// The limiting average friend coefficient against finite graphs at a stable parameter pair.
#[test]
fn friend_limit_matches_large_graphs() {
    let p = ModelParams::finite(0.5, 0.3, 2.5, 0.5, 1).unwrap();
    let lim = limit_average_friend_cc(&p, 100_000, Seed(1)).unwrap();
    let spec = TorusSpec::with_volume(20000.0, 1).unwrap();
    let xs: Vec<f64> = (0..10)
        .map(|r| average_friend_cc(&generate_torus(&p, &spec, SampleMode::PoissonCount, replicate_seed(Seed(3), r)).unwrap()))
        .collect();
    let sim = batch_ci(&xs).unwrap();
    let half = |i: &darcm::stats::Interval| (i.ci_high - i.ci_low) / 2.0;
    let tol = 2.0 * (half(&sim).powi(2) + half(&lim.interval).powi(2)).sqrt();
    assert!(
        (sim.mean - lim.interval.mean).abs() < tol,
        "simulation {:.5} vs limit {:.5} (tolerance {tol:.5})",
        sim.mean,
        lim.interval.mean
    );
    assert!(lim.acceptance_rate > 0.0 && lim.acceptance_rate <= 1.0);
}
