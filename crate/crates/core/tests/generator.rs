use std::collections::BTreeSet;

use darcm::degrees::{empirical_degree_hist, mean_outdegree, mu_old, mu_rec};
use darcm::generator::{
    as_undirected, generate_torus, grow_sequential, grow_vertices, palm_implicit, palm_means,
    sample_palm_out_neighborhood, ImplicitGraph,
};
use darcm::marking::{replicate_seed, sample_vertices};
use darcm::model::rescale_h;
use darcm::{ArcKind, Digraph, Direction, ModelParams, SampleMode, Seed, TorusSpec};
use proptest::prelude::*;

fn arc_set(g: &Digraph) -> BTreeSet<(usize, usize, ArcKind)> {
    g.arcs().map(|(s, a)| (s, a.target, a.kind)).collect()
}

fn torus(p: &ModelParams, volume: f64, seed: u64) -> Digraph {
    let spec = TorusSpec::with_volume(volume, p.dim()).unwrap();
    generate_torus(p, &spec, SampleMode::PoissonCount, Seed(seed)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn larger_beta_adds_arcs(seed in any::<u64>(), beta in 0.1f64..1.0, f in 1.0f64..3.0, dim in 1usize..3) {
        let p = ModelParams::finite(beta, 0.4, 2.5, 0.7, dim).unwrap();
        let small = arc_set(&torus(&p, 200.0, seed));
        let big = arc_set(&torus(&p.with_beta(beta * f).unwrap(), 200.0, seed));
        prop_assert!(small.is_subset(&big));
    }

    #[test]
    fn larger_gamma_removes_only_reciprocal_arcs(seed in any::<u64>(), g1 in 0.0f64..1.0, dg in 0.0f64..2.0) {
        let p = ModelParams::finite(0.6, 0.4, 2.0, g1, 2).unwrap();
        let a = arc_set(&torus(&p, 200.0, seed));
        let b = arc_set(&torus(&p.with_big_gamma(g1 + dg).unwrap(), 200.0, seed));
        prop_assert!(b.is_subset(&a));
        let fwd = |s: &BTreeSet<(usize, usize, ArcKind)>| {
            s.iter().filter(|x| x.2 == ArcKind::Forward).cloned().collect::<Vec<_>>()
        };
        prop_assert_eq!(fwd(&a), fwd(&b));
    }

    #[test]
    fn zero_reciprocity_exponent_gives_symmetric_graphs(seed in any::<u64>(), dim in 1usize..3) {
        let p = ModelParams::finite(0.5, 0.5, 3.0, 0.0, dim).unwrap();
        let g = torus(&p, 300.0, seed);
        for (s, a) in g.arcs() {
            prop_assert!(g.has_arc(a.target, s));
        }
    }

    #[test]
    fn generated_graphs_are_valid_and_reproducible(seed in any::<u64>(), dim in 1usize..4) {
        let p = ModelParams::finite(0.4, 0.35, 2.5, 1.0, dim).unwrap();
        let g = torus(&p, 150.0, seed);
        g.check_invariants().unwrap();
        prop_assert_eq!(arc_set(&g), arc_set(&torus(&p, 150.0, seed)));
        for (s, a) in g.arcs() {
            let (vs, vt) = (&g.vertices()[s], &g.vertices()[a.target]);
            match a.kind {
                ArcKind::Forward => prop_assert!(vs.birth > vt.birth),
                ArcKind::Reciprocal => {
                    prop_assert!(vs.birth < vt.birth);
                    prop_assert!(g.has_arc(a.target, s));
                }
            }
        }
    }

    #[test]
    fn undirected_closure_is_idempotent(seed in any::<u64>()) {
        let p = ModelParams::finite(0.5, 0.4, 2.5, 1.5, 1).unwrap();
        let u = as_undirected(&torus(&p, 200.0, seed));
        prop_assert_eq!(arc_set(&u), arc_set(&as_undirected(&u)));
        for (s, a) in u.arcs() {
            prop_assert!(u.has_arc(a.target, s));
        }
    }

    #[test]
    fn arcs_ignore_the_other_vertices(seed in any::<u64>(), keep in prop::collection::vec(any::<bool>(), 64)) {
        let p = ModelParams::finite(0.8, 0.4, 2.5, 0.5, 1).unwrap();
        let spec = TorusSpec::with_volume(64.0, 1).unwrap();
        let all = sample_vertices(Seed(seed), &spec, SampleMode::FixedCount(64)).unwrap();
        let sub: Vec<_> = all.iter().zip(&keep).filter(|(_, &k)| k).map(|(v, _)| v.clone()).collect();
        let full = ImplicitGraph::new(p, spec.side(), all.clone(), Seed(seed)).unwrap();
        let part = ImplicitGraph::new(p, spec.side(), sub.clone(), Seed(seed)).unwrap();
        for i in 0..sub.len() {
            for j in 0..sub.len() {
                if i != j {
                    prop_assert_eq!(part.arcs_between(i, j), full.arcs_between(sub[i].id, sub[j].id));
                }
            }
        }
    }
}

#[test]
fn tiny_graphs_have_no_arcs() {
    let p = ModelParams::finite(1.0, 0.5, 2.0, 0.5, 2).unwrap();
    let spec = TorusSpec::with_volume(1.0, 2).unwrap();
    for n in [0, 1] {
        let g = generate_torus(&p, &spec, SampleMode::FixedCount(n), Seed(3)).unwrap();
        assert_eq!(g.vertex_count(), n as usize);
        assert_eq!(g.arc_count(), 0);
    }
}

#[test]
fn dimension_mismatch_is_rejected() {
    let p = ModelParams::finite(1.0, 0.5, 2.0, 0.5, 2).unwrap();
    let spec = TorusSpec::with_volume(10.0, 1).unwrap();
    assert!(generate_torus(&p, &spec, SampleMode::PoissonCount, Seed(1)).is_err());
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    (m, xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0))
}

/// Mean root degrees in a finite torus against the Palm intensities.
#[test]
fn palm_root_degrees_match_intensities() {
    let p = ModelParams::finite(0.4, 0.35, 2.5, 1.0, 1).unwrap();
    let spec = TorusSpec::with_volume(4000.0, 1).unwrap();
    let u = 0.3;
    let reps = 400;
    let (mut outs, mut ins) = (Vec::new(), Vec::new());
    for r in 0..reps {
        let (g, root) = palm_implicit(&p, &spec, replicate_seed(Seed(99), r), Some(u)).unwrap();
        outs.push(g.out_neighbors(root).len() as f64);
        ins.push(g.in_neighbors(root).len() as f64);
    }
    let (out_f, out_r) = palm_means(&p, u, darcm::Direction::Out);
    let (in_f, in_r) = palm_means(&p, u, darcm::Direction::In);
    assert!((out_f - mu_old(&p)).abs() < 1e-12);
    assert!((out_r - mu_rec(&p, u).unwrap()).abs() < 1e-12);
    for (xs, want) in [(&outs, out_f + out_r), (&ins, in_f + in_r)] {
        let (m, _) = mean_var(xs);
        let tol = 4.0 * (want / reps as f64).sqrt();
        assert!((m - want).abs() < tol, "mean {m} vs {want} (tol {tol})");
    }
}

/// A root born at the end has no younger vertices, so its out-degree is Poisson with mean `mu_old`.
#[test]
fn last_born_root_has_poisson_outdegree() {
    let p = ModelParams::finite(0.5, 0.4, 2.0, 0.5, 1).unwrap();
    let u = 1.0 - 1e-9;
    let spec = TorusSpec::with_volume(3000.0, 1).unwrap();
    let xs: Vec<f64> = (0..600)
        .map(|r| {
            let (g, root) = palm_implicit(&p, &spec, replicate_seed(Seed(5), r), Some(u)).unwrap();
            g.out_neighbors(root).len() as f64
        })
        .collect();
    let (m, v) = mean_var(&xs);
    let want = mu_old(&p);
    assert!((m - want).abs() < 4.0 * (want / 600.0).sqrt(), "mean {m} vs {want}");
    // dispersion index of a Poisson sample has sd about sqrt(2/(n-1))
    assert!((v / m - 1.0).abs() < 4.0 * (2.0f64 / 599.0).sqrt(), "dispersion {}", v / m);
    let nb = sample_palm_out_neighborhood(&p, u, Seed(8)).unwrap();
    assert_eq!(nb.count(ArcKind::Reciprocal), 0);
}

#[test]
fn growing_model_arrivals() {
    let t = 5000.0;
    let v = grow_vertices(2, t, Seed(4)).unwrap();
    let n = v.len() as f64;
    assert!((n - t).abs() < 4.0 * t.sqrt(), "{n} arrivals by time {t}");
    assert!(v.windows(2).all(|w| w[0].birth < w[1].birth));
    assert!(v.iter().all(|x| x.birth > 0.0 && x.birth < t));
    let spec = TorusSpec::with_volume(t, 2).unwrap();
    for x in &v {
        let (loc, b) = rescale_h(&x.location, x.birth, t).unwrap();
        assert!(spec.contains(&loc));
        assert!(b > 0.0 && b < 1.0);
    }
}

#[test]
fn growing_model_has_the_torus_mean_degree() {
    let p = ModelParams::finite(0.4, 0.35, 2.5, 1.0, 1).unwrap();
    let g = grow_sequential(&p, 20000.0, Seed(17)).unwrap();
    g.check_invariants().unwrap();
    let ratio = g.arc_count() as f64 / g.vertex_count() as f64;
    let want = mean_outdegree(&p);
    assert!((ratio / want - 1.0).abs() < 0.05, "{ratio} vs {want}");
}

// Degrees inside one graph are spatially dependent, so the comparison runs over
// independent replicates: per-graph frequencies of small degrees, Welch z-scores.
#[test]
fn growing_and_torus_degree_frequencies_agree_across_replicates() {
    let p = ModelParams::finite(0.4, 0.35, 2.5, 1.0, 1).unwrap();
    let reps = 30u64;
    let freqs = |g: &Digraph, dir: Direction| -> Vec<f64> {
        let h = empirical_degree_hist(g, dir);
        (0..6).map(|k| h.count(k) as f64 / h.total as f64).collect()
    };
    for dir in [Direction::Out, Direction::In] {
        let grown: Vec<Vec<f64>> =
            (0..reps).map(|r| freqs(&grow_sequential(&p, 2000.0, replicate_seed(Seed(5), r)).unwrap(), dir)).collect();
        let flat: Vec<Vec<f64>> = (0..reps).map(|r| freqs(&torus(&p, 2000.0, 1000 + r), dir)).collect();
        for k in 0..6 {
            let stats = |rows: &[Vec<f64>]| {
                let m = rows.iter().map(|f| f[k]).sum::<f64>() / reps as f64;
                let v = rows.iter().map(|f| (f[k] - m).powi(2)).sum::<f64>() / (reps - 1) as f64;
                (m, v)
            };
            let ((ma, va), (mb, vb)) = (stats(&grown), stats(&flat));
            let z = (ma - mb) / ((va + vb) / reps as f64).sqrt();
            assert!(z.abs() < 4.0, "{dir:?} degree {k}: {ma:.4} vs {mb:.4}, z = {z:.2}");
        }
    }
}
