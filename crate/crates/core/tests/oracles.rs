mod common;

use common::*;
use essmetric::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn ends(s: NodeId, t: NodeId) -> FamilySpec {
    FamilySpec::connecting(NodeSet::singleton(s), NodeSet::singleton(t))
}

#[test]
fn p2_modulus_is_effective_conductance() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..8 {
        let n = rng.gen_range(3..30);
        let g = random_connected(&mut rng, n, n / 2, None, None);
        let (s, t) = (0, n - 1);
        let want = effective_conductance(&g, s, t);
        let got = p_modulus(&g, &ends(s, t), 2.0, &ModulusParams::with_tol(1e-9)).unwrap();
        assert!(
            (got.value - want).abs() <= 1e-6 * want,
            "{} vs {want}",
            got.value
        );
    }
}

#[test]
fn weighted_p2_modulus_is_effective_conductance() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..5 {
        let g = random_connected(&mut rng, 12, 8, Some((0.5, 2.0)), Some((0.2, 3.0)));
        let want = effective_conductance(&g, 3, 9);
        let got = p_modulus(&g, &ends(3, 9), 2.0, &ModulusParams::with_tol(1e-9)).unwrap();
        assert!(
            (got.value - want).abs() <= 1e-6 * want,
            "{} vs {want}",
            got.value
        );
    }
}

#[test]
fn single_path_matches_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let k = 6;
    let len: Vec<f64> = (0..k).map(|_| rng.gen_range(0.2..2.0)).collect();
    let mu: Vec<f64> = (0..k).map(|_| rng.gen_range(0.2..2.0)).collect();
    let nodes = (0..=k)
        .map(|id| Node {
            id,
            pos: None,
            mu: 1.0,
        })
        .collect();
    let edges = (0..k)
        .map(|i| Edge {
            u: i,
            v: i + 1,
            len: len[i],
            mu: mu[i],
        })
        .collect();
    let g = MetricMeasureGraph::new(nodes, edges, None).unwrap();
    for p in [1.5, 2.0, 3.0, 5.0] {
        let want = single_path_modulus(&len, &mu, p);
        let got = p_modulus(&g, &ends(0, k), p, &ModulusParams::with_tol(1e-10)).unwrap();
        assert!(
            (got.value - want).abs() <= 1e-7 * want,
            "p = {p}: {} vs {want}",
            got.value
        );
    }
}

#[test]
fn capped_modulus_matches_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for case in 0..12 {
        let n = rng.gen_range(4..=7);
        let g = random_connected(&mut rng, n, 3, Some((0.5, 1.5)), Some((0.5, 1.5)));
        let d = floyd(&g);
        let (s, t) = (0, n - 1);
        let cap = d[s][t] * rng.gen_range(1.0..1.8);
        let paths: Vec<Vec<usize>> = simple_paths(&g, &[s], &[t])
            .into_iter()
            .filter(|(_, edges)| edges.iter().map(|&e| g.edge(e).len).sum::<f64>() <= cap)
            .map(|(_, edges)| edges)
            .collect();
        let (lo, hi) = modulus2_of_paths(&g, &paths);
        let fam = FamilySpec::capped(NodeSet::singleton(s), NodeSet::singleton(t), None, cap);
        let got = p_modulus(&g, &fam, 2.0, &ModulusParams::with_tol(1e-10)).unwrap();
        assert!(
            got.value >= lo * (1.0 - 1e-6) && got.value <= hi * (1.0 + 1e-6),
            "case {case}: {} outside [{lo}, {hi}]",
            got.value
        );
    }
}

#[test]
fn sup_modulus_is_reciprocal_shortest_member() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    for _ in 0..10 {
        let n = rng.gen_range(4..=12);
        let g = random_connected(&mut rng, n, 4, Some((0.3, 2.0)), None);
        let shortest = simple_paths(&g, &[0], &[n - 1])
            .iter()
            .map(|(_, edges)| edges.iter().map(|&e| g.edge(e).len).sum::<f64>())
            .fold(f64::INFINITY, f64::min);
        let got = p_modulus(
            &g,
            &ends(0, n - 1),
            f64::INFINITY,
            &ModulusParams::default(),
        )
        .unwrap();
        assert!((got.value - 1.0 / shortest).abs() <= 1e-12 / shortest);
    }
}

#[test]
#[allow(clippy::needless_range_loop)]
fn metrize_is_the_chain_minimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    for _ in 0..20 {
        let k = rng.gen_range(2..=7);
        let mut pre = vec![vec![0.0; k]; k];
        for i in 0..k {
            for j in i + 1..k {
                let v = rng.gen_range(1..20) as f64;
                pre[i][j] = v;
                pre[j][i] = v;
            }
        }
        let m = MetricMatrix::new((0..k).collect(), pre.concat()).unwrap();
        let d = metrize(&m);
        for i in 0..k {
            for j in 0..k {
                assert_eq!(d.get(i, j), chain_minimum(&pre, i, j));
            }
        }
    }
}
