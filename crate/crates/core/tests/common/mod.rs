//! Reference computations that share no code with the library solvers.
#![allow(dead_code)]

use essmetric::{Edge, MetricMeasureGraph, Node, NodeId};
use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;

/// Connected graph on `n` nodes: a random spanning tree plus `extra` random
/// chords, no parallel edges. Lengths and measures are drawn from
/// `lengths`/`measures` when given, else 1.
pub fn random_connected<R: Rng>(
    rng: &mut R,
    n: usize,
    extra: usize,
    lengths: Option<(f64, f64)>,
    measures: Option<(f64, f64)>,
) -> MetricMeasureGraph {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for k in 1..n {
        let parent = order[rng.gen_range(0..k)];
        pairs.push((parent.min(order[k]), parent.max(order[k])));
    }
    let max_edges = n * (n - 1) / 2;
    let target = (pairs.len() + extra).min(max_edges);
    while pairs.len() < target {
        let (a, b) = (rng.gen_range(0..n), rng.gen_range(0..n));
        let pair = (a.min(b), a.max(b));
        if a != b && !pairs.contains(&pair) {
            pairs.push(pair);
        }
    }
    let mut draw = |range: Option<(f64, f64)>| range.map_or(1.0, |(lo, hi)| rng.gen_range(lo..hi));
    let edges: Vec<Edge> = pairs
        .iter()
        .map(|&(u, v)| Edge {
            u,
            v,
            len: draw(lengths),
            mu: draw(measures),
        })
        .collect();
    let nodes = (0..n)
        .map(|id| Node {
            id,
            pos: None,
            mu: 1.0,
        })
        .collect();
    MetricMeasureGraph::new(nodes, edges, None).unwrap()
}

/// Effective conductance between `s` and `t` with edge conductances
/// `μ_e / ℓ_e²`, from a grounded Laplacian solve.
pub fn effective_conductance(g: &MetricMeasureGraph, s: NodeId, t: NodeId) -> f64 {
    let n = g.node_count();
    let mut lap = DMatrix::<f64>::zeros(n, n);
    for e in g.edges() {
        let c = e.mu / (e.len * e.len);
        lap[(e.u, e.u)] += c;
        lap[(e.v, e.v)] += c;
        lap[(e.u, e.v)] -= c;
        lap[(e.v, e.u)] -= c;
    }
    // ground t: drop its row and column
    let keep: Vec<usize> = (0..n).filter(|&x| x != t).collect();
    let reduced = DMatrix::from_fn(n - 1, n - 1, |i, j| lap[(keep[i], keep[j])]);
    let mut rhs = DVector::zeros(n - 1);
    let si = keep.iter().position(|&x| x == s).unwrap();
    rhs[si] = 1.0;
    let phi = reduced.lu().solve(&rhs).expect("connected graph");
    1.0 / phi[si]
}

/// Every simple path from a node of `sources` to a node of `targets`, as
/// `(nodes, edges)`.
pub fn simple_paths(
    g: &MetricMeasureGraph,
    sources: &[NodeId],
    targets: &[NodeId],
) -> Vec<(Vec<NodeId>, Vec<usize>)> {
    fn walk(
        g: &MetricMeasureGraph,
        targets: &[NodeId],
        nodes: &mut Vec<NodeId>,
        edges: &mut Vec<usize>,
        out: &mut Vec<(Vec<NodeId>, Vec<usize>)>,
    ) {
        let v = *nodes.last().unwrap();
        if targets.contains(&v) && !edges.is_empty() {
            out.push((nodes.clone(), edges.clone()));
        }
        for (e, edge) in g.edges().iter().enumerate() {
            let y = if edge.u == v {
                edge.v
            } else if edge.v == v {
                edge.u
            } else {
                continue;
            };
            if nodes.contains(&y) {
                continue;
            }
            nodes.push(y);
            edges.push(e);
            walk(g, targets, nodes, edges, out);
            nodes.pop();
            edges.pop();
        }
    }
    let mut out = Vec::new();
    for &s in sources {
        walk(g, targets, &mut vec![s], &mut Vec::new(), &mut out);
    }
    out
}

/// All-pairs distances by Floyd–Warshall on the edge list.
pub fn floyd(g: &MetricMeasureGraph) -> Vec<Vec<f64>> {
    let n = g.node_count();
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for (x, row) in d.iter_mut().enumerate() {
        row[x] = 0.0;
    }
    for e in g.edges() {
        d[e.u][e.v] = d[e.u][e.v].min(e.len);
        d[e.v][e.u] = d[e.v][e.u].min(e.len);
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if d[i][k] + d[k][j] < d[i][j] {
                    d[i][j] = d[i][k] + d[k][j];
                }
            }
        }
    }
    d
}

/// `Mod_2` of an explicit finite path family: projected accelerated
/// gradient ascent on the dual `max_{λ≥0} Σλ − Σ_e (Σ_{γ∋e} λ_γ ℓ_e)² / (4 μ_e)`.
/// Returns `(lower, upper)` bounds from the dual value and the rescaled
/// primal density.
pub fn modulus2_of_paths(g: &MetricMeasureGraph, paths: &[Vec<usize>]) -> (f64, f64) {
    if paths.is_empty() {
        return (0.0, 0.0);
    }
    let m = g.edge_count();
    let k = paths.len();
    let len: Vec<f64> = g.edges().iter().map(|e| e.len).collect();
    let mu: Vec<f64> = g.edges().iter().map(|e| e.mu).collect();
    let rho_of = |lam: &[f64]| {
        let mut load = vec![0.0; m];
        for (path, &l) in paths.iter().zip(lam) {
            for &e in path {
                load[e] += l * len[e];
            }
        }
        (0..m)
            .map(|e| load[e] / (2.0 * mu[e]))
            .collect::<Vec<f64>>()
    };
    let rho_len = |rho: &[f64], path: &[usize]| path.iter().map(|&e| rho[e] * len[e]).sum::<f64>();
    let dual = |lam: &[f64], rho: &[f64]| {
        lam.iter().sum::<f64>() - (0..m).map(|e| mu[e] * rho[e] * rho[e]).sum::<f64>()
    };
    // step from a bound on the largest eigenvalue of A D Aᵀ
    let mut lip = 0.0;
    for a in paths {
        for b in paths {
            let shared: f64 = a
                .iter()
                .filter(|e| b.contains(e))
                .map(|&e| len[e] * len[e] / (2.0 * mu[e]))
                .sum();
            lip += shared * shared;
        }
    }
    let step = 1.0 / lip.sqrt();
    let mut lam = vec![0.0; k];
    let mut prev = lam.clone();
    let mut y = lam.clone();
    let mut t = 1.0_f64;
    let (mut lower, mut upper) = (0.0_f64, f64::INFINITY);
    for it in 0..2_000_000 {
        let rho = rho_of(&y);
        for i in 0..k {
            lam[i] = (y[i] + step * (1.0 - rho_len(&rho, &paths[i]))).max(0.0);
        }
        let rho = rho_of(&lam);
        let d = dual(&lam, &rho);
        if d < lower {
            // restart momentum when the dual value drops
            t = 1.0;
        }
        lower = lower.max(d);
        let min_len = paths
            .iter()
            .map(|p| rho_len(&rho, p))
            .fold(f64::INFINITY, f64::min);
        if min_len > 0.0 {
            let energy: f64 = (0..m).map(|e| mu[e] * rho[e] * rho[e]).sum();
            upper = upper.min(energy / (min_len * min_len));
        }
        if it % 64 == 0 && upper - lower <= 1e-11 * upper {
            break;
        }
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        for i in 0..k {
            y[i] = (lam[i] + (t - 1.0) / t_next * (lam[i] - prev[i])).max(0.0);
        }
        prev.clone_from(&lam);
        t = t_next;
    }
    (lower, upper)
}

/// Closed form for a single path: `(Σ ℓ^{p/(p−1)} μ^{−1/(p−1)})^{1−p}`.
pub fn single_path_modulus(len: &[f64], mu: &[f64], p: f64) -> f64 {
    let q = p / (p - 1.0);
    let s: f64 = len
        .iter()
        .zip(mu)
        .map(|(&l, &m)| l.powf(q) * m.powf(-1.0 / (p - 1.0)))
        .sum();
    s.powf(1.0 - p)
}

/// Minimum over all chains `i = x_0, …, x_k = j` through distinct points of
/// `Σ pre(x_{r−1}, x_r)`, by exhaustive search.
pub fn chain_minimum(pre: &[Vec<f64>], i: usize, j: usize) -> f64 {
    fn go(pre: &[Vec<f64>], at: usize, j: usize, used: &mut Vec<bool>, acc: f64, best: &mut f64) {
        if at == j {
            *best = best.min(acc);
            return;
        }
        for next in 0..pre.len() {
            if !used[next] {
                used[next] = true;
                go(pre, next, j, used, acc + pre[at][next], best);
                used[next] = false;
            }
        }
    }
    if i == j {
        return 0.0;
    }
    let mut used = vec![false; pre.len()];
    used[i] = true;
    let mut best = f64::INFINITY;
    go(pre, i, j, &mut used, 0.0, &mut best);
    best
}
