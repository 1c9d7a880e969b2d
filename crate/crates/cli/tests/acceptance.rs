//! Acceptance suite: one line per criterion, nonzero exit if any fails.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::process::ExitCode;
use std::time::Instant;

use common::*;
use essmetric::experiments::{
    collapsed_disc_experiment, cusp_lobes, cusp_threshold, grid_identity, sample_nodes,
    CollapsedDisc, GridIdentity,
};
use essmetric::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 2024;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn ends(s: NodeId, t: NodeId) -> FamilySpec {
    FamilySpec::connecting(NodeSet::singleton(s), NodeSet::singleton(t))
}

fn laplacian() -> Result<Outcome> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst: f64 = 0.0;
    for _ in 0..25 {
        let n = rng.gen_range(5..=50);
        let extra = rng.gen_range(0..=n);
        let g = random_connected(&mut rng, n, extra, None, None);
        let (s, t) = (0, n - 1);
        let want = effective_conductance(&g, s, t);
        let got = p_modulus(&g, &ends(s, t), 2.0, &ModulusParams::with_tol(1e-10))?.value;
        worst = worst.max((got - want).abs() / want);
    }
    let secs = start.elapsed().as_secs_f64();
    Ok(outcome(
        worst <= 1e-6 && secs <= 60.0,
        format!("25 graphs, max relative error {worst:.2e}, {secs:.1} s"),
    ))
}

fn chain(len: &[f64], mu: &[f64]) -> Result<MetricMeasureGraph> {
    let nodes = (0..=len.len())
        .map(|id| Node {
            id,
            pos: None,
            mu: 1.0,
        })
        .collect();
    let edges = (0..len.len())
        .map(|i| Edge {
            u: i,
            v: i + 1,
            len: len[i],
            mu: mu[i],
        })
        .collect();
    MetricMeasureGraph::new(nodes, edges, None)
}

fn closed_forms() -> Result<Outcome> {
    let mut err2: f64 = 0.0;
    for m in 1..=10 {
        let g = chain(&vec![1.0; m], &vec![1.0; m])?;
        let got = p_modulus(&g, &ends(0, m), 2.0, &ModulusParams::with_tol(1e-12))?.value;
        err2 = err2.max((got - 1.0 / m as f64).abs());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 1);
    let mut err3: f64 = 0.0;
    for m in 1..=10 {
        let len: Vec<f64> = (0..m).map(|_| rng.gen_range(0.2..3.0)).collect();
        let mu: Vec<f64> = (0..m).map(|_| rng.gen_range(0.2..3.0)).collect();
        let g = chain(&len, &mu)?;
        let want = single_path_modulus(&len, &mu, 3.0);
        let got = p_modulus(&g, &ends(0, m), 3.0, &ModulusParams::with_tol(1e-12))?.value;
        err3 = err3.max((got - want).abs() / want);
    }
    Ok(outcome(
        err2 <= 1e-9 && err3 <= 1e-7,
        format!("p=2 max error {err2:.2e}, p=3 max relative error {err3:.2e}"),
    ))
}

fn grid(grid: &GridIdentity, secs: f64) -> Outcome {
    outcome(
        grid.passed && secs <= 600.0,
        format!(
            "n=16 p=2, {} pairs, max |d_p - d|/d = {:.3e} (tolerance {}), {secs:.1} s",
            grid.pairs, grid.max_rel_err, grid.tolerance
        ),
    )
}

fn cusp() -> Result<Outcome> {
    let start = Instant::now();
    let r = cusp_threshold(2.0, 2.0, &[8, 16, 32, 64], &[2.0, 3.0, 4.0])?;
    let parts: Vec<String> = r
        .profiles
        .iter()
        .map(|(q, p)| {
            let moduli: Vec<String> = p.moduli.iter().map(|m| format!("{m:.4e}")).collect();
            format!(
                "q={q}: {} (exponent {:.3}, moduli [{}])",
                p.verdict,
                p.exponent,
                moduli.join(", ")
            )
        })
        .collect();
    Ok(outcome(
        r.verdict(2.0) == Some(Verdict::Decaying) && r.verdict(4.0) == Some(Verdict::BoundedBelow),
        format!(
            "{}; {:.1} s",
            parts.join("; "),
            start.elapsed().as_secs_f64()
        ),
    ))
}

fn disc(r: &CollapsedDisc, secs: f64) -> Outcome {
    outcome(
        r.passed && secs <= 900.0,
        format!(
            "n=64, {} pairs, max relative error of essential pull-back {:.3} (tolerance {}), \
             endpoint path pull-back {:.3e}, {secs:.1} s",
            r.pairs.len(),
            r.max_rel_err,
            r.tolerance,
            r.endpoint_path_pullback
        ),
    )
}

fn axioms(matrices: &[(&str, &MetricMatrix)]) -> Outcome {
    let mut bad = Vec::new();
    for (name, m) in matrices {
        let once = metrize(m);
        let twice = metrize(&once);
        if !m.axioms().is_pseudometric(1e-9) || twice.max_abs_diff(&once) > 1e-9 {
            bad.push(*name);
        }
    }
    outcome(
        bad.is_empty(),
        if bad.is_empty() {
            format!("{} matrices checked", matrices.len())
        } else {
            format!("violations in {}", bad.join(", "))
        },
    )
}

fn ordering(grid: &GridIdentity, disc: &CollapsedDisc) -> Result<Outcome> {
    let g = grid_square(grid.n)?;
    let params = EssentialParams::defaults(&g, 2.0);
    let slack = 2.0 * params.tol_lambda;
    let k = grid.nodes.len();
    let mut c_max: f64 = 1.0;
    let mut sandwich = true;
    for i in 0..k {
        for j in i + 1..k {
            let (x, y) = (grid.nodes[i], grid.nodes[j]);
            let q = quasiconvexity_constant(
                &g,
                2.0,
                &NodeSet::singleton(x),
                &NodeSet::singleton(y),
                params.eps_mod,
                1e-3,
            )?;
            c_max = c_max.max(q.c);
            let (d, dp) = (grid.d.get(i, j), grid.d_p.get(i, j));
            sandwich &= d <= dp + slack && dp <= q.c * d + slack;
        }
    }
    let mut p3 = params.clone();
    p3.p = 3.0;
    p3.eps_mod = default_eps_mod(&g, 3.0);
    let d3 = essential_metric(&g, &grid.nodes, &p3)?;
    let mut dinf = vec![0.0; k * k];
    for i in 0..k {
        for j in i + 1..k {
            let v = essential_metric_infty(&g, grid.nodes[i], grid.nodes[j], &params)?;
            dinf[i * k + j] = v;
            dinf[j * k + i] = v;
        }
    }
    let dinf = metrize(&MetricMatrix::new(grid.nodes.clone(), dinf)?);
    let mut exponents = true;
    for i in 0..k {
        for j in 0..k {
            exponents &= d3.get(i, j) <= grid.d_p.get(i, j) + slack;
            exponents &= dinf.get(i, j) <= grid.d_p.get(i, j) + slack;
        }
    }
    let disc_slack = 2.0 * 1e-3 * grid_square(disc.n)?.diameter();
    let nested = disc
        .path
        .entries()
        .iter()
        .zip(disc.essential.entries())
        .all(|(a, b)| *a <= b + disc_slack);
    Ok(outcome(
        sandwich && exponents && nested,
        format!(
            "sandwich d <= d_2 <= C d with certified C = {c_max:.3}: {sandwich}; \
             d_3, d_inf <= d_2: {exponents}; path <= essential pull-back: {nested}"
        ),
    ))
}

fn predistance_row(
    g: &MetricMeasureGraph,
    x0: NodeId,
    params: &EssentialParams,
) -> Result<Vec<f64>> {
    (0..g.node_count())
        .map(|y| {
            if y == x0 {
                Ok(0.0)
            } else {
                essential_predistance(g, &g.lengths(), x0, y, params).map(|r| r.value)
            }
        })
        .collect()
}

fn lipschitz_of_row(g: &MetricMeasureGraph) -> Result<(bool, f64)> {
    let params = EssentialParams::defaults(g, 2.0);
    let nodes = sample_nodes(g, 6, SEED)?;
    let f = DiscreteFunction::unit_gradient(g, predistance_row(g, nodes[0], &params)?);
    let d = essential_metric(g, &nodes, &params)?;
    let tol = 2.0 * params.tol_lambda;
    let r = sobolev_to_lipschitz_check(g, &d, &f, tol)?;
    Ok((r.passed, r.constant))
}

fn sobolev() -> Result<Outcome> {
    let (grid_ok, grid_c) = lipschitz_of_row(&grid_square(16)?)?;
    let (cusp_ok, cusp_c) = lipschitz_of_row(&cusp_domain(2.0, 16)?)?;
    let g = cusp_domain(2.0, 64)?;
    let (e, f) = cusp_lobes();
    let cx = killing_counterexample(&g, 2.0, &e.resolve(&g)?, &f.resolve(&g)?, 2.0, 1e3)?;
    Ok(outcome(
        grid_ok && cusp_ok && cx.lipschitz_ratio >= 1.2,
        format!(
            "grid constant {grid_c:.4}, cusp constant {cusp_c:.4}, counterexample ratio {:.3} \
             (perturbation energy {:.3e})",
            cx.lipschitz_ratio, cx.perturbation_energy
        ),
    ))
}

fn brute_force() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 9);
    let mut worst: f64 = 0.0;
    let mut chains_exact = true;
    for _ in 0..50 {
        let n = rng.gen_range(3..=8);
        let extra = rng.gen_range(0..=4);
        let g = random_connected(&mut rng, n, extra, Some((0.5, 1.5)), Some((0.5, 1.5)));
        let dist = floyd(&g);
        let (s, t) = (0, n - 1);
        let cap = dist[s][t] * rng.gen_range(1.0..2.0);
        let paths: Vec<Vec<usize>> = simple_paths(&g, &[s], &[t])
            .into_iter()
            .map(|(_, edges)| edges)
            .filter(|edges| edges.iter().map(|&e| g.edge(e).len).sum::<f64>() <= cap)
            .collect();
        let (lo, hi) = modulus2_of_paths(&g, &paths);
        let fam = FamilySpec::capped(NodeSet::singleton(s), NodeSet::singleton(t), None, cap);
        let got = p_modulus(&g, &fam, 2.0, &ModulusParams::with_tol(1e-10))?.value;
        let err = if got < lo {
            (lo - got) / lo
        } else if got > hi {
            (got - hi) / hi
        } else {
            0.0
        };
        worst = worst.max(err);

        let pre: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..n).map(|_| rng.gen_range(1..30) as f64).collect())
            .collect();
        let pre: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| if i == j { 0.0 } else { pre[i.min(j)][i.max(j)] })
                    .collect()
            })
            .collect();
        let m = metrize(&MetricMatrix::new((0..n).collect(), pre.concat())?);
        for i in 0..n {
            for j in 0..n {
                chains_exact &= m.get(i, j) == chain_minimum(&pre, i, j);
            }
        }
    }
    Ok(outcome(
        worst <= 1e-6 && chains_exact,
        format!("50 graphs, max relative disagreement {worst:.2e}; metrize exact: {chains_exact}"),
    ))
}

fn report(number: usize, name: &str, r: Result<Outcome>) -> bool {
    match r {
        Ok(o) => {
            println!(
                "criterion {number} ({name}): {} | {}",
                if o.passed { "PASS" } else { "FAIL" },
                o.detail
            );
            o.passed
        }
        Err(e) => {
            println!("criterion {number} ({name}): FAIL | error: {e}");
            false
        }
    }
}

fn main() -> ExitCode {
    let mut all = true;
    all &= report(1, "Laplacian oracle", laplacian());
    all &= report(2, "closed forms", closed_forms());

    let start = Instant::now();
    let grid_run = grid_identity(16, 2.0, 7, SEED);
    let grid_secs = start.elapsed().as_secs_f64();
    all &= report(
        3,
        "grid identity",
        grid_run
            .as_ref()
            .map(|r| grid(r, grid_secs))
            .map_err(clone_err),
    );
    all &= report(4, "cusp threshold", cusp());

    let start = Instant::now();
    let disc_run = collapsed_disc_experiment(64, 2.0, 10, SEED);
    let disc_secs = start.elapsed().as_secs_f64();
    all &= report(
        5,
        "collapsed disc",
        disc_run
            .as_ref()
            .map(|r| disc(r, disc_secs))
            .map_err(clone_err),
    );

    let six = match (&grid_run, &disc_run) {
        (Ok(gr), Ok(dr)) => Ok(axioms(&[
            ("grid d", &gr.d),
            ("grid d_p", &gr.d_p),
            ("disc d", &dr.d),
            ("disc essential pull-back", &dr.essential),
            ("disc path pull-back", &dr.path),
        ])),
        _ => Err(Error::Unsupported(
            "criteria 3 or 5 produced no matrices".into(),
        )),
    };
    all &= report(6, "metric axioms", six);
    let seven = match (&grid_run, &disc_run) {
        (Ok(gr), Ok(dr)) => ordering(gr, dr),
        _ => Err(Error::Unsupported(
            "criteria 3 or 5 produced no matrices".into(),
        )),
    };
    all &= report(7, "ordering", seven);
    all &= report(8, "Sobolev to Lipschitz", sobolev());
    all &= report(9, "brute force", brute_force());

    if all {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: some criteria failed");
        ExitCode::FAILURE
    }
}

fn clone_err(e: &Error) -> Error {
    Error::Unsupported(e.to_string())
}
