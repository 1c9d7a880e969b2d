//! Pull-back metrics of edge-length maps and the quotient they induce.
//!
//! An [`EdgeLengthMap`] stands in for a map `u` out of the graph: it records
//! the length of the image of each edge. Two pull-backs are available. The
//! path pull-back takes the infimum of image lengths over all paths; the
//! essential pull-back only looks at families of positive modulus.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::essential::{essential_pre_matrix, EssentialParams};
use crate::graph::{shortest_paths, MetricMeasureGraph, NodeId};
use crate::length_map::EdgeLengthMap;
use crate::metric::{metrize, MetricMatrix};

/// Essential pull-back metric over `nodes`.
pub fn pullback_essential_metric(
    g: &MetricMeasureGraph,
    lu: &EdgeLengthMap,
    nodes: &[NodeId],
    params: &EssentialParams,
) -> Result<MetricMatrix> {
    Ok(metrize(&essential_pre_matrix(g, lu, nodes, params)?))
}

/// Infimum of image lengths over all paths, i.e. shortest paths under `ℓ_u`.
pub fn path_pullback_metric(
    g: &MetricMeasureGraph,
    lu: &EdgeLengthMap,
    nodes: &[NodeId],
) -> Result<MetricMatrix> {
    lu.check_len(g)?;
    for &x in nodes {
        g.check_node(x)?;
    }
    let rows: Vec<Vec<f64>> = nodes
        .par_iter()
        .map(|&x| {
            let dist = shortest_paths(g, &[(x, 0.0)], |e| lu.get(e)).dist;
            nodes.iter().map(|&y| dist[y]).collect()
        })
        .collect();
    // Dijkstra from either end may round differently; keep the smaller value.
    MetricMatrix::from_pairs(nodes.to_vec(), |i, j| rows[i][j].min(rows[j][i]))
}

/// Nodes glued together where the pull-back distance vanishes.
#[derive(Clone, Debug, Serialize)]
pub struct QuotientSpace {
    /// Classes as lists of node ids, ordered by their smallest member.
    pub classes: Vec<Vec<NodeId>>,
    /// Class index of each node of the input matrix, in matrix order.
    pub projection: Vec<usize>,
    /// Metric between classes, indexed by class number.
    #[serde(skip)]
    pub metric: MetricMatrix,
    /// Largest spread of `d_u` between members of the same two classes.
    pub spread: f64,
    pub warnings: Vec<String>,
}

impl QuotientSpace {
    pub fn class_of(&self, i: usize) -> usize {
        self.projection[i]
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Out<'a> {
            classes: &'a [Vec<NodeId>],
            projection: &'a [usize],
            metric: Vec<&'a [f64]>,
            spread: f64,
            warnings: &'a [String],
        }
        let k = self.classes.len().max(1);
        crate::io::to_json(&Out {
            classes: &self.classes,
            projection: &self.projection,
            metric: self.metric.entries().chunks(k).collect(),
            spread: self.spread,
            warnings: &self.warnings,
        })
    }
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Single-linkage quotient: pairs at distance at most `tol_quot` are glued.
pub fn quotient_space(d: &MetricMatrix, tol_quot: f64) -> Result<QuotientSpace> {
    if !(tol_quot >= 0.0) {
        return Err(invalid(format!(
            "tol_quot = {tol_quot} must be nonnegative"
        )));
    }
    let n = d.size();
    let mut parent: Vec<usize> = (0..n).collect();
    for i in 0..n {
        for j in i + 1..n {
            if d.get(i, j) <= tol_quot {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let roots: Vec<usize> = (0..n).map(|i| find(&mut parent, i)).collect();
    let mut class_index = vec![usize::MAX; n];
    let mut classes: Vec<Vec<usize>> = Vec::new();
    for (i, &r) in roots.iter().enumerate() {
        if class_index[r] == usize::MAX {
            class_index[r] = classes.len();
            classes.push(Vec::new());
        }
        classes[class_index[r]].push(i);
    }
    let projection: Vec<usize> = roots.iter().map(|&r| class_index[r]).collect();

    let mut warnings = Vec::new();
    for members in &classes {
        'outer: for (a, &i) in members.iter().enumerate() {
            for &j in &members[a + 1..] {
                if d.get(i, j) > tol_quot {
                    let k = members
                        .iter()
                        .copied()
                        .find(|&k| d.get(i, k) <= tol_quot && d.get(k, j) <= tol_quot)
                        .unwrap_or(i);
                    warnings.push(format!(
                        "chain collapse: nodes {} and {} share a class at distance {} (via {})",
                        d.nodes()[i],
                        d.nodes()[j],
                        d.get(i, j),
                        d.nodes()[k]
                    ));
                    break 'outer;
                }
            }
        }
    }

    let k = classes.len();
    let mut pre = vec![0.0; k * k];
    let mut spread: f64 = 0.0;
    for a in 0..k {
        for b in a + 1..k {
            let values = classes[a]
                .iter()
                .flat_map(|&i| classes[b].iter().map(move |&j| d.get(i, j)));
            let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                (lo.min(v), hi.max(v))
            });
            if hi.is_finite() {
                spread = spread.max(hi - lo);
            }
            pre[a * k + b] = lo;
            pre[b * k + a] = lo;
        }
    }
    if spread > 2.0 * tol_quot {
        warnings.push(format!(
            "class distances vary by {spread} across representatives"
        ));
    }
    let metric = metrize(&MetricMatrix::new((0..k).collect(), pre)?);
    let classes = classes
        .into_iter()
        .map(|c| c.into_iter().map(|i| d.nodes()[i]).collect())
        .collect();
    Ok(QuotientSpace {
        classes,
        projection,
        metric,
        spread,
        warnings,
    })
}

/// Outcome of checking that the induced map out of the quotient is
/// 1-Lipschitz on a sample.
#[derive(Clone, Debug, Serialize)]
pub struct FactorizationReport {
    pub pairs: usize,
    /// Largest `target − d_u`; at most `tol` for a pass.
    pub max_violation: f64,
    pub worst_pair: Option<(NodeId, NodeId)>,
    /// Smallest `d_u − target` over pairs with `target > 0`.
    pub min_slack: f64,
    /// Largest `ℓ_u(e) / ℓ(e)` over edges whose ratio exceeds the declared
    /// Lipschitz bound, if any.
    pub lipschitz_excess: Option<f64>,
    pub passed: bool,
}

/// Checks `target(x, y) ≤ d_u(x, y) + tol` on every sampled pair.
pub fn factorization_check(
    g: &MetricMeasureGraph,
    lu: &EdgeLengthMap,
    target: &MetricMatrix,
    du: &MetricMatrix,
    tol: f64,
) -> Result<FactorizationReport> {
    lu.check_len(g)?;
    if target.nodes() != du.nodes() {
        return Err(invalid(
            "target and pull-back matrices must index the same nodes",
        ));
    }
    let lipschitz_excess = lu.lip_bound().and_then(|lip| {
        let worst = g
            .edges()
            .iter()
            .enumerate()
            .map(|(e, edge)| lu.get(e) / edge.len)
            .fold(0.0, f64::max);
        (worst > lip * (1.0 + 1e-12)).then_some(worst)
    });
    let n = du.size();
    let mut report = FactorizationReport {
        pairs: n * n.saturating_sub(1) / 2,
        max_violation: f64::NEG_INFINITY,
        worst_pair: None,
        min_slack: f64::INFINITY,
        lipschitz_excess,
        passed: true,
    };
    for i in 0..n {
        for j in i + 1..n {
            let (t, d) = (target.get(i, j), du.get(i, j));
            let violation = t - d;
            if violation > report.max_violation {
                report.max_violation = violation;
                report.worst_pair = Some((du.nodes()[i], du.nodes()[j]));
            }
            if t > 0.0 {
                report.min_slack = report.min_slack.min(d - t);
            }
        }
    }
    if n < 2 {
        report.max_violation = 0.0;
    }
    report.passed = report.max_violation <= tol && report.lipschitz_excess.is_none();
    Ok(report)
}
