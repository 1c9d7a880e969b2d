//! Essential lengths and the metrics they induce.
//!
//! The essential length of a family is the smallest cap λ at which the
//! members of length at most λ carry positive modulus. On a finite graph
//! "positive" means at least `eps_mod`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::graph::{shortest_paths, MetricMeasureGraph, NodeId, NodeSet, Path};
use crate::length_map::EdgeLengthMap;
use crate::metric::{metrize, MetricMatrix};
use crate::modulus::{default_eps_mod, p_modulus, FamilySpec, ModulusParams};

/// Settings shared by the essential-length family of operations.
#[derive(Clone, Debug)]
pub struct EssentialParams {
    pub p: f64,
    /// Modulus floor separating negligible families from positive ones.
    pub eps_mod: f64,
    /// Absolute accuracy of the essential length.
    pub tol_lambda: f64,
    /// Relative gap for modulus solves at each probe.
    pub modulus_tol: f64,
    /// Ball radii for the pre-distance, coarse to fine; singletons are always
    /// evaluated last.
    pub deltas: Vec<f64>,
}

impl EssentialParams {
    /// Default floor and `tol_λ = 1e-3 · diam`.
    pub fn defaults(g: &MetricMeasureGraph, p: f64) -> Self {
        Self {
            p,
            eps_mod: default_eps_mod(g, p),
            tol_lambda: 1e-3 * g.diameter(),
            modulus_tol: 1e-3,
            deltas: Vec::new(),
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.p >= 1.0) {
            return Err(invalid(format!(
                "exponent p = {} must lie in [1, ∞]",
                self.p
            )));
        }
        if !(self.tol_lambda > 0.0) {
            return Err(invalid("tol_lambda must be positive"));
        }
        if !(self.eps_mod > 0.0) {
            return Err(invalid("eps_mod must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Probe {
    pub lambda: f64,
    pub modulus: f64,
    /// Value the modulus was compared against.
    pub threshold: f64,
    pub positive: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct EssentialLengthResult {
    /// Upper end of the final bracket.
    pub lambda: f64,
    pub lambda_lo: f64,
    pub lambda_hi: f64,
    /// Modulus of the capped family at the bracket ends; zero at `lambda_lo`
    /// when the family there is empty.
    pub modulus_lo: f64,
    pub modulus_hi: f64,
    /// Positivity threshold applied at `lambda_hi`.
    pub threshold: f64,
    pub probes: Vec<Probe>,
}

impl EssentialLengthResult {
    pub fn to_json(&self) -> String {
        crate::io::to_json(self)
    }
}

struct Decision {
    positive: bool,
    modulus: f64,
    threshold: f64,
    paths: Vec<Path>,
}

fn decide(
    g: &MetricMeasureGraph,
    fam: &FamilySpec,
    params: &EssentialParams,
    warm: &[Path],
) -> Result<Decision> {
    let mut mp = ModulusParams::with_tol(params.modulus_tol);
    mp.warm_start = warm.to_vec();
    mp.threshold = Some(params.eps_mod);
    let r = p_modulus(g, fam, params.p, &mp)?;
    Ok(Decision {
        positive: r.at_least(params.eps_mod),
        modulus: r.value,
        threshold: params.eps_mod,
        paths: r.active_paths,
    })
}

/// Smallest cap λ (to within `tol_λ`) at which the `w`-capped family between
/// `e` and `f` has positive modulus. The search starts at the `w`-distance
/// between the sets, gallops upwards and then bisects.
pub fn essential_length(
    g: &MetricMeasureGraph,
    w: &EdgeLengthMap,
    e: &NodeSet,
    f: &NodeSet,
    params: &EssentialParams,
) -> Result<EssentialLengthResult> {
    params.validate()?;
    w.check_len(g)?;
    if e.is_empty() || f.is_empty() {
        return Err(invalid("essential length needs nonempty sets"));
    }
    if e.intersects(f) {
        return Err(invalid("essential length needs disjoint sets"));
    }
    let seeds: Vec<(NodeId, f64)> = e.iter().map(|x| (x, 0.0)).collect();
    let dist = shortest_paths(g, &seeds, |k| w.get(k)).dist;
    let lo = f.iter().map(|y| dist[y]).fold(f64::INFINITY, f64::min);
    let top = w.total().max(lo);

    let fam_at = |lambda: f64| FamilySpec::capped(e.clone(), f.clone(), Some(w.clone()), lambda);
    let mut probes = Vec::new();
    let mut warm: Vec<Path> = Vec::new();
    let probe = |lambda: f64, warm: &mut Vec<Path>, probes: &mut Vec<Probe>| -> Result<Decision> {
        let d = decide(g, &fam_at(lambda), params, warm)?;
        probes.push(Probe {
            lambda,
            modulus: d.modulus,
            threshold: d.threshold,
            positive: d.positive,
        });
        warm.extend(d.paths.iter().cloned());
        if warm.len() > 400 {
            let excess = warm.len() - 400;
            warm.drain(..excess);
        }
        Ok(d)
    };

    let first = probe(lo, &mut warm, &mut probes)?;
    if first.positive {
        return Ok(EssentialLengthResult {
            lambda: lo,
            lambda_lo: lo,
            lambda_hi: lo,
            modulus_lo: 0.0,
            modulus_hi: first.modulus,
            threshold: first.threshold,
            probes,
        });
    }
    let (mut a, mut mod_a) = (lo, first.modulus);
    let mut step = params.tol_lambda;
    let (mut b, mut hi_dec) = loop {
        let lambda = (a + step).min(top);
        let d = probe(lambda, &mut warm, &mut probes)?;
        if d.positive {
            break (lambda, d);
        }
        if lambda >= top {
            return Err(Error::NoConnection);
        }
        a = lambda;
        mod_a = d.modulus;
        step *= 2.0;
    };
    while b - a > params.tol_lambda {
        let mid = 0.5 * (a + b);
        let d = probe(mid, &mut warm, &mut probes)?;
        if d.positive {
            b = mid;
            hi_dec = d;
        } else {
            a = mid;
            mod_a = d.modulus;
        }
    }
    Ok(EssentialLengthResult {
        lambda: b,
        lambda_lo: a,
        lambda_hi: b,
        modulus_lo: mod_a,
        modulus_hi: hi_dec.modulus,
        threshold: hi_dec.threshold,
        probes,
    })
}

/// Profile of essential lengths between shrinking closed balls.
#[derive(Clone, Debug, Serialize)]
pub struct PredistanceProfile {
    /// Value at the finest scale (singletons).
    pub value: f64,
    /// `(δ, essential length)` from coarse to fine; `δ = 0` is the singleton
    /// pair.
    pub profile: Vec<(f64, f64)>,
}

/// Essential length between closed balls around `x` and `y`, for each radius
/// in the schedule and finally for the singletons.
pub fn essential_predistance(
    g: &MetricMeasureGraph,
    w: &EdgeLengthMap,
    x: NodeId,
    y: NodeId,
    params: &EssentialParams,
) -> Result<PredistanceProfile> {
    g.check_node(x)?;
    g.check_node(y)?;
    if x == y {
        return Err(invalid("pre-distance needs distinct nodes"));
    }
    let mut deltas: Vec<f64> = params.deltas.iter().copied().filter(|&d| d > 0.0).collect();
    deltas.sort_by(|a, b| b.total_cmp(a));
    deltas.push(0.0);
    let mut profile = Vec::with_capacity(deltas.len());
    for delta in deltas {
        let (bx, by) = if delta == 0.0 {
            (NodeSet::singleton(x), NodeSet::singleton(y))
        } else {
            (g.closed_ball(x, delta), g.closed_ball(y, delta))
        };
        let value = if bx.intersects(&by) {
            0.0
        } else {
            essential_length(g, w, &bx, &by, params)?.lambda
        };
        profile.push((delta, value));
    }
    let value = profile.last().expect("schedule ends with singletons").1;
    Ok(PredistanceProfile { value, profile })
}

/// Pre-distance matrix over `nodes` (pairs solved in parallel).
pub fn essential_pre_matrix(
    g: &MetricMeasureGraph,
    w: &EdgeLengthMap,
    nodes: &[NodeId],
    params: &EssentialParams,
) -> Result<MetricMatrix> {
    for &x in nodes {
        g.check_node(x)?;
    }
    let n = nodes.len();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect();
    let values: Vec<f64> = pairs
        .par_iter()
        .map(|&(i, j)| essential_predistance(g, w, nodes[i], nodes[j], params).map(|r| r.value))
        .collect::<Result<_>>()?;
    let mut d = vec![0.0; n * n];
    for (&(i, j), v) in pairs.iter().zip(values) {
        d[i * n + j] = v;
        d[j * n + i] = v;
    }
    MetricMatrix::new(nodes.to_vec(), d)
}

/// The essential metric `d_p` over `nodes`: metrized pre-distances with
/// `w = ℓ`.
pub fn essential_metric(
    g: &MetricMeasureGraph,
    nodes: &[NodeId],
    params: &EssentialParams,
) -> Result<MetricMatrix> {
    Ok(metrize(&essential_pre_matrix(
        g,
        &g.lengths(),
        nodes,
        params,
    )?))
}

/// Essential length for `p = ∞` between two nodes. Any nonempty family has
/// positive sup-modulus, so only the positivity floor matters.
pub fn essential_metric_infty(
    g: &MetricMeasureGraph,
    x: NodeId,
    y: NodeId,
    params: &EssentialParams,
) -> Result<f64> {
    let mut p = params.clone();
    p.p = f64::INFINITY;
    p.eps_mod = default_eps_mod(g, f64::INFINITY);
    Ok(essential_predistance(g, &g.lengths(), x, y, &p)?.value)
}
