//! Thickness across refinements, quasiconvexity constants and
//! Sobolev-to-Lipschitz checks.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::generators::Recipe;
use crate::graph::{shortest_paths, EdgeId, MetricMeasureGraph, NodeId, NodeSet, Path, SetSpec};
use crate::metric::MetricMatrix;
use crate::modulus::{modulus_positive_with, p_modulus, Cap, Density, FamilySpec, ModulusParams};
use crate::oracle::within_cap;

#[derive(Clone, Debug, Serialize)]
pub struct QuasiconvexityResult {
    /// Upper end of the final bracket: the family is positive here.
    pub c: f64,
    pub c_lo: f64,
    pub c_hi: f64,
    pub modulus_at_c: f64,
}

/// Smallest `C ≥ 1` (to within `tol_c`) for which the quasiconvex family
/// between `e` and `f` has modulus at least `eps_mod`.
pub fn quasiconvexity_constant(
    g: &MetricMeasureGraph,
    p: f64,
    e: &NodeSet,
    f: &NodeSet,
    eps_mod: f64,
    tol_c: f64,
) -> Result<QuasiconvexityResult> {
    if e.is_empty() || f.is_empty() || e.intersects(f) {
        return Err(invalid("quasiconvexity needs nonempty disjoint node sets"));
    }
    if !(tol_c > 0.0) {
        return Err(invalid("tol_c must be positive"));
    }
    let seeds: Vec<(NodeId, f64)> = e.iter().map(|x| (x, 0.0)).collect();
    let dist = shortest_paths(g, &seeds, |k| g.edge(k).len).dist;
    let gap = f.iter().map(|y| dist[y]).fold(f64::INFINITY, f64::min);
    let top = (g.total_length() / gap).max(1.0);
    let params = ModulusParams::with_tol(1e-3);
    let probe = |c: f64| {
        let fam = FamilySpec::quasiconvex(e.clone(), f.clone(), c);
        modulus_positive_with(g, &fam, p, eps_mod, params.clone())
    };
    let at_one = probe(1.0)?;
    if at_one.positive {
        return Ok(QuasiconvexityResult {
            c: 1.0,
            c_lo: 1.0,
            c_hi: 1.0,
            modulus_at_c: at_one.certificate.value,
        });
    }
    let at_top = probe(top)?;
    if !at_top.positive {
        return Err(Error::NoConnection);
    }
    let (mut lo, mut hi, mut m_hi) = (1.0, top, at_top.certificate.value);
    while hi - lo > tol_c {
        let mid = 0.5 * (lo + hi);
        let r = probe(mid)?;
        if r.positive {
            hi = mid;
            m_hi = r.certificate.value;
        } else {
            lo = mid;
        }
    }
    Ok(QuasiconvexityResult {
        c: hi,
        c_lo: lo,
        c_hi: hi,
        modulus_at_c: m_hi,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    BoundedBelow,
    Decaying,
    Inconclusive,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::BoundedBelow => "bounded-below",
            Verdict::Decaying => "decaying",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

/// Settings for [`thickness_profile`].
#[derive(Clone, Debug)]
pub struct ThicknessParams {
    pub p: f64,
    /// Quasiconvexity constant of the family.
    pub c: f64,
    /// Moduli below this count as zero.
    pub eps_mod: f64,
    pub tol: f64,
    /// Largest relative change between the last two levels still read as
    /// stable.
    pub max_change: f64,
    /// Fitted exponents at or above this are read as no decay.
    pub min_exponent: f64,
}

impl ThicknessParams {
    pub fn new(p: f64, c: f64) -> Self {
        Self {
            p,
            c,
            eps_mod: 1e-12,
            tol: 1e-3,
            max_change: 0.25,
            min_exponent: -0.1,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ThicknessProfile {
    pub levels: Vec<usize>,
    pub moduli: Vec<f64>,
    /// Least-squares slope of `log Mod` against `log n`; negative when the
    /// modulus decays as the mesh is refined.
    pub exponent: f64,
    /// Root-mean-square residual of the fit.
    pub residual: f64,
    pub verdict: Verdict,
}

impl ThicknessProfile {
    pub fn to_json(&self) -> String {
        crate::io::to_json(self)
    }
}

/// Modulus of the quasiconvex family between two regions at each
/// resolution, and a verdict on whether it stays away from zero.
pub fn thickness_profile(
    recipe: &Recipe,
    levels: &[usize],
    e: &SetSpec,
    f: &SetSpec,
    params: &ThicknessParams,
) -> Result<ThicknessProfile> {
    if levels.len() < 3 {
        return Err(invalid("a thickness profile needs at least three levels"));
    }
    if levels.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid("levels must increase strictly"));
    }
    let moduli: Vec<f64> = levels
        .par_iter()
        .map(|&n| {
            let g = recipe.with_resolution(n).build()?;
            let fam = FamilySpec::quasiconvex(e.resolve(&g)?, f.resolve(&g)?, params.c);
            let r = p_modulus(&g, &fam, params.p, &ModulusParams::with_tol(params.tol))?;
            Ok(if r.value < params.eps_mod {
                0.0
            } else {
                r.value
            })
        })
        .collect::<Result<_>>()?;
    Ok(assess(levels.to_vec(), moduli, params))
}

fn assess(levels: Vec<usize>, moduli: Vec<f64>, params: &ThicknessParams) -> ThicknessProfile {
    let k = levels.len();
    let (last, prev) = (moduli[k - 1], moduli[k - 2]);
    if last == 0.0 {
        return ThicknessProfile {
            levels,
            moduli,
            exponent: f64::NEG_INFINITY,
            residual: 0.0,
            verdict: Verdict::Decaying,
        };
    }
    let pts: Vec<(f64, f64)> = levels
        .iter()
        .zip(&moduli)
        .filter(|(_, &m)| m > 0.0)
        .map(|(&n, &m)| ((n as f64).ln(), m.ln()))
        .collect();
    let count = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / count;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / count;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let exponent = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let residual = (pts
        .iter()
        .map(|p| (p.1 - my - exponent * (p.0 - mx)).powi(2))
        .sum::<f64>()
        / count)
        .sqrt();
    let change = (last - prev) / prev;
    let verdict = if change.abs() < params.max_change && exponent >= params.min_exponent {
        Verdict::BoundedBelow
    } else if change <= -params.max_change && exponent < params.min_exponent {
        Verdict::Decaying
    } else {
        Verdict::Inconclusive
    };
    ThicknessProfile {
        levels,
        moduli,
        exponent,
        residual,
        verdict,
    }
}

/// Node values with a declared upper gradient.
#[derive(Clone, Debug)]
pub struct DiscreteFunction {
    pub values: Vec<f64>,
    pub upper_gradient: Density,
    /// Paths breaking this cap are exempt from the upper-gradient inequality.
    pub excluded: Option<Cap>,
}

impl DiscreteFunction {
    /// `values` with the constant upper gradient 1.
    pub fn unit_gradient(g: &MetricMeasureGraph, values: Vec<f64>) -> Self {
        Self {
            values,
            upper_gradient: Density::constant(g.edge_count(), 1.0),
            excluded: None,
        }
    }

    fn validate(&self, g: &MetricMeasureGraph) -> Result<()> {
        if self.values.len() != g.node_count() {
            return Err(invalid(format!(
                "function has {} values for {} nodes",
                self.values.len(),
                g.node_count()
            )));
        }
        if self.upper_gradient.values().len() != g.edge_count() {
            return Err(invalid("upper gradient must have one value per edge"));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("function values must be finite"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct UpperGradientReport {
    /// Largest `|f(end) − f(start)| − ∫ g` over non-excluded paths; at most
    /// zero when `g` is an upper gradient.
    pub violation: f64,
    #[serde(serialize_with = "path_nodes")]
    pub path: Option<Path>,
}

fn path_nodes<S: serde::Serializer>(
    path: &Option<Path>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    use serde::Serialize;
    path.as_ref().map(|p| p.nodes()).serialize(s)
}

impl UpperGradientReport {
    pub fn holds(&self, tol: f64) -> bool {
        self.violation <= tol
    }
}

/// Worst violation of the upper-gradient inequality. Without an excluded
/// family this is one multi-source Dijkstra seeded with the function values;
/// with one, a bicriteria label search per start node.
pub fn upper_gradient_violations(
    g: &MetricMeasureGraph,
    f: &DiscreteFunction,
) -> Result<UpperGradientReport> {
    f.validate(g)?;
    let cost = |e: EdgeId| f.upper_gradient.get(e) * g.edge(e).len;
    let seeds: Vec<(NodeId, f64)> = (0..g.node_count()).map(|x| (x, f.values[x])).collect();
    let sp = shortest_paths(g, &seeds, cost);
    let mut best: Option<(f64, Path)> = None;
    for y in 0..g.node_count() {
        let v = f.values[y] - sp.dist[y];
        if best.as_ref().is_none_or(|b| v > b.0) {
            let (start, edges) = sp.walk_to(y);
            best = Some((v, Path::from_walk(g, start, &edges)));
        }
    }
    let (violation, path) = best.expect("graphs have at least one node");
    let admitted = |path: &Path| match &f.excluded {
        None => true,
        Some(cap) => {
            let fam = FamilySpec::connecting(
                NodeSet::singleton(path.start()),
                NodeSet::singleton(path.end()),
            )
            .with_cap(cap.clone());
            fam.admits(g, path)
        }
    };
    if violation <= 0.0 || admitted(&path) {
        return Ok(UpperGradientReport {
            violation: violation.max(0.0),
            path: (violation > 0.0).then_some(path),
        });
    }
    let cap = f.excluded.as_ref().expect("admitted is trivial otherwise");
    let found = (0..g.node_count())
        .into_par_iter()
        .filter_map(|s| capped_worst_from(g, f, cap, s))
        .reduce_with(|a, b| {
            if b.0 > a.0 || (b.0 == a.0 && b.1.start() < a.1.start()) {
                b
            } else {
                a
            }
        });
    Ok(match found {
        Some((v, p)) if v > 0.0 => UpperGradientReport {
            violation: v,
            path: Some(p),
        },
        _ => UpperGradientReport {
            violation: 0.0,
            path: None,
        },
    })
}

/// Pareto labels (gradient cost, cap length) from `s`; returns the best
/// `f(y) − f(s) − cost` over admitted paths.
fn capped_worst_from(
    g: &MetricMeasureGraph,
    f: &DiscreteFunction,
    cap: &Cap,
    s: NodeId,
) -> Option<(f64, Path)> {
    let d = match cap {
        Cap::Quasiconvex { .. } => Some(g.distances_from(s)),
        _ => None,
    };
    type Weight<'a> = Box<dyn Fn(EdgeId) -> f64 + Sync + 'a>;
    type Bound<'a> = Box<dyn Fn(NodeId) -> f64 + 'a>;
    let (weight, bound): (Weight, Bound) = match cap {
        Cap::Unbounded => (Box::new(|e| g.edge(e).len), Box::new(|_| f64::INFINITY)),
        Cap::Length { functional, value } => {
            let m = functional.clone();
            let value = *value;
            (
                Box::new(move |e| m.as_ref().map_or(g.edge(e).len, |m| m.get(e))),
                Box::new(move |_| value),
            )
        }
        Cap::Quasiconvex { c } => {
            let (c, d) = (*c, d.clone().expect("computed above"));
            (Box::new(|e| g.edge(e).len), Box::new(move |y| c * d[y]))
        }
    };
    let reach = (0..g.node_count()).map(&bound).fold(0.0, f64::max);
    struct Label {
        node: NodeId,
        a: f64,
        b: f64,
        pred: Option<(usize, EdgeId)>,
    }
    let mut labels = vec![Label {
        node: s,
        a: 0.0,
        b: 0.0,
        pred: None,
    }];
    let mut frontier: Vec<Vec<usize>> = vec![Vec::new(); g.node_count()];
    frontier[s].push(0);
    let mut queue = std::collections::VecDeque::from([0usize]);
    let mut best: Option<(f64, usize)> = None;
    while let Some(i) = queue.pop_front() {
        let (v, a, b) = (labels[i].node, labels[i].a, labels[i].b);
        if !frontier[v].contains(&i) {
            continue;
        }
        if v != s && within_cap(b, bound(v)) {
            let gain = f.values[v] - f.values[s] - a;
            if best.is_none_or(|(bv, _)| gain > bv) {
                best = Some((gain, i));
            }
        }
        for &(y, e) in g.neighbors(v) {
            let (na, nb) = (a + f.upper_gradient.get(e) * g.edge(e).len, b + weight(e));
            if !within_cap(nb, reach) {
                continue;
            }
            if frontier[y]
                .iter()
                .any(|&j| labels[j].a <= na && labels[j].b <= nb)
            {
                continue;
            }
            frontier[y].retain(|&j| !(na <= labels[j].a && nb <= labels[j].b));
            labels.push(Label {
                node: y,
                a: na,
                b: nb,
                pred: Some((i, e)),
            });
            frontier[y].push(labels.len() - 1);
            queue.push_back(labels.len() - 1);
        }
    }
    let (gain, mut i) = best?;
    let mut edges = Vec::new();
    while let Some((prev, e)) = labels[i].pred {
        edges.push(e);
        i = prev;
    }
    edges.reverse();
    Some((gain, Path::from_walk(g, s, &edges)))
}

#[derive(Clone, Debug, Serialize)]
pub struct LipschitzReport {
    /// Largest `|f(x) − f(y)| / d(x, y)` over pairs of matrix nodes.
    pub constant: f64,
    pub worst_pair: Option<(NodeId, NodeId)>,
    pub passed: bool,
}

/// Lipschitz constant of `f` with respect to `d` on the nodes of `d`, after
/// confirming that `f`'s declared upper gradient holds. Passes iff the
/// constant is at most `1 + tol`.
pub fn sobolev_to_lipschitz_check(
    g: &MetricMeasureGraph,
    d: &MetricMatrix,
    f: &DiscreteFunction,
    tol: f64,
) -> Result<LipschitzReport> {
    let ug = upper_gradient_violations(g, f)?;
    if !ug.holds(tol) {
        return Err(Error::UpperGradient {
            violation: ug.violation,
            path: ug.path.map(|p| p.nodes().to_vec()).unwrap_or_default(),
        });
    }
    if f.upper_gradient.values().iter().any(|&v| v > 1.0 + 1e-12) {
        return Err(invalid("the check needs an upper gradient bounded by 1"));
    }
    for &x in d.nodes() {
        g.check_node(x)?;
    }
    let mut report = LipschitzReport {
        constant: 0.0,
        worst_pair: None,
        passed: true,
    };
    let nodes = d.nodes();
    for i in 0..nodes.len() {
        for j in i + 1..nodes.len() {
            let rise = (f.values[nodes[i]] - f.values[nodes[j]]).abs();
            let ratio = if rise == 0.0 {
                0.0
            } else if d.get(i, j) == 0.0 {
                f64::INFINITY
            } else {
                rise / d.get(i, j)
            };
            if ratio > report.constant {
                report.constant = ratio;
                report.worst_pair = Some((nodes[i], nodes[j]));
            }
        }
    }
    report.passed = report.constant <= 1.0 + tol;
    Ok(report)
}

/// Function built from a density that kills the quasiconvex family, as in
/// the failure direction of Sobolev-to-Lipschitz.
#[derive(Clone, Debug, Serialize)]
pub struct Counterexample {
    /// `v(y) = min over paths from E to y of Σ (1 + g/n)·ℓ`.
    #[serde(skip)]
    pub values: Vec<f64>,
    /// Upper gradient `1 + g/n` of `v`.
    #[serde(skip)]
    pub upper_gradient: Density,
    /// `n` in `1 + g/n`.
    pub n: f64,
    /// Modulus of the killed family.
    pub modulus: f64,
    /// `Σ μ (g/n)^p`: the size of the perturbation of the unit gradient.
    pub perturbation_energy: f64,
    /// Largest `|v(y) − v(x)| / d(x, y)` over `x ∈ E`, `y ∈ F`.
    pub lipschitz_ratio: f64,
    pub worst_pair: (NodeId, NodeId),
}

/// Builds `v` from the extremal density of `Γ(E, F; C)` scaled so that every
/// member costs at least an extra `(C − 1)·max d(E, y)`. Members then cost at
/// least `C·d` and non-members are longer than `C·d` anyway, so `v` rises
/// faster than `d` between the sets although its gradient is `1` up to a
/// perturbation of energy `((C − 1)·D)^p · Mod`.
pub fn killing_counterexample(
    g: &MetricMeasureGraph,
    p: f64,
    e: &NodeSet,
    f: &NodeSet,
    c: f64,
    n: f64,
) -> Result<Counterexample> {
    if !(c > 1.0) || !(n > 0.0) || !p.is_finite() {
        return Err(invalid("need C > 1, n > 0 and finite p"));
    }
    let fam = FamilySpec::quasiconvex(e.clone(), f.clone(), c);
    let r = p_modulus(g, &fam, p, &ModulusParams::with_tol(1e-4))?;
    let seeds: Vec<(NodeId, f64)> = e.iter().map(|x| (x, 0.0)).collect();
    let dist_e = shortest_paths(g, &seeds, |k| g.edge(k).len).dist;
    let reach = f.iter().map(|y| dist_e[y]).fold(0.0, f64::max);
    let k = n * (c - 1.0) * reach;
    let grad: Vec<f64> = r
        .rho
        .values()
        .iter()
        .map(|&rho| 1.0 + k * rho / n)
        .collect();
    let upper_gradient = Density::new(grad)?;
    let perturbation_energy =
        Density::new(r.rho.values().iter().map(|&x| k * x / n).collect())?.energy(g, p);
    let values = shortest_paths(g, &seeds, |k| upper_gradient.get(k) * g.edge(k).len).dist;
    let mut worst = (0.0, (0, 0));
    for x in e.iter() {
        let d = g.distances_from(x);
        for y in f.iter() {
            let ratio = (values[y] - values[x]).abs() / d[y];
            if ratio > worst.0 {
                worst = (ratio, (x, y));
            }
        }
    }
    Ok(Counterexample {
        values,
        upper_gradient,
        n,
        modulus: r.value,
        perturbation_energy,
        lipschitz_ratio: worst.0,
        worst_pair: worst.1,
    })
}
