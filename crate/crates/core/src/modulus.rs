//! p-modulus of path families by cutting planes.
//!
//! The restricted problem over a finite path set Π is solved in the dual,
//!
//! ```text
//! max_{λ ≥ 0}  Σ_k λ_k − (p−1)/p · Σ_e f_e ρ_e(f_e),
//!     f_e = Σ_k λ_k ℓ_e [e ∈ γ_k],   ρ_e(f) = (f / (p μ_e))^{1/(p−1)},
//! ```
//!
//! by exact coordinate ascent. Every dual iterate gives a lower bound, and the
//! oracle's shortest ρ-length `m` turns the current density into the
//! admissible `ρ/m`, giving an upper bound. The loop stops on a small
//! relative gap or, when a threshold is given, as soon as the bounds
//! decide which side of it the modulus lies on.

use std::collections::HashSet;

use minilp::{ComparisonOp, OptimizationDirection, Problem};
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::graph::{EdgeId, MetricMeasureGraph, NodeId, NodeSet, Path};
use crate::length_map::EdgeLengthMap;
use crate::oracle::{within_cap, Oracle};

pub use crate::oracle::separation_oracle;

/// Nonnegative edge density.
#[derive(Clone, Debug, PartialEq)]
pub struct Density(Vec<f64>);

impl Density {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some((e, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v >= 0.0))
        {
            return Err(invalid(format!(
                "density on edge {e} is {v}; it must be finite and nonnegative"
            )));
        }
        Ok(Self(values))
    }

    pub fn zeros(edge_count: usize) -> Self {
        Self(vec![0.0; edge_count])
    }

    pub fn constant(edge_count: usize, value: f64) -> Self {
        Self(vec![value; edge_count])
    }

    pub fn get(&self, e: EdgeId) -> f64 {
        self.0[e]
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    /// `Σ_e μ_e ρ_e^p`, or `max_e ρ_e` for `p = ∞`.
    pub fn energy(&self, g: &MetricMeasureGraph, p: f64) -> f64 {
        energy(g, &self.0, p)
    }

    /// `Σ_{e∈γ} ρ_e ℓ_e`.
    pub fn path_length(&self, g: &MetricMeasureGraph, path: &Path) -> f64 {
        path.edges()
            .iter()
            .map(|&e| self.0[e] * g.edge(e).len)
            .sum()
    }
}

fn energy(g: &MetricMeasureGraph, rho: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        return rho.iter().copied().fold(0.0, f64::max);
    }
    g.edges()
        .iter()
        .zip(rho)
        .map(|(e, &r)| if r == 0.0 { 0.0 } else { e.mu * pow(r, p) })
        .sum()
}

fn pow(x: f64, p: f64) -> f64 {
    if p == 2.0 {
        x * x
    } else if p == 1.0 {
        x
    } else {
        x.powf(p)
    }
}

/// Length restriction on family members.
#[derive(Clone, Debug, PartialEq)]
pub enum Cap {
    Unbounded,
    /// Members have `functional`-length at most `value`; `None` means the
    /// graph's own edge lengths.
    Length {
        functional: Option<EdgeLengthMap>,
        value: f64,
    },
    /// Members joining `x` and `y` have length at most `c · d(x, y)`.
    Quasiconvex {
        c: f64,
    },
}

/// Family of simple paths from `source` to `target`, optionally capped.
#[derive(Clone, Debug, PartialEq)]
pub struct FamilySpec {
    pub source: NodeSet,
    pub target: NodeSet,
    pub cap: Cap,
}

impl FamilySpec {
    pub fn connecting(source: NodeSet, target: NodeSet) -> Self {
        Self {
            source,
            target,
            cap: Cap::Unbounded,
        }
    }

    pub fn with_cap(mut self, cap: Cap) -> Self {
        self.cap = cap;
        self
    }

    /// Paths of `w`-length at most `value` (`w = ℓ` when `None`).
    pub fn capped(
        source: NodeSet,
        target: NodeSet,
        functional: Option<EdgeLengthMap>,
        value: f64,
    ) -> Self {
        Self {
            source,
            target,
            cap: Cap::Length { functional, value },
        }
    }

    /// Paths with `ℓ(γ) ≤ c · d(γ(0), γ(1))`.
    pub fn quasiconvex(source: NodeSet, target: NodeSet, c: f64) -> Self {
        Self {
            source,
            target,
            cap: Cap::Quasiconvex { c },
        }
    }

    pub fn validate(&self, g: &MetricMeasureGraph) -> Result<()> {
        if self.source.is_empty() || self.target.is_empty() {
            return Err(invalid("family endpoints sets must be nonempty"));
        }
        for x in self.source.iter().chain(self.target.iter()) {
            g.check_node(x)?;
        }
        match &self.cap {
            Cap::Unbounded => {}
            Cap::Length { functional, value } => {
                if !(*value >= 0.0) {
                    return Err(invalid(format!("cap value {value} must be nonnegative")));
                }
                if let Some(m) = functional {
                    m.check_len(g)?;
                }
            }
            Cap::Quasiconvex { c } => {
                if !(c.is_finite() && *c > 0.0) {
                    return Err(invalid(format!(
                        "quasiconvexity cap {c} must be positive and finite"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Whether `path` belongs to the family (oriented from source to target).
    pub fn admits(&self, g: &MetricMeasureGraph, path: &Path) -> bool {
        if !self.source.contains(path.start()) || !self.target.contains(path.end()) {
            return false;
        }
        match &self.cap {
            Cap::Unbounded => true,
            Cap::Length { functional, value } => {
                let b: f64 = match functional {
                    Some(m) => path.length_under(m),
                    None => path.edges().iter().map(|&e| g.edge(e).len).sum(),
                };
                within_cap(b, *value)
            }
            Cap::Quasiconvex { c } => {
                let len: f64 = path.edges().iter().map(|&e| g.edge(e).len).sum();
                within_cap(len, c * g.distance(path.start(), path.end()))
            }
        }
    }

    fn common_node(&self) -> Option<NodeId> {
        self.source.iter().find(|&x| self.target.contains(x))
    }
}

#[derive(Clone, Debug)]
pub struct ModulusParams {
    /// Relative duality gap at which the solve stops.
    pub tol: f64,
    /// Outer (cutting-plane) iteration budget.
    pub max_iter: usize,
    /// Stop as soon as the bounds put the modulus on one side of this value.
    pub threshold: Option<f64>,
    /// Paths seeding the active set; non-members are ignored.
    pub warm_start: Vec<Path>,
}

impl Default for ModulusParams {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iter: 5_000,
            threshold: None,
            warm_start: Vec::new(),
        }
    }
}

impl ModulusParams {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ModulusFlag {
    Finite,
    /// Source and target meet, so the family holds a constant path.
    Infinite,
    /// No path satisfies the cap.
    Empty,
}

#[derive(Clone, Debug)]
pub struct ModulusResult {
    /// Energy of `rho`, an upper bound on the modulus.
    pub value: f64,
    pub flag: ModulusFlag,
    /// Admissible density achieving `value`.
    pub rho: Density,
    /// Paths carrying positive dual weight.
    pub active_paths: Vec<Path>,
    /// Dual weight of each active path.
    pub weights: Vec<f64>,
    pub iters: usize,
    /// Best certified lower bound.
    pub lower: f64,
    /// Best certified upper bound (at most `value`).
    pub upper: f64,
    /// `(value − lower) / value`.
    pub gap: f64,
    /// True when the gap reached the tolerance; false after an early
    /// threshold decision.
    pub converged: bool,
}

impl ModulusResult {
    fn infinite(g: &MetricMeasureGraph, x: NodeId) -> Self {
        Self {
            value: f64::INFINITY,
            flag: ModulusFlag::Infinite,
            rho: Density::zeros(g.edge_count()),
            active_paths: vec![Path::constant(x)],
            weights: vec![f64::INFINITY],
            iters: 0,
            lower: f64::INFINITY,
            upper: f64::INFINITY,
            gap: 0.0,
            converged: true,
        }
    }

    fn empty(g: &MetricMeasureGraph) -> Self {
        Self {
            value: 0.0,
            flag: ModulusFlag::Empty,
            rho: Density::zeros(g.edge_count()),
            active_paths: Vec::new(),
            weights: Vec::new(),
            iters: 0,
            lower: 0.0,
            upper: 0.0,
            gap: 0.0,
            converged: true,
        }
    }

    /// Whether the modulus is at least `eps`, as certified by the bounds
    /// (the value itself when the solve converged).
    pub fn at_least(&self, eps: f64) -> bool {
        match self.flag {
            ModulusFlag::Infinite => true,
            ModulusFlag::Empty => false,
            ModulusFlag::Finite if self.converged => self.value >= eps,
            ModulusFlag::Finite => self.lower >= eps,
        }
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct RhoEntry {
            edge: EdgeId,
            value: f64,
        }
        #[derive(Serialize)]
        struct Out<'a> {
            value: f64,
            flag: ModulusFlag,
            rho: Vec<RhoEntry>,
            active_paths: Vec<&'a [NodeId]>,
            iters: usize,
            gap: f64,
        }
        let out = Out {
            value: self.value,
            flag: self.flag,
            rho: self
                .rho
                .values()
                .iter()
                .enumerate()
                .map(|(edge, &value)| RhoEntry { edge, value })
                .collect(),
            active_paths: self.active_paths.iter().map(|p| p.nodes()).collect(),
            iters: self.iters,
            gap: self.gap,
        };
        crate::io::to_json(&out)
    }
}

fn check_p(p: f64) -> Result<()> {
    if p >= 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("exponent p = {p} must lie in [1, ∞]")))
    }
}

/// Computes `Mod_p` of `fam`. `p = f64::INFINITY` gives the sup-norm modulus.
pub fn p_modulus(
    g: &MetricMeasureGraph,
    fam: &FamilySpec,
    p: f64,
    params: &ModulusParams,
) -> Result<ModulusResult> {
    check_p(p)?;
    fam.validate(g)?;
    if !(params.tol > 0.0) {
        return Err(invalid("modulus tolerance must be positive"));
    }
    if let Some(x) = fam.common_node() {
        return Ok(ModulusResult::infinite(g, x));
    }
    let oracle = Oracle::new(g, fam);
    if !oracle.family_nonempty() {
        return Ok(ModulusResult::empty(g));
    }
    if p.is_infinite() {
        Ok(sup_modulus(g, &oracle))
    } else if p == 1.0 {
        lp_modulus(g, fam, &oracle, params)
    } else {
        dual_ascent(g, fam, &oracle, p, params)
    }
}

/// Outcome of a positivity test.
#[derive(Clone, Debug)]
pub struct Positivity {
    pub positive: bool,
    /// Optimal (or deciding) density; for an empty family the zero density.
    pub certificate: ModulusResult,
}

/// Decides `Mod_p(fam) ≥ eps_mod`, stopping as soon as the bounds decide.
pub fn modulus_positive(
    g: &MetricMeasureGraph,
    fam: &FamilySpec,
    p: f64,
    eps_mod: f64,
) -> Result<Positivity> {
    modulus_positive_with(g, fam, p, eps_mod, ModulusParams::default())
}

pub fn modulus_positive_with(
    g: &MetricMeasureGraph,
    fam: &FamilySpec,
    p: f64,
    eps_mod: f64,
    mut params: ModulusParams,
) -> Result<Positivity> {
    if !(eps_mod > 0.0) {
        return Err(invalid("positivity threshold must be positive"));
    }
    params.threshold = Some(eps_mod);
    let certificate = p_modulus(g, fam, p, &params)?;
    Ok(Positivity {
        positive: certificate.at_least(eps_mod),
        certificate,
    })
}

/// Default positivity threshold `1e-9 · μ(X) / diam^p` (`diam^0` for p = ∞).
pub fn default_eps_mod(g: &MetricMeasureGraph, p: f64) -> f64 {
    let scale = if p.is_infinite() {
        1.0
    } else {
        g.diameter().powf(p)
    };
    1e-9 * g.total_node_measure() / scale
}

/// Sum over source–target pairs of the pairwise moduli. For a quasiconvex
/// cap each pair gets the uniform cap `c · d(x, y)`. This bounds the modulus
/// of the whole family from above.
pub fn pairwise_union_bound(
    g: &MetricMeasureGraph,
    fam: &FamilySpec,
    p: f64,
    params: &ModulusParams,
) -> Result<f64> {
    fam.validate(g)?;
    let mut total = 0.0;
    for x in fam.source.iter() {
        let dx = g.distances_from(x);
        for y in fam.target.iter() {
            let cap = match &fam.cap {
                Cap::Quasiconvex { c } => Cap::Length {
                    functional: None,
                    value: c * dx[y],
                },
                other => other.clone(),
            };
            let pair = FamilySpec {
                source: NodeSet::singleton(x),
                target: NodeSet::singleton(y),
                cap,
            };
            total += p_modulus(g, &pair, p, params)?.value;
        }
    }
    Ok(total)
}

/// `Mod_∞`: the constant density `1/L` is optimal, where `L` is the shortest
/// member length.
fn sup_modulus(g: &MetricMeasureGraph, oracle: &Oracle) -> ModulusResult {
    let ones = vec![1.0; g.edge_count()];
    let (path, len) = oracle.cheapest(&ones).expect("family is nonempty");
    let t = 1.0 / len;
    ModulusResult {
        value: t,
        flag: ModulusFlag::Finite,
        rho: Density::constant(g.edge_count(), t),
        active_paths: vec![path],
        weights: vec![1.0],
        iters: 1,
        lower: t,
        upper: t,
        gap: 0.0,
        converged: true,
    }
}

struct ActivePath {
    path: Path,
    edges: Vec<EdgeId>,
    lens: Vec<f64>,
    /// `Σ ℓ_e² / (2 μ_e)`, the slope of the path's ρ-length in its own weight
    /// when `p = 2`.
    slope2: f64,
    lambda: f64,
    idle: usize,
}

/// Restricted dual problem over the active path set.
struct Restricted<'a> {
    g: &'a MetricMeasureGraph,
    p: f64,
    paths: Vec<ActivePath>,
    keys: HashSet<Vec<NodeId>>,
    f: Vec<f64>,
    rho: Vec<f64>,
}

impl<'a> Restricted<'a> {
    fn new(g: &'a MetricMeasureGraph, p: f64) -> Self {
        Self {
            g,
            p,
            paths: Vec::new(),
            keys: HashSet::new(),
            f: vec![0.0; g.edge_count()],
            rho: vec![0.0; g.edge_count()],
        }
    }

    fn rho_of(&self, f: f64, e: EdgeId) -> f64 {
        if f <= 0.0 {
            return 0.0;
        }
        let mu = self.g.edge(e).mu;
        if self.p == 2.0 {
            f / (2.0 * mu)
        } else {
            (f / (self.p * mu)).powf(1.0 / (self.p - 1.0))
        }
    }

    fn insert(&mut self, path: Path) -> bool {
        if path.is_constant() || !self.keys.insert(path.nodes().to_vec()) {
            return false;
        }
        let edges = path.edges().to_vec();
        let lens: Vec<f64> = edges.iter().map(|&e| self.g.edge(e).len).collect();
        let slope2 = edges
            .iter()
            .zip(&lens)
            .map(|(&e, l)| l * l / (2.0 * self.g.edge(e).mu))
            .sum();
        self.paths.push(ActivePath {
            path,
            edges,
            lens,
            slope2,
            lambda: 0.0,
            idle: 0,
        });
        true
    }

    fn refresh(&mut self) {
        self.f.iter_mut().for_each(|x| *x = 0.0);
        for ap in &self.paths {
            if ap.lambda > 0.0 {
                for (&e, &l) in ap.edges.iter().zip(&ap.lens) {
                    self.f[e] += ap.lambda * l;
                }
            }
        }
        for e in 0..self.f.len() {
            self.f[e] = self.f[e].max(0.0);
            self.rho[e] = self.rho_of(self.f[e], e);
        }
    }

    fn rho_length(&self, k: usize) -> f64 {
        let ap = &self.paths[k];
        ap.edges
            .iter()
            .zip(&ap.lens)
            .map(|(&e, &l)| self.rho[e] * l)
            .sum()
    }

    /// ρ-length of path `k` minus one, and its derivative, if the path's
    /// weight moved by `t`.
    fn shifted_residual(&self, k: usize, t: f64) -> (f64, f64) {
        let ap = &self.paths[k];
        let r = 1.0 / (self.p - 1.0);
        let (mut phi, mut slope) = (-1.0, 0.0);
        for (&e, &l) in ap.edges.iter().zip(&ap.lens) {
            let f = self.f[e] + t * l;
            if f > 0.0 {
                let rho = self.rho_of(f, e);
                phi += l * rho;
                slope += l * l * r * rho / f;
            }
        }
        (phi, slope)
    }

    /// Weight change making path `k` tight, clamped so its weight stays
    /// nonnegative.
    fn coordinate_step(&self, k: usize, len: f64) -> f64 {
        let lo = -self.paths[k].lambda;
        if self.p == 2.0 {
            return ((1.0 - len) / self.paths[k].slope2).max(lo);
        }
        let (mut a, mut b) = if len < 1.0 {
            (0.0, f64::INFINITY)
        } else {
            (lo, 0.0)
        };
        if len >= 1.0 && self.shifted_residual(k, lo).0 >= 0.0 {
            return lo;
        }
        // safeguarded Newton on the monotone residual
        let mut t = 0.0;
        let (mut phi, mut slope) = self.shifted_residual(k, t);
        for _ in 0..100 {
            if phi.abs() <= 1e-13 {
                return t;
            }
            if phi < 0.0 {
                a = t;
            } else {
                b = t;
            }
            let mut next = if slope > 0.0 {
                t - phi / slope
            } else {
                f64::NAN
            };
            if !(next > a && next < b) {
                next = if b.is_finite() {
                    0.5 * (a + b)
                } else {
                    a + 2.0 * a.abs().max(1e-12)
                };
            }
            if b.is_finite() && b - a <= 1e-15 * a.abs().max(b.abs()) {
                break;
            }
            t = next;
            (phi, slope) = self.shifted_residual(k, t);
        }
        t
    }

    /// One pass of exact coordinate ascent. Returns the largest KKT residual
    /// seen before each update.
    fn sweep(&mut self) -> f64 {
        let mut worst = 0.0_f64;
        for k in 0..self.paths.len() {
            let len = self.rho_length(k);
            let lambda = self.paths[k].lambda;
            let resid = if lambda > 0.0 {
                (1.0 - len).abs()
            } else {
                (1.0 - len).max(0.0)
            };
            worst = worst.max(resid);
            if resid == 0.0 {
                continue;
            }
            let t = self.coordinate_step(k, len);
            if t == 0.0 {
                continue;
            }
            let new_lambda = (lambda + t).max(0.0);
            let t = new_lambda - lambda;
            self.paths[k].lambda = new_lambda;
            let ap = &self.paths[k];
            for i in 0..ap.edges.len() {
                let e = ap.edges[i];
                let f = (self.f[e] + t * ap.lens[i]).max(0.0);
                self.f[e] = f;
            }
            for i in 0..self.paths[k].edges.len() {
                let e = self.paths[k].edges[i];
                self.rho[e] = self.rho_of(self.f[e], e);
            }
        }
        worst
    }

    fn dual_value(&self) -> f64 {
        let total: f64 = self.paths.iter().map(|ap| ap.lambda).sum();
        let spent: f64 = self.f.iter().zip(&self.rho).map(|(f, r)| f * r).sum();
        total - (self.p - 1.0) / self.p * spent
    }

    fn solve(&mut self, tol: f64, max_sweeps: usize) -> f64 {
        let mut resid = f64::INFINITY;
        for s in 1..=max_sweeps {
            resid = self.sweep();
            if resid <= tol {
                break;
            }
            if s % 64 == 0 {
                self.refresh();
            }
        }
        resid
    }

    fn retire_idle(&mut self, patience: usize) {
        for ap in &mut self.paths {
            if ap.lambda > 0.0 {
                ap.idle = 0;
            } else {
                ap.idle += 1;
            }
        }
        let keys = &mut self.keys;
        self.paths.retain(|ap| {
            let keep = ap.idle <= patience;
            if !keep {
                keys.remove(ap.path.nodes());
            }
            keep
        });
    }
}

const INNER_TOL_FLOOR: f64 = 1e-14;
const MAX_SWEEPS: usize = 4_000;
const IDLE_PATIENCE: usize = 25;

fn dual_ascent(
    g: &MetricMeasureGraph,
    fam: &FamilySpec,
    oracle: &Oracle,
    p: f64,
    params: &ModulusParams,
) -> Result<ModulusResult> {
    let mut state = Restricted::new(g, p);
    for path in &params.warm_start {
        if path.validate(g).is_ok() && fam.admits(g, path) {
            state.insert(path.clone());
        }
    }
    let ones = vec![1.0; g.edge_count()];
    let (first, _) = oracle.cheapest(&ones).expect("family is nonempty");
    state.insert(first);

    let mut lower = 0.0_f64;
    let mut upper = f64::INFINITY;
    let mut inner_tol = 1e-3_f64.max(params.tol);
    for iter in 1..=params.max_iter {
        state.solve(inner_tol, MAX_SWEEPS);
        state.refresh();
        lower = lower.max(state.dual_value());
        let (path, m) = oracle.cheapest(&state.rho).expect("family is nonempty");
        let current = if m > 0.0 {
            energy(g, &state.rho, p) / m.powf(p)
        } else {
            f64::INFINITY
        };
        upper = upper.min(current);

        let gap = (current - lower) / current;
        let decided = params
            .threshold
            .is_some_and(|eps| lower >= eps || upper < eps);
        if gap <= params.tol || decided {
            return Ok(finish(
                &state,
                m,
                current,
                lower,
                upper,
                iter,
                gap <= params.tol,
            ));
        }

        let added = m < 1.0 && state.insert(path);
        if !added {
            inner_tol = (inner_tol * 0.1).max(INNER_TOL_FLOOR);
        }
        let rel_gap = if upper.is_finite() {
            (upper - lower) / upper
        } else {
            1.0
        };
        inner_tol = inner_tol.min((0.1 * rel_gap).max(INNER_TOL_FLOOR));
        state.retire_idle(IDLE_PATIENCE);
    }
    Err(Error::NonConvergence {
        iterations: params.max_iter,
        lower,
        upper,
    })
}

fn finish(
    state: &Restricted,
    m: f64,
    value: f64,
    lower: f64,
    upper: f64,
    iters: usize,
    converged: bool,
) -> ModulusResult {
    let scale = if m > 0.0 { 1.0 / m } else { 0.0 };
    let rho = Density(state.rho.iter().map(|r| r * scale).collect());
    let (active_paths, weights) = state
        .paths
        .iter()
        .filter(|ap| ap.lambda > 0.0)
        .map(|ap| (ap.path.clone(), ap.lambda))
        .unzip();
    ModulusResult {
        value,
        flag: ModulusFlag::Finite,
        rho,
        active_paths,
        weights,
        iters,
        lower,
        upper,
        gap: if value > 0.0 {
            ((value - lower) / value).max(0.0)
        } else {
            0.0
        },
        converged,
    }
}

/// `p = 1`: both the restricted primal and its dual are small linear
/// programs.
fn lp_modulus(
    g: &MetricMeasureGraph,
    fam: &FamilySpec,
    oracle: &Oracle,
    params: &ModulusParams,
) -> Result<ModulusResult> {
    let mut paths: Vec<Path> = Vec::new();
    let mut keys: HashSet<Vec<NodeId>> = HashSet::new();
    let mut push = |p: Path, paths: &mut Vec<Path>| {
        if !p.is_constant() && keys.insert(p.nodes().to_vec()) {
            paths.push(p);
            true
        } else {
            false
        }
    };
    for path in &params.warm_start {
        if path.validate(g).is_ok() && fam.admits(g, path) {
            push(path.clone(), &mut paths);
        }
    }
    let ones = vec![1.0; g.edge_count()];
    push(
        oracle.cheapest(&ones).expect("family is nonempty").0,
        &mut paths,
    );

    let mut lower = 0.0_f64;
    let mut upper = f64::INFINITY;
    for iter in 1..=params.max_iter {
        let (rho, value) = lp_primal(g, &paths)?;
        lower = lower.max(value);
        let (path, m) = oracle.cheapest(&rho).expect("family is nonempty");
        let current = if m > 0.0 { value / m } else { f64::INFINITY };
        upper = upper.min(current);
        let gap = (current - lower) / current;
        let decided = params
            .threshold
            .is_some_and(|eps| lower >= eps || upper < eps);
        if gap <= params.tol || decided {
            let weights = lp_dual(g, &paths)?;
            let scale = 1.0 / m;
            let (active_paths, weights) = paths
                .iter()
                .zip(weights)
                .filter(|(_, w)| *w > 0.0)
                .map(|(p, w)| (p.clone(), w))
                .unzip();
            return Ok(ModulusResult {
                value: current,
                flag: ModulusFlag::Finite,
                rho: Density(rho.iter().map(|r| r * scale).collect()),
                active_paths,
                weights,
                iters: iter,
                lower,
                upper,
                gap: gap.max(0.0),
                converged: gap <= params.tol,
            });
        }
        if !(m < 1.0 && push(path, &mut paths)) {
            return Err(Error::NonConvergence {
                iterations: iter,
                lower,
                upper,
            });
        }
    }
    Err(Error::NonConvergence {
        iterations: params.max_iter,
        lower,
        upper,
    })
}

fn lp_edges(paths: &[Path]) -> Vec<EdgeId> {
    let mut used: Vec<EdgeId> = paths
        .iter()
        .flat_map(|p| p.edges().iter().copied())
        .collect();
    used.sort_unstable();
    used.dedup();
    used
}

fn lp_primal(g: &MetricMeasureGraph, paths: &[Path]) -> Result<(Vec<f64>, f64)> {
    let used = lp_edges(paths);
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<_> = used
        .iter()
        .map(|&e| lp.add_var(g.edge(e).mu, (0.0, f64::INFINITY)))
        .collect();
    for p in paths {
        let terms: Vec<_> = p
            .edges()
            .iter()
            .map(|e| {
                (
                    vars[used.binary_search(e).expect("edge is used")],
                    g.edge(*e).len,
                )
            })
            .collect();
        lp.add_constraint(terms.as_slice(), ComparisonOp::Ge, 1.0);
    }
    let sol = lp
        .solve()
        .map_err(|e| Error::Unsupported(format!("linear program failed: {e}")))?;
    let mut rho = vec![0.0; g.edge_count()];
    for (i, &e) in used.iter().enumerate() {
        rho[e] = sol[vars[i]].max(0.0);
    }
    Ok((rho, sol.objective()))
}

fn lp_dual(g: &MetricMeasureGraph, paths: &[Path]) -> Result<Vec<f64>> {
    let used = lp_edges(paths);
    let mut lp = Problem::new(OptimizationDirection::Maximize);
    let vars: Vec<_> = paths
        .iter()
        .map(|_| lp.add_var(1.0, (0.0, f64::INFINITY)))
        .collect();
    for &e in &used {
        let terms: Vec<_> = paths
            .iter()
            .enumerate()
            .filter(|(_, p)| p.edges().contains(&e))
            .map(|(k, _)| (vars[k], g.edge(e).len))
            .collect();
        lp.add_constraint(terms.as_slice(), ComparisonOp::Le, g.edge(e).mu);
    }
    let sol = lp
        .solve()
        .map_err(|e| Error::Unsupported(format!("linear program failed: {e}")))?;
    Ok(vars.iter().map(|&v| sol[v].max(0.0)).collect())
}
