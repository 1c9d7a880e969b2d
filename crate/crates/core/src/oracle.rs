//! Separation oracle: cheapest family member under a density.
//!
//! Uncapped families reduce to multi-source Dijkstra. Capped families use
//! exact label-setting over (ρ-length, cap-length) pairs with an A*
//! potential, trying the unconstrained optimum first.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::graph::{shortest_paths, EdgeId, Key, MetricMeasureGraph, NodeId, Path};
use crate::modulus::{Cap, Density, FamilySpec};

/// Relative slack applied to cap comparisons so paths sitting exactly on the
/// cap are not lost to rounding.
pub(crate) const CAP_SLACK: f64 = 1e-12;

pub(crate) fn within_cap(b: f64, cap: f64) -> bool {
    b <= cap + CAP_SLACK * cap.abs().max(1e-300)
}

/// Family data that does not depend on the density.
pub(crate) struct Oracle<'a> {
    g: &'a MetricMeasureGraph,
    fam: &'a FamilySpec,
    target: Vec<bool>,
    sources: Vec<NodeId>,
    /// cap-functional distance to F (uniform caps) or ℓ-distance to F
    /// (quasiconvex caps)
    to_target: Vec<f64>,
    nonempty: bool,
}

impl<'a> Oracle<'a> {
    pub(crate) fn new(g: &'a MetricMeasureGraph, fam: &'a FamilySpec) -> Self {
        let target = fam.target.mask(g.node_count());
        let sources = fam.source.to_vec();
        let from_target: Vec<(NodeId, f64)> = fam.target.iter().map(|t| (t, 0.0)).collect();
        let (to_target, nonempty) = match &fam.cap {
            Cap::Unbounded => (Vec::new(), true),
            Cap::Length { functional, value } => {
                let w = |e: EdgeId| functional.as_ref().map_or(g.edge(e).len, |m| m.get(e));
                let d = shortest_paths(g, &from_target, w).dist;
                let nonempty = sources.iter().any(|&s| within_cap(d[s], *value));
                (d, nonempty)
            }
            Cap::Quasiconvex { c } => {
                let d = shortest_paths(g, &from_target, |e| g.edge(e).len).dist;
                (d, *c >= 1.0 - CAP_SLACK)
            }
        };
        Self {
            g,
            fam,
            target,
            sources,
            to_target,
            nonempty,
        }
    }

    pub(crate) fn family_nonempty(&self) -> bool {
        self.nonempty
    }

    fn cap_weight(&self, e: EdgeId) -> f64 {
        match &self.fam.cap {
            Cap::Length {
                functional: Some(m),
                ..
            } => m.get(e),
            _ => self.g.edge(e).len,
        }
    }

    /// Cheapest member under `rho` and its ρ-length, or `None` for an empty
    /// family.
    pub(crate) fn cheapest(&self, rho: &[f64]) -> Option<(Path, f64)> {
        if !self.nonempty {
            return None;
        }
        let g = self.g;
        let weight = |e: EdgeId| rho[e] * g.edge(e).len;
        let seeds: Vec<(NodeId, f64)> = self.sources.iter().map(|&s| (s, 0.0)).collect();
        let sp = shortest_paths(g, &seeds, weight);
        let t = self.best_target(&sp.dist)?;
        let (start, edges) = sp.walk_to(t);
        let path = Path::from_walk(g, start, &edges);
        if self.fam.admits(g, &path) {
            let a = path.edges().iter().map(|&e| weight(e)).sum();
            return Some((path, a));
        }

        let from_target: Vec<(NodeId, f64)> = self.fam.target.iter().map(|t| (t, 0.0)).collect();
        let h = shortest_paths(g, &from_target, weight).dist;
        match &self.fam.cap {
            Cap::Unbounded => unreachable!("unconstrained optimum is always admitted"),
            Cap::Length { value, .. } => {
                let cap = *value;
                let search = LabelSearch {
                    g,
                    rho,
                    h: &h,
                    target: &self.target,
                    cap_weight: |e| self.cap_weight(e),
                };
                search
                    .run(
                        &self.sources,
                        f64::INFINITY,
                        |_, b| within_cap(b, cap),
                        |y, b| !within_cap(b + self.to_target[y], cap),
                    )
                    .map(|(a, start, edges)| (Path::from_walk(g, start, &edges), a))
            }
            Cap::Quasiconvex { c } => {
                let c = *c;
                let mut order: Vec<NodeId> = self.sources.clone();
                order.sort_by(|&x, &y| h[x].total_cmp(&h[y]).then(x.cmp(&y)));
                let mut best: Option<(f64, NodeId, Vec<EdgeId>)> = None;
                for s in order {
                    let bound = best.as_ref().map_or(f64::INFINITY, |b| b.0);
                    if h[s] >= bound {
                        break;
                    }
                    let d = g.distances_from(s);
                    let reach = self.fam.target.iter().map(|t| d[t]).fold(0.0_f64, f64::max);
                    let search = LabelSearch {
                        g,
                        rho,
                        h: &h,
                        target: &self.target,
                        cap_weight: |e| g.edge(e).len,
                    };
                    let found = search.run(
                        &[s],
                        bound,
                        |t, b| within_cap(b, c * d[t]),
                        |y, b| !within_cap(b + self.to_target[y], c * reach),
                    );
                    if let Some((a, start, edges)) = found {
                        if a < bound {
                            best = Some((a, start, edges));
                        }
                    }
                }
                best.map(|(a, start, edges)| (Path::from_walk(g, start, &edges), a))
            }
        }
    }

    /// Target with the smallest label, lowest id on ties.
    fn best_target(&self, dist: &[f64]) -> Option<NodeId> {
        self.fam
            .target
            .iter()
            .filter(|&t| dist[t].is_finite())
            .min_by(|&x, &y| dist[x].total_cmp(&dist[y]).then(x.cmp(&y)))
    }
}

#[derive(Clone, Copy)]
struct Label {
    node: NodeId,
    a: f64,
    pred: Option<(u32, EdgeId)>,
}

/// Exact bicriteria label-setting. Labels are popped by `a + h[node]`; since
/// `h` is a consistent lower bound on the remaining ρ-length, a popped label
/// is dominated iff an earlier label at the same node had smaller or equal
/// cap-length.
struct LabelSearch<'s, W> {
    g: &'s MetricMeasureGraph,
    rho: &'s [f64],
    h: &'s [f64],
    target: &'s [bool],
    cap_weight: W,
}

impl<W: Fn(EdgeId) -> f64> LabelSearch<'_, W> {
    /// Returns the cheapest accepted label's ρ-length, start node and edges.
    /// Labels whose key reaches `bound` are discarded.
    fn run<A, P>(
        &self,
        sources: &[NodeId],
        bound: f64,
        accept: A,
        prune: P,
    ) -> Option<(f64, NodeId, Vec<EdgeId>)>
    where
        A: Fn(NodeId, f64) -> bool,
        P: Fn(NodeId, f64) -> bool,
    {
        let n = self.g.node_count();
        let mut best_b = vec![f64::INFINITY; n];
        let mut labels: Vec<Label> = Vec::new();
        let mut heap = BinaryHeap::new();
        for &s in sources {
            if prune(s, 0.0) || !self.h[s].is_finite() {
                continue;
            }
            labels.push(Label {
                node: s,
                a: 0.0,
                pred: None,
            });
            heap.push(Reverse((
                Key(self.h[s]),
                Key(0.0),
                s,
                labels.len() as u32 - 1,
            )));
        }
        while let Some(Reverse((Key(key), Key(b), v, idx))) = heap.pop() {
            if key >= bound {
                return None;
            }
            if b >= best_b[v] {
                continue;
            }
            best_b[v] = b;
            let label = labels[idx as usize];
            if self.target[v] && accept(v, b) {
                return Some((
                    label.a,
                    self.start_of(&labels, idx),
                    self.edges_of(&labels, idx),
                ));
            }
            for &(y, e) in self.g.neighbors(v) {
                let nb = b + (self.cap_weight)(e);
                if nb >= best_b[y] || prune(y, nb) {
                    continue;
                }
                let na = label.a + self.rho[e] * self.g.edge(e).len;
                labels.push(Label {
                    node: y,
                    a: na,
                    pred: Some((idx, e)),
                });
                heap.push(Reverse((
                    Key(na + self.h[y]),
                    Key(nb),
                    y,
                    labels.len() as u32 - 1,
                )));
            }
        }
        None
    }

    fn start_of(&self, labels: &[Label], mut idx: u32) -> NodeId {
        while let Some((prev, _)) = labels[idx as usize].pred {
            idx = prev;
        }
        labels[idx as usize].node
    }

    fn edges_of(&self, labels: &[Label], mut idx: u32) -> Vec<EdgeId> {
        let mut edges = Vec::new();
        while let Some((prev, e)) = labels[idx as usize].pred {
            edges.push(e);
            idx = prev;
        }
        edges.reverse();
        edges
    }
}

/// Cheapest member of `fam` under `rho`, or `None` if the family is empty.
/// Ties are broken towards lower node ids.
pub fn separation_oracle(g: &MetricMeasureGraph, rho: &Density, fam: &FamilySpec) -> Option<Path> {
    Oracle::new(g, fam).cheapest(rho.values()).map(|(p, _)| p)
}
