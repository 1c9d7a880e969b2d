//! Weighted graphs standing in for metric measure spaces.
//!
//! A [`MetricMeasureGraph`] carries positive edge lengths, positive node
//! measures and positive edge measures. The metric is the shortest-path metric
//! induced by the edge lengths; it is never stored, only queried.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap};
use std::sync::OnceLock;

use rayon::prelude::*;

use crate::error::{structure, Error, Result};
use crate::generators::Recipe;
use crate::length_map::EdgeLengthMap;

pub type NodeId = usize;
pub type EdgeId = usize;

#[derive(Clone, Debug, PartialEq)]
pub struct Node {
    pub id: NodeId,
    pub pos: Option<[f64; 2]>,
    pub mu: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Edge {
    pub u: NodeId,
    pub v: NodeId,
    pub len: f64,
    pub mu: f64,
}

impl Edge {
    /// The endpoint opposite to `x`.
    pub fn other(&self, x: NodeId) -> NodeId {
        if self.u == x {
            self.v
        } else {
            self.u
        }
    }

    /// Conductance of the edge when read as a resistor, `mu / len^2`.
    pub fn conductance(&self) -> f64 {
        self.mu / (self.len * self.len)
    }
}

/// Connected graph with edge lengths and node/edge measures.
///
/// Immutable after construction. Node ids are `0..node_count()`, edge ids are
/// `0..edge_count()`; parallel edges are allowed, self-loops are not.
#[derive(Clone, Debug)]
pub struct MetricMeasureGraph {
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    adj: Vec<Vec<(NodeId, EdgeId)>>,
    recipe: Option<Recipe>,
    diameter: OnceLock<f64>,
}

impl MetricMeasureGraph {
    /// Validates and indexes a graph. `nodes` may come in any order but their
    /// ids must be exactly `0..nodes.len()`.
    pub fn new(mut nodes: Vec<Node>, edges: Vec<Edge>, recipe: Option<Recipe>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(structure("graph has no nodes"));
        }
        nodes.sort_by_key(|n| n.id);
        for (i, n) in nodes.iter().enumerate() {
            if n.id != i {
                return Err(structure(format!(
                    "node ids must be 0..{} without gaps (found {} at position {i})",
                    nodes.len(),
                    n.id
                )));
            }
            if !(n.mu.is_finite() && n.mu > 0.0) {
                return Err(structure(format!(
                    "node {i} has non-positive measure {}",
                    n.mu
                )));
            }
            if let Some([x, y]) = n.pos {
                if !(x.is_finite() && y.is_finite()) {
                    return Err(structure(format!("node {i} has a non-finite position")));
                }
            }
        }
        let mut adj = vec![Vec::new(); nodes.len()];
        for (k, e) in edges.iter().enumerate() {
            if e.u >= nodes.len() || e.v >= nodes.len() {
                return Err(structure(format!("edge {k} references a missing node")));
            }
            if e.u == e.v {
                return Err(structure(format!(
                    "edge {k} is a self-loop at node {}",
                    e.u
                )));
            }
            if !(e.len.is_finite() && e.len > 0.0) {
                return Err(structure(format!(
                    "edge {k} has non-positive length {}",
                    e.len
                )));
            }
            if !(e.mu.is_finite() && e.mu > 0.0) {
                return Err(structure(format!(
                    "edge {k} has non-positive measure {}",
                    e.mu
                )));
            }
            adj[e.u].push((e.v, k));
            adj[e.v].push((e.u, k));
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        let g = Self {
            nodes,
            edges,
            adj,
            recipe,
            diameter: OnceLock::new(),
        };
        if !g.is_connected() {
            return Err(structure("graph is not connected"));
        }
        Ok(g)
    }

    fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(x) = stack.pop() {
            for &(y, _) in &self.adj[x] {
                if !seen[y] {
                    seen[y] = true;
                    count += 1;
                    stack.push(y);
                }
            }
        }
        count == self.nodes.len()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    pub fn edge(&self, id: EdgeId) -> &Edge {
        &self.edges[id]
    }

    /// Neighbours of `x` as `(neighbour, edge)` pairs, sorted by neighbour id.
    pub fn neighbors(&self, x: NodeId) -> &[(NodeId, EdgeId)] {
        &self.adj[x]
    }

    pub fn recipe(&self) -> Option<&Recipe> {
        self.recipe.as_ref()
    }

    pub fn position(&self, x: NodeId) -> Option<[f64; 2]> {
        self.nodes[x].pos
    }

    pub fn has_positions(&self) -> bool {
        self.nodes.iter().all(|n| n.pos.is_some())
    }

    pub fn total_node_measure(&self) -> f64 {
        self.nodes.iter().map(|n| n.mu).sum()
    }

    pub fn total_length(&self) -> f64 {
        self.edges.iter().map(|e| e.len).sum()
    }

    pub fn lengths(&self) -> EdgeLengthMap {
        EdgeLengthMap::new(self.edges.iter().map(|e| e.len).collect())
    }

    pub fn check_node(&self, x: NodeId) -> Result<()> {
        if x < self.nodes.len() {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "node {x} is not in the graph"
            )))
        }
    }

    /// Shortest-path distance between two nodes under the edge lengths.
    pub fn distance(&self, x: NodeId, y: NodeId) -> f64 {
        if x == y {
            return 0.0;
        }
        shortest_paths(self, &[(x, 0.0)], |e| self.edges[e].len).dist[y]
    }

    /// Distances from `x` to every node.
    pub fn distances_from(&self, x: NodeId) -> Vec<f64> {
        shortest_paths(self, &[(x, 0.0)], |e| self.edges[e].len).dist
    }

    /// Largest graph distance between two nodes. Computed once and cached.
    pub fn diameter(&self) -> f64 {
        *self.diameter.get_or_init(|| {
            (0..self.node_count())
                .into_par_iter()
                .map(|x| self.distances_from(x).into_iter().fold(0.0_f64, f64::max))
                .reduce(|| 0.0, f64::max)
        })
    }

    /// Open ball: nodes at distance strictly less than `r` from `x`.
    pub fn ball(&self, x: NodeId, r: f64) -> NodeSet {
        let dist = self.distances_from(x);
        NodeSet::from_iter(
            dist.iter()
                .enumerate()
                .filter(|(_, &d)| d < r)
                .map(|(i, _)| i),
        )
    }

    /// Closed ball: nodes at distance at most `r` from `x`; always contains `x`.
    pub fn closed_ball(&self, x: NodeId, r: f64) -> NodeSet {
        let dist = self.distances_from(x);
        let slack = 1e-12 * r.abs().max(1.0);
        NodeSet::from_iter(
            dist.iter()
                .enumerate()
                .filter(|(_, &d)| d <= r + slack)
                .map(|(i, _)| i),
        )
    }

    /// Node whose position is closest to `p` (lowest id on ties).
    pub fn nearest_node(&self, p: [f64; 2]) -> Option<NodeId> {
        let mut best: Option<(f64, NodeId)> = None;
        for n in &self.nodes {
            if let Some(q) = n.pos {
                let d = (q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2);
                if best.is_none_or(|(bd, _)| d < bd) {
                    best = Some((d, n.id));
                }
            }
        }
        best.map(|(_, id)| id)
    }

    /// Nodes whose positions lie in the closed axis-aligned rectangle.
    pub fn nodes_in_rect(&self, x0: f64, y0: f64, x1: f64, y1: f64) -> NodeSet {
        let (xa, xb) = (x0.min(x1) - 1e-12, x0.max(x1) + 1e-12);
        let (ya, yb) = (y0.min(y1) - 1e-12, y0.max(y1) + 1e-12);
        NodeSet::from_iter(self.nodes.iter().filter_map(|n| {
            let [x, y] = n.pos?;
            (x >= xa && x <= xb && y >= ya && y <= yb).then_some(n.id)
        }))
    }

    /// Finds an edge joining `a` and `b` (the lowest-id one if parallel).
    pub fn edge_between(&self, a: NodeId, b: NodeId) -> Option<EdgeId> {
        self.adj[a]
            .iter()
            .filter(|&&(y, _)| y == b)
            .map(|&(_, e)| e)
            .min()
    }
}

/// A set of node ids with a deterministic iteration order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct NodeSet(BTreeSet<NodeId>);

impl NodeSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn singleton(x: NodeId) -> Self {
        Self(BTreeSet::from([x]))
    }

    pub fn insert(&mut self, x: NodeId) -> bool {
        self.0.insert(x)
    }

    pub fn contains(&self, x: NodeId) -> bool {
        self.0.contains(&x)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.0.iter().copied()
    }

    pub fn to_vec(&self) -> Vec<NodeId> {
        self.iter().collect()
    }

    pub fn intersects(&self, other: &NodeSet) -> bool {
        self.0.intersection(&other.0).next().is_some()
    }

    pub fn is_subset(&self, other: &NodeSet) -> bool {
        self.0.is_subset(&other.0)
    }

    pub fn union(&self, other: &NodeSet) -> NodeSet {
        NodeSet(self.0.union(&other.0).copied().collect())
    }

    /// Membership mask over `n` nodes.
    pub fn mask(&self, n: usize) -> Vec<bool> {
        let mut m = vec![false; n];
        for x in self.iter() {
            m[x] = true;
        }
        m
    }

    pub fn measure(&self, g: &MetricMeasureGraph) -> f64 {
        self.iter().map(|x| g.node(x).mu).sum()
    }
}

impl FromIterator<NodeId> for NodeSet {
    fn from_iter<I: IntoIterator<Item = NodeId>>(iter: I) -> Self {
        Self(iter.into_iter().collect())
    }
}

/// Description of a node set, resolved against a concrete graph.
///
/// Text form: `ids:1,2,3`, `ball:x=ID,r=VAL` (closed ball) or
/// `rect:x0,y0,x1,y1` (closed rectangle in node coordinates). Only `rect`
/// means the same region at every resolution.
#[derive(Clone, Debug, PartialEq)]
pub enum SetSpec {
    Ids(Vec<NodeId>),
    Ball { center: NodeId, r: f64 },
    Rect([f64; 4]),
}

impl SetSpec {
    pub fn resolve(&self, g: &MetricMeasureGraph) -> Result<NodeSet> {
        let set = match self {
            SetSpec::Ids(ids) => {
                for &x in ids {
                    g.check_node(x)?;
                }
                ids.iter().copied().collect()
            }
            SetSpec::Ball { center, r } => {
                g.check_node(*center)?;
                g.closed_ball(*center, *r)
            }
            SetSpec::Rect([x0, y0, x1, y1]) => {
                if !g.has_positions() {
                    return Err(Error::InvalidArgument(
                        "rect sets need node positions".into(),
                    ));
                }
                g.nodes_in_rect(*x0, *y0, *x1, *y1)
            }
        };
        if set.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "node set {self} is empty on this graph"
            )));
        }
        Ok(set)
    }
}

impl std::str::FromStr for SetSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |why: &str| Error::InvalidArgument(format!("node set {s:?}: {why}"));
        let (kind, body) = s.split_once(':').ok_or_else(|| bad("expected KIND:..."))?;
        let num = |t: &str| {
            t.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| bad(&format!("bad number {t:?}")))
        };
        match kind.trim() {
            "ids" => {
                let ids = body
                    .split(',')
                    .map(|t| {
                        t.trim()
                            .parse::<NodeId>()
                            .map_err(|_| bad(&format!("bad id {t:?}")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(SetSpec::Ids(ids))
            }
            "ball" => {
                let (mut center, mut r) = (None, None);
                for part in body.split(',') {
                    match part.split_once('=').map(|(k, v)| (k.trim(), v)) {
                        Some(("x", v)) => {
                            center = Some(
                                v.trim()
                                    .parse::<NodeId>()
                                    .map_err(|_| bad("bad center id"))?,
                            )
                        }
                        Some(("r", v)) => r = Some(num(v)?),
                        _ => return Err(bad("expected x=ID,r=VAL")),
                    }
                }
                let (center, r) = center.zip(r).ok_or_else(|| bad("expected x=ID,r=VAL"))?;
                if r < 0.0 {
                    return Err(bad("negative radius"));
                }
                Ok(SetSpec::Ball { center, r })
            }
            "rect" => {
                let v = body.split(',').map(num).collect::<Result<Vec<_>>>()?;
                let corners: [f64; 4] =
                    v.try_into().map_err(|_| bad("expected four coordinates"))?;
                Ok(SetSpec::Rect(corners))
            }
            _ => Err(bad("kind must be ids, ball or rect")),
        }
    }
}

impl std::fmt::Display for SetSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SetSpec::Ids(ids) => {
                let ids: Vec<String> = ids.iter().map(|x| x.to_string()).collect();
                write!(f, "ids:{}", ids.join(","))
            }
            SetSpec::Ball { center, r } => write!(f, "ball:x={center},r={r}"),
            SetSpec::Rect([a, b, c, d]) => write!(f, "rect:{a},{b},{c},{d}"),
        }
    }
}

/// A simple edge walk: `nodes[i]` and `nodes[i + 1]` are joined by `edges[i]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Path {
    nodes: Vec<NodeId>,
    edges: Vec<EdgeId>,
}

impl Path {
    /// The constant curve at `x`.
    pub fn constant(x: NodeId) -> Self {
        Self {
            nodes: vec![x],
            edges: Vec::new(),
        }
    }

    /// Builds a path from a node sequence, picking the lowest-id edge between
    /// consecutive nodes.
    pub fn from_nodes(g: &MetricMeasureGraph, nodes: Vec<NodeId>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(structure("a path needs at least one node"));
        }
        for &x in &nodes {
            g.check_node(x)?;
        }
        let mut edges = Vec::with_capacity(nodes.len() - 1);
        for w in nodes.windows(2) {
            let e = g.edge_between(w[0], w[1]).ok_or_else(|| {
                structure(format!("nodes {} and {} are not adjacent", w[0], w[1]))
            })?;
            edges.push(e);
        }
        let p = Self { nodes, edges };
        p.check_simple()?;
        Ok(p)
    }

    /// Builds a path from a start node and an edge sequence.
    pub fn from_edges(g: &MetricMeasureGraph, start: NodeId, edges: Vec<EdgeId>) -> Result<Self> {
        g.check_node(start)?;
        let mut nodes = Vec::with_capacity(edges.len() + 1);
        nodes.push(start);
        let mut cur = start;
        for &e in &edges {
            if e >= g.edge_count() {
                return Err(Error::MissingEdge(e));
            }
            let edge = g.edge(e);
            if edge.u != cur && edge.v != cur {
                return Err(structure(format!(
                    "edge {e} does not continue the path at node {cur}"
                )));
            }
            cur = edge.other(cur);
            nodes.push(cur);
        }
        let p = Self { nodes, edges };
        p.check_simple()?;
        Ok(p)
    }

    /// Walk built from trusted parts, with loops erased so the result is simple.
    pub(crate) fn from_walk(g: &MetricMeasureGraph, start: NodeId, edges: &[EdgeId]) -> Self {
        let mut nodes = vec![start];
        let mut out_edges: Vec<EdgeId> = Vec::with_capacity(edges.len());
        let mut cur = start;
        for &e in edges {
            cur = g.edge(e).other(cur);
            if let Some(i) = nodes.iter().position(|&x| x == cur) {
                nodes.truncate(i + 1);
                out_edges.truncate(i);
            } else {
                nodes.push(cur);
                out_edges.push(e);
            }
        }
        Self {
            nodes,
            edges: out_edges,
        }
    }

    fn check_simple(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for &x in &self.nodes {
            if !seen.insert(x) {
                return Err(structure(format!("path visits node {x} twice")));
            }
        }
        Ok(())
    }

    /// Checks that every edge exists and joins consecutive nodes.
    pub fn validate(&self, g: &MetricMeasureGraph) -> Result<()> {
        if self.nodes.len() != self.edges.len() + 1 {
            return Err(structure("path node and edge counts disagree"));
        }
        for &x in &self.nodes {
            g.check_node(x)?;
        }
        for (i, &e) in self.edges.iter().enumerate() {
            if e >= g.edge_count() {
                return Err(Error::MissingEdge(e));
            }
            let edge = g.edge(e);
            let (a, b) = (self.nodes[i], self.nodes[i + 1]);
            if !((edge.u == a && edge.v == b) || (edge.u == b && edge.v == a)) {
                return Err(structure(format!(
                    "edge {e} does not join nodes {a} and {b}"
                )));
            }
        }
        self.check_simple()
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn edges(&self) -> &[EdgeId] {
        &self.edges
    }

    pub fn start(&self) -> NodeId {
        self.nodes[0]
    }

    pub fn end(&self) -> NodeId {
        *self.nodes.last().expect("paths are nonempty")
    }

    pub fn is_constant(&self) -> bool {
        self.edges.is_empty()
    }

    /// Sum of `w` over the edges of the path.
    pub fn length_under(&self, w: &EdgeLengthMap) -> f64 {
        self.edges.iter().map(|&e| w.get(e)).sum()
    }
}

/// Length of `path` under `w`, or under the graph's own edge lengths.
pub fn path_length(g: &MetricMeasureGraph, path: &Path, w: Option<&EdgeLengthMap>) -> Result<f64> {
    path.validate(g)?;
    Ok(match w {
        Some(w) => {
            w.check_len(g)?;
            path.length_under(w)
        }
        None => path.edges.iter().map(|&e| g.edge(e).len).sum(),
    })
}

/// Shortest-path tree returned by [`shortest_paths`].
#[derive(Clone, Debug)]
pub struct ShortestPaths {
    pub dist: Vec<f64>,
    pub pred: Vec<Option<(NodeId, EdgeId)>>,
}

impl ShortestPaths {
    /// Edges from the tree root to `t`, in order, plus the root.
    pub fn walk_to(&self, t: NodeId) -> (NodeId, Vec<EdgeId>) {
        let mut edges = Vec::new();
        let mut cur = t;
        while let Some((prev, e)) = self.pred[cur] {
            edges.push(e);
            cur = prev;
        }
        edges.reverse();
        (cur, edges)
    }
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct Key(pub f64);

impl PartialEq for Key {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other).is_eq()
    }
}

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Multi-source Dijkstra. Sources carry initial labels (which may be
/// negative); edge weights must be nonnegative. Ties are broken by lowest
/// node id.
pub fn shortest_paths<W>(
    g: &MetricMeasureGraph,
    sources: &[(NodeId, f64)],
    weight: W,
) -> ShortestPaths
where
    W: Fn(EdgeId) -> f64,
{
    let n = g.node_count();
    let mut dist = vec![f64::INFINITY; n];
    let mut pred = vec![None; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    for &(s, d0) in sources {
        if d0 < dist[s] {
            dist[s] = d0;
            heap.push(Reverse((Key(d0), s)));
        }
    }
    while let Some(Reverse((Key(d), x))) = heap.pop() {
        if done[x] || d > dist[x] {
            continue;
        }
        done[x] = true;
        for &(y, e) in g.neighbors(x) {
            if done[y] {
                continue;
            }
            let nd = d + weight(e);
            if nd < dist[y] {
                dist[y] = nd;
                pred[y] = Some((x, e));
                heap.push(Reverse((Key(nd), y)));
            }
        }
    }
    ShortestPaths { dist, pred }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::grid_square;

    fn path_graph(lengths: &[f64]) -> MetricMeasureGraph {
        let nodes = (0..=lengths.len())
            .map(|id| Node {
                id,
                pos: None,
                mu: 1.0,
            })
            .collect();
        let edges = lengths
            .iter()
            .enumerate()
            .map(|(i, &len)| Edge {
                u: i,
                v: i + 1,
                len,
                mu: 1.0,
            })
            .collect();
        MetricMeasureGraph::new(nodes, edges, None).unwrap()
    }

    #[test]
    fn path_length_sums_edges() {
        let g = path_graph(&[1.0, 1.0, 1.0]);
        let p = Path::from_nodes(&g, vec![0, 1, 2, 3]).unwrap();
        assert_eq!(path_length(&g, &p, None).unwrap(), 3.0);

        let g = path_graph(&[0.5, 0.25]);
        let p = Path::from_nodes(&g, vec![0, 1, 2]).unwrap();
        assert_eq!(path_length(&g, &p, None).unwrap(), 0.75);

        assert_eq!(path_length(&g, &Path::constant(1), None).unwrap(), 0.0);
    }

    #[test]
    fn path_with_foreign_edge_is_rejected() {
        let g = path_graph(&[1.0, 1.0]);
        let bad = Path {
            nodes: vec![0, 1],
            edges: vec![7],
        };
        assert!(matches!(
            path_length(&g, &bad, None),
            Err(Error::MissingEdge(7))
        ));
        assert!(Path::from_nodes(&g, vec![0, 2]).is_err());
        assert!(Path::from_nodes(&g, vec![0, 1, 0]).is_err());
    }

    #[test]
    fn invalid_graphs_are_rejected() {
        let n = |id| Node {
            id,
            pos: None,
            mu: 1.0,
        };
        let e = |u, v| Edge {
            u,
            v,
            len: 1.0,
            mu: 1.0,
        };
        assert!(MetricMeasureGraph::new(vec![n(0), n(1)], vec![], None).is_err());
        assert!(MetricMeasureGraph::new(vec![n(0), n(1)], vec![e(0, 0), e(0, 1)], None).is_err());
        let bad_len = Edge {
            u: 0,
            v: 1,
            len: 0.0,
            mu: 1.0,
        };
        assert!(MetricMeasureGraph::new(vec![n(0), n(1)], vec![bad_len], None).is_err());
        let bad_mu = Node {
            id: 1,
            pos: None,
            mu: 0.0,
        };
        assert!(MetricMeasureGraph::new(vec![n(0), bad_mu], vec![e(0, 1)], None).is_err());
        assert!(MetricMeasureGraph::new(vec![n(0), n(2)], vec![], None).is_err());
        // parallel edges are fine
        assert!(MetricMeasureGraph::new(vec![n(0), n(1)], vec![e(0, 1), e(1, 0)], None).is_ok());
    }

    #[test]
    fn distances_on_the_grid() {
        let g = grid_square(4).unwrap();
        assert_eq!(g.distance(3, 3), 0.0);
        assert!((g.distance(0, 1) - 0.25).abs() < 1e-15);
        let far = g.node_count() - 1;
        assert!((g.distance(0, far) - 2.0).abs() < 1e-12);
        assert!((g.diameter() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn balls_are_open_and_closed_variants_hold_the_centre() {
        let g = grid_square(1).unwrap();
        assert!(g.ball(0, 0.0).is_empty());
        assert_eq!(g.closed_ball(0, 0.0), NodeSet::singleton(0));
        assert_eq!(g.ball(0, 10.0).len(), 4);
        // open ball of radius exactly 1 excludes the neighbours at distance 1
        assert_eq!(g.ball(0, 1.0), NodeSet::singleton(0));
        assert_eq!(g.closed_ball(0, 1.0).len(), 3);
    }

    #[test]
    fn unit_grid_ball_matches_manhattan_enumeration() {
        let g = grid_square(1).unwrap();
        // n = 1: spacing 1, corner at the origin
        let b = g.ball(0, 1.5);
        let expected: NodeSet = g
            .nodes()
            .iter()
            .filter(|n| {
                let [x, y] = n.pos.unwrap();
                x + y <= 1.0 + 1e-12
            })
            .map(|n| n.id)
            .collect();
        assert_eq!(b, expected);
    }

    #[test]
    fn loop_erasure_gives_a_simple_path() {
        let g = grid_square(2).unwrap();
        // walk 0 -> 1 -> 4 -> 3 -> 0 -> 1 -> 2 revisits 0 and 1
        let nodes = [0usize, 1, 4, 3, 0, 1, 2];
        let edges: Vec<_> = nodes
            .windows(2)
            .map(|w| g.edge_between(w[0], w[1]).unwrap())
            .collect();
        let p = Path::from_walk(&g, 0, &edges);
        assert_eq!(p.nodes(), &[0, 1, 2]);
        p.validate(&g).unwrap();
    }

    #[test]
    fn set_specs_parse_and_resolve() {
        let g = crate::generators::grid_square(4).unwrap();
        let ids: SetSpec = "ids:1, 2,3".parse().unwrap();
        assert_eq!(ids, SetSpec::Ids(vec![1, 2, 3]));
        assert_eq!(ids.resolve(&g).unwrap().len(), 3);
        let ball: SetSpec = "ball:x=0,r=0.25".parse().unwrap();
        assert_eq!(ball.resolve(&g).unwrap().to_vec(), vec![0, 1, 5]);
        let rect: SetSpec = "rect:0,0,1,0".parse().unwrap();
        assert_eq!(rect.resolve(&g).unwrap().len(), 5);
        for s in [&ids, &ball, &rect] {
            assert_eq!(&s.to_string().parse::<SetSpec>().unwrap(), s);
        }
        for bad in [
            "ids:",
            "ids:a",
            "ball:x=1",
            "ball:x=1,r=-1",
            "rect:0,0,1",
            "disc:1",
            "rect:0,0,1,nan",
        ] {
            assert!(bad.parse::<SetSpec>().is_err(), "{bad}");
        }
        assert!("ids:99".parse::<SetSpec>().unwrap().resolve(&g).is_err());
        assert!("rect:2,2,3,3"
            .parse::<SetSpec>()
            .unwrap()
            .resolve(&g)
            .is_err());
    }
}
