//! Distance matrices over node subsets and their metrization.

use std::collections::HashMap;

use serde::Serialize;

use crate::error::{invalid, structure, Result};
use crate::graph::NodeId;
use crate::io::fmt_f64;

/// Symmetric nonnegative matrix with zero diagonal, indexed by a list of
/// nodes. Entries may be `∞`. The triangle inequality is not enforced here;
/// see [`metrize`] and [`MetricMatrix::axioms`].
#[derive(Clone, Debug, PartialEq)]
pub struct MetricMatrix {
    nodes: Vec<NodeId>,
    d: Vec<f64>,
}

/// Worst deviations from the metric axioms.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct AxiomReport {
    pub max_asymmetry: f64,
    pub max_diagonal: f64,
    /// Largest `d(i,k) − d(i,j) − d(j,k)` over all triples.
    pub max_triangle_excess: f64,
    pub worst_triple: Option<(NodeId, NodeId, NodeId)>,
    /// Smallest off-diagonal entry; zero for a proper pseudometric.
    pub min_off_diagonal: f64,
}

impl AxiomReport {
    /// Pseudometric within `tol` (absolute).
    pub fn is_pseudometric(&self, tol: f64) -> bool {
        self.max_asymmetry <= tol && self.max_diagonal <= tol && self.max_triangle_excess <= tol
    }

    /// Metric within `tol`, with distinct points strictly apart.
    pub fn is_metric(&self, tol: f64) -> bool {
        self.is_pseudometric(tol) && self.min_off_diagonal > 0.0
    }
}

impl MetricMatrix {
    /// `d` is row-major, `nodes.len()` squared entries.
    pub fn new(nodes: Vec<NodeId>, d: Vec<f64>) -> Result<Self> {
        let n = nodes.len();
        if d.len() != n * n {
            return Err(structure(format!(
                "matrix over {n} nodes needs {} entries, got {}",
                n * n,
                d.len()
            )));
        }
        let mut seen = HashMap::new();
        for (i, &x) in nodes.iter().enumerate() {
            if seen.insert(x, i).is_some() {
                return Err(structure(format!("node {x} labels two rows")));
            }
        }
        for i in 0..n {
            if d[i * n + i] != 0.0 {
                return Err(invalid(format!(
                    "diagonal entry for node {} is {}",
                    nodes[i],
                    d[i * n + i]
                )));
            }
            for j in 0..n {
                let v = d[i * n + j];
                if v.is_nan() || v < 0.0 {
                    return Err(invalid(format!(
                        "entry ({}, {}) is {v}",
                        nodes[i], nodes[j]
                    )));
                }
                if v != d[j * n + i] {
                    return Err(invalid(format!(
                        "entries ({0}, {1}) and ({1}, {0}) differ",
                        nodes[i], nodes[j]
                    )));
                }
            }
        }
        Ok(Self { nodes, d })
    }

    /// Builds the matrix from a symmetric pair function evaluated for `i < j`.
    pub fn from_pairs(nodes: Vec<NodeId>, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let n = nodes.len();
        let mut d = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let v = f(i, j);
                d[i * n + j] = v;
                d[j * n + i] = v;
            }
        }
        Self::new(nodes, d)
    }

    pub fn zeros(nodes: Vec<NodeId>) -> Self {
        let n = nodes.len();
        Self {
            nodes,
            d: vec![0.0; n * n],
        }
    }

    pub fn size(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    /// Entry by row/column index.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.d[i * self.nodes.len() + j]
    }

    pub fn index_of(&self, x: NodeId) -> Option<usize> {
        self.nodes.iter().position(|&y| y == x)
    }

    /// Entry by node ids.
    pub fn between(&self, x: NodeId, y: NodeId) -> Option<f64> {
        Some(self.get(self.index_of(x)?, self.index_of(y)?))
    }

    pub fn entries(&self) -> &[f64] {
        &self.d
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.nodes.clone(), self.d.iter().map(|&v| f(v)).collect())
    }

    /// Largest absolute entrywise difference (`∞` entries must match).
    pub fn max_abs_diff(&self, other: &MetricMatrix) -> f64 {
        assert_eq!(self.nodes, other.nodes, "matrices index different nodes");
        self.d
            .iter()
            .zip(&other.d)
            .map(|(&a, &b)| if a == b { 0.0 } else { (a - b).abs() })
            .fold(0.0, f64::max)
    }

    pub fn axioms(&self) -> AxiomReport {
        let n = self.size();
        let mut r = AxiomReport {
            min_off_diagonal: f64::INFINITY,
            ..Default::default()
        };
        for i in 0..n {
            r.max_diagonal = r.max_diagonal.max(self.get(i, i).abs());
            for j in 0..n {
                if i != j {
                    r.min_off_diagonal = r.min_off_diagonal.min(self.get(i, j));
                    let (a, b) = (self.get(i, j), self.get(j, i));
                    if a != b {
                        r.max_asymmetry = r.max_asymmetry.max((a - b).abs());
                    }
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                let dij = self.get(i, j);
                if dij.is_infinite() {
                    continue;
                }
                for k in 0..n {
                    let excess = self.get(i, k) - dij - self.get(j, k);
                    if excess > r.max_triangle_excess {
                        r.max_triangle_excess = excess;
                        r.worst_triple = Some((self.nodes[i], self.nodes[j], self.nodes[k]));
                    }
                }
            }
        }
        if n < 2 {
            r.min_off_diagonal = 0.0;
        }
        r
    }

    /// CSV with a header row and column of node ids.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("node");
        for x in &self.nodes {
            out.push_str(&format!(",{x}"));
        }
        out.push('\n');
        for (i, x) in self.nodes.iter().enumerate() {
            out.push_str(&x.to_string());
            for j in 0..self.size() {
                out.push(',');
                out.push_str(&fmt_f64(self.get(i, j)));
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| structure("empty matrix CSV"))?;
        let parse_id = |s: &str| {
            s.trim()
                .parse::<NodeId>()
                .map_err(|_| structure(format!("bad node id {s:?} in matrix CSV")))
        };
        let nodes: Vec<NodeId> = header
            .split(',')
            .skip(1)
            .map(parse_id)
            .collect::<Result<_>>()?;
        let mut d = Vec::with_capacity(nodes.len() * nodes.len());
        for (i, line) in lines.enumerate() {
            let mut cells = line.split(',');
            let id = parse_id(cells.next().unwrap_or(""))?;
            if nodes.get(i) != Some(&id) {
                return Err(structure(format!(
                    "row {i} is labelled {id}, expected the header order"
                )));
            }
            for c in cells {
                let v = match c.trim() {
                    "inf" => f64::INFINITY,
                    s => s
                        .parse::<f64>()
                        .map_err(|_| structure(format!("bad matrix entry {s:?}")))?,
                };
                d.push(v);
            }
        }
        Self::new(nodes, d)
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Out<'a> {
            nodes: &'a [NodeId],
            matrix: Vec<&'a [f64]>,
        }
        let n = self.size().max(1);
        crate::io::to_json(&Out {
            nodes: &self.nodes,
            matrix: self.d.chunks(n).collect(),
        })
    }
}

/// Largest pseudometric below `pre`: shortest chains through the complete
/// graph weighted by `pre`, with `∞` entries treated as missing edges.
pub fn metrize(pre: &MetricMatrix) -> MetricMatrix {
    let n = pre.size();
    let mut d = pre.d.clone();
    for k in 0..n {
        for i in 0..n {
            let dik = d[i * n + k];
            if dik.is_infinite() {
                continue;
            }
            for j in 0..n {
                let via = dik + d[k * n + j];
                if via < d[i * n + j] {
                    d[i * n + j] = via;
                }
            }
        }
    }
    // restore exact symmetry against rounding in the relaxation order
    for i in 0..n {
        for j in i + 1..n {
            let v = d[i * n + j].min(d[j * n + i]);
            d[i * n + j] = v;
            d[j * n + i] = v;
        }
    }
    MetricMatrix {
        nodes: pre.nodes.clone(),
        d,
    }
}
