//! Per-edge image lengths.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, structure, Result};
use crate::graph::{EdgeId, MetricMeasureGraph};

/// Nonnegative length assigned to each edge.
///
/// Used both as the image-length functional of a map (`ℓ_u`) and as a generic
/// edge weight for caps and path lengths.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeLengthMap {
    values: Vec<f64>,
    lip_bound: Option<f64>,
}

impl EdgeLengthMap {
    /// Panics on negative or non-finite input; use [`EdgeLengthMap::try_new`]
    /// for untrusted data.
    pub fn new(values: Vec<f64>) -> Self {
        Self::try_new(values, None).expect("edge lengths must be finite and nonnegative")
    }

    pub fn try_new(values: Vec<f64>, lip_bound: Option<f64>) -> Result<Self> {
        if let Some((e, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v >= 0.0))
        {
            return Err(invalid(format!("edge {e} has invalid image length {v}")));
        }
        if let Some(l) = lip_bound {
            if !(l.is_finite() && l >= 0.0) {
                return Err(invalid(format!(
                    "Lipschitz bound {l} must be finite and nonnegative"
                )));
            }
        }
        Ok(Self { values, lip_bound })
    }

    pub fn constant(edge_count: usize, value: f64) -> Self {
        Self::new(vec![value; edge_count])
    }

    /// Validates against `g`, including the declared Lipschitz bound.
    pub fn for_graph(
        g: &MetricMeasureGraph,
        values: Vec<f64>,
        lip_bound: Option<f64>,
    ) -> Result<Self> {
        let m = Self::try_new(values, lip_bound)?;
        m.check_len(g)?;
        if let Some(l) = lip_bound {
            for (e, edge) in g.edges().iter().enumerate() {
                if m.values[e] > l * edge.len * (1.0 + 1e-12) {
                    return Err(invalid(format!(
                        "edge {e} has image length {} above Lip bound {l} times length {}",
                        m.values[e], edge.len
                    )));
                }
            }
        }
        Ok(m)
    }

    pub(crate) fn check_len(&self, g: &MetricMeasureGraph) -> Result<()> {
        if self.values.len() != g.edge_count() {
            return Err(structure(format!(
                "length map has {} entries but the graph has {} edges",
                self.values.len(),
                g.edge_count()
            )));
        }
        Ok(())
    }

    pub fn get(&self, e: EdgeId) -> f64 {
        self.values[e]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn lip_bound(&self) -> Option<f64> {
        self.lip_bound
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| v * s).collect(),
            lip_bound: self.lip_bound.map(|l| l * s),
        }
    }

    pub fn to_json(&self) -> String {
        crate::io::to_json(&EdgeLengthMapFile::from(self))
    }

    pub fn from_json(g: &MetricMeasureGraph, text: &str) -> Result<Self> {
        let file: EdgeLengthMapFile = serde_json::from_str(text)?;
        let mut values = vec![f64::NAN; g.edge_count()];
        for rec in &file.edges {
            if rec.edge >= values.len() {
                return Err(structure(format!(
                    "length map names missing edge {}",
                    rec.edge
                )));
            }
            if !values[rec.edge].is_nan() {
                return Err(structure(format!(
                    "length map lists edge {} twice",
                    rec.edge
                )));
            }
            values[rec.edge] = rec.len_u;
        }
        if let Some(e) = values.iter().position(|v| v.is_nan()) {
            return Err(structure(format!("length map has no entry for edge {e}")));
        }
        Self::for_graph(g, values, file.lip_bound)
    }
}

#[derive(Serialize, Deserialize)]
struct EdgeLengthRecord {
    edge: EdgeId,
    len_u: f64,
}

#[derive(Serialize, Deserialize)]
struct EdgeLengthMapFile {
    edges: Vec<EdgeLengthRecord>,
    lip_bound: Option<f64>,
}

impl From<&EdgeLengthMap> for EdgeLengthMapFile {
    fn from(m: &EdgeLengthMap) -> Self {
        Self {
            edges: m
                .values
                .iter()
                .enumerate()
                .map(|(edge, &len_u)| EdgeLengthRecord { edge, len_u })
                .collect(),
            lip_bound: m.lip_bound,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::grid_square;

    #[test]
    fn rejects_negative_values() {
        assert!(EdgeLengthMap::try_new(vec![1.0, -0.5], None).is_err());
        assert!(EdgeLengthMap::try_new(vec![f64::INFINITY], None).is_err());
    }

    #[test]
    fn lipschitz_bound_is_enforced() {
        let g = grid_square(2).unwrap();
        let h = 0.5;
        assert!(EdgeLengthMap::for_graph(&g, vec![h; g.edge_count()], Some(1.0)).is_ok());
        assert!(EdgeLengthMap::for_graph(&g, vec![2.0 * h; g.edge_count()], Some(1.0)).is_err());
    }

    #[test]
    fn json_round_trip() {
        let g = grid_square(2).unwrap();
        let m = EdgeLengthMap::for_graph(
            &g,
            (0..g.edge_count()).map(|e| e as f64 / 7.0).collect(),
            None,
        )
        .unwrap();
        let back = EdgeLengthMap::from_json(&g, &m.to_json()).unwrap();
        assert_eq!(m, back);
    }
}
