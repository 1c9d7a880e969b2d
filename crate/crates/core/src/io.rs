//! JSON and CSV output with fixed 17-significant-digit floats.

use std::io;

use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::error::Result;
use crate::generators::Recipe;
use crate::graph::{Edge, MetricMeasureGraph, Node, NodeId};

/// Formats a float with 17 significant digits. Non-finite values print as
/// `inf`, `-inf` or `nan`, which is only meant for CSV.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// Pretty JSON formatter that writes every finite float with 17 significant
/// digits. Non-finite floats become `null` (serde_json handles that before
/// reaching the formatter).
struct Sig17<'a>(PrettyFormatter<'a>);

impl Formatter for Sig17<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        w.write_all(fmt_f64(value).as_bytes())
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + io::Write>(
        &mut self,
        w: &mut W,
        first: bool,
    ) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + io::Write>(
        &mut self,
        w: &mut W,
        first: bool,
    ) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Serializes `value` as pretty JSON with 17-digit floats.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(
        &mut buf,
        Sig17(PrettyFormatter::with_indent(b"  ")),
    );
    value
        .serialize(&mut ser)
        .expect("in-memory serialization does not fail");
    buf.push(b'\n');
    String::from_utf8(buf).expect("serde_json writes UTF-8")
}

#[derive(Serialize, Deserialize)]
struct NodeRecord {
    id: NodeId,
    pos: Option<[f64; 2]>,
    mu: f64,
}

#[derive(Serialize, Deserialize)]
struct EdgeRecord {
    u: NodeId,
    v: NodeId,
    len: f64,
    mu: f64,
}

#[derive(Serialize, Deserialize)]
struct GraphFile {
    nodes: Vec<NodeRecord>,
    edges: Vec<EdgeRecord>,
    #[serde(default)]
    recipe: Option<Recipe>,
}

impl MetricMeasureGraph {
    pub fn to_json(&self) -> String {
        let file = GraphFile {
            nodes: self
                .nodes()
                .iter()
                .map(|n| NodeRecord {
                    id: n.id,
                    pos: n.pos,
                    mu: n.mu,
                })
                .collect(),
            edges: self
                .edges()
                .iter()
                .map(|e| EdgeRecord {
                    u: e.u,
                    v: e.v,
                    len: e.len,
                    mu: e.mu,
                })
                .collect(),
            recipe: self.recipe().cloned(),
        };
        to_json(&file)
    }

    /// Parses and validates a graph. The recipe is kept as metadata only.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: GraphFile = serde_json::from_str(text)?;
        let nodes = file
            .nodes
            .into_iter()
            .map(|n| Node {
                id: n.id,
                pos: n.pos,
                mu: n.mu,
            })
            .collect();
        let edges = file
            .edges
            .into_iter()
            .map(|e| Edge {
                u: e.u,
                v: e.v,
                len: e.len,
                mu: e.mu,
            })
            .collect();
        MetricMeasureGraph::new(nodes, edges, file.recipe)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{cusp_domain, grid_square};

    #[test]
    fn floats_carry_seventeen_digits() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f64(2.0), "2.0000000000000000e0");
        let v: f64 = fmt_f64(std::f64::consts::PI).parse().unwrap();
        assert_eq!(v, std::f64::consts::PI);
    }

    #[test]
    fn json_uses_fixed_digits_and_null_for_infinity() {
        let s = to_json(&vec![1.5, f64::INFINITY]);
        assert!(s.contains("1.5000000000000000e0"));
        assert!(s.contains("null"));
    }

    #[test]
    fn graph_round_trip_is_exact() {
        for g in [grid_square(3).unwrap(), cusp_domain(2.0, 4).unwrap()] {
            let text = g.to_json();
            let back = MetricMeasureGraph::from_json(&text).unwrap();
            assert_eq!(back.nodes(), g.nodes());
            assert_eq!(back.edges(), g.edges());
            assert_eq!(back.recipe(), g.recipe());
            assert_eq!(back.to_json(), text);
        }
    }

    #[test]
    fn malformed_graph_json_is_an_error() {
        assert!(MetricMeasureGraph::from_json("{ nodes: ").is_err());
        let gap = r#"{"nodes":[{"id":0,"pos":null,"mu":1},{"id":2,"pos":null,"mu":1}],"edges":[{"u":0,"v":2,"len":1,"mu":1}],"recipe":null}"#;
        assert!(MetricMeasureGraph::from_json(gap).is_err());
    }
}
