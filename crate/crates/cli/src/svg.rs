//! Static SVG figures: edges or nodes colored on a linear scale.

use std::fmt::Write;

use essmetric::MetricMeasureGraph;

const SIZE: f64 = 600.0;
const MARGIN: f64 = 40.0;

fn color(t: f64) -> String {
    // blue (low) to red (high)
    let t = if t.is_finite() {
        t.clamp(0.0, 1.0)
    } else {
        1.0
    };
    let r = (255.0 * t).round() as u8;
    let b = (255.0 * (1.0 - t)).round() as u8;
    format!("#{r:02x}40{b:02x}")
}

struct Frame {
    x0: f64,
    y0: f64,
    scale: f64,
}

impl Frame {
    fn new(g: &MetricMeasureGraph) -> Option<Frame> {
        let pts: Vec<[f64; 2]> = (0..g.node_count()).filter_map(|x| g.position(x)).collect();
        if pts.len() != g.node_count() || pts.is_empty() {
            return None;
        }
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in &pts {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1e-12);
        Some(Frame {
            x0: lo[0],
            y0: hi[1],
            scale: (SIZE - 2.0 * MARGIN) / span,
        })
    }

    fn map(&self, p: [f64; 2]) -> (f64, f64) {
        (
            MARGIN + (p[0] - self.x0) * self.scale,
            MARGIN + (self.y0 - p[1]) * self.scale,
        )
    }
}

fn range(values: &[f64]) -> (f64, f64) {
    let finite = values.iter().copied().filter(|v| v.is_finite());
    let lo = finite.clone().fold(f64::INFINITY, f64::min);
    let hi = finite.fold(f64::NEG_INFINITY, f64::max);
    if lo.is_finite() {
        (lo, hi)
    } else {
        (0.0, 0.0)
    }
}

fn legend(out: &mut String, title: &str, lo: f64, hi: f64) {
    let top = SIZE + 10.0;
    let _ = writeln!(
        out,
        r#"<defs><linearGradient id="scale"><stop offset="0" stop-color="{}"/><stop offset="1" stop-color="{}"/></linearGradient></defs>"#,
        color(0.0),
        color(1.0)
    );
    let _ = writeln!(
        out,
        r#"<rect x="{MARGIN}" y="{top}" width="{}" height="12" fill="url(#scale)"/>"#,
        SIZE - 2.0 * MARGIN
    );
    let _ = writeln!(
        out,
        r#"<text x="{MARGIN}" y="{}" font-size="12">{lo:.4e}</text>"#,
        top + 28.0
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" font-size="12" text-anchor="end">{hi:.4e}</text>"#,
        SIZE - MARGIN,
        top + 28.0
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="20" font-size="14" text-anchor="middle">{title}</text>"#,
        SIZE / 2.0
    );
}

fn open() -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SIZE}\" height=\"{}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n",
        SIZE + 50.0
    )
}

/// Edges colored by `values`. `None` when the graph has no positions.
pub fn edge_heatmap(g: &MetricMeasureGraph, values: &[f64], title: &str) -> Option<String> {
    let frame = Frame::new(g)?;
    let (lo, hi) = range(values);
    let width = (hi - lo).max(f64::MIN_POSITIVE);
    let mut out = open();
    for (e, edge) in g.edges().iter().enumerate() {
        let (x1, y1) = frame.map(g.position(edge.u)?);
        let (x2, y2) = frame.map(g.position(edge.v)?);
        let _ = writeln!(
            out,
            r#"<line x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" stroke="{}" stroke-width="2"/>"#,
            color((values[e] - lo) / width)
        );
    }
    legend(&mut out, title, lo, hi);
    out.push_str("</svg>\n");
    Some(out)
}

/// Graph drawn in gray with the listed nodes as colored dots.
pub fn node_markers(g: &MetricMeasureGraph, marks: &[(usize, f64)], title: &str) -> Option<String> {
    let frame = Frame::new(g)?;
    let values: Vec<f64> = marks.iter().map(|m| m.1).collect();
    let (lo, hi) = range(&values);
    let width = (hi - lo).max(f64::MIN_POSITIVE);
    let mut out = open();
    for edge in g.edges() {
        let (x1, y1) = frame.map(g.position(edge.u)?);
        let (x2, y2) = frame.map(g.position(edge.v)?);
        let _ = writeln!(
            out,
            r##"<line x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" stroke="#cccccc" stroke-width="1"/>"##
        );
    }
    for &(x, v) in marks {
        let (cx, cy) = frame.map(g.position(x)?);
        let _ = writeln!(
            out,
            r#"<circle cx="{cx:.2}" cy="{cy:.2}" r="6" fill="{}"/>"#,
            color((v - lo) / width)
        );
    }
    legend(&mut out, title, lo, hi);
    out.push_str("</svg>\n");
    Some(out)
}
