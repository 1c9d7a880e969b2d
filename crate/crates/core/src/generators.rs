//! Example spaces: the unit square grid, the cusp domain and the unit square
//! with a collapsed segment.
//!
//! Node measures are areas of dual cells clipped to the domain. An edge gets
//! measure `len * width`, where `width` is the clipped length of the dual
//! segment crossing it, so `mu / len^2` is the usual finite-volume
//! conductance.

use serde::{Deserialize, Serialize};

use crate::error::{structure, Error, Result};
use crate::graph::{Edge, MetricMeasureGraph, Node};
use crate::length_map::EdgeLengthMap;

/// A grid-aligned segment given by its two endpoints.
pub type Segment = [[f64; 2]; 2];

/// Middle half of the horizontal midline of the unit square.
pub const DEFAULT_SEGMENT: Segment = [[0.25, 0.5], [0.75, 0.5]];

/// Construction parameters kept alongside generated graphs so they can be
/// rebuilt at a finer resolution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "generator", rename_all = "snake_case")]
pub enum Recipe {
    GridSquare { n: usize },
    CuspDomain { p_exp: f64, n: usize },
    CollapsedDisc { n: usize, segment: Segment },
}

impl Recipe {
    pub fn build(&self) -> Result<MetricMeasureGraph> {
        match *self {
            Recipe::GridSquare { n } => grid_square(n),
            Recipe::CuspDomain { p_exp, n } => cusp_domain(p_exp, n),
            Recipe::CollapsedDisc { n, segment } => collapsed_disc(n, segment).map(|(g, _)| g),
        }
    }

    pub fn resolution(&self) -> usize {
        match *self {
            Recipe::GridSquare { n }
            | Recipe::CuspDomain { n, .. }
            | Recipe::CollapsedDisc { n, .. } => n,
        }
    }

    pub fn with_resolution(&self, n: usize) -> Recipe {
        let mut r = self.clone();
        match &mut r {
            Recipe::GridSquare { n: m }
            | Recipe::CuspDomain { n: m, .. }
            | Recipe::CollapsedDisc { n: m, .. } => *m = n,
        }
        r
    }

    /// Image-length map that comes with the recipe: the collapse map for the
    /// collapsed disc, the identity otherwise.
    pub fn image_lengths(&self, g: &MetricMeasureGraph) -> Result<EdgeLengthMap> {
        match *self {
            Recipe::CollapsedDisc { n, segment } => {
                check_segment(n, segment)?;
                Ok(collapse_lengths(g, segment))
            }
            _ => Ok(g.lengths()),
        }
    }
}

/// Rebuilds `g` from its recipe at twice the resolution.
pub fn refine(g: &MetricMeasureGraph) -> Result<MetricMeasureGraph> {
    let recipe = g
        .recipe()
        .ok_or_else(|| Error::Unsupported("graph carries no construction recipe".into()))?;
    recipe.with_resolution(2 * recipe.resolution()).build()
}

/// `(n+1)^2` nodes on the unit square with spacing `1/n`. Node `(i, j)` has id
/// `j * (n + 1) + i` and sits at `(i/n, j/n)`.
pub fn grid_square(n: usize) -> Result<MetricMeasureGraph> {
    let (nodes, edges) = square_grid(n)?;
    MetricMeasureGraph::new(nodes, edges, Some(Recipe::GridSquare { n }))
}

fn square_grid(n: usize) -> Result<(Vec<Node>, Vec<Edge>)> {
    if n == 0 {
        return Err(structure("grid needs at least one subdivision"));
    }
    let h = 1.0 / n as f64;
    let side = n + 1;
    // half-width of the dual cell in each direction, clipped at the boundary
    let span = |i: usize| if i == 0 || i == n { 0.5 * h } else { h };
    let mut nodes = Vec::with_capacity(side * side);
    for j in 0..side {
        for i in 0..side {
            nodes.push(Node {
                id: j * side + i,
                pos: Some([i as f64 * h, j as f64 * h]),
                mu: span(i) * span(j),
            });
        }
    }
    let mut edges = Vec::with_capacity(2 * n * side);
    for j in 0..side {
        for i in 0..side {
            let id = j * side + i;
            if i < n {
                edges.push(Edge {
                    u: id,
                    v: id + 1,
                    len: h,
                    mu: h * span(j),
                });
            }
            if j < n {
                edges.push(Edge {
                    u: id,
                    v: id + side,
                    len: h,
                    mu: h * span(i),
                });
            }
        }
    }
    Ok((nodes, edges))
}

/// Grid nodes `(i/n, j/n)` with `|i|, |j| <= n` inside `|y| <= |x|^p_exp`.
/// Rows are scanned bottom to top, left to right. The two lobes meet only at
/// the origin, through the row `y = 0`.
pub fn cusp_domain(p_exp: f64, n: usize) -> Result<MetricMeasureGraph> {
    if !(p_exp.is_finite() && p_exp >= 1.0) {
        return Err(structure(format!(
            "cusp exponent {p_exp} must be at least 1"
        )));
    }
    if n < 4 {
        return Err(structure(format!(
            "cusp resolution {n} is too coarse to join the lobes (need n >= 4)"
        )));
    }
    let h = 1.0 / n as f64;
    let ni = n as i64;
    let coord = |k: i64| k as f64 * h;
    let inside = |i: i64, j: i64| coord(j).abs() <= coord(i).abs().powf(p_exp) + 1e-12;

    // topmost and bottommost node index per column
    let mut top = vec![0i64; 2 * n + 1];
    for i in -ni..=ni {
        top[(i + ni) as usize] = (0..=ni).take_while(|&j| inside(i, j)).last().unwrap_or(0);
    }

    let mut index = std::collections::HashMap::new();
    let mut nodes = Vec::new();
    for j in -ni..=ni {
        for i in -ni..=ni {
            if !inside(i, j) {
                continue;
            }
            let t = top[(i + ni) as usize];
            let xa = (coord(i) - 0.5 * h).max(-1.0);
            let xb = (coord(i) + 0.5 * h).min(1.0);
            // extreme nodes of a column absorb the region above/below them
            let ya = if j == -t { -2.0 } else { coord(j) - 0.5 * h };
            let yb = if j == t { 2.0 } else { coord(j) + 0.5 * h };
            let id = nodes.len();
            index.insert((i, j), id);
            nodes.push(Node {
                id,
                pos: Some([coord(i), coord(j)]),
                mu: cusp_cell_area(xa, xb, ya, yb, p_exp),
            });
        }
    }
    let mut edges = Vec::new();
    for j in -ni..=ni {
        for i in -ni..=ni {
            let Some(&a) = index.get(&(i, j)) else {
                continue;
            };
            if let Some(&b) = index.get(&(i + 1, j)) {
                let xm = coord(i) + 0.5 * h;
                let width = cusp_column_length(
                    xm.abs().powf(p_exp),
                    coord(j) - 0.5 * h,
                    coord(j) + 0.5 * h,
                );
                edges.push(Edge {
                    u: a,
                    v: b,
                    len: h,
                    mu: h * width,
                });
            }
            if let Some(&b) = index.get(&(i, j + 1)) {
                let ym = coord(j) + 0.5 * h;
                let xa = (coord(i) - 0.5 * h).max(-1.0);
                let xb = (coord(i) + 0.5 * h).min(1.0);
                let width = cusp_row_length(xa, xb, ym.abs().powf(1.0 / p_exp));
                edges.push(Edge {
                    u: a,
                    v: b,
                    len: h,
                    mu: h * width,
                });
            }
        }
    }
    for (k, e) in edges.iter().enumerate() {
        if e.mu <= 0.0 {
            return Err(structure(format!(
                "cusp edge {k} has an empty dual segment"
            )));
        }
    }
    MetricMeasureGraph::new(nodes, edges, Some(Recipe::CuspDomain { p_exp, n }))
}

/// Length of `[y0, y1] ∩ [-a, a]`.
fn cusp_column_length(a: f64, y0: f64, y1: f64) -> f64 {
    (y1.min(a) - y0.max(-a)).max(0.0)
}

/// Length of `{x in [xa, xb] : |x| >= t}`.
fn cusp_row_length(xa: f64, xb: f64, t: f64) -> f64 {
    let neg = (xb.min(-t) - xa).max(0.0);
    let pos = (xb - xa.max(t)).max(0.0);
    neg + pos
}

/// Exact area of `[xa, xb] x [ya, yb] ∩ {|y| <= |x|^p}`.
fn cusp_cell_area(xa: f64, xb: f64, ya: f64, yb: f64, p: f64) -> f64 {
    let mut area = 0.0;
    if xa < 0.0 {
        area += cusp_strip_area(-xb.min(0.0), -xa, ya, yb, p);
    }
    if xb > 0.0 {
        area += cusp_strip_area(xa.max(0.0), xb, ya, yb, p);
    }
    area
}

/// Area over `0 <= s <= x <= t`. The clipped column length is affine in
/// `x^p` between the points where `x^p` crosses `|ya|` or `|yb|`, so each
/// piece integrates in closed form.
fn cusp_strip_area(s: f64, t: f64, ya: f64, yb: f64, p: f64) -> f64 {
    let mut cuts = vec![s, t];
    for c in [ya.abs(), yb.abs()] {
        let x = c.powf(1.0 / p);
        if x > s && x < t {
            cuts.push(x);
        }
    }
    cuts.sort_by(f64::total_cmp);
    let antiderivative = |x: f64| x.powf(p + 1.0) / (p + 1.0);
    let mut area = 0.0;
    for w in cuts.windows(2) {
        let (l, r) = (w[0], w[1]);
        if r <= l {
            continue;
        }
        let am = (0.5 * (l + r)).powf(p);
        if yb.min(am) <= ya.max(-am) {
            continue;
        }
        let (mut alpha, mut beta) = (0.0, 0.0);
        if ya >= -am {
            alpha -= ya;
        } else {
            beta += 1.0;
        }
        if yb <= am {
            alpha += yb;
        } else {
            beta += 1.0;
        }
        area += alpha * (r - l) + beta * (antiderivative(r) - antiderivative(l));
    }
    area
}

/// The unit square grid together with the image-length map of the quotient
/// that collapses `segment` to a point: edges on the segment get image
/// length 0, all others keep their length.
pub fn collapsed_disc(n: usize, segment: Segment) -> Result<(MetricMeasureGraph, EdgeLengthMap)> {
    check_segment(n, segment)?;
    let (nodes, edges) = square_grid(n)?;
    let g = MetricMeasureGraph::new(nodes, edges, Some(Recipe::CollapsedDisc { n, segment }))?;
    let lu = collapse_lengths(&g, segment);
    Ok((g, lu))
}

fn check_segment(n: usize, [a, b]: Segment) -> Result<()> {
    let nf = n as f64;
    for c in [a[0], a[1], b[0], b[1]] {
        if !(c > 0.0 && c < 1.0) {
            return Err(structure(format!(
                "segment coordinate {c} is not strictly inside the unit square"
            )));
        }
        let k = c * nf;
        if (k - k.round()).abs() > 1e-9 {
            return Err(structure(format!(
                "segment coordinate {c} is not on the grid of resolution {n}"
            )));
        }
    }
    let horizontal = a[1] == b[1] && a[0] != b[0];
    let vertical = a[0] == b[0] && a[1] != b[1];
    if !(horizontal || vertical) {
        return Err(structure(
            "segment must be axis-aligned with distinct endpoints",
        ));
    }
    Ok(())
}

fn on_segment(p: [f64; 2], [a, b]: Segment) -> bool {
    let eps = 1e-12;
    let within = |v: f64, lo: f64, hi: f64| v >= lo.min(hi) - eps && v <= lo.max(hi) + eps;
    within(p[0], a[0], b[0]) && within(p[1], a[1], b[1])
}

fn collapse_lengths(g: &MetricMeasureGraph, segment: Segment) -> EdgeLengthMap {
    let pos = |x| g.position(x).expect("grid nodes carry positions");
    EdgeLengthMap::new(
        g.edges()
            .iter()
            .map(|e| {
                if on_segment(pos(e.u), segment) && on_segment(pos(e.v), segment) {
                    0.0
                } else {
                    e.len
                }
            })
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_counts() {
        let g = grid_square(1).unwrap();
        assert_eq!((g.node_count(), g.edge_count()), (4, 4));
        let g = grid_square(2).unwrap();
        assert_eq!((g.node_count(), g.edge_count()), (9, 12));
    }

    #[test]
    fn grid_measure_partitions_the_square() {
        for n in [1, 2, 3, 7, 16] {
            let g = grid_square(n).unwrap();
            assert!((g.total_node_measure() - 1.0).abs() < 1e-12);
            // len * width tiles the square once per direction
            let em: f64 = g.edges().iter().map(|e| e.mu).sum();
            assert!((em - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn grid_zero_is_rejected() {
        assert!(grid_square(0).is_err());
    }

    #[test]
    fn bowtie_node_count_matches_enumeration() {
        for n in [4, 5, 8] {
            let g = cusp_domain(1.0, n).unwrap();
            let mut count = 0;
            for i in -(n as i64)..=n as i64 {
                for j in -(n as i64)..=n as i64 {
                    if j.abs() <= i.abs() {
                        count += 1;
                    }
                }
            }
            assert_eq!(g.node_count(), count);
        }
    }

    #[test]
    fn cusp_contains_apex_and_separates_lobes() {
        for n in [4, 8, 16] {
            let g = cusp_domain(2.0, n).unwrap();
            let right = g.nearest_node([1.0, 0.0]).unwrap();
            let left = g.nearest_node([-1.0, 0.0]).unwrap();
            assert_eq!(g.position(right), Some([1.0, 0.0]));
            assert!(g.distance(left, right) >= 2.0 - 1e-12);
            // every edge crossing x = 0 lies on the row y = 0
            for e in g.edges() {
                let (a, b) = (g.position(e.u).unwrap(), g.position(e.v).unwrap());
                if a[0] * b[0] < 0.0 || (a[0] == 0.0) != (b[0] == 0.0) {
                    assert_eq!(a[1], 0.0);
                    assert_eq!(b[1], 0.0);
                }
            }
        }
    }

    #[test]
    fn cusp_measure_is_region_area() {
        for (p, n) in [(1.0, 4), (2.0, 8), (2.0, 16), (3.0, 8)] {
            let g = cusp_domain(p, n).unwrap();
            let area = 4.0 / (p + 1.0);
            assert!((g.total_node_measure() - area).abs() < 1e-12, "p={p} n={n}");
        }
    }

    #[test]
    fn strip_area_matches_midpoint_quadrature() {
        let (xa, xb, ya, yb, p) = (0.1, 0.7, -0.05, 0.2, 2.0);
        let steps = 200_000;
        let dx = (xb - xa) / steps as f64;
        let numeric: f64 = (0..steps)
            .map(|k| {
                let x: f64 = xa + (k as f64 + 0.5) * dx;
                cusp_column_length(x.powf(p), ya, yb) * dx
            })
            .sum();
        assert!((cusp_strip_area(xa, xb, ya, yb, p) - numeric).abs() < 1e-9);
    }

    #[test]
    fn cusp_rejects_bad_parameters() {
        assert!(cusp_domain(0.5, 8).is_err());
        assert!(cusp_domain(2.0, 3).is_err());
    }

    #[test]
    fn collapsed_segment_edges_have_zero_image_length() {
        let n = 8;
        let (g, lu) = collapsed_disc(n, DEFAULT_SEGMENT).unwrap();
        let h = 1.0 / n as f64;
        let mut zero = 0;
        for (k, e) in g.edges().iter().enumerate() {
            let (a, b) = (g.position(e.u).unwrap(), g.position(e.v).unwrap());
            let on = a[1] == 0.5 && b[1] == 0.5 && a[0] >= 0.25 && b[0] <= 0.75 && a[0] < b[0];
            if on {
                assert_eq!(lu.get(k), 0.0);
                zero += 1;
            } else {
                assert_eq!(lu.get(k), e.len);
            }
        }
        assert_eq!(zero, 4);
        assert!((lu.total() - (g.total_length() - zero as f64 * h)).abs() < 1e-12);
    }

    #[test]
    fn collapsed_segment_must_align() {
        assert!(collapsed_disc(6, DEFAULT_SEGMENT).is_err());
        assert!(collapsed_disc(8, [[0.25, 0.5], [0.75, 0.625]]).is_err());
        assert!(collapsed_disc(8, [[0.0, 0.5], [0.75, 0.5]]).is_err());
    }

    #[test]
    fn refine_doubles_resolution() {
        let g = grid_square(2).unwrap();
        let r = refine(&g).unwrap();
        assert_eq!(r.recipe(), Some(&Recipe::GridSquare { n: 4 }));
        assert_eq!(r.to_json(), grid_square(4).unwrap().to_json());
        assert!((r.total_node_measure() - g.total_node_measure()).abs() < 1e-9);

        let c = cusp_domain(2.0, 8).unwrap();
        let rc = refine(&c).unwrap();
        assert!((rc.total_node_measure() - c.total_node_measure()).abs() < 1e-9);
    }

    #[test]
    fn refine_needs_a_recipe() {
        let g = grid_square(2).unwrap();
        let bare = MetricMeasureGraph::new(g.nodes().to_vec(), g.edges().to_vec(), None).unwrap();
        assert!(matches!(refine(&bare), Err(Error::Unsupported(_))));
    }

    #[test]
    fn recipe_json_is_tagged() {
        let s = serde_json::to_string(&Recipe::CuspDomain { p_exp: 2.0, n: 8 }).unwrap();
        assert!(s.contains(r#""generator":"cusp_domain""#));
        let back: Recipe = serde_json::from_str(&s).unwrap();
        assert_eq!(back, Recipe::CuspDomain { p_exp: 2.0, n: 8 });
    }
}
