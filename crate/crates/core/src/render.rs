//! Deterministic SVG renderings: per-cell energy shading with terminal
//! markers for grid dumps, and support subgraphs for graph solutions.

use std::fmt::Write as _;

use crate::graph::EmbeddedGraph;
use crate::grid::GridDump;
use crate::kalpha::flow_norm;

/// Canvas side in SVG user units.
const CANVAS: f64 = 1000.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RenderOptions {
    /// Outline every leaf cell; `None` outlines only non-uniform grids.
    pub outlines: Option<bool>,
    /// Densities below this fraction of the maximum are left white.
    pub floor: f64,
}

impl Default for RenderOptions {
    fn default() -> Self {
        RenderOptions {
            outlines: None,
            floor: 1.0 / 512.0,
        }
    }
}

fn header(s: &mut String) {
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {c} {c}\" width=\"{c}\" height=\"{c}\">",
        c = CANVAS
    );
    let _ = writeln!(s, "<rect x=\"0\" y=\"0\" width=\"{c}\" height=\"{c}\" fill=\"#ffffff\"/>", c = CANVAS);
}

fn px(x: f64) -> String {
    format!("{:.3}", x * CANVAS)
}

/// Unit square to canvas, with `y` pointing up.
fn to_canvas(p: [f64; 2]) -> (String, String) {
    (px(p[0]), px(1.0 - p[1]))
}

fn terminals(s: &mut String, pts: &[[f64; 2]]) {
    for (k, &p) in pts.iter().enumerate() {
        let (x, y) = to_canvas(p);
        // the last terminal is the sink in single-sink runs
        let fill = if k + 1 == pts.len() { "#1f4fd1" } else { "#d12f1f" };
        let _ = writeln!(s, "<circle cx=\"{x}\" cy=\"{y}\" r=\"7.000\" fill=\"{fill}\"/>");
    }
}

pub fn render_dump(dump: &GridDump, opts: &RenderOptions) -> String {
    let mut s = String::new();
    header(&mut s);
    let peak = dump.cells.iter().map(|c| c.density).fold(0.0f64, f64::max);
    let levels = dump.cells.iter().map(|c| c.addr.level);
    let mixed = levels.clone().min() != levels.max();
    let outline = opts.outlines.unwrap_or(mixed);
    if peak > 0.0 {
        s.push_str("<g stroke=\"none\">\n");
        for c in &dump.cells {
            let t = (c.density / peak).clamp(0.0, 1.0);
            if t < opts.floor {
                continue;
            }
            let g = (255.0 * (1.0 - t.sqrt())).round() as u8;
            let (x, y) = to_canvas([c.addr.i as f64 * c.h, (c.addr.j + 1) as f64 * c.h]);
            let _ = writeln!(
                s,
                "<rect x=\"{x}\" y=\"{y}\" width=\"{w}\" height=\"{w}\" fill=\"#{g:02x}{g:02x}{g:02x}\"/>",
                w = px(c.h)
            );
        }
        s.push_str("</g>\n");
    }
    if outline {
        s.push_str("<g fill=\"none\" stroke=\"#9a9a9a\" stroke-width=\"0.400\">\n");
        for c in &dump.cells {
            let (x, y) = to_canvas([c.addr.i as f64 * c.h, (c.addr.j + 1) as f64 * c.h]);
            let _ = writeln!(s, "<rect x=\"{x}\" y=\"{y}\" width=\"{w}\" height=\"{w}\"/>", w = px(c.h));
        }
        s.push_str("</g>\n");
    }
    terminals(&mut s, &dump.terminals);
    s.push_str("</svg>\n");
    s
}

/// All edges in light grey; edges whose flow exceeds `1e-4` of the largest
/// entry in black, wider with growing flow norm. `flows` is edge-major.
pub fn render_graph(g: &EmbeddedGraph, flows: Option<&[f64]>) -> String {
    let mut s = String::new();
    header(&mut s);
    s.push_str("<g stroke=\"#d0d0d0\" stroke-width=\"0.600\">\n");
    for &(u, v) in &g.edges {
        let ((x1, y1), (x2, y2)) = (to_canvas(g.points[u]), to_canvas(g.points[v]));
        let _ = writeln!(s, "<line x1=\"{x1}\" y1=\"{y1}\" x2=\"{x2}\" y2=\"{y2}\"/>");
    }
    s.push_str("</g>\n");
    if let Some(flows) = flows {
        let n = g.n_fields();
        let peak = flows.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        s.push_str("<g stroke=\"#000000\" stroke-linecap=\"round\">\n");
        for (e, &(u, v)) in g.edges.iter().enumerate() {
            let f = &flows[e * n..(e + 1) * n];
            if peak == 0.0 || f.iter().all(|x| x.abs() <= 1e-4 * peak) {
                continue;
            }
            let w = 2.0 + 4.0 * flow_norm(f).min(1.0);
            let ((x1, y1), (x2, y2)) = (to_canvas(g.points[u]), to_canvas(g.points[v]));
            let _ = writeln!(
                s,
                "<line x1=\"{x1}\" y1=\"{y1}\" x2=\"{x2}\" y2=\"{y2}\" stroke-width=\"{w:.3}\"/>"
            );
        }
        s.push_str("</g>\n");
    }
    let pts: Vec<[f64; 2]> = g.terminals.iter().map(|&t| g.points[t]).collect();
    terminals(&mut s, &pts);
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{subdivide, FieldStack, QuadGrid};

    fn dump_of(grid: &QuadGrid, density: Vec<f64>) -> GridDump {
        let f = FieldStack::for_grid(grid, 1);
        GridDump::new(grid, &f, &density, &[[0.3, 0.3], [0.7, 0.6]]).unwrap()
    }

    #[test]
    fn empty_field_draws_only_terminals() {
        let g = QuadGrid::build_uniform(8).unwrap();
        let svg = render_dump(&dump_of(&g, vec![0.0; 64]), &RenderOptions::default());
        assert_eq!(svg.matches("<circle").count(), 2);
        // background only
        assert_eq!(svg.matches("<rect").count(), 1);
    }

    #[test]
    fn rendering_is_deterministic_and_shades_dense_cells() {
        let g = QuadGrid::build_uniform(4).unwrap();
        let mut d = vec![0.0; 16];
        d[5] = 2.0;
        d[6] = 1.0;
        let dump = dump_of(&g, d);
        let a = render_dump(&dump, &RenderOptions::default());
        assert_eq!(a, render_dump(&dump, &RenderOptions::default()));
        assert!(a.contains("fill=\"#000000\""));
        assert_eq!(a.matches("<rect").count(), 3);
    }

    #[test]
    fn mixed_levels_are_outlined() {
        let u = QuadGrid::build_uniform(4).unwrap();
        let g = subdivide(&u, &[u.cell(5)]).unwrap();
        let n = g.n_cells();
        let svg = render_dump(&dump_of(&g, vec![1.0; n]), &RenderOptions::default());
        assert_eq!(svg.matches("<rect").count(), 1 + 2 * n);
    }

    #[test]
    fn graph_rendering_marks_the_support() {
        let g = EmbeddedGraph::new(
            vec![[0.1, 0.1], [0.5, 0.5], [0.9, 0.1]],
            vec![(0, 1), (1, 2), (0, 2)],
            vec![0, 2],
        )
        .unwrap();
        let svg = render_graph(&g, Some(&[1.0, 1.0, 0.0]));
        assert_eq!(svg.matches("<line").count(), 5);
        assert_eq!(render_graph(&g, None).matches("<line").count(), 3);
    }
}
