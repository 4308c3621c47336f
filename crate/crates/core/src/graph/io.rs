//! Text formats for graphs and flows, and LP export of the linearized
//! program.
//!
//! Edge list:
//!
//! ```text
//! # steinrelax-graph 1
//! vertices <n>
//! <x> <y>            (n lines)
//! edges <m>
//! <tail> <head>      (m lines)
//! terminals <t1> ... <tN>
//! ```
//!
//! Blank lines and lines starting with `#` are ignored. Flow solutions list
//! one edge per line: `tail head length V_1 ... V_{N-1}`.

use std::fmt::Write as _;

use super::{assemble_kirchhoff, EmbeddedGraph, FlowSolution};
use crate::error::{Error, Result};

fn perr(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

pub fn write_edge_list(g: &EmbeddedGraph) -> String {
    let mut s = String::from("# steinrelax-graph 1\n");
    let _ = writeln!(s, "vertices {}", g.n_vertices());
    for p in &g.points {
        let _ = writeln!(s, "{:?} {:?}", p[0], p[1]);
    }
    let _ = writeln!(s, "edges {}", g.n_edges());
    for &(u, v) in &g.edges {
        let _ = writeln!(s, "{u} {v}");
    }
    let t: Vec<String> = g.terminals.iter().map(|t| t.to_string()).collect();
    let _ = writeln!(s, "terminals {}", t.join(" "));
    s
}

pub fn parse_edge_list(text: &str) -> Result<EmbeddedGraph> {
    let mut body: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .collect();
    body.reverse();
    let mut next = |what: &str| body.pop().ok_or_else(|| perr(0, format!("missing {what}")));
    let (ln, l) = next("`vertices` line")?;
    let nv: usize = l
        .strip_prefix("vertices")
        .and_then(|x| x.trim().parse().ok())
        .ok_or_else(|| perr(ln, "expected `vertices <count>`"))?;
    let mut points = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, l) = next("vertex line")?;
        let xs: Vec<f64> = l
            .split_whitespace()
            .map(|x| x.parse::<f64>().map_err(|_| perr(ln, format!("bad coordinate `{x}`"))))
            .collect::<Result<_>>()?;
        if xs.len() != 2 {
            return Err(perr(ln, "a vertex line needs two coordinates"));
        }
        points.push([xs[0], xs[1]]);
    }
    let (ln, l) = next("`edges` line")?;
    let ne: usize = l
        .strip_prefix("edges")
        .and_then(|x| x.trim().parse().ok())
        .ok_or_else(|| perr(ln, "expected `edges <count>`"))?;
    let mut edges = Vec::with_capacity(ne);
    for _ in 0..ne {
        let (ln, l) = next("edge line")?;
        let xs: Vec<usize> = l
            .split_whitespace()
            .map(|x| x.parse::<usize>().map_err(|_| perr(ln, format!("bad vertex index `{x}`"))))
            .collect::<Result<_>>()?;
        if xs.len() != 2 {
            return Err(perr(ln, "an edge line needs two vertex indices"));
        }
        edges.push((xs[0], xs[1]));
    }
    let (ln, l) = next("`terminals` line")?;
    let terminals: Vec<usize> = l
        .strip_prefix("terminals")
        .ok_or_else(|| perr(ln, "expected `terminals <indices>`"))?
        .split_whitespace()
        .map(|x| x.parse::<usize>().map_err(|_| perr(ln, format!("bad terminal index `{x}`"))))
        .collect::<Result<_>>()?;
    if let Some((ln, _)) = body.pop() {
        return Err(perr(ln, "unexpected content after `terminals`"));
    }
    EmbeddedGraph::new(points, edges, terminals)
}

pub fn write_flow_solution(g: &EmbeddedGraph, sol: &FlowSolution) -> String {
    let mut s = String::from("# tail head length");
    for i in 0..sol.n_fields {
        let _ = write!(s, " V{}", i + 1);
    }
    let _ = writeln!(s, "\n# energy {:?}", sol.energy);
    for (e, &(u, v)) in g.edges.iter().enumerate() {
        let _ = write!(s, "{u} {v} {:?}", g.length(e));
        for x in sol.flow(e) {
            let _ = write!(s, " {x:?}");
        }
        s.push('\n');
    }
    s
}

/// Per-edge flow vectors from the solution format, edge-major.
pub fn parse_flow_solution(text: &str, g: &EmbeddedGraph) -> Result<Vec<f64>> {
    let n = g.n_fields();
    let mut flows = Vec::with_capacity(n * g.n_edges());
    let mut count = 0;
    for (k, l) in text.lines().enumerate() {
        let l = l.trim();
        if l.is_empty() || l.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = l.split_whitespace().collect();
        if f.len() != 3 + n {
            return Err(perr(k + 1, format!("expected {} columns", 3 + n)));
        }
        let (u, v): (usize, usize) = (
            f[0].parse().map_err(|_| perr(k + 1, "bad tail"))?,
            f[1].parse().map_err(|_| perr(k + 1, "bad head"))?,
        );
        if g.edges.get(count) != Some(&(u, v)) {
            return Err(perr(k + 1, format!("edge ({u}, {v}) does not match the graph")));
        }
        for x in &f[3..] {
            flows.push(x.parse::<f64>().map_err(|_| perr(k + 1, format!("bad flow value `{x}`")))?);
        }
        count += 1;
    }
    if count != g.n_edges() {
        return Err(perr(0, format!("{count} edges listed, graph has {}", g.n_edges())));
    }
    Ok(flows)
}

/// CPLEX LP text of the linearization: `min Σ ℓ(e)(s_e − i_e)` with
/// `i_e ≤ V_i(e) ≤ s_e`, `s_e ≥ 0 ≥ i_e`, and the Kirchhoff rows.
pub fn export_lp(g: &EmbeddedGraph) -> String {
    let (ne, n) = (g.n_edges(), g.n_fields());
    let mut s = String::from("\\ linearized relaxed Steiner problem\nMinimize\n obj:");
    for e in 0..ne {
        let l = g.length(e);
        let _ = write!(s, " + {l:?} s{e} - {l:?} i{e}");
    }
    s.push_str("\nSubject To\n");
    for e in 0..ne {
        for i in 0..n {
            let _ = writeln!(s, " up{e}_{i}: v{i}_{e} - s{e} <= 0");
            let _ = writeln!(s, " lo{e}_{i}: v{i}_{e} - i{e} >= 0");
        }
    }
    let sys = assemble_kirchhoff(g);
    for (r, meta) in sys.row_meta.iter().enumerate() {
        let terms: Vec<String> = sys
            .a
            .row(r)
            .map(|(c, v)| {
                let (i, e) = (c / ne, c % ne);
                format!("{} v{i}_{e}", if v > 0.0 { "+" } else { "-" })
            })
            .collect();
        if terms.is_empty() {
            continue;
        }
        let _ = writeln!(s, " k{}_{}: {} = {}", meta.field, meta.cell, terms.join(" "), sys.b[r]);
    }
    s.push_str("Bounds\n");
    for e in 0..ne {
        let _ = writeln!(s, " s{e} >= 0\n -inf <= i{e} <= 0");
        for i in 0..n {
            let _ = writeln!(s, " v{i}_{e} free");
        }
    }
    s.push_str("End\n");
    s
}
