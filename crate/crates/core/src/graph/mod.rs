//! Steiner trees on explicit planar graphs.
//!
//! A graph carries `N` terminals; the last one is the common sink `P_N` and
//! field `i` routes a unit mass from terminal `i` to it. The relaxed energy of
//! a flow is `Σ_e ℓ(e)·‖V(e)‖` with the flow norm of [`crate::kalpha::flow_norm`].

mod exact;
mod io;
mod solve;

pub use exact::{exact_steiner_dp, shortest_paths, SteinerTree, DP_TERMINAL_CAP};
pub use io::{export_lp, parse_edge_list, parse_flow_solution, write_edge_list, write_flow_solution};
pub use solve::{solve_graph, FlowSolution, GraphSolveOptions};

use std::collections::BTreeSet;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::{ConstraintSystem, RowMeta};
use crate::shapes::{pentagon_star, pentagon_steiner_points};
use crate::sparse::CsrBuilder;

#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddedGraph {
    pub points: Vec<[f64; 2]>,
    /// Oriented `(tail, head)`; `τ_e` points from tail to head.
    pub edges: Vec<(usize, usize)>,
    /// Vertex indices of `P_1..P_N`; the last is the sink.
    pub terminals: Vec<usize>,
}

impl EmbeddedGraph {
    /// Validates simplicity, positive lengths, terminal indices and
    /// connectivity.
    pub fn new(points: Vec<[f64; 2]>, edges: Vec<(usize, usize)>, terminals: Vec<usize>) -> Result<Self> {
        let nv = points.len();
        if points.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("vertex coordinates must be finite".into()));
        }
        let mut seen = BTreeSet::new();
        for &(u, v) in &edges {
            if u >= nv || v >= nv {
                return Err(Error::InvalidInput(format!("edge ({u}, {v}) references a missing vertex")));
            }
            if u == v {
                return Err(Error::InvalidInput(format!("self-loop at vertex {u}")));
            }
            if !seen.insert((u.min(v), u.max(v))) {
                return Err(Error::InvalidInput(format!("duplicate edge ({u}, {v})")));
            }
            if dist(points[u], points[v]) <= 0.0 {
                return Err(Error::InvalidInput(format!("edge ({u}, {v}) has zero length")));
            }
        }
        if terminals.len() < 2 {
            return Err(Error::InvalidInput("at least two terminals are required".into()));
        }
        let mut ts = BTreeSet::new();
        for &t in &terminals {
            if t >= nv || !ts.insert(t) {
                return Err(Error::InvalidInput(format!("terminal index {t} is out of range or repeated")));
            }
        }
        let g = EmbeddedGraph { points, edges, terminals };
        let components = g.components();
        if components > 1 {
            return Err(Error::Disconnected { components });
        }
        Ok(g)
    }

    pub fn n_vertices(&self) -> usize {
        self.points.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    /// Number of fields `N − 1`.
    pub fn n_fields(&self) -> usize {
        self.terminals.len() - 1
    }

    pub fn length(&self, e: usize) -> f64 {
        let (u, v) = self.edges[e];
        dist(self.points[u], self.points[v])
    }

    pub fn sink(&self) -> usize {
        *self.terminals.last().unwrap()
    }

    /// `(neighbour, edge)` lists.
    pub fn adjacency(&self) -> Vec<Vec<(usize, usize)>> {
        let mut adj = vec![Vec::new(); self.n_vertices()];
        for (e, &(u, v)) in self.edges.iter().enumerate() {
            adj[u].push((v, e));
            adj[v].push((u, e));
        }
        adj
    }

    pub fn components(&self) -> usize {
        let adj = self.adjacency();
        let mut seen = vec![false; self.n_vertices()];
        let mut count = 0;
        for s in 0..self.n_vertices() {
            if seen[s] {
                continue;
            }
            count += 1;
            seen[s] = true;
            let mut stack = vec![s];
            while let Some(u) = stack.pop() {
                for &(v, _) in &adj[u] {
                    if !seen[v] {
                        seen[v] = true;
                        stack.push(v);
                    }
                }
            }
        }
        count
    }

    /// Same graph with edge `e` reversed.
    pub fn flipped(&self, e: usize) -> Self {
        let mut g = self.clone();
        let (u, v) = g.edges[e];
        g.edges[e] = (v, u);
        g
    }
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Terminals first, then the scatter points that do not coincide with one.
/// Returns the points and the terminal indices `0..terminals.len()`.
pub fn augment(terminals: &[[f64; 2]], scatter: &[[f64; 2]]) -> (Vec<[f64; 2]>, Vec<usize>) {
    let mut pts = terminals.to_vec();
    pts.extend(scatter.iter().filter(|s| terminals.iter().all(|t| dist(**s, *t) > 1e-12)));
    (pts, (0..terminals.len()).collect())
}

/// `side × side` lattice on `[0,1]²` including the boundary.
pub fn grid_scatter(side: usize) -> Vec<[f64; 2]> {
    let step = 1.0 / (side.max(2) - 1) as f64;
    (0..side)
        .flat_map(|j| (0..side).map(move |i| [i as f64 * step, j as f64 * step]))
        .collect()
}

/// `k` uniform random points in `[0,1]²`.
pub fn random_scatter(k: usize, seed: u64) -> Vec<[f64; 2]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..k).map(|_| [rng.gen::<f64>(), rng.gen::<f64>()]).collect()
}

/// Joins every point to its `m` nearest neighbours (ties by index), with
/// duplicates removed. Edges are oriented from the lower to the higher index.
pub fn knn_graph(points: &[[f64; 2]], terminals: &[usize], m: usize) -> Result<EmbeddedGraph> {
    if m == 0 {
        return Err(Error::InvalidInput("M must be at least 1".into()));
    }
    let n = points.len();
    for a in 0..n {
        for b in a + 1..n {
            if dist(points[a], points[b]) == 0.0 {
                return Err(Error::InvalidInput(format!("points {a} and {b} coincide")));
            }
        }
    }
    let mut set = BTreeSet::new();
    let mut order: Vec<usize> = Vec::with_capacity(n);
    for u in 0..n {
        order.clear();
        order.extend((0..n).filter(|&v| v != u));
        let key = |v: &usize| dist(points[u], points[*v]);
        let k = m.min(order.len());
        if k == 0 {
            continue;
        }
        order.select_nth_unstable_by(k - 1, |a, b| key(a).total_cmp(&key(b)).then(a.cmp(b)));
        for &v in &order[..k] {
            set.insert((u.min(v), u.max(v)));
        }
    }
    EmbeddedGraph::new(points.to_vec(), set.into_iter().collect(), terminals.to_vec())
}

/// Kirchhoff rows `Σ_{δ⁺(v)} V_i − Σ_{δ⁻(v)} V_i = b`, one per field and
/// vertex (row `i·|V| + v`), over columns `i·|E| + e`. `b` is `+1` at `P_i`
/// and `−1` at the sink.
pub fn assemble_kirchhoff(g: &EmbeddedGraph) -> ConstraintSystem {
    let (nv, ne, n) = (g.n_vertices(), g.n_edges(), g.n_fields());
    let mut inc: Vec<Vec<(usize, f64)>> = vec![Vec::new(); nv];
    for (e, &(u, v)) in g.edges.iter().enumerate() {
        inc[u].push((e, 1.0));
        inc[v].push((e, -1.0));
    }
    let mut builder = CsrBuilder::new(n * ne);
    let mut b = vec![0.0; n * nv];
    let mut row_meta = Vec::with_capacity(n * nv);
    let mut entries = Vec::new();
    for i in 0..n {
        for (v, list) in inc.iter().enumerate() {
            entries.clear();
            entries.extend(list.iter().map(|&(e, s)| (i * ne + e, s)));
            builder.push_row(&mut entries);
            row_meta.push(RowMeta {
                field: i,
                cell: v,
                component: None,
            });
        }
        b[i * nv + g.terminals[i]] += 1.0;
        b[i * nv + g.sink()] -= 1.0;
    }
    ConstraintSystem {
        a: builder.finish(),
        b,
        row_meta,
    }
}

/// Union of the half-weight star and one Steiner tree of the regular
/// pentagon: vertices `P1..P5`, centre, five side points, three Steiner
/// points. `P5` is the sink.
pub fn pentagon_union_graph(side: f64) -> Result<EmbeddedGraph> {
    let v = crate::shapes::regular_polygon(5, side, [0.5, 0.5]);
    let star = pentagon_star(&v);
    let s = pentagon_steiner_points(&v);
    let mut pts = v.clone();
    let o = pts.len();
    pts.push(star.center);
    let q0 = pts.len();
    pts.extend(&star.side_points);
    let s0 = pts.len();
    pts.extend(s);
    let mut edges = Vec::new();
    for k in 0..5 {
        edges.push((k, q0 + k));
        edges.push(((k + 1) % 5, q0 + k));
        edges.push((q0 + k, o));
    }
    edges.extend([(0, s0), (1, s0), (2, s0 + 1), (3, s0 + 1), (s0, s0 + 2), (s0 + 1, s0 + 2), (4, s0 + 2)]);
    EmbeddedGraph::new(pts, edges, (0..5).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path_graph() -> EmbeddedGraph {
        EmbeddedGraph::new(vec![[0.0, 0.0], [0.5, 0.0], [1.0, 0.0]], vec![(0, 1), (1, 2)], vec![0, 2]).unwrap()
    }

    #[test]
    fn validation_rejects_bad_graphs() {
        let p = vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        assert!(EmbeddedGraph::new(p.clone(), vec![(0, 1), (1, 0)], vec![0, 1]).is_err());
        assert!(EmbeddedGraph::new(p.clone(), vec![(0, 0)], vec![0, 1]).is_err());
        assert!(matches!(
            EmbeddedGraph::new(p.clone(), vec![(0, 1)], vec![0, 2]),
            Err(Error::Disconnected { components: 2 })
        ));
        assert!(EmbeddedGraph::new(p, vec![(0, 1), (1, 2)], vec![0, 0]).is_err());
    }

    #[test]
    fn three_points_two_neighbours_is_a_triangle() {
        let g = knn_graph(&[[0.1, 0.1], [0.9, 0.1], [0.5, 0.8]], &[0, 1, 2], 2).unwrap();
        assert_eq!(g.edges, vec![(0, 1), (0, 2), (1, 2)]);
    }

    #[test]
    fn knn_edges_respect_neighbour_radii() {
        let pts = random_scatter(40, 7);
        let m = 4;
        let g = knn_graph(&pts, &[0, 1], m).unwrap();
        let radius = |u: usize| {
            let mut d: Vec<f64> = (0..pts.len()).filter(|&v| v != u).map(|v| dist(pts[u], pts[v])).collect();
            d.sort_by(f64::total_cmp);
            d[m - 1]
        };
        for &(u, v) in &g.edges {
            let l = dist(pts[u], pts[v]);
            assert!(l <= radius(u) + 1e-15 || l <= radius(v) + 1e-15);
        }
    }

    #[test]
    fn disconnected_knn_is_reported() {
        let pts = [[0.0, 0.0], [0.01, 0.0], [1.0, 1.0], [0.99, 1.0]];
        assert!(matches!(knn_graph(&pts, &[0, 2], 1), Err(Error::Disconnected { .. })));
    }

    #[test]
    fn kirchhoff_rows_and_balance() {
        let g = path_graph();
        let sys = assemble_kirchhoff(&g);
        assert_eq!(sys.b, vec![1.0, 0.0, -1.0]);
        // unit flow along the path is feasible
        assert_eq!(sys.residual_inf(&[1.0, 1.0]), 0.0);
        let sum: f64 = sys.b.iter().sum();
        assert_eq!(sum, 0.0);
        // every column sums to zero over the rows of its field
        let at = sys.a.transpose();
        for c in 0..at.rows {
            assert_eq!(at.row(c).map(|(_, v)| v).sum::<f64>(), 0.0);
        }
    }

    #[test]
    fn triangle_cycle_space_has_dimension_one() {
        let g = knn_graph(&[[0.1, 0.1], [0.9, 0.1], [0.5, 0.8]], &[0, 1, 2], 2).unwrap();
        let sys = assemble_kirchhoff(&g);
        // field 0: rows 0..3, columns 0..3; rank should be |V| − 1 = 2
        let mut m = [[0.0; 3]; 3];
        for r in 0..3 {
            for (c, v) in sys.a.row(r) {
                m[r][c] = v;
            }
        }
        assert_eq!(rank3(m), 2);
    }

    fn rank3(mut m: [[f64; 3]; 3]) -> usize {
        let mut rank = 0;
        for c in 0..3 {
            let Some(p) = (rank..3).find(|&r| m[r][c].abs() > 1e-12) else { continue };
            m.swap(rank, p);
            for r in 0..3 {
                if r != rank {
                    let f = m[r][c] / m[rank][c];
                    for k in 0..3 {
                        m[r][k] -= f * m[rank][k];
                    }
                }
            }
            rank += 1;
        }
        rank
    }

    #[test]
    fn augment_drops_duplicates_of_terminals() {
        let (pts, t) = augment(&[[0.0, 0.0]], &grid_scatter(3));
        assert_eq!(t, vec![0]);
        assert_eq!(pts.len(), 9);
        assert_eq!(grid_scatter(41).len(), 1681);
    }

    #[test]
    fn pentagon_union_graph_shape() {
        let g = pentagon_union_graph(0.5).unwrap();
        assert_eq!(g.n_vertices(), 14);
        assert_eq!(g.n_edges(), 22);
        assert_eq!(g.n_fields(), 4);
    }
}
