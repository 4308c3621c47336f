//! Exact Steiner trees by dynamic programming over terminal subsets
//! (Dreyfus–Wagner with Dijkstra relaxation), for validating the relaxation.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap};

use super::EmbeddedGraph;
use crate::error::{Error, Result};

pub const DP_TERMINAL_CAP: usize = 10;

#[derive(Clone, Debug, PartialEq)]
pub struct SteinerTree {
    /// Sorted edge indices.
    pub edges: Vec<usize>,
    pub length: f64,
}

#[derive(Clone, Copy, Debug)]
enum Step {
    Leaf,
    Split(u32),
    Edge(usize, usize),
}

#[derive(Clone, Copy, PartialEq, PartialOrd)]
struct Key(f64);

impl Eq for Key {}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Relaxes `cost` along edges (multi-source Dijkstra), recording in `how`
/// the edge used to reach each improved vertex.
fn dijkstra(g: &EmbeddedGraph, adj: &[Vec<(usize, usize)>], cost: &mut [f64], how: &mut [Step]) {
    let mut heap: BinaryHeap<Reverse<(Key, usize)>> =
        (0..cost.len()).filter(|&v| cost[v].is_finite()).map(|v| Reverse((Key(cost[v]), v))).collect();
    while let Some(Reverse((Key(d), u))) = heap.pop() {
        if d > cost[u] {
            continue;
        }
        for &(v, e) in &adj[u] {
            let nd = d + g.length(e);
            if nd < cost[v] {
                cost[v] = nd;
                how[v] = Step::Edge(u, e);
                heap.push(Reverse((Key(nd), v)));
            }
        }
    }
}

/// Single-source shortest path distances.
pub fn shortest_paths(g: &EmbeddedGraph, source: usize) -> Vec<f64> {
    let adj = g.adjacency();
    let mut cost = vec![f64::INFINITY; g.n_vertices()];
    cost[source] = 0.0;
    let mut how = vec![Step::Leaf; g.n_vertices()];
    dijkstra(g, &adj, &mut cost, &mut how);
    cost
}

/// Minimum-length tree spanning all terminals. Cost `O(3^N |V| + 2^N |E| log |V|)`.
pub fn exact_steiner_dp(g: &EmbeddedGraph) -> Result<SteinerTree> {
    let t = g.terminals.len();
    if t > DP_TERMINAL_CAP {
        return Err(Error::CapExceeded {
            what: "exact Steiner terminal",
            got: t,
            cap: DP_TERMINAL_CAP,
        });
    }
    let nv = g.n_vertices();
    let adj = g.adjacency();
    let full = (1u32 << t) - 1;
    let mut dp = vec![vec![f64::INFINITY; nv]; 1 << t];
    let mut how = vec![vec![Step::Leaf; nv]; 1 << t];
    for (k, &tv) in g.terminals.iter().enumerate() {
        let s = 1usize << k;
        dp[s][tv] = 0.0;
        let (c, h) = (&mut dp[s], &mut how[s]);
        dijkstra(g, &adj, c, h);
    }
    for s in 1..=full {
        if s.count_ones() < 2 {
            continue;
        }
        let low = s & s.wrapping_neg();
        let mut cost = vec![f64::INFINITY; nv];
        let mut step = vec![Step::Leaf; nv];
        // proper subsets containing the lowest bit, so each split is seen once
        let rest = s ^ low;
        let mut sub = rest;
        loop {
            let a = sub | low;
            if a != s {
                let b = s ^ a;
                for v in 0..nv {
                    let c = dp[a as usize][v] + dp[b as usize][v];
                    if c < cost[v] {
                        cost[v] = c;
                        step[v] = Step::Split(a);
                    }
                }
            }
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & rest;
        }
        dijkstra(g, &adj, &mut cost, &mut step);
        dp[s as usize] = cost;
        how[s as usize] = step;
    }
    let root = g.terminals[0];
    let mut edges = BTreeSet::new();
    let mut stack = vec![(full, root)];
    while let Some((s, v)) = stack.pop() {
        match how[s as usize][v] {
            Step::Leaf => {}
            Step::Split(a) => {
                stack.push((a, v));
                stack.push((s ^ a, v));
            }
            Step::Edge(u, e) => {
                edges.insert(e);
                stack.push((s, u));
            }
        }
    }
    let edges: Vec<usize> = edges.into_iter().collect();
    let length = edges.iter().map(|&e| g.length(e)).sum();
    Ok(SteinerTree { edges, length })
}
