//! First-order solve of `min Σ ℓ(e)‖V(e)‖` under Kirchhoff constraints, as the
//! saddle problem `min_V max_{‖W(e)‖_* ≤ 1} Σ ℓ(e)⟨W(e), V(e)⟩`.

use super::{assemble_kirchhoff, EmbeddedGraph};
use crate::error::Result;
use crate::kalpha::{dual_norm_star, flow_norm};
use crate::solver::{
    drive, preconditioners, CheckRecord, ConeRows, ConeSet, Engine, LinearRows, Measure, SolveStatus, SolverOptions,
    StoppingRule,
};
use crate::sparse::CsrBuilder;

#[derive(Clone, Debug)]
pub struct GraphSolveOptions {
    pub solver: SolverOptions,
    /// Edges with `max_i |V_i(e)|` above this fraction of the largest flow
    /// entry form the support.
    pub support_floor: f64,
    /// Iterations continue (within `max_iters` per round, at most
    /// `max_restarts` rounds) until `energy − lower_bound ≤ gap_tol · energy`.
    pub gap_tol: f64,
    pub max_restarts: usize,
}

impl Default for GraphSolveOptions {
    fn default() -> Self {
        GraphSolveOptions {
            solver: SolverOptions {
                stop: StoppingRule {
                    eps_feas: 1e-9,
                    eps_rel: 1e-10,
                    window: 2000,
                    max_iters: 1_000_000,
                    ..StoppingRule::default()
                },
                ..SolverOptions::default()
            },
            support_floor: 1e-4,
            gap_tol: 1e-9,
            max_restarts: 5,
        }
    }
}

#[derive(Clone, Debug)]
pub struct FlowSolution {
    pub n_fields: usize,
    /// Edge-major: `flows[e * n_fields + i] = V_i(e)`.
    pub flows: Vec<f64>,
    /// `Σ ℓ(e)‖V(e)‖`.
    pub energy: f64,
    /// Certified lower bound on the relaxed optimum from the multipliers.
    pub lower_bound: f64,
    /// `‖AV − b‖∞`.
    pub feasibility: f64,
    pub iterations: usize,
    pub status: SolveStatus,
    pub support: Vec<usize>,
    pub history: Vec<CheckRecord>,
}

impl FlowSolution {
    pub fn flow(&self, e: usize) -> &[f64] {
        &self.flows[e * self.n_fields..(e + 1) * self.n_fields]
    }

    /// Whether every entry lies within `tol` of `−1`, `0` or `1`.
    pub fn is_integral(&self, tol: f64) -> bool {
        self.flows.iter().all(|v| (v - v.round()).abs() <= tol && v.round().abs() <= 1.0)
    }

    pub fn support_length(&self, g: &EmbeddedGraph) -> f64 {
        self.support.iter().map(|&e| g.length(e)).sum()
    }
}

pub fn solve_graph(g: &EmbeddedGraph, opts: &GraphSolveOptions) -> Result<FlowSolution> {
    let (ne, n, nv) = (g.n_edges(), g.n_fields(), g.n_vertices());
    let lengths: Vec<f64> = (0..ne).map(|e| g.length(e)).collect();
    let kirchhoff = assemble_kirchhoff(g);
    let mut cb = CsrBuilder::new(n * ne);
    let mut row = Vec::with_capacity(1);
    for (e, &l) in lengths.iter().enumerate() {
        for i in 0..n {
            row.push((i * ne + e, l));
            cb.push_row(&mut row);
        }
    }
    let kc = cb.finish();
    let nc = kc.rows;
    let (tau, sigma) = preconditioners(&kc.vstack(&kirchhoff.a), opts.solver.gamma, opts.solver.step_ratio);
    let cone = ConeRows::new(kc, sigma[..nc].to_vec(), n, ConeSet::DualBall, 0.0, 1);
    let lin = LinearRows::new(kirchhoff.a.clone(), sigma[nc..].to_vec(), kirchhoff.b.clone());
    let mut engine = Engine::new(tau, Some(cone), lin, None);

    let mut x = vec![0.0; n * ne];
    let mut w = vec![0.0; nc];
    let mut lambda = vec![0.0; n * nv];
    let mut iter = 0;
    let mut history = Vec::new();
    let mut buf = vec![0.0; n];
    let energy_of = |x: &[f64], buf: &mut Vec<f64>| -> f64 {
        (0..ne)
            .map(|e| {
                for i in 0..n {
                    buf[i] = x[i * ne + e];
                }
                lengths[e] * flow_norm(buf)
            })
            .sum()
    };
    let lower_bound = |lambda: &[f64], buf: &mut Vec<f64>| -> f64 {
        // λ scaled into dual feasibility: ‖(Aᵀλ)(e)‖_* ≤ ℓ(e)
        let mut scale = 1.0f64;
        for (e, &(u, v)) in g.edges.iter().enumerate() {
            for i in 0..n {
                buf[i] = lambda[i * nv + u] - lambda[i * nv + v];
            }
            scale = scale.max(dual_norm_star(buf) / lengths[e]);
        }
        let dual: f64 = -lambda.iter().zip(&kirchhoff.b).map(|(l, b)| l * b).sum::<f64>();
        (dual / scale).max(0.0)
    };
    let mut status;
    let mut rounds = 0;
    loop {
        status = drive(
            &mut engine,
            &mut x,
            &mut w,
            &mut lambda,
            &mut iter,
            &mut history,
            &opts.solver,
            |x, w, _| Measure {
                energy: energy_of(x, &mut buf),
                pairing: (0..ne)
                    .map(|e| lengths[e] * (0..n).map(|i| w[e * n + i] * x[i * ne + e]).sum::<f64>())
                    .sum(),
                feasibility: kirchhoff.residual_inf(x),
                slack: 0.0,
            },
        )?;
        rounds += 1;
        let energy = energy_of(&x, &mut buf);
        let closed = energy - lower_bound(&lambda, &mut buf) <= opts.gap_tol * energy;
        if closed || status != SolveStatus::Converged || rounds > opts.max_restarts {
            if !closed {
                status = SolveStatus::MaxIterations;
            }
            break;
        }
    }

    let mut flows = vec![0.0; n * ne];
    for e in 0..ne {
        for i in 0..n {
            flows[e * n + i] = x[i * ne + e];
        }
    }
    let energy = energy_of(&x, &mut buf);
    let lower_bound = lower_bound(&lambda, &mut buf);
    let peak = flows.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let support = (0..ne)
        .filter(|&e| flows[e * n..(e + 1) * n].iter().any(|v| v.abs() > opts.support_floor * peak))
        .collect();
    Ok(FlowSolution {
        n_fields: n,
        flows,
        energy,
        lower_bound,
        feasibility: kirchhoff.residual_inf(&x),
        iterations: iter,
        status,
        support,
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{exact_steiner_dp, knn_graph};

    #[test]
    fn path_graph_energy_is_path_length() {
        let g = EmbeddedGraph::new(
            vec![[0.0, 0.0], [0.3, 0.4], [0.6, 0.0]],
            vec![(0, 1), (1, 2)],
            vec![0, 2],
        )
        .unwrap();
        let s = solve_graph(&g, &GraphSolveOptions::default()).unwrap();
        assert!((s.energy - 1.0).abs() < 1e-6, "{}", s.energy);
        assert!(s.lower_bound <= 1.0 + 1e-12 && s.lower_bound > 1.0 - 1e-6);
        assert_eq!(s.support, vec![0, 1]);
        assert!(s.is_integral(1e-4));
    }

    #[test]
    fn square_corners_on_a_lattice_graph() {
        // corners of a 0.6 square plus a lattice: graph optimum is at least
        // the Euclidean Steiner length and bounded by the DP
        let mut pts = vec![[0.2, 0.2], [0.8, 0.2], [0.8, 0.8], [0.2, 0.8]];
        for j in 0..7 {
            for i in 0..7 {
                let p = [0.2 + 0.1 * i as f64, 0.2 + 0.1 * j as f64];
                if !pts.iter().any(|q| (q[0] - p[0]).abs() + (q[1] - p[1]).abs() < 1e-9) {
                    pts.push(p);
                }
            }
        }
        let g = knn_graph(&pts, &[0, 1, 2, 3], 8).unwrap();
        let s = solve_graph(&g, &GraphSolveOptions::default()).unwrap();
        let exact = exact_steiner_dp(&g).unwrap();
        assert!(s.energy <= exact.length * (1.0 + 1e-6), "{} {}", s.energy, exact.length);
        assert!(s.lower_bound <= exact.length);
        assert!(s.energy >= 0.6 * (1.0 + 3f64.sqrt()) - 1e-6);
    }
}
