//! Diagonally preconditioned primal-dual iteration for
//! `min_x G(x) + F(Kx)`, with `G` either zero or a sum of weighted Euclidean
//! norms of 2-blocks, and `F` a mix of cell-wise `K^α` indicator rows and
//! linear equality rows.

use crate::error::{Error, Result};
use crate::kalpha::{project_dual_ball_in_place, Alpha, KalphaProjector, ProjectionStatus};
use crate::sparse::Csr;

/// Per-column `τ_j = 1/Σ_i |K_ij|^{2−γ}` and per-row `σ_i = 1/Σ_j |K_ij|^γ`.
/// Empty rows and columns get a zero step and never move.
pub(crate) fn preconditioners(k: &Csr, gamma: f64, ratio: f64) -> (Vec<f64>, Vec<f64>) {
    let inv = |s: f64| if s > 0.0 { 1.0 / s } else { 0.0 };
    let tau = k.col_power_sums(2.0 - gamma).into_iter().map(|s| inv(s) / ratio).collect();
    let sigma = k.row_power_sums(gamma).into_iter().map(|s| inv(s) * ratio).collect();
    (tau, sigma)
}

/// Convex set each dual block is projected onto.
#[derive(Clone, Debug)]
pub(crate) enum ConeSet {
    /// `K^α` for `2 × n` blocks, by Dykstra.
    Kalpha(KalphaProjector),
    /// The unit ball of `‖·‖_*` (graph edges).
    DualBall,
}

/// Dual rows grouped in consecutive blocks of `width`, each projected onto
/// the same convex set.
#[derive(Clone, Debug)]
pub(crate) struct ConeRows {
    pub k: Csr,
    pub kt: Csr,
    pub sigma: Vec<f64>,
    pub width: usize,
    pub set: ConeSet,
    pub tol: f64,
    pub max_sweeps: usize,
}

impl ConeRows {
    pub fn kalpha(k: Csr, sigma: Vec<f64>, n_fields: usize, alpha: Alpha, tol: f64, max_sweeps: usize) -> Self {
        let set = ConeSet::Kalpha(KalphaProjector::new(2, n_fields, alpha));
        Self::new(k, sigma, 2 * n_fields, set, tol, max_sweeps)
    }

    pub fn new(k: Csr, mut sigma: Vec<f64>, width: usize, set: ConeSet, tol: f64, max_sweeps: usize) -> Self {
        // the prox of an indicator is the Euclidean projection only under a
        // step that is constant on the block; take the smallest one
        for block in sigma.chunks_mut(width) {
            let m = block.iter().copied().filter(|s| *s > 0.0).fold(f64::INFINITY, f64::min);
            let m = if m.is_finite() { m } else { 0.0 };
            block.iter_mut().for_each(|s| *s = m);
        }
        ConeRows {
            kt: k.transpose(),
            k,
            sigma,
            width,
            set,
            tol,
            max_sweeps,
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) struct LinearRows {
    pub k: Csr,
    pub kt: Csr,
    pub sigma: Vec<f64>,
    pub rhs: Vec<f64>,
}

impl LinearRows {
    pub fn new(k: Csr, sigma: Vec<f64>, rhs: Vec<f64>) -> Self {
        LinearRows {
            kt: k.transpose(),
            k,
            sigma,
            rhs,
        }
    }
}

/// `Σ_g w_g ‖x_g‖₂` over consecutive pairs starting at `start`.
#[derive(Clone, Debug)]
pub(crate) struct GroupNorm {
    pub start: usize,
    pub weights: Vec<f64>,
}

#[derive(Clone, Debug)]
pub(crate) struct Engine {
    pub tau: Vec<f64>,
    pub cone: Option<ConeRows>,
    pub lin: LinearRows,
    pub groups: Option<GroupNorm>,
    grad: Vec<f64>,
    xbar: Vec<f64>,
    kx_cone: Vec<f64>,
    kx_lin: Vec<f64>,
    /// Cells whose projection hit the sweep cap in the last step.
    pub unconverged: usize,
}

impl Engine {
    pub fn new(tau: Vec<f64>, cone: Option<ConeRows>, lin: LinearRows, groups: Option<GroupNorm>) -> Self {
        let n = tau.len();
        Engine {
            grad: vec![0.0; n],
            xbar: vec![0.0; n],
            kx_cone: vec![0.0; cone.as_ref().map_or(0, |c| c.k.rows)],
            kx_lin: vec![0.0; lin.k.rows],
            tau,
            cone,
            lin,
            groups,
            unconverged: 0,
        }
    }

    /// One iteration: `x ← prox_G(x − T Kᵀy)`, `x̄ = 2x_new − x`,
    /// `y ← prox_F*(y + Σ K x̄)`.
    pub fn step(&mut self, x: &mut [f64], y_cone: &mut [f64], y_lin: &mut [f64]) {
        let grad = &mut self.grad;
        self.lin.kt.mul_vec(y_lin, grad);
        if let Some(c) = &self.cone {
            c.kt.mul_vec_add(y_cone, grad);
        }
        for (g, (xj, tj)) in grad.iter_mut().zip(x.iter().zip(&self.tau)) {
            *g = xj - tj * *g;
        }
        if let Some(gr) = &self.groups {
            let t = &self.tau[gr.start..];
            for (k, (pair, w)) in grad[gr.start..].chunks_exact_mut(2).zip(&gr.weights).enumerate() {
                let norm = (pair[0] * pair[0] + pair[1] * pair[1]).sqrt();
                let thr = t[2 * k] * w;
                if norm <= thr {
                    pair[0] = 0.0;
                    pair[1] = 0.0;
                } else {
                    let s = 1.0 - thr / norm;
                    pair[0] *= s;
                    pair[1] *= s;
                }
            }
        }
        for ((xb, xj), g) in self.xbar.iter_mut().zip(x.iter_mut()).zip(grad.iter()) {
            *xb = 2.0 * g - *xj;
            *xj = *g;
        }
        self.lin.k.mul_vec(&self.xbar, &mut self.kx_lin);
        for ((y, kx), (s, r)) in y_lin
            .iter_mut()
            .zip(&self.kx_lin)
            .zip(self.lin.sigma.iter().zip(&self.lin.rhs))
        {
            *y += s * (kx - r);
        }
        self.unconverged = 0;
        if let Some(c) = &mut self.cone {
            c.k.mul_vec(&self.xbar, &mut self.kx_cone);
            for ((y, kx), s) in y_cone.iter_mut().zip(&self.kx_cone).zip(&c.sigma) {
                *y += s * kx;
            }
            match &mut c.set {
                ConeSet::Kalpha(projector) => {
                    for block in y_cone.chunks_exact_mut(c.width) {
                        let norm = block.iter().map(|v| v * v).sum::<f64>().sqrt();
                        let out = projector.project(block, c.tol * (1.0 + norm), c.max_sweeps);
                        if out.status == ProjectionStatus::SweepBudgetExhausted {
                            self.unconverged += 1;
                        }
                    }
                }
                ConeSet::DualBall => y_cone.chunks_exact_mut(c.width).for_each(project_dual_ball_in_place),
            }
        }
    }
}

/// Aborts when any entry exceeds `cap` in magnitude or is not finite.
pub(crate) fn check_magnitude(iter: usize, cap: f64, parts: &[&[f64]]) -> Result<()> {
    let mut worst = 0.0f64;
    for p in parts {
        for &v in p.iter() {
            if !v.is_finite() {
                return Err(Error::Diverged {
                    iter,
                    magnitude: f64::INFINITY,
                });
            }
            worst = worst.max(v.abs());
        }
    }
    if worst > cap {
        return Err(Error::Diverged { iter, magnitude: worst });
    }
    Ok(())
}
