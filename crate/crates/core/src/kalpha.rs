//! Geometry of the constraint set
//!
//! ```text
//! K^α = { p ∈ R^{d×n} : ‖Σ_{j∈J} p_j‖₂ ≤ |J|^α  for every nonempty J ⊂ {1..n} }
//! ```
//!
//! together with its slabs `K^α_J`, the Dykstra projection onto their
//! intersection, and the per-edge norms used by the graph formulation
//! (`flow_norm` and its dual `dual_norm_star`).
//!
//! Columns are indexed from 0 in code; a [`SubsetMask`] bit `i` stands for
//! field `i`.

use crate::error::{Error, Result};

/// Largest column count for which the `2^n - 1` subsets are enumerated.
pub const DEFAULT_COLUMN_CAP: usize = 24;

/// Irrigation exponent, `0 ≤ α ≤ 1`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct Alpha(f64);

impl Alpha {
    pub const STEINER: Alpha = Alpha(0.0);

    pub fn new(value: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::AlphaOutOfRange(value));
        }
        Ok(Alpha(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// `card^α` with the convention `0^0 = 1`.
    pub fn pow(self, card: u32) -> f64 {
        if self.0 == 0.0 {
            1.0
        } else {
            (card as f64).powf(self.0)
        }
    }
}

/// A nonempty subset of field indices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SubsetMask(u32);

impl SubsetMask {
    pub fn new(bits: u32) -> Result<Self> {
        if bits == 0 {
            return Err(Error::InvalidInput("subset mask must be nonempty".into()));
        }
        Ok(SubsetMask(bits))
    }

    pub fn singleton(i: usize) -> Self {
        SubsetMask(1 << i)
    }

    pub fn from_indices(indices: &[usize]) -> Result<Self> {
        Self::new(indices.iter().fold(0u32, |acc, &i| acc | (1 << i)))
    }

    pub fn bits(self) -> u32 {
        self.0
    }

    pub fn cardinality(self) -> u32 {
        self.0.count_ones()
    }

    pub fn contains(self, i: usize) -> bool {
        self.0 >> i & 1 == 1
    }

    pub fn indices(self) -> impl Iterator<Item = usize> {
        let bits = self.0;
        (0..32).filter(move |i| bits >> i & 1 == 1)
    }

    /// All nonempty subsets of `{0..n}` in ascending bitmask order.
    pub fn all(n: usize) -> impl Iterator<Item = SubsetMask> {
        (1u32..(1u32 << n)).map(SubsetMask)
    }
}

impl std::fmt::Display for SubsetMask {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.indices().map(|i| (i + 1).to_string()).collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}

/// A `d × n` real matrix stored column by column.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixPoint {
    d: usize,
    n: usize,
    data: Vec<f64>,
}

impl MatrixPoint {
    pub fn zeros(d: usize, n: usize) -> Self {
        MatrixPoint {
            d,
            n,
            data: vec![0.0; d * n],
        }
    }

    pub fn from_column_major(d: usize, n: usize, data: Vec<f64>) -> Result<Self> {
        if d == 0 || n == 0 {
            return Err(Error::InvalidInput("matrix must have d ≥ 1 and n ≥ 1".into()));
        }
        if data.len() != d * n {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {d}×{n} matrix",
                data.len()
            )));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("matrix entries must be finite".into()));
        }
        Ok(MatrixPoint { d, n, data })
    }

    pub fn from_columns(columns: &[[f64; 2]]) -> Result<Self> {
        Self::from_column_major(2, columns.len(), columns.iter().flatten().copied().collect())
    }

    pub fn rows(&self) -> usize {
        self.d
    }

    pub fn cols(&self) -> usize {
        self.n
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.data[j * self.d..(j + 1) * self.d]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn frobenius(&self) -> f64 {
        norm2(&self.data)
    }

    pub fn distance(&self, other: &MatrixPoint) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    pub fn dot(&self, other: &MatrixPoint) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    /// `Σ_{j∈J} p_j`.
    pub fn subset_sum(&self, mask: SubsetMask) -> Vec<f64> {
        let mut v = vec![0.0; self.d];
        for j in mask.indices().take_while(|&j| j < self.n) {
            for (acc, x) in v.iter_mut().zip(self.column(j)) {
                *acc += x;
            }
        }
        v
    }
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `|J|^α`, the radius of the slab `K^α_J`.
pub fn slab_bound(mask: SubsetMask, alpha: Alpha) -> f64 {
    alpha.pow(mask.cardinality())
}

#[derive(Clone, Debug, PartialEq)]
pub struct Membership {
    pub inside: bool,
    /// Subset with the largest `‖Σ_J q_j‖ − |J|^α`, when some subset violates.
    pub worst: Option<SubsetMask>,
    /// Largest violation over all subsets (may be negative when strictly inside).
    pub max_violation: f64,
}

pub fn membership(q: &MatrixPoint, alpha: Alpha, tol: f64) -> Result<Membership> {
    membership_with_cap(q, alpha, tol, DEFAULT_COLUMN_CAP)
}

/// Enumerates all nonempty subsets in Gray-code order, so each step adds or
/// removes a single column from the running sum.
pub fn membership_with_cap(q: &MatrixPoint, alpha: Alpha, tol: f64, cap: usize) -> Result<Membership> {
    let n = q.cols();
    if n > cap {
        return Err(Error::TooManyColumns { n, cap });
    }
    let (worst_bits, max_violation) = max_violation_gray(q.as_slice(), q.rows(), n, alpha);
    let inside = max_violation <= tol;
    Ok(Membership {
        inside,
        worst: if inside { None } else { Some(SubsetMask(worst_bits)) },
        max_violation,
    })
}

pub(crate) fn max_violation_gray(data: &[f64], d: usize, n: usize, alpha: Alpha) -> (u32, f64) {
    let mut sum = vec![0.0; d];
    let mut gray = 0u32;
    let mut best = (0u32, f64::NEG_INFINITY);
    for k in 1u32..(1u32 << n) {
        let flip = k.trailing_zeros() as usize;
        let col = &data[flip * d..(flip + 1) * d];
        gray ^= 1 << flip;
        if gray >> flip & 1 == 1 {
            sum.iter_mut().zip(col).for_each(|(s, x)| *s += x);
        } else {
            sum.iter_mut().zip(col).for_each(|(s, x)| *s -= x);
        }
        let viol = norm2(&sum) - alpha.pow(gray.count_ones());
        if viol > best.1 {
            best = (gray, viol);
        }
    }
    best
}

/// Euclidean projection onto the slab `K^α_J`.
pub fn project_slab(q: &MatrixPoint, mask: SubsetMask, alpha: Alpha) -> MatrixPoint {
    let mut p = q.clone();
    let shift = slab_shift(p.as_slice(), p.rows(), mask, slab_bound(mask, alpha), &[]);
    if let Some(s) = shift {
        let d = p.d;
        apply_shift(p.as_mut_slice(), d, mask, &s, -1.0);
    }
    p
}

/// Per-column shift `t·v/‖v‖` that projects onto `K^α_J`, or `None` when the
/// point (offset by `extra` on the columns of `J`) already satisfies the slab.
fn slab_shift(data: &[f64], d: usize, mask: SubsetMask, bound: f64, extra: &[f64]) -> Option<[f64; 4]> {
    debug_assert!(d <= 4);
    let mut v = [0.0f64; 4];
    let mut bits = mask.bits();
    while bits != 0 {
        let j = bits.trailing_zeros() as usize;
        bits &= bits - 1;
        for r in 0..d {
            v[r] += data[j * d + r];
        }
    }
    let card = mask.cardinality() as f64;
    if !extra.is_empty() {
        for r in 0..d {
            v[r] += card * extra[r];
        }
    }
    let norm = v[..d].iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm <= bound || norm == 0.0 {
        return None;
    }
    let t = (norm - bound) / (card * norm);
    let mut s = [0.0; 4];
    for r in 0..d {
        s[r] = t * v[r];
    }
    Some(s)
}

fn apply_shift(data: &mut [f64], d: usize, mask: SubsetMask, s: &[f64], sign: f64) {
    let mut bits = mask.bits();
    while bits != 0 {
        let j = bits.trailing_zeros() as usize;
        bits &= bits - 1;
        for r in 0..d {
            data[j * d + r] += sign * s[r];
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProjectionStatus {
    Converged,
    SweepBudgetExhausted,
}

#[derive(Clone, Debug)]
pub struct Projection {
    pub point: MatrixPoint,
    pub status: ProjectionStatus,
    pub sweeps: usize,
    pub last_change: f64,
    /// Membership slack: the result is in `K^α` up to this tolerance.
    pub slack: f64,
}

/// Dykstra projection onto `K^α`, sweeping the slabs in ascending bitmask
/// order and stopping once a full sweep moves the iterate by less than `tol`
/// in Frobenius norm.
pub fn project_kalpha(q: &MatrixPoint, alpha: Alpha, tol: f64, max_sweeps: usize) -> Result<Projection> {
    if !(tol > 0.0) || max_sweeps == 0 {
        return Err(Error::InvalidInput("need tol > 0 and max_sweeps ≥ 1".into()));
    }
    let n = q.cols();
    if n > DEFAULT_COLUMN_CAP {
        return Err(Error::TooManyColumns {
            n,
            cap: DEFAULT_COLUMN_CAP,
        });
    }
    let mut projector = KalphaProjector::new(q.rows(), n, alpha);
    let mut point = q.clone();
    let outcome = projector.project(point.as_mut_slice(), tol, max_sweeps);
    let (_, worst) = max_violation_gray(point.as_slice(), point.rows(), n, alpha);
    Ok(Projection {
        point,
        status: outcome.status,
        sweeps: outcome.sweeps,
        last_change: outcome.last_change,
        slack: worst.max(0.0),
    })
}

#[derive(Clone, Copy, Debug)]
pub struct DykstraOutcome {
    pub status: ProjectionStatus,
    pub sweeps: usize,
    pub last_change: f64,
}

/// Reusable Dykstra state for projecting many `d × n` blocks (one per grid
/// cell) onto the same `K^α`, optionally restricted to a list of subsets.
#[derive(Clone, Debug)]
pub struct KalphaProjector {
    d: usize,
    slabs: Vec<(SubsetMask, f64)>,
    shifts: Vec<f64>,
    prev: Vec<f64>,
}

impl KalphaProjector {
    pub fn new(d: usize, n: usize, alpha: Alpha) -> Self {
        Self::with_subsets(d, n, SubsetMask::all(n), alpha)
    }

    pub fn with_subsets(d: usize, n: usize, subsets: impl IntoIterator<Item = SubsetMask>, alpha: Alpha) -> Self {
        assert!(d <= 4, "only d ≤ 4 is supported");
        let slabs: Vec<_> = subsets.into_iter().map(|m| (m, slab_bound(m, alpha))).collect();
        KalphaProjector {
            d,
            shifts: vec![0.0; slabs.len() * d],
            prev: vec![0.0; d * n],
            slabs,
        }
    }

    pub fn project(&mut self, p: &mut [f64], tol: f64, max_sweeps: usize) -> DykstraOutcome {
        let d = self.d;
        if self.slabs.len() == 1 {
            // a single slab is projected exactly in one step
            let (mask, bound) = self.slabs[0];
            if let Some(s) = slab_shift(p, d, mask, bound, &[]) {
                let change = s[..d].iter().map(|x| x * x).sum::<f64>().sqrt() * (mask.cardinality() as f64).sqrt();
                apply_shift(p, d, mask, &s, -1.0);
                return DykstraOutcome {
                    status: ProjectionStatus::Converged,
                    sweeps: 1,
                    last_change: change,
                };
            }
            return DykstraOutcome {
                status: ProjectionStatus::Converged,
                sweeps: 1,
                last_change: 0.0,
            };
        }
        self.shifts.iter_mut().for_each(|s| *s = 0.0);
        let mut last_change = f64::INFINITY;
        for sweep in 1..=max_sweeps {
            self.prev.copy_from_slice(p);
            for (k, &(mask, bound)) in self.slabs.iter().enumerate() {
                let y = &mut self.shifts[k * d..(k + 1) * d];
                // p ← proj(p + y | K_J); y ← (p + y) − proj(...)
                let new = slab_shift(p, d, mask, bound, y);
                let mut delta = [0.0; 4];
                match new {
                    Some(s) => {
                        for r in 0..d {
                            delta[r] = y[r] - s[r];
                            y[r] = s[r];
                        }
                    }
                    None => {
                        for r in 0..d {
                            delta[r] = y[r];
                            y[r] = 0.0;
                        }
                    }
                }
                if delta[..d].iter().any(|&x| x != 0.0) {
                    apply_shift(p, d, mask, &delta, 1.0);
                }
            }
            last_change = p
                .iter()
                .zip(&self.prev)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            if last_change < tol {
                return DykstraOutcome {
                    status: ProjectionStatus::Converged,
                    sweeps: sweep,
                    last_change,
                };
            }
        }
        DykstraOutcome {
            status: ProjectionStatus::SweepBudgetExhausted,
            sweeps: max_sweeps,
            last_change,
        }
    }
}

/// `‖v‖ = max_i (v_i ∨ 0) − min_i (v_i ∧ 0)`: shared flow in one direction is
/// charged once.
pub fn flow_norm(v: &[f64]) -> f64 {
    let pos = v.iter().fold(0.0f64, |m, &x| m.max(x));
    let neg = v.iter().fold(0.0f64, |m, &x| m.max(-x));
    pos + neg
}

/// Dual of [`flow_norm`]: the larger of the ℓ¹ norms of the positive and
/// negative parts.
pub fn dual_norm_star(w: &[f64]) -> f64 {
    let pos: f64 = w.iter().filter(|x| **x > 0.0).sum();
    let neg: f64 = w.iter().filter(|x| **x < 0.0).map(|x| -x).sum();
    pos.max(neg)
}

/// Projection onto `{x : Σ (sign·x_i)⁺ ≤ 1}`: water-filling on the
/// coordinates of the active sign, the others are untouched.
fn project_signed_part(w: &mut [f64], sign: f64) {
    let total: f64 = w.iter().map(|x| (sign * x).max(0.0)).sum();
    if total <= 1.0 {
        return;
    }
    let mut active: Vec<f64> = w.iter().map(|x| sign * x).filter(|x| *x > 0.0).collect();
    active.sort_by(|a, b| b.partial_cmp(a).unwrap());
    // largest θ with Σ (a_i − θ)⁺ = 1
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (k, a) in active.iter().enumerate() {
        cumsum += a;
        let t = (cumsum - 1.0) / (k + 1) as f64;
        if k + 1 == active.len() || active[k + 1] <= t {
            theta = t;
            break;
        }
    }
    for x in w.iter_mut() {
        let s = sign * *x;
        if s > 0.0 {
            *x = sign * (s - theta).max(0.0);
        }
    }
}

#[derive(Clone, Debug)]
pub struct DualBallProjection {
    pub point: Vec<f64>,
    pub status: ProjectionStatus,
    pub sweeps: usize,
}

/// Euclidean projection onto `{w : ‖w‖_* ≤ 1}` by Dykstra between the
/// positive-part and negative-part constraints.
pub fn project_dual_ball(w: &[f64]) -> DualBallProjection {
    project_dual_ball_with(w, 1e-12, 100)
}

pub fn project_dual_ball_with(w: &[f64], tol: f64, max_sweeps: usize) -> DualBallProjection {
    let n = w.len();
    let mut p = w.to_vec();
    let mut y = [vec![0.0; n], vec![0.0; n]];
    let mut scratch = vec![0.0; n];
    for sweep in 1..=max_sweeps {
        let before = p.clone();
        for (k, sign) in [1.0, -1.0].into_iter().enumerate() {
            for i in 0..n {
                scratch[i] = p[i] + y[k][i];
            }
            let shifted = scratch.clone();
            project_signed_part(&mut scratch, sign);
            for i in 0..n {
                y[k][i] = shifted[i] - scratch[i];
                p[i] = scratch[i];
            }
        }
        let change = p.iter().zip(&before).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        if change < tol {
            return DualBallProjection {
                point: p,
                status: ProjectionStatus::Converged,
                sweeps: sweep,
            };
        }
    }
    DualBallProjection {
        point: p,
        status: ProjectionStatus::SweepBudgetExhausted,
        sweeps: max_sweeps,
    }
}

/// In-place variant used by the graph solver. The two constraints act on
/// disjoint coordinate sets, so one pass of each is exact.
pub(crate) fn project_dual_ball_in_place(w: &mut [f64]) {
    project_signed_part(w, 1.0);
    project_signed_part(w, -1.0);
}

/// Support function of `K^α` on a rank-one matrix `τ ⊗ g` with binary `g`:
/// `‖g‖_{1/α} = (#active)^α`.
pub fn support_rank_one(tau: &[f64], g: &[f64], alpha: Alpha) -> Result<f64> {
    if (norm2(tau) - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidInput("tau must be a unit vector".into()));
    }
    if g.iter().any(|&x| x != 0.0 && x != 1.0) {
        return Err(Error::InvalidInput(
            "multiplicity vector must be binary (values 0 or 1)".into(),
        ));
    }
    let count = g.iter().filter(|&&x| x == 1.0).count() as u32;
    if count == 0 {
        return Ok(0.0);
    }
    Ok(alpha.pow(count))
}

/// `sup_{q ∈ K^α} ⟨x, q⟩` for a general matrix.
///
/// Closed forms for one column (`‖x‖`) and for `α = 1` (`Σ‖x_j‖`); otherwise
/// projected gradient ascent, which returns a value attained by a point of
/// `K^α` (a lower bound up to the Dykstra slack).
pub fn support_value(x: &MatrixPoint, alpha: Alpha) -> f64 {
    let n = x.cols();
    let d = x.rows();
    if n == 1 {
        return norm2(x.as_slice());
    }
    if alpha.value() == 1.0 {
        return (0..n).map(|j| norm2(x.column(j))).sum();
    }
    let scale = x.frobenius();
    if scale == 0.0 {
        return 0.0;
    }
    let mut projector = KalphaProjector::new(d, n, alpha);
    let step = 4.0 * n as f64 / scale;
    let mut q = vec![0.0; d * n];
    let mut best = 0.0f64;
    for _ in 0..60 {
        for (qi, xi) in q.iter_mut().zip(x.as_slice()) {
            *qi += step * xi;
        }
        projector.project(&mut q, 1e-12, 2000);
        let val: f64 = q.iter().zip(x.as_slice()).map(|(a, b)| a * b).sum();
        best = best.max(val);
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mp(cols: &[[f64; 2]]) -> MatrixPoint {
        MatrixPoint::from_columns(cols).unwrap()
    }

    #[test]
    fn slab_bound_values() {
        let a0 = Alpha::new(0.0).unwrap();
        assert_eq!(slab_bound(SubsetMask::singleton(0), a0), 1.0);
        let a1 = Alpha::new(1.0).unwrap();
        assert_eq!(slab_bound(SubsetMask::new(0b111).unwrap(), a1), 3.0);
        let ah = Alpha::new(0.5).unwrap();
        assert!((slab_bound(SubsetMask::new(0b11).unwrap(), ah) - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn alpha_rejects_out_of_range() {
        assert!(Alpha::new(1.5).is_err());
        assert!(Alpha::new(-0.1).is_err());
    }

    #[test]
    fn membership_examples() {
        let a0 = Alpha::STEINER;
        let m = membership(&MatrixPoint::zeros(2, 3), a0, 0.0).unwrap();
        assert!(m.inside && m.worst.is_none());

        let m = membership(&mp(&[[1.5, 0.0]]), a0, 0.0).unwrap();
        assert!(!m.inside);
        assert_eq!(m.worst, Some(SubsetMask::singleton(0)));

        let m = membership(&mp(&[[0.9, 0.0], [0.9, 0.0]]), a0, 0.0).unwrap();
        assert!(!m.inside);
        assert_eq!(m.worst, Some(SubsetMask::new(0b11).unwrap()));
        assert!((m.max_violation - 0.8).abs() < 1e-12);
    }

    #[test]
    fn membership_respects_cap() {
        let q = MatrixPoint::zeros(2, 5);
        assert!(matches!(
            membership_with_cap(&q, Alpha::STEINER, 0.0, 4),
            Err(Error::TooManyColumns { n: 5, cap: 4 })
        ));
    }

    #[test]
    fn project_slab_examples() {
        let a0 = Alpha::STEINER;
        let q = mp(&[[0.2, 0.1], [0.3, -0.4]]);
        assert_eq!(project_slab(&q, SubsetMask::new(0b11).unwrap(), a0), q);

        let p = project_slab(&mp(&[[2.0, 0.0]]), SubsetMask::singleton(0), a0);
        assert_eq!(p.as_slice(), &[1.0, 0.0]);

        let p = project_slab(&mp(&[[1.0, 0.0], [1.0, 0.0]]), SubsetMask::new(0b11).unwrap(), a0);
        assert!(p.distance(&mp(&[[0.5, 0.0], [0.5, 0.0]])) < 1e-15);
    }

    #[test]
    fn project_slab_leaves_other_columns() {
        let q = mp(&[[3.0, 0.0], [5.0, 5.0], [0.0, 3.0]]);
        let p = project_slab(&q, SubsetMask::new(0b101).unwrap(), Alpha::STEINER);
        assert_eq!(p.column(1), q.column(1));
        let s = p.subset_sum(SubsetMask::new(0b101).unwrap());
        assert!((norm2(&s) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn project_kalpha_single_column() {
        let out = project_kalpha(&mp(&[[0.0, 3.0]]), Alpha::STEINER, 1e-9, 500).unwrap();
        assert_eq!(out.status, ProjectionStatus::Converged);
        assert!(out.point.distance(&mp(&[[0.0, 1.0]])) < 1e-12);
    }

    #[test]
    fn project_kalpha_inside_is_identity() {
        let q = mp(&[[0.1, 0.2], [-0.3, 0.1], [0.2, 0.2]]);
        let out = project_kalpha(&q, Alpha::new(0.3).unwrap(), 1e-9, 500).unwrap();
        assert_eq!(out.point, q);
        assert_eq!(out.sweeps, 1);
    }

    #[test]
    fn project_kalpha_reports_exhausted_budget() {
        let q = mp(&[[5.0, 1.0], [4.0, -2.0], [3.0, 3.0]]);
        let out = project_kalpha(&q, Alpha::STEINER, 1e-15, 1).unwrap();
        assert_eq!(out.status, ProjectionStatus::SweepBudgetExhausted);
    }

    #[test]
    fn flow_norm_examples() {
        assert_eq!(flow_norm(&[1.0, 1.0]), 1.0);
        assert_eq!(flow_norm(&[1.0, -1.0]), 2.0);
        assert_eq!(flow_norm(&[0.0, 0.0, 0.0]), 0.0);
        assert_eq!(dual_norm_star(&[1.0, -1.0]), 1.0);
        assert_eq!(dual_norm_star(&[0.5, 0.5]), 1.0);
    }

    #[test]
    fn dual_ball_examples() {
        let w = [0.3, -0.2, 0.4];
        assert_eq!(project_dual_ball(&w).point, w.to_vec());
        let p = project_dual_ball(&[2.0, 0.0, 0.0, 0.0]);
        assert_eq!(p.point, vec![1.0, 0.0, 0.0, 0.0]);
        assert_eq!(p.status, ProjectionStatus::Converged);
    }

    #[test]
    fn support_rank_one_examples() {
        let tau = [0.6, 0.8];
        let a = Alpha::new(0.37).unwrap();
        assert_eq!(support_rank_one(&tau, &[1.0, 0.0, 0.0], a).unwrap(), 1.0);
        assert_eq!(support_rank_one(&tau, &[1.0, 1.0, 1.0], Alpha::STEINER).unwrap(), 1.0);
        let v = support_rank_one(&tau, &[1.0, 1.0], Alpha::new(0.5).unwrap()).unwrap();
        assert!((v - 2f64.sqrt()).abs() < 1e-12);
        assert!(support_rank_one(&tau, &[0.5, 1.0], a).is_err());
        assert!(support_rank_one(&[1.0, 1.0], &[1.0], a).is_err());
    }

    #[test]
    fn support_value_matches_rank_one() {
        // τ ⊗ g with g = (1, 1, 0): value 2^α
        let tau = [0.6, 0.8];
        let x = mp(&[tau, tau, [0.0, 0.0]]);
        for a in [0.0, 0.5, 0.8] {
            let alpha = Alpha::new(a).unwrap();
            let v = support_value(&x, alpha);
            assert!((v - 2f64.powf(a)).abs() < 1e-4, "α={a}: {v}");
        }
    }
}
