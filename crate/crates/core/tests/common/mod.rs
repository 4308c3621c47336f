//! Independent reference computations shared by the integration tests.
//!
//! Nothing here calls into the projection or Steiner code under test: the
//! dual-ball projection is found by enumerating KKT sign patterns, the `K^α`
//! projection by proximal gradient on the dual problem, and exact Steiner
//! trees by minimum spanning trees over all Steiner-vertex subsets.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use steinrelax::graph::EmbeddedGraph;
use steinrelax::grid::FieldDemand;
use steinrelax::shapes::regular_polygon;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn diff_norm(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// `max(Σ w⁺, Σ w⁻)`, written out again so the oracle does not share code
/// with the library.
fn dual_norm(w: &[f64]) -> f64 {
    let p: f64 = w.iter().map(|x| x.max(0.0)).sum();
    let n: f64 = w.iter().map(|x| (-x).max(0.0)).sum();
    p.max(n)
}

/// Projection onto `{w : Σ w⁺ ≤ 1, Σ w⁻ ≤ 1}` by exhaustive search.
///
/// Each coordinate is labelled: on the tight positive face, on the tight
/// negative face, clamped to zero, or untouched. A label pattern fixes the
/// candidate in closed form (a common shift on each tight face); the
/// projection is the feasible candidate closest to `q`.
pub fn dual_ball_oracle(q: &[f64]) -> Vec<f64> {
    let n = q.len();
    assert!(n <= 8);
    let mut best: Option<(f64, Vec<f64>)> = None;
    for code in 0..4usize.pow(n as u32) {
        let labels: Vec<usize> = (0..n).map(|i| code / 4usize.pow(i as u32) % 4).collect();
        let shift = |lab: usize| {
            let idx: Vec<usize> = (0..n).filter(|&i| labels[i] == lab).collect();
            if idx.is_empty() {
                return 0.0;
            }
            let s: f64 = idx.iter().map(|&i| q[i].abs()).sum();
            (s - 1.0) / idx.len() as f64
        };
        let (sp, sn) = (shift(0), shift(1));
        let w: Vec<f64> = (0..n)
            .map(|i| match labels[i] {
                0 => q[i] - sp,
                1 => q[i] + sn,
                2 => 0.0,
                _ => q[i],
            })
            .collect();
        if dual_norm(&w) > 1.0 + 1e-12 {
            continue;
        }
        let d = diff_norm(&w, q);
        if best.as_ref().map_or(true, |(b, _)| d < *b) {
            best = Some((d, w));
        }
    }
    best.expect("zero is always a candidate").1
}

/// Nonempty column subsets of `0..n` as bitmasks.
fn subsets(n: usize) -> Vec<u32> {
    (1u32..(1 << n)).collect()
}

fn column_sum(p: &[f64], d: usize, mask: u32) -> Vec<f64> {
    let mut s = vec![0.0; d];
    for j in 0..p.len() / d {
        if mask >> j & 1 == 1 {
            for r in 0..d {
                s[r] += p[j * d + r];
            }
        }
    }
    s
}

fn kalpha_radius(mask: u32, alpha: f64) -> f64 {
    (mask.count_ones() as f64).powf(alpha)
}

/// Result of [`kalpha_oracle`]: a feasible point and a certified bound on
/// its distance to the true projection.
pub struct OracleProjection {
    pub point: Vec<f64>,
    pub radius: f64,
}

/// Euclidean projection of the column-major `d × n` matrix `q` onto
/// `{p : ‖Σ_{j∈J} p_j‖ ≤ |J|^α for all J}`.
///
/// Solves the dual `min_y ½‖q − Aᵀy‖² + Σ_J |J|^α ‖y_J‖` by accelerated
/// proximal gradient with adaptive restart, where `(A p)_J = Σ_{j∈J} p_j`;
/// the primal point is `q − Aᵀy`. The primal iterate is scaled into the set
/// and the duality gap bounds its distance to the projection by strong
/// convexity: `½‖p̂ − p*‖² ≤ gap`.
pub fn kalpha_oracle(q: &[f64], d: usize, alpha: f64) -> OracleProjection {
    let n = q.len() / d;
    let js = subsets(n);
    let m = js.len();
    let lip = (n as f64) * (1u64 << (n - 1)) as f64;
    let step = 1.0 / lip;
    let radii: Vec<f64> = js.iter().map(|&j| kalpha_radius(j, alpha)).collect();

    let primal_of = |y: &[f64]| {
        let mut p = q.to_vec();
        for (k, &mask) in js.iter().enumerate() {
            for j in 0..n {
                if mask >> j & 1 == 1 {
                    for r in 0..d {
                        p[j * d + r] -= y[k * d + r];
                    }
                }
            }
        }
        p
    };
    let dual_obj = |y: &[f64]| {
        let p = primal_of(y);
        let mut v = 0.5 * p.iter().map(|x| x * x).sum::<f64>() - 0.5 * q.iter().map(|x| x * x).sum::<f64>();
        for k in 0..m {
            v += radii[k] * norm(&y[k * d..(k + 1) * d]);
        }
        v
    };
    let feasible = |p: &[f64]| {
        let mut s: f64 = 1.0;
        for (k, &mask) in js.iter().enumerate() {
            let len = norm(&column_sum(p, d, mask));
            if len > radii[k] {
                s = s.min(radii[k] / len);
            }
        }
        p.iter().map(|x| x * s).collect::<Vec<f64>>()
    };
    let certify = |y: &[f64]| {
        let p = feasible(&primal_of(y));
        let primal = 0.5 * diff_norm(&p, q).powi(2);
        let gap = (primal + dual_obj(y)).max(0.0);
        (p, (2.0 * gap).sqrt())
    };

    let mut y = vec![0.0; m * d];
    let mut z = y.clone();
    let mut t = 1.0f64;
    let mut last = dual_obj(&y);
    let (mut best_p, mut best_r) = certify(&y);
    for it in 1..=400_000 {
        let p = primal_of(&z);
        let mut y_next = vec![0.0; m * d];
        for (k, &mask) in js.iter().enumerate() {
            // gradient of the smooth part w.r.t. y_J is −Σ_{j∈J} p_j
            let g = column_sum(&p, d, mask);
            let u: Vec<f64> = (0..d).map(|r| z[k * d + r] + step * g[r]).collect();
            let nu = norm(&u);
            let keep = if nu > step * radii[k] { 1.0 - step * radii[k] / nu } else { 0.0 };
            for r in 0..d {
                y_next[k * d + r] = keep * u[r];
            }
        }
        let obj = dual_obj(&y_next);
        let t_next = if obj > last { 1.0 } else { 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt()) };
        let mom = if obj > last { 0.0 } else { (t - 1.0) / t_next };
        for i in 0..z.len() {
            z[i] = y_next[i] + mom * (y_next[i] - y[i]);
        }
        y = y_next;
        t = t_next;
        last = obj;
        if it % 500 == 0 {
            let (p, r) = certify(&y);
            if r < best_r {
                best_p = p;
                best_r = r;
            }
            if best_r < 1e-8 {
                break;
            }
        }
    }
    OracleProjection {
        point: best_p,
        radius: best_r,
    }
}

/// Largest `‖Σ_J p_j‖ − |J|^α` over all subsets.
pub fn kalpha_violation(p: &[f64], d: usize, alpha: f64) -> f64 {
    let n = p.len() / d;
    subsets(n)
        .into_iter()
        .map(|mask| norm(&column_sum(p, d, mask)) - kalpha_radius(mask, alpha))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Exact Steiner tree length: the optimal tree is a minimum spanning tree of
/// its own vertex set, so minimize the MST length over terminals plus every
/// subset of the other vertices (Prim on the induced subgraph).
pub fn steiner_by_subsets(g: &EmbeddedGraph) -> f64 {
    let nv = g.points.len();
    let others: Vec<usize> = (0..nv).filter(|v| !g.terminals.contains(v)).collect();
    assert!(others.len() <= 16, "brute force is exponential in the Steiner vertices");
    let len = |u: usize, v: usize| {
        let (a, b) = (g.points[u], g.points[v]);
        ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
    };
    let mut w = vec![vec![f64::INFINITY; nv]; nv];
    for &(u, v) in &g.edges {
        w[u][v] = len(u, v);
        w[v][u] = len(u, v);
    }
    let mut best = f64::INFINITY;
    for mask in 0u32..(1 << others.len()) {
        let mut verts = g.terminals.clone();
        verts.extend((0..others.len()).filter(|&k| mask >> k & 1 == 1).map(|k| others[k]));
        let k = verts.len();
        let mut inside = vec![false; k];
        let mut key = vec![f64::INFINITY; k];
        key[0] = 0.0;
        let mut total = 0.0;
        for _ in 0..k {
            let next = (0..k)
                .filter(|&i| !inside[i])
                .min_by(|&a, &b| key[a].total_cmp(&key[b]))
                .unwrap();
            if key[next].is_infinite() {
                total = f64::INFINITY;
                break;
            }
            inside[next] = true;
            total += key[next];
            for i in 0..k {
                if !inside[i] {
                    key[i] = key[i].min(w[verts[next]][verts[i]]);
                }
            }
        }
        best = best.min(total);
    }
    best
}

/// A random unit-square point set with `n` vertices, the first `n_term`
/// of them terminals, joined to their `m` nearest neighbours (increasing
/// `m` until connected). Independent of the library's k-NN builder.
pub fn random_knn(seed: u64, n: usize, n_term: usize, m: usize) -> EmbeddedGraph {
    let mut r = rng(seed);
    let pts: Vec<[f64; 2]> = (0..n).map(|_| [r.gen_range(0.05..0.95), r.gen_range(0.05..0.95)]).collect();
    let mut m = m;
    loop {
        let mut edges = std::collections::BTreeSet::new();
        for u in 0..n {
            let mut order: Vec<usize> = (0..n).filter(|&v| v != u).collect();
            let d = |v: usize| (pts[u][0] - pts[v][0]).powi(2) + (pts[u][1] - pts[v][1]).powi(2);
            order.sort_by(|&a, &b| d(a).total_cmp(&d(b)));
            for &v in order.iter().take(m) {
                edges.insert((u.min(v), u.max(v)));
            }
        }
        if let Ok(g) = EmbeddedGraph::new(pts.clone(), edges.into_iter().collect(), (0..n_term).collect()) {
            return g;
        }
        m += 1;
    }
}

/// Single-sink demands for a polygon: every vertex but the last sends unit
/// mass to the last.
pub fn polygon_demands(n: usize, side: f64) -> (Vec<[f64; 2]>, Vec<FieldDemand>) {
    let pts = regular_polygon(n, side, [0.5, 0.5]);
    let sink = pts[n - 1];
    let d = pts[..n - 1].iter().map(|&p| FieldDemand { source: p, sink }).collect();
    (pts, d)
}
