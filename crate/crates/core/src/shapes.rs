//! Terminal layouts with known Steiner structures.

use std::f64::consts::PI;

/// Vertices of a regular `n`-gon of side `side` centred at `center`, the
/// first at the top, counter-clockwise.
pub fn regular_polygon(n: usize, side: f64, center: [f64; 2]) -> Vec<[f64; 2]> {
    let r = side / (2.0 * (PI / n as f64).sin());
    (0..n)
        .map(|k| {
            let t = PI / 2.0 + 2.0 * PI * k as f64 / n as f64;
            [center[0] + r * t.cos(), center[1] + r * t.sin()]
        })
        .collect()
}

const BETA: f64 = 0.3 * PI;

/// Length of a Steiner tree of the regular pentagon of side 1.
pub fn pentagon_steiner_factor() -> f64 {
    BETA.tan() * (1.0 + BETA.sin() + 3f64.sqrt() * BETA.cos())
}

/// Energy of the half-weight star structure on the pentagon of side 1
/// (half the length of its support).
pub fn pentagon_star_factor() -> f64 {
    1.25 * (3f64.sqrt() + BETA.tan())
}

/// Fermat point of three points (a vertex if its angle is at least 120°).
pub fn fermat_point(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> [f64; 2] {
    let mut p = [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0];
    for _ in 0..10_000 {
        let (mut wx, mut wy, mut ws) = (0.0, 0.0, 0.0);
        for q in [a, b, c] {
            let d = dist(p, q);
            if d < 1e-15 {
                return q;
            }
            wx += q[0] / d;
            wy += q[1] / d;
            ws += 1.0 / d;
        }
        let next = [wx / ws, wy / ws];
        let moved = dist(next, p);
        p = next;
        if moved < 1e-15 {
            break;
        }
    }
    p
}

pub fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Star structure on a regular pentagon: the centre `O` and, for every side
/// `(P_k, P_{k+1})`, the point `Q_k` on its apothem where `P_k`, `P_{k+1}`
/// and `O` meet at 120°.
pub struct PentagonStar {
    pub center: [f64; 2],
    pub side_points: Vec<[f64; 2]>,
}

pub fn pentagon_star(vertices: &[[f64; 2]]) -> PentagonStar {
    let n = vertices.len();
    let center = [
        vertices.iter().map(|p| p[0]).sum::<f64>() / n as f64,
        vertices.iter().map(|p| p[1]).sum::<f64>() / n as f64,
    ];
    let side_points = (0..n)
        .map(|k| {
            let (a, b) = (vertices[k], vertices[(k + 1) % n]);
            let m = [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0];
            let l = dist(a, b);
            let to_c = [center[0] - m[0], center[1] - m[1]];
            let d = to_c[0].hypot(to_c[1]);
            let off = l / (2.0 * 3f64.sqrt());
            [m[0] + off * to_c[0] / d, m[1] + off * to_c[1] / d]
        })
        .collect();
    PentagonStar { center, side_points }
}

/// Steiner points of the full Steiner tree of a regular pentagon with
/// topology `{P1,P2} – S_a`, `{P3,P4} – S_b`, `{S_a, S_b, P5} – S_c`.
pub fn pentagon_steiner_points(v: &[[f64; 2]]) -> [[f64; 2]; 3] {
    let mut s = [v[0], v[2], v[4]];
    for _ in 0..20_000 {
        let prev = s;
        s[0] = fermat_point(v[0], v[1], s[2]);
        s[1] = fermat_point(v[2], v[3], s[2]);
        s[2] = fermat_point(s[0], s[1], v[4]);
        if (0..3).all(|k| dist(s[k], prev[k]) < 1e-15) {
            break;
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pentagon_factors_match_closed_forms() {
        assert!((pentagon_steiner_factor() - 3.8911).abs() < 1e-4);
        assert!((pentagon_star_factor() - 3.8855).abs() < 1e-4);
    }

    #[test]
    fn pentagon_tree_and_star_lengths() {
        let side = 0.5;
        let v = regular_polygon(5, side, [0.5, 0.5]);
        for k in 0..5 {
            assert!((dist(v[k], v[(k + 1) % 5]) - side).abs() < 1e-12);
        }
        let s = pentagon_steiner_points(&v);
        let tree = dist(v[0], s[0]) + dist(v[1], s[0]) + dist(v[2], s[1]) + dist(v[3], s[1])
            + dist(s[0], s[2])
            + dist(s[1], s[2])
            + dist(v[4], s[2]);
        assert!((tree - side * pentagon_steiner_factor()).abs() < 1e-9, "{tree}");
        let star = pentagon_star(&v);
        let support: f64 = (0..5)
            .map(|k| {
                let q = star.side_points[k];
                dist(v[k], q) + dist(v[(k + 1) % 5], q) + dist(q, star.center)
            })
            .sum();
        assert!((support / 2.0 - side * pentagon_star_factor()).abs() < 1e-12);
    }

    #[test]
    fn fermat_point_of_equilateral_triangle_is_centroid() {
        let v = regular_polygon(3, 0.6, [0.5, 0.5]);
        let p = fermat_point(v[0], v[1], v[2]);
        assert!(dist(p, [0.5, 0.5]) < 1e-12);
    }
}
