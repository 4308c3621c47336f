//! The reference computations checked against closed forms, and the exact
//! Steiner DP checked against the subset brute force.

mod common;

use common::*;
use rand::Rng;
use steinrelax::graph::exact_steiner_dp;

#[test]
fn dual_ball_oracle_closed_forms() {
    // inside: identity
    assert_eq!(dual_ball_oracle(&[0.3, -0.4, 0.2]), vec![0.3, -0.4, 0.2]);
    // one positive coordinate beyond the face is clipped to it
    let w = dual_ball_oracle(&[2.0, -0.5]);
    assert!(diff_norm(&w, &[1.0, -0.5]) < 1e-12);
    // equal shift on the positive part
    let w = dual_ball_oracle(&[1.0, 1.0, -3.0]);
    assert!(diff_norm(&w, &[0.5, 0.5, -1.0]) < 1e-12);
    // a small coordinate drops to zero
    let w = dual_ball_oracle(&[2.0, 0.1]);
    assert!(diff_norm(&w, &[1.0, 0.0]) < 1e-12);
}

#[test]
fn kalpha_oracle_single_column_is_the_disc() {
    let p = kalpha_oracle(&[3.0, 4.0], 2, 0.3);
    assert!(diff_norm(&p.point, &[0.6, 0.8]) < 1e-7, "{:?}", p.point);
    assert!(p.radius < 1e-6);
}

#[test]
fn kalpha_oracle_alpha_one_is_per_column() {
    // at α = 1 the singleton discs imply every other constraint
    let q = [2.0, 0.0, 0.0, -3.0, 0.3, 0.4];
    let p = kalpha_oracle(&q, 2, 1.0);
    let want = [1.0, 0.0, 0.0, -1.0, 0.3, 0.4];
    assert!(diff_norm(&p.point, &want) < 1e-6, "{:?}", p.point);
}

#[test]
fn kalpha_oracle_is_feasible_and_certified() {
    let mut r = rng(7);
    for _ in 0..10 {
        let n = r.gen_range(2..=4);
        let alpha = r.gen_range(0.0..1.0);
        let q: Vec<f64> = (0..2 * n).map(|_| r.gen_range(-2.0..2.0)).collect();
        let p = kalpha_oracle(&q, 2, alpha);
        assert!(kalpha_violation(&p.point, 2, alpha) <= 1e-12);
        assert!(p.radius < 1e-6, "certified radius {}", p.radius);
    }
}

#[test]
fn dp_matches_subset_brute_force() {
    for seed in 0..30u64 {
        let n = 8 + (seed as usize % 7);
        let nt = 2 + (seed as usize % 4);
        let g = random_knn(seed, n, nt, 3);
        let dp = exact_steiner_dp(&g).unwrap();
        let brute = steiner_by_subsets(&g);
        assert!((dp.length - brute).abs() < 1e-12, "seed {seed}: dp {} brute {brute}", dp.length);
    }
}
