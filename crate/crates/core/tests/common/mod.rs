//! Independent oracles and instance grids shared by the integration tests.
#![allow(dead_code)]

use decon_core::graph::Graph;
use decon_core::linalg::{Stacked, SymMatrix};
use decon_core::mixing::{build_derived, metropolis, relax, theta_interior, DerivedMatrices, MixingPair};
use decon_core::problem::{Objective, SensingProblem};

/// Roots of `det(A − λI)` for a symmetric 3×3 `A`, ascending. The
/// determinant is expanded directly from the shifted entries and bisected on
/// the brackets given by Cauchy interlacing with the leading 2×2 block.
pub fn charpoly_eigs_3x3(a: &SymMatrix) -> [f64; 3] {
    assert_eq!(a.dim(), 3);
    let g = |i, j| a.get(i, j);
    let p = |l: f64| {
        let (a00, a11, a22) = (g(0, 0) - l, g(1, 1) - l, g(2, 2) - l);
        let (a01, a02, a12) = (g(0, 1), g(0, 2), g(1, 2));
        a00 * (a11 * a22 - a12 * a12) - a01 * (a01 * a22 - a12 * a02) + a02 * (a01 * a12 - a11 * a02)
    };
    let mut r = 0.0f64;
    for i in 0..3 {
        r = r.max(g(i, i).abs() + (0..3).filter(|&j| j != i).map(|j| g(i, j).abs()).sum::<f64>());
    }
    let (lo, hi) = (-r - 1.0, r + 1.0);
    let mid = 0.5 * (g(0, 0) + g(1, 1));
    let rad = (0.25 * (g(0, 0) - g(1, 1)).powi(2) + g(0, 1) * g(0, 1)).sqrt();
    let (m1, m2) = (mid - rad, mid + rad);
    // p = −(λ−λ₁)(λ−λ₂)(λ−λ₃) is positive left of λ₁, negative on (λ₁, λ₂),
    // and so on; bisect for the point where p leaves the bracket's left sign.
    let root = |mut a: f64, mut b: f64, left_positive: bool| -> f64 {
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if m == a || m == b {
                break;
            }
            let v = p(m);
            if (left_positive && v > 0.0) || (!left_positive && v < 0.0) {
                a = m;
            } else {
                b = m;
            }
        }
        0.5 * (a + b)
    };
    let mut out = [root(lo, m1, true), root(m1, m2, false), root(m2, hi, true)];
    // A double root is only located to ~sqrt(eps) by p; it is a simple root
    // of p' = −(sum of the principal 2×2 minors of A − λI).
    let dp = |l: f64| {
        let (a00, a11, a22) = (g(0, 0) - l, g(1, 1) - l, g(2, 2) - l);
        -(a00 * a11 - g(0, 1) * g(0, 1) + a00 * a22 - g(0, 2) * g(0, 2) + a11 * a22 - g(1, 2) * g(1, 2))
    };
    for i in 0..2 {
        let (a, b) = (out[i], out[i + 1]);
        if b - a < 1e-8 * (1.0 + r) {
            let (mut x0, mut x1) = (a - 1e-8, b + 1e-8);
            let s0 = dp(x0).signum();
            if s0 != dp(x1).signum() {
                for _ in 0..200 {
                    let m = 0.5 * (x0 + x1);
                    if m == x0 || m == x1 {
                        break;
                    }
                    if dp(m).signum() == s0 {
                        x0 = m;
                    } else {
                        x1 = m;
                    }
                }
                let c = 0.5 * (x0 + x1);
                out[i] = c;
                out[i + 1] = c;
            }
        }
    }
    out
}

/// Fixed set of symmetric 3×3 matrices drawn from the mixing constructions
/// plus a few generic ones.
pub fn fixtures_3x3() -> Vec<(String, SymMatrix)> {
    let mut out = Vec::new();
    for (name, g) in [("line3", Graph::line(3).unwrap()), ("complete3", Graph::complete(3).unwrap())] {
        let w = metropolis(&g);
        let wr = relax(&w, 1.0 / 3.0).unwrap();
        out.push((format!("{name} W"), w.clone()));
        out.push((format!("{name} relaxed W"), wr.clone()));
        out.push((format!("{name} (I+W)/2"), w.affine(0.5, 0.5)));
        out.push((format!("{name} I-W"), w.affine(-1.0, 1.0)));
        let mp = MixingPair::standard(w, &g).unwrap().with_theta(0.8).unwrap();
        let d = build_derived(&mp).unwrap();
        out.push((format!("{name} Wbar"), d.wbar.clone()));
        out.push((format!("{name} Wbar^-1"), d.wbar_inv.clone()));
        out.push((format!("{name} Mtilde"), d.mtilde.clone()));
    }
    out.push(("diag".into(), SymMatrix::diag(&[3.0, -1.0, 0.5])));
    out.push((
        "dense".into(),
        SymMatrix::from_rows(&[[4.0, 1.0, -2.0], [1.0, 2.0, 0.5], [-2.0, 0.5, 3.0]]).unwrap(),
    ));
    out.push((
        "near-degenerate".into(),
        SymMatrix::from_rows(&[[1.0, 1e-7, 0.0], [1e-7, 1.0, 1e-7], [0.0, 1e-7, 1.0]]).unwrap(),
    ));
    out.push((
        "indefinite".into(),
        SymMatrix::from_rows(&[[0.0, 2.0, 1.0], [2.0, 0.0, -1.0], [1.0, -1.0, 0.0]]).unwrap(),
    ));
    out
}

/// Largest entrywise gap between `∇f` and central differences of `f`,
/// relative to `1 + |∂f|`.
pub fn finite_difference_gap<O: Objective>(obj: &O, x: &Stacked, h: f64) -> f64 {
    let g = obj.grad(x).unwrap();
    let mut worst = 0.0f64;
    for i in 0..x.rows() {
        for j in 0..x.cols() {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp.set(i, j, x.get(i, j) + h);
            xm.set(i, j, x.get(i, j) - h);
            let fd = (obj.value(&xp).unwrap() - obj.value(&xm).unwrap()) / (2.0 * h);
            worst = worst.max((fd - g.get(i, j)).abs() / (1.0 + fd.abs()));
        }
    }
    worst
}

/// One point of the seed × `m_i` × mixing grid.
pub struct GridInstance {
    pub label: String,
    pub graph: Graph,
    pub mixing: MixingPair,
    pub derived: DerivedMatrices,
    pub problem: SensingProblem,
}

pub const GRID_N: usize = 10;
pub const GRID_P: usize = 5;
pub const GRID_SEEDS: u64 = 10;

/// 10 seeds × `m_i ∈ {1, 10}` × {Metropolis, relaxed with c = 1/3}.
pub fn grid() -> Vec<GridInstance> {
    let mut out = Vec::new();
    for seed in 0..GRID_SEEDS {
        let graph = Graph::random_connected(GRID_N, 0.5, 1000 + seed).unwrap();
        for m_i in [1usize, 10] {
            let problem = SensingProblem::generate(GRID_N, GRID_P, m_i, 0.1, seed).unwrap();
            for relaxed in [false, true] {
                let mut w = metropolis(&graph);
                if relaxed {
                    w = relax(&w, 1.0 / 3.0).unwrap();
                }
                let mp = MixingPair::standard(w, &graph).unwrap();
                let (mixing, derived) = match build_derived(&mp) {
                    Ok(d) => (mp, d),
                    Err(_) => {
                        let t = theta_interior(mp.spectral().lambda_min_wt).unwrap();
                        let mp = mp.with_theta(t).unwrap();
                        let d = build_derived(&mp).unwrap();
                        (mp, d)
                    }
                };
                out.push(GridInstance {
                    label: format!("seed={seed} m_i={m_i} {}", if relaxed { "relaxed" } else { "metropolis" }),
                    graph: graph.clone(),
                    mixing,
                    derived,
                    problem: problem.clone(),
                });
            }
        }
    }
    out
}
