use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use entroqp::certify::{certify, is_local_minimizer, Verdict};
use entroqp::descent::{default_delta, descend};
use entroqp::instances;
use entroqp::qp::{cell_membership, g_eps, grad_g_eps, CELL_TOL};
use entroqp::rates::{global_solve, SolverConfig};

fn sigmoid(s: f64) -> f64 {
    if s >= 0.0 {
        1.0 / (1.0 + (-s).exp())
    } else {
        let e = s.exp();
        e / (1.0 + e)
    }
}

fn xlogx(x: f64) -> f64 {
    if x > 0.0 {
        x * x.ln()
    } else {
        0.0
    }
}

/// Entropic box QP `-1/2 (z'x)^2 + c'x - eps H(x, 1 - x)` on `[0,1]^d`.
/// Stationary points satisfy `x_i = sigmoid((z_i t - c_i)/eps)` with
/// `t = z'x`, so every one is a root of a scalar equation in `t`.
fn box_oracle(z: &[f64], c: &[f64], eps: f64) -> (f64, f64) {
    let x_of = |t: f64| -> Vec<f64> { z.iter().zip(c).map(|(zi, ci)| sigmoid((zi * t - ci) / eps)).collect() };
    let phi = |t: f64| -> f64 { z.iter().zip(x_of(t)).map(|(zi, xi)| zi * xi).sum::<f64>() - t };
    let f = |x: &[f64]| -> f64 {
        let t: f64 = z.iter().zip(x).map(|(a, b)| a * b).sum();
        let lin: f64 = c.iter().zip(x).map(|(a, b)| a * b).sum();
        let ent: f64 = x.iter().map(|&v| xlogx(v) + xlogx(1.0 - v)).sum();
        -0.5 * t * t + lin + eps * ent
    };
    let span: f64 = z.iter().map(|v| v.abs()).sum::<f64>() + 1.0;
    let steps = 20000;
    let mut best = (f64::INFINITY, 0.0);
    let mut prev = (-span, phi(-span));
    for k in 1..=steps {
        let t = -span + 2.0 * span * k as f64 / steps as f64;
        let cur = (t, phi(t));
        if prev.1 == 0.0 || prev.1.signum() != cur.1.signum() {
            let (mut lo, mut hi) = (prev.0, cur.0);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if phi(mid).signum() == phi(lo).signum() {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let root = 0.5 * (lo + hi);
            let v = f(&x_of(root));
            if v < best.0 {
                best = (v, root);
            }
        }
        prev = cur;
    }
    best
}

#[test]
fn min_g_eps_matches_direct_entropic_qp() {
    let cases = [
        (instances::fig1(), vec![-0.5, -1.0, 1.0], vec![-1.0, 0.5, -1.0]),
        (instances::fig3(), vec![0.5, -1.5, -0.5, 0.5], vec![-1.0, 0.5, -1.0, 0.5]),
    ];
    for (qp, z, c) in &cases {
        let vs = qp.vertices().unwrap();
        for eps in [0.5, 0.2, 0.1, 0.05] {
            let (direct, t_star) = box_oracle(z, c, eps);
            let r = global_solve(qp, vs, eps, &SolverConfig::default()).unwrap();
            assert!((r.g_value - direct).abs() <= 1e-6, "eps {eps}: {} vs {direct}", r.g_value);
            // the image of the direct solution is critical for g_eps
            let g = grad_g_eps(qp, eps, &DVector::from_element(1, t_star)).unwrap();
            assert!(g.norm() <= 1e-6, "eps {eps}: |grad| {}", g.norm());
        }
    }
}

#[test]
fn gradient_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let h = 1e-5;
    for qp in [instances::fig1(), instances::fig3()] {
        for _ in 0..10 {
            let eps = rng.random_range(1e-2..1.0);
            let u = DVector::from_element(1, rng.random_range(-2.0..2.0));
            let g = grad_g_eps(&qp, eps, &u).unwrap()[0];
            let up = g_eps(&qp, eps, &u.add_scalar(h)).unwrap();
            let dn = g_eps(&qp, eps, &u.add_scalar(-h)).unwrap();
            let fd = (up - dn) / (2.0 * h);
            assert!((g - fd).abs() <= 1e-6 * (1.0 + g.abs()), "eps {eps}, u {}: {g} vs {fd}", u[0]);
        }
    }
}

/// Example-1 encoding as a 1-D problem over `x in [1, 2]` with slacks
/// `2 - x` and `x - 1`; the optimal `x` by bisection on the derivative.
fn example1_x(u: f64, eps: f64) -> f64 {
    let d = |x: f64| (1.0 - u) + eps * (x.ln() - (2.0 - x).ln() + (x - 1.0).ln() + 1.0);
    let (mut lo, mut hi) = (1.0 + f64::EPSILON, 2.0 - f64::EPSILON);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if d(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn example1_gradient_from_one_dimensional_oracle() {
    let qp = instances::example1();
    for (u, eps) in [(1.05, 0.1), (0.3, 0.2), (1.7, 0.05), (2.5, 0.5)] {
        let g = grad_g_eps(&qp, eps, &DVector::from_element(1, u)).unwrap()[0];
        let want = u - example1_x(u, eps);
        assert!((g - want).abs() <= 1e-8, "u {u}, eps {eps}: {g} vs {want}");
    }
}

#[test]
fn certified_local_minimizers_are_cell_interior_images() {
    let qp = instances::fig3();
    let vs = qp.vertices().unwrap();
    let delta = default_delta(&qp).unwrap();
    let mut found = 0;
    for k in 0..=16 {
        let u0 = DVector::from_element(1, -2.0 + 0.25 * k as f64);
        let d = descend(&qp, 0.01, &u0, delta, 5000).unwrap();
        let out = certify(&qp, &d.u, 1.0, k, 1e-9).unwrap();
        if out.verdict == Verdict::LocalMinimizer {
            found += 1;
            assert_eq!(cell_membership(&qp, vs, &out.u_bar, CELL_TOL).len(), 1);
            assert!(is_local_minimizer(&qp, vs, &out.u_bar));
            let hit = vs.iter().any(|v| ((qp.b() * v) - &out.u_bar).norm() < 1e-12);
            assert!(hit, "u_bar {} is not an image of a vertex", out.u_bar[0]);
        }
    }
    assert!(found > 0);
}
