use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use entroqp::certify::{certify, sample_sphere, Reason, Verdict};
use entroqp::gw::{self, DiscreteMmSpace, GwKind};
use entroqp::instances;
use entroqp::qp::{cell_membership, CELL_TOL};
use entroqp::Error;

#[test]
fn probes_at_a_boundary_land_in_distinct_cells() {
    let qp = instances::example1();
    let vs = qp.vertices().unwrap();
    let u_bar = DVector::from_element(1, 1.0);
    for seed in 0..50 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = sample_sphere(1, &mut rng);
        for eta in [1.0, 0.5, 0.25, 1e-3] {
            let plus = cell_membership(&qp, vs, &(&u_bar + eta * &w), CELL_TOL);
            let minus = cell_membership(&qp, vs, &(&u_bar - eta * &w), CELL_TOL);
            assert!(plus.iter().all(|i| !minus.contains(i)), "seed {seed}, eta {eta}");
        }
    }
}

#[test]
fn saddle_reported_as_boundary_point() {
    let qp = instances::example1();
    let out = certify(&qp, &DVector::from_element(1, 0.9), 1.0, 1, 1e-9).unwrap();
    // u = 0.9 selects x = 1, whose image is the cell boundary
    assert_eq!(out.u_bar[0], 1.0);
    assert_eq!(out.verdict, Verdict::NotLocalMinimizer);
    assert_eq!(out.reason, Reason::BoundaryPoint);
}

#[test]
fn certificate_is_reproducible() {
    let qp = instances::fig3();
    let u = DVector::from_element(1, 0.3);
    let a = certify(&qp, &u, 1.0, 42, 1e-9).unwrap();
    let b = certify(&qp, &u, 1.0, 42, 1e-9).unwrap();
    assert_eq!(a, b);
}

fn psd_kernel(f: &[f64], n: usize) -> DMatrix<f64> {
    let f = DMatrix::from_row_slice(n, 2, &f[..2 * n]);
    &f * f.transpose()
}

fn probability(w: &[f64]) -> Vec<f64> {
    let s: f64 = w.iter().sum();
    let mut p: Vec<f64> = w.iter().map(|v| v / s).collect();
    let head: f64 = p[..p.len() - 1].iter().sum();
    *p.last_mut().unwrap() = 1.0 - head;
    p
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn kernel_decomposition_matches_double_sum(
        n0 in 2usize..=3,
        n1 in 2usize..=3,
        f0 in prop::collection::vec(-1.0f64..1.0, 6),
        f1 in prop::collection::vec(-1.0f64..1.0, 6),
        w0 in prop::collection::vec(0.2f64..1.0, 3),
        w1 in prop::collection::vec(0.2f64..1.0, 3),
        q in 1u32..=2,
        seed in 0u64..1000,
    ) {
        let k0 = psd_kernel(&f0, n0);
        let k1 = psd_kernel(&f1, n1);
        let s0 = DiscreteMmSpace::new(k0.clone(), probability(&w0[..n0])).unwrap();
        let s1 = DiscreteMmSpace::new(k1.clone(), probability(&w1[..n1])).unwrap();
        let p = gw::assemble(&s0, &s1, q as f64).unwrap();
        prop_assert_eq!(p.kind, GwKind::Kernel);
        for x in gw::random_couplings(s0.weights(), s1.weights(), 5, seed).unwrap() {
            let mut direct = 0.0;
            for m in 0..n0 {
                for l in 0..n1 {
                    for mp in 0..n0 {
                        for lp in 0..n1 {
                            let d = k0[(m, mp)].powi(q as i32) - k1[(l, lp)].powi(q as i32);
                            direct += d * d * x[m * n1 + l] * x[mp * n1 + lp];
                        }
                    }
                }
            }
            prop_assert!((direct - p.quadratic_cost(&x)).abs() <= 1e-9);
            prop_assert!((direct - p.direct_cost(&x)).abs() <= 1e-12);
        }
    }

    #[test]
    fn euclidean_form_matches_double_sum(
        a in prop::collection::vec(-1.0f64..1.0, 6),
        b in prop::collection::vec(-1.0f64..1.0, 4),
        seed in 0u64..1000,
    ) {
        let center = |v: &[f64], d: usize, n: usize| -> Vec<DVector<f64>> {
            let pts: Vec<DVector<f64>> = (0..n).map(|i| DVector::from_row_slice(&v[i * d..(i + 1) * d])).collect();
            let mean = pts.iter().fold(DVector::zeros(d), |s, p| s + p) / n as f64;
            pts.into_iter().map(|p| p - &mean).collect()
        };
        // three points in the plane against two points on the line
        let p0 = center(&a, 2, 3);
        let p1 = center(&b[..2], 1, 2);
        let w0 = [1.0 / 3.0; 3];
        let w1 = [0.5, 0.5];
        let p = gw::euclidean_quadratic_assemble(&p0, &p1, &w0, &w1).unwrap();
        for x in gw::random_couplings(&w0, &w1, 5, seed).unwrap() {
            let mut direct = 0.0;
            for m in 0..3 {
                for l in 0..2 {
                    for mp in 0..3 {
                        for lp in 0..2 {
                            let d = (&p0[m] - &p0[mp]).norm_squared() - (&p1[l] - &p1[lp]).norm_squared();
                            direct += d * d * x[m * 2 + l] * x[mp * 2 + lp];
                        }
                    }
                }
            }
            prop_assert!((direct - p.quadratic_cost(&x)).abs() <= 1e-10 * (1.0 + direct));
        }
    }
}

#[test]
fn non_integer_q_on_gaussian_kernels() {
    let pts = [DVector::from_row_slice(&[0.0]), DVector::from_row_slice(&[1.0]), DVector::from_row_slice(&[3.0])];
    let s = DiscreteMmSpace::new(gw::gaussian_kernel(&pts, 1.0), vec![0.25, 0.25, 0.5]).unwrap();
    // the 0.5 power of a Gaussian kernel is a wider Gaussian kernel
    let p = gw::assemble(&s, &s, 0.5).unwrap();
    let wide = DiscreteMmSpace::new(gw::gaussian_kernel(&pts, 2.0), vec![0.25, 0.25, 0.5]).unwrap();
    let q = gw::assemble(&wide, &wide, 1.0).unwrap();
    assert!((p.constant - q.constant).abs() < 1e-12);
}

#[test]
fn indefinite_kernel_rejected() {
    let k = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
    let s = DiscreteMmSpace::new(k, vec![0.5, 0.5]).unwrap();
    assert!(matches!(gw::assemble(&s, &s, 1.0), Err(Error::KernelSignMismatch(_))));
}

#[test]
fn bad_weights_rejected() {
    let k = DMatrix::identity(2, 2);
    assert!(matches!(DiscreteMmSpace::new(k.clone(), vec![0.5, 0.6]), Err(Error::NonProbability(_))));
    assert!(matches!(DiscreteMmSpace::new(k, vec![1.0, 0.0]), Err(Error::NonProbability(_))));
}

#[test]
fn alignment_recovers_the_identity_permutation() {
    let pts = [DVector::from_row_slice(&[0.0, 0.0]), DVector::from_row_slice(&[1.0, 0.0]), DVector::from_row_slice(&[0.0, 2.0])];
    let s = DiscreteMmSpace::new(gw::gaussian_kernel(&pts, 4.0), vec![1.0 / 3.0; 3]).unwrap();
    let p = gw::assemble(&s, &s, 1.0).unwrap();
    let a = gw::gw_align(&p, 1e-3, None, 9).unwrap();
    assert_eq!(a.certificate.verdict, Verdict::LocalMinimizer);
    for m in 0..3 {
        assert!((a.coupling.matrix[(m, m)] - 1.0 / 3.0).abs() < 1e-9);
    }
    assert!(a.coupling.marginal_residual(&[1.0 / 3.0; 3], &[1.0 / 3.0; 3]) < 1e-10);
}
