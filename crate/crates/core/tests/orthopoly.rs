mod common;

use common::c;
use hplab_core::linalg::{determinant_dd, from_dd, to_dd};
use hplab_core::orthopoly::*;
use hplab_core::quadrature::hp_disc_rule;
use hplab_core::weights::{gram_matrix, GramMatrix, MomentOracle};
use hplab_core::{Complex64, KernelSpec, RngStream};
use proptest::prelude::*;
use rand::Rng;

const DELTAS: [(f64, f64); 5] = [(0.0, 0.0), (1.0, 0.0), (1.0, 2.0), (-0.3, 0.0), (-0.3, 0.7)];

fn random_points(k: usize, radius: f64, rng: &mut RngStream) -> Vec<Complex64> {
    (0..k)
        .map(|_| Complex64::from_polar(radius * rng.gen::<f64>().sqrt(), std::f64::consts::TAU * rng.gen::<f64>()))
        .collect()
}

#[test]
fn n2_delta1_polynomials_have_unit_norm_by_quadrature() {
    let b = orthonormal_basis(2, 1, c(1.0, 0.0)).unwrap();
    let rule = hp_disc_rule(1, c(1.0, 0.0), 128, 256);
    let mut gram = [[Complex64::new(0.0, 0.0); 2]; 2];
    for &(z, w) in &rule {
        let p = b.eval_all(z);
        for i in 0..2 {
            for j in 0..2 {
                gram[i][j] += p[i] * p[j].conj() * w;
            }
        }
    }
    for i in 0..2 {
        for j in 0..2 {
            let target = if i == j { 1.0 } else { 0.0 };
            assert!((gram[i][j] - c(target, 0.0)).norm() < 1e-10);
        }
    }
}

#[test]
fn delta_zero_matches_closed_form() {
    for m in 1..=4 {
        let built = orthonormal_basis(48, m, c(0.0, 0.0)).unwrap();
        let closed = closed_form_basis_delta0(48, m).unwrap();
        let diff = (&built.coeffs - &closed.coeffs).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(diff <= 1e-10, "m={m}: {diff}");
    }
}

#[test]
fn residual_against_quadrature_moments() {
    for &(re, im) in &DELTAS {
        let delta = c(re, im);
        for m in 1..=3 {
            let n = 8;
            let basis = orthonormal_basis(n, m, delta).unwrap();
            let entries = MomentOracle::new(m, delta, 128, 256).unwrap().table(n);
            let g = GramMatrix::from_entries(m, delta, entries).unwrap();
            let r = basis.orthonormality_residual(&g);
            assert!(r <= 1e-7, "m={m} delta={delta}: {r}");
        }
    }
}

#[test]
fn vandermonde_identity() {
    let mut rng = RngStream::new(31, 0);
    for &(re, im) in &DELTAS {
        for m in 1..=3 {
            for n in 1..=10 {
                let basis = orthonormal_basis(n, m, c(re, im)).unwrap();
                let lc = leading_coefficients(&basis);
                let x = random_points(n, 0.95, &mut rng);
                // K_n(x_i, x_j) = sum_k P_k(x_i) conj(P_k(x_j)), summed and
                // factorised in double-double: in double the rounding of K
                // is amplified by cond(K), the square of cond([P_k(x_i)])
                let phi: Vec<Vec<_>> = x.iter().map(|&z| basis.eval_all(z).into_iter().map(to_dd).collect()).collect();
                let k = (0..n)
                    .map(|i| {
                        (0..n)
                            .map(|j| {
                                let mut s = to_dd(c(0.0, 0.0));
                                for l in 0..n {
                                    s = s + phi[i][l] * phi[j][l].conj();
                                }
                                s
                            })
                            .collect()
                    })
                    .collect();
                let det = from_dd(determinant_dd(k));
                let mut expect: f64 = lc.iter().map(|l| l * l).product();
                for i in 0..n {
                    for j in i + 1..n {
                        expect *= (x[i] - x[j]).norm_sqr();
                    }
                }
                let rel = (det - c(expect, 0.0)).norm() / expect;
                assert!(rel <= 1e-8, "n={n} m={m} delta={re}+{im}i: {rel}");
            }
        }
    }
}

#[test]
fn reproducing_property() {
    let pts = [c(0.0, 0.0), c(0.5, 0.3), c(-0.8, 0.0), c(0.1, -0.7), c(0.56, 0.56)];
    for &(re, im) in &DELTAS {
        let delta = c(re, im);
        for m in 1..=3 {
            let n = 6;
            let spec = KernelSpec::finite(orthonormal_basis(n, m, delta).unwrap());
            let rule = hp_disc_rule(m, delta, 96, 192);
            for &z in &pts {
                for j in 0..n {
                    let v: Complex64 = rule.iter().map(|&(w, wt)| spec.eval(z, w) * w.powu(j as u32) * wt).sum();
                    let f = z.powu(j as u32);
                    assert!((v - f).norm() < 1e-7, "m={m} delta={delta} z={z} j={j}: {}", (v - f).norm());
                }
            }
        }
    }
}

#[test]
fn gram_conditioning_at_the_cap() {
    for &(re, im) in &DELTAS {
        for m in 1..=4 {
            let g = gram_matrix(48, m, c(re, im)).unwrap();
            let basis = basis_from_gram(&g).unwrap();
            assert!(basis.orthonormality_residual(&g) <= 1e-9);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn bases_are_orthonormal_with_positive_leading_coefficients(
        n in 1usize..14,
        m in 1usize..5,
        re in -0.45f64..2.0,
        im in -2.0f64..2.0,
    ) {
        let g = gram_matrix(n, m, c(re, im)).unwrap();
        let basis = basis_from_gram(&g).unwrap();
        prop_assert!(basis.orthonormality_residual(&g) <= 1e-9);
        for k in 0..n {
            prop_assert!(basis.coeffs[(k, k)].re > 0.0);
            prop_assert_eq!(basis.coeffs[(k, k)].im, 0.0);
            for i in k + 1..n {
                prop_assert_eq!(basis.coeffs[(i, k)], c(0.0, 0.0));
            }
        }
    }

    #[test]
    fn kernels_are_hermitian(
        zr in 0.0f64..0.99, zt in -3.2f64..3.2, wr in 0.0f64..0.99, wt in -3.2f64..3.2,
        m in 1usize..4, re in -0.45f64..2.0, im in -2.0f64..2.0,
    ) {
        let z = Complex64::from_polar(zr, zt);
        let w = Complex64::from_polar(wr, wt);
        let delta = c(re, im);
        let specs = [
            KernelSpec::finite(orthonormal_basis(5, m, delta).unwrap()),
            KernelSpec::LimitHp { m, delta },
            KernelSpec::Bergman { m },
        ];
        for spec in &specs {
            let a = kernel_eval(spec, z, w).unwrap();
            let b = kernel_eval(spec, w, z).unwrap().conj();
            prop_assert!((a - b).norm() <= 1e-12 * a.norm().max(1.0));
        }
    }
}
