//! Orthonormal polynomials of `mu^{(m,delta)}` and the kernels built from
//! them.
//!
//! Normalisation convention: bases here are orthonormal for the
//! *unnormalised* measure `mu^{(m,delta)}`. At `delta = 0` this measure is
//! `(pi/m) mu^{[m]}`, so the classical weighted-Bergman orthonormal
//! polynomials `sqrt((m+1)...(m+k)/k!) z^k` (orthonormal for the probability
//! measure `mu^{[m]}`) are related to ours by the factor
//! [`measure_conversion`]`(m) = sqrt(m/pi)`.

use std::f64::consts::PI;
use std::io::{self, Write};

use nalgebra::DMatrix;
use num_complex::Complex64;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::format_f64;
use crate::params::HPParams;
use crate::weights::{gram_matrix, hp_factor, GramMatrix, WeightSpec};

/// Residual gate on `||C^* A C - I||_max`.
pub const ORTHONORMALITY_TOL: f64 = 1e-9;

/// `sqrt(m/pi)`: multiplies a `mu^{[m]}`-orthonormal polynomial into a
/// `mu^{(m,0)}`-orthonormal one.
pub fn measure_conversion(m: usize) -> f64 {
    (m as f64 / PI).sqrt()
}

/// Coefficient `sqrt((m+1)(m+2)...(m+k)/k!)` of the weighted-Bergman
/// orthonormal polynomial of degree `k`.
pub fn bergman_orthonormal_coefficient(k: usize, m: usize) -> f64 {
    let (k, m) = (k as f64, m as f64);
    (0.5 * (ln_gamma(m + k + 1.0) - ln_gamma(m + 1.0) - ln_gamma(k + 1.0))).exp()
}

/// `P_0, ..., P_{n-1}` as columns of an upper-triangular coefficient matrix:
/// `P_k(z) = sum_i coeffs[(i, k)] z^i`, leading coefficients real positive.
#[derive(Clone, Debug)]
pub struct PolynomialBasis {
    pub params: HPParams,
    pub coeffs: DMatrix<Complex64>,
}

impl PolynomialBasis {
    pub fn n(&self) -> usize {
        self.coeffs.ncols()
    }

    pub fn m(&self) -> usize {
        self.params.m
    }

    pub fn delta(&self) -> Complex64 {
        self.params.delta
    }

    /// `P_k(z)` by Horner's rule.
    pub fn eval(&self, k: usize, z: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for i in (0..=k).rev() {
            acc = acc * z + self.coeffs[(i, k)];
        }
        acc
    }

    /// `(P_0(z), ..., P_{n-1}(z))`.
    pub fn eval_all(&self, z: Complex64) -> Vec<Complex64> {
        (0..self.n()).map(|k| self.eval(k, z)).collect()
    }

    pub fn eval_into(&self, z: Complex64, out: &mut [Complex64]) {
        for (k, o) in out.iter_mut().enumerate() {
            *o = self.eval(k, z);
        }
    }

    /// Reference density `w^{(m,delta)}` of this basis.
    pub fn weight(&self) -> WeightSpec {
        WeightSpec::hp(self.params.m, self.params.delta)
    }

    /// `max |(C^* A C - I)_{kl}|` with `A` the inner-product matrix of `gram`.
    pub fn orthonormality_residual(&self, gram: &GramMatrix) -> f64 {
        let n = self.n();
        let a = gram.inner_products();
        let a = a.view((0, 0), (n, n));
        let r = self.coeffs.adjoint() * a * &self.coeffs;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((r[(i, j)] - target).norm());
            }
        }
        worst
    }

    /// CSV export: a parameter header line, then one row per monomial power
    /// with the real and imaginary parts of each `P_k` in column pairs.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "n,m,delta_re,delta_im")?;
        writeln!(
            w,
            "{},{},{},{}",
            self.n(),
            self.m(),
            format_f64(self.delta().re),
            format_f64(self.delta().im)
        )?;
        let mut header = String::from("power");
        for k in 0..self.n() {
            header.push_str(&format!(",P{k}_re,P{k}_im"));
        }
        writeln!(w, "{header}")?;
        for i in 0..self.n() {
            let mut row = i.to_string();
            for k in 0..self.n() {
                let c = self.coeffs[(i, k)];
                row.push(',');
                row.push_str(&format_f64(c.re));
                row.push(',');
                row.push_str(&format_f64(c.im));
            }
            writeln!(w, "{row}")?;
        }
        Ok(())
    }
}

/// Gram-Schmidt on `1, z, ..., z^{n-1}` in `L^2(mu^{(m,delta)})`, realised as
/// `C = L^{-*}` for the Cholesky factor of the moment inner-product matrix.
pub fn orthonormal_basis(n: usize, m: usize, delta: Complex64) -> Result<PolynomialBasis> {
    let gram = gram_matrix(n, m, delta)?;
    basis_from_gram(&gram)
}

/// Orthonormal basis from precomputed moments, with the residual gate.
pub fn basis_from_gram(gram: &GramMatrix) -> Result<PolynomialBasis> {
    let params = HPParams::new(gram.n, gram.m, gram.delta)?;
    let coeffs = gram.factor.inverse_adjoint();
    let basis = PolynomialBasis { params, coeffs };
    let residual = basis.orthonormality_residual(gram);
    if !(residual <= ORTHONORMALITY_TOL) {
        return Err(Error::Orthonormality {
            residual,
            limit: ORTHONORMALITY_TOL,
        });
    }
    Ok(basis)
}

/// Closed-form `delta = 0` basis, `sqrt(m/pi) sqrt((m+1)...(m+k)/k!) z^k`.
pub fn closed_form_basis_delta0(n: usize, m: usize) -> Result<PolynomialBasis> {
    let params = HPParams::new(n, m, Complex64::new(0.0, 0.0))?;
    let mut coeffs = DMatrix::<Complex64>::zeros(n, n);
    for k in 0..n {
        coeffs[(k, k)] = Complex64::new(measure_conversion(m) * bergman_orthonormal_coefficient(k, m), 0.0);
    }
    Ok(PolynomialBasis { params, coeffs })
}

pub fn leading_coefficients(basis: &PolynomialBasis) -> Vec<f64> {
    (0..basis.n()).map(|k| basis.coeffs[(k, k)].re).collect()
}

/// One of the three correlation kernels, each paired with its reference
/// density.
#[derive(Clone, Debug)]
pub enum KernelSpec {
    /// `K_n^{(m,delta)}(z,w) = sum_{k<n} P_k(z) conj(P_k(w))` against `mu^{(m,delta)}`.
    Finite(PolynomialBasis),
    /// Reproducing kernel of the holomorphic `L^2(mu^{(m,delta)})`:
    /// `m / (pi (1-z)^delta (1 - z conj w)^{m+1} (1 - conj w)^{conj delta})`.
    LimitHp { m: usize, delta: Complex64 },
    /// Weighted Bergman kernel `(1 - z conj w)^{-(m+1)}` against `mu^{[m]}`.
    Bergman { m: usize },
}

impl KernelSpec {
    pub fn finite(basis: PolynomialBasis) -> Self {
        KernelSpec::Finite(basis)
    }

    pub fn m(&self) -> usize {
        match self {
            KernelSpec::Finite(b) => b.m(),
            KernelSpec::LimitHp { m, .. } | KernelSpec::Bergman { m } => *m,
        }
    }

    pub fn weight(&self) -> WeightSpec {
        match self {
            KernelSpec::Finite(b) => b.weight(),
            KernelSpec::LimitHp { m, delta } => WeightSpec::hp(*m, *delta),
            KernelSpec::Bergman { m } => WeightSpec::bergman(*m),
        }
    }

    /// Kernel value without the disc check.
    pub fn eval(&self, z: Complex64, w: Complex64) -> Complex64 {
        match self {
            KernelSpec::Finite(b) => (0..b.n()).map(|k| b.eval(k, z) * b.eval(k, w).conj()).sum(),
            KernelSpec::LimitHp { m, delta } => {
                let one = Complex64::new(1.0, 0.0);
                let left = ((one - z).ln() * delta).exp();
                let right = ((one - w.conj()).ln() * delta.conj()).exp();
                let mid = (one - z * w.conj()).powu(*m as u32 + 1);
                Complex64::new(*m as f64 / PI, 0.0) / (left * mid * right)
            }
            KernelSpec::Bergman { m } => {
                Complex64::new(1.0, 0.0) / (Complex64::new(1.0, 0.0) - z * w.conj()).powu(*m as u32 + 1)
            }
        }
    }

    /// Reference density at `z` without the disc check.
    pub(crate) fn density(&self, z: Complex64) -> f64 {
        match self {
            KernelSpec::Finite(b) => hp_factor(z, b.delta()) * (1.0 - z.norm_sqr()).powi(b.m() as i32 - 1),
            _ => self.weight().density(z),
        }
    }
}

/// Kernel value at a pair of points of the open disc.
pub fn kernel_eval(spec: &KernelSpec, z: Complex64, w: Complex64) -> Result<Complex64> {
    for p in [z, w] {
        if !(p.norm() < 1.0) {
            return Err(Error::OutsideDisc { point: p });
        }
    }
    Ok(spec.eval(z, w))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn delta_zero_first_polynomials() {
        let b = orthonormal_basis(2, 1, c(0.0, 0.0)).unwrap();
        assert!((b.coeffs[(0, 0)] - c(1.0 / PI.sqrt(), 0.0)).norm() < 1e-14);
        assert!((b.coeffs[(1, 1)] - c((2.0 / PI).sqrt(), 0.0)).norm() < 1e-14);
        assert_eq!(b.coeffs[(0, 1)], c(0.0, 0.0));
        let lc = leading_coefficients(&b);
        assert!((lc[0] - 1.0 / PI.sqrt()).abs() < 1e-14);
        assert!((lc[1] - (2.0 / PI).sqrt()).abs() < 1e-14);
    }

    /// Brute-force Gram-Schmidt on `[[3pi/2, -pi/2], [-pi/2, 5pi/6]]`:
    /// `P_0 = sqrt(2/(3pi))`, `P_1 = (z + 1/3) / ||z + 1/3||` with
    /// `||z + 1/3||^2 = 5pi/6 - (2/3)(pi/2) + (1/9)(3pi/2) = 2pi/3`.
    #[test]
    fn delta_one_by_hand() {
        let b = orthonormal_basis(2, 1, c(1.0, 0.0)).unwrap();
        let norm1 = (2.0 * PI / 3.0).sqrt();
        assert!((b.coeffs[(0, 0)].re - (2.0 / (3.0 * PI)).sqrt()).abs() < 1e-13);
        assert!((b.coeffs[(1, 1)].re - 1.0 / norm1).abs() < 1e-13);
        assert!((b.coeffs[(0, 1)] - c(1.0 / 3.0 / norm1, 0.0)).norm() < 1e-13);
    }

    #[test]
    fn closed_form_examples() {
        let b = closed_form_basis_delta0(1, 1).unwrap();
        assert!((b.coeffs[(0, 0)].re - (1.0 / PI).sqrt()).abs() < 1e-14);
        let b = closed_form_basis_delta0(2, 1).unwrap();
        assert!((b.coeffs[(1, 1)].re - (2.0 / PI).sqrt()).abs() < 1e-14);
        let b = closed_form_basis_delta0(3, 2).unwrap();
        assert!((b.coeffs[(2, 2)].re - (2.0 / PI).sqrt() * 6f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn kernel_examples() {
        let k = KernelSpec::Bergman { m: 3 };
        assert_eq!(kernel_eval(&k, c(0.0, 0.0), c(0.0, 0.0)).unwrap(), c(1.0, 0.0));
        let k = KernelSpec::LimitHp { m: 2, delta: c(1.0, 1.0) };
        assert!((kernel_eval(&k, c(0.0, 0.0), c(0.0, 0.0)).unwrap() - c(2.0 / PI, 0.0)).norm() < 1e-15);
        let k = KernelSpec::finite(closed_form_basis_delta0(2, 1).unwrap());
        let v = kernel_eval(&k, c(0.5, 0.0), c(0.5, 0.0)).unwrap();
        assert!((v - c(1.5 / PI, 0.0)).norm() < 1e-15);
        assert!(kernel_eval(&k, c(1.0, 0.0), c(0.0, 0.0)).is_err());
    }

    #[test]
    fn kernels_are_hermitian() {
        let basis = orthonormal_basis(6, 2, c(1.0, 2.0)).unwrap();
        let specs = [
            KernelSpec::finite(basis),
            KernelSpec::LimitHp { m: 2, delta: c(-0.3, 0.7) },
            KernelSpec::Bergman { m: 2 },
        ];
        let pts = [c(0.1, 0.5), c(-0.7, 0.2), c(0.3, -0.3), c(0.95, 0.0)];
        for spec in &specs {
            for &z in &pts {
                for &w in &pts {
                    let a = spec.eval(z, w);
                    let b = spec.eval(w, z).conj();
                    assert!((a - b).norm() <= 1e-12 * (1.0 + a.norm()));
                }
            }
        }
    }

    #[test]
    fn csv_layout() {
        let b = closed_form_basis_delta0(2, 1).unwrap();
        let mut buf = Vec::new();
        b.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "n,m,delta_re,delta_im");
        assert!(lines[1].starts_with("2,1,"));
        assert_eq!(lines[2], "power,P0_re,P0_im,P1_re,P1_im");
        assert_eq!(lines.len(), 5);
    }
}
