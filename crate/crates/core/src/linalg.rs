//! Small dense helpers: diagonally scaled Cholesky and LU determinants.

use nalgebra::DMatrix;
use num_complex::{Complex, Complex64};
use twofloat::TwoFloat;

use crate::error::{Error, Result};

/// `A = D^{-1} L L^* D^{-1}` with `D = diag(A)^{-1/2}`; `L` is the Cholesky
/// factor of the unit-diagonal matrix `D A D`.
#[derive(Clone, Debug)]
pub struct CholeskyFactor {
    scaled_lower: DMatrix<Complex64>,
    scale: Vec<f64>,
}

/// Cholesky factorisation of a Hermitian matrix after symmetric diagonal
/// scaling. Fails on a non-positive pivot.
pub fn scaled_cholesky(a: &DMatrix<Complex64>) -> Result<CholeskyFactor> {
    let n = a.nrows();
    let mut scale = Vec::with_capacity(n);
    for i in 0..n {
        let d = a[(i, i)].re;
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::Cholesky {
                pivot: i,
                condition: f64::INFINITY,
            });
        }
        scale.push(1.0 / d.sqrt());
    }
    let mut l = DMatrix::<Complex64>::zeros(n, n);
    let (mut dmin, mut dmax) = (f64::INFINITY, 0.0f64);
    for j in 0..n {
        let mut diag = a[(j, j)].re * scale[j] * scale[j];
        for k in 0..j {
            diag -= l[(j, k)].norm_sqr();
        }
        if !(diag > 0.0) || !diag.is_finite() {
            let condition = if dmin.is_finite() && dmin > 0.0 {
                (dmax / dmin).powi(2)
            } else {
                f64::INFINITY
            };
            return Err(Error::Cholesky { pivot: j, condition });
        }
        let ljj = diag.sqrt();
        dmin = dmin.min(ljj);
        dmax = dmax.max(ljj);
        l[(j, j)] = Complex64::new(ljj, 0.0);
        for i in j + 1..n {
            let mut s = a[(i, j)] * (scale[i] * scale[j]);
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / ljj;
        }
    }
    Ok(CholeskyFactor { scaled_lower: l, scale })
}

impl CholeskyFactor {
    pub fn dim(&self) -> usize {
        self.scale.len()
    }

    /// Squared ratio of extreme pivots of the scaled factor; a cheap lower
    /// estimate of the scaled condition number.
    pub fn condition_estimate(&self) -> f64 {
        let d: Vec<f64> = (0..self.dim()).map(|i| self.scaled_lower[(i, i)].re).collect();
        let max = d.iter().cloned().fold(0.0, f64::max);
        let min = d.iter().cloned().fold(f64::INFINITY, f64::min);
        (max / min).powi(2)
    }

    /// Upper-triangular `C = L_A^{-*}` with `C^* A C = I`, where `L_A` is the
    /// unscaled Cholesky factor of `A`. Its diagonal is real and positive.
    pub fn inverse_adjoint(&self) -> DMatrix<Complex64> {
        let n = self.dim();
        let l = &self.scaled_lower;
        // X = L^{-1}, lower triangular, by forward substitution
        let mut x = DMatrix::<Complex64>::zeros(n, n);
        for col in 0..n {
            x[(col, col)] = Complex64::new(1.0, 0.0) / l[(col, col)];
            for i in col + 1..n {
                let mut s = Complex64::new(0.0, 0.0);
                for k in col..i {
                    s -= l[(i, k)] * x[(k, col)];
                }
                x[(i, col)] = s / l[(i, i)];
            }
        }
        // C = D X^*
        let mut c = x.adjoint();
        for i in 0..n {
            for j in 0..n {
                c[(i, j)] *= self.scale[i];
            }
        }
        c
    }
}

/// Determinant by LU with partial pivoting.
pub fn determinant(a: &DMatrix<Complex64>) -> Complex64 {
    a.clone().lu().determinant()
}

/// Complex double-double number.
pub type ComplexDD = Complex<TwoFloat>;

pub fn to_dd(z: Complex64) -> ComplexDD {
    Complex::new(TwoFloat::from(z.re), TwoFloat::from(z.im))
}

pub fn from_dd(z: ComplexDD) -> Complex64 {
    Complex64::new(f64::from(z.re), f64::from(z.im))
}

/// Determinant by LU with partial pivoting in double-double arithmetic,
/// for small matrices whose determinant is needed beyond the reach of
/// their condition number in double precision. `a` is row-major.
pub fn determinant_dd(mut a: Vec<Vec<ComplexDD>>) -> ComplexDD {
    let n = a.len();
    let magnitude = |z: &ComplexDD| z.re.hi().abs() + z.im.hi().abs();
    let mut det = Complex::new(TwoFloat::from(1.0), TwoFloat::from(0.0));
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| magnitude(&a[i][col]).total_cmp(&magnitude(&a[j][col])))
            .expect("non-empty column");
        if magnitude(&a[pivot][col]) == 0.0 {
            return Complex::new(TwoFloat::from(0.0), TwoFloat::from(0.0));
        }
        if pivot != col {
            a.swap(pivot, col);
            det = -det;
        }
        let p = a[col][col];
        det = det * p;
        for i in col + 1..n {
            let f = a[i][col] / p;
            for j in col + 1..n {
                let t = f * a[col][j];
                a[i][j] = a[i][j] - t;
            }
        }
    }
    det
}
