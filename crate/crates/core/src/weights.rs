//! Reference weights on the unit disc and the monomial moments of
//! `mu^{(m,delta)}`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::linalg::{scaled_cholesky, CholeskyFactor};
use crate::params::check_delta;
use crate::quadrature::hp_disc_rule;

/// Largest Gram dimension accepted by default.
pub const DEFAULT_GRAM_CAP: usize = 48;
/// Default tolerance of the moment series.
pub const SERIES_TOL: f64 = 1e-14;

/// Which reference density on the disc.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightKind {
    /// `|(1-z)^delta|^2 (1-|z|^2)^{m-1}`, unnormalised.
    Hp,
    /// `(m/pi) (1-|z|^2)^{m-1}`, a probability density.
    Bergman,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightSpec {
    pub kind: WeightKind,
    pub m: usize,
    /// Ignored for [`WeightKind::Bergman`].
    pub delta: Complex64,
}

impl WeightSpec {
    pub fn hp(m: usize, delta: Complex64) -> Self {
        Self { kind: WeightKind::Hp, m, delta }
    }

    pub fn bergman(m: usize) -> Self {
        Self {
            kind: WeightKind::Bergman,
            m,
            delta: Complex64::new(0.0, 0.0),
        }
    }

    /// Density at `z` without the disc check.
    pub(crate) fn density(&self, z: Complex64) -> f64 {
        let radial = (1.0 - z.norm_sqr()).powi(self.m as i32 - 1);
        match self.kind {
            WeightKind::Hp => hp_factor(z, self.delta) * radial,
            WeightKind::Bergman => self.m as f64 / PI * radial,
        }
    }
}

/// `|(1 - z)^delta|^2 = |1 - z|^{2 Re delta} exp(-2 Im(delta) arg(1 - z))`
/// with the principal branch.
pub(crate) fn hp_factor(z: Complex64, delta: Complex64) -> f64 {
    if delta.re == 0.0 && delta.im == 0.0 {
        return 1.0;
    }
    let w = Complex64::new(1.0, 0.0) - z;
    (2.0 * (delta.re * w.norm().ln() - delta.im * w.arg())).exp()
}

/// Pointwise weight on the open disc.
pub fn weight_eval(spec: &WeightSpec, z: Complex64) -> Result<f64> {
    if !(z.norm() < 1.0) {
        return Err(Error::OutsideDisc { point: z });
    }
    if spec.m == 0 {
        return Err(Error::invalid("m", "must be at least 1"));
    }
    if spec.kind == WeightKind::Hp {
        check_delta(spec.delta)?;
    }
    Ok(spec.density(z))
}

/// `int_D |z|^{2p} (1-|z|^2)^{m-1} d sigma = pi p! (m-1)! / (p+m)!`.
pub fn radial_monomial_integral(p: usize, m: usize) -> f64 {
    assert!(m >= 1, "m must be at least 1");
    let (p, m) = (p as f64, m as f64);
    PI * (ln_gamma(p + 1.0) + ln_gamma(m) - ln_gamma(p + m + 1.0)).exp()
}

/// Scale used for the mixed absolute/relative tolerance of entry `(j, k)`:
/// the radial integral at the leading power.
fn entry_scale(j: usize, k: usize, m: usize) -> f64 {
    radial_monomial_integral(j.max(k), m)
}

const FIRST_CHECKPOINT: usize = 32;
const LEVELS: usize = 12;

/// `c_{j,k} = int_D z^j conj(z)^k d mu^{(m,delta)}(z)` by the binomial series
///
/// `c_{j,k} = pi (m-1)! sum_{t >= max(j,k)} C(delta, t-j) C(conj delta, t-k) (-1)^{2t-j-k} t! / (t+m)!`.
///
/// Terms decay like `t^{-(2 Re delta + 2 + m)}`. Partial sums are taken at
/// `t = max(j,k) + 32 * 2^i`; summation stops early once the power-law tail
/// estimate meets the tolerance, otherwise the tail is removed by Richardson
/// extrapolation in the known exponents `2 Re delta + 1 + m + p` and the
/// difference of the last two extrapolants is the error estimate. The
/// tolerance is relative to `max(|c_{j,k}|, pi max(j,k)! (m-1)! / (max(j,k)+m)!)`.
pub fn moment_series(j: usize, k: usize, m: usize, delta: Complex64, tol: f64) -> Result<Complex64> {
    check_delta(delta)?;
    if m == 0 {
        return Err(Error::invalid("m", "must be at least 1"));
    }
    if !(tol > 0.0) {
        return Err(Error::invalid("tol", "must be positive"));
    }
    let dconj = delta.conj();
    let lo = j.max(k);
    let prefactor = PI * ln_gamma(m as f64).exp();
    let scale = entry_scale(j, k, m);
    let sigma = 2.0 * delta.re + 1.0 + m as f64;

    // (-1)^a C(delta, a) by its product formula
    let signed_binom = |d: Complex64, a: usize| -> Complex64 {
        let mut c = Complex64::new(1.0, 0.0);
        for i in 0..a {
            c *= (i as f64 - d) / (i as f64 + 1.0);
        }
        c
    };
    let mut ca = signed_binom(delta, lo - j);
    let mut cb = signed_binom(dconj, lo - k);
    let mut ratio = (ln_gamma(lo as f64 + 1.0) - ln_gamma((lo + m) as f64 + 1.0)).exp();

    let mut partial = Vec::with_capacity(LEVELS);
    let mut sum = Complex64::new(0.0, 0.0);
    let mut t = lo;
    let mut next_mark = lo + FIRST_CHECKPOINT;
    loop {
        let term = ca * cb * ratio;
        sum += term;
        // advance to t + 1
        let (tf, jf, kf) = (t as f64, j as f64, k as f64);
        ca *= (tf - jf - delta) / (tf - jf + 1.0);
        cb *= (tf - kf - dconj) / (tf - kf + 1.0);
        ratio *= (tf + 1.0) / (tf + 1.0 + m as f64);
        t += 1;
        if t == next_mark {
            partial.push(sum);
            let next_term = (ca * cb * ratio).norm();
            let tail = 2.0 * next_term * t as f64 / sigma;
            let target = tol * (sum.norm() * prefactor).max(scale) / prefactor;
            if tail <= target {
                return Ok(sum * prefactor);
            }
            if partial.len() == LEVELS {
                break;
            }
            next_mark = lo + FIRST_CHECKPOINT * (1 << partial.len());
        }
    }

    // Richardson extrapolation over the doubling checkpoints.
    let mut table = partial.clone();
    let mut previous = table[table.len() - 1];
    for p in 0..LEVELS - 1 {
        let f = 2f64.powf(sigma + p as f64);
        previous = table[table.len() - 1];
        table = table
            .windows(2)
            .map(|w| (w[1] * f - w[0]) / (f - 1.0))
            .collect();
    }
    let value = table[0] * prefactor;
    // last two extrapolants can agree bitwise; rounding is the floor
    let bound = ((table[0] - previous).norm() * prefactor).max(f64::EPSILON * value.norm().max(scale));
    if bound <= tol * value.norm().max(scale) {
        Ok(value)
    } else {
        Err(Error::SeriesTolerance {
            j,
            k,
            partial: sum * prefactor,
            bound,
        })
    }
}

/// Cross-check of [`moment_series`] by direct quadrature of
/// `z^j conj(z)^k w^{(m,delta)}(z)`.
///
/// Polar tensor rule centred at `z = 1` (see
/// [`hp_disc_rule`](crate::quadrature::hp_disc_rule)): Gauss-Jacobi in the
/// scaled radius, Gauss-Jacobi in the angle.
pub fn moment_quadrature(
    j: usize,
    k: usize,
    m: usize,
    delta: Complex64,
    radial_nodes: usize,
    angular_nodes: usize,
) -> Result<Complex64> {
    check_delta(delta)?;
    if radial_nodes < 64 || angular_nodes < 64 {
        return Err(Error::invalid("nodes", "quadrature needs at least 64 nodes per direction"));
    }
    if m == 0 {
        return Err(Error::invalid("m", "must be at least 1"));
    }
    Ok(MomentOracle::new(m, delta, radial_nodes, angular_nodes)?.moment(j, k))
}

/// [`moment_quadrature`] with the tensor rule built once, for tables of
/// moments at fixed `(m, delta)`.
#[derive(Clone, Debug)]
pub struct MomentOracle {
    rule: Vec<(Complex64, f64)>,
}

impl MomentOracle {
    pub fn new(m: usize, delta: Complex64, radial_nodes: usize, angular_nodes: usize) -> Result<Self> {
        check_delta(delta)?;
        if radial_nodes < 64 || angular_nodes < 64 {
            return Err(Error::invalid("nodes", "quadrature needs at least 64 nodes per direction"));
        }
        if m == 0 {
            return Err(Error::invalid("m", "must be at least 1"));
        }
        Ok(Self {
            rule: hp_disc_rule(m, delta, radial_nodes, angular_nodes),
        })
    }

    pub fn moment(&self, j: usize, k: usize) -> Complex64 {
        self.rule
            .iter()
            .map(|&(z, w)| z.powu(j as u32) * z.conj().powu(k as u32) * w)
            .sum()
    }

    /// All moments with `j, k < n` in one pass over the nodes.
    pub fn table(&self, n: usize) -> DMatrix<Complex64> {
        let mut out = DMatrix::<Complex64>::zeros(n, n);
        let mut pj = vec![Complex64::new(0.0, 0.0); n];
        for &(z, w) in &self.rule {
            let mut p = Complex64::new(1.0, 0.0);
            for v in pj.iter_mut() {
                *v = p;
                p *= z;
            }
            for j in 0..n {
                let a = pj[j] * w;
                for k in 0..n {
                    out[(j, k)] += a * pj[k].conj();
                }
            }
        }
        out
    }
}

/// Monomial moments `entries[(j, k)] = c_{j,k} = int z^j conj(z)^k d mu^{(m,delta)}`
/// for `j, k < n`, together with a verified Cholesky factor of the inner
/// product matrix `conj(entries)`, whose `(i, j)` entry is `<z^j, z^i>`.
#[derive(Clone, Debug)]
pub struct GramMatrix {
    pub n: usize,
    pub m: usize,
    pub delta: Complex64,
    pub entries: DMatrix<Complex64>,
    pub(crate) factor: CholeskyFactor,
}

impl GramMatrix {
    /// Wraps externally computed moments (e.g. from quadrature). The upper
    /// triangle is mirrored so the result is exactly Hermitian.
    pub fn from_entries(m: usize, delta: Complex64, mut entries: DMatrix<Complex64>) -> Result<Self> {
        let n = entries.nrows();
        if n == 0 || n != entries.ncols() {
            return Err(Error::invalid("entries", "expected a non-empty square matrix"));
        }
        for j in 0..n {
            entries[(j, j)] = Complex64::new(entries[(j, j)].re, 0.0);
            for k in j + 1..n {
                entries[(k, j)] = entries[(j, k)].conj();
            }
        }
        let inner = entries.map(|z| z.conj());
        let factor = scaled_cholesky(&inner)?;
        Ok(Self { n, m, delta, entries, factor })
    }

    /// Matrix of inner products `<z^j, z^i>` at position `(i, j)`.
    pub fn inner_products(&self) -> DMatrix<Complex64> {
        self.entries.map(|z| z.conj())
    }

    /// Condition estimate of the diagonally scaled inner-product matrix.
    pub fn condition_estimate(&self) -> f64 {
        self.factor.condition_estimate()
    }

    /// Leading `k x k` block.
    pub fn leading(&self, k: usize) -> Result<GramMatrix> {
        if k == 0 || k > self.n {
            return Err(Error::invalid("n", format!("leading block size must be in 1..={}", self.n)));
        }
        GramMatrix::from_entries(self.m, self.delta, self.entries.view((0, 0), (k, k)).into_owned())
    }
}

/// Options for [`gram_matrix_with`].
#[derive(Clone, Copy, Debug)]
pub struct GramOptions {
    pub cap: usize,
    pub tol: f64,
}

impl Default for GramOptions {
    fn default() -> Self {
        Self {
            cap: DEFAULT_GRAM_CAP,
            tol: SERIES_TOL,
        }
    }
}

pub fn gram_matrix(n: usize, m: usize, delta: Complex64) -> Result<GramMatrix> {
    gram_matrix_with(n, m, delta, GramOptions::default())
}

pub fn gram_matrix_with(n: usize, m: usize, delta: Complex64, opts: GramOptions) -> Result<GramMatrix> {
    check_delta(delta)?;
    if n == 0 || m == 0 {
        return Err(Error::invalid("n", "n and m must be at least 1"));
    }
    if n > opts.cap {
        return Err(Error::invalid("n", format!("Gram dimension {n} exceeds the cap {}", opts.cap)));
    }
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|j| (j..n).map(move |k| (j, k))).collect();
    let values: Vec<Result<Complex64>> = pairs
        .par_iter()
        .map(|&(j, k)| moment_series(j, k, m, delta, opts.tol))
        .collect();
    let mut entries = DMatrix::<Complex64>::zeros(n, n);
    for (&(j, k), v) in pairs.iter().zip(values) {
        entries[(j, k)] = v?;
    }
    GramMatrix::from_entries(m, delta, entries)
}
