//! Gauss rules and the disc integrators built on them.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use statrs::function::gamma::ln_gamma;

/// Nodes and weights on `[-1, 1]`.
#[derive(Clone, Debug)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Value and derivative of the Jacobi polynomial `P_n^{(a,b)}` at `x`.
fn jacobi_eval(n: usize, a: f64, b: f64, x: f64) -> (f64, f64) {
    let value = |n: usize, a: f64, b: f64| -> f64 {
        if n == 0 {
            return 1.0;
        }
        let mut p0 = 1.0;
        let mut p1 = 0.5 * (a - b) + 0.5 * (a + b + 2.0) * x;
        for k in 2..=n {
            let k = k as f64;
            let s = 2.0 * k + a + b;
            let c1 = 2.0 * k * (k + a + b) * (s - 2.0);
            let c2 = (s - 1.0) * (s * (s - 2.0) * x + a * a - b * b);
            let c3 = 2.0 * (k + a - 1.0) * (k + b - 1.0) * s;
            let p2 = (c2 * p1 - c3 * p0) / c1;
            p0 = p1;
            p1 = p2;
        }
        p1
    };
    let p = value(n, a, b);
    let dp = if n == 0 {
        0.0
    } else {
        0.5 * (n as f64 + a + b + 1.0) * value(n - 1, a + 1.0, b + 1.0)
    };
    (p, dp)
}

/// Gauss-Jacobi rule for the weight `(1 - x)^a (1 + x)^b` on `[-1, 1]`,
/// `a, b > -1`.
///
/// Golub-Welsch supplies the starting nodes, a few Newton steps on the
/// three-term recurrence polish them, and the weights come from the
/// closed-form derivative formula.
pub fn gauss_jacobi(n: usize, a: f64, b: f64) -> GaussRule {
    assert!(n >= 1 && a > -1.0 && b > -1.0);
    let mut jac = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        let kf = k as f64;
        let s = 2.0 * kf + a + b;
        jac[(k, k)] = if k == 0 {
            (b - a) / (a + b + 2.0)
        } else {
            (b * b - a * a) / (s * (s + 2.0))
        };
        if k + 1 < n {
            let k1 = kf + 1.0;
            let s1 = 2.0 * k1 + a + b;
            let num = 4.0 * k1 * (k1 + a) * (k1 + b) * (k1 + a + b);
            let den = s1 * s1 * (s1 + 1.0) * (s1 - 1.0);
            let off = (num / den).sqrt();
            jac[(k, k + 1)] = off;
            jac[(k + 1, k)] = off;
        }
    }
    let mut nodes: Vec<f64> = SymmetricEigen::new(jac).eigenvalues.iter().cloned().collect();
    nodes.sort_by(|x, y| x.partial_cmp(y).unwrap());

    let nf = n as f64;
    let log_const = (a + b + 1.0) * std::f64::consts::LN_2 + ln_gamma(nf + a + 1.0) + ln_gamma(nf + b + 1.0)
        - ln_gamma(nf + a + b + 1.0)
        - ln_gamma(nf + 1.0);
    let mut weights = Vec::with_capacity(n);
    for x in nodes.iter_mut() {
        for _ in 0..3 {
            let (p, dp) = jacobi_eval(n, a, b, *x);
            let step = p / dp;
            if !step.is_finite() {
                break;
            }
            *x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = jacobi_eval(n, a, b, *x);
        weights.push((log_const - ((1.0 - *x * *x) * dp * dp).ln()).exp());
    }
    // the large-argument gamma ratio loses a few digits; pin the total mass
    let mass = ((a + b + 1.0) * std::f64::consts::LN_2 + ln_gamma(a + 1.0) + ln_gamma(b + 1.0) - ln_gamma(a + b + 2.0)).exp();
    let total: f64 = weights.iter().sum();
    for w in weights.iter_mut() {
        *w *= mass / total;
    }
    GaussRule { nodes, weights }
}

pub fn gauss_legendre(n: usize) -> GaussRule {
    gauss_jacobi(n, 0.0, 0.0)
}

impl GaussRule {
    /// Nodes and weights mapped affinely to `[lo, hi]`.
    pub fn mapped(&self, lo: f64, hi: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }
}

/// Tensor rule for `d mu^{(m,delta)}(z) = |(1-z)^delta|^2 (1-|z|^2)^{m-1} d sigma(z)`
/// on the unit disc, built in polar coordinates centred at the boundary
/// point `z = 1`.
///
/// With `z = 1 - rho e^{i phi}`, `rho = 2 s cos(phi)`, the measure becomes
/// `(2 cos phi)^{2 Re(delta) + 2m} e^{-2 Im(delta) phi} s^{2 Re(delta) + m} (1-s)^{m-1} ds dphi`
/// on `(0,1) x (-pi/2, pi/2)`, so Gauss-Jacobi rules in both variables
/// absorb the algebraic behaviour at `z = 1` and along `|z| = 1`.
/// Returns `(z_i, omega_i)` with `sum_i omega_i f(z_i) ~ int f d mu`.
pub fn hp_disc_rule(m: usize, delta: Complex64, radial: usize, angular: usize) -> Vec<(Complex64, f64)> {
    assert!(m >= 1 && delta.re > -0.5);
    let rad_exp = 2.0 * delta.re + m as f64;
    let ang_exp = 2.0 * delta.re + 2.0 * m as f64;
    // Jacobi weight (1-x)^{m-1} (1+x)^{rad_exp}, s = (1+x)/2
    let srule = gauss_jacobi(radial, (m - 1) as f64, rad_exp);
    let s_scale = 0.5f64.powf(rad_exp + m as f64);
    // Jacobi weight (1-y^2)^{ang_exp}, phi = pi y / 2
    let prule = gauss_jacobi(angular, ang_exp, ang_exp);
    let mut out = Vec::with_capacity(radial * angular);
    for (&y, &wy) in prule.nodes.iter().zip(&prule.weights) {
        let phi = FRAC_PI_2 * y;
        let cos_phi = phi.cos();
        // cos(phi)^{ang_exp} = (1 - y^2)^{ang_exp} * (cos(phi) / (1 - y^2))^{ang_exp}
        let smooth = (2.0 * cos_phi / (1.0 - y * y)).powf(ang_exp);
        let w_phi = wy * FRAC_PI_2 * smooth * (-2.0 * delta.im * phi).exp();
        let dir = Complex64::from_polar(1.0, phi);
        for (&x, &wx) in srule.nodes.iter().zip(&srule.weights) {
            let s = 0.5 * (1.0 + x);
            let z = Complex64::new(1.0, 0.0) - dir * (2.0 * cos_phi * s);
            out.push((z, w_phi * wx * s_scale));
        }
    }
    out
}

/// Rectangle `[r0, r1] x [t0, t1]` in polar coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PolarRect {
    pub r0: f64,
    pub r1: f64,
    pub t0: f64,
    pub t1: f64,
}

impl PolarRect {
    fn split(&self) -> [PolarRect; 4] {
        let rm = 0.5 * (self.r0 + self.r1);
        let tm = 0.5 * (self.t0 + self.t1);
        [
            PolarRect { r0: self.r0, r1: rm, t0: self.t0, t1: tm },
            PolarRect { r0: rm, r1: self.r1, t0: self.t0, t1: tm },
            PolarRect { r0: self.r0, r1: rm, t0: tm, t1: self.t1 },
            PolarRect { r0: rm, r1: self.r1, t0: tm, t1: self.t1 },
        ]
    }
}

struct Region {
    rect: PolarRect,
    value: Vec<f64>,
    error: f64,
}

impl PartialEq for Region {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Region {}
impl PartialOrd for Region {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Region {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Globally adaptive integration of a vector-valued density over a polar
/// rectangle, `int f(z) d sigma(z)` with the Jacobian `r` included.
///
/// Every region is integrated with tensor Gauss-Legendre rules of order 7
/// and 12; the worst region is quartered until the summed error estimate is
/// below `tol` or `max_regions` is reached.
pub struct PolarIntegrator {
    low: GaussRule,
    high: GaussRule,
    pub tol: f64,
    pub max_regions: usize,
}

/// Result of [`PolarIntegrator::integrate`].
#[derive(Clone, Debug)]
pub struct Integral {
    pub value: Vec<f64>,
    pub error: f64,
}

impl Default for PolarIntegrator {
    fn default() -> Self {
        Self::new(1e-11, 20_000)
    }
}

impl PolarIntegrator {
    pub fn new(tol: f64, max_regions: usize) -> Self {
        Self {
            low: gauss_legendre(7),
            high: gauss_legendre(12),
            tol,
            max_regions,
        }
    }

    fn rule<F>(&self, rule: &GaussRule, rect: &PolarRect, len: usize, f: &F, out: &mut [f64], scratch: &mut [f64])
    where
        F: Fn(Complex64, &mut [f64]),
    {
        out.iter_mut().for_each(|v| *v = 0.0);
        for (r, wr) in rule.mapped(rect.r0, rect.r1) {
            for (t, wt) in rule.mapped(rect.t0, rect.t1) {
                let z = Complex64::from_polar(r, t);
                f(z, &mut scratch[..len]);
                let w = wr * wt * r;
                for (o, s) in out.iter_mut().zip(scratch.iter()) {
                    *o += w * s;
                }
            }
        }
    }

    fn region<F>(&self, rect: PolarRect, len: usize, f: &F) -> Region
    where
        F: Fn(Complex64, &mut [f64]),
    {
        let mut lo = vec![0.0; len];
        let mut hi = vec![0.0; len];
        let mut scratch = vec![0.0; len];
        self.rule(&self.low, &rect, len, f, &mut lo, &mut scratch);
        self.rule(&self.high, &rect, len, f, &mut hi, &mut scratch);
        let error = lo.iter().zip(&hi).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        Region { rect, value: hi, error }
    }

    /// `f(z, out)` writes the `len` components of the density at `z`.
    pub fn integrate<F>(&self, rect: PolarRect, len: usize, f: F) -> Integral
    where
        F: Fn(Complex64, &mut [f64]),
    {
        let mut heap = BinaryHeap::new();
        // start from a mesh fine enough to see the angular structure
        let sectors = ((rect.t1 - rect.t0) / (PI / 4.0)).ceil().max(1.0) as usize;
        let dt = (rect.t1 - rect.t0) / sectors as f64;
        for i in 0..sectors {
            let t0 = rect.t0 + dt * i as f64;
            let t1 = if i + 1 == sectors { rect.t1 } else { t0 + dt };
            heap.push(self.region(PolarRect { t0, t1, ..rect }, len, &f));
        }
        let mut total_error: f64 = heap.iter().map(|r| r.error).sum();
        while total_error > self.tol && heap.len() < self.max_regions {
            let worst = heap.pop().expect("non-empty heap");
            total_error -= worst.error;
            for child in worst.rect.split() {
                let reg = self.region(child, len, &f);
                total_error += reg.error;
                heap.push(reg);
            }
            // guard against drift from repeated subtraction
            if heap.len() % 256 == 0 {
                total_error = heap.iter().map(|r| r.error).sum();
            }
        }
        let mut value = vec![0.0; len];
        for reg in heap.iter() {
            for (v, x) in value.iter_mut().zip(&reg.value) {
                *v += x;
            }
        }
        Integral {
            value,
            error: heap.iter().map(|r| r.error).sum(),
        }
    }
}
