//! Oracles shared by the integration and acceptance tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use hplab_core::quadrature::{gauss_jacobi, gauss_legendre};
use hplab_core::Complex64;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Unnormalised one-eigenvalue Hua-Pickrell density on the circle,
/// `(2 - 2 cos t)^{Re delta} exp(-2 Im(delta) arg(1 - e^{it}))`.
pub fn circle_density(t: f64, delta: Complex64) -> f64 {
    let w = Complex64::new(1.0, 0.0) - Complex64::from_polar(1.0, t);
    (2.0 - 2.0 * t.cos()).powf(delta.re) * (-2.0 * delta.im * w.arg()).exp()
}

/// Probabilities of `bins` equal bins of `(-pi, pi]` under
/// [`circle_density`]. Bins touching `t = 0` use Gauss-Jacobi rules that
/// absorb `|t|^{2 Re delta}`; the rest use Gauss-Legendre.
pub fn circle_bin_probs(delta: Complex64, bins: usize) -> Vec<f64> {
    assert!(bins % 2 == 0);
    let h = 2.0 * PI / bins as f64;
    let b = 2.0 * delta.re;
    let gl = gauss_legendre(40);
    let gj = gauss_jacobi(40, 0.0, b);
    let mut mass = Vec::with_capacity(bins);
    for k in 0..bins {
        let lo = -PI + h * k as f64;
        let hi = lo + h;
        let v = if k == bins / 2 || k + 1 == bins / 2 {
            // singular endpoint at 0; integrate |t|^b g(t) with g smooth
            let sign = if k == bins / 2 { 1.0 } else { -1.0 };
            let mut s = 0.0;
            for (&x, &w) in gj.nodes.iter().zip(&gj.weights) {
                let t = sign * 0.5 * h * (1.0 + x);
                s += w * circle_density(t, delta) / t.abs().powf(b);
            }
            s * (0.5 * h).powf(b + 1.0)
        } else {
            gl.mapped(lo, hi).map(|(t, w)| w * circle_density(t, delta)).sum()
        };
        mass.push(v);
    }
    let total: f64 = mass.iter().sum();
    mass.iter().map(|m| m / total).collect()
}

/// Total mass of the circle density for real `s > -1/2`:
/// `int (2 - 2 cos t)^s dt = 2 pi Gamma(2s+1) / Gamma(s+1)^2`.
pub fn circle_mass_real(s: f64) -> f64 {
    use statrs::function::gamma::gamma;
    2.0 * PI * gamma(2.0 * s + 1.0) / gamma(s + 1.0).powi(2)
}

/// Counts of angles in `(-pi, pi]` over `bins` equal bins.
pub fn angle_histogram(angles: &[f64], bins: usize) -> Vec<u64> {
    let h = 2.0 * PI / bins as f64;
    let mut out = vec![0u64; bins];
    for &t in angles {
        let k = (((t + PI) / h).ceil() as usize).clamp(1, bins) - 1;
        out[k] += 1;
    }
    out
}
