use num_complex::{Complex, Complex64};
use rand::Rng;
use serde::Serialize;
use twofloat::TwoFloat;

use crate::error::{Error, Result};
use crate::linalg::{determinant_dd, from_dd, to_dd, ComplexDD};
use crate::params::check_delta;
use crate::rng::RngStream;
use crate::weights::hp_factor;

pub const MAX_GAUGE_POINTS: usize = 12;

/// Both sides of `det[K^{(m,delta)}(z_i,z_j)] prod w^{(m,delta)}(z_i) =
/// det[K^{[m]}(z_i,z_j)] prod w^{[m]}(z_i)`, as densities against Lebesgue
/// measure.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct GaugeCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub rel_error: f64,
    /// A point was repeated; both determinants vanish.
    pub degenerate: bool,
}

fn dd(x: f64) -> TwoFloat {
    TwoFloat::from(x)
}

/// `(1 - z conj w)^{-(m+1)}` in double-double.
fn bergman_dd(z: Complex64, w: Complex64, m: usize) -> ComplexDD {
    let one = Complex::new(dd(1.0), dd(0.0));
    let t = one - to_dd(z) * to_dd(w.conj());
    let mut p = one;
    for _ in 0..=m {
        p = p * t;
    }
    one / p
}

/// `m/pi` in double-double.
fn m_over_pi(m: usize) -> TwoFloat {
    dd(m as f64) / twofloat::consts::PI
}

/// Left side: `K^{(m,delta)} = (m/pi) a(z) conj(a(w)) (1 - z conj w)^{-(m+1)}`
/// with `a(z) = (1-z)^{-delta}`. The per-point factors `a` scale rows and
/// columns, so their double-precision rounding moves the determinant by a
/// few ulps only; the remaining arithmetic runs in double-double because
/// clustered points make these kernel matrices very ill-conditioned.
fn hp_side(points: &[Complex64], m: usize, delta: Complex64) -> ComplexDD {
    let one = Complex64::new(1.0, 0.0);
    let a: Vec<ComplexDD> = points.iter().map(|&z| to_dd((-(delta * (one - z).ln())).exp())).collect();
    let c = Complex::new(m_over_pi(m), dd(0.0));
    let rows = (0..points.len())
        .map(|i| {
            (0..points.len())
                .map(|j| c * a[i] * a[j].conj() * bergman_dd(points[i], points[j], m))
                .collect()
        })
        .collect();
    let mut weight = dd(1.0);
    for &z in points {
        weight = weight * dd(hp_factor(z, delta)) * radial_dd(z, m);
    }
    determinant_dd(rows) * Complex::new(weight, dd(0.0))
}

/// `(1 - |z|^2)^{m-1}` in double-double.
fn radial_dd(z: Complex64, m: usize) -> TwoFloat {
    let zz = to_dd(z);
    let t = dd(1.0) - (zz.re * zz.re + zz.im * zz.im);
    let mut p = dd(1.0);
    for _ in 1..m {
        p = p * t;
    }
    p
}

/// Right side: `K^{[m]}` against `(m/pi)(1 - |z|^2)^{m-1}`.
fn bergman_side(points: &[Complex64], m: usize) -> ComplexDD {
    let rows = (0..points.len())
        .map(|i| (0..points.len()).map(|j| bergman_dd(points[i], points[j], m)).collect())
        .collect();
    let mut weight = dd(1.0);
    for &z in points {
        weight = weight * m_over_pi(m) * radial_dd(z, m);
    }
    determinant_dd(rows) * Complex::new(weight, dd(0.0))
}

pub fn gauge_identity_check(points: &[Complex64], m: usize, delta: Complex64) -> Result<GaugeCheck> {
    check_delta(delta)?;
    if m == 0 {
        return Err(Error::invalid("m", "must be at least 1"));
    }
    if points.is_empty() || points.len() > MAX_GAUGE_POINTS {
        return Err(Error::invalid("points", format!("between 1 and {MAX_GAUGE_POINTS} points required")));
    }
    if let Some(&p) = points.iter().find(|p| !(p.norm() < 1.0)) {
        return Err(Error::OutsideDisc { point: p });
    }
    for i in 0..points.len() {
        if points[i + 1..].contains(&points[i]) {
            return Ok(GaugeCheck {
                lhs: 0.0,
                rhs: 0.0,
                rel_error: 0.0,
                degenerate: true,
            });
        }
    }
    let lhs = hp_side(points, m, delta);
    let rhs = bergman_side(points, m);
    let diff = from_dd(lhs - rhs).norm();
    let (lhs, rhs) = (from_dd(lhs), from_dd(rhs));
    let scale = lhs.norm().max(rhs.norm());
    let rel_error = if scale > 0.0 { diff / scale } else { 0.0 };
    Ok(GaugeCheck {
        lhs: lhs.re,
        rhs: rhs.re,
        rel_error,
        degenerate: false,
    })
}

/// `count` points uniform on the disc of radius `radius`.
pub fn random_tuple(count: usize, radius: f64, rng: &mut RngStream) -> Vec<Complex64> {
    (0..count)
        .map(|_| {
            let r = radius * rng.gen::<f64>().sqrt();
            Complex64::from_polar(r, std::f64::consts::TAU * rng.gen::<f64>())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn single_point_closed_form() {
        for delta in [c(0.0, 0.0), c(1.0, 2.0), c(-0.3, 0.7)] {
            for m in 1..=3 {
                let z = c(0.3, -0.55);
                let g = gauge_identity_check(&[z], m, delta).unwrap();
                let expect = m as f64 / PI / (1.0 - z.norm_sqr()).powi(2);
                assert!((g.lhs - expect).abs() < 1e-13 * expect);
                assert!((g.rhs - expect).abs() < 1e-13 * expect);
            }
        }
    }

    #[test]
    fn random_tuples_agree() {
        let mut rng = RngStream::new(21, 0);
        for delta in [c(1.0, 0.0), c(1.0, 2.0), c(-0.3, 0.0), c(-0.3, 0.7)] {
            for m in 1..=3 {
                for size in 1..=MAX_GAUGE_POINTS {
                    let pts = random_tuple(size, 0.95, &mut rng);
                    let g = gauge_identity_check(&pts, m, delta).unwrap();
                    assert!(g.rel_error <= 1e-10, "m={m} delta={delta} k={size}: {}", g.rel_error);
                }
            }
        }
    }

    #[test]
    fn repeated_point_is_degenerate() {
        let g = gauge_identity_check(&[c(0.1, 0.2), c(0.3, 0.0), c(0.1, 0.2)], 2, c(1.0, 1.0)).unwrap();
        assert!(g.degenerate);
        assert_eq!(g.rel_error, 0.0);
    }

    #[test]
    fn argument_checks() {
        assert!(gauge_identity_check(&[c(1.0, 0.0)], 1, c(0.0, 0.0)).is_err());
        assert!(gauge_identity_check(&[], 1, c(0.0, 0.0)).is_err());
        assert!(gauge_identity_check(&vec![c(0.0, 0.0); 13], 1, c(0.0, 0.0)).is_err());
        assert!(gauge_identity_check(&[c(0.1, 0.0)], 1, c(-0.6, 0.0)).is_err());
    }
}
