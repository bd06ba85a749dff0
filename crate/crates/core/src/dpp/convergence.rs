use std::io::{self, Write};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::format_f64;
use crate::orthopoly::{orthonormal_basis, KernelSpec};
use crate::params::check_delta;

/// Largest modulus allowed on a convergence grid.
pub const GRID_RADIUS_LIMIT: f64 = 0.8;

/// One row of a convergence table.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ConvergenceRow {
    pub n: usize,
    /// `max |K_n(z,w) - K(z,w)|` over the grid.
    pub sup_error: f64,
    /// `max |K_n(z,w) - K(z,w)| / |K(z,w)|` over the grid.
    pub rel_error: f64,
    /// `min |K(z,w)|` over the grid.
    pub min_limit: f64,
    pub grid_size: usize,
    pub m: usize,
    pub delta: Complex64,
}

/// All ordered pairs of eight points spiralling out to `|z| = radius`.
pub fn default_grid(radius: f64) -> Vec<(Complex64, Complex64)> {
    let pts: Vec<Complex64> = (0..8)
        .map(|k| Complex64::from_polar(radius * (k + 1) as f64 / 8.0, 0.3 + std::f64::consts::TAU * k as f64 * 3.0 / 8.0))
        .collect();
    let mut out = Vec::with_capacity(64);
    for &z in &pts {
        for &w in &pts {
            out.push((z, w));
        }
    }
    out
}

/// Sup-norm distance between `K_n^{(m,delta)}` and its limit on a grid, for
/// each `n` in `n_list`.
pub fn convergence_profile(
    m: usize,
    delta: Complex64,
    n_list: &[usize],
    grid: &[(Complex64, Complex64)],
) -> Result<Vec<ConvergenceRow>> {
    check_delta(delta)?;
    if grid.is_empty() {
        return Err(Error::invalid("grid", "must not be empty"));
    }
    for &(z, w) in grid {
        for p in [z, w] {
            if !(p.norm() <= GRID_RADIUS_LIMIT) {
                return Err(Error::invalid("grid", format!("points must satisfy |z| <= {GRID_RADIUS_LIMIT}")));
            }
        }
    }
    let limit = KernelSpec::LimitHp { m, delta };
    let exact: Vec<Complex64> = grid.iter().map(|&(z, w)| limit.eval(z, w)).collect();
    let min_limit = exact.iter().map(|v| v.norm()).fold(f64::INFINITY, f64::min);
    n_list
        .iter()
        .map(|&n| {
            let finite = KernelSpec::finite(orthonormal_basis(n, m, delta)?);
            let (mut sup, mut rel) = (0.0f64, 0.0f64);
            for (&(z, w), &k) in grid.iter().zip(&exact) {
                let e = (finite.eval(z, w) - k).norm();
                sup = sup.max(e);
                rel = rel.max(e / k.norm());
            }
            Ok(ConvergenceRow {
                n,
                sup_error: sup,
                rel_error: rel,
                min_limit,
                grid_size: grid.len(),
                m,
                delta,
            })
        })
        .collect()
}

/// CSV with columns `n,sup_error,grid_size,m,delta_re,delta_im`.
pub fn write_convergence_csv<W: Write>(rows: &[ConvergenceRow], mut w: W) -> io::Result<()> {
    writeln!(w, "n,sup_error,grid_size,m,delta_re,delta_im")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            r.n,
            format_f64(r.sup_error),
            r.grid_size,
            r.m,
            format_f64(r.delta.re),
            format_f64(r.delta.im)
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn delta_zero_converges_geometrically() {
        let rows = convergence_profile(1, Complex64::new(0.0, 0.0), &[10, 20, 40], &default_grid(0.6)).unwrap();
        assert!(rows[0].sup_error > rows[1].sup_error && rows[1].sup_error > rows[2].sup_error);
        assert!(rows[2].sup_error <= 1e-3 * rows[2].min_limit);
        assert!(rows.iter().all(|r| r.sup_error >= 0.0 && r.grid_size == 64));
    }

    #[test]
    fn grid_outside_the_allowed_disc_is_rejected() {
        let z = Complex64::new(0.9, 0.0);
        assert!(convergence_profile(1, Complex64::new(0.0, 0.0), &[5], &[(z, z)]).is_err());
    }

    #[test]
    fn csv_columns() {
        let rows = convergence_profile(2, Complex64::new(1.0, 0.0), &[4, 8], &default_grid(0.5)).unwrap();
        let mut buf = Vec::new();
        write_convergence_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "n,sup_error,grid_size,m,delta_re,delta_im");
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("4,"));
    }
}
