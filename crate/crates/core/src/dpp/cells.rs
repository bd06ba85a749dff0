use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::orthopoly::KernelSpec;
use crate::truncation::PointConfiguration;

/// Annular sector `{r_lo <= |z| < r_hi, theta_lo <= arg z < theta_hi}` with
/// `arg` taken in `[0, 2 pi)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub r_lo: f64,
    pub r_hi: f64,
    pub theta_lo: f64,
    pub theta_hi: f64,
}

impl Cell {
    pub fn contains(&self, z: Complex64) -> bool {
        let r = z.norm();
        let t = positive_arg(z);
        r >= self.r_lo && r < self.r_hi && t >= self.theta_lo && t < self.theta_hi
    }

    pub fn area(&self) -> f64 {
        0.5 * (self.r_hi * self.r_hi - self.r_lo * self.r_lo) * (self.theta_hi - self.theta_lo)
    }
}

/// One annulus and its angular cut points `0 = t_0 < ... < t_s = 2 pi`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ring {
    pub r_lo: f64,
    pub r_hi: f64,
    pub theta_edges: Vec<f64>,
}

/// Disjoint annular-sector cells covering the disc `|z| <= r_max`, listed
/// ring by ring, sectors by increasing angle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellPartition {
    pub r_max: f64,
    pub rings: Vec<Ring>,
}

pub(crate) fn positive_arg(z: Complex64) -> f64 {
    let t = z.arg();
    if t < 0.0 {
        // keep tiny negative angles below 2 pi after rounding
        (t + TAU).min(f64::from_bits(TAU.to_bits() - 1))
    } else {
        t
    }
}

fn check_radius(r_max: f64) -> Result<()> {
    if !(r_max > 0.0 && r_max <= 1.0) {
        return Err(Error::invalid("r_max", "must lie in (0, 1]"));
    }
    Ok(())
}

fn check_counts(rings: usize, sectors: usize) -> Result<()> {
    if rings == 0 || sectors == 0 {
        return Err(Error::invalid("cells", "rings and sectors must be positive"));
    }
    Ok(())
}

/// Cut points splitting a piecewise-linear cumulative mass into `parts`
/// equal pieces.
fn equal_mass_cuts(edges: &[f64], mass: &[f64], parts: usize) -> Vec<f64> {
    let total: f64 = mass.iter().sum();
    let mut cuts = vec![edges[0]];
    let mut acc = 0.0;
    let mut i = 0;
    for p in 1..parts {
        let target = total * p as f64 / parts as f64;
        while i < mass.len() && acc + mass[i] < target {
            acc += mass[i];
            i += 1;
        }
        let i = i.min(mass.len() - 1);
        let frac = if mass[i] > 0.0 { ((target - acc) / mass[i]).clamp(0.0, 1.0) } else { 0.5 };
        let cut = edges[i] + frac * (edges[i + 1] - edges[i]);
        cuts.push(cut.max(*cuts.last().unwrap()));
    }
    cuts.push(*edges.last().unwrap());
    cuts
}

const RADIAL_BINS: usize = 512;
const ANGULAR_BINS: usize = 720;

impl CellPartition {
    /// Equal-area rings, equal-angle sectors.
    pub fn uniform(r_max: f64, rings: usize, sectors: usize) -> Result<Self> {
        check_radius(r_max)?;
        check_counts(rings, sectors)?;
        let theta_edges: Vec<f64> = (0..=sectors).map(|j| TAU * j as f64 / sectors as f64).collect();
        let rings = (0..rings)
            .map(|i| Ring {
                r_lo: r_max * (i as f64 / rings as f64).sqrt(),
                r_hi: r_max * ((i + 1) as f64 / rings as f64).sqrt(),
                theta_edges: theta_edges.clone(),
            })
            .collect();
        Ok(Self { r_max, rings })
    }

    /// Cells of (approximately) equal expected count under the first
    /// intensity `K(z,z) w(z)` of `spec`: rings of equal mass, then within
    /// each ring sectors of equal mass. Masses come from a midpoint rule on
    /// a fine polar grid, which is all the construction needs.
    pub fn equal_mass(spec: &KernelSpec, r_max: f64, rings: usize, sectors: usize) -> Result<Self> {
        check_radius(r_max)?;
        check_counts(rings, sectors)?;
        let intensity = |z: Complex64| spec.eval(z, z).re * spec.density(z);
        let dr = r_max / RADIAL_BINS as f64;
        let dt = TAU / ANGULAR_BINS as f64;
        let r_edges: Vec<f64> = (0..=RADIAL_BINS).map(|i| dr * i as f64).collect();
        let t_edges: Vec<f64> = (0..=ANGULAR_BINS).map(|j| dt * j as f64).collect();
        let grid_mass = |r0: f64, r1: f64, t: f64| {
            let r = 0.5 * (r0 + r1);
            intensity(Complex64::from_polar(r, t)) * r * (r1 - r0) * dt
        };
        let radial_mass: Vec<f64> = (0..RADIAL_BINS)
            .map(|i| {
                (0..ANGULAR_BINS)
                    .map(|j| grid_mass(r_edges[i], r_edges[i + 1], (j as f64 + 0.5) * dt))
                    .sum()
            })
            .collect();
        let r_cuts = equal_mass_cuts(&r_edges, &radial_mass, rings);
        let mut out = Vec::with_capacity(rings);
        for w in r_cuts.windows(2) {
            let (r_lo, r_hi) = (w[0], w[1]);
            let sub = 32;
            let h = (r_hi - r_lo) / sub as f64;
            let angular_mass: Vec<f64> = (0..ANGULAR_BINS)
                .map(|j| {
                    let t = (j as f64 + 0.5) * dt;
                    (0..sub)
                        .map(|i| grid_mass(r_lo + h * i as f64, r_lo + h * (i + 1) as f64, t))
                        .sum()
                })
                .collect();
            let mut theta_edges = equal_mass_cuts(&t_edges, &angular_mass, sectors);
            theta_edges[0] = 0.0;
            theta_edges[sectors] = TAU;
            out.push(Ring { r_lo, r_hi, theta_edges });
        }
        out[0].r_lo = 0.0;
        out[rings - 1].r_hi = r_max;
        Ok(Self { r_max, rings: out })
    }

    pub fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for ring in &self.rings {
            for w in ring.theta_edges.windows(2) {
                out.push(Cell {
                    r_lo: ring.r_lo,
                    r_hi: ring.r_hi,
                    theta_lo: w[0],
                    theta_hi: w[1],
                });
            }
        }
        out
    }

    pub fn len(&self) -> usize {
        self.rings.iter().map(|r| r.theta_edges.len() - 1).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Index of the cell containing `z`, or `None` outside `|z| < r_max`.
    pub fn locate(&self, z: Complex64) -> Option<usize> {
        let r = z.norm();
        if !(r < self.r_max) {
            return None;
        }
        let t = positive_arg(z);
        let mut offset = 0;
        for ring in &self.rings {
            let s = ring.theta_edges.len() - 1;
            if r >= ring.r_lo && r < ring.r_hi {
                let j = ring.theta_edges.partition_point(|&e| e <= t).clamp(1, s) - 1;
                return Some(offset + j);
            }
            offset += s;
        }
        None
    }

    /// Per-cell counts of one configuration.
    pub fn counts(&self, config: &PointConfiguration) -> Vec<u32> {
        let mut out = vec![0u32; self.len()];
        for &z in config.iter() {
            if let Some(i) = self.locate(z) {
                out[i] += 1;
            }
        }
        out
    }

    /// Counts with one extra trailing bin for points outside every cell.
    pub fn counts_with_overflow(&self, config: &PointConfiguration) -> Vec<u32> {
        let mut out = vec![0u32; self.len() + 1];
        for &z in config.iter() {
            match self.locate(z) {
                Some(i) => out[i] += 1,
                None => out[self.len()] += 1,
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orthopoly::closed_form_basis_delta0;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn uniform_partition_layout() {
        let p = CellPartition::uniform(0.9, 3, 4).unwrap();
        assert_eq!(p.len(), 12);
        let total: f64 = p.cells().iter().map(Cell::area).sum();
        assert!((total - PI * 0.81).abs() < 1e-12);
        assert_eq!(p.locate(c(0.0, 0.0)), Some(0));
        assert_eq!(p.locate(c(0.95, 0.0)), None);
        // negative angles map into the last sector
        let i = p.locate(c(0.1, -1e-3)).unwrap();
        assert_eq!(i, 3);
        assert!(CellPartition::uniform(1.2, 3, 4).is_err());
        assert!(CellPartition::uniform(0.5, 0, 4).is_err());
    }

    #[test]
    fn every_point_lands_in_exactly_one_cell() {
        let p = CellPartition::uniform(0.95, 4, 6).unwrap();
        let cells = p.cells();
        for k in 0..2000 {
            let z = Complex64::from_polar(0.95 * ((k as f64 * 0.618).fract()), k as f64 * 2.399 - 40.0);
            let owners: Vec<usize> = (0..cells.len()).filter(|&i| cells[i].contains(z)).collect();
            assert_eq!(owners.len(), 1);
            assert_eq!(p.locate(z), Some(owners[0]));
        }
    }

    #[test]
    fn equal_mass_for_the_uniform_law() {
        // n = 1, m = 1, delta = 0: the intensity is 1/pi, rings of equal area
        let spec = KernelSpec::finite(closed_form_basis_delta0(1, 1).unwrap());
        let p = CellPartition::equal_mass(&spec, 0.8, 4, 3).unwrap();
        for (i, ring) in p.rings.iter().enumerate() {
            let expect = 0.8 * ((i + 1) as f64 / 4.0).sqrt();
            assert!((ring.r_hi - expect).abs() < 1e-3, "{} vs {expect}", ring.r_hi);
            for (j, t) in ring.theta_edges.iter().enumerate() {
                assert!((t - TAU * j as f64 / 3.0).abs() < 1e-3);
            }
        }
    }

    #[test]
    fn counts_with_overflow_bin() {
        let p = CellPartition::uniform(0.5, 1, 2).unwrap();
        let cfg = PointConfiguration::new(vec![c(0.1, 0.1), c(-0.1, -0.1), c(0.7, 0.0)]);
        assert_eq!(p.counts(&cfg), vec![1, 1]);
        assert_eq!(p.counts_with_overflow(&cfg), vec![1, 1, 1]);
    }
}
