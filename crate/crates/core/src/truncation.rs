//! Top-left corners of unitary matrices and their spectra.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eigen::eigenvalues_of;
use crate::error::{Error, Result};
use crate::matrix::ComplexSquareMatrix;
use crate::params::{HPParams, MHConfig};
use crate::rng::RngStream;
use crate::sampling::{rejection_draw, sample_haar_unitary, sample_hua_pickrell_mh, SamplerKind};

/// Slack on `|z| <= 1` absorbing eigensolver backward error.
pub const DISC_TOL: f64 = 1e-8;

/// Independent draws per substream for the exact samplers.
const DIRECT_CHUNK: usize = 512;
/// Retained states per Metropolis-Hastings chain.
const MH_CHUNK: usize = 4096;

/// Finite configuration of points in the closed unit disc. Order carries no
/// meaning.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PointConfiguration {
    pub points: Vec<Complex64>,
}

impl PointConfiguration {
    pub fn new(points: Vec<Complex64>) -> Self {
        Self { points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Complex64> {
        self.points.iter()
    }

    /// `sum_i |z_i|^2`.
    pub fn radial_moment(&self) -> f64 {
        self.points.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn max_modulus(&self) -> f64 {
        self.points.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn min_modulus(&self) -> f64 {
        self.points.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min)
    }

    pub fn within_closed_disc(&self, tol: f64) -> bool {
        self.points.iter().all(|z| z.norm() <= 1.0 + tol)
    }
}

/// Top-left `n x n` block of `u`.
pub fn truncate(u: &ComplexSquareMatrix, n: usize) -> Result<ComplexSquareMatrix> {
    if n == 0 || n >= u.dim() {
        return Err(Error::invalid(
            "n",
            format!("truncation size must satisfy 1 <= n < {}, got {n}", u.dim()),
        ));
    }
    let block: DMatrix<Complex64> = u.as_inner().view((0, 0), (n, n)).into_owned();
    ComplexSquareMatrix::new(block)
}

/// All eigenvalues with algebraic multiplicity.
pub fn eigenvalues(m: &ComplexSquareMatrix) -> Result<PointConfiguration> {
    eigenvalues_of(m.as_inner()).map(PointConfiguration::new)
}

fn spectrum_of_corner(u: &ComplexSquareMatrix, n: usize) -> Result<PointConfiguration> {
    eigenvalues(&truncate(u, n)?)
}

/// Truncation spectra of `count` unitary matrices drawn from the
/// Hua-Pickrell law on U(n + m).
///
/// Work is split into fixed-size chunks, chunk `c` drawing from
/// `rng.substream(c)`, so the output depends only on the inputs and not on
/// the size of the rayon pool. Each Metropolis-Hastings chunk is its own
/// chain with its own burn-in.
pub fn sample_truncation_ensemble(
    p: &HPParams,
    count: usize,
    sampler: SamplerKind,
    mh: MHConfig,
    rng: &RngStream,
) -> Result<Vec<PointConfiguration>> {
    let p = HPParams::new(p.n, p.m, p.delta)?;
    if sampler == SamplerKind::HpRejection && p.delta.re < 0.0 {
        return Err(Error::invalid("sampler", "hp_rejection requires Re(delta) >= 0"));
    }
    let dim = p.dim();
    let chunk = if sampler == SamplerKind::HpMh { MH_CHUNK } else { DIRECT_CHUNK };
    let chunks = count.div_ceil(chunk);
    let parts: Vec<Result<Vec<PointConfiguration>>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut stream = rng.substream(c as u64);
            let size = chunk.min(count - c * chunk);
            match sampler {
                SamplerKind::Haar => (0..size)
                    .map(|_| spectrum_of_corner(&sample_haar_unitary(dim, &mut stream)?, p.n))
                    .collect(),
                SamplerKind::HpRejection => (0..size)
                    .map(|_| spectrum_of_corner(&rejection_draw(dim, p.delta, &mut stream)?.matrix, p.n))
                    .collect(),
                SamplerKind::HpMh => sample_hua_pickrell_mh(dim, p.delta, size, mh, &mut stream)?
                    .samples
                    .iter()
                    .map(|u| spectrum_of_corner(u, p.n))
                    .collect(),
            }
        })
        .collect();
    let mut out = Vec::with_capacity(count);
    for part in parts {
        out.extend(part?);
    }
    Ok(out)
}
