use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::orthopoly::PolynomialBasis;
use crate::rng::RngStream;
use crate::truncation::PointConfiguration;

const GRID_S: usize = 64;
const GRID_PHI: usize = 128;
const SAFETY: f64 = 1.5;
const CHUNK: usize = 512;

/// Sequential (HKPV) sampler of the projection DPP with kernel
/// `K_n(z,w) = sum_{k<n} P_k(z) conj(P_k(w))` against `mu^{(m,delta)}`.
///
/// Proposals are uniform in the coordinates `z = 1 - 2 s cos(phi) e^{i phi}`,
/// `(s, phi) in (0,1) x (-pi/2, pi/2)`, where the density of
/// `mu^{(m,delta)}` is
/// `s^{2 Re delta + m} (1-s)^{m-1} (2 cos phi)^{2 Re delta + 2m} e^{-2 Im(delta) phi}`,
/// bounded even when `Re delta < 0`. The first intensity in these
/// coordinates, maximised over a grid and inflated by a safety factor,
/// dominates every conditional intensity.
#[derive(Clone, Debug)]
pub struct ProjectionDpp {
    basis: PolynomialBasis,
    envelope: f64,
}

impl ProjectionDpp {
    pub fn new(basis: PolynomialBasis) -> Self {
        let envelope = grid_envelope(&basis, GRID_S, GRID_PHI);
        Self { basis, envelope }
    }

    pub fn basis(&self) -> &PolynomialBasis {
        &self.basis
    }

    pub fn envelope(&self) -> f64 {
        self.envelope
    }

    /// One configuration of exactly `n` points. If a proposal exceeds the
    /// envelope, the envelope is rebuilt on a grid twice as fine and the
    /// draw restarts; a second violation is an error.
    pub fn sample(&self, rng: &mut RngStream) -> Result<PointConfiguration> {
        let mut envelope = self.envelope;
        for attempt in 0..2 {
            match draw(&self.basis, envelope, rng) {
                Ok(points) => return Ok(PointConfiguration::new(points)),
                Err(value) if attempt == 0 => {
                    envelope = grid_envelope(&self.basis, 2 * GRID_S, 2 * GRID_PHI).max(SAFETY * value);
                }
                Err(value) => return Err(Error::EnvelopeViolation { value, envelope }),
            }
        }
        unreachable!()
    }
}

/// Density of `mu^{(m,delta)}` in `(s, phi)` coordinates, and the point.
fn chart(basis: &PolynomialBasis, s: f64, phi: f64) -> (Complex64, f64) {
    let m = basis.m() as f64;
    let d = basis.delta();
    let cos_phi = phi.cos();
    let z = Complex64::new(1.0, 0.0) - Complex64::from_polar(2.0 * s * cos_phi, phi);
    let w = s.powf(2.0 * d.re + m)
        * (1.0 - s).powf(m - 1.0)
        * (2.0 * cos_phi).max(0.0).powf(2.0 * d.re + 2.0 * m)
        * (-2.0 * d.im * phi).exp();
    (z, w)
}

fn first_intensity(basis: &PolynomialBasis, s: f64, phi: f64, v: &mut [Complex64]) -> (Complex64, f64, f64) {
    let (z, w) = chart(basis, s, phi);
    basis.eval_into(z, v);
    let norm: f64 = v.iter().map(|x| x.norm_sqr()).sum();
    (z, w, norm * w)
}

fn grid_envelope(basis: &PolynomialBasis, ns: usize, nphi: usize) -> f64 {
    let mut v = vec![Complex64::new(0.0, 0.0); basis.n()];
    let mut max = 0.0f64;
    for i in 0..ns {
        let s = i as f64 / (ns - 1) as f64;
        for j in 0..nphi {
            let phi = -FRAC_PI_2 + PI * j as f64 / (nphi - 1) as f64;
            let (_, _, f) = first_intensity(basis, s, phi, &mut v);
            if f.is_finite() {
                max = max.max(f);
            }
        }
    }
    SAFETY * max
}

/// One sequential draw; `Err(value)` reports an envelope violation.
fn draw(basis: &PolynomialBasis, envelope: f64, rng: &mut RngStream) -> std::result::Result<Vec<Complex64>, f64> {
    let n = basis.n();
    let mut points = Vec::with_capacity(n);
    // orthonormal basis of span{conj P(x_j)} for the accepted points
    let mut frame: Vec<Vec<Complex64>> = Vec::with_capacity(n);
    let mut v = vec![Complex64::new(0.0, 0.0); n];
    while points.len() < n {
        let s: f64 = rng.gen();
        let phi = -FRAC_PI_2 + PI * rng.gen::<f64>();
        let (z, w, full) = first_intensity(basis, s, phi, &mut v);
        if full > envelope {
            return Err(full);
        }
        // residual of conj(v) after projecting out the frame
        let mut r: Vec<Complex64> = v.iter().map(|x| x.conj()).collect();
        for e in &frame {
            let c: Complex64 = e.iter().zip(&r).map(|(a, b)| a.conj() * b).sum();
            for (ri, ei) in r.iter_mut().zip(e) {
                *ri -= c * ei;
            }
        }
        let rn: f64 = r.iter().map(|x| x.norm_sqr()).sum();
        let u: f64 = rng.gen();
        if u * envelope < rn * w {
            let scale = 1.0 / rn.sqrt();
            frame.push(r.iter().map(|x| x * scale).collect());
            points.push(z);
        }
    }
    Ok(points)
}

/// One draw with a fresh envelope.
pub fn sample_projection_dpp(basis: &PolynomialBasis, rng: &mut RngStream) -> Result<PointConfiguration> {
    ProjectionDpp::new(basis.clone()).sample(rng)
}

/// `count` independent draws, chunk `c` from `rng.substream(c)`.
pub fn sample_projection_ensemble(
    basis: &PolynomialBasis,
    count: usize,
    rng: &RngStream,
) -> Result<Vec<PointConfiguration>> {
    let sampler = ProjectionDpp::new(basis.clone());
    let chunks = count.div_ceil(CHUNK);
    let parts: Vec<Result<Vec<PointConfiguration>>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut stream = rng.substream(c as u64);
            let size = CHUNK.min(count - c * CHUNK);
            (0..size).map(|_| sampler.sample(&mut stream)).collect()
        })
        .collect();
    let mut out = Vec::with_capacity(count);
    for part in parts {
        out.extend(part?);
    }
    Ok(out)
}
