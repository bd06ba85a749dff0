//! Ginibre, Haar and Hua-Pickrell random unitary matrices.
//!
//! The Hua-Pickrell law on U(N) has density proportional to
//! `|det(I - U)^delta|^2 = prod_i |(1 - lambda_i)^delta|^2` against Haar
//! measure, with principal powers taken eigenvalue by eigenvalue. Its
//! normalising constant is never needed: the rejection sampler uses an
//! explicit upper bound and the Metropolis-Hastings chain only uses ratios.

use std::f64::consts::{LN_2, PI};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::eigen::eigenvalues_of;
use crate::error::{Error, Result};
use crate::matrix::ComplexSquareMatrix;
use crate::params::{check_delta, MHConfig};
use crate::rng::RngStream;

/// Unitarity tolerance accepted by [`hp_log_weight`].
pub const UNITARY_TOL: f64 = 1e-10;

/// How the unitary matrices of an ensemble are drawn.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerKind {
    /// Haar measure; ignores `delta`.
    Haar,
    /// Exact rejection from Haar proposals; requires `Re(delta) >= 0`.
    HpRejection,
    /// Independence Metropolis-Hastings with Haar proposals.
    HpMh,
}

/// `rows x cols` matrix of i.i.d. standard complex Gaussians
/// (real and imaginary parts independent `N(0, 1/2)`).
pub fn sample_ginibre(rows: usize, cols: usize, rng: &mut RngStream) -> DMatrix<Complex64> {
    assert!(rows >= 1 && cols >= 1, "Ginibre dimensions must be positive");
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    DMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re * scale, im * scale)
    })
}

/// Haar-distributed unitary: QR of a Ginibre matrix with the phases of the
/// triangular factor's diagonal moved into `Q`.
pub fn sample_haar_unitary(dim: usize, rng: &mut RngStream) -> Result<ComplexSquareMatrix> {
    if dim == 0 {
        return Err(Error::invalid("N", "must be at least 1"));
    }
    for _ in 0..2 {
        let g = sample_ginibre(dim, dim, rng);
        let scale = g.norm();
        let qr = g.qr();
        let r = qr.r();
        if (0..dim).any(|i| r[(i, i)].norm() <= 1e-13 * scale) {
            continue;
        }
        let mut q = qr.q();
        for j in 0..dim {
            let d = r[(j, j)];
            let phase = d / d.norm();
            for i in 0..dim {
                q[(i, j)] *= phase;
            }
        }
        return ComplexSquareMatrix::new(q);
    }
    Err(Error::SingularDraw)
}

/// Sum over eigenvalues of the principal `log |(1 - lambda)^delta|^2`.
///
/// Eigenvalues are projected onto the unit circle first so that
/// `Re(1 - lambda) >= 0` holds up to rounding.
pub(crate) fn log_weight_from_spectrum(spectrum: &[Complex64], delta: Complex64) -> f64 {
    if delta.re == 0.0 && delta.im == 0.0 {
        return 0.0;
    }
    let mut total = 0.0;
    for &lambda in spectrum {
        let on_circle = if lambda.norm() > 0.0 { lambda / lambda.norm() } else { lambda };
        let w = Complex64::new(1.0, 0.0) - on_circle;
        if w.norm() == 0.0 {
            if delta.re > 0.0 {
                return f64::NEG_INFINITY;
            }
            if delta.re < 0.0 {
                return f64::INFINITY;
            }
            // |0^{i t}| taken as 1, arg(0) as 0
            continue;
        }
        total += 2.0 * (delta.re * w.norm().ln() - delta.im * w.arg());
    }
    total
}

/// `log |det(I - U)^delta|^2 = 2 Re(delta * sum_i Log(1 - lambda_i))`, the
/// unnormalised Hua-Pickrell log-density against Haar measure.
///
/// Returns `-inf` when an eigenvalue equals 1 and `Re(delta) > 0`, `+inf`
/// when it does and `Re(delta) < 0`.
pub fn hp_log_weight(u: &ComplexSquareMatrix, delta: Complex64) -> Result<f64> {
    check_delta(delta)?;
    let deviation = u.unitarity_defect();
    if deviation > UNITARY_TOL {
        return Err(Error::NotUnitary { deviation });
    }
    let spectrum = eigenvalues_of(u.as_inner())?;
    Ok(log_weight_from_spectrum(&spectrum, delta))
}

/// Log of the rejection envelope `2^{2 N Re(delta)} e^{pi N |Im(delta)|}`.
pub fn rejection_log_bound(dim: usize, delta: Complex64) -> f64 {
    let n = dim as f64;
    2.0 * n * delta.re * LN_2 + PI * n * delta.im.abs()
}

/// One accepted rejection-sampler draw together with the number of Haar
/// proposals it consumed.
#[derive(Clone, Debug)]
pub struct RejectionDraw {
    pub matrix: ComplexSquareMatrix,
    pub proposals: u64,
}

/// Haar proposals allowed for a single rejection draw before giving up.
pub const REJECTION_BUDGET: u64 = 1_000_000;

/// Exact Hua-Pickrell draw by rejection from Haar proposals.
pub fn rejection_draw(dim: usize, delta: Complex64, rng: &mut RngStream) -> Result<RejectionDraw> {
    rejection_draw_with_budget(dim, delta, REJECTION_BUDGET, rng)
}

/// As [`rejection_draw`], failing with [`Error::RejectionBudget`] after
/// `budget` rejected proposals.
pub fn rejection_draw_with_budget(
    dim: usize,
    delta: Complex64,
    budget: u64,
    rng: &mut RngStream,
) -> Result<RejectionDraw> {
    check_delta(delta)?;
    if delta.re < 0.0 {
        return Err(Error::invalid(
            "delta",
            "rejection sampling requires Re(delta) >= 0 (density unbounded near eigenvalue 1)",
        ));
    }
    let log_bound = rejection_log_bound(dim, delta);
    let mut proposals = 0u64;
    loop {
        if proposals == budget {
            return Err(Error::RejectionBudget { proposals, log_bound });
        }
        proposals += 1;
        let u = sample_haar_unitary(dim, rng)?;
        if delta.re == 0.0 && delta.im == 0.0 {
            return Ok(RejectionDraw { matrix: u, proposals });
        }
        let spectrum = eigenvalues_of(u.as_inner())?;
        let lw = log_weight_from_spectrum(&spectrum, delta);
        let uniform: f64 = rng.gen();
        if uniform.ln() < lw - log_bound {
            return Ok(RejectionDraw { matrix: u, proposals });
        }
    }
}

pub fn sample_hua_pickrell_rejection(
    dim: usize,
    delta: Complex64,
    rng: &mut RngStream,
) -> Result<ComplexSquareMatrix> {
    rejection_draw(dim, delta, rng).map(|d| d.matrix)
}

/// Output of an independence Metropolis-Hastings run.
#[derive(Clone, Debug)]
pub struct MhChain {
    pub samples: Vec<ComplexSquareMatrix>,
    pub proposals: u64,
    pub accepted: u64,
}

impl MhChain {
    pub fn acceptance_rate(&self) -> f64 {
        if self.proposals == 0 {
            return 0.0;
        }
        self.accepted as f64 / self.proposals as f64
    }
}

fn mh_accept(current: f64, proposed: f64, uniform: f64) -> bool {
    match (current.is_infinite(), proposed.is_infinite()) {
        // both singular: probability-zero event, stay put
        (true, true) if current > 0.0 && proposed > 0.0 => false,
        (_, true) => proposed > 0.0,
        (true, false) => current < 0.0,
        (false, false) => uniform.ln() < proposed - current,
    }
}

/// Independence Metropolis-Hastings chain targeting the Hua-Pickrell law.
///
/// Starts from a Haar draw, discards `cfg.burn_in` proposals, then keeps one
/// state every `cfg.thinning` proposals until `count` states are collected.
pub fn sample_hua_pickrell_mh(
    dim: usize,
    delta: Complex64,
    count: usize,
    cfg: MHConfig,
    rng: &mut RngStream,
) -> Result<MhChain> {
    check_delta(delta)?;
    if cfg.thinning == 0 {
        return Err(Error::invalid("thinning", "must be at least 1"));
    }
    let mut current = sample_haar_unitary(dim, rng)?;
    let mut current_lw = log_weight_from_spectrum(&eigenvalues_of(current.as_inner())?, delta);
    let mut samples = Vec::with_capacity(count);
    let mut proposals = 0u64;
    let mut accepted = 0u64;
    let total = cfg.burn_in + count * cfg.thinning;
    for step in 1..=total {
        let candidate = sample_haar_unitary(dim, rng)?;
        let lw = log_weight_from_spectrum(&eigenvalues_of(candidate.as_inner())?, delta);
        let uniform: f64 = rng.gen();
        proposals += 1;
        if mh_accept(current_lw, lw, uniform) {
            current = candidate;
            current_lw = lw;
            accepted += 1;
        }
        if step > cfg.burn_in && (step - cfg.burn_in) % cfg.thinning == 0 {
            samples.push(current.clone());
        }
    }
    Ok(MhChain {
        samples,
        proposals,
        accepted,
    })
}
