use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Truncation size `n`, corank `m` and Hua-Pickrell exponent `delta`.
///
/// The unitary matrices live in U(n + m); their top-left `n x n` corners are
/// the truncations whose spectra are studied.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HPParams {
    pub n: usize,
    pub m: usize,
    pub delta: Complex64,
}

impl HPParams {
    pub fn new(n: usize, m: usize, delta: Complex64) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("n", "must be at least 1"));
        }
        if m == 0 {
            return Err(Error::invalid("m", "must be at least 1"));
        }
        check_delta(delta)?;
        Ok(Self { n, m, delta })
    }

    /// Dimension of the ambient unitary group.
    pub fn dim(&self) -> usize {
        self.n + self.m
    }
}

/// Standing assumption on the exponent: `Re(delta) > -1/2`.
pub fn check_delta(delta: Complex64) -> Result<()> {
    if !delta.re.is_finite() || !delta.im.is_finite() {
        return Err(Error::invalid("delta", "must be finite"));
    }
    if delta.re <= -0.5 {
        return Err(Error::invalid("delta", "Re(delta) must exceed -1/2"));
    }
    Ok(())
}

/// Burn-in and thinning of the independence Metropolis-Hastings chain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MHConfig {
    #[serde(default = "MHConfig::default_burn_in")]
    pub burn_in: usize,
    #[serde(default = "MHConfig::default_thinning")]
    pub thinning: usize,
}

impl MHConfig {
    pub fn new(burn_in: usize, thinning: usize) -> Result<Self> {
        if thinning == 0 {
            return Err(Error::invalid("thinning", "must be at least 1"));
        }
        Ok(Self { burn_in, thinning })
    }

    fn default_burn_in() -> usize {
        1000
    }

    fn default_thinning() -> usize {
        5
    }
}

impl Default for MHConfig {
    fn default() -> Self {
        Self {
            burn_in: Self::default_burn_in(),
            thinning: Self::default_thinning(),
        }
    }
}
