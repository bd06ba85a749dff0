use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::cells::CellPartition;
use crate::error::{Error, Result};
use crate::orthopoly::{KernelSpec, PolynomialBasis};
use crate::quadrature::{PolarIntegrator, PolarRect};
use crate::stats::bonferroni_threshold;
use crate::truncation::PointConfiguration;

/// Fewest configurations [`verify_intensities`] accepts.
pub const MIN_CONFIGURATIONS: usize = 1000;

/// Restrictions of the projection onto each cell:
/// `M_A[k][l] = int_A P_k(z) conj(P_l(z)) d mu(z)`.
///
/// For a projection kernel `K = sum P_k conj(P_k)` these give
/// `E N_A = tr M_A`, `Var N_A = tr M_A - tr M_A^2` and, for disjoint cells,
/// `E[N_A N_B] = tr M_A tr M_B - tr(M_A M_B)`.
#[derive(Clone, Debug)]
pub struct CellMoments {
    pub matrices: Vec<DMatrix<Complex64>>,
    /// Summed quadrature error estimates per cell.
    pub errors: Vec<f64>,
}

fn trace_product(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    let n = a.nrows();
    let mut s = Complex64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            s += a[(i, j)] * b[(j, i)];
        }
    }
    s.re
}

impl CellMoments {
    pub fn expected(&self, a: usize) -> f64 {
        self.matrices[a].trace().re
    }

    pub fn variance(&self, a: usize) -> f64 {
        let m = &self.matrices[a];
        m.trace().re - trace_product(m, m)
    }

    /// `E[N_A N_B]` for disjoint cells.
    pub fn pair(&self, a: usize, b: usize) -> f64 {
        self.expected(a) * self.expected(b) - trace_product(&self.matrices[a], &self.matrices[b])
    }

    /// `int_A int_B |K(z,w)|^2 d mu d mu = tr(M_A M_B)`.
    pub fn cross(&self, a: usize, b: usize) -> f64 {
        trace_product(&self.matrices[a], &self.matrices[b])
    }
}

fn finite_basis(spec: &KernelSpec) -> Result<&PolynomialBasis> {
    match spec {
        KernelSpec::Finite(b) => Ok(b),
        _ => Err(Error::invalid("kernel", "cell intensities need a finite kernel")),
    }
}

/// Cell matrices by adaptive polar quadrature.
pub fn cell_moments(spec: &KernelSpec, cells: &CellPartition) -> Result<CellMoments> {
    let basis = finite_basis(spec)?;
    let n = basis.n();
    let integrator = PolarIntegrator::default();
    let weight = basis.weight();
    let parts: Vec<(DMatrix<Complex64>, f64)> = cells
        .cells()
        .par_iter()
        .map(|cell| {
            let rect = PolarRect {
                r0: cell.r_lo,
                r1: cell.r_hi,
                t0: cell.theta_lo,
                t1: cell.theta_hi,
            };
            let integral = integrator.integrate(rect, 2 * n * n, |z, out| {
                let w = weight.density(z);
                let p = basis.eval_all(z);
                for k in 0..n {
                    for l in 0..n {
                        let v = p[k] * p[l].conj() * w;
                        out[2 * (k * n + l)] = v.re;
                        out[2 * (k * n + l) + 1] = v.im;
                    }
                }
            });
            let mut m = DMatrix::<Complex64>::zeros(n, n);
            for k in 0..n {
                for l in 0..n {
                    m[(k, l)] = Complex64::new(integral.value[2 * (k * n + l)], integral.value[2 * (k * n + l) + 1]);
                }
            }
            (m, integral.error)
        })
        .collect();
    let (matrices, errors) = parts.into_iter().unzip();
    Ok(CellMoments { matrices, errors })
}

/// `E[X(A)] = int_A K_n(z,z) d mu(z)` for every cell.
pub fn expected_cell_counts(spec: &KernelSpec, cells: &CellPartition) -> Result<Vec<f64>> {
    let moments = cell_moments(spec, cells)?;
    Ok((0..cells.len()).map(|a| moments.expected(a).max(0.0)).collect())
}

#[derive(Clone, Debug, Serialize)]
pub struct CellStat {
    pub cell: usize,
    pub expected: f64,
    pub mean: f64,
    /// Standard error of the mean from the predicted variance.
    pub std_error: f64,
    /// Standard error of the mean from the sample variance.
    pub empirical_std_error: f64,
    pub z: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct PairStat {
    pub a: usize,
    pub b: usize,
    pub expected: f64,
    pub mean: f64,
    pub std_error: f64,
    pub z: f64,
}

/// First and second factorial-moment comparison of samples against a
/// finite kernel.
#[derive(Clone, Debug, Serialize)]
pub struct CorrelationReport {
    pub samples: usize,
    pub level: f64,
    pub tests: usize,
    pub threshold: f64,
    pub cells: Vec<CellStat>,
    pub pairs: Vec<PairStat>,
    pub max_abs_z: f64,
    pub pass: bool,
}

/// Bonferroni-corrected z-tests of per-cell mean counts and of
/// `E[N_A N_B]` over every pair of distinct cells.
///
/// Mean counts are standardised with the predicted variance
/// `tr M_A - tr M_A^2`. Pair products are standardised with their sample
/// variance, floored at `mu e^{-mu}` for predicted mean `mu` so that pairs
/// never seen jointly still yield a finite score.
pub fn verify_intensities(
    configs: &[PointConfiguration],
    spec: &KernelSpec,
    cells: &CellPartition,
    level: f64,
) -> Result<CorrelationReport> {
    if configs.len() < MIN_CONFIGURATIONS {
        return Err(Error::TooFewSamples {
            got: configs.len(),
            need: MIN_CONFIGURATIONS,
        });
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::invalid("level", "must lie in (0, 1)"));
    }
    let moments = cell_moments(spec, cells)?;
    let k = cells.len();
    let npairs = k * (k - 1) / 2;

    // integer accumulators: exact, hence independent of the merge order
    let zero = || (vec![0u64; k], vec![0u64; k], vec![0u64; npairs], vec![0u64; npairs]);
    let (sum, sum_sq, psum, psum_sq) = configs
        .par_iter()
        .fold(zero, |mut acc, cfg| {
            let c = cells.counts(cfg);
            let mut idx = 0;
            for a in 0..k {
                let ca = c[a] as u64;
                acc.0[a] += ca;
                acc.1[a] += ca * ca;
                for &cb in &c[a + 1..] {
                    let prod = ca * cb as u64;
                    acc.2[idx] += prod;
                    acc.3[idx] += prod * prod;
                    idx += 1;
                }
            }
            acc
        })
        .reduce(zero, |mut x, y| {
            for (a, b) in [(&mut x.0, &y.0), (&mut x.1, &y.1), (&mut x.2, &y.2), (&mut x.3, &y.3)] {
                a.iter_mut().zip(b).for_each(|(u, v)| *u += v);
            }
            x
        });

    let nf = configs.len() as f64;
    let sample_var = |s: u64, s2: u64| {
        let mean = s as f64 / nf;
        ((s2 as f64 - nf * mean * mean) / (nf - 1.0)).max(0.0)
    };
    let tests = k + npairs;
    let threshold = bonferroni_threshold(level, tests);
    let mut max_abs_z = 0.0f64;

    let mut cell_stats = Vec::with_capacity(k);
    for a in 0..k {
        let expected = moments.expected(a);
        let mean = sum[a] as f64 / nf;
        let var = moments.variance(a).max(f64::MIN_POSITIVE);
        let std_error = (var / nf).sqrt();
        let z = (mean - expected) / std_error;
        max_abs_z = max_abs_z.max(z.abs());
        cell_stats.push(CellStat {
            cell: a,
            expected,
            mean,
            std_error,
            empirical_std_error: (sample_var(sum[a], sum_sq[a]) / nf).sqrt(),
            z,
        });
    }

    let mut pair_stats = Vec::with_capacity(npairs);
    let mut idx = 0;
    for a in 0..k {
        for b in a + 1..k {
            let expected = moments.pair(a, b);
            let mean = psum[idx] as f64 / nf;
            let floor = expected.max(0.0) * (-expected.max(0.0)).exp();
            let var = sample_var(psum[idx], psum_sq[idx]).max(floor).max(f64::MIN_POSITIVE);
            let std_error = (var / nf).sqrt();
            let z = (mean - expected) / std_error;
            max_abs_z = max_abs_z.max(z.abs());
            pair_stats.push(PairStat {
                a,
                b,
                expected,
                mean,
                std_error,
                z,
            });
            idx += 1;
        }
    }

    Ok(CorrelationReport {
        samples: configs.len(),
        level,
        tests,
        threshold,
        cells: cell_stats,
        pairs: pair_stats,
        max_abs_z,
        pass: max_abs_z <= threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dpp::cells::CellPartition;
    use crate::orthopoly::{closed_form_basis_delta0, orthonormal_basis};
    use crate::rng::RngStream;
    use crate::sampling::SamplerKind;
    use crate::truncation::sample_truncation_ensemble;
    use crate::{HPParams, MHConfig};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn quarter_of_the_uniform_disc() {
        let spec = KernelSpec::finite(closed_form_basis_delta0(1, 1).unwrap());
        let cells = CellPartition::uniform(0.5, 1, 1).unwrap();
        let e = expected_cell_counts(&spec, &cells).unwrap();
        assert!((e[0] - 0.25).abs() < 1e-9);
    }

    #[test]
    fn full_partition_recovers_the_rank() {
        for (n, m, delta) in [(3, 1, c(0.0, 0.0)), (2, 2, c(1.0, 2.0)), (3, 1, c(-0.3, 0.0)), (2, 1, c(-0.3, 0.7))] {
            let spec = KernelSpec::finite(orthonormal_basis(n, m, delta).unwrap());
            let cells = CellPartition::uniform(1.0, 3, 4).unwrap();
            let e = expected_cell_counts(&spec, &cells).unwrap();
            assert!(e.iter().all(|&x| x >= 0.0));
            let total: f64 = e.iter().sum();
            assert!((total - n as f64).abs() < 1e-6, "n={n} delta={delta} total={total}");
        }
    }

    #[test]
    fn pair_intensities_are_nonnegative() {
        let spec = KernelSpec::finite(orthonormal_basis(3, 2, c(1.0, 2.0)).unwrap());
        let cells = CellPartition::uniform(0.9, 2, 4).unwrap();
        let mo = cell_moments(&spec, &cells).unwrap();
        for a in 0..cells.len() {
            assert!(mo.variance(a) >= -1e-12);
            for b in a + 1..cells.len() {
                assert!(mo.pair(a, b) >= -1e-12);
                assert!(mo.cross(a, b) >= -1e-12);
            }
        }
    }

    #[test]
    fn rejects_too_few_samples_and_infinite_kernels() {
        let spec = KernelSpec::finite(closed_form_basis_delta0(1, 1).unwrap());
        let cells = CellPartition::uniform(0.5, 1, 2).unwrap();
        let few = vec![PointConfiguration::new(vec![c(0.0, 0.0)]); 10];
        assert!(matches!(
            verify_intensities(&few, &spec, &cells, 1e-3),
            Err(Error::TooFewSamples { got: 10, .. })
        ));
        assert!(expected_cell_counts(&KernelSpec::Bergman { m: 1 }, &cells).is_err());
    }

    #[test]
    fn haar_truncations_pass_against_the_closed_form_kernel() {
        let p = HPParams::new(2, 1, c(0.0, 0.0)).unwrap();
        let configs =
            sample_truncation_ensemble(&p, 5000, SamplerKind::Haar, MHConfig::default(), &RngStream::new(11, 0))
                .unwrap();
        let spec = KernelSpec::finite(closed_form_basis_delta0(2, 1).unwrap());
        let cells = CellPartition::equal_mass(&spec, 0.95, 3, 4).unwrap();
        let report = verify_intensities(&configs, &spec, &cells, 1e-3).unwrap();
        assert!(report.pass, "max |z| = {}", report.max_abs_z);
        let e: Vec<f64> = report.cells.iter().map(|s| s.expected).collect();
        let spread = e.iter().cloned().fold(0.0, f64::max) / e.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(spread < 1.05, "equal-mass cells differ by {spread}");
    }
}
