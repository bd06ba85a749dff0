//! Pipelines behind each command.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use hplab_core::dpp::{
    convergence_profile, default_grid, gauge_identity_check, random_tuple, sample_projection_ensemble,
    verify_intensities, write_convergence_csv, CellPartition, GaugeCheck,
};
use hplab_core::orthopoly::{leading_coefficients, orthonormal_basis};
use hplab_core::stats::chi_square_two_sample;
use hplab_core::truncation::sample_truncation_ensemble;
use hplab_core::weights::gram_matrix;
use hplab_core::{format_f64, KernelSpec, PointConfiguration, PolynomialBasis, RngStream};
use rand::Rng;
use serde_json::json;
use thiserror::Error;

use crate::config::{CellKind, Command, ExperimentConfig};
use crate::manifest::{describe_file, verify_outputs, RunManifest, StageFailure, StageTiming, MANIFEST_FILE};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_STATISTICAL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

pub const REPORT_FILE: &str = "report.json";

/// A pipeline error tagged with the stage that raised it.
#[derive(Debug, Error)]
pub enum StageError {
    #[error("stage `{stage}`: {source}")]
    Core {
        stage: &'static str,
        #[source]
        source: hplab_core::Error,
    },
    #[error("stage `{stage}`: {source}")]
    Io {
        stage: &'static str,
        #[source]
        source: io::Error,
    },
    #[error("stage `{stage}`: {message}")]
    Other { stage: &'static str, message: String },
}

impl StageError {
    pub fn stage(&self) -> &'static str {
        match self {
            StageError::Core { stage, .. } | StageError::Io { stage, .. } | StageError::Other { stage, .. } => stage,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            StageError::Core { source, .. } if source.is_numerical() => EXIT_NUMERICAL,
            StageError::Core {
                source: hplab_core::Error::NotUnitary { .. },
                ..
            } => EXIT_NUMERICAL,
            StageError::Other { .. } => EXIT_NUMERICAL,
            _ => EXIT_CONFIG,
        }
    }
}

trait Stage<T> {
    fn at(self, stage: &'static str) -> Result<T, StageError>;
}

impl<T> Stage<T> for hplab_core::Result<T> {
    fn at(self, stage: &'static str) -> Result<T, StageError> {
        self.map_err(|source| StageError::Core { stage, source })
    }
}

impl<T> Stage<T> for io::Result<T> {
    fn at(self, stage: &'static str) -> Result<T, StageError> {
        self.map_err(|source| StageError::Io { stage, source })
    }
}

struct Pipeline {
    dir: PathBuf,
    stages: Vec<StageTiming>,
    outputs: Vec<String>,
}

/// What a finished pipeline reports back.
struct Verdict {
    pass: bool,
    /// Exit code when `pass` is false.
    failure_code: i32,
    summary: String,
    report: serde_json::Value,
}

impl Pipeline {
    fn timed<T>(&mut self, stage: &'static str, f: impl FnOnce() -> Result<T, StageError>) -> Result<T, StageError> {
        let t = Instant::now();
        let out = f();
        self.stages.push(StageTiming {
            stage: stage.to_string(),
            seconds: t.elapsed().as_secs_f64(),
        });
        out
    }

    /// Single writer per file: the whole file is produced here, in order.
    fn write(
        &mut self,
        stage: &'static str,
        name: &str,
        body: impl FnOnce(&mut BufWriter<File>) -> io::Result<()>,
    ) -> Result<(), StageError> {
        let mut w = BufWriter::new(File::create(self.dir.join(name)).at(stage)?);
        body(&mut w).at(stage)?;
        w.flush().at(stage)?;
        self.outputs.push(name.to_string());
        Ok(())
    }
}

/// Points CSV: `sample_index,point_index,re,im`, one row per point.
pub fn write_points_csv<W: Write>(configs: &[PointConfiguration], w: &mut W) -> io::Result<()> {
    writeln!(w, "sample_index,point_index,re,im")?;
    for (s, cfg) in configs.iter().enumerate() {
        for (p, z) in cfg.iter().enumerate() {
            writeln!(w, "{s},{p},{},{}", format_f64(z.re), format_f64(z.im))?;
        }
    }
    Ok(())
}

fn partition(config: &ExperimentConfig, spec: &KernelSpec) -> hplab_core::Result<CellPartition> {
    let c = config.cells;
    match c.kind {
        CellKind::EqualMass => CellPartition::equal_mass(spec, c.r_max, c.rings, c.sectors),
        CellKind::Uniform => CellPartition::uniform(c.r_max, c.rings, c.sectors),
    }
}

fn build_basis(p: &mut Pipeline, config: &ExperimentConfig) -> Result<PolynomialBasis, StageError> {
    let params = config.params();
    p.timed("basis", || orthonormal_basis(params.n, params.m, params.delta).at("basis"))
}

fn sample(p: &mut Pipeline, config: &ExperimentConfig) -> Result<Verdict, StageError> {
    let params = config.params();
    let count = config.samples.expect("validated");
    let configs = p.timed("sample", || {
        sample_truncation_ensemble(&params, count, config.sampler, config.mh, &RngStream::new(config.seed, 0))
            .at("sample")
    })?;
    p.write("write", "points.csv", |w| write_points_csv(&configs, w))?;
    let radial: f64 = configs.iter().map(|c| c.radial_moment()).sum::<f64>() / count as f64;
    let max_modulus = configs.iter().map(|c| c.max_modulus()).fold(0.0, f64::max);
    Ok(Verdict {
        pass: true,
        failure_code: EXIT_PASS,
        summary: format!("{count} configurations of {} points", params.n),
        report: json!({
            "samples": count,
            "points_per_sample": params.n,
            "mean_radial_moment": radial,
            "max_modulus": max_modulus,
        }),
    })
}

fn basis(p: &mut Pipeline, config: &ExperimentConfig) -> Result<Verdict, StageError> {
    let params = config.params();
    let b = build_basis(p, config)?;
    let residual = p.timed("residual", || {
        let gram = gram_matrix(params.n, params.m, params.delta).at("residual")?;
        Ok(b.orthonormality_residual(&gram))
    })?;
    p.write("write", "basis.csv", |w| b.write_csv(w))?;
    Ok(Verdict {
        pass: true,
        failure_code: EXIT_PASS,
        summary: format!("{} polynomials, orthonormality residual {residual:e}", params.n),
        report: json!({
            "n": params.n,
            "orthonormality_residual": residual,
            "leading_coefficients": leading_coefficients(&b),
        }),
    })
}

fn verify_dpp(p: &mut Pipeline, config: &ExperimentConfig) -> Result<Verdict, StageError> {
    let params = config.params();
    let count = config.samples.expect("validated");
    let b = build_basis(p, config)?;
    let spec = KernelSpec::finite(b.clone());
    let cells = p.timed("cells", || partition(config, &spec).at("cells"))?;
    let truncation = p.timed("sample_truncation", || {
        sample_truncation_ensemble(&params, count, config.sampler, config.mh, &RngStream::new(config.seed, 0))
            .at("sample_truncation")
    })?;
    let dpp = p.timed("sample_dpp", || {
        sample_projection_ensemble(&b, count, &RngStream::new(config.seed, 1)).at("sample_dpp")
    })?;
    let (rt, rd, two) = p.timed("verify", || {
        let rt = verify_intensities(&truncation, &spec, &cells, config.level).at("verify")?;
        let rd = verify_intensities(&dpp, &spec, &cells, config.level).at("verify")?;
        let pooled = |cs: &[PointConfiguration]| {
            let mut h = vec![0u64; cells.len() + 1];
            for c in cs {
                for (i, k) in cells.counts_with_overflow(c).into_iter().enumerate() {
                    h[i] += k as u64;
                }
            }
            h
        };
        Ok((rt, rd, chi_square_two_sample(&pooled(&truncation), &pooled(&dpp))))
    })?;
    p.write("write", "basis.csv", |w| b.write_csv(w))?;
    p.write("write", "points_truncation.csv", |w| write_points_csv(&truncation, w))?;
    p.write("write", "points_dpp.csv", |w| write_points_csv(&dpp, w))?;
    let two_pass = two.passes(config.level);
    let pass = rt.pass && rd.pass && two_pass;
    Ok(Verdict {
        pass,
        failure_code: EXIT_STATISTICAL,
        summary: format!(
            "truncation {} (max |z| {:.3}), projection DPP {} (max |z| {:.3}), two-sample p {:.3e}; threshold {:.3}",
            if rt.pass { "pass" } else { "fail" },
            rt.max_abs_z,
            if rd.pass { "pass" } else { "fail" },
            rd.max_abs_z,
            two.p_value,
            rt.threshold
        ),
        report: json!({
            "cells": cells,
            "truncation": rt,
            "projection_dpp": rd,
            "two_sample": {
                "statistic": two.statistic,
                "dof": two.dof,
                "p_value": two.p_value,
                "pass": two_pass,
            },
        }),
    })
}

fn gauge_check(p: &mut Pipeline, config: &ExperimentConfig) -> Result<Verdict, StageError> {
    use rayon::prelude::*;
    let root = RngStream::new(config.seed, 0);
    let checks: Vec<(Vec<hplab_core::Complex64>, GaugeCheck)> = p.timed("gauge", || {
        (0..config.tuples)
            .into_par_iter()
            .map(|i| {
                let mut rng = root.substream(i as u64);
                let k = rng.gen_range(1..=config.max_points);
                let pts = random_tuple(k, config.tuple_radius, &mut rng);
                let g = gauge_identity_check(&pts, config.m, config.delta()).at("gauge")?;
                Ok((pts, g))
            })
            .collect()
    })?;
    p.write("write", "gauge.csv", |w| {
        writeln!(w, "tuple_index,size,lhs,rhs,rel_error")?;
        for (i, (pts, g)) in checks.iter().enumerate() {
            writeln!(w, "{i},{},{},{},{}", pts.len(), format_f64(g.lhs), format_f64(g.rhs), format_f64(g.rel_error))?;
        }
        Ok(())
    })?;
    let max_rel = checks.iter().map(|(_, g)| g.rel_error).fold(0.0, f64::max);
    let degenerate = checks.iter().filter(|(_, g)| g.degenerate).count();
    let pass = max_rel <= config.tolerance;
    Ok(Verdict {
        pass,
        failure_code: EXIT_NUMERICAL,
        summary: format!("{} tuples, max relative error {max_rel:e} (tolerance {:e})", checks.len(), config.tolerance),
        report: json!({
            "tuples": checks.len(),
            "max_relative_error": max_rel,
            "tolerance": config.tolerance,
            "degenerate_tuples": degenerate,
        }),
    })
}

fn converge(p: &mut Pipeline, config: &ExperimentConfig) -> Result<Verdict, StageError> {
    let grid = default_grid(config.grid_radius);
    let rows = p.timed("converge", || {
        convergence_profile(config.m, config.delta(), &config.n_list, &grid).at("converge")
    })?;
    p.write("write", "convergence.csv", |w| write_convergence_csv(&rows, w))?;
    let decreasing = rows.windows(2).all(|w| w[1].sup_error < w[0].sup_error);
    let last = rows.last().expect("n_list is non-empty");
    Ok(Verdict {
        pass: decreasing,
        failure_code: EXIT_NUMERICAL,
        summary: format!(
            "sup error {} over n = {:?}; relative error {:e} at n = {}",
            if decreasing { "strictly decreasing" } else { "NOT strictly decreasing" },
            config.n_list,
            last.rel_error,
            last.n
        ),
        report: json!({ "rows": rows, "strictly_decreasing": decreasing }),
    })
}

/// Runs `config` in `dir` (created if needed) and writes the manifest.
///
/// With `workers`, work runs on a dedicated pool of that many threads.
/// Outputs do not depend on the pool size.
pub fn run(config: &ExperimentConfig, dir: &Path, workers: Option<usize>) -> Result<RunManifest, StageError> {
    let started = Instant::now();
    fs::create_dir_all(dir).at("setup")?;
    let mut p = Pipeline {
        dir: dir.to_path_buf(),
        stages: Vec::new(),
        outputs: Vec::new(),
    };
    let body = |p: &mut Pipeline| match config.command {
        Command::Sample => sample(p, config),
        Command::Basis => basis(p, config),
        Command::VerifyDpp => verify_dpp(p, config),
        Command::GaugeCheck => gauge_check(p, config),
        Command::Converge => converge(p, config),
    };
    let result = match workers {
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map_err(|e| StageError::Other {
                    stage: "setup",
                    message: e.to_string(),
                })?;
            pool.install(|| body(&mut p))
        }
        None => body(&mut p),
    };

    let (pass, exit_code, summary, failure) = match &result {
        Ok(v) => {
            let report = serde_json::to_vec_pretty(&json!({
                "command": config.command.name(),
                "pass": v.pass,
                "summary": v.summary,
                "results": v.report,
            }))
            .expect("report serializes");
            p.write("write", REPORT_FILE, |w| w.write_all(&report))?;
            (v.pass, if v.pass { EXIT_PASS } else { v.failure_code }, v.summary.clone(), None)
        }
        Err(e) => (
            false,
            e.exit_code(),
            e.to_string(),
            Some(StageFailure {
                stage: e.stage().to_string(),
                message: e.to_string(),
            }),
        ),
    };

    let outputs = p
        .outputs
        .iter()
        .map(|name| describe_file(dir, name))
        .collect::<io::Result<Vec<_>>>()
        .at("manifest")?;
    let manifest = RunManifest {
        command: config.command.name().to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: serde_json::to_value(config).expect("config serializes"),
        workers,
        wall_clock_seconds: started.elapsed().as_secs_f64(),
        stages: p.stages,
        outputs,
        pass,
        exit_code,
        summary,
        failure,
    };
    let text = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
    fs::write(dir.join(MANIFEST_FILE), text).at("manifest")?;
    let bad = verify_outputs(dir, &manifest);
    if !bad.is_empty() {
        return Err(StageError::Other {
            stage: "manifest",
            message: format!("checksum mismatch after write: {bad:?}"),
        });
    }
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use hplab_core::Complex64;

    #[test]
    fn points_csv_layout() {
        let cfgs = vec![
            PointConfiguration::new(vec![Complex64::new(0.5, -0.25)]),
            PointConfiguration::new(vec![Complex64::new(0.0, 1.0 / 3.0), Complex64::new(-0.1, 0.0)]),
        ];
        let mut out = Vec::new();
        write_points_csv(&cfgs, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "sample_index,point_index,re,im");
        assert_eq!(lines[1], "0,0,5.0000000000000000e-1,-2.5000000000000000e-1");
        assert_eq!(lines[2], "1,0,0.0000000000000000e0,3.3333333333333331e-1");
        assert_eq!(lines.len(), 4);
    }

    #[test]
    fn numerical_errors_map_to_exit_three() {
        let e = StageError::Core {
            stage: "basis",
            source: hplab_core::Error::Cholesky { pivot: 3, condition: 1e17 },
        };
        assert_eq!(e.exit_code(), EXIT_NUMERICAL);
        assert!(e.to_string().starts_with("stage `basis`"));
        let e = StageError::Core {
            stage: "verify",
            source: hplab_core::Error::TooFewSamples { got: 3, need: 1000 },
        };
        assert_eq!(e.exit_code(), EXIT_CONFIG);
    }
}
