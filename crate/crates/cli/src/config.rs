//! Strict JSON experiment configs.
//!
//! A config is a flat JSON object. Keys not listed in [`RawConfig`] are
//! rejected. Checks run in a fixed order: the exponent range, then sampler
//! compatibility, then command-specific required fields, then value ranges.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use hplab_core::dpp::{MAX_GAUGE_POINTS, MIN_CONFIGURATIONS};
use hplab_core::params::check_delta;
use hplab_core::{Complex64, HPParams, MHConfig, SamplerKind};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_LEVEL: f64 = 1e-3;
pub const DEFAULT_OUTPUT_DIR: &str = "hp-lab-out";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Command {
    #[serde(rename = "sample")]
    Sample,
    #[serde(rename = "basis")]
    Basis,
    #[serde(rename = "verify-dpp")]
    VerifyDpp,
    #[serde(rename = "gauge-check")]
    GaugeCheck,
    #[serde(rename = "converge")]
    Converge,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Sample => "sample",
            Command::Basis => "basis",
            Command::VerifyDpp => "verify-dpp",
            Command::GaugeCheck => "gauge-check",
            Command::Converge => "converge",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        match s {
            "sample" => Ok(Command::Sample),
            "basis" => Ok(Command::Basis),
            "verify-dpp" => Ok(Command::VerifyDpp),
            "gauge-check" => Ok(Command::GaugeCheck),
            "converge" => Ok(Command::Converge),
            other => Err(ConfigError::UnknownCommand(other.to_string())),
        }
    }
}

/// How the disc is cut into cells for intensity checks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellKind {
    /// Equal predicted expected count per cell.
    EqualMass,
    /// Equal radial and angular steps.
    Uniform,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellsConfig {
    #[serde(default = "CellsConfig::default_kind")]
    pub kind: CellKind,
    #[serde(default = "CellsConfig::default_r_max")]
    pub r_max: f64,
    #[serde(default = "CellsConfig::default_rings")]
    pub rings: usize,
    #[serde(default = "CellsConfig::default_sectors")]
    pub sectors: usize,
}

impl CellsConfig {
    fn default_kind() -> CellKind {
        CellKind::EqualMass
    }
    fn default_r_max() -> f64 {
        0.95
    }
    fn default_rings() -> usize {
        4
    }
    fn default_sectors() -> usize {
        6
    }
}

impl Default for CellsConfig {
    fn default() -> Self {
        Self {
            kind: Self::default_kind(),
            r_max: Self::default_r_max(),
            rings: Self::default_rings(),
            sectors: Self::default_sectors(),
        }
    }
}

/// The config document exactly as written.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub command: Option<Command>,
    pub n: Option<usize>,
    pub m: Option<usize>,
    /// `[re, im]`.
    pub delta: Option<[f64; 2]>,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub sampler: Option<SamplerKind>,
    pub mh: Option<MHConfig>,
    pub cells: Option<CellsConfig>,
    pub output_dir: Option<PathBuf>,
    pub level: Option<f64>,
    /// gauge-check: number of random tuples.
    pub tuples: Option<usize>,
    /// gauge-check: largest tuple size.
    pub max_points: Option<usize>,
    /// gauge-check: tuples are uniform on the disc of this radius.
    pub tuple_radius: Option<f64>,
    /// gauge-check: largest accepted relative error.
    pub tolerance: Option<f64>,
    /// converge: truncation orders.
    pub n_list: Option<Vec<usize>>,
    /// converge: modulus of the outermost grid point.
    pub grid_radius: Option<f64>,
}

/// A validated config with every default filled in.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub command: Command,
    pub n: Option<usize>,
    pub m: usize,
    pub delta: [f64; 2],
    pub samples: Option<usize>,
    pub seed: u64,
    pub sampler: SamplerKind,
    pub mh: MHConfig,
    pub cells: CellsConfig,
    pub output_dir: PathBuf,
    pub level: f64,
    pub tuples: usize,
    pub max_points: usize,
    pub tuple_radius: f64,
    pub tolerance: f64,
    pub n_list: Vec<usize>,
    pub grid_radius: f64,
}

impl ExperimentConfig {
    pub fn delta(&self) -> Complex64 {
        Complex64::new(self.delta[0], self.delta[1])
    }

    /// Size parameters; only meaningful for commands that require `n`.
    pub fn params(&self) -> HPParams {
        HPParams::new(self.n.unwrap_or(1), self.m, self.delta()).expect("validated at parse time")
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config is not valid JSON: {0}")]
    Json(String),
    #[error("config rejected: {0}")]
    Schema(String),
    #[error("unknown command `{0}`")]
    UnknownCommand(String),
    #[error("field `command`: config says `{config}` but `{cli}` was requested")]
    CommandMismatch { config: Command, cli: Command },
    #[error("field `delta`: Re(delta) must exceed -1/2 (got {0})")]
    DeltaRange(f64),
    #[error("field `sampler`: hp_rejection requires Re(delta) >= 0 (got {0})")]
    SamplerDelta(f64),
    #[error("field `{field}` is required for command `{command}`")]
    Missing { field: &'static str, command: Command },
    #[error("field `{field}`: {reason}")]
    Invalid { field: &'static str, reason: String },
    #[error("cannot read config {path}: {reason}")]
    Read { path: String, reason: String },
}

impl ConfigError {
    /// Stable identifier, one per failure kind.
    pub fn code(&self) -> &'static str {
        match self {
            ConfigError::Json(_) => "E_JSON",
            ConfigError::Schema(_) => "E_SCHEMA",
            ConfigError::UnknownCommand(_) => "E_UNKNOWN_COMMAND",
            ConfigError::CommandMismatch { .. } => "E_COMMAND_MISMATCH",
            ConfigError::DeltaRange(_) => "E_DELTA_RANGE",
            ConfigError::SamplerDelta(_) => "E_SAMPLER_DELTA",
            ConfigError::Missing { .. } => "E_MISSING_FIELD",
            ConfigError::Invalid { .. } => "E_INVALID_VALUE",
            ConfigError::Read { .. } => "E_READ",
        }
    }
}

fn invalid(field: &'static str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { field, reason: reason.into() }
}

/// Parses and validates a config document.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| ConfigError::Json(e.to_string()))?;
    let raw: RawConfig = serde_json::from_value(value).map_err(|e| ConfigError::Schema(e.to_string()))?;
    validate(raw)
}

pub fn validate(raw: RawConfig) -> Result<ExperimentConfig, ConfigError> {
    let delta = raw.delta.unwrap_or([0.0, 0.0]);
    let dz = Complex64::new(delta[0], delta[1]);
    if !dz.re.is_finite() || !dz.im.is_finite() {
        return Err(invalid("delta", "must be finite"));
    }
    if check_delta(dz).is_err() {
        return Err(ConfigError::DeltaRange(dz.re));
    }
    let sampler = raw.sampler.unwrap_or(if dz.re >= 0.0 { SamplerKind::HpRejection } else { SamplerKind::HpMh });
    if sampler == SamplerKind::HpRejection && dz.re < 0.0 {
        return Err(ConfigError::SamplerDelta(dz.re));
    }

    let command = raw.command.ok_or(ConfigError::Schema("field `command` is required".into()))?;
    let need = |field: &'static str, present: bool| {
        if present {
            Ok(())
        } else {
            Err(ConfigError::Missing { field, command })
        }
    };
    match command {
        Command::Sample | Command::VerifyDpp => {
            need("n", raw.n.is_some())?;
            need("m", raw.m.is_some())?;
            need("delta", raw.delta.is_some())?;
            need("samples", raw.samples.is_some())?;
        }
        Command::Basis => {
            need("n", raw.n.is_some())?;
            need("m", raw.m.is_some())?;
            need("delta", raw.delta.is_some())?;
        }
        Command::GaugeCheck | Command::Converge => {
            need("m", raw.m.is_some())?;
            need("delta", raw.delta.is_some())?;
        }
    }

    let m = raw.m.expect("required above");
    if m == 0 {
        return Err(invalid("m", "must be at least 1"));
    }
    if let Some(n) = raw.n {
        if n == 0 {
            return Err(invalid("n", "must be at least 1"));
        }
        if matches!(command, Command::Basis | Command::VerifyDpp) && n > hplab_core::weights::DEFAULT_GRAM_CAP {
            return Err(invalid("n", format!("must not exceed {}", hplab_core::weights::DEFAULT_GRAM_CAP)));
        }
    }
    if let Some(s) = raw.samples {
        if s == 0 {
            return Err(invalid("samples", "must be at least 1"));
        }
        if command == Command::VerifyDpp && s < MIN_CONFIGURATIONS {
            return Err(invalid("samples", format!("verify-dpp needs at least {MIN_CONFIGURATIONS}")));
        }
    }
    let mh = raw.mh.unwrap_or_default();
    if mh.thinning == 0 {
        return Err(invalid("mh", "thinning must be at least 1"));
    }
    let level = raw.level.unwrap_or(DEFAULT_LEVEL);
    if !(level > 0.0 && level < 1.0) {
        return Err(invalid("level", "must lie in (0, 1)"));
    }
    let cells = raw.cells.unwrap_or_default();
    if !(cells.r_max > 0.0 && cells.r_max <= 1.0) || cells.rings == 0 || cells.sectors == 0 {
        return Err(invalid("cells", "need 0 < r_max <= 1 and at least one ring and sector"));
    }
    let max_points = raw.max_points.unwrap_or(MAX_GAUGE_POINTS);
    if max_points == 0 || max_points > MAX_GAUGE_POINTS {
        return Err(invalid("max_points", format!("must lie in 1..={MAX_GAUGE_POINTS}")));
    }
    let tuple_radius = raw.tuple_radius.unwrap_or(0.95);
    if !(tuple_radius > 0.0 && tuple_radius < 1.0) {
        return Err(invalid("tuple_radius", "must lie in (0, 1)"));
    }
    let tolerance = raw.tolerance.unwrap_or(1e-10);
    if !(tolerance > 0.0) {
        return Err(invalid("tolerance", "must be positive"));
    }
    let n_list = raw.n_list.unwrap_or_else(|| vec![10, 20, 40]);
    if n_list.is_empty() || n_list.contains(&0) || n_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("n_list", "must be a non-empty strictly increasing list of positive orders"));
    }
    if n_list.iter().any(|&n| n > hplab_core::weights::DEFAULT_GRAM_CAP) {
        return Err(invalid("n_list", format!("orders must not exceed {}", hplab_core::weights::DEFAULT_GRAM_CAP)));
    }
    let grid_radius = raw.grid_radius.unwrap_or(0.6);
    if !(grid_radius > 0.0 && grid_radius <= hplab_core::dpp::GRID_RADIUS_LIMIT) {
        return Err(invalid(
            "grid_radius",
            format!("must lie in (0, {}]", hplab_core::dpp::GRID_RADIUS_LIMIT),
        ));
    }

    Ok(ExperimentConfig {
        command,
        n: raw.n,
        m,
        delta,
        samples: raw.samples,
        seed: raw.seed.unwrap_or(0),
        sampler,
        mh,
        cells,
        output_dir: raw.output_dir.unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR)),
        level,
        tuples: raw.tuples.unwrap_or(100),
        max_points,
        tuple_radius,
        tolerance,
        n_list,
        grid_radius,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_sample_config_gets_defaults() {
        let c = parse_config(r#"{"command":"sample","n":2,"m":1,"delta":[0,0],"samples":1000,"seed":7}"#).unwrap();
        assert_eq!(c.sampler, SamplerKind::HpRejection);
        assert_eq!(c.mh, MHConfig::new(1000, 5).unwrap());
        assert_eq!(c.level, 1e-3);
        assert_eq!(c.seed, 7);
        assert_eq!(c.samples, Some(1000));
    }

    #[test]
    fn delta_range_checked_before_missing_fields() {
        let e = parse_config(r#"{"command":"sample","delta":[-0.6,0]}"#).unwrap_err();
        assert_eq!(e.code(), "E_DELTA_RANGE");
        assert!(e.to_string().contains("Re(delta) must exceed -1/2"));
    }

    #[test]
    fn rejection_needs_nonnegative_real_part() {
        let e = parse_config(r#"{"command":"sample","delta":[-0.3,0],"sampler":"hp_rejection"}"#).unwrap_err();
        assert_eq!(e.code(), "E_SAMPLER_DELTA");
        assert!(e.to_string().contains("sampler"));
    }

    #[test]
    fn negative_delta_defaults_to_mh() {
        let c = parse_config(r#"{"command":"sample","n":1,"m":1,"delta":[-0.3,0],"samples":5}"#).unwrap();
        assert_eq!(c.sampler, SamplerKind::HpMh);
    }

    #[test]
    fn unknown_keys_rejected() {
        let e = parse_config(r#"{"command":"sample","n":2,"m":1,"delta":[0,0],"samples":10,"sead":7}"#).unwrap_err();
        assert_eq!(e.code(), "E_SCHEMA");
        assert!(e.to_string().contains("sead"));
        let e = parse_config(r#"{"command":"sample","n":2,"m":1,"delta":[0,0],"samples":10,"mh":{"burn":1}}"#)
            .unwrap_err();
        assert_eq!(e.code(), "E_SCHEMA");
    }

    #[test]
    fn missing_field_is_named() {
        let e = parse_config(r#"{"command":"sample","m":1,"delta":[0,0],"samples":10}"#).unwrap_err();
        assert_eq!(e.code(), "E_MISSING_FIELD");
        assert!(e.to_string().contains("`n`"));
        let e = parse_config(r#"{"command":"converge","delta":[0,0]}"#).unwrap_err();
        assert!(e.to_string().contains("`m`"));
    }

    #[test]
    fn error_codes_distinct() {
        let errors = [
            parse_config("{").unwrap_err(),
            parse_config(r#"{"command":"bogus"}"#).unwrap_err(),
            parse_config(r#"{"command":"sample","delta":[-0.6,0]}"#).unwrap_err(),
            parse_config(r#"{"command":"sample","delta":[-0.3,0],"sampler":"hp_rejection"}"#).unwrap_err(),
            parse_config(r#"{"command":"sample"}"#).unwrap_err(),
            parse_config(r#"{"command":"sample","n":0,"m":1,"delta":[0,0],"samples":3}"#).unwrap_err(),
        ];
        let mut codes: Vec<_> = errors.iter().map(|e| e.code()).collect();
        codes.sort();
        codes.dedup();
        assert_eq!(codes.len(), errors.len());
    }

    #[test]
    fn value_ranges() {
        let base = r#""command":"verify-dpp","n":2,"m":1,"delta":[0,0]"#;
        assert!(parse_config(&format!("{{{base},\"samples\":999}}")).is_err());
        assert!(parse_config(&format!("{{{base},\"samples\":1000,\"level\":1.5}}")).is_err());
        assert!(parse_config(&format!("{{{base},\"samples\":1000,\"cells\":{{\"rings\":0}}}}")).is_err());
        let c = parse_config(&format!("{{{base},\"samples\":1000,\"cells\":{{\"kind\":\"uniform\"}}}}")).unwrap();
        assert_eq!(c.cells.kind, CellKind::Uniform);
        assert!(parse_config(r#"{"command":"converge","m":1,"delta":[0,0],"n_list":[20,10]}"#).is_err());
        assert!(parse_config(r#"{"command":"converge","m":1,"delta":[0,0],"grid_radius":0.9}"#).is_err());
        assert!(parse_config(r#"{"command":"gauge-check","m":1,"delta":[0,0],"max_points":13}"#).is_err());
    }
}
