//! Flat `key = value` scenario files and command-line overrides.
//!
//! Keys are case-insensitive. `#` starts a comment. Unknown keys are
//! rejected. Precedence, lowest first: built-in defaults, the file, the
//! desk-scale preset, explicit flags.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use thiserror::Error;
use vfd_core::nodes::{FeedbackMode, PeMode};
use vfd_core::sim::{RelayLocation, ScenarioConfig, Scheme};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: expected key = value, got '{text}'")]
    Syntax { line: usize, text: String },
    #[error("unknown key '{0}'")]
    UnknownKey(String),
    #[error("{key}: invalid value '{value}': {reason}")]
    InvalidValue { key: String, value: String, reason: String },
    #[error("{key}: {message}")]
    Invalid { key: &'static str, message: String },
}

/// Recognised keys, in rendering order.
pub const KEYS: [&str; 13] = [
    "location",
    "snr",
    "l",
    "k",
    "n",
    "iter",
    "scheme",
    "realizations",
    "seed",
    "pathloss_exponent",
    "noiseless",
    "pe_mode",
    "feedback",
];

fn invalid(key: &str, value: &str, reason: impl ToString) -> ConfigError {
    ConfigError::InvalidValue {
        key: key.to_string(),
        value: value.to_string(),
        reason: reason.to_string(),
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value.trim().parse().map_err(|e| invalid(key, value, e))
}

fn parse_bool(key: &str, value: &str) -> Result<bool, ConfigError> {
    match value.trim().to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(invalid(key, value, "expected true or false")),
    }
}

fn round_grid(x: f64) -> f64 {
    (x * 1e9).round() / 1e9
}

/// `START:STEP:STOP` (inclusive) or a comma-separated list.
pub fn parse_snr_grid(value: &str) -> Result<Vec<f64>, ConfigError> {
    let key = "snr";
    let parts: Vec<&str> = value.split(':').collect();
    let grid = match parts.as_slice() {
        [start, step, stop] => {
            let (start, step, stop): (f64, f64, f64) =
                (parse_num(key, start)?, parse_num(key, step)?, parse_num(key, stop)?);
            if step.is_nan() || step <= 0.0 || stop < start {
                return Err(invalid(key, value, "need STEP > 0 and STOP >= START"));
            }
            let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
            (0..count).map(|i| round_grid(start + i as f64 * step)).collect()
        }
        [list] => list
            .split(',')
            .map(|v| parse_num::<f64>(key, v))
            .collect::<Result<Vec<_>, _>>()?,
        _ => return Err(invalid(key, value, "expected START:STEP:STOP or a comma list")),
    };
    if grid.iter().any(|g| !g.is_finite()) {
        return Err(invalid(key, value, "non-finite SNR"));
    }
    Ok(grid)
}

fn parse_pe_mode(key: &str, value: &str) -> Result<PeMode, ConfigError> {
    match value.trim().to_ascii_lowercase().as_str() {
        "estimated" => Ok(PeMode::Estimated),
        "genie" => Ok(PeMode::Genie),
        "zero" => Ok(PeMode::Zero),
        _ => Err(invalid(key, value, "expected estimated, genie or zero")),
    }
}

pub fn pe_mode_name(mode: PeMode) -> &'static str {
    match mode {
        PeMode::Estimated => "estimated",
        PeMode::Genie => "genie",
        PeMode::Zero => "zero",
    }
}

/// Applies one `key = value` pair.
pub fn apply(config: &mut ScenarioConfig, key: &str, value: &str) -> Result<(), ConfigError> {
    let key = key.trim().to_ascii_lowercase();
    let value = value.trim();
    match key.as_str() {
        "location" => config.relay_location = value.parse::<RelayLocation>().map_err(|e| invalid(&key, value, e))?,
        "snr" => config.snr_grid_db = parse_snr_grid(value)?,
        "l" => config.frames = parse_num(&key, value)?,
        "k" => config.info_bits = parse_num(&key, value)?,
        "n" => config.antennas = parse_num(&key, value)?,
        "iter" => config.iterations = parse_num(&key, value)?,
        "scheme" => {
            config.schemes = value
                .split(',')
                .map(|s| s.parse::<Scheme>().map_err(|e| invalid(&key, value, e)))
                .collect::<Result<Vec<_>, _>>()?
        }
        "realizations" => config.realizations = parse_num(&key, value)?,
        "seed" => config.base_seed = parse_num(&key, value)?,
        "pathloss_exponent" => config.pathloss_exponent = parse_num(&key, value)?,
        "noiseless" => config.noiseless = parse_bool(&key, value)?,
        "pe_mode" => {
            config.pe_mode = match value.to_ascii_lowercase().as_str() {
                "default" => None,
                _ => Some(parse_pe_mode(&key, value)?),
            }
        }
        "feedback" => {
            config.feedback = match value.to_ascii_lowercase().as_str() {
                "posterior" => FeedbackMode::Posterior,
                "extrinsic" => FeedbackMode::Extrinsic,
                _ => return Err(invalid(&key, value, "expected posterior or extrinsic")),
            }
        }
        _ => return Err(ConfigError::UnknownKey(key)),
    }
    Ok(())
}

/// Parses file contents into ordered `(key, value)` pairs.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>, ConfigError> {
    let mut pairs = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line: i + 1,
            text: raw.to_string(),
        })?;
        let key = key.trim().to_ascii_lowercase();
        if !KEYS.contains(&key.as_str()) {
            return Err(ConfigError::UnknownKey(key));
        }
        pairs.push((key, value.trim().to_string()));
    }
    Ok(pairs)
}

/// Checks ranges and attributes failures to the responsible key.
pub fn validate(config: &ScenarioConfig) -> Result<(), ConfigError> {
    let fail = |key, message: &str| {
        Err(ConfigError::Invalid {
            key,
            message: message.to_string(),
        })
    };
    if config.frames == 0 || !config.frames.is_multiple_of(2) {
        return fail("L", "L must be even and positive");
    }
    if config.info_bits == 0 {
        return fail("K", "K must be positive");
    }
    if config.antennas < 2 {
        return fail("N", "N must be at least 2");
    }
    if config.iterations == 0 {
        return fail("Iter", "Iter must be at least 1");
    }
    if config.realizations == 0 {
        return fail("realizations", "realizations must be at least 1");
    }
    if config.snr_grid_db.is_empty() {
        return fail("snr", "SNR grid is empty");
    }
    if config.schemes.is_empty() {
        return fail("scheme", "no scheme selected");
    }
    if !(config.pathloss_exponent > 0.0 && config.pathloss_exponent.is_finite()) {
        return fail("pathloss_exponent", "path-loss exponent must be positive");
    }
    config.validate().map_err(|e| ConfigError::Invalid {
        key: "scheme",
        message: e.to_string(),
    })
}

/// Command-line values that override the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub scheme: Option<String>,
    pub location: Option<String>,
    pub snr: Option<String>,
    pub realizations: Option<usize>,
    pub seed: Option<u64>,
    pub desk_scale: bool,
    pub noiseless: bool,
    pub pe_mode: Option<String>,
}

/// Builds a validated configuration from an optional file and overrides.
pub fn parse_config(path: Option<&Path>, overrides: &Overrides) -> Result<ScenarioConfig, ConfigError> {
    let mut config = ScenarioConfig::default();
    if let Some(path) = path {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        for (k, v) in parse_pairs(&text)? {
            apply(&mut config, &k, &v)?;
        }
    }
    if overrides.desk_scale {
        config = config.desk_scale();
    }
    let flags = [
        ("scheme", overrides.scheme.clone()),
        ("location", overrides.location.clone()),
        ("snr", overrides.snr.clone()),
        ("realizations", overrides.realizations.map(|v| v.to_string())),
        ("seed", overrides.seed.map(|v| v.to_string())),
        ("pe_mode", overrides.pe_mode.clone()),
        ("noiseless", overrides.noiseless.then(|| "true".to_string())),
    ];
    for (key, value) in flags {
        if let Some(value) = value {
            apply(&mut config, key, &value)?;
        }
    }
    validate(&config)?;
    Ok(config)
}

/// Key/value echo of a configuration; parsing it back reproduces `config`.
pub fn render(config: &ScenarioConfig) -> BTreeMap<String, String> {
    let join = |items: Vec<String>| items.join(",");
    let values = [
        config.relay_location.to_string(),
        join(config.snr_grid_db.iter().map(|s| s.to_string()).collect()),
        config.frames.to_string(),
        config.info_bits.to_string(),
        config.antennas.to_string(),
        config.iterations.to_string(),
        join(config.schemes.iter().map(|s| s.name().to_string()).collect()),
        config.realizations.to_string(),
        config.base_seed.to_string(),
        config.pathloss_exponent.to_string(),
        config.noiseless.to_string(),
        config.pe_mode.map_or("default", pe_mode_name).to_string(),
        match config.feedback {
            FeedbackMode::Posterior => "posterior",
            FeedbackMode::Extrinsic => "extrinsic",
        }
        .to_string(),
    ];
    KEYS.iter().map(|k| k.to_string()).zip(values).collect()
}

/// Inverse of [`render`].
pub fn from_rendered(pairs: &BTreeMap<String, String>) -> Result<ScenarioConfig, ConfigError> {
    let mut config = ScenarioConfig::default();
    for (k, v) in pairs {
        apply(&mut config, k, v)?;
    }
    validate(&config)?;
    Ok(config)
}
