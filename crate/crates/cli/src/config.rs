//! Format configuration files.
//!
//! One `key = value` pair per line; `#` starts a comment. Keys:
//!
//! | key          | required | values                                  |
//! |--------------|----------|-----------------------------------------|
//! | `exp_bits`   | yes      | 2..=11                                  |
//! | `sig_bits`   | yes      | 1..=52, with `1 + exp_bits + sig_bits <= 64` |
//! | `rounding`   | yes      | `RZ` or `RN`                            |
//! | `name`       | no       | `[A-Za-z0-9_.-]+`, default `e{E}m{S}`   |
//! | `subnormals` | no       | `gradual` (default) or `ftz`            |
//! | `lane_width` | no       | 8, 16, 32, 64, 128, 256, 512 or 1024    |

use std::fmt::Write as _;

use bfp_core::format::{MAX_EXP_BITS, MAX_SIG_BITS, MAX_TOTAL_BITS, MIN_EXP_BITS, MIN_SIG_BITS};
use bfp_core::lane::SUPPORTED_WIDTHS;
use bfp_core::{FormatSpec, Rounding, Subnormals};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, got `{text}`")]
    Malformed { line: usize, text: String },
    #[error("line {line}: unknown key `{key}` (known keys: {})", KNOWN_KEYS.join(", "))]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: `{key}` already set on line {first}")]
    Duplicate { line: usize, key: String, first: usize },
    #[error("line {line}: `{key} = {value}`: {reason}")]
    InvalidValue {
        line: usize,
        key: String,
        value: String,
        reason: String,
    },
    #[error("line {line}: `{key} = {value}` is out of range {min}..={max}")]
    OutOfRange {
        line: usize,
        key: String,
        value: i64,
        min: i64,
        max: i64,
    },
    #[error("line {line}: missing required key `{key}`")]
    MissingKey { line: usize, key: String },
}

impl ConfigError {
    pub fn line(&self) -> usize {
        match self {
            ConfigError::Malformed { line, .. }
            | ConfigError::UnknownKey { line, .. }
            | ConfigError::Duplicate { line, .. }
            | ConfigError::InvalidValue { line, .. }
            | ConfigError::OutOfRange { line, .. }
            | ConfigError::MissingKey { line, .. } => *line,
        }
    }
}

const KNOWN_KEYS: [&str; 6] = [
    "name",
    "exp_bits",
    "sig_bits",
    "rounding",
    "subnormals",
    "lane_width",
];

/// A parsed configuration file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigFile {
    pub spec: FormatSpec,
    /// `None` when the file leaves the choice to the environment.
    pub lane_width: Option<usize>,
}

struct Entry<'a> {
    line: usize,
    value: &'a str,
}

pub fn parse_config(text: &str) -> Result<ConfigFile, ConfigError> {
    let mut entries: [Option<Entry>; 6] = Default::default();
    let mut last_line = 0;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        last_line = line;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(ConfigError::Malformed {
                line,
                text: content.to_string(),
            });
        };
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() {
            return Err(ConfigError::Malformed {
                line,
                text: content.to_string(),
            });
        }
        let Some(slot) = KNOWN_KEYS.iter().position(|k| *k == key) else {
            return Err(ConfigError::UnknownKey {
                line,
                key: key.to_string(),
            });
        };
        if let Some(first) = &entries[slot] {
            return Err(ConfigError::Duplicate {
                line,
                key: key.to_string(),
                first: first.line,
            });
        }
        entries[slot] = Some(Entry { line, value });
    }
    let [name, exp_bits, sig_bits, rounding, subnormals, lane_width] = entries;
    let missing = |key: &str| ConfigError::MissingKey {
        line: last_line + 1,
        key: key.to_string(),
    };

    let exp_bits = exp_bits.ok_or_else(|| missing("exp_bits"))?;
    let e = parse_int(
        "exp_bits",
        &exp_bits,
        MIN_EXP_BITS as i64,
        MAX_EXP_BITS as i64,
    )?;
    let sig_bits = sig_bits.ok_or_else(|| missing("sig_bits"))?;
    let s_max = (MAX_SIG_BITS as i64).min(MAX_TOTAL_BITS as i64 - 1 - e);
    let s = parse_int("sig_bits", &sig_bits, MIN_SIG_BITS as i64, s_max)?;
    let rounding = rounding.ok_or_else(|| missing("rounding"))?;
    let mode: Rounding = rounding
        .value
        .parse()
        .map_err(|reason| invalid("rounding", &rounding, reason))?;

    let subnormals = match subnormals {
        Some(entry) => entry
            .value
            .parse::<Subnormals>()
            .map_err(|reason| invalid("subnormals", &entry, reason))?,
        None => Subnormals::Gradual,
    };
    let name = match name {
        Some(entry) => {
            let ok = !entry.value.is_empty()
                && entry
                    .value
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'));
            if !ok {
                return Err(invalid(
                    "name",
                    &entry,
                    "use letters, digits, `_`, `-` or `.`".to_string(),
                ));
            }
            entry.value.to_string()
        }
        None => default_name(e as u32, s as u32),
    };
    let lane_width = match lane_width {
        Some(entry) => Some(parse_lane_width(entry.value).map_err(|r| invalid("lane_width", &entry, r))?),
        None => None,
    };

    let spec = FormatSpec::new(&name, e as u32, s as u32, mode)
        .expect("bounds checked above")
        .with_subnormals(subnormals);
    Ok(ConfigFile { spec, lane_width })
}

/// Name used when the file has no `name` key.
pub fn default_name(exp_bits: u32, sig_bits: u32) -> String {
    format!("e{exp_bits}m{sig_bits}")
}

/// Validates a lane width against the supported set.
pub fn parse_lane_width(text: &str) -> Result<usize, String> {
    let supported = || {
        SUPPORTED_WIDTHS
            .iter()
            .map(|w| w.to_string())
            .collect::<Vec<_>>()
            .join(", ")
    };
    match text.parse::<usize>() {
        Ok(w) if SUPPORTED_WIDTHS.contains(&w) => Ok(w),
        _ => Err(format!("lane width must be one of {}", supported())),
    }
}

fn invalid(key: &str, entry: &Entry, reason: String) -> ConfigError {
    ConfigError::InvalidValue {
        line: entry.line,
        key: key.to_string(),
        value: entry.value.to_string(),
        reason,
    }
}

fn parse_int(key: &str, entry: &Entry, min: i64, max: i64) -> Result<i64, ConfigError> {
    let value: i64 = entry
        .value
        .parse()
        .map_err(|_| invalid(key, entry, "expected an integer".to_string()))?;
    if value < min || value > max {
        return Err(ConfigError::OutOfRange {
            line: entry.line,
            key: key.to_string(),
            value,
            min,
            max,
        });
    }
    Ok(value)
}

/// Canonical text for `config`; [`parse_config`] reads it back unchanged.
pub fn render_config(config: &ConfigFile) -> String {
    let spec = &config.spec;
    let mut out = String::new();
    writeln!(out, "name = {}", spec.name()).unwrap();
    writeln!(out, "exp_bits = {}", spec.exp_bits()).unwrap();
    writeln!(out, "sig_bits = {}", spec.sig_bits()).unwrap();
    writeln!(out, "rounding = {}", spec.rounding()).unwrap();
    writeln!(out, "subnormals = {}", spec.subnormals()).unwrap();
    if let Some(w) = config.lane_width {
        writeln!(out, "lane_width = {w}").unwrap();
    }
    out
}
