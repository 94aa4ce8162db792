//! Run configuration, checkpoints and the command implementations behind the
//! `primegap` binary.
//!
//! Settings are layered: built-in defaults, then a flat `key = value` config
//! file, then `PRIMEGAP_*` environment variables, then command-line flags.

mod checkpoint;
mod commands;
mod report;

pub use checkpoint::{Checkpoint, CHECKPOINT_VERSION};
pub use commands::*;
pub use report::*;

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::analytic::Constants;
use crate::error::{Error, Result};
use crate::sieve::{default_workers, SievePlan, DEFAULT_SEGMENT_SIZE, MAX_LIMIT, MIN_SEGMENT_SIZE};

/// Prefix of the environment overrides, e.g. `PRIMEGAP_LIMIT=1e7`.
pub const ENV_PREFIX: &str = "PRIMEGAP_";

/// Process exit status of a command.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Exit {
    Pass = 0,
    Violation = 1,
    Usage = 2,
}

impl Exit {
    pub fn code(self) -> i32 {
        self as i32
    }

    pub fn from_pass(passed: bool) -> Self {
        if passed {
            Exit::Pass
        } else {
            Exit::Violation
        }
    }
}

/// Encoding of record files.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.extension())
    }
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::Invalid(format!("format must be csv or json, got '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub limit: u64,
    pub c: f64,
    #[serde(rename = "B")]
    pub b: f64,
    #[serde(rename = "K_all")]
    pub k_all: f64,
    pub segment_size: u64,
    pub workers: usize,
    /// Directory receiving every output file.
    pub output_path: PathBuf,
    pub format: Format,
    pub checkpoint_path: Option<PathBuf>,
    /// Continue from `checkpoint_path` instead of starting over.
    pub resume: bool,
    /// Segments between checkpoint writes.
    pub checkpoint_every: u64,
    /// Emit full per-record files next to the summaries.
    pub records: bool,
    /// Bins for the triple-log fit.
    pub bins: usize,
    /// Run the fit on exact synthetic data instead of primes.
    pub synthetic: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        let k = Constants::default();
        Self {
            limit: 100_000_000,
            c: k.c,
            b: k.b,
            k_all: k.k_all,
            segment_size: DEFAULT_SEGMENT_SIZE,
            workers: default_workers(),
            output_path: PathBuf::from("."),
            format: Format::Csv,
            checkpoint_path: None,
            resume: false,
            checkpoint_every: 64,
            records: false,
            bins: 20,
            synthetic: false,
        }
    }
}

fn parse_u64(key: &str, v: &str) -> Result<u64> {
    let v = v.trim().replace('_', "");
    if let Ok(n) = v.parse::<u64>() {
        return Ok(n);
    }
    match v.parse::<f64>() {
        Ok(f) if f >= 0.0 && f.fract() == 0.0 && f <= MAX_LIMIT as f64 => Ok(f as u64),
        _ => Err(Error::Invalid(format!("{key}: expected a non-negative integer, got '{v}'"))),
    }
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    match v.trim().parse::<f64>() {
        Ok(f) if f.is_finite() => Ok(f),
        _ => Err(Error::Invalid(format!("{key}: expected a number, got '{v}'"))),
    }
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v.trim().to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "on" => Ok(true),
        "0" | "false" | "no" | "off" | "" => Ok(false),
        _ => Err(Error::Invalid(format!("{key}: expected true or false, got '{v}'"))),
    }
}

impl RunConfig {
    /// Set one option by name. Names are case-insensitive and `-` is
    /// accepted for `_`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let k = key.trim().to_ascii_lowercase().replace('-', "_");
        match k.as_str() {
            "limit" => self.limit = parse_u64(key, value)?,
            "c" => self.c = parse_f64(key, value)?,
            "b" => self.b = parse_f64(key, value)?,
            "k" | "k_all" => self.k_all = parse_f64(key, value)?,
            "segment_size" => self.segment_size = parse_u64(key, value)?,
            "workers" => {
                self.workers = usize::try_from(parse_u64(key, value)?)
                    .map_err(|_| Error::Invalid(format!("{key}: too large")))?
            }
            "out" | "output_path" => self.output_path = PathBuf::from(value.trim()),
            "format" => self.format = value.parse()?,
            "checkpoint" | "checkpoint_path" => {
                let v = value.trim();
                self.checkpoint_path = (!v.is_empty()).then(|| PathBuf::from(v));
            }
            "resume" => self.resume = parse_bool(key, value)?,
            "checkpoint_every" => self.checkpoint_every = parse_u64(key, value)?,
            "records" => self.records = parse_bool(key, value)?,
            "bins" => self.bins = parse_u64(key, value)? as usize,
            "synthetic" => self.synthetic = parse_bool(key, value)?,
            _ => return Err(Error::Invalid(format!("unknown option '{key}'"))),
        }
        Ok(())
    }

    /// Apply a flat `key = value` file. Blank lines and `#` comments are
    /// ignored.
    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        self.apply_text(&text).map_err(|e| Error::Invalid(format!("{}: {e}", path.display())))
    }

    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Invalid(format!("line {}: expected key = value", i + 1)))?;
            self.set(k, v).map_err(|e| Error::Invalid(format!("line {}: {e}", i + 1)))?;
        }
        Ok(())
    }

    /// Apply `PRIMEGAP_<KEY>` variables from `vars`; `PRIMEGAP_CONFIG` is
    /// skipped (it names the file, see [`RunConfig::resolve`]).
    pub fn apply_env<I, K, V>(&mut self, vars: I) -> Result<()>
    where
        I: IntoIterator<Item = (K, V)>,
        K: AsRef<str>,
        V: AsRef<str>,
    {
        let mut pairs: Vec<(String, String)> = vars
            .into_iter()
            .filter_map(|(k, v)| {
                let key = k.as_ref().strip_prefix(ENV_PREFIX)?.to_string();
                (key != "CONFIG").then(|| (key, v.as_ref().to_string()))
            })
            .collect();
        pairs.sort();
        for (k, v) in pairs {
            self.set(&k, &v).map_err(|e| Error::Invalid(format!("{ENV_PREFIX}{k}: {e}")))?;
        }
        Ok(())
    }

    /// Defaults, then the config file (`file`, else `PRIMEGAP_CONFIG`), then
    /// the environment, then `flags`; the result is validated.
    pub fn resolve<I, K, V>(file: Option<&Path>, env: I, flags: &[(&str, String)]) -> Result<Self>
    where
        I: IntoIterator<Item = (K, V)>,
        K: AsRef<str>,
        V: AsRef<str>,
    {
        let env: Vec<(String, String)> =
            env.into_iter().map(|(k, v)| (k.as_ref().to_string(), v.as_ref().to_string())).collect();
        let mut cfg = Self::default();
        let env_file = env.iter().find(|(k, _)| k == "PRIMEGAP_CONFIG").map(|(_, v)| PathBuf::from(v));
        if let Some(path) = file.map(Path::to_path_buf).or(env_file) {
            cfg.apply_file(&path)?;
        }
        cfg.apply_env(env)?;
        for (k, v) in flags {
            cfg.set(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.limit < 2 {
            return Err(Error::Invalid(format!("limit must be at least 2, got {}", self.limit)));
        }
        if self.limit > MAX_LIMIT {
            return Err(Error::Invalid(format!("limit {} exceeds 2^63", self.limit)));
        }
        if self.workers == 0 {
            return Err(Error::Invalid("workers must be at least 1".into()));
        }
        if self.segment_size < MIN_SEGMENT_SIZE {
            return Err(Error::Invalid(format!("segment size must be at least {MIN_SEGMENT_SIZE}")));
        }
        if self.checkpoint_every == 0 {
            return Err(Error::Invalid("checkpoint_every must be at least 1".into()));
        }
        if self.resume && self.checkpoint_path.is_none() {
            return Err(Error::Invalid("--resume needs a checkpoint path".into()));
        }
        if self.bins < 2 {
            return Err(Error::Invalid(format!("bins must be at least 2, got {}", self.bins)));
        }
        self.constants().validate()
    }

    pub fn constants(&self) -> Constants {
        Constants { c: self.c, b: self.b, k_all: self.k_all, ..Constants::default() }
    }

    pub fn plan(&self) -> SievePlan {
        SievePlan::new(self.limit).with_workers(self.workers).with_segment_size(self.segment_size)
    }

    /// `name` inside the output directory.
    pub fn output(&self, name: &str) -> PathBuf {
        self.output_path.join(name)
    }
}
