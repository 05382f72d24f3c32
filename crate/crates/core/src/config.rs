//! Service configuration from the environment, optionally layered over a JSON file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use chrono::Duration;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clock::Clock;

pub const DEFAULT_PORT: u16 = 8080;
pub const DEFAULT_TOKEN_TTL_HOURS: i64 = 24;
pub const DEFAULT_MAX_BODY_BYTES: usize = 1 << 20;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("required setting {0} is not set")]
    Missing(&'static str),
    #[error("setting {key} is invalid: {reason}")]
    Invalid { key: &'static str, reason: String },
    #[error("cannot read config file {path}: {reason}")]
    File { path: PathBuf, reason: String },
}

impl ConfigError {
    pub fn code(&self) -> &'static str {
        match self {
            ConfigError::Missing(_) | ConfigError::File { .. } => "CONFIG_MISSING",
            ConfigError::Invalid { .. } => "CONFIG_INVALID",
        }
    }
}

/// Keys mirror the environment variable names, lower-cased.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub port: Option<u16>,
    pub store_path: Option<PathBuf>,
    pub token_secret: Option<String>,
    pub token_ttl_hours: Option<i64>,
    pub clock_mode: Option<String>,
    pub cors_origin: Option<String>,
    pub max_body_bytes: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct Config {
    pub port: u16,
    pub store_path: PathBuf,
    pub token_secret: String,
    pub token_ttl: Duration,
    pub clock: Clock,
    /// `None` allows any origin.
    pub cors_origin: Option<String>,
    pub max_body_bytes: usize,
}

impl Config {
    /// Environment first, then the file, then defaults. STORE_PATH and
    /// TOKEN_SECRET have no default.
    pub fn resolve(env: &BTreeMap<String, String>, file: Option<ConfigFile>) -> Result<Self, ConfigError> {
        let file = file.unwrap_or_default();
        let get = |k: &str| env.get(k).map(|v| v.trim().to_owned()).filter(|v| !v.is_empty());
        fn parse<T: std::str::FromStr>(key: &'static str, v: String) -> Result<T, ConfigError>
        where
            T::Err: std::fmt::Display,
        {
            v.parse().map_err(|e: T::Err| ConfigError::Invalid { key, reason: e.to_string() })
        }

        let port = match get("PORT") {
            Some(v) => parse("PORT", v)?,
            None => file.port.unwrap_or(DEFAULT_PORT),
        };
        let store_path = get("STORE_PATH").map(PathBuf::from).or(file.store_path).ok_or(ConfigError::Missing("STORE_PATH"))?;
        let token_secret = get("TOKEN_SECRET").or(file.token_secret).ok_or(ConfigError::Missing("TOKEN_SECRET"))?;
        if token_secret.len() < 16 {
            return Err(ConfigError::Invalid { key: "TOKEN_SECRET", reason: "use at least 16 bytes".into() });
        }
        let ttl_hours = match get("TOKEN_TTL_HOURS") {
            Some(v) => parse("TOKEN_TTL_HOURS", v)?,
            None => file.token_ttl_hours.unwrap_or(DEFAULT_TOKEN_TTL_HOURS),
        };
        if ttl_hours <= 0 {
            return Err(ConfigError::Invalid { key: "TOKEN_TTL_HOURS", reason: "must be positive".into() });
        }
        let clock = match get("CLOCK_MODE").or(file.clock_mode) {
            Some(v) => v.parse().map_err(|reason| ConfigError::Invalid { key: "CLOCK_MODE", reason })?,
            None => Clock::System,
        };
        let max_body_bytes = match get("MAX_BODY_BYTES") {
            Some(v) => parse("MAX_BODY_BYTES", v)?,
            None => file.max_body_bytes.unwrap_or(DEFAULT_MAX_BODY_BYTES),
        };
        Ok(Config {
            port,
            store_path,
            token_secret,
            token_ttl: Duration::hours(ttl_hours),
            clock,
            cors_origin: get("CORS_ORIGIN").or(file.cors_origin),
            max_body_bytes,
        })
    }

    pub fn from_env(file: Option<&Path>) -> Result<Self, ConfigError> {
        let file = file.map(read_file).transpose()?;
        Config::resolve(&std::env::vars().collect(), file)
    }
}

pub fn read_file(path: &Path) -> Result<ConfigFile, ConfigError> {
    let err = |reason: String| ConfigError::File { path: path.to_owned(), reason };
    let text = std::fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
    serde_json::from_str(&text).map_err(|e| err(e.to_string()))
}
