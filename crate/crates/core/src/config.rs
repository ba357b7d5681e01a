//! Run configuration: one `key = value` file, overridden by command-line flags.
//!
//! ```text
//! # beaver-forge run
//! n = 16
//! q = 140737488356903
//! t = 32843
//! sigma = 3.2
//! tail_bound = 6
//! parties = 3
//! servers = 3
//! seed = 2a
//! out = beaver-forge-out
//! ```

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::ahe::{AheParams, DEFAULT_N, DEFAULT_Q, DEFAULT_T};
use crate::error::{Error, Result};
use crate::ring::{RingParams, DEFAULT_SIGMA, DEFAULT_TAIL_BOUND};
use crate::seed::MasterSeed;

/// Environment variable naming a config file when `--config` is absent.
pub const CONFIG_ENV: &str = "BEAVER_FORGE_CONFIG";

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Config {
    pub n: usize,
    pub q: u64,
    pub t: u64,
    pub sigma: f64,
    pub tail_bound: u32,
    pub parties: usize,
    pub servers: usize,
    #[serde(serialize_with = "seed_hex")]
    pub seed: MasterSeed,
    pub out: PathBuf,
}

fn seed_hex<S: serde::Serializer>(seed: &MasterSeed, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&seed.to_hex())
}

impl Default for Config {
    fn default() -> Self {
        Self {
            n: DEFAULT_N,
            q: DEFAULT_Q,
            t: DEFAULT_T,
            sigma: DEFAULT_SIGMA,
            tail_bound: DEFAULT_TAIL_BOUND,
            parties: 3,
            servers: 3,
            seed: MasterSeed::default(),
            out: PathBuf::from("beaver-forge-out"),
        }
    }
}

impl Config {
    /// Parses `key = value` lines over the defaults. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Params(format!("config line {}: expected key = value", no + 1)))?;
            cfg.set(key.trim(), value.trim())
                .map_err(|e| Error::Params(format!("config line {}: {e}", no + 1)))?;
        }
        Ok(cfg)
    }

    /// Reads `path`, or returns the defaults when `path` is `None`.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| Error::Io(format!("reading config {}: {e}", p.display())))?;
                Self::parse(&text)
            }
            None => Ok(Self::default()),
        }
    }

    /// The explicit path if given, else the path in [`CONFIG_ENV`], else none.
    pub fn resolve_path(explicit: Option<PathBuf>) -> Option<PathBuf> {
        explicit.or_else(|| std::env::var_os(CONFIG_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
            v.parse().map_err(|_| Error::Params(format!("{key}: cannot parse {v:?}")))
        }
        match key {
            "n" => self.n = num(key, value)?,
            "q" => self.q = num(key, value)?,
            "t" => self.t = num(key, value)?,
            "sigma" => self.sigma = num(key, value)?,
            "tail_bound" => self.tail_bound = num(key, value)?,
            "parties" => self.parties = num(key, value)?,
            "servers" => self.servers = num(key, value)?,
            "seed" => self.seed = value.parse()?,
            "out" => self.out = PathBuf::from(value),
            _ => return Err(Error::Params(format!("unknown config key {key:?}"))),
        }
        Ok(())
    }

    /// Validated encryption parameters.
    pub fn params(&self) -> Result<AheParams> {
        AheParams::new(RingParams::new(self.n, self.q, self.sigma, self.tail_bound)?, self.t)
    }

    /// Canonical text form; [`Config::parse`] reads it back unchanged.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "n = {}", self.n);
        let _ = writeln!(s, "q = {}", self.q);
        let _ = writeln!(s, "t = {}", self.t);
        let _ = writeln!(s, "sigma = {}", self.sigma);
        let _ = writeln!(s, "tail_bound = {}", self.tail_bound);
        let _ = writeln!(s, "parties = {}", self.parties);
        let _ = writeln!(s, "servers = {}", self.servers);
        let _ = writeln!(s, "seed = {}", self.seed.to_hex());
        let _ = writeln!(s, "out = {}", self.out.display());
        s
    }
}
