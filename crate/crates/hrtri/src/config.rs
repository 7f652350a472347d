//! Run configuration shared by every subcommand: profile specs, seeds and
//! provenance records.

use crate::error::{CliError, Result};
use hrtri_core::CorrelationProfile;
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::path::Path;

/// Environment variable consulted when `--seed` is absent.
pub const SEED_ENV: &str = "HRTRI_SEED";
/// Seed used when neither the flag nor the environment provides one.
pub const DEFAULT_SEED: u64 = 20_240_601;

pub fn resolve_seed(flag: Option<u64>) -> Result<u64> {
    resolve_seed_from(flag, std::env::var(SEED_ENV).ok().as_deref())
}

pub fn resolve_seed_from(flag: Option<u64>, env: Option<&str>) -> Result<u64> {
    match (flag, env) {
        (Some(s), _) => Ok(s),
        (None, Some(v)) => v
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("{SEED_ENV}={v:?} is not an unsigned integer"))),
        (None, None) => Ok(DEFAULT_SEED),
    }
}

/// Parses `constant:A`, `linear:A,B`, `power:A,B,G` or `table:PATH`.
///
/// Table files hold `t,m` rows; `#` lines and a non-numeric first row are
/// skipped.
pub fn parse_profile(spec: &str) -> Result<CorrelationProfile> {
    let (kind, args) = spec
        .split_once(':')
        .ok_or_else(|| CliError::Usage(format!("profile {spec:?} must look like kind:params")))?;
    let numbers = || -> Result<Vec<f64>> {
        args.split(',')
            .map(|a| {
                a.trim()
                    .parse::<f64>()
                    .map_err(|_| CliError::Usage(format!("profile parameter {a:?} is not a number")))
            })
            .collect()
    };
    let arity = |v: &[f64], k: usize| -> Result<()> {
        if v.len() == k {
            Ok(())
        } else {
            Err(CliError::Usage(format!("{kind} profile takes {k} parameter(s), got {}", v.len())))
        }
    };
    let profile = match kind.trim().to_ascii_lowercase().as_str() {
        "constant" => {
            let v = numbers()?;
            arity(&v, 1)?;
            CorrelationProfile::constant(v[0])?
        }
        "linear" => {
            let v = numbers()?;
            arity(&v, 2)?;
            CorrelationProfile::linear(v[0], v[1])?
        }
        "power" => {
            let v = numbers()?;
            arity(&v, 3)?;
            CorrelationProfile::power(v[0], v[1], v[2])?
        }
        "table" => load_profile_table(Path::new(args))?,
        other => return Err(CliError::Usage(format!("unknown profile kind {other:?}"))),
    };
    Ok(profile)
}

fn load_profile_table(path: &Path) -> Result<CorrelationProfile> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut knots = Vec::new();
    for (k, record) in reader.records().enumerate() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let parse = |j: usize| record.get(j).and_then(|v| v.parse::<f64>().ok());
        match (parse(0), parse(1)) {
            (Some(t), Some(m)) => knots.push((t, m)),
            _ if k == 0 => continue,
            _ => {
                return Err(CliError::Ingest {
                    path: path.into(),
                    reason: format!("line {line} is not a (t, m) pair"),
                    rows: vec![line],
                })
            }
        }
    }
    Ok(CorrelationProfile::tabulated(knots)?)
}

/// Parses `x1,y1;x2,y2;...`.
pub fn parse_points(spec: &str) -> Result<Vec<(f64, f64)>> {
    spec.split(';')
        .filter(|p| !p.trim().is_empty())
        .map(|p| {
            let (x, y) = p
                .split_once(',')
                .ok_or_else(|| CliError::Usage(format!("point {p:?} must look like x,y")))?;
            let num = |s: &str| {
                s.trim().parse::<f64>().map_err(|_| CliError::Usage(format!("{s:?} is not a number")))
            };
            Ok((num(x)?, num(y)?))
        })
        .collect()
}

/// Git-style content hash: SHA-256 of `"blob <len>\0"` followed by the bytes.
pub fn content_hash(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(format!("blob {}\0", bytes.len()).as_bytes());
    hasher.update(bytes);
    hasher.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Record embedded in every output file.
#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub config: serde_json::Value,
    pub input_sha256: String,
}

impl Provenance {
    /// `inputs` are the bytes the run consumed; for purely generated runs
    /// this is the serialized configuration itself.
    pub fn new<C: Serialize>(config: &C, inputs: Option<&[u8]>) -> Result<Self> {
        let config = serde_json::to_value(config)?;
        let hash = match inputs {
            Some(bytes) => content_hash(bytes),
            None => content_hash(serde_json::to_string(&config)?.as_bytes()),
        };
        Ok(Provenance { tool: "hrtri", version: env!("CARGO_PKG_VERSION"), config, input_sha256: hash })
    }

    /// `#`-prefixed header lines for CSV outputs.
    pub fn csv_header(&self) -> Result<String> {
        Ok(format!(
            "# {} {}\n# config: {}\n# input_sha256: {}\n",
            self.tool,
            self.version,
            serde_json::to_string(&self.config)?,
            self.input_sha256
        ))
    }
}
