//! Flat `key=value` experiment configuration.
//!
//! A config file holds one `key=value` per line (`#` comments, blank lines
//! ignored). Command-line `--set key=value` pairs are applied afterwards and
//! win. Unknown keys are rejected so that typos cannot silently fall back to
//! defaults.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use eu_core::engine::{Resolution, ScanDirection, ScanStage};
use eu_core::hypothesis::{prior_by_name, Prior};
use eu_core::interaction::{History, Policy};
use eu_core::minilang::{Alphabets, PerceptionMode, StepBudget};
use eu_core::utility::UtilitySpec;

const KEYS: &[(&str, &str)] = &[
    ("actions", "2"),
    ("perceptions", "naturals"),
    ("prior", "geometric"),
    ("utility", "first"),
    ("policy", "constant:0"),
    ("history", ""),
    ("cutoff", "1024"),
    ("horizon", "8"),
    ("budget", "256"),
    ("schedule", ""),
    ("direction", "above"),
    ("target", "10"),
    ("theta_count", "262144"),
    ("theta_budget", "512"),
    ("env_budget", "576"),
    ("stages", "3"),
    ("n", "200"),
    ("out", ""),
    ("schedule_out", ""),
    ("witness_out", ""),
];

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<eu_core::Error> for ConfigError {
    fn from(e: eu_core::Error) -> Self {
        ConfigError(e.to_string())
    }
}

type Result<T> = std::result::Result<T, ConfigError>;

#[derive(Clone, Debug)]
pub struct Config {
    values: BTreeMap<String, String>,
}

fn split_pair(line: &str) -> Result<(String, String)> {
    let (k, v) = line
        .split_once('=')
        .ok_or_else(|| ConfigError(format!("expected key=value, got {line:?}")))?;
    let k = k.trim();
    if !KEYS.iter().any(|(name, _)| *name == k) {
        return Err(ConfigError(format!("unknown config key {k:?}")));
    }
    Ok((k.to_string(), v.trim().to_string()))
}

impl Config {
    pub fn load(file: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let mut values: BTreeMap<String, String> =
            KEYS.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
        if let Some(path) = file {
            let text = std::fs::read_to_string(path)
                .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
            for line in text.lines() {
                let line = line.split('#').next().unwrap_or("").trim();
                if line.is_empty() {
                    continue;
                }
                let (k, v) = split_pair(line)?;
                values.insert(k, v);
            }
        }
        for o in overrides {
            let (k, v) = split_pair(o)?;
            values.insert(k, v);
        }
        Ok(Config { values })
    }

    fn raw(&self, key: &str) -> &str {
        self.values.get(key).map(String::as_str).unwrap_or("")
    }

    fn number<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        self.raw(key)
            .parse()
            .map_err(|_| ConfigError(format!("{key}: not a valid number: {:?}", self.raw(key))))
    }

    fn step_budget(&self, key: &str) -> Result<StepBudget> {
        Ok(StepBudget::new(self.number(key)?)?)
    }

    pub fn alphabets(&self) -> Result<Alphabets> {
        let perception = match self.raw("perceptions") {
            "naturals" => PerceptionMode::Naturals,
            _ => PerceptionMode::Finite(self.number("perceptions")?),
        };
        Ok(Alphabets::new(self.number("actions")?, perception)?)
    }

    pub fn prior(&self) -> Result<Box<dyn Prior>> {
        Ok(prior_by_name(self.raw("prior"))?)
    }

    pub fn utility(&self) -> Result<UtilitySpec> {
        Ok(self.raw("utility").parse()?)
    }

    pub fn policy(&self) -> Result<Policy> {
        Ok(self.raw("policy").parse()?)
    }

    /// The history file, or the empty history when none is configured.
    pub fn history(&self) -> Result<History> {
        let path = self.raw("history");
        if path.is_empty() {
            return Ok(History::empty());
        }
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read history {path}: {e}")))?;
        text.parse::<History>()
            .map_err(|e| ConfigError(format!("malformed history {path}: {e}")))
    }

    pub fn cutoff(&self) -> Result<u64> {
        self.number("cutoff")
    }

    pub fn horizon(&self) -> Result<usize> {
        self.number("horizon")
    }

    pub fn budget(&self) -> Result<StepBudget> {
        self.step_budget("budget")
    }

    pub fn n(&self) -> Result<u64> {
        self.number("n")
    }

    pub fn target(&self) -> Result<usize> {
        self.number("target")
    }

    pub fn direction(&self) -> Result<ScanDirection> {
        Ok(self.raw("direction").parse()?)
    }

    /// `cutoff:horizon[:budget]` entries separated by commas; a single step at
    /// the configured cutoff, horizon and budget when empty.
    pub fn schedule(&self) -> Result<Vec<Resolution>> {
        let text = self.raw("schedule");
        if text.is_empty() {
            return Ok(vec![Resolution { cutoff: self.cutoff()?, horizon: self.horizon()?, budget: self.budget()? }]);
        }
        text.split(',')
            .map(|item| {
                let bad = || ConfigError(format!("schedule: bad entry {item:?}"));
                let parts: Vec<&str> = item.trim().split(':').collect();
                let budget = match parts.get(2) {
                    Some(b) => StepBudget::new(b.parse().map_err(|_| bad())?)?,
                    None => self.budget()?,
                };
                match parts[..] {
                    [c, h] | [c, h, _] => Ok(Resolution {
                        cutoff: c.parse().map_err(|_| bad())?,
                        horizon: h.parse().map_err(|_| bad())?,
                        budget,
                    }),
                    _ => Err(bad()),
                }
            })
            .collect()
    }

    pub fn scan_stages(&self) -> Result<Vec<ScanStage>> {
        let base = ScanStage {
            theta_count: self.number("theta_count")?,
            theta_budget: self.step_budget("theta_budget")?,
            env_budget: self.step_budget("env_budget")?,
            cutoff: self.cutoff()?,
            horizon: self.horizon()?,
        };
        let stages: usize = self.number("stages")?;
        if stages == 0 {
            return Err(ConfigError("stages must be at least 1".into()));
        }
        Ok(base.doubling(stages)?)
    }

    pub fn path(&self, key: &str) -> Option<PathBuf> {
        let p = self.raw(key);
        (!p.is_empty()).then(|| PathBuf::from(p))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_win_and_unknown_keys_fail() {
        let c = Config::load(None, &["cutoff=77".into()]).unwrap();
        assert_eq!(c.cutoff().unwrap(), 77);
        assert_eq!(c.horizon().unwrap(), 8);
        assert!(Config::load(None, &["cutof=77".into()]).is_err());
        assert!(Config::load(None, &["cutoff".into()]).is_err());
    }

    #[test]
    fn schedule_entries() {
        let c = Config::load(None, &["schedule=64:5,256:10:99".into()]).unwrap();
        let s = c.schedule().unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!((s[0].cutoff, s[0].horizon, s[0].budget.max_steps()), (64, 5, 256));
        assert_eq!((s[1].cutoff, s[1].horizon, s[1].budget.max_steps()), (256, 10, 99));
    }
}
