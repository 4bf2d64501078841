//! Line-oriented `key = value` configuration files.
//!
//! A line may hold several pairs separated by `;`, which is how the
//! measure grammar is usually written:
//!
//! ```text
//! measure = atomic; atoms = 1:0.6,0.4
//! t_end = 3
//! obs_times = 0.5, 1, 2, 3   # comments run to the end of the line
//! ```
//!
//! `measure = none` selects the zero measure.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use fragsim_core::measure::split_pairs;
use fragsim_core::{DislocationLaw, MeasureError, SimConfig};
use thiserror::Error;

pub const MEASURE_KEYS: &[&str] = &["measure", "atoms", "a", "p", "q"];

pub const SIM_KEYS: &[&str] = &[
    "alpha",
    "c",
    "eps",
    "t_end",
    "obs_times",
    "replicas",
    "seed",
    "max_fragments",
    "mass_floor",
    "initial_mass",
];

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("key `{0}` is set twice")]
    Duplicate(String),
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("missing key `{0}`")]
    Missing(String),
    #[error("bad value for `{key}`: {msg}")]
    BadValue { key: String, msg: String },
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    entries: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let pairs = split_pairs(line).map_err(|msg| ConfigError::Syntax { line: i + 1, msg })?;
            for (k, v) in pairs {
                if k.is_empty() {
                    return Err(ConfigError::Syntax {
                        line: i + 1,
                        msg: "empty key".into(),
                    });
                }
                if entries.insert(k.clone(), v).is_some() {
                    return Err(ConfigError::Duplicate(k));
                }
            }
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn entries(&self) -> &BTreeMap<String, String> {
        &self.entries
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.entries.insert(key.to_string(), value.into());
    }

    /// `self` layered over `defaults`. A measure given in `self` replaces
    /// the default measure as a whole.
    pub fn over(&self, defaults: &ConfigFile) -> ConfigFile {
        let mut entries = defaults.entries.clone();
        if self.entries.contains_key("measure") {
            entries.retain(|k, _| !MEASURE_KEYS.contains(&k.as_str()));
        }
        entries.extend(self.entries.iter().map(|(k, v)| (k.clone(), v.clone())));
        ConfigFile { entries }
    }

    /// Rejects keys outside the simulation, measure and `extra` sets.
    pub fn check_keys(&self, extra: &[&str]) -> Result<(), ConfigError> {
        for k in self.entries.keys() {
            let k = k.as_str();
            if !(SIM_KEYS.contains(&k) || MEASURE_KEYS.contains(&k) || extra.contains(&k)) {
                return Err(ConfigError::UnknownKey(k.to_string()));
            }
        }
        Ok(())
    }

    pub fn f64_opt(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        self.get(key).map(|v| parse_f64(key, v)).transpose()
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64, ConfigError> {
        Ok(self.f64_opt(key)?.unwrap_or(default))
    }

    pub fn f64_req(&self, key: &str) -> Result<f64, ConfigError> {
        self.f64_opt(key)?.ok_or_else(|| ConfigError::Missing(key.into()))
    }

    pub fn u64_opt(&self, key: &str) -> Result<Option<u64>, ConfigError> {
        self.get(key)
            .map(|v| {
                v.parse::<u64>().map_err(|e| ConfigError::BadValue {
                    key: key.into(),
                    msg: e.to_string(),
                })
            })
            .transpose()
    }

    pub fn usize_opt(&self, key: &str) -> Result<Option<usize>, ConfigError> {
        Ok(self.u64_opt(key)?.map(|v| v as usize))
    }

    pub fn list_f64(&self, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        self.get(key)
            .map(|v| {
                v.split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| parse_f64(key, s))
                    .collect()
            })
            .transpose()
    }

    pub fn law(&self) -> Result<DislocationLaw<f64>, ConfigError> {
        let measure_pairs: BTreeMap<String, String> = self
            .entries
            .iter()
            .filter(|(k, _)| MEASURE_KEYS.contains(&k.as_str()))
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect();
        law_from_pairs(&measure_pairs)
    }

    /// Simulation settings; `t_end` and the measure are required.
    pub fn sim_config(&self) -> Result<SimConfig<f64>, ConfigError> {
        let law = self.law()?;
        let t_end = self.f64_req("t_end")?;
        let mut sim = SimConfig::new(law, t_end);
        sim.alpha = self.f64_or("alpha", sim.alpha)?;
        sim.c = self.f64_or("c", sim.c)?;
        sim.eps = self.f64_or("eps", sim.eps)?;
        if let Some(obs) = self.list_f64("obs_times")? {
            sim.obs_times = obs;
        }
        if let Some(m) = self.usize_opt("max_fragments")? {
            sim.max_fragments = m;
        }
        sim.mass_floor = self.f64_or("mass_floor", sim.mass_floor)?;
        sim.initial_mass = self.f64_or("initial_mass", sim.initial_mass)?;
        sim.seed = self.u64_opt("seed")?.unwrap_or(0);
        sim.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(sim)
    }
}

fn parse_f64(key: &str, v: &str) -> Result<f64, ConfigError> {
    v.trim().parse::<f64>().map_err(|e| ConfigError::BadValue {
        key: key.into(),
        msg: format!("`{}`: {}", v, e),
    })
}

fn law_from_pairs(pairs: &BTreeMap<String, String>) -> Result<DislocationLaw<f64>, ConfigError> {
    match pairs.get("measure").map(String::as_str) {
        None => Err(ConfigError::Missing("measure".into())),
        Some("none") => Ok(DislocationLaw::zero()),
        Some(_) => Ok(DislocationLaw::from_pairs(pairs)?),
    }
}

/// Parses a one-line measure specification such as
/// `measure = binary_power; a = 0.5`.
pub fn parse_measure(spec: &str) -> Result<DislocationLaw<f64>, ConfigError> {
    let pairs = split_pairs(spec).map_err(|msg| ConfigError::Syntax { line: 1, msg })?;
    let mut map = BTreeMap::new();
    for (k, v) in pairs {
        if !MEASURE_KEYS.contains(&k.as_str()) {
            return Err(ConfigError::UnknownKey(k));
        }
        if map.insert(k.clone(), v).is_some() {
            return Err(ConfigError::Duplicate(k));
        }
    }
    law_from_pairs(&map)
}

#[cfg(test)]
mod tests {
    use super::*;
    use fragsim_core::LawKind;

    #[test]
    fn parses_pairs_comments_and_lists() {
        let cfg = ConfigFile::parse(
            "# header\nmeasure = atomic; atoms = 1:0.6,0.4;2:0.9,0.1\nt_end = 3\nobs_times = 0.5, 1 ,3 # trailing\n\nseed=7\n",
        )
        .unwrap();
        assert_eq!(cfg.get("atoms"), Some("1:0.6,0.4;2:0.9,0.1"));
        assert_eq!(cfg.list_f64("obs_times").unwrap(), Some(vec![0.5, 1.0, 3.0]));
        let sim = cfg.sim_config().unwrap();
        assert_eq!(sim.seed, 7);
        assert_eq!(sim.t_end, 3.0);
        match sim.law.kind() {
            LawKind::FiniteAtomic(atoms) => assert_eq!(atoms.len(), 2),
            other => panic!("{:?}", other),
        }
    }

    #[test]
    fn rejects_duplicates_unknown_keys_and_bad_values() {
        assert!(matches!(
            ConfigFile::parse("c = 1\nc = 2"),
            Err(ConfigError::Duplicate(_))
        ));
        let cfg = ConfigFile::parse("colour = red").unwrap();
        assert!(matches!(cfg.check_keys(&[]), Err(ConfigError::UnknownKey(_))));
        let cfg = ConfigFile::parse("measure = none\nt_end = abc").unwrap();
        assert!(matches!(cfg.sim_config(), Err(ConfigError::BadValue { .. })));
        assert!(matches!(
            ConfigFile::parse("just words"),
            Err(ConfigError::Syntax { line: 1, .. })
        ));
        let cfg = ConfigFile::parse("measure = binary_power; a = 0.5\nt_end = 1\neps = 0").unwrap();
        assert!(matches!(cfg.sim_config(), Err(ConfigError::Invalid(_))));
    }

    #[test]
    fn overlay_replaces_measure_as_a_whole() {
        let defaults = ConfigFile::parse("measure = binary_power; a = 0.5\nt_end = 1").unwrap();
        let user = ConfigFile::parse("measure = atomic; atoms = 1:0.6,0.4\nt_end = 2").unwrap();
        let merged = user.over(&defaults);
        assert_eq!(merged.get("a"), None);
        assert_eq!(merged.get("t_end"), Some("2"));
        assert_eq!(merged.get("measure"), Some("atomic"));
        let kept = ConfigFile::parse("t_end = 2").unwrap().over(&defaults);
        assert_eq!(kept.get("a"), Some("0.5"));
    }

    #[test]
    fn measure_specs() {
        assert!(parse_measure("measure = none").unwrap().is_zero());
        let law = parse_measure("measure = binary_power; a = 0.5").unwrap();
        assert!((law.tail_nu2(0.25) - 0.5857864376269049).abs() < 1e-12);
        assert!(matches!(
            parse_measure("measure = binary_power; b = 1"),
            Err(ConfigError::UnknownKey(_))
        ));
        assert!(matches!(
            parse_measure("measure = binary_power; a = 1.5"),
            Err(ConfigError::Measure(_))
        ));
    }
}
