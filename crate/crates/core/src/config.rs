//! Scenario config files.
//!
//! ```ini
//! [run]
//! name = demo
//! seed = 7
//! windows = 10000
//!
//! [pool]
//! total_mhz = 30
//! reserved_mhz = 0
//!
//! [si1]
//! fixed_mbps = 5
//! uniform_low_mbps = 1
//! uniform_high_mbps = 20
//!
//! [mno.1]
//! users = 20
//!
//! [mno.2]
//! users_max = 30
//! activity = 0.1
//!
//! [policy]
//! inter = pr
//! shares = 0.5, 0.5
//! ```
//!
//! Omitted keys take the desk-scale defaults: η = 1, ω = 1, α = 0.1, uniform
//! usage, all priorities 1, and the rate table scaled by 0.01.

use std::collections::BTreeMap;
use std::path::Path;

use ini::Ini;
use thiserror::Error;

use crate::demand::SpectralEfficiency;
use crate::engine::{InterPolicy, IntraPolicy, ScenarioConfig, Si2LoadModel, SimError};
use crate::model::{
    normalize_pattern, ClassLabel, MnoProfile, ModelError, ServiceClass, ShareProfile,
    Si1TrafficModel, SpectrumPool, UserCount, SERVICE_RATES_KBPS,
};
use crate::policy::{FrSplit, PolicyError, PolicyKind};

pub const DEFAULT_ACTIVITY: f64 = 0.1;
pub const DEFAULT_RATE_SCALE: f64 = 0.01;
pub const DEFAULT_WINDOWS: u64 = 10_000;
pub const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("{}[{section}] {key}: {message}", line_prefix(*line))]
    Key {
        section: String,
        key: String,
        line: Option<usize>,
        message: String,
    },
    #[error("{}unknown section [{section}]", line_prefix(*line))]
    UnknownSection {
        section: String,
        line: Option<usize>,
    },
    #[error("invalid scenario: {0}")]
    Validation(#[from] SimError),
}

fn line_prefix(line: Option<usize>) -> String {
    line.map_or(String::new(), |l| format!("line {l}: "))
}

impl From<ModelError> for ConfigError {
    fn from(e: ModelError) -> Self {
        ConfigError::Validation(e.into())
    }
}

impl From<PolicyError> for ConfigError {
    fn from(e: PolicyError) -> Self {
        ConfigError::Validation(e.into())
    }
}

pub fn parse_config(path: &Path) -> Result<ScenarioConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_config_str(&text)
}

pub fn parse_config_str(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let ini = Ini::load_from_str(text).map_err(|e| ConfigError::Syntax {
        line: e.line,
        message: e.msg.to_string(),
    })?;
    let doc = Document::new(text, &ini)?;
    let config = doc.build()?;
    config.validate()?;
    Ok(config)
}

const SECTION_KEYS: &[(&str, &[&str])] = &[
    ("run", &["name", "seed", "windows"]),
    ("pool", &["total_mhz", "reserved_mhz"]),
    (
        "si1",
        &["fixed_mbps", "uniform_low_mbps", "uniform_high_mbps", "eta"],
    ),
    ("si2", &["eta", "load_model"]),
    ("classes", &["rates_kbps", "weights", "rate_scale"]),
    ("mno", &["users", "users_max", "activity", "usage"]),
    (
        "policy",
        &[
            "inter",
            "shares",
            "priorities",
            "fr_shares",
            "intra",
            "intra_shares",
            "intra_priorities",
            "intra_fr_shares",
            "intra_reserved_mhz",
            "intra_caps",
        ],
    ),
];

struct Document<'a> {
    text: &'a str,
    sections: BTreeMap<String, BTreeMap<String, String>>,
    mnos: Vec<String>,
}

impl<'a> Document<'a> {
    fn new(text: &'a str, ini: &Ini) -> Result<Self, ConfigError> {
        let mut sections: BTreeMap<String, BTreeMap<String, String>> = BTreeMap::new();
        let mut mno_ids = Vec::new();
        for (name, props) in ini.iter() {
            let Some(name) = name else {
                if let Some((key, _)) = props.iter().next() {
                    return Err(ConfigError::Key {
                        section: String::new(),
                        key: key.to_string(),
                        line: locate(text, None, Some(key)),
                        message: "key outside of any section".into(),
                    });
                }
                continue;
            };
            let kind = match name.split_once('.') {
                Some(("mno", id)) => {
                    let id: u32 = id.parse().ok().filter(|q| *q >= 1).ok_or_else(|| {
                        ConfigError::UnknownSection {
                            section: name.to_string(),
                            line: locate(text, Some(name), None),
                        }
                    })?;
                    mno_ids.push(id);
                    "mno"
                }
                _ => name,
            };
            let allowed = SECTION_KEYS
                .iter()
                .find(|(s, _)| *s == kind)
                .map(|(_, keys)| *keys)
                .ok_or_else(|| ConfigError::UnknownSection {
                    section: name.to_string(),
                    line: locate(text, Some(name), None),
                })?;
            if sections.contains_key(name) {
                return Err(ConfigError::UnknownSection {
                    section: format!("{name} (duplicate)"),
                    line: None,
                });
            }
            let mut entries = BTreeMap::new();
            for (key, value) in props.iter() {
                let err = |message: &str| ConfigError::Key {
                    section: name.to_string(),
                    key: key.to_string(),
                    line: locate(text, Some(name), Some(key)),
                    message: message.to_string(),
                };
                if !allowed.contains(&key) {
                    return Err(err("unknown key"));
                }
                if entries
                    .insert(key.to_string(), value.trim().to_string())
                    .is_some()
                {
                    return Err(err("duplicate key"));
                }
            }
            sections.insert(name.to_string(), entries);
        }
        mno_ids.sort_unstable();
        for (i, id) in mno_ids.iter().enumerate() {
            if *id as usize != i + 1 {
                return Err(ConfigError::UnknownSection {
                    section: format!("mno.{id}"),
                    line: locate(text, Some(&format!("mno.{id}")), None),
                });
            }
        }
        Ok(Self {
            text,
            sections,
            mnos: mno_ids.iter().map(|q| format!("mno.{q}")).collect(),
        })
    }

    fn raw(&self, section: &str, key: &str) -> Option<&str> {
        self.sections.get(section)?.get(key).map(String::as_str)
    }

    fn error(&self, section: &str, key: &str, message: impl Into<String>) -> ConfigError {
        ConfigError::Key {
            section: section.to_string(),
            key: key.to_string(),
            line: locate(self.text, Some(section), Some(key)),
            message: message.into(),
        }
    }

    fn parsed<T: std::str::FromStr>(
        &self,
        section: &str,
        key: &str,
        what: &str,
    ) -> Result<Option<T>, ConfigError> {
        self.raw(section, key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|_| self.error(section, key, format!("expected {what}, got `{v}`")))
            })
            .transpose()
    }

    fn number(&self, section: &str, key: &str) -> Result<Option<f64>, ConfigError> {
        match self.parsed::<f64>(section, key, "a number")? {
            Some(v) if !v.is_finite() => Err(self.error(section, key, "expected a finite number")),
            other => Ok(other),
        }
    }

    fn list(&self, section: &str, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        let Some(raw) = self.raw(section, key) else {
            return Ok(None);
        };
        raw.split(',')
            .map(|item| {
                item.trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| {
                        self.error(section, key, format!("`{}` is not a number", item.trim()))
                    })
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Some)
    }

    fn policy(&self, key: &str) -> Result<Option<PolicyKind>, ConfigError> {
        self.parsed("policy", key, "one of fr, pr, cs")
    }

    fn eta(&self, section: &str) -> Result<SpectralEfficiency, ConfigError> {
        match self.number(section, "eta")? {
            Some(v) => {
                SpectralEfficiency::new(v).map_err(|e| self.error(section, "eta", e.to_string()))
            }
            None => Ok(SpectralEfficiency::bpsk()),
        }
    }

    fn build(&self) -> Result<ScenarioConfig, ConfigError> {
        let name = self.raw("run", "name").unwrap_or("scenario").to_string();
        let seed = self
            .parsed("run", "seed", "an unsigned integer")?
            .unwrap_or(DEFAULT_SEED);
        let windows = self
            .parsed("run", "windows", "an unsigned integer")?
            .unwrap_or(DEFAULT_WINDOWS);

        let total = self
            .number("pool", "total_mhz")?
            .ok_or_else(|| self.error("pool", "total_mhz", "required"))?;
        let pool = SpectrumPool::new(total, self.number("pool", "reserved_mhz")?.unwrap_or(0.0))?;

        let si1_default = Si1TrafficModel::venue_default();
        let si1_model = Si1TrafficModel::new(
            self.number("si1", "fixed_mbps")?
                .unwrap_or(si1_default.fixed_mbps()),
            self.number("si1", "uniform_low_mbps")?
                .unwrap_or(si1_default.uniform_low_mbps()),
            self.number("si1", "uniform_high_mbps")?
                .unwrap_or(si1_default.uniform_high_mbps()),
        )?;
        let si2_load = match self.raw("si2", "load_model") {
            None | Some("sampled") => Si2LoadModel::Sampled,
            Some("closed_form") => Si2LoadModel::ClosedForm,
            Some(other) => {
                return Err(self.error(
                    "si2",
                    "load_model",
                    format!("expected sampled or closed_form, got `{other}`"),
                ))
            }
        };

        let classes = self.classes()?;
        if self.mnos.is_empty() {
            return Err(ConfigError::UnknownSection {
                section: "mno.1 (at least one MNO section is required)".into(),
                line: None,
            });
        }
        let mnos = self
            .mnos
            .iter()
            .map(|s| self.mno(s, classes.len()))
            .collect::<Result<Vec<_>, _>>()?;
        let n = mnos.len();

        let shares = self
            .list("policy", "shares")?
            .unwrap_or_else(|| vec![0.5, 0.5]);
        let priorities = self
            .list("policy", "priorities")?
            .unwrap_or_else(|| vec![1.0; shares.len()]);
        let inter = InterPolicy {
            kind: self.policy("inter")?.unwrap_or(PolicyKind::Pr),
            shares: ShareProfile::new(shares, priorities)?,
            fr_split: self
                .list("policy", "fr_shares")?
                .map(FrSplit::new)
                .transpose()?,
        };
        let intra_shares = self
            .list("policy", "intra_shares")?
            .unwrap_or_else(|| vec![1.0; n]);
        let intra_priorities = self
            .list("policy", "intra_priorities")?
            .unwrap_or_else(|| vec![1.0; intra_shares.len()]);
        let intra = IntraPolicy {
            kind: self.policy("intra")?.unwrap_or(PolicyKind::Pr),
            shares: ShareProfile::new(intra_shares, intra_priorities)?,
            fr_split: self
                .list("policy", "intra_fr_shares")?
                .map(FrSplit::new)
                .transpose()?,
            reserved_mhz: self.number("policy", "intra_reserved_mhz")?.unwrap_or(0.0),
            caps: self.list("policy", "intra_caps")?,
        };

        Ok(ScenarioConfig {
            name,
            pool,
            si1_model,
            si1_eta: self.eta("si1")?,
            si2_eta: self.eta("si2")?,
            si2_load,
            mnos,
            classes,
            inter,
            intra,
            windows,
            seed,
        })
    }

    fn classes(&self) -> Result<Vec<ServiceClass>, ConfigError> {
        let rates = self
            .list("classes", "rates_kbps")?
            .unwrap_or_else(|| SERVICE_RATES_KBPS.to_vec());
        if rates.len() != ClassLabel::ALL.len() {
            return Err(self.error(
                "classes",
                "rates_kbps",
                format!(
                    "expected {} rates, got {}",
                    ClassLabel::ALL.len(),
                    rates.len()
                ),
            ));
        }
        let weights = self
            .list("classes", "weights")?
            .unwrap_or_else(|| vec![1.0; rates.len()]);
        if weights.len() != rates.len() {
            return Err(self.error(
                "classes",
                "weights",
                "one weight per service class required",
            ));
        }
        let scale = self
            .number("classes", "rate_scale")?
            .unwrap_or(DEFAULT_RATE_SCALE);
        if scale <= 0.0 {
            return Err(self.error("classes", "rate_scale", "must be positive"));
        }
        ClassLabel::ALL
            .into_iter()
            .zip(rates.iter().zip(&weights))
            .map(|(label, (kbps, w))| ServiceClass::new(label, kbps / 1000.0 * scale, *w))
            .collect::<Result<_, _>>()
            .map_err(Into::into)
    }

    fn mno(&self, section: &str, n_classes: usize) -> Result<MnoProfile, ConfigError> {
        let fixed: Option<u32> = self.parsed(section, "users", "an unsigned integer")?;
        let max: Option<u32> = self.parsed(section, "users_max", "an unsigned integer")?;
        let users = match (fixed, max) {
            (Some(u), None) => UserCount::Fixed(u),
            (None, Some(max)) => UserCount::Range { max },
            _ => {
                return Err(self.error(
                    section,
                    "users",
                    "exactly one of users or users_max is required",
                ))
            }
        };
        let activity = self
            .number(section, "activity")?
            .unwrap_or(DEFAULT_ACTIVITY);
        let usage = match self.list(section, "usage")? {
            Some(w) if w.len() != n_classes => {
                return Err(self.error(
                    section,
                    "usage",
                    format!("expected {n_classes} weights, got {}", w.len()),
                ))
            }
            Some(w) => {
                normalize_pattern(&w).map_err(|e| self.error(section, "usage", e.to_string()))?
            }
            None => vec![1.0 / n_classes as f64; n_classes],
        };
        MnoProfile::new(users, activity, usage)
            .map_err(|e| self.error(section, "activity", e.to_string()))
    }
}

/// 1-based line of `key` inside `[section]`, or of the section header itself.
fn locate(text: &str, section: Option<&str>, key: Option<&str>) -> Option<usize> {
    let mut current: Option<&str> = None;
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            current = Some(name.trim());
            if key.is_none() && current == section {
                return Some(i + 1);
            }
            continue;
        }
        if let Some(key) = key {
            let found = line
                .split_once(['=', ':'])
                .is_some_and(|(k, _)| k.trim() == key);
            if found && current == section {
                return Some(i + 1);
            }
        }
    }
    None
}

/// Keys accepted in each section kind; `mno` stands for every `[mno.N]`.
pub fn known_keys() -> impl Iterator<Item = (&'static str, &'static str)> {
    SECTION_KEYS
        .iter()
        .flat_map(|(s, keys)| keys.iter().map(move |k| (*s, *k)))
}
