//! `key=value` experiment configuration.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use fracback_core::mlf::FractionalOrder;
use fracback_core::spectral::Spectrum;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("unknown option `{0}`")]
    UnknownFlag(String),
    #[error("{key}: {message}")]
    Range { key: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scenario {
    Roundtrip,
    Illposed,
    Decay,
    Source,
    MlfAccuracy,
    Residual,
    All,
}

impl Scenario {
    /// The runnable scenarios, in the order `all` executes them.
    pub const SIX: [Scenario; 6] = [
        Scenario::Roundtrip,
        Scenario::Illposed,
        Scenario::Decay,
        Scenario::Source,
        Scenario::MlfAccuracy,
        Scenario::Residual,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Roundtrip => "roundtrip",
            Scenario::Illposed => "illposed",
            Scenario::Decay => "decay",
            Scenario::Source => "source",
            Scenario::MlfAccuracy => "mlf-accuracy",
            Scenario::Residual => "residual",
            Scenario::All => "all",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Scenario::SIX
            .into_iter()
            .chain([Scenario::All])
            .find(|x| x.name() == s)
            .ok_or_else(|| {
                format!("unknown scenario `{s}` (expected roundtrip, illposed, decay, source, mlf-accuracy, residual or all)")
            })
    }
}

pub const KEYS: [&str; 10] = [
    "scenario", "rho", "T", "modes", "spectrum", "epsilon", "out", "tol", "seed", "k_range",
];

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub rho: FractionalOrder,
    pub t_end: f64,
    pub modes: usize,
    pub spectrum: String,
    pub epsilon: f64,
    pub out: PathBuf,
    /// Overrides the primary tolerance of the scenario.
    pub tol: Option<f64>,
    pub seed: u64,
    /// Inclusive, counted from 1; defaults to every mode.
    pub k_range: Option<(usize, usize)>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            scenario: Scenario::Roundtrip,
            rho: FractionalOrder::new(0.5).expect("0.5 is a valid order"),
            t_end: 1.0,
            modes: 64,
            spectrum: "dirichlet:L=1".into(),
            epsilon: 0.5,
            out: PathBuf::from("out"),
            tol: None,
            seed: 42,
            k_range: None,
        }
    }
}

fn range(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Range {
        key: key.into(),
        message: message.into(),
    }
}

fn real(key: &str, v: &str) -> Result<f64, ConfigError> {
    v.parse::<f64>()
        .map_err(|_| range(key, format!("`{v}` is not a number")))
}

fn positive(key: &str, v: &str) -> Result<f64, ConfigError> {
    let x = real(key, v)?;
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(range(key, format!("must be positive and finite, got {v}")))
    }
}

fn parse_k_range(v: &str) -> Result<(usize, usize), ConfigError> {
    let bad = || {
        range(
            "k_range",
            format!("expected `a..b` with 1 <= a < b, got `{v}`"),
        )
    };
    let (a, b) = v.split_once("..").ok_or_else(bad)?;
    let b = b.strip_prefix('=').unwrap_or(b);
    let (a, b) = (
        a.trim().parse::<usize>().map_err(|_| bad())?,
        b.trim().parse::<usize>().map_err(|_| bad())?,
    );
    if a >= 1 && a < b {
        Ok((a, b))
    } else {
        Err(bad())
    }
}

impl ExperimentConfig {
    /// Set one key; errors name the key.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let v = value.trim();
        match key {
            "scenario" => self.scenario = v.parse().map_err(|m| range(key, m))?,
            "rho" => {
                let r = real(key, v)?;
                self.rho = FractionalOrder::new(r)
                    .map_err(|_| range(key, format!("must lie in (0, 1), got {v}")))?;
            }
            "T" => self.t_end = positive(key, v)?,
            "modes" => {
                self.modes =
                    v.parse::<usize>().ok().filter(|&m| m >= 1).ok_or_else(|| {
                        range(key, format!("must be a positive integer, got `{v}`"))
                    })?;
            }
            "spectrum" => {
                if v.is_empty() {
                    return Err(range(key, "must not be empty"));
                }
                self.spectrum = v.into();
            }
            "epsilon" => {
                let e = real(key, v)?;
                if !(e > 0.0 && e < 1.0) {
                    return Err(range(key, format!("must lie in (0, 1), got {v}")));
                }
                self.epsilon = e;
            }
            "out" => {
                if v.is_empty() {
                    return Err(range(key, "must not be empty"));
                }
                self.out = PathBuf::from(v);
            }
            "tol" => self.tol = Some(positive(key, v)?),
            "seed" => {
                self.seed = v
                    .parse()
                    .map_err(|_| range(key, format!("must be a non-negative integer, got `{v}`")))?
            }
            "k_range" => self.k_range = Some(parse_k_range(v)?),
            _ => return Err(ConfigError::UnknownFlag(key.into())),
        }
        Ok(())
    }

    /// Apply `key=value` lines; blank lines and `#` comments are skipped.
    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| ConfigError::Parse {
                line,
                message: format!("expected key=value, got `{content}`"),
            })?;
            let key = key.trim();
            if !KEYS.contains(&key) {
                return Err(ConfigError::UnknownKey {
                    line,
                    key: key.into(),
                });
            }
            self.set(key, value)?;
        }
        Ok(())
    }

    /// Cross-field checks, run once every source has been applied.
    pub fn validate(&self) -> Result<(), ConfigError> {
        Spectrum::parse(&self.spectrum, self.modes)
            .map_err(|e| range("spectrum", e.to_string()))?;
        if let Some((_, b)) = self.k_range {
            if b > self.modes {
                return Err(range(
                    "k_range",
                    format!("upper end {b} exceeds modes = {}", self.modes),
                ));
            }
        }
        Ok(())
    }

    /// `k_range` or every mode.
    pub fn sweep_range(&self) -> (usize, usize) {
        self.k_range.unwrap_or((1, self.modes))
    }
}

/// Parse a configuration file body on top of the defaults.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let mut c = ExperimentConfig::default();
    c.apply_text(text)?;
    c.validate()?;
    Ok(c)
}

/// File text first, then flags in order; flags win.
pub fn resolve<'a>(
    text: Option<&str>,
    flags: impl IntoIterator<Item = (&'a str, &'a str)>,
) -> Result<ExperimentConfig, ConfigError> {
    let mut c = ExperimentConfig::default();
    if let Some(t) = text {
        c.apply_text(t)?;
    }
    for (k, v) in flags {
        c.set(k, v)?;
    }
    c.validate()?;
    Ok(c)
}
