//! Experiment settings: built-in defaults, overridden by a flat `key = value`
//! file, overridden by command-line flags.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use nlcap_core::{
    log_power_grid, Channel, Constellation, ContinuousFamily, Nonlinearity, Schedule,
};
use sha2::{Digest, Sha256};

/// `(key, default, meaning)` for every recognized setting.
pub const SETTINGS: &[(&str, &str, &str)] = &[
    ("channel", "tanh", "nonlinearity: tanh (smooth clipping) or identity"),
    ("amax", "10", "saturation level of the tanh nonlinearity"),
    ("sigma_z", "1", "noise standard deviation"),
    ("source", "gaussian", "mi-sweep source: gaussian, uniform, exponential, ook, bpsk or pam"),
    ("constellation", "pam", "shaping-sweep constellation: ook, bpsk or pam"),
    ("order", "8", "number of points of a pam constellation"),
    ("p_min", "0.1", "smallest average power"),
    ("p_max", "100000", "largest average power"),
    ("points_per_decade", "8", "log-spaced powers per decade"),
    ("grid_points", "4097", "output quadrature points (odd)"),
    ("seed", "0", "seed of the randomized restarts"),
    ("initial_n", "32", "particles of the default capacity initialization"),
    ("max_n", "256", "largest particle count tried"),
    ("restarts", "2", "initializations beyond the default one"),
    ("max_iterations", "3000", "iteration budget of one ascent run"),
    ("slack", "0.001", "validate: tolerated capacity drop in bits"),
];

/// Source swept by `mi-sweep`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SweepSource {
    Continuous(ContinuousFamily),
    Discrete(Constellation),
}

impl std::fmt::Display for SweepSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SweepSource::Continuous(fam) => write!(f, "{fam}"),
            SweepSource::Discrete(c) => write!(f, "{c}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub channel: Channel,
    pub source: SweepSource,
    pub constellation: Constellation,
    pub powers: Vec<f64>,
    pub grid_points: usize,
    pub schedule: Schedule,
    pub slack: f64,
    settings: BTreeMap<String, String>,
}

/// Raw settings before validation.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            values: SETTINGS
                .iter()
                .map(|(k, v, _)| (k.to_string(), v.to_string()))
                .collect(),
        }
    }
}

impl Settings {
    pub fn set(&mut self, key: &str, value: impl ToString) -> Result<()> {
        if !SETTINGS.iter().any(|(k, _, _)| *k == key) {
            bail!("unknown setting `{key}`");
        }
        self.values.insert(key.to_string(), value.to_string().trim().to_string());
        Ok(())
    }

    pub fn get(&self, key: &str) -> &str {
        &self.values[key]
    }

    /// Applies `key = value` lines; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str, origin: &str) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("{origin}:{}: expected `key = value`", n + 1))?;
            self.set(key.trim(), value.trim())
                .with_context(|| format!("{origin}:{}", n + 1))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        self.apply_text(&text, &path.display().to_string())
    }

    /// One `key = value` line per setting, sorted by key.
    pub fn canonical(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.values {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        let raw = self.get(key);
        raw.parse::<T>()
            .map_err(|e| anyhow!("invalid `{key}` = '{raw}': {e}"))
    }

    pub fn validate(&self) -> Result<ExperimentConfig> {
        let amax: f64 = self.parse("amax")?;
        let sigma: f64 = self.parse("sigma_z")?;
        let nonlinearity = match self.get("channel").to_ascii_lowercase().as_str() {
            "tanh" | "tanh_clip" => Nonlinearity::TanhClip { amax },
            "identity" | "awgn" => Nonlinearity::Identity,
            other => bail!("invalid `channel` = '{other}': expected tanh or identity"),
        };
        let channel = Channel::new(nonlinearity, sigma).map_err(|e| match nonlinearity {
            Nonlinearity::TanhClip { .. } if !(amax.is_finite() && amax > 0.0) => {
                anyhow!("invalid `amax` = '{}': {e}", self.get("amax"))
            }
            _ => anyhow!("invalid `sigma_z` = '{}': {e}", self.get("sigma_z")),
        })?;

        let order: usize = self.parse("order")?;
        let source_name = self.get("source");
        let source = match source_name.parse::<ContinuousFamily>() {
            Ok(fam) => SweepSource::Continuous(fam),
            Err(_) => SweepSource::Discrete(
                Constellation::parse(source_name, Some(order))
                    .map_err(|e| anyhow!("invalid `source` = '{source_name}': {e}"))?,
            ),
        };
        let constellation =
            Constellation::parse(self.get("constellation"), Some(order)).map_err(|e| match e {
                nlcap_core::Error::InvalidOrder(_) => anyhow!("invalid `order` = '{order}': {e}"),
                e => anyhow!("invalid `constellation` = '{}': {e}", self.get("constellation")),
            })?;
        if let SweepSource::Discrete(Constellation::Pam(m)) = source {
            if m < 2 {
                bail!("invalid `order` = '{m}': need at least 2 points");
            }
        }

        let p_min: f64 = self.parse("p_min")?;
        let p_max: f64 = self.parse("p_max")?;
        let per_decade: usize = self.parse("points_per_decade")?;
        if !(p_min.is_finite() && p_min > 0.0) {
            bail!("invalid `p_min` = '{p_min}': must be positive");
        }
        if !(p_max.is_finite() && p_max >= p_min) {
            bail!("invalid `p_max` = '{p_max}': must be at least p_min");
        }
        if per_decade == 0 {
            bail!("invalid `points_per_decade` = '0': must be positive");
        }
        let powers = log_power_grid(p_min, p_max, per_decade)?;

        let grid_points: usize = self.parse("grid_points")?;
        if grid_points.is_multiple_of(2) || grid_points < 129 {
            bail!("invalid `grid_points` = '{grid_points}': must be odd and at least 129");
        }

        let initial_n: usize = self.parse("initial_n")?;
        let max_n: usize = self.parse("max_n")?;
        if initial_n < 2 {
            bail!("invalid `initial_n` = '{initial_n}': need at least 2 particles");
        }
        if max_n < initial_n {
            bail!("invalid `max_n` = '{max_n}': must be at least initial_n");
        }
        let max_iterations: usize = self.parse("max_iterations")?;
        if max_iterations == 0 {
            bail!("invalid `max_iterations` = '0': must be positive");
        }
        let schedule = Schedule {
            initial_particles: initial_n,
            max_particles: max_n,
            restarts: self.parse("restarts")?,
            max_iterations,
            seed: self.parse("seed")?,
            ..Schedule::default()
        };
        let slack: f64 = self.parse("slack")?;
        if !(slack.is_finite() && slack >= 0.0) {
            bail!("invalid `slack` = '{slack}': must be nonnegative");
        }

        Ok(ExperimentConfig {
            channel,
            source,
            constellation,
            powers,
            grid_points,
            schedule,
            slack,
            settings: self.values.clone(),
        })
    }
}

impl ExperimentConfig {
    pub fn canonical(&self) -> String {
        Settings {
            values: self.settings.clone(),
        }
        .canonical()
    }

    /// Hex SHA-256 of the canonical settings text.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        digest.iter().fold(String::new(), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }

    pub fn setting(&self, key: &str) -> &str {
        &self.settings[key]
    }
}
