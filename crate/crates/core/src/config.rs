//! Scenario configuration: defaults, flat `key = value` files and overrides.
//!
//! Keys are the dotted field names of [`ScenarioConfig`], e.g.
//! `strategy.kind` or `current_cache.ttl_ticks`. Later sources win:
//! built-in defaults, then the file, then command-line overrides.

use std::fmt::Write as _;
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::error::ConfigError;
use crate::info_cache::{DEFAULT_CAPACITY, DEFAULT_TTL_TICKS};
use crate::metrics::DEFAULT_SAMPLE_EVERY_TICKS;
use crate::model::{InteractionKind, SimTime, TICKS_PER_DAY, TICKS_PER_SECOND};
use crate::overlay::DEFAULT_REPLICATION_FACTOR;
use crate::social::{StrategyConfig, StrategyKind, Trigger};
use crate::workload::DatasetStats;

pub const TICKS_PER_HOUR: u64 = 3600 * TICKS_PER_SECOND;

/// Which cache tiers answer requests before the overlay.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CacheSetup {
    None,
    CurrentOnly,
    SocialOnly,
    Both,
}

impl CacheSetup {
    pub const ALL: [CacheSetup; 4] = [
        CacheSetup::None,
        CacheSetup::CurrentOnly,
        CacheSetup::SocialOnly,
        CacheSetup::Both,
    ];

    pub fn current_enabled(self) -> bool {
        matches!(self, CacheSetup::CurrentOnly | CacheSetup::Both)
    }

    pub fn social_enabled(self) -> bool {
        matches!(self, CacheSetup::SocialOnly | CacheSetup::Both)
    }

    pub fn label(self) -> &'static str {
        match self {
            CacheSetup::None => "none",
            CacheSetup::CurrentOnly => "current_only",
            CacheSetup::SocialOnly => "social_only",
            CacheSetup::Both => "both",
        }
    }
}

impl std::fmt::Display for CacheSetup {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CacheSetup::None => "None",
            CacheSetup::CurrentOnly => "CurrentOnly",
            CacheSetup::SocialOnly => "SocialOnly",
            CacheSetup::Both => "Both",
        })
    }
}

impl FromStr for CacheSetup {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace(['_', '-'], "").as_str() {
            "none" => Ok(CacheSetup::None),
            "currentonly" | "current" => Ok(CacheSetup::CurrentOnly),
            "socialonly" | "social" => Ok(CacheSetup::SocialOnly),
            "both" => Ok(CacheSetup::Both),
            _ => Err(format!(
                "unknown cache setup {s:?} (expected None, CurrentOnly, SocialOnly or Both)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CurrentCacheConfig {
    pub ttl_ticks: u64,
    pub capacity: usize,
}

impl Default for CurrentCacheConfig {
    fn default() -> Self {
        CurrentCacheConfig {
            ttl_ticks: DEFAULT_TTL_TICKS,
            capacity: DEFAULT_CAPACITY,
        }
    }
}

/// Shape of the synthetic workload beyond what the data-set statistics fix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorkloadConfig {
    /// Mean ticks between two lookups of one user.
    pub lookup_gap_ticks: u64,
    /// Wall slots per user, written round-robin.
    pub keys_per_user: usize,
    /// Exponent of the per-user friend preference (rank r read ∝ 1/r^s).
    pub friend_skew: f64,
    /// Chance of stopping at each candidate when walking a friend's keys
    /// from the profile towards older wall slots.
    pub lookup_recency_p: f64,
    pub payload_min: u32,
    pub payload_max: u32,
}

impl Default for WorkloadConfig {
    fn default() -> Self {
        WorkloadConfig {
            lookup_gap_ticks: 2 * TICKS_PER_SECOND,
            keys_per_user: 20,
            friend_skew: 1.5,
            lookup_recency_p: 0.5,
            payload_min: 256,
            payload_max: 2048,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OverlayConfig {
    pub replication_factor: u32,
    /// Delivery delay of a dispatcher message; zero delivers within the step.
    pub hop_latency_ticks: u64,
}

impl Default for OverlayConfig {
    fn default() -> Self {
        OverlayConfig {
            replication_factor: DEFAULT_REPLICATION_FACTOR,
            hop_latency_ticks: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MetricsConfig {
    pub sample_every_ticks: u64,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        MetricsConfig {
            sample_every_ticks: DEFAULT_SAMPLE_EVERY_TICKS,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub peer_count: usize,
    pub friends_per_user: usize,
    pub sim_duration_ticks: u64,
    /// Days the data set is compressed into; `None` uses the run length.
    pub new_experiment_time_days: Option<f64>,
    /// Times of the friend-request phases; `None` uses 40 % and 80 % of the run.
    pub friend_request_phases: Option<Vec<SimTime>>,
    pub strategy: StrategyConfig,
    pub cache_setup: CacheSetup,
    pub current_cache: CurrentCacheConfig,
    pub seed: u64,
    pub workload: WorkloadConfig,
    pub overlay: OverlayConfig,
    pub metrics: MetricsConfig,
    pub dataset: DatasetStats,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            peer_count: 64,
            friends_per_user: 25,
            sim_duration_ticks: 6 * TICKS_PER_HOUR,
            new_experiment_time_days: None,
            friend_request_phases: None,
            strategy: StrategyConfig::default(),
            cache_setup: CacheSetup::SocialOnly,
            current_cache: CurrentCacheConfig::default(),
            seed: 1,
            workload: WorkloadConfig::default(),
            overlay: OverlayConfig::default(),
            metrics: MetricsConfig::default(),
            dataset: DatasetStats::FACEBOOK_09,
        }
    }
}

const KEYS: &[&str] = &[
    "peer_count",
    "friends_per_user",
    "sim_duration_ticks",
    "new_experiment_time_days",
    "friend_request_phases",
    "cache_setup",
    "seed",
    "strategy.kind",
    "strategy.alpha",
    "strategy.beta",
    "strategy.n",
    "strategy.m",
    "strategy.update_interval_ticks",
    "strategy.trigger",
    "strategy.bootstrapping",
    "strategy.muc_capacity",
    "strategy.weights.lookup",
    "strategy.weights.wall_post",
    "strategy.weights.friend_request",
    "strategy.weights.like",
    "strategy.weights.comment",
    "current_cache.ttl_ticks",
    "current_cache.capacity",
    "workload.lookup_gap_ticks",
    "workload.keys_per_user",
    "workload.friend_skew",
    "workload.lookup_recency_p",
    "workload.payload_min",
    "workload.payload_max",
    "overlay.replication_factor",
    "overlay.hop_latency_ticks",
    "metrics.sample_every_ticks",
];

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e: T::Err| ConfigError::new(key, format!("cannot parse {value:?}: {e}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool, ConfigError> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(ConfigError::new(key, format!("expected a boolean, got {value:?}"))),
    }
}

/// `"auto"` means unset.
fn is_auto(value: &str) -> bool {
    value.eq_ignore_ascii_case("auto")
}

impl ScenarioConfig {
    /// Defaults for the cache comparison: two simulated days.
    pub fn cache_comparison() -> Self {
        ScenarioConfig {
            sim_duration_ticks: 48 * TICKS_PER_HOUR,
            cache_setup: CacheSetup::Both,
            ..ScenarioConfig::default()
        }
    }

    pub fn keys() -> &'static [&'static str] {
        KEYS
    }

    /// Sets one dotted key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let value = value.trim();
        let value = value
            .strip_prefix('"')
            .and_then(|v| v.strip_suffix('"'))
            .unwrap_or(value);
        if let Some(kind) = key.strip_prefix("strategy.weights.") {
            let kind = InteractionKind::ALL
                .into_iter()
                .find(|k| k.name() == kind)
                .ok_or_else(|| ConfigError::new(key, "unknown interaction kind"))?;
            let w: f64 = parse_value(key, value)?;
            if !(w >= 0.0 && w.is_finite()) {
                return Err(ConfigError::new(key, "weights must be non-negative"));
            }
            self.strategy.weights.set(kind, w);
            return Ok(());
        }
        match key {
            "peer_count" => self.peer_count = parse_value(key, value)?,
            "friends_per_user" => self.friends_per_user = parse_value(key, value)?,
            "sim_duration_ticks" => self.sim_duration_ticks = parse_value(key, value)?,
            "new_experiment_time_days" => {
                self.new_experiment_time_days = if is_auto(value) {
                    None
                } else {
                    Some(parse_value(key, value)?)
                }
            }
            "friend_request_phases" => {
                self.friend_request_phases = if is_auto(value) {
                    None
                } else {
                    let phases = value
                        .split(',')
                        .map(str::trim)
                        .filter(|s| !s.is_empty())
                        .map(|s| parse_value(key, s).map(SimTime))
                        .collect::<Result<Vec<_>, _>>()?;
                    Some(phases)
                }
            }
            "cache_setup" => self.cache_setup = parse_value(key, value)?,
            "seed" => self.seed = parse_value(key, value)?,
            "strategy.kind" => self.strategy.kind = parse_value::<StrategyKind>(key, value)?,
            "strategy.alpha" => self.strategy.alpha = parse_value(key, value)?,
            "strategy.beta" => self.strategy.beta = parse_value(key, value)?,
            "strategy.n" => self.strategy.n = parse_value(key, value)?,
            "strategy.m" => self.strategy.m = parse_value(key, value)?,
            "strategy.update_interval_ticks" => self.strategy.update_interval = parse_value(key, value)?,
            "strategy.trigger" => self.strategy.trigger = parse_value::<Trigger>(key, value)?,
            "strategy.bootstrapping" => self.strategy.bootstrapping = parse_bool(key, value)?,
            "strategy.muc_capacity" => self.strategy.muc_capacity = parse_value(key, value)?,
            "current_cache.ttl_ticks" => self.current_cache.ttl_ticks = parse_value(key, value)?,
            "current_cache.capacity" => self.current_cache.capacity = parse_value(key, value)?,
            "workload.lookup_gap_ticks" => self.workload.lookup_gap_ticks = parse_value(key, value)?,
            "workload.keys_per_user" => self.workload.keys_per_user = parse_value(key, value)?,
            "workload.friend_skew" => self.workload.friend_skew = parse_value(key, value)?,
            "workload.lookup_recency_p" => self.workload.lookup_recency_p = parse_value(key, value)?,
            "workload.payload_min" => self.workload.payload_min = parse_value(key, value)?,
            "workload.payload_max" => self.workload.payload_max = parse_value(key, value)?,
            "overlay.replication_factor" => self.overlay.replication_factor = parse_value(key, value)?,
            "overlay.hop_latency_ticks" => self.overlay.hop_latency_ticks = parse_value(key, value)?,
            "metrics.sample_every_ticks" => self.metrics.sample_every_ticks = parse_value(key, value)?,
            _ => return Err(ConfigError::new(key, "unknown key")),
        }
        Ok(())
    }

    /// Applies a config file's `key = value` lines. `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| ConfigError::new(line, format!("line {}: expected `key = value`", i + 1)))?;
            self.set(key.trim(), value)?;
        }
        Ok(())
    }

    /// Applies `KEY=VALUE` overrides in order.
    pub fn apply_overrides<S: AsRef<str>>(&mut self, overrides: &[S]) -> Result<(), ConfigError> {
        for o in overrides {
            let o = o.as_ref();
            let (key, value) = o
                .split_once('=')
                .ok_or_else(|| ConfigError::new(o, "override must look like KEY=VALUE"))?;
            self.set(key.trim(), value)?;
        }
        Ok(())
    }

    /// defaults → file → overrides, then validation.
    pub fn resolve<S: AsRef<str>>(
        base: ScenarioConfig,
        file_text: Option<&str>,
        overrides: &[S],
    ) -> Result<ScenarioConfig, ConfigError> {
        let mut cfg = base;
        if let Some(text) = file_text {
            cfg.apply_text(text)?;
        }
        cfg.apply_overrides(overrides)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.peer_count < 2 {
            return Err(ConfigError::new("peer_count", "need at least two peers"));
        }
        if self.friends_per_user == 0 {
            return Err(ConfigError::new("friends_per_user", "must be positive"));
        }
        if self.friends_per_user >= self.peer_count {
            return Err(ConfigError::new(
                "friends_per_user",
                format!(
                    "must be smaller than peer_count ({} >= {})",
                    self.friends_per_user, self.peer_count
                ),
            ));
        }
        if self.friends_per_user % 2 == 1 && self.peer_count % 2 == 1 {
            return Err(ConfigError::new(
                "friends_per_user",
                "an odd friend count needs an even peer count",
            ));
        }
        if self.sim_duration_ticks == 0 {
            return Err(ConfigError::new("sim_duration_ticks", "must be positive"));
        }
        if let Some(days) = self.new_experiment_time_days {
            if !(days > 0.0 && days.is_finite()) {
                return Err(ConfigError::new("new_experiment_time_days", "must be positive"));
            }
        }
        if let Some(phases) = &self.friend_request_phases {
            if phases.iter().any(|p| p.ticks() == 0 || p.ticks() >= self.sim_duration_ticks) {
                return Err(ConfigError::new(
                    "friend_request_phases",
                    "phases must fall strictly inside the run",
                ));
            }
            if phases.windows(2).any(|w| w[0] >= w[1]) {
                return Err(ConfigError::new("friend_request_phases", "phases must be increasing"));
            }
        }
        self.strategy.validate().map_err(|m| {
            let key = if m.contains("alpha") {
                "strategy.alpha"
            } else if m.contains("MUC") {
                "strategy.muc_capacity"
            } else if m.contains("interval") {
                "strategy.update_interval_ticks"
            } else {
                "strategy.n"
            };
            ConfigError::new(key, m)
        })?;
        if self.current_cache.capacity == 0 {
            return Err(ConfigError::new("current_cache.capacity", "must be positive"));
        }
        if self.current_cache.ttl_ticks == 0 {
            return Err(ConfigError::new("current_cache.ttl_ticks", "must be positive"));
        }
        let w = &self.workload;
        if w.lookup_gap_ticks == 0 {
            return Err(ConfigError::new("workload.lookup_gap_ticks", "must be positive"));
        }
        if w.keys_per_user == 0 {
            return Err(ConfigError::new("workload.keys_per_user", "must be positive"));
        }
        if !(w.friend_skew >= 0.0 && w.friend_skew.is_finite()) {
            return Err(ConfigError::new("workload.friend_skew", "must be non-negative"));
        }
        if !(w.lookup_recency_p > 0.0 && w.lookup_recency_p <= 1.0) {
            return Err(ConfigError::new("workload.lookup_recency_p", "must lie in (0, 1]"));
        }
        if w.payload_min > w.payload_max {
            return Err(ConfigError::new("workload.payload_min", "exceeds workload.payload_max"));
        }
        if self.overlay.replication_factor == 0 {
            return Err(ConfigError::new("overlay.replication_factor", "must be positive"));
        }
        if self.metrics.sample_every_ticks == 0 {
            return Err(ConfigError::new("metrics.sample_every_ticks", "must be positive"));
        }
        Ok(())
    }

    pub fn new_experiment_days(&self) -> f64 {
        self.new_experiment_time_days
            .unwrap_or(self.sim_duration_ticks as f64 / TICKS_PER_DAY as f64)
    }

    pub fn phase_times(&self) -> Vec<SimTime> {
        match &self.friend_request_phases {
            Some(p) => p.clone(),
            None => [0.4, 0.8]
                .iter()
                .map(|f| SimTime((self.sim_duration_ticks as f64 * f) as u64))
                .filter(|t| t.ticks() > 0)
                .collect(),
        }
    }

    /// Every key with its current value, one `key = value` line each, in a
    /// fixed order. Parsing the result reproduces the config.
    pub fn render(&self) -> String {
        let s = &self.strategy;
        let mut out = String::new();
        let mut line = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        line("peer_count", self.peer_count.to_string());
        line("friends_per_user", self.friends_per_user.to_string());
        line("sim_duration_ticks", self.sim_duration_ticks.to_string());
        line(
            "new_experiment_time_days",
            self.new_experiment_time_days.map_or("auto".into(), |d| d.to_string()),
        );
        line(
            "friend_request_phases",
            match &self.friend_request_phases {
                None => "auto".into(),
                Some(p) => p.iter().map(|t| t.ticks().to_string()).collect::<Vec<_>>().join(","),
            },
        );
        line("cache_setup", self.cache_setup.to_string());
        line("seed", self.seed.to_string());
        line("strategy.kind", s.kind.to_string());
        line("strategy.alpha", s.alpha.to_string());
        line("strategy.beta", s.beta.to_string());
        line("strategy.n", s.n.to_string());
        line("strategy.m", s.m.to_string());
        line("strategy.update_interval_ticks", s.update_interval.to_string());
        line("strategy.trigger", s.trigger.to_string());
        line("strategy.bootstrapping", s.bootstrapping.to_string());
        line("strategy.muc_capacity", s.muc_capacity.to_string());
        for kind in InteractionKind::ALL {
            line(&format!("strategy.weights.{}", kind.name()), s.weights.get(kind).to_string());
        }
        line("current_cache.ttl_ticks", self.current_cache.ttl_ticks.to_string());
        line("current_cache.capacity", self.current_cache.capacity.to_string());
        let w = &self.workload;
        line("workload.lookup_gap_ticks", w.lookup_gap_ticks.to_string());
        line("workload.keys_per_user", w.keys_per_user.to_string());
        line("workload.friend_skew", w.friend_skew.to_string());
        line("workload.lookup_recency_p", w.lookup_recency_p.to_string());
        line("workload.payload_min", w.payload_min.to_string());
        line("workload.payload_max", w.payload_max.to_string());
        line("overlay.replication_factor", self.overlay.replication_factor.to_string());
        line("overlay.hop_latency_ticks", self.overlay.hop_latency_ticks.to_string());
        line("metrics.sample_every_ticks", self.metrics.sample_every_ticks.to_string());
        out
    }

    /// Short content hash of the rendered config (which includes the seed).
    pub fn run_id(&self) -> String {
        let digest = Sha256::digest(self.render().as_bytes());
        hex::encode(&digest[..6])
    }
}
