use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::Path;

use crate::error::{Error, Result};

pub const NUM_TABLES: usize = 6;
pub const QUEUE_SLOTS: usize = 7;
pub const DEFAULT_LIVES: u32 = 5;

/// Per-event reward constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rewards {
    pub seat: f64,
    pub take_order: f64,
    /// Paid once per order moved to the kitchen.
    pub submit: f64,
    pub pickup: f64,
    pub serve: f64,
    pub bill_base: f64,
    pub bill_per_heart: f64,
    pub clean: f64,
    pub return_dishes: f64,
    pub illegal: f64,
    pub leave: f64,
}

impl Default for Rewards {
    fn default() -> Self {
        Rewards {
            seat: 2.0,
            take_order: 1.0,
            submit: 1.0,
            pickup: 1.0,
            serve: 2.0,
            bill_base: 10.0,
            bill_per_heart: 2.0,
            clean: 1.0,
            return_dishes: 1.0,
            illegal: -1.0,
            leave: -100.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvConfig {
    pub table_sizes: Vec<u32>,
    pub queue_capacity: usize,
    pub max_lives: u32,
    pub arrival_prob: f64,
    pub group_size_min: u32,
    pub group_size_max: u32,
    pub happiness_max: f64,
    pub decay_queue: f64,
    pub decay_await_order: f64,
    pub decay_await_food: f64,
    pub decay_await_bill: f64,
    pub cook_steps: u32,
    pub eat_steps: u32,
    pub rewards: Rewards,
    pub gamma: f64,
    pub max_steps: u64,
}

impl EnvConfig {
    /// Baseline difficulty.
    pub fn standard() -> Self {
        EnvConfig {
            table_sizes: vec![2, 2, 4, 4, 6, 6],
            queue_capacity: QUEUE_SLOTS,
            max_lives: DEFAULT_LIVES,
            arrival_prob: 0.10,
            group_size_min: 1,
            group_size_max: 6,
            happiness_max: 5.0,
            decay_queue: 0.02,
            decay_await_order: 0.02,
            decay_await_food: 0.01,
            decay_await_bill: 0.01,
            cook_steps: 15,
            eat_steps: 20,
            rewards: Rewards::default(),
            gamma: 0.99,
            max_steps: 2000,
        }
    }

    /// Raised difficulty used for all experiments.
    pub fn hard() -> Self {
        EnvConfig { arrival_prob: 0.14, decay_queue: 0.03, ..EnvConfig::standard() }
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "standard" => Ok(Self::standard()),
            "hard" => Ok(Self::hard()),
            other => Err(Error::InvalidConfig {
                field: "preset",
                reason: format!("unknown preset {other:?} (expected \"standard\" or \"hard\")"),
            }),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &'static str, reason: &str| {
            Err(Error::InvalidConfig { field, reason: reason.to_string() })
        };
        if self.table_sizes.len() != NUM_TABLES {
            return bad("table_sizes", "table_sizes must have 6 entries");
        }
        if self.table_sizes.iter().any(|&s| s < 1) {
            return bad("table_sizes", "every table must seat at least 1");
        }
        if self.queue_capacity != QUEUE_SLOTS {
            return bad("queue_capacity", "queue_capacity must be 7");
        }
        if self.max_lives < 1 || self.max_lives > DEFAULT_LIVES {
            return bad("max_lives", "max_lives must be in 1..=5");
        }
        if !(0.0..=1.0).contains(&self.arrival_prob) {
            return bad("arrival_prob", "arrival_prob must lie in [0, 1]");
        }
        if self.group_size_min < 1 || self.group_size_min > self.group_size_max {
            return bad("group_size_min", "need 1 <= group_size_min <= group_size_max");
        }
        if self.group_size_max > 6 {
            return bad("group_size_max", "group_size_max must be at most 6");
        }
        if !(self.happiness_max > 0.0 && self.happiness_max.is_finite()) {
            return bad("happiness_max", "happiness_max must be positive and finite");
        }
        for (field, v) in [
            ("decay_queue", self.decay_queue),
            ("decay_await_order", self.decay_await_order),
            ("decay_await_food", self.decay_await_food),
            ("decay_await_bill", self.decay_await_bill),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(field, "decay rates must be finite and >= 0");
            }
        }
        if self.cook_steps < 1 {
            return bad("cook_steps", "cook_steps must be >= 1");
        }
        if self.eat_steps < 1 {
            return bad("eat_steps", "eat_steps must be >= 1");
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return bad("gamma", "gamma must lie in (0, 1]");
        }
        if self.max_steps < 1 {
            return bad("max_steps", "max_steps must be >= 1");
        }
        Ok(())
    }

    /// Short stable digest of the canonical serialization.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Parse the TOML config file format: an optional `preset` key followed by any
    /// field overrides (`[rewards]` table for reward constants).
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let mut doc: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::Parse { what: "config".into(), reason: e.to_string() })?;
        let preset = match doc.remove("preset") {
            Some(toml::Value::String(s)) => s,
            Some(_) => {
                return Err(Error::InvalidConfig { field: "preset", reason: "preset must be a string".into() })
            }
            None => "hard".to_string(),
        };
        let base = Self::preset(&preset)?;
        let mut merged = toml::Table::try_from(&base).expect("config serializes to toml");
        for (key, value) in doc {
            match (merged.get_mut(&key), value) {
                (Some(toml::Value::Table(dst)), toml::Value::Table(src)) => {
                    for (k, v) in src {
                        dst.insert(k, v);
                    }
                }
                (_, value) => {
                    merged.insert(key, value);
                }
            }
        }
        let cfg: EnvConfig = toml::Value::Table(merged)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Parse { what: "config".into(), reason: e.to_string() })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }
}

impl Default for EnvConfig {
    fn default() -> Self {
        EnvConfig::hard()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_hard_preset() {
        let c = EnvConfig::default();
        assert_eq!(c.table_sizes, vec![2, 2, 4, 4, 6, 6]);
        assert_eq!(c.arrival_prob, 0.14);
        assert_eq!(c.decay_queue, 0.03);
        assert_eq!(c.queue_capacity, 7);
        assert_eq!(c.max_lives, 5);
        c.validate().unwrap();
    }

    #[test]
    fn five_tables_rejected() {
        let c = EnvConfig { table_sizes: vec![2, 2, 4, 4, 6], ..EnvConfig::default() };
        let err = c.validate().unwrap_err();
        assert!(err.to_string().contains("table_sizes must have 6 entries"), "{err}");
    }

    #[test]
    fn toml_overrides_merge_into_preset() {
        let c = EnvConfig::from_toml_str(
            "preset = \"standard\"\narrival_prob = 0.2\n[rewards]\nleave = -50.0\n",
        )
        .unwrap();
        assert_eq!(c.arrival_prob, 0.2);
        assert_eq!(c.rewards.leave, -50.0);
        assert_eq!(c.rewards.seat, 2.0);
        assert_eq!(c.decay_queue, 0.02);
    }

    #[test]
    fn toml_reports_bad_field() {
        let err = EnvConfig::from_toml_str("cook_steps = 0\n").unwrap_err();
        assert!(err.to_string().contains("cook_steps"), "{err}");
        assert!(EnvConfig::from_toml_str("no_such_key = 1\n").is_err());
        assert!(EnvConfig::from_toml_str("preset = \"easy\"\n").is_err());
    }

    #[test]
    fn hash_distinguishes_presets() {
        assert_ne!(EnvConfig::hard().hash(), EnvConfig::standard().hash());
        assert_eq!(EnvConfig::hard().hash(), EnvConfig::hard().hash());
        assert_eq!(EnvConfig::hard().hash().len(), 16);
    }
}
