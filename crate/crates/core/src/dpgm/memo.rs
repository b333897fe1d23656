use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use super::selector::{FeatureView, SubstateSelector, Tuple};
use crate::error::Result;
use crate::trajectory::Dataset;

/// Count-based lookup: how often the demonstrator picked this action in each sub-state.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MemoTable {
    pub action: usize,
    /// tuple -> (positive count, total count)
    pub counts: BTreeMap<Tuple, (u64, u64)>,
}

#[derive(Serialize, Deserialize)]
struct MemoEntry {
    key: Tuple,
    positive: u64,
    total: u64,
}

#[derive(Serialize, Deserialize)]
struct MemoRepr {
    action: usize,
    entries: Vec<MemoEntry>,
}

impl Serialize for MemoTable {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MemoRepr {
            action: self.action,
            entries: self
                .counts
                .iter()
                .map(|(k, &(positive, total))| MemoEntry { key: k.clone(), positive, total })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for MemoTable {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = MemoRepr::deserialize(d)?;
        let mut counts = BTreeMap::new();
        for e in repr.entries {
            if e.positive > e.total {
                return Err(serde::de::Error::custom("memo entry with more positives than total"));
            }
            counts.insert(e.key, (e.positive, e.total));
        }
        Ok(MemoTable { action: repr.action, counts })
    }
}

impl MemoTable {
    pub fn new(action: usize) -> Self {
        MemoTable { action, counts: BTreeMap::new() }
    }

    pub fn observe(&mut self, tuple: Tuple, positive: bool) {
        let e = self.counts.entry(tuple).or_insert((0, 0));
        e.0 += positive as u64;
        e.1 += 1;
    }

    /// Empirical selection frequency; 0 for never-seen sub-states.
    pub fn score(&self, tuple: &[u16]) -> f64 {
        match self.counts.get(tuple) {
            Some(&(pos, total)) if total > 0 => pos as f64 / total as f64,
            _ => 0.0,
        }
    }
}

pub fn memo_fit(dataset: &Dataset, action: usize, selector: &SubstateSelector) -> Result<MemoTable> {
    let mut table = MemoTable::new(action);
    let cfg = dataset.config();
    for tr in &dataset.transitions {
        let view = FeatureView::new(&tr.state, cfg)?;
        table.observe(selector.select(&view)?, tr.action == action);
    }
    Ok(table)
}

pub fn memo_score(table: &MemoTable, tuple: &[u16]) -> f64 {
    table.score(tuple)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratio_and_unseen_default() {
        let mut m = MemoTable::new(7);
        for i in 0..10 {
            m.observe(vec![1, 2], i < 7);
        }
        assert!((m.score(&[1, 2]) - 0.7).abs() < 1e-15);
        assert_eq!(m.score(&[2, 1]), 0.0);
    }

    #[test]
    fn serde_round_trip_and_invariant() {
        let mut m = MemoTable::new(3);
        m.observe(vec![0], true);
        m.observe(vec![0], false);
        m.observe(vec![4], false);
        let text = serde_json::to_string(&m).unwrap();
        let back: MemoTable = serde_json::from_str(&text).unwrap();
        assert_eq!(back, m);
        let bad = r#"{"action":1,"entries":[{"key":[0],"positive":3,"total":2}]}"#;
        assert!(serde_json::from_str::<MemoTable>(bad).is_err());
    }
}
