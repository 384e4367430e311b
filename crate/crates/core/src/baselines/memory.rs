//! Memory-one and memory-two stochastic strategies.
//!
//! A table maps the last one or two outcomes, written from the player's own
//! perspective as `"XY"` (own move, partner move, each `C` or `D`) and
//! joined oldest first with commas, to the probability of cooperating.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::OnceLock;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Policy, SeatView};
use crate::agent::Outcome;
use crate::game::Action;

const EMBEDDED: &str = include_str!("../../data/memory_strategies.json");

#[derive(Debug, Error)]
pub enum MemoryTablesError {
    #[error("cannot read memory tables: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed memory tables: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("{strategy}: missing entry `{key}`")]
    MissingEntry { strategy: String, key: String },
    #[error("{strategy}: probability {value} for `{key}` is outside [0, 1]")]
    OutOfRange { strategy: String, key: String, value: f64 },
}

#[derive(Deserialize)]
struct RawVector {
    initial: f64,
    table: BTreeMap<String, f64>,
}

#[derive(Deserialize)]
struct RawTables {
    mem1: RawVector,
    mem2: RawVector,
}

/// Cooperation probabilities indexed by the packed outcome history.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MemoryVector {
    pub depth: usize,
    pub initial: f64,
    pub table: Vec<f64>,
}

const OUTCOMES: [&str; 4] = ["CC", "CD", "DC", "DD"];

fn history_keys(depth: usize) -> Vec<String> {
    let mut keys = vec![String::new()];
    for _ in 0..depth {
        keys = keys
            .iter()
            .flat_map(|k| {
                OUTCOMES.iter().map(move |o| {
                    if k.is_empty() {
                        o.to_string()
                    } else {
                        format!("{k},{o}")
                    }
                })
            })
            .collect();
    }
    keys
}

fn check_prob(strategy: &str, key: &str, value: f64) -> Result<f64, MemoryTablesError> {
    if (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(MemoryTablesError::OutOfRange {
            strategy: strategy.to_string(),
            key: key.to_string(),
            value,
        })
    }
}

impl MemoryVector {
    fn from_raw(strategy: &str, depth: usize, raw: RawVector) -> Result<Self, MemoryTablesError> {
        let initial = check_prob(strategy, "initial", raw.initial)?;
        let table = history_keys(depth)
            .into_iter()
            .map(|key| match raw.table.get(&key) {
                Some(v) => check_prob(strategy, &key, *v),
                None => Err(MemoryTablesError::MissingEntry {
                    strategy: strategy.to_string(),
                    key,
                }),
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(MemoryVector { depth, initial, table })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MemoryTables {
    pub mem1: MemoryVector,
    pub mem2: MemoryVector,
}

impl MemoryTables {
    pub fn parse(text: &str) -> Result<Self, MemoryTablesError> {
        let raw: RawTables = serde_json::from_str(text)?;
        Ok(MemoryTables {
            mem1: MemoryVector::from_raw("mem1", 1, raw.mem1)?,
            mem2: MemoryVector::from_raw("mem2", 2, raw.mem2)?,
        })
    }

    pub fn from_path(path: &Path) -> Result<Self, MemoryTablesError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// The tables shipped with the crate.
    pub fn embedded() -> &'static MemoryTables {
        static TABLES: OnceLock<MemoryTables> = OnceLock::new();
        TABLES.get_or_init(|| MemoryTables::parse(EMBEDDED).expect("embedded memory tables are valid"))
    }
}

pub(crate) struct MemoryPolicy {
    view: SeatView,
    vector: MemoryVector,
    /// Packed outcomes, most recent last. Before play starts the history is
    /// padded with mutual cooperation.
    history: Vec<usize>,
    rounds_seen: usize,
}

impl MemoryPolicy {
    pub fn new(view: SeatView, vector: MemoryVector) -> Self {
        MemoryPolicy {
            history: vec![0; vector.depth],
            view,
            vector,
            rounds_seen: 0,
        }
    }

    fn p_cooperate(&self) -> f64 {
        if self.rounds_seen == 0 {
            return self.vector.initial;
        }
        let idx = self.history.iter().fold(0, |acc, o| acc * 4 + o);
        self.vector.table[idx]
    }
}

impl Policy for MemoryPolicy {
    fn choose(&mut self, _round: usize, rng: &mut ChaCha8Rng) -> Action {
        if rng.gen::<f64>() < self.p_cooperate() {
            self.view.cooperate
        } else {
            self.view.cooperate.other()
        }
    }

    fn update(&mut self, outcome: &Outcome) {
        let own_d = outcome.action_of(self.view.seat) != self.view.cooperate;
        let partner_d = outcome.action_of(self.view.seat.other()) != self.view.partner_cooperate;
        let code = (own_d as usize) * 2 + partner_d as usize;
        self.history.remove(0);
        self.history.push(code);
        self.rounds_seen += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn embedded_tables_are_complete() {
        let t = MemoryTables::embedded();
        assert_eq!(t.mem1.table.len(), 4);
        assert_eq!(t.mem2.table.len(), 16);
        assert!(t.mem2.table.iter().all(|p| (0.0..=1.0).contains(p)));
    }

    #[test]
    fn rejects_missing_and_out_of_range() {
        let missing = r#"{"mem1":{"initial":1,"table":{"CC":1,"CD":0,"DC":0}},
                          "mem2":{"initial":1,"table":{}}}"#;
        assert!(matches!(
            MemoryTables::parse(missing),
            Err(MemoryTablesError::MissingEntry { .. })
        ));
        let bad = EMBEDDED.replace("\"CC\": 0.99", "\"CC\": 1.5");
        assert!(matches!(
            MemoryTables::parse(&bad),
            Err(MemoryTablesError::OutOfRange { .. })
        ));
    }

    #[test]
    fn history_key_order_matches_packing() {
        let keys = history_keys(2);
        assert_eq!(keys[0], "CC,CC");
        assert_eq!(keys[1], "CC,CD");
        assert_eq!(keys[4], "CD,CC");
        assert_eq!(keys[15], "DD,DD");
    }
}
