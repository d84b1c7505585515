//! Oracle query counts attached to block-encodings and solver reports.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub const U_A: &str = "U_A";
pub const U_H: &str = "U_H";
pub const O_U: &str = "O_u";
pub const O_B: &str = "O_b";
pub const O_T: &str = "O_T";
pub const O_LAMBDA: &str = "O_Lambda";
pub const O_EXP: &str = "O_exp";
pub const O_F: &str = "O_f";
pub const O_G: &str = "O_g";
pub const O_PROD: &str = "O_prod";
pub const O_BT: &str = "O_bt";
pub const O_BNORM: &str = "O_bnorm";
pub const U_EIG: &str = "U_eig";
pub const ONE_QUBIT_GATES: &str = "one_qubit_gates";
pub const PREP_PAIR: &str = "prep_pair";

/// Columns emitted for ledgers in CSV output, in this order.
pub const CSV_KEYS: [&str; 15] = [
    U_A, U_H, O_U, O_B, O_T, O_LAMBDA, O_EXP, O_F, O_G, O_PROD, O_BT, O_BNORM, U_EIG, ONE_QUBIT_GATES, PREP_PAIR,
];

/// Counts include inverse and controlled uses of each oracle.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryLedger {
    counts: BTreeMap<String, u64>,
}

impl QueryLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn single(name: &str) -> Self {
        let mut l = Self::new();
        l.add(name, 1);
        l
    }

    pub fn from_pairs(pairs: &[(&str, u64)]) -> Self {
        let mut l = Self::new();
        for &(k, v) in pairs {
            l.add(k, v);
        }
        l
    }

    pub fn add(&mut self, name: &str, n: u64) {
        if n == 0 {
            return;
        }
        *self.counts.entry(name.to_string()).or_insert(0) += n;
    }

    pub fn get(&self, name: &str) -> u64 {
        self.counts.get(name).copied().unwrap_or(0)
    }

    pub fn merge(&mut self, other: &QueryLedger) {
        for (k, v) in &other.counts {
            self.add(k, *v);
        }
    }

    pub fn merged(&self, other: &QueryLedger) -> QueryLedger {
        let mut l = self.clone();
        l.merge(other);
        l
    }

    /// Every count multiplied by `k`, as for `k` sequential uses of a subroutine.
    pub fn repeated(&self, k: u64) -> QueryLedger {
        QueryLedger { counts: self.counts.iter().map(|(n, v)| (n.clone(), v * k)).filter(|(_, v)| *v > 0).collect() }
    }

    /// Sum over oracle names, excluding gate counts.
    pub fn total_queries(&self) -> u64 {
        self.counts.iter().filter(|(k, _)| k.as_str() != ONE_QUBIT_GATES).map(|(_, v)| v).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u64)> {
        self.counts.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// `self ≥ other` entrywise.
    pub fn dominates(&self, other: &QueryLedger) -> bool {
        other.iter().all(|(k, v)| self.get(k) >= v)
    }
}
