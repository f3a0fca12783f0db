use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::oracle::Certificate;
use crate::tensor_factor::FactorSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Equivalent,
    Inequivalent,
    Inconclusive,
}

impl Outcome {
    /// Process exit code used by the command line tool.
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Equivalent => 0,
            Outcome::Inequivalent => 1,
            Outcome::Inconclusive => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Equivalent => "equivalent",
            Outcome::Inequivalent => "inequivalent",
            Outcome::Inconclusive => "inconclusive",
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Outcome of an equivalence check.
///
/// `Equivalent` always carries a witness that passed the oracle in both
/// directions; `Inequivalent` is only produced by an invariant mismatch.
#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub outcome: Outcome,
    pub witness: Option<FactorSet>,
    pub reason: String,
    pub residuals: BTreeMap<String, f64>,
}

pub type PureVerdict = Verdict;
pub type MixedVerdict = Verdict;

impl Verdict {
    pub fn equivalent(witness: FactorSet, reason: impl Into<String>, residuals: BTreeMap<String, f64>) -> Self {
        Self {
            outcome: Outcome::Equivalent,
            witness: Some(witness),
            reason: reason.into(),
            residuals,
        }
    }

    pub fn inequivalent(reason: impl Into<String>, residuals: BTreeMap<String, f64>) -> Self {
        Self {
            outcome: Outcome::Inequivalent,
            witness: None,
            reason: reason.into(),
            residuals,
        }
    }

    pub fn inconclusive(reason: impl Into<String>, residuals: BTreeMap<String, f64>) -> Self {
        Self {
            outcome: Outcome::Inconclusive,
            witness: None,
            reason: reason.into(),
            residuals,
        }
    }
}

/// Search budget and seeding shared by the equivalence checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckOptions {
    pub seed: u64,
    /// Pure states: try every bipartition instead of the leading-party cuts.
    pub all_cuts: bool,
    /// Nelder–Mead starts for the diagonal gauge search.
    pub gauge_starts: usize,
    /// Random starts for the local-factor fit.
    pub local_starts: usize,
}

impl Default for CheckOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            all_cuts: false,
            gauge_starts: 32,
            local_starts: 24,
        }
    }
}

impl CheckOptions {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }
}

pub(crate) fn certificate_residuals(cert: &Certificate) -> BTreeMap<String, f64> {
    let mut res = BTreeMap::new();
    res.insert("oracle_forward".to_string(), cert.forward);
    res.insert("oracle_reverse".to_string(), cert.reverse);
    res.insert("condition".to_string(), cert.condition);
    res
}
