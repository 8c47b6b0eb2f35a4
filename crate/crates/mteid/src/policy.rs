//! Policy files.

use std::collections::BTreeMap;
use std::path::Path;

use mteid_core::{PolicyRule, SolveResult};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::output::write_atomic;

/// Interval endpoints in policy files are rounded to this many decimals.
pub const ENDPOINT_DECIMALS: i32 = 6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Condition {
    State(String),
    Interval { lo: f64, hi: f64, closed: bool },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuleEntry {
    pub when: BTreeMap<String, Condition>,
    pub choose: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecisionPolicy {
    pub decision: String,
    pub context: Vec<String>,
    pub rules: Vec<RuleEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyFile {
    pub meu: f64,
    pub decisions: Vec<DecisionPolicy>,
}

fn round_endpoint(x: f64) -> f64 {
    let scale = 10f64.powi(ENDPOINT_DECIMALS);
    (x * scale).round() / scale
}

impl DecisionPolicy {
    pub fn from_rule(policy: &PolicyRule) -> Self {
        let rules = policy
            .rules
            .iter()
            .map(|r| {
                let mut when = BTreeMap::new();
                for (v, &s) in policy.finite.iter().zip(&r.states) {
                    when.insert(v.name.clone(), Condition::State(v.states()[s].clone()));
                }
                for (v, iv) in policy.continuous.iter().zip(&r.bounds) {
                    let c = Condition::Interval {
                        lo: round_endpoint(iv.lo),
                        hi: round_endpoint(iv.hi),
                        closed: iv.closed,
                    };
                    when.insert(v.name.clone(), c);
                }
                RuleEntry {
                    when,
                    choose: policy.decision.states()[r.choice].clone(),
                }
            })
            .collect();
        DecisionPolicy {
            decision: policy.decision.name.clone(),
            context: policy.context_names(),
            rules,
        }
    }
}

impl PolicyFile {
    pub fn from_result(r: &SolveResult) -> Self {
        PolicyFile {
            meu: r.meu,
            decisions: r.policies.iter().map(DecisionPolicy::from_rule).collect(),
        }
    }

    pub fn decision(&self, name: &str) -> Option<&DecisionPolicy> {
        self.decisions.iter().find(|d| d.decision == name)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("policy serializes");
        s.push('\n');
        s
    }
}

pub fn save_policy(r: &SolveResult, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(
        path.as_ref(),
        PolicyFile::from_result(r).to_json().as_bytes(),
    )
}

pub fn load_policy(path: impl AsRef<Path>) -> Result<PolicyFile> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        line: e.line().max(1),
        column: e.column().max(1),
        message: e.to_string(),
    })
}
