//! Eliminating a decision variable by pointwise maximization, together with
//! the policy that records the maximizing alternative.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::crossing::{find_roots, DEFAULT_GRID, DEFAULT_TOL};
use crate::error::{MteError, Result};
use crate::potential::{all_configs, Assignment, MtePotential, Piece, PotentialKind, Value};
use crate::region::Interval;
use crate::variable::Variable;

/// One observation region and the alternative chosen there.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    /// State index per finite context variable.
    pub states: Vec<usize>,
    /// Interval per continuous context variable (at most one).
    pub bounds: Vec<Interval>,
    /// State index of the decision.
    pub choice: usize,
}

/// The optimal choice of one decision as a function of its context, the
/// variables left in the fused utility when the decision was eliminated.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyRule {
    pub decision: Variable,
    pub finite: Vec<Variable>,
    pub continuous: Vec<Variable>,
    pub rules: Vec<Rule>,
}

impl PolicyRule {
    pub fn decision_name(&self) -> &str {
        &self.decision.name
    }

    pub fn context_names(&self) -> Vec<String> {
        self.finite
            .iter()
            .chain(&self.continuous)
            .map(|v| v.name.clone())
            .collect()
    }

    /// The rule covering positional context coordinates.
    pub fn rule_at(&self, states: &[usize], xs: &[f64]) -> Option<&Rule> {
        self.rules
            .iter()
            .find(|r| r.states == states && r.bounds.iter().zip(xs).all(|(iv, &x)| iv.contains(x)))
    }

    /// The chosen state label for a context assignment; extra entries in
    /// `ctx` are ignored. `None` if a context variable is unassigned or no
    /// rule covers the point.
    pub fn choose(&self, ctx: &Assignment) -> Option<&str> {
        let mut states = Vec::with_capacity(self.finite.len());
        for v in &self.finite {
            match ctx.get(&v.name)? {
                Value::State(label) => states.push(v.state_index(label)?),
                Value::Real(_) => return None,
            }
        }
        let mut xs = Vec::with_capacity(self.continuous.len());
        for v in &self.continuous {
            match ctx.get(&v.name)? {
                Value::Real(x) => xs.push(*x),
                Value::State(_) => return None,
            }
        }
        self.rule_at(&states, &xs)
            .map(|r| self.decision.states()[r.choice].as_str())
    }
}

/// Joins rules of the same configuration whose intervals touch and whose
/// choice agrees.
fn merge_rules(rules: Vec<Rule>) -> Vec<Rule> {
    let mut out: Vec<Rule> = Vec::with_capacity(rules.len());
    for r in rules {
        if let Some(prev) = out.last_mut() {
            if prev.states == r.states
                && prev.choice == r.choice
                && prev.bounds.len() == 1
                && r.bounds.len() == 1
                && prev.bounds[0].hi == r.bounds[0].lo
            {
                prev.bounds[0].hi = r.bounds[0].hi;
                prev.bounds[0].closed = r.bounds[0].closed;
                continue;
            }
        }
        out.push(r);
    }
    out
}

impl MtePotential {
    /// Maximizes the utility over the states of decision `d`.
    ///
    /// With no continuous variable left the fragments are constants and
    /// the largest wins, ties going to the lowest state index. With one
    /// continuous variable, each cell of the common partition is split at
    /// every crossing of two alternatives and the winner is picked at each
    /// sub-interval midpoint.
    pub fn max_marginalize_decision(&self, d: &str) -> Result<(MtePotential, PolicyRule)> {
        if self.kind != PotentialKind::Utility {
            return Err(MteError::NotUtility);
        }
        let di = match (self.finite_pos(d), self.var(d)) {
            (Some(i), Some(v)) if v.is_decision() => i,
            _ => return Err(MteError::NotDecision(d.into())),
        };
        if self.continuous.len() > 1 {
            return Err(MteError::UnsupportedMaxDim(self.continuous.len()));
        }
        let decision = self.finite[di].clone();
        let n_alt = decision.state_count();
        let mut finite = self.finite.clone();
        finite.remove(di);
        let continuous = self.continuous.clone();

        let mut pieces = Vec::new();
        let mut rules = Vec::new();
        for cfg in all_configs(&finite) {
            let full = |alt: usize| {
                let mut s = cfg.clone();
                s.insert(di, alt);
                s
            };
            let fragments: Vec<Vec<&Piece>> = (0..n_alt)
                .map(|a| {
                    let s = full(a);
                    self.pieces.iter().filter(|p| p.states == s).collect()
                })
                .collect();

            if continuous.is_empty() {
                let values: Vec<f64> = fragments
                    .iter()
                    .map(|f| f.iter().map(|p| p.constant).sum::<f64>())
                    .collect();
                let best = argmax(&values);
                pieces.push(Piece {
                    states: cfg.clone(),
                    bounds: Vec::new(),
                    constant: values[best],
                    terms: Vec::new(),
                });
                rules.push(Rule {
                    states: cfg.clone(),
                    bounds: Vec::new(),
                    choice: best,
                });
                continue;
            }

            let (lo, hi) = continuous[0].support().expect("continuous");
            let mut cuts = vec![lo, hi];
            for f in &fragments {
                for p in f {
                    cuts.push(p.bounds[0].lo.clamp(lo, hi));
                    cuts.push(p.bounds[0].hi.clamp(lo, hi));
                }
            }
            cuts.sort_by(|a, b| a.partial_cmp(b).expect("finite bounds"));
            cuts.dedup();

            let mut cfg_rules = Vec::new();
            for w in cuts.windows(2) {
                let (a, b) = (w[0], w[1]);
                let mid = 0.5 * (a + b);
                let active: Vec<Option<&Piece>> = fragments
                    .iter()
                    .map(|f| {
                        f.iter()
                            .copied()
                            .find(|p| p.bounds[0].lo <= mid && mid < p.bounds[0].hi)
                    })
                    .collect();
                let value = |alt: usize, x: f64| active[alt].map_or(0.0, |p| p.value(&[x]));

                let mut splits = vec![a, b];
                for i in 0..n_alt {
                    for j in i + 1..n_alt {
                        splits.extend(find_roots(
                            |x| value(i, x) - value(j, x),
                            a,
                            b,
                            DEFAULT_GRID,
                            DEFAULT_TOL,
                        )?);
                    }
                }
                splits.sort_by(|x, y| x.partial_cmp(y).expect("finite roots"));
                splits.dedup();

                for s in splits.windows(2) {
                    if !(s[0] < s[1]) {
                        continue;
                    }
                    let m = 0.5 * (s[0] + s[1]);
                    let values: Vec<f64> = (0..n_alt).map(|alt| value(alt, m)).collect();
                    let best = argmax(&values);
                    let iv = Interval {
                        lo: s[0],
                        hi: s[1],
                        closed: s[1] == hi,
                    };
                    let (constant, terms) = match active[best] {
                        Some(p) => (p.constant, p.terms.clone()),
                        None => (0.0, Vec::new()),
                    };
                    pieces.push(Piece {
                        states: cfg.clone(),
                        bounds: vec![iv],
                        constant,
                        terms,
                    });
                    cfg_rules.push(Rule {
                        states: cfg.clone(),
                        bounds: vec![iv],
                        choice: best,
                    });
                }
            }
            rules.extend(merge_rules(cfg_rules));
        }

        let policy = PolicyRule {
            decision,
            finite: finite.clone(),
            continuous: continuous.clone(),
            rules,
        };
        Ok((
            MtePotential {
                finite,
                continuous,
                pieces,
                kind: PotentialKind::Utility,
            },
            policy,
        ))
    }
}

/// Index of the largest value; the lowest index wins ties.
fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Readable rule listing, used by trace output and error messages.
pub fn describe_rule(policy: &PolicyRule, rule: &Rule) -> String {
    let mut parts: Vec<String> = policy
        .finite
        .iter()
        .zip(&rule.states)
        .map(|(v, &s)| format!("{}={}", v.name, v.states()[s]))
        .collect();
    for (v, iv) in policy.continuous.iter().zip(&rule.bounds) {
        let close = if iv.closed { "]" } else { ")" };
        parts.push(format!("{} in [{}, {}{close}", v.name, iv.lo, iv.hi));
    }
    format!(
        "{} -> {}",
        parts.join(", "),
        policy.decision.states()[rule.choice]
    )
}
