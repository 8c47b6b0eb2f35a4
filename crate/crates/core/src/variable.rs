use alloc::string::{String, ToString};
use alloc::vec::Vec;

/// Chance or decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum VarKind {
    Chance,
    Decision,
}

/// The state space of a variable: a finite ordered list of labels or a
/// closed real interval.
#[derive(Debug, Clone, PartialEq)]
pub enum StateSpace {
    Finite(Vec<String>),
    Interval { lo: f64, hi: f64 },
}

/// A named variable of an influence diagram.
///
/// Decision variables are expected to be finite; a decision over an interval
/// can be represented so that model validation can report it, but the solver
/// refuses to maximize over it.
#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub space: StateSpace,
}

impl Variable {
    pub fn discrete<S: AsRef<str>>(name: &str, states: &[S]) -> Self {
        Variable {
            name: name.to_string(),
            kind: VarKind::Chance,
            space: StateSpace::Finite(states.iter().map(|s| s.as_ref().to_string()).collect()),
        }
    }

    pub fn continuous(name: &str, lo: f64, hi: f64) -> Self {
        Variable {
            name: name.to_string(),
            kind: VarKind::Chance,
            space: StateSpace::Interval { lo, hi },
        }
    }

    pub fn decision<S: AsRef<str>>(name: &str, states: &[S]) -> Self {
        Variable {
            name: name.to_string(),
            kind: VarKind::Decision,
            space: StateSpace::Finite(states.iter().map(|s| s.as_ref().to_string()).collect()),
        }
    }

    pub fn is_continuous(&self) -> bool {
        matches!(self.space, StateSpace::Interval { .. })
    }

    pub fn is_finite(&self) -> bool {
        !self.is_continuous()
    }

    pub fn is_decision(&self) -> bool {
        self.kind == VarKind::Decision
    }

    pub fn is_continuous_chance(&self) -> bool {
        self.kind == VarKind::Chance && self.is_continuous()
    }

    pub fn is_discrete_chance(&self) -> bool {
        self.kind == VarKind::Chance && self.is_finite()
    }

    /// State labels; empty for interval variables.
    pub fn states(&self) -> &[String] {
        match &self.space {
            StateSpace::Finite(s) => s,
            StateSpace::Interval { .. } => &[],
        }
    }

    pub fn state_count(&self) -> usize {
        self.states().len()
    }

    pub fn state_index(&self, label: &str) -> Option<usize> {
        self.states().iter().position(|s| s == label)
    }

    /// Support `(lo, hi)` for interval variables.
    pub fn support(&self) -> Option<(f64, f64)> {
        match self.space {
            StateSpace::Interval { lo, hi } => Some((lo, hi)),
            StateSpace::Finite(_) => None,
        }
    }

    /// Checks the per-variable invariants: at least one state, or `lo < hi`.
    pub fn is_well_formed(&self) -> bool {
        match &self.space {
            StateSpace::Finite(states) => {
                !states.is_empty()
                    && states
                        .iter()
                        .enumerate()
                        .all(|(i, s)| !states[..i].contains(s))
            }
            StateSpace::Interval { lo, hi } => lo.is_finite() && hi.is_finite() && lo < hi,
        }
    }
}
