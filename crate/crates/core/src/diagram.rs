//! Influence diagrams: variables, information arcs, probability potentials
//! tagged with their child, and multiplicative utility factors.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::error::{MteError, Result};
use crate::potential::{all_configs, MtePotential, PotentialKind};
use crate::variable::Variable;

#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityEntry {
    pub name: String,
    pub child: String,
    pub potential: MtePotential,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UtilityEntry {
    pub name: String,
    pub potential: MtePotential,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct InfluenceDiagram {
    pub variables: Vec<Variable>,
    /// `(observed, decision)` pairs.
    pub info_arcs: Vec<(String, String)>,
    pub probabilities: Vec<ProbabilityEntry>,
    pub utilities: Vec<UtilityEntry>,
}

impl InfluenceDiagram {
    pub fn new(variables: Vec<Variable>) -> Self {
        InfluenceDiagram {
            variables,
            ..Default::default()
        }
    }

    pub fn info_arc(mut self, from: &str, decision: &str) -> Self {
        self.info_arcs
            .push((from.to_string(), decision.to_string()));
        self
    }

    pub fn probability(mut self, name: &str, child: &str, potential: MtePotential) -> Self {
        self.probabilities.push(ProbabilityEntry {
            name: name.to_string(),
            child: child.to_string(),
            potential,
        });
        self
    }

    pub fn utility(mut self, name: &str, potential: MtePotential) -> Self {
        self.utilities.push(UtilityEntry {
            name: name.to_string(),
            potential,
        });
        self
    }

    pub fn variable(&self, name: &str) -> Option<&Variable> {
        self.variables.iter().find(|v| v.name == name)
    }

    pub fn decisions(&self) -> impl Iterator<Item = &Variable> {
        self.variables.iter().filter(|v| v.is_decision())
    }

    /// A probability or utility potential by name.
    pub fn potential(&self, name: &str) -> Option<&MtePotential> {
        self.probabilities
            .iter()
            .find(|e| e.name == name)
            .map(|e| &e.potential)
            .or_else(|| {
                self.utilities
                    .iter()
                    .find(|e| e.name == name)
                    .map(|e| &e.potential)
            })
    }

    /// The probability potential whose child is `var`.
    pub fn density_of(&self, var: &str) -> Option<&MtePotential> {
        self.probabilities
            .iter()
            .find(|e| e.child == var)
            .map(|e| &e.potential)
    }
}

/// A problem found by [`validate_model`].
#[derive(Debug, Clone, PartialEq)]
pub enum Diagnostic {
    MalformedVariable(String),
    DuplicateVariable(String),
    /// A potential mentions a variable the diagram lacks, or defines it
    /// differently (other states, wider support).
    UnknownVariable {
        potential: String,
        variable: String,
    },
    MalformedPotential {
        potential: String,
        reason: String,
    },
    WrongKind {
        potential: String,
    },
    ChildNotInDomain {
        potential: String,
        child: String,
    },
    DecisionAsChild {
        potential: String,
        child: String,
    },
    MissingPotential(String),
    SeveralPotentials(String),
    NoUtility,
    NotADensity {
        child: String,
        mass: f64,
    },
    NegativeDensity {
        child: String,
        value: f64,
    },
    ContinuousDecision(String),
    BadInfoArc {
        from: String,
        to: String,
    },
}

impl Diagnostic {
    pub fn code(&self) -> &'static str {
        match self {
            Diagnostic::MalformedVariable(_) => "MALFORMED_VARIABLE",
            Diagnostic::DuplicateVariable(_) => "DUPLICATE_VARIABLE",
            Diagnostic::UnknownVariable { .. } => "UNKNOWN_VARIABLE",
            Diagnostic::MalformedPotential { .. } => "MALFORMED_POTENTIAL",
            Diagnostic::WrongKind { .. } => "WRONG_KIND",
            Diagnostic::ChildNotInDomain { .. } => "CHILD_NOT_IN_DOMAIN",
            Diagnostic::DecisionAsChild { .. } => "DECISION_AS_CHILD",
            Diagnostic::MissingPotential(_) => "MISSING_POTENTIAL",
            Diagnostic::SeveralPotentials(_) => "SEVERAL_POTENTIALS",
            Diagnostic::NoUtility => "NO_UTILITY",
            Diagnostic::NotADensity { .. } => "NOT_A_DENSITY",
            Diagnostic::NegativeDensity { .. } => "NEGATIVE_DENSITY",
            Diagnostic::ContinuousDecision(_) => "CONTINUOUS_DECISION",
            Diagnostic::BadInfoArc { .. } => "BAD_INFO_ARC",
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.code())?;
        match self {
            Diagnostic::MalformedVariable(v) | Diagnostic::DuplicateVariable(v) => {
                write!(f, "({v})")
            }
            Diagnostic::UnknownVariable {
                potential,
                variable,
            } => write!(f, "({variable}) in potential {potential}"),
            Diagnostic::MalformedPotential { potential, reason } => {
                write!(f, "({potential}): {reason}")
            }
            Diagnostic::WrongKind { potential } => write!(f, "({potential})"),
            Diagnostic::ChildNotInDomain { potential, child }
            | Diagnostic::DecisionAsChild { potential, child } => {
                write!(f, "({child}) in potential {potential}")
            }
            Diagnostic::MissingPotential(v) | Diagnostic::SeveralPotentials(v) => {
                write!(f, "({v})")
            }
            Diagnostic::NoUtility => Ok(()),
            Diagnostic::NotADensity { child, mass } => write!(f, "({child}): mass {mass}"),
            Diagnostic::NegativeDensity { child, value } => write!(f, "({child}): value {value}"),
            Diagnostic::ContinuousDecision(v) => write!(f, "({v})"),
            Diagnostic::BadInfoArc { from, to } => write!(f, "({from} -> {to})"),
        }
    }
}

/// Tolerances of [`validate_model`].
#[derive(Debug, Clone, Copy)]
pub struct ValidateOptions {
    /// Grid points per continuous parent at which the mass is checked.
    pub parent_grid: usize,
    pub mass_tol: f64,
    /// Fitted densities may dip this far below zero.
    pub negative_tol: f64,
}

impl Default for ValidateOptions {
    fn default() -> Self {
        ValidateOptions {
            parent_grid: 16,
            mass_tol: 1e-4,
            negative_tol: 1e-3,
        }
    }
}

pub fn validate_model(d: &InfluenceDiagram) -> Vec<Diagnostic> {
    validate_model_with(d, &ValidateOptions::default())
}

pub fn validate_model_with(d: &InfluenceDiagram, opts: &ValidateOptions) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    for (i, v) in d.variables.iter().enumerate() {
        if !v.is_well_formed() {
            out.push(Diagnostic::MalformedVariable(v.name.clone()));
        }
        if d.variables[..i].iter().any(|u| u.name == v.name) {
            out.push(Diagnostic::DuplicateVariable(v.name.clone()));
        }
        if v.is_decision() && v.is_continuous() {
            out.push(Diagnostic::ContinuousDecision(v.name.clone()));
        }
    }

    let entries = d
        .probabilities
        .iter()
        .map(|e| (&e.name, &e.potential, PotentialKind::Probability))
        .chain(
            d.utilities
                .iter()
                .map(|e| (&e.name, &e.potential, PotentialKind::Utility)),
        );
    for (name, pot, kind) in entries {
        if pot.kind() != kind {
            out.push(Diagnostic::WrongKind {
                potential: name.clone(),
            });
        }
        if let Err(e) = pot.check_well_formed() {
            out.push(Diagnostic::MalformedPotential {
                potential: name.clone(),
                reason: e.to_string(),
            });
        }
        for v in pot.variables() {
            if !declared_compatibly(d, v) {
                out.push(Diagnostic::UnknownVariable {
                    potential: name.clone(),
                    variable: v.name.clone(),
                });
            }
        }
    }

    for e in &d.probabilities {
        match e.potential.var(&e.child) {
            None => out.push(Diagnostic::ChildNotInDomain {
                potential: e.name.clone(),
                child: e.child.clone(),
            }),
            Some(v) if v.is_decision() => out.push(Diagnostic::DecisionAsChild {
                potential: e.name.clone(),
                child: e.child.clone(),
            }),
            Some(_) => {}
        }
    }
    for v in d.variables.iter().filter(|v| !v.is_decision()) {
        match d.probabilities.iter().filter(|e| e.child == v.name).count() {
            0 => out.push(Diagnostic::MissingPotential(v.name.clone())),
            1 => {}
            _ => out.push(Diagnostic::SeveralPotentials(v.name.clone())),
        }
    }
    if d.utilities.is_empty() {
        out.push(Diagnostic::NoUtility);
    }
    for (from, to) in &d.info_arcs {
        let ok = d.variable(from).is_some()
            && d.variable(to).is_some_and(|v| v.is_decision())
            && from != to;
        if !ok {
            out.push(Diagnostic::BadInfoArc {
                from: from.clone(),
                to: to.clone(),
            });
        }
    }

    // Densities are only checked once their structure is sound.
    if out.is_empty() {
        for e in &d.probabilities {
            check_density(e, opts, &mut out);
        }
    }
    out
}

fn declared_compatibly(d: &InfluenceDiagram, v: &Variable) -> bool {
    let Some(decl) = d.variable(&v.name) else {
        return false;
    };
    if decl.kind != v.kind {
        return false;
    }
    match (decl.support(), v.support()) {
        (Some((lo, hi)), Some((l, h))) => lo <= l && h <= hi,
        (None, None) => decl.space == v.space,
        _ => false,
    }
}

fn check_density(e: &ProbabilityEntry, opts: &ValidateOptions, out: &mut Vec<Diagnostic>) {
    let pot = &e.potential;
    let Ok(mass) = pot.marginalize_chance(&e.child) else {
        out.push(Diagnostic::NotADensity {
            child: e.child.clone(),
            mass: f64::NAN,
        });
        return;
    };
    let grids: Vec<Vec<f64>> = mass
        .continuous_vars()
        .iter()
        .map(|v| {
            let (lo, hi) = v.support().expect("continuous");
            let n = opts.parent_grid.max(1);
            (0..n)
                .map(|i| lo + (hi - lo) * (i as f64 + 0.5) / n as f64)
                .collect()
        })
        .collect();
    let mut worst: Option<f64> = None;
    for cfg in all_configs(mass.finite_vars()) {
        for xs in grid_points(&grids) {
            let m = mass.eval_at(&cfg, &xs);
            if (m - 1.0).abs() > opts.mass_tol
                && worst.is_none_or(|w| (m - 1.0).abs() > (w - 1.0).abs())
            {
                worst = Some(m);
            }
        }
    }
    if let Some(m) = worst {
        out.push(Diagnostic::NotADensity {
            child: e.child.clone(),
            mass: m,
        });
    }

    let mut lowest = 0.0f64;
    for p in pot.pieces() {
        let axes: Vec<Vec<f64>> = p
            .bounds
            .iter()
            .map(|iv| {
                (0..=8)
                    .map(|i| iv.lo + iv.width() * i as f64 / 8.0)
                    .collect()
            })
            .collect();
        for xs in grid_points(&axes) {
            lowest = lowest.min(p.value(&xs));
        }
    }
    if lowest < -opts.negative_tol {
        out.push(Diagnostic::NegativeDensity {
            child: e.child.clone(),
            value: lowest,
        });
    }
}

fn grid_points(axes: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out = alloc::vec![Vec::new()];
    for axis in axes {
        out = out
            .into_iter()
            .flat_map(|p: Vec<f64>| {
                axis.iter().map(move |&x| {
                    let mut q = p.clone();
                    q.push(x);
                    q
                })
            })
            .collect();
    }
    out
}

/// A deletion sequence over all variables of a diagram.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EliminationOrder {
    pub sequence: Vec<String>,
}

impl EliminationOrder {
    pub fn new<S: AsRef<str>>(names: &[S]) -> Self {
        EliminationOrder {
            sequence: names.iter().map(|s| s.as_ref().to_string()).collect(),
        }
    }

    /// Parses a comma-separated list, ignoring surrounding whitespace.
    pub fn parse(text: &str) -> Self {
        EliminationOrder {
            sequence: text
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(String::from)
                .collect(),
        }
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.sequence.iter().position(|s| s == name)
    }
}

/// Outcome of [`validate_order`]: the information arcs `(observed, decision)`
/// whose observed variable would be deleted before its decision.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrderCheck {
    pub violations: Vec<(String, String)>,
}

impl OrderCheck {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn validate_order(d: &InfluenceDiagram, ord: &EliminationOrder) -> Result<OrderCheck> {
    for (i, name) in ord.sequence.iter().enumerate() {
        if d.variable(name).is_none() {
            return Err(MteError::NotPermutation(format!(
                "`{name}` is not a variable of the diagram"
            )));
        }
        if ord.sequence[..i].contains(name) {
            return Err(MteError::NotPermutation(format!("`{name}` appears twice")));
        }
    }
    if let Some(v) = d.variables.iter().find(|v| !ord.sequence.contains(&v.name)) {
        return Err(MteError::NotPermutation(format!("`{}` is missing", v.name)));
    }
    let violations = d
        .info_arcs
        .iter()
        .filter(|(from, to)| match (ord.position(from), ord.position(to)) {
            (Some(a), Some(b)) => a < b,
            _ => true,
        })
        .cloned()
        .collect();
    Ok(OrderCheck { violations })
}
