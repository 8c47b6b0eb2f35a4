//! MTE potentials: piecewise functions over hypercubes times discrete
//! configurations whose pieces are a constant plus a sum of exponentials.
//!
//! A potential keeps its variables in two name-sorted lists, the finite
//! (discrete chance and decision) ones and the continuous ones. Every piece
//! fixes one state for each finite variable and one interval for each
//! continuous variable, and every exponential term carries one exponent per
//! continuous variable. Discrete coordinates never appear in exponents: a
//! piece pins them, so their contribution folds into the coefficient.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{MteError, Result};
use crate::region::Interval;
use crate::variable::Variable;

/// Exponent vectors closer than this (max-abs) are merged.
pub const TERM_MERGE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PotentialKind {
    Probability,
    Utility,
}

impl PotentialKind {
    /// Kind of a product: utility as soon as one factor is a utility.
    pub fn combined(self, other: PotentialKind) -> PotentialKind {
        if self == PotentialKind::Utility || other == PotentialKind::Utility {
            PotentialKind::Utility
        } else {
            PotentialKind::Probability
        }
    }
}

/// `coef * exp(sum_k exps[k] * z_k)` over the potential's continuous variables.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpTerm {
    pub coef: f64,
    pub exps: Vec<f64>,
}

impl ExpTerm {
    #[inline]
    pub fn value(&self, xs: &[f64]) -> f64 {
        let arg: f64 = self.exps.iter().zip(xs).map(|(b, x)| b * x).sum();
        self.coef * libm::exp(arg)
    }

    fn is_zero_exponent(&self) -> bool {
        self.exps.iter().all(|&b| b == 0.0)
    }

    fn close_to(&self, other: &ExpTerm) -> bool {
        self.exps
            .iter()
            .zip(&other.exps)
            .all(|(a, b)| (a - b).abs() <= TERM_MERGE_TOL)
    }
}

/// One region/function pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Piece {
    /// State index per finite variable of the parent potential.
    pub states: Vec<usize>,
    /// Interval per continuous variable of the parent potential.
    pub bounds: Vec<Interval>,
    pub constant: f64,
    pub terms: Vec<ExpTerm>,
}

impl Piece {
    #[inline]
    pub fn value(&self, xs: &[f64]) -> f64 {
        self.constant + self.terms.iter().map(|t| t.value(xs)).sum::<f64>()
    }

    pub fn contains(&self, states: &[usize], xs: &[f64]) -> bool {
        self.states == states && self.bounds.iter().zip(xs).all(|(iv, &x)| iv.contains(x))
    }

    /// Folds zero-exponent terms into the constant, merges terms with
    /// (nearly) equal exponent vectors and drops zero coefficients.
    pub fn tidy(&mut self) {
        let terms = core::mem::take(&mut self.terms);
        let mut out: Vec<ExpTerm> = Vec::with_capacity(terms.len());
        for t in terms {
            if t.is_zero_exponent() {
                self.constant += t.coef;
                continue;
            }
            match out.iter_mut().find(|o| o.close_to(&t)) {
                Some(o) => o.coef += t.coef,
                None => out.push(t),
            }
        }
        out.retain(|t| t.coef != 0.0);
        self.terms = out;
    }

    pub(crate) fn same_box(&self, other: &Piece) -> bool {
        self.bounds
            .iter()
            .zip(&other.bounds)
            .all(|(a, b)| a.lo == b.lo && a.hi == b.hi)
    }

    pub(crate) fn interiors_overlap(&self, other: &Piece) -> bool {
        self.bounds
            .iter()
            .zip(&other.bounds)
            .all(|(a, b)| a.lo.max(b.lo) < a.hi.min(b.hi))
    }
}

/// A value assigned to a variable: a state label or a real number.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    State(String),
    Real(f64),
}

/// A (partial) assignment of values to variables, by name.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Assignment(pub BTreeMap<String, Value>);

impl Assignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn state(mut self, var: &str, label: &str) -> Self {
        self.0
            .insert(var.to_string(), Value::State(label.to_string()));
        self
    }

    pub fn real(mut self, var: &str, x: f64) -> Self {
        self.0.insert(var.to_string(), Value::Real(x));
        self
    }

    pub fn set(&mut self, var: &str, value: Value) {
        self.0.insert(var.to_string(), value);
    }

    pub fn get(&self, var: &str) -> Option<&Value> {
        self.0.get(var)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// A piece described by variable names rather than positions.
///
/// Finite variables left out of `states` range over all their states and
/// continuous variables left out of `bounds` span their whole support.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NamedPiece {
    pub states: BTreeMap<String, String>,
    pub bounds: BTreeMap<String, Interval>,
    pub constant: f64,
    pub terms: Vec<(f64, BTreeMap<String, f64>)>,
}

impl NamedPiece {
    pub fn constant(c: f64) -> Self {
        NamedPiece {
            constant: c,
            ..Default::default()
        }
    }

    pub fn when(mut self, var: &str, state: &str) -> Self {
        self.states.insert(var.to_string(), state.to_string());
        self
    }

    pub fn on(mut self, var: &str, iv: Interval) -> Self {
        self.bounds.insert(var.to_string(), iv);
        self
    }

    pub fn term(mut self, coef: f64, exps: &[(&str, f64)]) -> Self {
        self.terms.push((
            coef,
            exps.iter().map(|(v, b)| (v.to_string(), *b)).collect(),
        ));
        self
    }
}

/// A mixture-of-truncated-exponentials potential.
#[derive(Debug, Clone, PartialEq)]
pub struct MtePotential {
    pub(crate) finite: Vec<Variable>,
    pub(crate) continuous: Vec<Variable>,
    pub(crate) pieces: Vec<Piece>,
    pub(crate) kind: PotentialKind,
}

/// Splits variables into name-sorted finite and continuous lists.
pub(crate) fn split_layout(vars: Vec<Variable>) -> Result<(Vec<Variable>, Vec<Variable>)> {
    let mut finite = Vec::new();
    let mut continuous = Vec::new();
    for v in vars {
        if !v.is_well_formed() {
            return Err(MteError::Domain(format!(
                "variable `{}` is malformed",
                v.name
            )));
        }
        if finite
            .iter()
            .chain(&continuous)
            .any(|u: &Variable| u.name == v.name)
        {
            return Err(MteError::Domain(format!("duplicate variable `{}`", v.name)));
        }
        if v.is_continuous() {
            continuous.push(v);
        } else {
            finite.push(v);
        }
    }
    finite.sort_by(|a, b| a.name.cmp(&b.name));
    continuous.sort_by(|a, b| a.name.cmp(&b.name));
    Ok((finite, continuous))
}

/// Odometer over all configurations of the given finite variables.
pub(crate) fn all_configs(vars: &[Variable]) -> Vec<Vec<usize>> {
    let mut out = vec![vec![0usize; vars.len()]];
    for (i, v) in vars.iter().enumerate() {
        let mut next = Vec::with_capacity(out.len() * v.state_count());
        for cfg in &out {
            for s in 0..v.state_count() {
                let mut c = cfg.clone();
                c[i] = s;
                next.push(c);
            }
        }
        out = next;
    }
    out
}

impl MtePotential {
    /// A potential with the given domain and no pieces (zero everywhere).
    pub fn empty(vars: Vec<Variable>, kind: PotentialKind) -> Result<Self> {
        let (finite, continuous) = split_layout(vars)?;
        Ok(MtePotential {
            finite,
            continuous,
            pieces: Vec::new(),
            kind,
        })
    }

    /// The constant `value` over every configuration and the full support.
    pub fn constant(vars: Vec<Variable>, value: f64, kind: PotentialKind) -> Result<Self> {
        let mut p = Self::empty(vars, kind)?;
        let bounds: Vec<Interval> = p
            .continuous
            .iter()
            .map(|v| {
                let (lo, hi) = v.support().expect("continuous");
                Interval::closed(lo, hi)
            })
            .collect();
        p.pieces = all_configs(&p.finite)
            .into_iter()
            .map(|states| Piece {
                states,
                bounds: bounds.clone(),
                constant: value,
                terms: Vec::new(),
            })
            .collect();
        Ok(p)
    }

    /// The constant `value` with an empty domain.
    pub fn scalar(value: f64, kind: PotentialKind) -> Self {
        MtePotential {
            finite: Vec::new(),
            continuous: Vec::new(),
            pieces: vec![Piece {
                states: Vec::new(),
                bounds: Vec::new(),
                constant: value,
                terms: Vec::new(),
            }],
            kind,
        }
    }

    /// 1 at `var = state`, 0 at the other states.
    pub fn indicator(var: &Variable, state: &str, kind: PotentialKind) -> Result<Self> {
        let idx = var
            .state_index(state)
            .ok_or_else(|| MteError::Domain(format!("`{}` has no state `{state}`", var.name)))?;
        let mut p = Self::empty(vec![var.clone()], kind)?;
        p.pieces.push(Piece {
            states: vec![idx],
            bounds: Vec::new(),
            constant: 1.0,
            terms: Vec::new(),
        });
        Ok(p)
    }

    /// Builds a potential from positional pieces, checking their shape.
    pub fn from_pieces(
        vars: Vec<Variable>,
        pieces: Vec<Piece>,
        kind: PotentialKind,
    ) -> Result<Self> {
        let mut p = Self::empty(vars, kind)?;
        for piece in pieces {
            p.push_piece(piece)?;
        }
        Ok(p)
    }

    pub fn push_piece(&mut self, mut piece: Piece) -> Result<()> {
        if piece.states.len() != self.finite.len()
            || piece.bounds.len() != self.continuous.len()
            || piece
                .terms
                .iter()
                .any(|t| t.exps.len() != self.continuous.len())
        {
            return Err(MteError::Domain(
                "piece does not match the potential layout".into(),
            ));
        }
        for (s, v) in piece.states.iter().zip(&self.finite) {
            if *s >= v.state_count() {
                return Err(MteError::Domain(format!(
                    "state index {s} out of range for `{}`",
                    v.name
                )));
            }
        }
        for iv in &piece.bounds {
            if !(iv.lo < iv.hi) || !iv.lo.is_finite() || !iv.hi.is_finite() {
                return Err(MteError::BadInterval {
                    lo: iv.lo,
                    hi: iv.hi,
                });
            }
        }
        if !piece.constant.is_finite()
            || piece
                .terms
                .iter()
                .any(|t| !t.coef.is_finite() || t.exps.iter().any(|b| !b.is_finite()))
        {
            return Err(MteError::Domain(
                "non-finite coefficient or exponent".into(),
            ));
        }
        piece.tidy();
        self.pieces.push(piece);
        Ok(())
    }

    /// Adds a piece given by names; unnamed finite variables are expanded
    /// over all their states and unnamed continuous variables take their
    /// full support.
    pub fn push_named(&mut self, np: &NamedPiece) -> Result<()> {
        for name in np.states.keys().chain(np.bounds.keys()) {
            if self.var(name).is_none() {
                return Err(MteError::Domain(format!(
                    "unknown variable `{name}` in piece"
                )));
            }
        }
        let mut choices: Vec<Vec<usize>> = Vec::with_capacity(self.finite.len());
        for v in &self.finite {
            match np.states.get(&v.name) {
                Some(label) => {
                    let idx = v.state_index(label).ok_or_else(|| {
                        MteError::Domain(format!("`{}` has no state `{label}`", v.name))
                    })?;
                    choices.push(vec![idx]);
                }
                None => choices.push((0..v.state_count()).collect()),
            }
        }
        let mut bounds = Vec::with_capacity(self.continuous.len());
        for v in &self.continuous {
            match np.bounds.get(&v.name) {
                Some(iv) => bounds.push(*iv),
                None => {
                    let (lo, hi) = v.support().expect("continuous");
                    bounds.push(Interval::closed(lo, hi));
                }
            }
        }
        let mut terms = Vec::with_capacity(np.terms.len());
        for (coef, exps) in &np.terms {
            let mut dense = vec![0.0; self.continuous.len()];
            for (name, b) in exps {
                let k = self
                    .continuous
                    .iter()
                    .position(|v| &v.name == name)
                    .ok_or_else(|| {
                        MteError::Domain(format!(
                            "exponent on `{name}`, which is not a continuous domain variable"
                        ))
                    })?;
                dense[k] = *b;
            }
            terms.push(ExpTerm {
                coef: *coef,
                exps: dense,
            });
        }
        let mut configs = vec![Vec::new()];
        for opts in &choices {
            configs = configs
                .into_iter()
                .flat_map(|c: Vec<usize>| {
                    opts.iter().map(move |&s| {
                        let mut c = c.clone();
                        c.push(s);
                        c
                    })
                })
                .collect();
        }
        for states in configs {
            self.push_piece(Piece {
                states,
                bounds: bounds.clone(),
                constant: np.constant,
                terms: terms.clone(),
            })?;
        }
        Ok(())
    }

    pub fn kind(&self) -> PotentialKind {
        self.kind
    }

    pub fn with_kind(mut self, kind: PotentialKind) -> Self {
        self.kind = kind;
        self
    }

    pub fn finite_vars(&self) -> &[Variable] {
        &self.finite
    }

    pub fn continuous_vars(&self) -> &[Variable] {
        &self.continuous
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn piece_count(&self) -> usize {
        self.pieces.len()
    }

    pub fn variables(&self) -> impl Iterator<Item = &Variable> {
        self.finite.iter().chain(&self.continuous)
    }

    /// Domain variable names, sorted.
    pub fn domain_names(&self) -> Vec<String> {
        let mut names: Vec<String> = self.variables().map(|v| v.name.clone()).collect();
        names.sort();
        names
    }

    pub fn var(&self, name: &str) -> Option<&Variable> {
        self.variables().find(|v| v.name == name)
    }

    pub fn contains_var(&self, name: &str) -> bool {
        self.var(name).is_some()
    }

    pub(crate) fn finite_pos(&self, name: &str) -> Option<usize> {
        self.finite.iter().position(|v| v.name == name)
    }

    pub(crate) fn continuous_pos(&self, name: &str) -> Option<usize> {
        self.continuous.iter().position(|v| v.name == name)
    }

    /// Value at positional coordinates; 0 outside every piece.
    pub fn eval_at(&self, states: &[usize], xs: &[f64]) -> f64 {
        self.pieces
            .iter()
            .find(|p| p.contains(states, xs))
            .map_or(0.0, |p| p.value(xs))
    }

    /// Converts a named point to positional coordinates.
    pub fn locate(&self, point: &Assignment) -> Result<(Vec<usize>, Vec<f64>)> {
        let mut states = Vec::with_capacity(self.finite.len());
        for v in &self.finite {
            match point.get(&v.name) {
                Some(Value::State(label)) => {
                    states.push(v.state_index(label).ok_or_else(|| {
                        MteError::Domain(format!("`{}` has no state `{label}`", v.name))
                    })?)
                }
                Some(Value::Real(_)) => {
                    return Err(MteError::Domain(format!(
                        "`{}` needs a state label",
                        v.name
                    )))
                }
                None => {
                    return Err(MteError::Domain(format!(
                        "point does not assign `{}`",
                        v.name
                    )))
                }
            }
        }
        let mut xs = Vec::with_capacity(self.continuous.len());
        for v in &self.continuous {
            match point.get(&v.name) {
                Some(Value::Real(x)) => xs.push(*x),
                Some(Value::State(_)) => {
                    return Err(MteError::Domain(format!("`{}` needs a real value", v.name)))
                }
                None => {
                    return Err(MteError::Domain(format!(
                        "point does not assign `{}`",
                        v.name
                    )))
                }
            }
        }
        Ok((states, xs))
    }

    /// Evaluates at a point assigning every domain variable (extra
    /// assignments are ignored).
    pub fn evaluate(&self, point: &Assignment) -> Result<f64> {
        let (states, xs) = self.locate(point)?;
        Ok(self.eval_at(&states, &xs))
    }

    /// Value of an empty-domain potential.
    pub fn scalar_value(&self) -> Option<f64> {
        (self.finite.is_empty() && self.continuous.is_empty())
            .then(|| self.pieces.iter().map(|p| p.constant).sum())
    }

    /// Pieces in named form, for serialization and display.
    pub fn named_pieces(&self) -> Vec<NamedPiece> {
        self.pieces
            .iter()
            .map(|p| NamedPiece {
                states: self
                    .finite
                    .iter()
                    .zip(&p.states)
                    .map(|(v, &s)| (v.name.clone(), v.states()[s].clone()))
                    .collect(),
                bounds: self
                    .continuous
                    .iter()
                    .zip(&p.bounds)
                    .map(|(v, iv)| (v.name.clone(), *iv))
                    .collect(),
                constant: p.constant,
                terms: p
                    .terms
                    .iter()
                    .map(|t| {
                        let exps = self
                            .continuous
                            .iter()
                            .zip(&t.exps)
                            .filter(|(_, b)| **b != 0.0)
                            .map(|(v, b)| (v.name.clone(), *b))
                            .collect();
                        (t.coef, exps)
                    })
                    .collect(),
            })
            .collect()
    }

    /// Checks the structural invariants: layout, finite numbers, non-empty
    /// intervals, no constant-only terms, and pairwise-disjoint boxes within
    /// each configuration.
    pub fn check_well_formed(&self) -> Result<()> {
        for p in &self.pieces {
            if p.states.len() != self.finite.len() || p.bounds.len() != self.continuous.len() {
                return Err(MteError::Domain("piece layout mismatch".into()));
            }
            if p.bounds.iter().any(|iv| !(iv.lo < iv.hi)) {
                return Err(MteError::Domain("empty interval".into()));
            }
            if !p.constant.is_finite() {
                return Err(MteError::Domain("non-finite constant".into()));
            }
            for t in &p.terms {
                if t.exps.len() != self.continuous.len() || t.is_zero_exponent() {
                    return Err(MteError::Domain("malformed term".into()));
                }
                if !t.coef.is_finite() || t.exps.iter().any(|b| !b.is_finite()) {
                    return Err(MteError::Domain("non-finite term".into()));
                }
            }
        }
        for (i, a) in self.pieces.iter().enumerate() {
            for b in &self.pieces[i + 1..] {
                if a.states == b.states && a.interiors_overlap(b) {
                    return Err(MteError::Domain("overlapping pieces".into()));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> Variable {
        Variable::continuous("x", 0.0, 1.0)
    }

    #[test]
    fn constant_piece_evaluates() {
        let p = MtePotential::constant(vec![unit()], 1.0, PotentialKind::Probability).unwrap();
        assert_eq!(p.evaluate(&Assignment::new().real("x", 0.5)).unwrap(), 1.0);
        assert_eq!(p.evaluate(&Assignment::new().real("x", 1.0)).unwrap(), 1.0);
        assert_eq!(p.evaluate(&Assignment::new().real("x", 1.5)).unwrap(), 0.0);
    }

    #[test]
    fn missing_variable_and_unknown_state() {
        let o = Variable::discrete("O", &["a", "b"]);
        let p = MtePotential::constant(vec![o], 0.5, PotentialKind::Probability).unwrap();
        assert_eq!(
            p.evaluate(&Assignment::new()).unwrap_err().code(),
            "E_DOMAIN"
        );
        assert_eq!(
            p.evaluate(&Assignment::new().state("O", "zzz"))
                .unwrap_err()
                .code(),
            "E_DOMAIN"
        );
    }

    #[test]
    fn half_open_boundaries() {
        let mut p = MtePotential::empty(vec![unit()], PotentialKind::Utility).unwrap();
        p.push_named(&NamedPiece::constant(1.0).on("x", Interval::half_open(0.0, 0.5)))
            .unwrap();
        p.push_named(&NamedPiece::constant(2.0).on("x", Interval::closed(0.5, 1.0)))
            .unwrap();
        let at = |x| p.evaluate(&Assignment::new().real("x", x)).unwrap();
        assert_eq!(at(0.0), 1.0);
        assert_eq!(at(0.5), 2.0);
        assert_eq!(at(1.0), 2.0);
    }

    #[test]
    fn tidy_merges_and_folds() {
        let mut piece = Piece {
            states: vec![],
            bounds: vec![Interval::closed(0.0, 1.0)],
            constant: 1.0,
            terms: vec![
                ExpTerm {
                    coef: 2.0,
                    exps: vec![1.0],
                },
                ExpTerm {
                    coef: 3.0,
                    exps: vec![1.0 + 1e-13],
                },
                ExpTerm {
                    coef: 4.0,
                    exps: vec![0.0],
                },
                ExpTerm {
                    coef: 1.0,
                    exps: vec![2.0],
                },
                ExpTerm {
                    coef: -1.0,
                    exps: vec![2.0],
                },
            ],
        };
        piece.tidy();
        assert_eq!(piece.constant, 5.0);
        assert_eq!(piece.terms.len(), 1);
        assert_eq!(piece.terms[0].coef, 5.0);
    }

    #[test]
    fn named_piece_expands_wildcards() {
        let o = Variable::discrete("O", &["a", "b", "c"]);
        let mut p = MtePotential::empty(vec![o, unit()], PotentialKind::Probability).unwrap();
        p.push_named(&NamedPiece::constant(1.0)).unwrap();
        assert_eq!(p.piece_count(), 3);
        p.check_well_formed().unwrap();
    }
}
