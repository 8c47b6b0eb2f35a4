//! JSON model files.
//!
//! A model lists its variables, the informational arcs into decisions, one
//! conditional potential per chance variable and the utility potentials.
//! Potentials are given inline as pieces, by template, or as a list of
//! cases that each fill in the configurations named by `when`.

use std::collections::BTreeMap;
use std::path::Path;

use mteid_core::fitting::{
    beta_pdf, fit_pdf, lognormal_oil_price, normal_pdf, normal_template_on, FitSpec,
};
use mteid_core::{
    wildcatter, InfluenceDiagram, Interval, MtePotential, NamedPiece, PotentialKind, StateSpace,
    VarKind, Variable,
};
use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;

use crate::error::{Error, Result};
use crate::output::write_atomic;

/// Name of the built-in profit utility of the oil wildcatter model.
pub const WILDCATTER_U1: &str = "oil_wildcatter_u1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KindSpec {
    Discrete,
    Continuous,
    Decision,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariableSpec {
    pub name: String,
    pub kind: KindSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub states: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interval: Option<[f64; 2]>,
}

/// A state label or an interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RegionSpec {
    State(String),
    Interval {
        lo: f64,
        hi: f64,
        #[serde(default)]
        closed: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub coef: f64,
    #[serde(default)]
    pub exps: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PieceSpec {
    #[serde(default)]
    pub region: BTreeMap<String, RegionSpec>,
    #[serde(default)]
    pub constant: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub terms: Vec<TermSpec>,
}

/// A named template and its parameters. Which parameters apply depends on
/// the template: `normal` takes `mu` and `sigma`, `uniform` an optional
/// `lo` and `hi`, `fit` a `target` with `splits`, `terms`, `grid`, `seed`
/// and `normalized`, and `lognormal_oil_price` nothing.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TemplateSpec {
    pub name: String,
    pub variable: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lo: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hi: Option<f64>,
    /// Fit target, `beta:A,B` or `normal:MU,SIGMA`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub splits: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub terms: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub normalized: bool,
}

/// A fragment of a potential restricted to the states in `when`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseSpec {
    #[serde(default)]
    pub when: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pieces: Option<Vec<PieceSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub template: Option<TemplateSpec>,
    /// Normalize the fragment over its template variable.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub normalize: bool,
}

/// One entry of `potentials` (with `child`) or `utilities` (without).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntrySpec {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub child: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pieces: Option<Vec<PieceSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub template: Option<TemplateSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cases: Option<Vec<CaseSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub builtin: Option<String>,
    /// Normalize the whole potential over `child` after assembly.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub normalize: bool,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel<'a> {
    #[serde(borrow)]
    variables: Vec<&'a RawValue>,
    #[serde(default)]
    info_arcs: Vec<[String; 2]>,
    #[serde(borrow)]
    potentials: Vec<&'a RawValue>,
    #[serde(borrow, default)]
    utilities: Vec<&'a RawValue>,
}

#[derive(Serialize)]
struct CanonicalModel<'a> {
    variables: Vec<VariableSpec>,
    info_arcs: Vec<[&'a str; 2]>,
    potentials: Vec<EntrySpec>,
    utilities: Vec<EntrySpec>,
}

/// 1-based line and column of byte `offset` in `text`.
fn position(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

fn parse_error(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        column: column.max(1),
        message: message.into(),
    }
}

fn from_serde(e: &serde_json::Error) -> Error {
    let message = e.to_string();
    let message = message
        .split(" at line ")
        .next()
        .unwrap_or(&message)
        .to_string();
    parse_error(e.line().max(1), e.column(), message)
}

/// Where an entry starts, for positioning errors inside it.
struct Located<'a> {
    text: &'a str,
    raw: &'a RawValue,
}

impl Located<'_> {
    fn start(&self) -> (usize, usize) {
        let offset = self.raw.get().as_ptr() as usize - self.text.as_ptr() as usize;
        position(self.text, offset)
    }

    fn error(&self, message: impl Into<String>) -> Error {
        let (line, column) = self.start();
        parse_error(line, column, message)
    }

    /// Parses the entry, shifting serde's position by the entry's start.
    fn parse<T: for<'de> Deserialize<'de>>(&self) -> Result<T> {
        serde_json::from_str(self.raw.get()).map_err(|e| {
            let (line, column) = self.start();
            let inner = from_serde(&e);
            match inner {
                Error::Parse {
                    line: 1,
                    column: c,
                    message,
                } => parse_error(line, column + c - 1, message),
                Error::Parse {
                    line: l,
                    column: c,
                    message,
                } => parse_error(line + l - 1, c, message),
                other => other,
            }
        })
    }
}

fn to_variable(spec: &VariableSpec) -> std::result::Result<Variable, String> {
    let states = || {
        spec.states
            .clone()
            .ok_or_else(|| format!("variable `{}` needs `states`", spec.name))
    };
    match spec.kind {
        KindSpec::Discrete => Ok(Variable::discrete(&spec.name, &states()?)),
        KindSpec::Decision => Ok(Variable::decision(&spec.name, &states()?)),
        KindSpec::Continuous => {
            let [lo, hi] = spec
                .interval
                .ok_or_else(|| format!("variable `{}` needs `interval`", spec.name))?;
            Ok(Variable::continuous(&spec.name, lo, hi))
        }
    }
}

fn variable_spec(v: &Variable) -> VariableSpec {
    let kind = match (v.kind, &v.space) {
        (VarKind::Decision, _) => KindSpec::Decision,
        (VarKind::Chance, StateSpace::Finite(_)) => KindSpec::Discrete,
        (VarKind::Chance, StateSpace::Interval { .. }) => KindSpec::Continuous,
    };
    match &v.space {
        StateSpace::Finite(states) => VariableSpec {
            name: v.name.clone(),
            kind,
            states: Some(states.clone()),
            interval: None,
        },
        StateSpace::Interval { lo, hi } => VariableSpec {
            name: v.name.clone(),
            kind,
            states: None,
            interval: Some([*lo, *hi]),
        },
    }
}

/// Parses a target such as `beta:3.2,3.2` into a density.
pub fn parse_target(target: &str) -> std::result::Result<Box<dyn Fn(f64) -> f64>, String> {
    let (family, args) = target
        .split_once(':')
        .ok_or_else(|| format!("target `{target}` is not `family:a,b`"))?;
    let args: Vec<f64> = args
        .split(',')
        .map(|a| {
            a.trim()
                .parse::<f64>()
                .map_err(|_| format!("bad number `{a}` in target `{target}`"))
        })
        .collect::<std::result::Result<_, _>>()?;
    let [a, b] = args[..] else {
        return Err(format!("target `{target}` takes two parameters"));
    };
    match family {
        "beta" if a > 0.0 && b > 0.0 => Ok(Box::new(move |x| beta_pdf(a, b, x))),
        "normal" if b > 0.0 => Ok(Box::new(move |x| normal_pdf(a, b, x))),
        "beta" | "normal" => Err(format!("parameters of `{target}` out of range")),
        _ => Err(format!("unknown target family `{family}`")),
    }
}

struct Builder<'a> {
    vars: BTreeMap<&'a str, &'a Variable>,
}

impl<'a> Builder<'a> {
    fn var(&self, name: &str) -> std::result::Result<&'a Variable, String> {
        self.vars
            .get(name)
            .copied()
            .ok_or_else(|| format!("unknown variable `{name}`"))
    }

    fn domain(&self, names: &[String]) -> std::result::Result<Vec<Variable>, String> {
        names.iter().map(|n| self.var(n).cloned()).collect()
    }

    fn piece(&self, spec: &PieceSpec) -> std::result::Result<NamedPiece, String> {
        let mut np = NamedPiece::constant(spec.constant);
        for (name, region) in &spec.region {
            np = match region {
                RegionSpec::State(s) => np.when(name, s),
                RegionSpec::Interval { lo, hi, closed } => np.on(
                    name,
                    Interval {
                        lo: *lo,
                        hi: *hi,
                        closed: *closed,
                    },
                ),
            };
        }
        for t in &spec.terms {
            np.terms.push((t.coef, t.exps.clone()));
        }
        Ok(np)
    }

    fn template(&self, spec: &TemplateSpec) -> Result<MtePotential, TemplateError> {
        let var = self.var(&spec.variable)?;
        let need = |x: Option<f64>, what: &str| {
            x.ok_or_else(|| format!("template `{}` needs `{what}`", spec.name))
        };
        let p = match spec.name.as_str() {
            "normal" => normal_template_on(var, need(spec.mu, "mu")?, need(spec.sigma, "sigma")?)?,
            "lognormal_oil_price" => lognormal_oil_price(&var.name),
            "uniform" => {
                let (lo0, hi0) = var
                    .support()
                    .ok_or_else(|| format!("`{}` is not continuous", var.name))?;
                let (lo, hi) = (spec.lo.unwrap_or(lo0), spec.hi.unwrap_or(hi0));
                if !(lo0 <= lo && lo < hi && hi <= hi0) {
                    return Err(format!(
                        "uniform range [{lo}, {hi}] is not inside the support of `{}`",
                        var.name
                    )
                    .into());
                }
                let mut p = MtePotential::empty(vec![var.clone()], PotentialKind::Probability)?;
                p.push_named(&NamedPiece::constant(1.0 / (hi - lo)).on(
                    &var.name,
                    Interval {
                        lo,
                        hi,
                        closed: hi == hi0,
                    },
                ))?;
                p
            }
            "fit" => {
                let target = parse_target(
                    spec.target
                        .as_deref()
                        .ok_or("template `fit` needs `target`")?,
                )?;
                let (lo, hi) = var
                    .support()
                    .ok_or_else(|| format!("`{}` is not continuous", var.name))?;
                let mut fs = FitSpec::new(&*target, lo, hi)
                    .splits(&spec.splits)
                    .normalized(spec.normalized);
                if let Some(m) = spec.terms {
                    fs = fs.terms(m);
                }
                if let Some(g) = spec.grid {
                    fs = fs.grid(g);
                }
                if let Some(s) = spec.seed {
                    fs = fs.seed(s);
                }
                fit_pdf(&var.name, &fs)?.potential
            }
            other => return Err(TemplateError::Unknown(other.to_string())),
        };
        if p.continuous_vars().first() != Some(var) {
            return Err(format!(
                "template `{}` does not fit the definition of `{}`",
                spec.name, var.name
            )
            .into());
        }
        Ok(p)
    }

    fn fill(
        &self,
        target: &mut MtePotential,
        fragment: &MtePotential,
        when: &BTreeMap<String, String>,
    ) -> Result<(), TemplateError> {
        for np in fragment.named_pieces() {
            let mut np = np;
            for (v, s) in when {
                np = np.when(v, s);
            }
            target.push_named(&np)?;
        }
        Ok(())
    }

    fn entry(&self, spec: &EntrySpec, kind: PotentialKind) -> Result<MtePotential, TemplateError> {
        let bodies = [
            spec.pieces.is_some(),
            spec.template.is_some(),
            spec.cases.is_some(),
            spec.builtin.is_some(),
        ];
        if bodies.iter().filter(|b| **b).count() != 1 {
            return Err(
                "an entry needs exactly one of `pieces`, `template`, `cases`, `builtin`"
                    .to_string()
                    .into(),
            );
        }
        let mut p = if let Some(name) = &spec.builtin {
            if name != WILDCATTER_U1 {
                return Err(TemplateError::Unknown(name.clone()));
            }
            let u = wildcatter::profit_utility();
            for v in u.variables() {
                if self.var(&v.name)? != v {
                    return Err(format!(
                        "built-in `{name}` needs `{}` as defined in the oil wildcatter model",
                        v.name
                    )
                    .into());
                }
            }
            u
        } else if let (Some(t), None) = (&spec.template, &spec.domain) {
            self.template(t)?
        } else {
            let domain = spec
                .domain
                .as_ref()
                .ok_or("an entry with `pieces` or `cases` needs `domain`")?;
            let mut p = MtePotential::empty(self.domain(domain)?, kind)?;
            if let Some(t) = &spec.template {
                self.fill(&mut p, &self.template(t)?, &BTreeMap::new())?;
            }
            for piece in spec.pieces.iter().flatten() {
                p.push_named(&self.piece(piece)?)?;
            }
            for case in spec.cases.iter().flatten() {
                match (&case.pieces, &case.template) {
                    (Some(pieces), None) => {
                        for piece in pieces {
                            let mut np = self.piece(piece)?;
                            np.states.extend(case.when.clone());
                            p.push_named(&np)?;
                        }
                    }
                    (None, Some(t)) => {
                        let f = self.template(t)?;
                        let f = if case.normalize {
                            f.normalize_density(&t.variable)?
                        } else {
                            f
                        };
                        self.fill(&mut p, &f, &case.when)?;
                    }
                    _ => {
                        return Err("a case needs exactly one of `pieces`, `template`"
                            .to_string()
                            .into())
                    }
                }
            }
            p
        };
        p = p.with_kind(kind);
        if spec.normalize {
            let child = spec.child.as_deref().ok_or("`normalize` needs `child`")?;
            p = p.normalize_density(child)?;
        }
        Ok(p)
    }
}

/// Failure while building one entry; positioned by the caller.
enum TemplateError {
    Unknown(String),
    Invalid(String),
}

impl From<String> for TemplateError {
    fn from(s: String) -> Self {
        TemplateError::Invalid(s)
    }
}

impl From<&str> for TemplateError {
    fn from(s: &str) -> Self {
        TemplateError::Invalid(s.to_string())
    }
}

impl From<mteid_core::MteError> for TemplateError {
    fn from(e: mteid_core::MteError) -> Self {
        TemplateError::Invalid(format!("{} ({})", e, e.code()))
    }
}

/// Parses model text.
pub fn parse_model(text: &str) -> Result<InfluenceDiagram> {
    let raw: RawModel = serde_json::from_str(text).map_err(|e| from_serde(&e))?;
    let mut variables = Vec::with_capacity(raw.variables.len());
    for raw in &raw.variables {
        let at = Located { text, raw };
        let spec: VariableSpec = at.parse()?;
        variables.push(to_variable(&spec).map_err(|m| at.error(m))?);
    }
    let builder = Builder {
        vars: variables.iter().map(|v| (v.name.as_str(), v)).collect(),
    };
    let mut d = InfluenceDiagram::new(variables.clone());
    for [from, to] in &raw.info_arcs {
        d = d.info_arc(from, to);
    }
    let entries = raw
        .potentials
        .iter()
        .map(|r| (r, PotentialKind::Probability))
        .chain(raw.utilities.iter().map(|r| (r, PotentialKind::Utility)));
    for (raw, kind) in entries {
        let at = Located { text, raw };
        let spec: EntrySpec = at.parse()?;
        let p = builder.entry(&spec, kind).map_err(|e| match e {
            TemplateError::Unknown(name) => Error::UnknownTemplate(name),
            TemplateError::Invalid(m) => at.error(format!("`{}`: {m}", spec.name)),
        })?;
        match (kind, &spec.child) {
            (PotentialKind::Probability, Some(child)) => d = d.probability(&spec.name, child, p),
            (PotentialKind::Probability, None) => {
                return Err(at.error(format!("potential `{}` needs `child`", spec.name)))
            }
            (PotentialKind::Utility, None) => d = d.utility(&spec.name, p),
            (PotentialKind::Utility, Some(_)) => {
                return Err(at.error(format!("utility `{}` has a `child`", spec.name)))
            }
        }
    }
    Ok(d)
}

pub fn load_model(path: impl AsRef<Path>) -> Result<InfluenceDiagram> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_model(&text)
}

/// Inline-piece form of a potential, every region spelled out.
pub fn piece_specs(p: &MtePotential) -> Vec<PieceSpec> {
    p.named_pieces()
        .into_iter()
        .map(|np| {
            let mut region: BTreeMap<String, RegionSpec> = np
                .states
                .into_iter()
                .map(|(v, s)| (v, RegionSpec::State(s)))
                .collect();
            for (v, iv) in np.bounds {
                region.insert(
                    v,
                    RegionSpec::Interval {
                        lo: iv.lo,
                        hi: iv.hi,
                        closed: iv.closed,
                    },
                );
            }
            let terms = np
                .terms
                .into_iter()
                .map(|(coef, exps)| TermSpec { coef, exps })
                .collect();
            PieceSpec {
                region,
                constant: np.constant,
                terms,
            }
        })
        .collect()
}

fn inline_entry(name: &str, child: Option<&str>, p: &MtePotential) -> EntrySpec {
    EntrySpec {
        name: name.to_string(),
        child: child.map(str::to_string),
        domain: Some(p.domain_names()),
        pieces: Some(piece_specs(p)),
        template: None,
        cases: None,
        builtin: None,
        normalize: false,
    }
}

/// Canonical text of a model: every potential inline, in pretty JSON.
/// Floats are written in shortest round-trip form, so reading the text back
/// gives the same bits.
pub fn model_to_string(d: &InfluenceDiagram) -> String {
    let model = CanonicalModel {
        variables: d.variables.iter().map(variable_spec).collect(),
        info_arcs: d
            .info_arcs
            .iter()
            .map(|(a, b)| [a.as_str(), b.as_str()])
            .collect(),
        potentials: d
            .probabilities
            .iter()
            .map(|e| inline_entry(&e.name, Some(&e.child), &e.potential))
            .collect(),
        utilities: d
            .utilities
            .iter()
            .map(|e| inline_entry(&e.name, None, &e.potential))
            .collect(),
    };
    let mut s = serde_json::to_string_pretty(&model).expect("model serializes");
    s.push('\n');
    s
}

pub fn save_model(d: &InfluenceDiagram, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path.as_ref(), model_to_string(d).as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn positions() {
        assert_eq!(position("", 0), (1, 1));
        assert_eq!(position("ab\ncd", 4), (2, 2));
    }

    #[test]
    fn empty_text() {
        match parse_model("").unwrap_err() {
            Error::Parse { line, column, .. } => assert_eq!((line, column), (1, 1)),
            e => panic!("{e:?}"),
        }
    }

    #[test]
    fn targets() {
        let f = parse_target("beta:2,2").unwrap();
        assert!((f(0.5) - 1.5).abs() < 1e-12);
        assert!(parse_target("gamma:1,1").is_err());
        assert!(parse_target("beta:1").is_err());
    }
}
