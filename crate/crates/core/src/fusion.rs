//! The fusion algorithm: delete variables one at a time, each time
//! combining every potential that mentions the variable and eliminating it.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::diagram::{validate_order, EliminationOrder, InfluenceDiagram};
use crate::error::{MteError, Result};
use crate::maxmarg::PolicyRule;
use crate::potential::{MtePotential, PotentialKind};

/// One deletion.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceEntry {
    pub variable: String,
    /// Domains of the fused potentials, in pool order.
    pub inputs: Vec<Vec<String>>,
    pub result: MtePotential,
}

impl TraceEntry {
    pub fn result_domain(&self) -> Vec<String> {
        self.result.domain_names()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub meu: f64,
    pub policies: Vec<PolicyRule>,
    pub trace: Vec<TraceEntry>,
}

impl SolveResult {
    pub fn policy(&self, decision: &str) -> Option<&PolicyRule> {
        self.policies.iter().find(|p| p.decision.name == decision)
    }

    /// The potential produced by deleting `var`.
    pub fn after(&self, var: &str) -> Option<&MtePotential> {
        self.trace
            .iter()
            .find(|t| t.variable == var)
            .map(|t| &t.result)
    }
}

/// Deletes `var` from the pool. Potentials mentioning it are combined in
/// pool order and the result is appended. Returns the trace entry and, for
/// a decision, its policy.
pub fn fuse_step(
    pool: &mut Vec<MtePotential>,
    var: &str,
) -> Result<(TraceEntry, Option<PolicyRule>)> {
    let (gathered, rest): (Vec<MtePotential>, Vec<MtePotential>) = core::mem::take(pool)
        .into_iter()
        .partition(|p| p.contains_var(var));
    *pool = rest;
    let Some(first) = gathered.first() else {
        return Err(MteError::Domain(format!(
            "no potential in the pool mentions `{var}`"
        )));
    };
    let variable = first.var(var).expect("gathered").clone();
    if variable.is_decision()
        && gathered
            .iter()
            .any(|p| p.kind() == PotentialKind::Probability)
    {
        return Err(MteError::DecisionInProbability(var.into()));
    }
    let inputs = gathered.iter().map(MtePotential::domain_names).collect();
    let mut fused = first.clone();
    for p in &gathered[1..] {
        fused = fused.combine(p)?;
    }
    let (result, policy) = if variable.is_decision() {
        let (r, pol) = fused.max_marginalize_decision(var)?;
        (r, Some(pol))
    } else {
        (fused.marginalize_chance(var)?, None)
    };
    pool.push(result.clone());
    Ok((
        TraceEntry {
            variable: var.into(),
            inputs,
            result,
        },
        policy,
    ))
}

/// Runs fusion over `d` in the order `ord`.
pub fn solve(d: &InfluenceDiagram, ord: &EliminationOrder) -> Result<SolveResult> {
    let check = validate_order(d, ord)?;
    if let Some((from, to)) = check.violations.first() {
        return Err(MteError::InvalidOrder(format!(
            "`{from}` is observed before `{to}` but deleted earlier"
        )));
    }
    let mut pool: Vec<MtePotential> = d
        .utilities
        .iter()
        .map(|e| e.potential.clone())
        .chain(d.probabilities.iter().map(|e| e.potential.clone()))
        .collect();
    let mut policies = Vec::new();
    let mut trace = Vec::with_capacity(ord.sequence.len());
    for var in &ord.sequence {
        if !pool.iter().any(|p| p.contains_var(var)) {
            continue;
        }
        let (entry, policy) = fuse_step(&mut pool, var)?;
        trace.push(entry);
        policies.extend(policy);
    }
    let mut meu = 1.0;
    for p in &pool {
        meu *= p.scalar_value().expect("every variable deleted");
    }
    Ok(SolveResult {
        meu,
        policies,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::NamedPiece;
    use crate::variable::Variable;
    use alloc::vec;

    #[test]
    fn single_decision_two_utilities() {
        let d = Variable::decision("D", &["a", "b"]);
        let mut u = MtePotential::empty(vec![d.clone()], PotentialKind::Utility).unwrap();
        u.push_named(&NamedPiece::constant(3.0).when("D", "a"))
            .unwrap();
        u.push_named(&NamedPiece::constant(5.0).when("D", "b"))
            .unwrap();
        let diagram = InfluenceDiagram::new(vec![d]).utility("u", u);
        let r = solve(&diagram, &EliminationOrder::parse("D")).unwrap();
        assert_eq!(r.meu, 5.0);
        assert_eq!(r.policies.len(), 1);
        assert_eq!(r.policies[0].rules[0].choice, 1);
    }

    #[test]
    fn lone_constant_potential() {
        let x = Variable::continuous("x", 0.0, 2.0);
        let y = Variable::discrete("y", &["s"]);
        let mut pool = vec![
            MtePotential::constant(vec![x], 0.5, PotentialKind::Probability).unwrap(),
            MtePotential::constant(vec![y], 1.0, PotentialKind::Probability).unwrap(),
        ];
        let (entry, policy) = fuse_step(&mut pool, "x").unwrap();
        assert_eq!(pool.len(), 2);
        assert!(policy.is_none());
        assert_eq!(entry.result.scalar_value(), Some(1.0));
    }

    #[test]
    fn decision_in_probability() {
        let d = Variable::decision("D", &["a", "b"]);
        let mut pool =
            vec![MtePotential::constant(vec![d], 0.5, PotentialKind::Probability).unwrap()];
        assert_eq!(
            fuse_step(&mut pool, "D").unwrap_err().code(),
            "E_DECISION_IN_PROBABILITY"
        );
    }
}
